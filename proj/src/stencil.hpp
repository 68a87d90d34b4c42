#pragma once

#include "qsee/model_spec.hpp"

namespace qsee::detail {

/// Flat index of the node `offset` steps from `k` along `axis`; −1 when the
/// neighbour is a Dirichlet boundary node.
inline int neighbor(const GridShape& shape, int k, int axis, int offset) {
  const int n = shape.nodes_per_axis();
  int ix = k % n;
  int iy = shape.dim == 1 ? 0 : k / n;
  int& i = axis == 0 ? ix : iy;
  i += offset;
  if (shape.boundary == Boundary::periodic) {
    i = ((i % n) + n) % n;
  } else if (i < 0 || i >= n) {
    return -1;
  }
  return shape.dim == 1 ? ix : iy * n + ix;
}

/// Centered-difference gradient at node k (boundary values 0 on Dirichlet grids).
inline Point gradient_at(const GridField& f, int k) {
  const GridShape& s = f.shape();
  Point g{0.0, 0.0};
  for (int axis = 0; axis < s.dim; ++axis) {
    const int p = neighbor(s, k, axis, 1);
    const int m = neighbor(s, k, axis, -1);
    const double up = p < 0 ? 0.0 : f[p];
    const double um = m < 0 ? 0.0 : f[m];
    g[axis] = (up - um) / (2.0 * s.h());
  }
  return g;
}

}  // namespace qsee::detail
