#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "magd/errors.hpp"

namespace magd {

/// Unordered node pair stored with i < j.
struct EdgeId {
  int i = 0;
  int j = 0;
  auto operator<=>(const EdgeId&) const = default;
};

/// Normalizes the pair order; rejects self loops and negative indices.
EdgeId make_edge(int a, int b);

/// Throws InvalidArgument unless 0 <= i < j < nodes.
void check_edge(const EdgeId& e, int nodes);

/// Graph Laplacian D - A of an unweighted undirected graph.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> laplacian(
    int nodes, std::span<const EdgeId> edges) {
  if (nodes < 0) throw InvalidArgument("laplacian: negative node count");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(nodes, nodes);
  for (const EdgeId& e : edges) {
    check_edge(e, nodes);
    w(e.i, e.i) += Scalar(1);
    w(e.j, e.j) += Scalar(1);
    w(e.i, e.j) -= Scalar(1);
    w(e.j, e.i) -= Scalar(1);
  }
  return w;
}

/// Adds L_e * x for each edge into out (out is not cleared).
template <typename Derived, typename OutDerived>
void accumulate_laplacian_product(std::span<const EdgeId> edges,
                                  const Eigen::MatrixBase<Derived>& x,
                                  Eigen::MatrixBase<OutDerived>& out) {
  for (const EdgeId& e : edges) {
    const auto diff = x(e.i) - x(e.j);
    out(e.i) += diff;
    out(e.j) -= diff;
  }
}

/// All pairs not in `edges`.
std::vector<EdgeId> complement_edges(int nodes, std::span<const EdgeId> edges);

bool is_connected(int nodes, std::span<const EdgeId> edges);

}  // namespace magd
