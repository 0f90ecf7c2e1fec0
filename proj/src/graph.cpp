#include "magd/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace magd {

EdgeId make_edge(int a, int b) {
  if (a < 0 || b < 0) throw InvalidArgument("edge: negative node index");
  if (a == b) throw InvalidArgument("edge: self loop at node " + std::to_string(a));
  return a < b ? EdgeId{a, b} : EdgeId{b, a};
}

void check_edge(const EdgeId& e, int nodes) {
  if (e.i < 0 || e.i >= e.j || e.j >= nodes) {
    throw InvalidArgument("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                          ") invalid for " + std::to_string(nodes) + " nodes");
  }
}

std::vector<EdgeId> complement_edges(int nodes, std::span<const EdgeId> edges) {
  std::vector<EdgeId> sorted(edges.begin(), edges.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<EdgeId> out;
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (!std::binary_search(sorted.begin(), sorted.end(), EdgeId{i, j})) {
        out.push_back({i, j});
      }
    }
  }
  return out;
}

bool is_connected(int nodes, std::span<const EdgeId> edges) {
  if (nodes <= 1) return true;
  std::vector<int> parent(nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  int components = nodes;
  for (const EdgeId& e : edges) {
    check_edge(e, nodes);
    const int a = find(e.i);
    const int b = find(e.j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

}  // namespace magd
