#pragma once

#include <vector>

#include "cavity/sparse.hpp"

namespace cavity {

enum class OrderingMethod {
  natural,
  nested_dissection,  // level-structure bisection on the compressed graph, minimum degree on leaves
  minimum_degree,     // exact minimum degree on the compressed graph (small problems)
  amd,                // Eigen's approximate minimum degree, kept for comparison
};

/// Undirected adjacency in compressed form (no self loops), with vertex weights.
struct Graph {
  std::vector<int> offsets{0};
  std::vector<int> adj;
  std::vector<int> weight;

  int size() const { return static_cast<int>(offsets.size()) - 1; }
  int degree(int v) const { return offsets[v + 1] - offsets[v]; }
};

Graph adjacency_graph(const SparseSymOp& A);

/// Groups vertices with identical closed neighbourhoods. `group[v]` is the compressed vertex of v.
struct Compression {
  Graph graph;
  std::vector<int> group;
  std::vector<std::vector<int>> members;
};

Compression compress_graph(const Graph& g);

/// Returns perm with perm[new] = old.
std::vector<int> fill_reducing_ordering(const SparseSymOp& A, OrderingMethod method = OrderingMethod::nested_dissection);
std::vector<int> order_graph(const Graph& g, OrderingMethod method);

/// Elimination tree of P A P^T (perm[new] = old) with column counts of its Cholesky factor
/// (diagonal included). parent[j] == -1 marks a root.
struct EliminationTree {
  std::vector<int> parent;
  std::vector<int> col_count;
};

EliminationTree elimination_tree(const SparseSymOp& A, const std::vector<int>& perm);
/// post[k] is the k-th node in a depth-first postorder (children in increasing order).
std::vector<int> tree_postorder(const std::vector<int>& parent);

/// Number of nonzeros of the Cholesky factor (diagonal included) under the permutation.
long long factor_nonzeros(const SparseSymOp& A, const std::vector<int>& perm);

}  // namespace cavity
