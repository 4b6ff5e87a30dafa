#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace mgdde {

/// Directed data-link graph. An edge (j -> i) means vertex i receives the
/// averaged power measurement of vertex j. Vertices are 0-based internally;
/// the JSON config uses 1-based ids. Self-loops, duplicate edges and
/// out-of-range vertices are rejected at construction; consensus consumers
/// additionally require every vertex to have an incoming edge
/// (validate_for_consensus). Immutable after construction.
class CommGraph {
 public:
  CommGraph() = default;
  CommGraph(int vertex_count, std::vector<std::pair<int, int>> edges);

  /// Throws ValidationError{ZeroInDegree} when some vertex receives nothing.
  void validate_for_consensus() const;

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& in_neighbors(int vertex) const { return in_[vertex]; }
  int in_degree(int vertex) const { return static_cast<int>(in_[vertex].size()); }

  /// entry (i,j) = 1 iff edge j -> i
  Eigen::MatrixXd adjacency_matrix() const;
  /// diagonal of in-degrees
  Eigen::MatrixXd degree_matrix() const;
  /// L = D - A; row sums are exactly zero
  Eigen::MatrixXd laplacian() const;

  static CommGraph complete(int vertex_count);

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;  // (from, to)
  std::vector<std::vector<int>> in_;
};

}  // namespace mgdde
