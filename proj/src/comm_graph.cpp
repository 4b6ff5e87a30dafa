#include "mgdde/comm_graph.hpp"

#include <set>
#include <string>

#include "mgdde/errors.hpp"

namespace mgdde {

CommGraph::CommGraph(int vertex_count, std::vector<std::pair<int, int>> edges)
    : n_(vertex_count), edges_(std::move(edges)), in_(vertex_count) {
  if (n_ < 1) {
    throw ValidationError(ValidationCode::BadValue, "graph must have at least one vertex");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [from, to] : edges_) {
    if (from < 0 || from >= n_ || to < 0 || to >= n_) {
      throw ValidationError(ValidationCode::VertexOutOfRange,
                            "edge (" + std::to_string(from + 1) + " -> " + std::to_string(to + 1) +
                                ") references a vertex outside 1.." + std::to_string(n_));
    }
    if (from == to) {
      throw ValidationError(ValidationCode::SelfLoop,
                            "self-loop on vertex " + std::to_string(from + 1));
    }
    if (!seen.insert({from, to}).second) {
      throw ValidationError(ValidationCode::DuplicateEdge,
                            "duplicate edge (" + std::to_string(from + 1) + " -> " +
                                std::to_string(to + 1) + ")");
    }
    in_[to].push_back(from);
  }
}

void CommGraph::validate_for_consensus() const {
  for (int i = 0; i < n_; ++i) {
    if (in_[i].empty()) {
      throw ValidationError(ValidationCode::ZeroInDegree,
                            "vertex " + std::to_string(i + 1) + " has no incoming edge");
    }
  }
}

Eigen::MatrixXd CommGraph::adjacency_matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& [from, to] : edges_) a(to, from) = 1.0;
  return a;
}

Eigen::MatrixXd CommGraph::degree_matrix() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) d(i, i) = static_cast<double>(in_[i].size());
  return d;
}

Eigen::MatrixXd CommGraph::laplacian() const { return degree_matrix() - adjacency_matrix(); }

CommGraph CommGraph::complete(int vertex_count) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(vertex_count) * (vertex_count - 1));
  for (int i = 0; i < vertex_count; ++i) {
    for (int j = 0; j < vertex_count; ++j) {
      if (i != j) edges.emplace_back(j, i);
    }
  }
  return CommGraph(vertex_count, std::move(edges));
}

}  // namespace mgdde
