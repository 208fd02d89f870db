#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmcc/types.hpp"

namespace dmcc::network {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected graph over N sensor nodes. Every node is its own neighbour, so
/// neighbour lists N_k always contain k and sums over N_k include the local
/// estimate.
class NetworkTopology {
 public:
  /// Builds the graph from positions using the distance rule
  /// (l ~ k iff |p_l - p_k| <= radius).
  NetworkTopology(std::vector<Point> positions, double radius);

  /// Builds the graph from an explicit edge list (e.g. an imported topology
  /// file). Edges are undirected; self-loops are added implicitly.
  NetworkTopology(std::vector<Point> positions, double radius,
                  const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t size() const { return positions_.size(); }
  double radius() const { return radius_; }
  const std::vector<Point>& positions() const { return positions_; }

  bool adjacent(std::size_t l, std::size_t k) const { return adjacency_[l * size() + k] != 0; }

  /// Sorted neighbour list of node k, including k itself.
  const std::vector<std::size_t>& neighbors(std::size_t k) const { return neighbors_[k]; }

  /// Neighbour count excluding the node itself.
  std::size_t degree(std::size_t k) const { return neighbors_[k].size() - 1; }

  /// Edges (l, k) with l < k.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  bool is_connected() const;

 private:
  void rebuild_neighbors();

  std::vector<Point> positions_;
  double radius_;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

inline constexpr std::size_t kMaxTopologyRetries = 100;

/// Random geometric graph: positions uniform on [0, region]^2. Disconnected
/// draws are redrawn with derived seeds; throws TopologyError once
/// kMaxTopologyRetries redraws have failed.
NetworkTopology generate_topology(std::size_t n, double region, double radius, std::uint64_t seed);

enum class CombinationRule { identity, metropolis, uniform };

std::string_view to_string(CombinationRule rule);
CombinationRule parse_combination_rule(std::string_view name);

/// Left-stochastic weight matrix: entry (l, k) is the weight node k assigns
/// to the estimate of neighbour l; columns sum to one.
class CombinationMatrix {
 public:
  CombinationMatrix(Matrix entries, CombinationRule rule);

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t l, std::size_t k) const {
    return entries_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
  }
  const Matrix& entries() const { return entries_; }
  CombinationRule rule() const { return rule_; }

  /// Indices l with a nonzero weight in column k, ascending.
  const std::vector<std::size_t>& support(std::size_t k) const { return support_[k]; }

 private:
  Matrix entries_;
  CombinationRule rule_;
  std::vector<std::vector<std::size_t>> support_;
};

CombinationMatrix build_combination_matrix(const NetworkTopology& topology, CombinationRule rule);

inline constexpr double kColumnSumTolerance = 1e-12;

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_combination_matrix(const CombinationMatrix& matrix,
                                             const NetworkTopology& topology);

}  // namespace dmcc::network
