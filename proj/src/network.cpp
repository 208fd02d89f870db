#include "dmcc/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dmcc/rng.hpp"

namespace dmcc::network {

NetworkTopology::NetworkTopology(std::vector<Point> positions, double radius)
    : positions_(std::move(positions)), radius_(radius) {
  const std::size_t n = positions_.size();
  adjacency_.assign(n * n, 0);
  for (std::size_t l = 0; l < n; ++l) {
    adjacency_[l * n + l] = 1;
    for (std::size_t k = l + 1; k < n; ++k) {
      const double dx = positions_[l].x - positions_[k].x;
      const double dy = positions_[l].y - positions_[k].y;
      if (std::hypot(dx, dy) <= radius_) {
        adjacency_[l * n + k] = 1;
        adjacency_[k * n + l] = 1;
      }
    }
  }
  rebuild_neighbors();
}

NetworkTopology::NetworkTopology(std::vector<Point> positions, double radius,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& edges)
    : positions_(std::move(positions)), radius_(radius) {
  const std::size_t n = positions_.size();
  adjacency_.assign(n * n, 0);
  for (std::size_t k = 0; k < n; ++k) adjacency_[k * n + k] = 1;
  for (auto [l, k] : edges) {
    if (l >= n || k >= n) {
      throw TopologyError(fmt::format("edge ({}, {}) references a node outside 0..{}", l, k, n - 1));
    }
    adjacency_[l * n + k] = 1;
    adjacency_[k * n + l] = 1;
  }
  rebuild_neighbors();
}

void NetworkTopology::rebuild_neighbors() {
  const std::size_t n = size();
  neighbors_.assign(n, {});
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      if (adjacency_[l * n + k] != 0) neighbors_[k].push_back(l);
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> NetworkTopology::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t l = 0; l < size(); ++l) {
    for (std::size_t k = l + 1; k < size(); ++k) {
      if (adjacent(l, k)) out.emplace_back(l, k);
    }
  }
  return out;
}

bool NetworkTopology::is_connected() const {
  const std::size_t n = size();
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t k = stack.back();
    stack.pop_back();
    for (std::size_t l : neighbors_[k]) {
      if (!seen[l]) {
        seen[l] = true;
        ++reached;
        stack.push_back(l);
      }
    }
  }
  return reached == n;
}

NetworkTopology generate_topology(std::size_t n, double region, double radius, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("topology needs at least one node");
  if (!(region > 0.0)) throw std::invalid_argument("region side length must be positive");
  if (!(radius >= 0.0)) throw std::invalid_argument("connectivity radius must be nonnegative");

  for (std::size_t attempt = 0; attempt <= kMaxTopologyRetries; ++attempt) {
    Rng rng = make_rng(derive_seed(seed, StreamTag::topology, attempt));
    std::uniform_real_distribution<double> coord(0.0, region);
    std::vector<Point> positions(n);
    for (auto& p : positions) {
      p.x = coord(rng);
      p.y = coord(rng);
    }
    NetworkTopology topology(std::move(positions), radius);
    if (topology.is_connected()) return topology;
  }
  throw TopologyError(fmt::format(
      "no connected topology after {} redraws (n={}, region={}, radius={}); radius is too small",
      kMaxTopologyRetries, n, region, radius));
}

std::string_view to_string(CombinationRule rule) {
  switch (rule) {
    case CombinationRule::identity: return "identity";
    case CombinationRule::metropolis: return "metropolis";
    case CombinationRule::uniform: return "uniform";
  }
  return "unknown";
}

CombinationRule parse_combination_rule(std::string_view name) {
  if (name == "identity") return CombinationRule::identity;
  if (name == "metropolis") return CombinationRule::metropolis;
  if (name == "uniform") return CombinationRule::uniform;
  throw std::invalid_argument(fmt::format("unknown combination rule '{}'", name));
}

CombinationMatrix::CombinationMatrix(Matrix entries, CombinationRule rule)
    : entries_(std::move(entries)), rule_(rule) {
  if (entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("combination matrix must be square");
  }
  support_.assign(size(), {});
  for (std::size_t k = 0; k < size(); ++k) {
    for (std::size_t l = 0; l < size(); ++l) {
      if ((*this)(l, k) != 0.0) support_[k].push_back(l);
    }
  }
}

CombinationMatrix build_combination_matrix(const NetworkTopology& topology, CombinationRule rule) {
  const auto n = static_cast<Eigen::Index>(topology.size());
  Matrix w = Matrix::Zero(n, n);
  switch (rule) {
    case CombinationRule::identity:
      w.setIdentity();
      break;
    case CombinationRule::metropolis:
      for (Eigen::Index k = 0; k < n; ++k) {
        double off = 0.0;
        for (std::size_t l : topology.neighbors(static_cast<std::size_t>(k))) {
          const auto li = static_cast<Eigen::Index>(l);
          if (li == k) continue;
          const auto dmax = std::max(topology.degree(l), topology.degree(static_cast<std::size_t>(k)));
          w(li, k) = 1.0 / (1.0 + static_cast<double>(dmax));
          off += w(li, k);
        }
        w(k, k) = 1.0 - off;
      }
      break;
    case CombinationRule::uniform:
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto& nk = topology.neighbors(static_cast<std::size_t>(k));
        for (std::size_t l : nk) w(static_cast<Eigen::Index>(l), k) = 1.0 / static_cast<double>(nk.size());
      }
      break;
  }
  return CombinationMatrix(std::move(w), rule);
}

ValidationReport validate_combination_matrix(const CombinationMatrix& matrix,
                                             const NetworkTopology& topology) {
  ValidationReport report;
  if (matrix.size() != topology.size()) {
    report.violations.push_back(
        fmt::format("dimension mismatch: matrix {} vs topology {}", matrix.size(), topology.size()));
    return report;
  }
  for (std::size_t k = 0; k < matrix.size(); ++k) {
    double column_sum = 0.0;
    for (std::size_t l = 0; l < matrix.size(); ++l) {
      const double v = matrix(l, k);
      column_sum += v;
      if (v < 0.0) report.violations.push_back(fmt::format("negative entry ({}, {}) = {}", l, k, v));
      if (v != 0.0 && !topology.adjacent(l, k)) {
        report.violations.push_back(
            fmt::format("entry ({}, {}) = {} lies outside the neighbourhood of node {}", l, k, v, k));
      }
    }
    if (std::abs(column_sum - 1.0) > kColumnSumTolerance) {
      report.violations.push_back(fmt::format("column {} sums to {:.17g}", k, column_sum));
    }
  }
  return report;
}

}  // namespace dmcc::network
