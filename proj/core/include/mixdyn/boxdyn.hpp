#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixdyn/domain.hpp"
#include "mixdyn/point.hpp"

namespace mixdyn {

struct MapSystem;

inline constexpr std::uint64_t kDefaultBoxBudget = std::uint64_t{1} << 26;
inline constexpr std::uint64_t kDefaultEdgeBudget = std::uint64_t{1} << 30;

// A dyadic cell: integer coordinates at 2^depth resolution per axis.
struct BoxId {
  int depth = 0;
  std::array<std::uint32_t, kMaxDim> coords{};

  friend bool operator==(const BoxId&, const BoxId&) = default;
};

// Sorted set of equal-depth boxes of a domain. Boxes are addressed by a linear
// key c0 + c1 * 2^depth + c2 * 4^depth; keys are kept sorted and unique.
class BoxSet {
 public:
  BoxSet() = default;
  BoxSet(Domain domain, int depth);
  BoxSet(Domain domain, int depth, std::vector<std::uint64_t> keys);  // sorts and dedups

  const Domain& domain() const { return domain_; }
  int depth() const { return depth_; }
  int dim() const { return domain_.dim; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  std::span<const std::uint64_t> keys() const { return keys_; }

  std::uint64_t cells_per_axis() const { return std::uint64_t{1} << depth_; }
  std::uint64_t total_cells() const;
  double width(int axis) const { return domain_.extent(axis) / static_cast<double>(cells_per_axis()); }
  double max_width() const;
  double cell_volume() const;
  double volume() const { return cell_volume() * static_cast<double>(size()); }

  bool contains(std::uint64_t key) const;
  std::optional<std::size_t> index_of(std::uint64_t key) const;

  std::uint64_t encode(const BoxId& id) const;
  BoxId decode(std::uint64_t key) const;
  // Box holding p (p reduced on periodic axes); nullopt when p lies outside.
  std::optional<std::uint64_t> key_of(const Point& p) const;

  Point lower_corner(std::uint64_t key) const;
  Point center(std::uint64_t key) const;

  // Largest max-metric distance from `p` to a point of the box.
  double far_distance(std::uint64_t key, const Point& p) const;

  friend bool operator==(const BoxSet& a, const BoxSet& b) {
    return a.depth_ == b.depth_ && a.domain_ == b.domain_ && a.keys_ == b.keys_;
  }

 private:
  Domain domain_{};
  int depth_ = 0;
  std::vector<std::uint64_t> keys_;
};

BoxSet set_union(const BoxSet& a, const BoxSet& b);
BoxSet set_intersection(const BoxSet& a, const BoxSet& b);
BoxSet set_difference(const BoxSet& a, const BoxSet& b);
bool is_subset(const BoxSet& sub, const BoxSet& super);

// Parent boxes at `depth` (<= bs.depth()) of every member.
BoxSet coarsen(const BoxSet& bs, int depth);

// Full grid of 2^(depth * dim) boxes. Throws BudgetExceeded when the count
// exceeds `budget`.
BoxSet initial_cover(const Domain& domain, int depth, std::uint64_t budget = kDefaultBoxBudget);

// Every box split into 2^dim children at depth + 1.
BoxSet subdivide(const BoxSet& bs, std::uint64_t budget = kDefaultBoxBudget);

enum class PadMode {
  Automatic,   // Lipschitz bound when the system has a hint, else empirical
  Lipschitz,   // hint * (sample spacing) / 2, isotropic
  Empirical,   // per-axis half spread of images of neighbouring samples
  None,        // no padding
};

std::string to_string(PadMode mode);
PadMode pad_mode_from_string(const std::string& name);

struct SampleScheme {
  int samples_per_axis = 4;  // uniform lattice including the corners, plus the center
  PadMode pad = PadMode::Automatic;

  friend bool operator==(const SampleScheme&, const SampleScheme&) = default;
};

struct GraphOptions {
  SampleScheme scheme{};
  int workers = 1;
  std::uint64_t edge_budget = kDefaultEdgeBudget;
};

// Directed graph on the boxes of `boxes` (node i <-> boxes.keys()[i]) that
// over-approximates the epsilon-orbit relation of a map. Adjacency is CSR.
class TransitionGraph {
 public:
  TransitionGraph() = default;
  TransitionGraph(BoxSet boxes, double epsilon, SampleScheme scheme, std::vector<std::uint64_t> offsets,
                  std::vector<std::uint32_t> targets);

  const BoxSet& boxes() const { return boxes_; }
  double epsilon() const { return epsilon_; }
  const SampleScheme& scheme() const { return scheme_; }
  std::size_t node_count() const { return boxes_.size(); }
  std::size_t edge_count() const { return targets_.size(); }

  std::span<const std::uint32_t> successors(std::size_t node) const {
    return {targets_.data() + offsets_[node], targets_.data() + offsets_[node + 1]};
  }
  bool has_edge(std::size_t from, std::size_t to) const;

  std::span<const std::uint64_t> offsets() const { return offsets_; }
  std::span<const std::uint32_t> targets() const { return targets_; }

  // Node indices of the members of `bs`; throws ConfigError if some member
  // is not a node.
  std::vector<std::uint32_t> nodes_of(const BoxSet& bs) const;
  BoxSet boxes_of(std::span<const std::uint32_t> nodes) const;
  BoxSet boxes_of_mask(const std::vector<char>& mask) const;

  friend bool operator==(const TransitionGraph& a, const TransitionGraph& b) {
    return a.boxes_ == b.boxes_ && a.epsilon_ == b.epsilon_ && a.scheme_ == b.scheme_ && a.offsets_ == b.offsets_ &&
           a.targets_ == b.targets_;
  }

 private:
  BoxSet boxes_;
  double epsilon_ = 0.0;
  SampleScheme scheme_{};
  std::vector<std::uint64_t> offsets_{0};
  std::vector<std::uint32_t> targets_;
};

// Edge b -> b' whenever b' meets the closed max-metric ball of radius
// epsilon + pad around the image of some sample point of b. Samples form a
// uniform lattice of samples_per_axis points per axis (corners included)
// plus the box center; lattice points shared between neighbouring boxes are
// evaluated once. The result does not depend on options.workers.
TransitionGraph build_graph(const MapSystem& sys, const BoxSet& bs, double epsilon, const GraphOptions& options = {});

// Union of the successors of the members of `sub` (which must be nodes of g).
BoxSet image_of(const BoxSet& sub, const TransitionGraph& g);

// Same nodes, every edge reversed.
TransitionGraph reverse(const TransitionGraph& g);

}  // namespace mixdyn
