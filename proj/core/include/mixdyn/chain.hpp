#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixdyn/boxdyn.hpp"
#include "mixdyn/mapzoo.hpp"

namespace mixdyn {

// Strongly connected components of a transition graph and their condensation.
// SCC ids follow the smallest node index they contain, so they are fixed by
// the box order alone.
struct ChainDecomposition {
  std::vector<std::uint32_t> scc_of;                 // per node
  std::vector<std::vector<std::uint32_t>> members;   // per SCC, ascending node indices
  std::vector<std::vector<std::uint32_t>> dag_succ;  // condensation, ascending
  std::vector<std::vector<std::uint32_t>> dag_pred;
  std::vector<char> terminal;
  std::vector<char> initial;
  std::vector<char> trivial;  // single node without a self-loop

  std::size_t scc_count() const { return members.size(); }
};

// Iterative Tarjan plus condensation; linear in nodes + edges.
ChainDecomposition decompose(const TransitionGraph& g);

// Throws std::logic_error if the condensation has a cycle.
void assert_acyclic(const ChainDecomposition& dec);

BoxSet scc_boxes(const TransitionGraph& g, const ChainDecomposition& dec, std::uint32_t scc);

// Boxes lying on a cycle of the graph.
BoxSet chain_recurrent(const TransitionGraph& g, const ChainDecomposition& dec);

// Boxes reached from `src` by paths with at least min_steps edges; min_steps = 0
// includes `src` itself.
BoxSet attainable_from(const TransitionGraph& g, const BoxSet& src, int min_steps);

struct AbsorbingCheck {
  bool absorbing = false;
  BoxSet violations;  // successors of members that are not members
};

AbsorbingCheck absorbing_check(const TransitionGraph& g, const BoxSet& u);

struct SccWitness {
  std::uint32_t scc = 0;
  BoxSet absorbing;  // the SCC plus every box whose paths can only end in it
};

// Terminal, resp. initial, non-trivial SCCs in ascending id order, each with
// its witness absorbing set (for repellers: absorbing for the reversed graph).
std::vector<SccWitness> attractors(const TransitionGraph& g, const ChainDecomposition& dec);
std::vector<SccWitness> repellers(const TransitionGraph& g, const ChainDecomposition& dec);

BoxSet full_attractor(const TransitionGraph& g, const ChainDecomposition& dec);
BoxSet full_repeller(const TransitionGraph& g, const ChainDecomposition& dec);
// Forward (resp. backward) closure of the full attractor (resp. repeller).
BoxSet full_ruelle_attractor(const TransitionGraph& g, const ChainDecomposition& dec);
BoxSet full_ruelle_repeller(const TransitionGraph& g, const ChainDecomposition& dec);

enum class Classification { Conservative, Dissipative, Mixed };
std::string to_string(Classification c);

// Conservative: a single non-trivial SCC holds every box. Dissipative: the
// Ruelle attractor and Ruelle repeller are disjoint. Mixed otherwise.
Classification classify(const TransitionGraph& g, const ChainDecomposition& dec);

// |a & b| / |a | b|; 0 when both are empty.
double jaccard(const BoxSet& a, const BoxSet& b);

enum class SccRole { Attractor, Repeller, CoreCandidate, SaddleLike };
std::string to_string(SccRole r);

struct SccSummary {
  std::uint32_t id = 0;
  SccRole role = SccRole::SaddleLike;
  std::size_t box_count = 0;
  double volume_fraction = 0.0;
  Point lower{1};  // bounding box of member box centres
  Point upper{1};
};

struct AttractorReport {
  std::string system;
  int depth = 0;
  double epsilon = 0.0;
  int samples_per_axis = 0;
  std::size_t box_count = 0;
  std::size_t edge_count = 0;
  std::size_t scc_count = 0;          // all SCCs, trivial included
  std::vector<SccSummary> components;  // non-trivial SCCs only
  std::size_t n_attractors = 0;
  std::size_t n_repellers = 0;
  std::size_t n_core_candidates = 0;
  std::size_t chain_recurrent_boxes = 0;
  std::size_t full_attractor_boxes = 0;
  std::size_t full_repeller_boxes = 0;
  std::size_t ruelle_attractor_boxes = 0;
  std::size_t ruelle_repeller_boxes = 0;
  std::size_t ruelle_intersection_boxes = 0;
  double overlap = 0.0;  // Jaccard index of the Ruelle attractor and repeller
  Classification classification = Classification::Dissipative;
};

AttractorReport make_report(const std::string& system, const TransitionGraph& g, const ChainDecomposition& dec);

// Grey levels per box for raster export: 0 background, 64 Ruelle attractor,
// 160 Ruelle repeller, 255 both.
std::vector<std::uint8_t> role_levels(const TransitionGraph& g, const ChainDecomposition& dec);

// --- refinement scans -------------------------------------------------------

struct Stage {
  int depth = 0;
  double epsilon = 0.0;
  int samples_per_axis = 4;
};

// Depths non-decreasing, epsilons non-increasing, at least one stage.
void validate_schedule(const std::vector<Stage>& schedule);

struct RegionSummary {
  std::size_t box_count = 0;
  double radius = 0.0;  // largest max-metric distance from the target to a member box
  bool absorbing = false;
  bool contains_target = false;
  bool whole_cover = false;
};

struct Witness {
  int stage = 0;
  std::uint32_t scc = 0;
  std::size_t box_count = 0;
  double inner_radius = 0.0;  // distance range from the target to member box centres
  double outer_radius = 0.0;
  int level = 1;  // index j of the nested absorbing set U_j where it first shows up
  int group = 0;  // witnesses of different stages sharing a group are the same object
};

struct StageResult {
  Stage stage;
  std::size_t box_count = 0;
  std::size_t edge_count = 0;
  std::size_t scc_count = 0;
  std::uint32_t target_scc = 0;
  std::size_t target_scc_boxes = 0;
  bool target_recurrent = false;
  bool terminal = false;
  bool initial = false;
  RegionSummary forward;   // forward closure of the target SCC
  RegionSummary backward;  // backward closure of the target SCC
  std::vector<Witness> attractor_witnesses;
  std::vector<Witness> repeller_witnesses;
  bool passed = false;
  std::string note;
};

struct CoreCertificate {
  std::string system;
  Point target{1};
  std::vector<StageResult> stages;
  bool core_persistent = false;
  bool literal_core = false;  // terminal and initial at every stage
  int refuted_stage = -1;     // first failing stage (1-based), -1 if none
  std::string verdict;
  std::size_t distinct_attractor_witnesses = 0;
  std::size_t distinct_repeller_witnesses = 0;
};

struct ScanOptions {
  int workers = 1;
  PadMode pad = PadMode::Automatic;
  std::uint64_t box_budget = kDefaultBoxBudget;
  std::uint64_t edge_budget = kDefaultEdgeBudget;
  // Replaces build_graph for every stage when set (the CLI plugs its cache in here).
  std::function<TransitionGraph(const MapSystem&, const BoxSet&, double, const GraphOptions&)> graph_builder;
};

// Follows the component of `target` through a refinement schedule on the
// whole domain of `sys`. A stage passes when the target lies on a cycle and
// either its SCC is the whole cover or both its forward and backward closures
// are proper absorbing sets. The core is persistent when every stage passes and
// both closure radii shrink along the schedule (non-increasing, final strictly
// below first). Witnesses come from a nested chain of absorbing sets per stage:
// U_1 is the forward closure, U_{j+1} the closure of U_j plus a one-box collar.
// Every terminal non-trivial SCC other than the target's is recorded with the
// first j whose U_j holds it; repellers use the same chain on the reversed
// graph with initial SCCs. Witnesses of different stages are merged when their
// boxes overlap at the first stage's depth.
CoreCertificate core_scan(const MapSystem& sys, const std::vector<Stage>& schedule, const Point& target,
                          const ScanOptions& options = {});

// --- Monte-Carlo epsilon-attractor -----------------------------------------

struct NoisyOptions {
  double epsilon = 1e-3;
  long n_steps = 1000;
  int n_trials = 1;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct NoisyResult {
  std::vector<std::uint64_t> counts;  // aligned with bs.keys()
  std::uint64_t total_visits = 0;
  int exits = 0;  // trials that left the box set
  BoxSet support;
};

// One noisy orbit x -> f(x) + xi, xi uniform in the max-metric epsilon-ball,
// seeded with seed + trial. While f(x) stays in the domain, xi is drawn from
// the part of the ball inside it; an orbit whose image leaves the domain (or
// leaves bs) ends the trial. Returns the node indices visited after the burn-in
// (n_steps / 10 iterates); `exited` reports truncation.
std::vector<std::uint32_t> noisy_trial(const MapSystem& sys, const Point& x0, const BoxSet& bs,
                                       const NoisyOptions& options, int trial, bool& exited);

NoisyResult noisy_attractor(const MapSystem& sys, const Point& x0, const BoxSet& bs, const NoisyOptions& options);

}  // namespace mixdyn
