#include <algorithm>
#include <limits>
#include <numeric>

#include "mixdyn/chain.hpp"
#include "mixdyn/errors.hpp"

namespace mixdyn {

namespace {

RegionSummary summarize(const TransitionGraph& g, const BoxSet& region, const Point& target) {
  RegionSummary s;
  s.box_count = region.size();
  s.absorbing = absorbing_check(g, region).absorbing;
  s.whole_cover = region.size() == g.node_count();
  const auto key = region.key_of(target);
  s.contains_target = key && region.contains(*key);
  for (std::uint64_t k : region.keys()) s.radius = std::max(s.radius, region.far_distance(k, target));
  return s;
}

Witness make_witness(int stage, std::uint32_t scc, const BoxSet& boxes, const Point& target) {
  Witness w;
  w.stage = stage;
  w.scc = scc;
  w.box_count = boxes.size();
  w.inner_radius = std::numeric_limits<double>::infinity();
  for (std::uint64_t k : boxes.keys()) {
    const double d = boxes.domain().distance(boxes.center(k), target);
    w.inner_radius = std::min(w.inner_radius, d);
    w.outer_radius = std::max(w.outer_radius, d);
  }
  return w;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Assigns group ids (in order of first appearance) to witnesses whose boxes
// overlap once coarsened to `depth`; returns the number of groups.
std::size_t group_witnesses(std::vector<Witness*>& ws, const std::vector<BoxSet>& sets, int depth) {
  UnionFind uf(ws.size());
  std::vector<BoxSet> coarse;
  coarse.reserve(sets.size());
  for (const auto& s : sets) coarse.push_back(coarsen(s, depth));
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t j = i + 1; j < ws.size(); ++j)
      if (!set_intersection(coarse[i], coarse[j]).empty()) uf.unite(static_cast<int>(i), static_cast<int>(j));
  std::vector<int> label(ws.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const int root = uf.find(static_cast<int>(i));
    if (label[root] < 0) label[root] = next++;
    ws[i]->group = label[root];
  }
  return static_cast<std::size_t>(next);
}

// Grows a nested chain of absorbing sets U_1 = `first` (already closed),
// U_{j+1} = closure(U_j + one-box collar), until the cover is exhausted, and
// returns (SCC, j) for every flagged non-trivial SCC other than `skip` that
// first appears in U_j. Closures are extended incrementally, so the whole
// chain costs one traversal of the graph.
std::vector<std::pair<std::uint32_t, int>> nested_witnesses(const TransitionGraph& g, const ChainDecomposition& dec,
                                                            const BoxSet& first, const std::vector<char>& flags,
                                                            std::uint32_t skip) {
  const BoxSet& cover = g.boxes();
  const std::size_t n = g.node_count();
  const int dim = cover.dim();
  const auto cells = static_cast<std::int64_t>(cover.cells_per_axis());
  std::vector<char> in(n, 0), seen_scc(dec.scc_count(), 0);
  std::vector<std::uint32_t> layer = g.nodes_of(first);
  for (std::uint32_t v : layer) in[v] = 1;
  std::vector<std::pair<std::uint32_t, int>> out;
  std::size_t inside = layer.size();
  int level = 1;
  std::int64_t offsets = 1;
  for (int i = 0; i < dim; ++i) offsets *= 3;
  while (true) {
    for (std::uint32_t v : layer) {
      const std::uint32_t c = dec.scc_of[v];
      if (c != skip && flags[c] && !dec.trivial[c] && !seen_scc[c]) {
        seen_scc[c] = 1;
        out.emplace_back(c, level);
      }
    }
    if (inside == n) break;
    // Collar of the current set, then its forward closure.
    std::vector<std::uint32_t> next;
    // Older members already had their neighbours taken in.
    for (std::uint32_t v : layer) {
      const BoxId id = cover.decode(cover.keys()[v]);
      for (std::int64_t o = 0; o < offsets; ++o) {
        std::int64_t rem = o;
        BoxId nb = id;
        bool valid = true;
        for (int i = 0; i < dim; ++i) {
          std::int64_t c = static_cast<std::int64_t>(id.coords[i]) + (rem % 3) - 1;
          rem /= 3;
          if (cover.domain().periodic[i])
            c = (c + cells) % cells;
          else if (c < 0 || c >= cells)
            valid = false;
          nb.coords[i] = static_cast<std::uint32_t>(c);
        }
        if (!valid) continue;
        if (auto idx = cover.index_of(cover.encode(nb)); idx && !in[*idx]) {
          in[*idx] = 1;
          next.push_back(static_cast<std::uint32_t>(*idx));
        }
      }
    }
    if (next.empty()) break;
    for (std::size_t head = 0; head < next.size(); ++head)
      for (std::uint32_t w : g.successors(next[head]))
        if (!in[w]) {
          in[w] = 1;
          next.push_back(w);
        }
    inside += next.size();
    layer.swap(next);
    ++level;
  }
  return out;
}

}  // namespace

void validate_schedule(const std::vector<Stage>& schedule) {
  if (schedule.empty()) throw ConfigError("schedule needs at least one stage");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const Stage& s = schedule[i];
    if (s.depth < 0) throw ConfigError("schedule depth must be non-negative");
    if (!(s.epsilon >= 0.0) || !std::isfinite(s.epsilon)) throw ConfigError("schedule epsilon must be >= 0");
    if (s.samples_per_axis < 2) throw ConfigError("samples per axis must be at least 2");
    if (i > 0 && (s.depth < schedule[i - 1].depth || s.epsilon > schedule[i - 1].epsilon))
      throw ConfigError("schedule must refine: depths non-decreasing and epsilons non-increasing");
  }
}

CoreCertificate core_scan(const MapSystem& sys, const std::vector<Stage>& schedule, const Point& target,
                          const ScanOptions& options) {
  validate_schedule(schedule);
  if (target.dim != sys.dim || !sys.domain.contains(target)) throw ConfigError("core-scan target lies outside the domain");

  CoreCertificate cert;
  cert.system = sys.name;
  cert.target = target;
  cert.literal_core = true;

  std::vector<BoxSet> attractor_sets, repeller_sets;
  std::vector<std::pair<std::size_t, std::size_t>> attractor_index, repeller_index;  // (stage, slot)

  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const Stage& st = schedule[k];
    StageResult res;
    res.stage = st;
    const BoxSet cover = initial_cover(sys.domain, st.depth, options.box_budget);
    GraphOptions go;
    go.scheme = {st.samples_per_axis, options.pad};
    go.workers = options.workers;
    go.edge_budget = options.edge_budget;
    const TransitionGraph g = options.graph_builder ? options.graph_builder(sys, cover, st.epsilon, go)
                                                       : build_graph(sys, cover, st.epsilon, go);
    const ChainDecomposition dec = decompose(g);
    res.box_count = g.node_count();
    res.edge_count = g.edge_count();
    res.scc_count = dec.scc_count();

    const auto node = cover.index_of(*cover.key_of(target));
    const std::uint32_t s = dec.scc_of[*node];
    res.target_scc = s;
    res.target_scc_boxes = dec.members[s].size();
    res.target_recurrent = !dec.trivial[s];
    res.terminal = dec.terminal[s];
    res.initial = dec.initial[s];
    cert.literal_core = cert.literal_core && res.target_recurrent && res.terminal && res.initial;

    if (!res.target_recurrent) {
      res.note = "target box is not chain recurrent";
    } else {
      const TransitionGraph rg = reverse(g);
      const BoxSet core = scc_boxes(g, dec, s);
      const BoxSet fwd = attainable_from(g, core, 0);
      const BoxSet bwd = attainable_from(rg, core, 0);
      res.forward = summarize(g, fwd, target);
      res.backward = summarize(rg, bwd, target);
      const bool whole = res.target_scc_boxes == g.node_count();
      auto collect = [&](const TransitionGraph& graph, const BoxSet& first, const std::vector<char>& flags,
                         std::vector<Witness>& into, std::vector<BoxSet>& sets,
                         std::vector<std::pair<std::size_t, std::size_t>>& index) {
        for (const auto& [c, level] : nested_witnesses(graph, dec, first, flags, s)) {
          BoxSet b = scc_boxes(g, dec, c);
          Witness w = make_witness(static_cast<int>(k) + 1, c, b, target);
          w.level = level;
          into.push_back(w);
          sets.push_back(std::move(b));
          index.emplace_back(k, into.size() - 1);
        }
      };
      collect(g, fwd, dec.terminal, res.attractor_witnesses, attractor_sets, attractor_index);
      collect(rg, bwd, dec.initial, res.repeller_witnesses, repeller_sets, repeller_index);
      if (whole) {
        res.passed = true;
        res.note = "target component is the whole cover";
      } else if (res.forward.whole_cover || res.backward.whole_cover) {
        res.note = res.forward.whole_cover ? "forward closure of the target component is the whole cover"
                                           : "backward closure of the target component is the whole cover";
      } else {
        res.passed = true;
        res.note = "proper forward and backward absorbing closures";
      }
    }
    cert.stages.push_back(std::move(res));
  }

  // Cross-stage bookkeeping.
  const int coarsest = schedule.front().depth;
  std::vector<Witness*> aw, rw;
  for (auto [k, i] : attractor_index) aw.push_back(&cert.stages[k].attractor_witnesses[i]);
  for (auto [k, i] : repeller_index) rw.push_back(&cert.stages[k].repeller_witnesses[i]);
  cert.distinct_attractor_witnesses = group_witnesses(aw, attractor_sets, coarsest);
  cert.distinct_repeller_witnesses = group_witnesses(rw, repeller_sets, coarsest);

  for (std::size_t k = 0; k < cert.stages.size(); ++k) {
    if (!cert.stages[k].passed) {
      cert.refuted_stage = static_cast<int>(k) + 1;
      cert.verdict = "refuted at stage " + std::to_string(k + 1) + ": " + cert.stages[k].note;
      return cert;
    }
  }
  std::vector<const StageResult*> shrinking;
  for (const auto& r : cert.stages)
    if (r.target_scc_boxes != r.box_count) shrinking.push_back(&r);
  bool ok = true;
  for (std::size_t i = 1; i < shrinking.size(); ++i) {
    ok = ok && shrinking[i]->forward.radius <= shrinking[i - 1]->forward.radius;
    ok = ok && shrinking[i]->backward.radius <= shrinking[i - 1]->backward.radius;
  }
  if (!shrinking.empty()) {
    ok = ok && shrinking.size() >= 2;
    ok = ok && shrinking.back()->forward.radius < shrinking.front()->forward.radius;
    ok = ok && shrinking.back()->backward.radius < shrinking.front()->backward.radius;
  }
  cert.core_persistent = ok;
  cert.verdict = ok ? "core-persistent" : "absorbing closures do not shrink along the schedule";
  return cert;
}

}  // namespace mixdyn
