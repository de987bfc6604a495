#include "mixdyn/chain.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "mixdyn/errors.hpp"

namespace mixdyn {

namespace {

constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

void sort_unique(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<char> closure_mask(const TransitionGraph& g, std::vector<char> mask) {
  std::vector<std::uint32_t> stack;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) stack.push_back(static_cast<std::uint32_t>(i));
  while (!stack.empty()) {
    const std::uint32_t v = stack.back();
    stack.pop_back();
    for (std::uint32_t w : g.successors(v))
      if (!mask[w]) {
        mask[w] = 1;
        stack.push_back(w);
      }
  }
  return mask;
}

std::vector<char> mask_of(const TransitionGraph& g, const BoxSet& bs) {
  std::vector<char> mask(g.node_count(), 0);
  for (std::uint32_t v : g.nodes_of(bs)) mask[v] = 1;
  return mask;
}

// Per SCC: the unique non-trivial sink component its paths can end in, or a
// sentinel. `succ` is dag_succ for attractors and dag_pred for repellers.
std::vector<std::uint32_t> unique_sink_labels(const ChainDecomposition& dec,
                                              const std::vector<std::vector<std::uint32_t>>& succ,
                                              const std::vector<char>& sink) {
  constexpr std::uint32_t kMulti = kUnset - 1;
  constexpr std::uint32_t kEscape = kUnset - 2;
  const std::size_t n = dec.scc_count();
  std::vector<std::uint32_t> label(n, kUnset);
  // Post-order over the condensation.
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (label[root] != kUnset) continue;
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [c, pos] = stack.back();
      if (pos < succ[c].size()) {
        const std::uint32_t d = succ[c][pos++];
        if (label[d] == kUnset) stack.emplace_back(d, 0);
        continue;
      }
      std::uint32_t l;
      if (succ[c].empty()) {
        l = (sink[c] && !dec.trivial[c]) ? c : kEscape;
      } else {
        l = label[succ[c].front()];
        for (std::uint32_t d : succ[c])
          if (label[d] != l) l = kMulti;
      }
      label[c] = l;
      stack.pop_back();
    }
  }
  return label;
}

std::vector<SccWitness> witnesses(const TransitionGraph& g, const ChainDecomposition& dec, bool forward) {
  const auto& flags = forward ? dec.terminal : dec.initial;
  const auto labels = unique_sink_labels(dec, forward ? dec.dag_succ : dec.dag_pred, flags);
  std::vector<SccWitness> out;
  std::vector<std::size_t> slot(dec.scc_count(), kUnset);
  for (std::uint32_t c = 0; c < dec.scc_count(); ++c) {
    if (flags[c] && !dec.trivial[c]) {
      slot[c] = out.size();
      out.push_back({c, BoxSet()});
    }
  }
  std::vector<std::vector<std::uint32_t>> nodes(out.size());
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    const std::uint32_t l = labels[dec.scc_of[v]];
    if (l < dec.scc_count()) nodes[slot[l]].push_back(v);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].absorbing = g.boxes_of(nodes[i]);
  return out;
}

BoxSet union_of_flagged(const TransitionGraph& g, const ChainDecomposition& dec, const std::vector<char>& flags) {
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t c = 0; c < dec.scc_count(); ++c)
    if (flags[c] && !dec.trivial[c]) nodes.insert(nodes.end(), dec.members[c].begin(), dec.members[c].end());
  return g.boxes_of(nodes);
}

}  // namespace

ChainDecomposition decompose(const TransitionGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> index(n, kUnset), low(n, 0), raw(n, kUnset);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> calls;
  std::uint32_t counter = 0;
  std::uint32_t raw_count = 0;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    calls.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!calls.empty()) {
      auto& [v, pos] = calls.back();
      const auto succ = g.successors(v);
      if (pos < succ.size()) {
        const std::uint32_t w = succ[pos++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          calls.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::uint32_t done = v;
      calls.pop_back();
      if (!calls.empty()) low[calls.back().first] = std::min(low[calls.back().first], low[done]);
      if (low[done] == index[done]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          raw[w] = raw_count;
        } while (w != done);
        ++raw_count;
      }
    }
  }

  ChainDecomposition dec;
  std::vector<std::uint32_t> relabel(raw_count, kUnset);
  dec.scc_of.resize(n);
  for (std::uint32_t v = 0; v < n; ++v) {
    std::uint32_t& id = relabel[raw[v]];
    if (id == kUnset) {
      id = static_cast<std::uint32_t>(dec.members.size());
      dec.members.emplace_back();
    }
    dec.scc_of[v] = id;
    dec.members[id].push_back(v);
  }
  const std::size_t m = dec.members.size();
  dec.dag_succ.assign(m, {});
  dec.dag_pred.assign(m, {});
  dec.trivial.assign(m, 0);
  std::vector<char> self_loop(m, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    const std::uint32_t cv = dec.scc_of[v];
    for (std::uint32_t w : g.successors(v)) {
      const std::uint32_t cw = dec.scc_of[w];
      if (cv != cw) {
        dec.dag_succ[cv].push_back(cw);
        dec.dag_pred[cw].push_back(cv);
      } else if (v == w) {
        self_loop[cv] = 1;
      }
    }
  }
  dec.terminal.assign(m, 0);
  dec.initial.assign(m, 0);
  for (std::size_t c = 0; c < m; ++c) {
    sort_unique(dec.dag_succ[c]);
    sort_unique(dec.dag_pred[c]);
    dec.trivial[c] = dec.members[c].size() == 1 && !self_loop[c];
    dec.terminal[c] = dec.dag_succ[c].empty();
    dec.initial[c] = dec.dag_pred[c].empty();
  }
  assert_acyclic(dec);
  return dec;
}

void assert_acyclic(const ChainDecomposition& dec) {
  const std::size_t m = dec.scc_count();
  std::vector<std::size_t> indeg(m, 0);
  for (const auto& s : dec.dag_succ)
    for (std::uint32_t d : s) ++indeg[d];
  std::vector<std::uint32_t> ready;
  for (std::uint32_t c = 0; c < m; ++c)
    if (indeg[c] == 0) ready.push_back(c);
  std::size_t seen = 0;
  while (!ready.empty()) {
    const std::uint32_t c = ready.back();
    ready.pop_back();
    ++seen;
    for (std::uint32_t d : dec.dag_succ[c])
      if (--indeg[d] == 0) ready.push_back(d);
  }
  if (seen != m) throw std::logic_error("condensation graph contains a cycle");
}

BoxSet scc_boxes(const TransitionGraph& g, const ChainDecomposition& dec, std::uint32_t scc) {
  return g.boxes_of(dec.members.at(scc));
}

BoxSet chain_recurrent(const TransitionGraph& g, const ChainDecomposition& dec) {
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t c = 0; c < dec.scc_count(); ++c)
    if (!dec.trivial[c]) nodes.insert(nodes.end(), dec.members[c].begin(), dec.members[c].end());
  return g.boxes_of(nodes);
}

BoxSet attainable_from(const TransitionGraph& g, const BoxSet& src, int min_steps) {
  if (min_steps < 0) throw ConfigError("min_steps must be non-negative");
  std::vector<char> mask = mask_of(g, src);
  for (int k = 0; k < min_steps; ++k) {
    std::vector<char> next(g.node_count(), 0);
    bool any = false;
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
      if (!mask[v]) continue;
      for (std::uint32_t w : g.successors(v)) next[w] = 1;
    }
    for (char c : next) any = any || c;
    mask.swap(next);
    if (!any) break;
  }
  return g.boxes_of_mask(closure_mask(g, std::move(mask)));
}

AbsorbingCheck absorbing_check(const TransitionGraph& g, const BoxSet& u) {
  const std::vector<char> inside = mask_of(g, u);
  std::vector<char> bad(g.node_count(), 0);
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    if (!inside[v]) continue;
    for (std::uint32_t w : g.successors(v))
      if (!inside[w]) bad[w] = 1;
  }
  AbsorbingCheck out;
  out.violations = g.boxes_of_mask(bad);
  out.absorbing = out.violations.empty();
  return out;
}

std::vector<SccWitness> attractors(const TransitionGraph& g, const ChainDecomposition& dec) {
  return witnesses(g, dec, true);
}

std::vector<SccWitness> repellers(const TransitionGraph& g, const ChainDecomposition& dec) {
  return witnesses(g, dec, false);
}

BoxSet full_attractor(const TransitionGraph& g, const ChainDecomposition& dec) {
  return union_of_flagged(g, dec, dec.terminal);
}

BoxSet full_repeller(const TransitionGraph& g, const ChainDecomposition& dec) {
  return union_of_flagged(g, dec, dec.initial);
}

BoxSet full_ruelle_attractor(const TransitionGraph& g, const ChainDecomposition& dec) {
  return attainable_from(g, full_attractor(g, dec), 0);
}

BoxSet full_ruelle_repeller(const TransitionGraph& g, const ChainDecomposition& dec) {
  return attainable_from(reverse(g), full_repeller(g, dec), 0);
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Conservative: return "Conservative";
    case Classification::Dissipative: return "Dissipative";
    case Classification::Mixed: return "Mixed";
  }
  return "Mixed";
}

Classification classify(const TransitionGraph& g, const ChainDecomposition& dec) {
  if (g.node_count() > 0 && dec.scc_count() == 1 && !dec.trivial[0]) return Classification::Conservative;
  const BoxSet a = full_ruelle_attractor(g, dec);
  const BoxSet r = full_ruelle_repeller(g, dec);
  return set_intersection(a, r).empty() ? Classification::Dissipative : Classification::Mixed;
}

double jaccard(const BoxSet& a, const BoxSet& b) {
  const std::size_t u = set_union(a, b).size();
  if (u == 0) return 0.0;
  return static_cast<double>(set_intersection(a, b).size()) / static_cast<double>(u);
}

std::string to_string(SccRole r) {
  switch (r) {
    case SccRole::Attractor: return "attractor";
    case SccRole::Repeller: return "repeller";
    case SccRole::CoreCandidate: return "core-candidate";
    case SccRole::SaddleLike: return "saddle-like";
  }
  return "saddle-like";
}

AttractorReport make_report(const std::string& system, const TransitionGraph& g, const ChainDecomposition& dec) {
  AttractorReport rep;
  rep.system = system;
  rep.depth = g.boxes().depth();
  rep.epsilon = g.epsilon();
  rep.samples_per_axis = g.scheme().samples_per_axis;
  rep.box_count = g.node_count();
  rep.edge_count = g.edge_count();
  rep.scc_count = dec.scc_count();
  const BoxSet& boxes = g.boxes();
  for (std::uint32_t c = 0; c < dec.scc_count(); ++c) {
    if (dec.trivial[c]) continue;
    SccSummary s;
    s.id = c;
    const bool t = dec.terminal[c], i = dec.initial[c];
    s.role = t && i ? SccRole::CoreCandidate : t ? SccRole::Attractor : i ? SccRole::Repeller : SccRole::SaddleLike;
    s.box_count = dec.members[c].size();
    s.volume_fraction = static_cast<double>(s.box_count) / static_cast<double>(g.node_count());
    s.lower = boxes.center(boxes.keys()[dec.members[c].front()]);
    s.upper = s.lower;
    for (std::uint32_t v : dec.members[c]) {
      const Point p = boxes.center(boxes.keys()[v]);
      for (int k = 0; k < p.dim; ++k) {
        s.lower[k] = std::min(s.lower[k], p[k]);
        s.upper[k] = std::max(s.upper[k], p[k]);
      }
    }
    if (s.role == SccRole::Attractor || s.role == SccRole::CoreCandidate) ++rep.n_attractors;
    if (s.role == SccRole::Repeller || s.role == SccRole::CoreCandidate) ++rep.n_repellers;
    if (s.role == SccRole::CoreCandidate) ++rep.n_core_candidates;
    rep.components.push_back(s);
  }
  rep.chain_recurrent_boxes = chain_recurrent(g, dec).size();
  rep.full_attractor_boxes = full_attractor(g, dec).size();
  rep.full_repeller_boxes = full_repeller(g, dec).size();
  const BoxSet ra = full_ruelle_attractor(g, dec);
  const BoxSet rr = full_ruelle_repeller(g, dec);
  rep.ruelle_attractor_boxes = ra.size();
  rep.ruelle_repeller_boxes = rr.size();
  rep.ruelle_intersection_boxes = set_intersection(ra, rr).size();
  rep.overlap = jaccard(ra, rr);
  rep.classification = classify(g, dec);
  return rep;
}

std::vector<std::uint8_t> role_levels(const TransitionGraph& g, const ChainDecomposition& dec) {
  const auto a = mask_of(g, full_ruelle_attractor(g, dec));
  const auto r = mask_of(g, full_ruelle_repeller(g, dec));
  std::vector<std::uint8_t> out(g.node_count(), 0);
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = a[v] && r[v] ? 255 : a[v] ? 64 : r[v] ? 160 : 0;
  return out;
}

}  // namespace mixdyn
