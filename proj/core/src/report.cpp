#include "mixdyn/report.hpp"

#include "json.hpp"

namespace mixdyn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string finish(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json point_json(const Point& p) { return std::vector<double>(p.x.begin(), p.x.begin() + p.dim); }

ordered_json complex_json(const Complex& z) { return ordered_json{{"re", z.real()}, {"im", z.imag()}}; }

ordered_json region_json(const RegionSummary& r) {
  return ordered_json{{"box_count", r.box_count},
                      {"radius", r.radius},
                      {"absorbing", r.absorbing},
                      {"contains_target", r.contains_target},
                      {"whole_cover", r.whole_cover}};
}

ordered_json witness_json(const Witness& w) {
  return ordered_json{{"stage", w.stage},         {"level", w.level}, {"scc", w.scc},
                      {"box_count", w.box_count}, {"inner_radius", w.inner_radius},
                      {"outer_radius", w.outer_radius}, {"group", w.group}};
}

ordered_json domain_obj(const Domain& d) {
  return ordered_json{{"dim", d.dim},
                      {"lower", std::vector<double>(d.lower.begin(), d.lower.begin() + d.dim)},
                      {"upper", std::vector<double>(d.upper.begin(), d.upper.begin() + d.dim)},
                      {"periodic", std::vector<bool>(d.periodic.begin(), d.periodic.begin() + d.dim)}};
}

ordered_json multipliers_json(const Multipliers& m) {
  ordered_json ev = ordered_json::array();
  for (const auto& z : m.eigenvalues) ev.push_back(complex_json(z));
  ordered_json pairs = ordered_json::array();
  for (const auto& p : m.pairs)
    pairs.push_back({{"lambda", complex_json(p.lambda)},
                     {"lambda_inv", complex_json(p.lambda_inv)},
                     {"pairing_error", p.pairing_error}});
  return ordered_json{{"eigenvalues", ev}, {"pairs", pairs}, {"type", to_string(m.type)}};
}

}  // namespace

std::string to_json(const AttractorReport& r) {
  ordered_json comps = ordered_json::array();
  for (const auto& c : r.components)
    comps.push_back({{"id", c.id},
                     {"role", to_string(c.role)},
                     {"box_count", c.box_count},
                     {"volume_fraction", c.volume_fraction},
                     {"lower", point_json(c.lower)},
                     {"upper", point_json(c.upper)}});
  ordered_json j;
  j["kind"] = "attractor-report";
  j["system"] = r.system;
  j["depth"] = r.depth;
  j["epsilon"] = r.epsilon;
  j["samples_per_axis"] = r.samples_per_axis;
  j["box_count"] = r.box_count;
  j["edge_count"] = r.edge_count;
  j["scc_count"] = r.scc_count;
  j["classification"] = to_string(r.classification);
  j["n_attractors"] = r.n_attractors;
  j["n_repellers"] = r.n_repellers;
  j["n_core_candidates"] = r.n_core_candidates;
  j["chain_recurrent_boxes"] = r.chain_recurrent_boxes;
  j["full_attractor_boxes"] = r.full_attractor_boxes;
  j["full_repeller_boxes"] = r.full_repeller_boxes;
  j["ruelle_attractor_boxes"] = r.ruelle_attractor_boxes;
  j["ruelle_repeller_boxes"] = r.ruelle_repeller_boxes;
  j["ruelle_intersection_boxes"] = r.ruelle_intersection_boxes;
  j["overlap"] = r.overlap;
  j["components"] = comps;
  return finish(j);
}

std::string to_json(const CoreCertificate& c) {
  ordered_json stages = ordered_json::array();
  for (const auto& s : c.stages) {
    ordered_json aw = ordered_json::array(), rw = ordered_json::array();
    for (const auto& w : s.attractor_witnesses) aw.push_back(witness_json(w));
    for (const auto& w : s.repeller_witnesses) rw.push_back(witness_json(w));
    ordered_json st;
    st["depth"] = s.stage.depth;
    st["epsilon"] = s.stage.epsilon;
    st["samples_per_axis"] = s.stage.samples_per_axis;
    st["box_count"] = s.box_count;
    st["edge_count"] = s.edge_count;
    st["scc_count"] = s.scc_count;
    st["target_scc"] = s.target_scc;
    st["target_scc_boxes"] = s.target_scc_boxes;
    st["target_recurrent"] = s.target_recurrent;
    st["terminal"] = s.terminal;
    st["initial"] = s.initial;
    st["forward_absorbing"] = region_json(s.forward);
    st["backward_absorbing"] = region_json(s.backward);
    st["attractor_witnesses"] = aw;
    st["repeller_witnesses"] = rw;
    st["passed"] = s.passed;
    st["note"] = s.note;
    stages.push_back(st);
  }
  ordered_json j;
  j["kind"] = "core-certificate";
  j["system"] = c.system;
  j["target"] = point_json(c.target);
  j["core_persistent"] = c.core_persistent;
  j["literal_core"] = c.literal_core;
  if (c.refuted_stage > 0)
    j["refuted_stage"] = c.refuted_stage;
  else
    j["refuted_stage"] = nullptr;
  j["verdict"] = c.verdict;
  j["distinct_attractor_witnesses"] = c.distinct_attractor_witnesses;
  j["distinct_repeller_witnesses"] = c.distinct_repeller_witnesses;
  j["stages"] = stages;
  return finish(j);
}

std::string to_json(const FixedPointSearch& s) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : s.points)
    pts.push_back({{"location", point_json(p.location)},
                   {"period", p.period},
                   {"which_involution", p.which_involution},
                   {"fixed_by_fg", p.fixed_by_fg},
                   {"displacement", p.displacement},
                   {"multipliers", multipliers_json(p.multipliers)},
                   {"type", to_string(p.multipliers.type)}});
  ordered_json j;
  j["kind"] = "symmetric-points";
  j["degenerate"] = s.degenerate;
  j["warning"] = s.warning;
  j["points"] = pts;
  return finish(j);
}

std::string to_json(const ReversibilityReport& r) {
  ordered_json j;
  j["kind"] = "reversibility";
  j["max_residual"] = r.max_residual;
  j["worst"] = point_json(r.worst);
  j["involution_residual"] = r.involution_residual;
  j["pass"] = r.pass;
  return finish(j);
}

std::string to_json(const InvolutionCheck& r) {
  ordered_json j;
  j["kind"] = "involution";
  j["max_residual"] = r.max_residual;
  j["pass"] = r.pass;
  return finish(j);
}

std::string to_json(const SpotCheck& s) {
  ordered_json j;
  j["kind"] = "periodic-spot";
  j["q"] = s.q;
  j["theta"] = s.theta;
  j["epsilon"] = s.epsilon;
  j["matrix"] = std::vector<double>(s.matrix.begin(), s.matrix.end());
  j["determinant"] = s.determinant;
  j["k"] = s.k;
  j["residual"] = s.residual;
  j["max_return_error"] = s.max_return_error;
  j["samples"] = s.samples;
  return finish(j);
}

std::string to_json(const std::vector<flows::Equilibrium>& eq) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : eq)
    arr.push_back({{"name", e.name},
                   {"V", e.V},
                   {"phi", e.phi},
                   {"type", flows::to_string(e.type)},
                   {"eigenvalues", {complex_json(e.eigenvalues[0]), complex_json(e.eigenvalues[1])}}});
  ordered_json j;
  j["kind"] = "equilibria";
  j["equilibria"] = arr;
  return finish(j);
}

std::string to_json(const MapSystem& sys) {
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : sys.params.items()) params[k] = v;
  ordered_json j;
  j["name"] = sys.name;
  j["dim"] = sys.dim;
  j["params"] = params;
  j["domain"] = domain_obj(sys.domain);
  j["has_inverse"] = sys.has_inverse();
  j["inverse_numeric"] = sys.inverse_numeric;
  j["involution"] = sys.involution ? ordered_json(sys.involution->name) : ordered_json(nullptr);
  j["lipschitz_hint"] = sys.lipschitz_hint ? ordered_json(*sys.lipschitz_hint) : ordered_json(nullptr);
  return finish(j);
}

}  // namespace mixdyn
