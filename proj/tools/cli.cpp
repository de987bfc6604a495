#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "mixdyn/boxio.hpp"
#include "mixdyn/chain.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/flows.hpp"
#include "mixdyn/parallel.hpp"
#include "mixdyn/report.hpp"
#include "mixdyn/revcore.hpp"

namespace mixdyn::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// --- small parsing helpers ----------------------------------------------------

double parse_double(const std::string& text, const std::string& what) {
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e || !std::isfinite(v))
    throw ConfigError(what + ": '" + text + "' is not a finite number");
  return v;
}

long parse_long(const std::string& text, const std::string& what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(what + ": '" + text + "' is not an integer");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> v;
  for (const auto& part : split(text, ',')) v.push_back(parse_double(part, what));
  return v;
}

// Fixed, locale-free rendering so CSV files are reproducible byte for byte.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hexnum(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

// Epsilon given either absolutely or as a multiple of the box width ("0.5w").
struct EpsSpec {
  double value = 1.0;
  bool in_widths = true;
};

EpsSpec parse_eps(const std::string& text) {
  if (!text.empty() && text.back() == 'w') return {parse_double(text.substr(0, text.size() - 1), "epsilon"), true};
  return {parse_double(text, "epsilon"), false};
}

EpsSpec eps_from_json(const json& j) {
  if (j.is_string()) return parse_eps(j.get<std::string>());
  if (j.is_number()) return {j.get<double>(), false};
  throw ConfigError("epsilon must be a number or a string like \"0.5w\"");
}

struct StageSpec {
  int depth = 8;
  EpsSpec epsilon{};
  int samples = 4;
};

std::vector<StageSpec> parse_schedule(const std::string& text) {
  std::vector<StageSpec> out;
  for (const auto& item : split(text, ',')) {
    const auto f = split(item, ':');
    if (f.size() < 2 || f.size() > 3) throw ConfigError("schedule entries look like depth:epsilon[:samples]");
    StageSpec s;
    s.depth = static_cast<int>(parse_long(f[0], "schedule depth"));
    s.epsilon = parse_eps(f[1]);
    if (f.size() == 3) s.samples = static_cast<int>(parse_long(f[2], "schedule samples"));
    out.push_back(s);
  }
  return out;
}

// --- configuration --------------------------------------------------------------

struct SweepSpec {
  std::string param;
  std::vector<double> values;
  std::vector<ParamSet> deltas;  // empty or one per value
};

struct RunConfig {
  std::string system;
  ParamSet params;
  std::optional<std::string> involution;
  std::optional<Domain> domain;
  std::vector<StageSpec> schedule;
  std::string pad = "auto";
  std::uint64_t seed = 0;
  int workers = default_workers();
  std::uint64_t box_budget = kDefaultBoxBudget;
  std::uint64_t edge_budget = kDefaultEdgeBudget;
  std::string out = ".";
  std::vector<std::string> formats;
  std::optional<std::string> cache;
  std::optional<std::vector<double>> target;

  std::optional<SweepSpec> sweep;

  std::optional<std::vector<double>> x0;
  long steps = 1000;
  int trials = 1;

  std::string flow = "limit";
  double D = 0.0;
  double beta = 1.0;
  std::vector<std::array<double, 2>> seeds;
  double T = 10.0;
  double step = 1e-3;
  std::array<int, 2> level_grid{41, 64};

  int verify_samples = 100;
  double tol = 1e-8;
  std::optional<double> radius;
  std::optional<std::pair<double, double>> range;
  int grid = 400;
  int period = 1;
};

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (std::find_if(known.begin(), known.end(), [&](const char* n) { return k == n; }) == known.end())
      throw ConfigError("unknown key '" + k + "' in " + where);
}

ParamSet params_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  ParamSet p;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError(where + "." + k + " must be a number");
    p.set(k, v.get<double>());
  }
  return p;
}

std::vector<StageSpec> schedule_from_json(const json& j) {
  if (j.is_string()) return parse_schedule(j.get<std::string>());
  if (!j.is_array()) throw ConfigError("schedule must be a string or an array");
  std::vector<StageSpec> out;
  for (const auto& e : j) {
    reject_unknown(e, {"depth", "epsilon", "samples"}, "schedule entry");
    StageSpec s;
    s.depth = e.at("depth").get<int>();
    if (e.contains("epsilon")) s.epsilon = eps_from_json(e["epsilon"]);
    if (e.contains("samples")) s.samples = e["samples"].get<int>();
    out.push_back(s);
  }
  return out;
}

std::vector<double> linspace(double start, double stop, long count) {
  if (count < 2) throw ConfigError("sweep count must be at least 2");
  std::vector<double> v;
  for (long i = 0; i < count; ++i) v.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
  return v;
}

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep looks like name=start:stop:count or name=v1,v2,...");
  SweepSpec s;
  s.param = text.substr(0, eq);
  const std::string rhs = text.substr(eq + 1);
  const auto f = split(rhs, ':');
  if (f.size() == 3)
    s.values = linspace(parse_double(f[0], "sweep start"), parse_double(f[1], "sweep stop"), parse_long(f[2], "sweep count"));
  else
    s.values = parse_list(rhs, "sweep value");
  return s;
}

void load_config_file(const std::string& path, RunConfig& c) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"system", "params", "involution", "domain", "schedule", "pad", "seed", "workers", "budget", "out",
                  "format", "cache", "target", "sweep", "noisy", "portrait", "verify"},
                 "config");
  try {
    if (j.contains("system")) c.system = j["system"].get<std::string>();
    if (j.contains("params")) c.params = params_from_json(j["params"], "params");
    if (j.contains("involution")) c.involution = j["involution"].get<std::string>();
    if (j.contains("domain")) {
      const auto& d = j["domain"];
      reject_unknown(d, {"lower", "upper", "periodic"}, "domain");
      const auto lo = d.at("lower").get<std::vector<double>>();
      const auto hi = d.at("upper").get<std::vector<double>>();
      auto per = d.contains("periodic") ? d["periodic"].get<std::vector<bool>>() : std::vector<bool>(lo.size(), false);
      if (lo.size() != hi.size() || per.size() != lo.size() || lo.empty() || lo.size() > kMaxDim)
        throw ConfigError("domain arrays must have equal length between 1 and 3");
      Domain dom;
      dom.dim = static_cast<int>(lo.size());
      for (std::size_t i = 0; i < lo.size(); ++i) {
        dom.lower[i] = lo[i];
        dom.upper[i] = hi[i];
        dom.periodic[i] = per[i];
      }
      dom.validate();
      c.domain = dom;
    }
    if (j.contains("schedule")) c.schedule = schedule_from_json(j["schedule"]);
    if (j.contains("pad")) c.pad = j["pad"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("budget")) {
      reject_unknown(j["budget"], {"boxes", "edges"}, "budget");
      if (j["budget"].contains("boxes")) c.box_budget = j["budget"]["boxes"].get<std::uint64_t>();
      if (j["budget"].contains("edges")) c.edge_budget = j["budget"]["edges"].get<std::uint64_t>();
    }
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("format")) {
      if (j["format"].is_string())
        c.formats = split(j["format"].get<std::string>(), ',');
      else
        c.formats = j["format"].get<std::vector<std::string>>();
    }
    if (j.contains("cache")) c.cache = j["cache"].get<std::string>();
    if (j.contains("target")) c.target = j["target"].get<std::vector<double>>();
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      reject_unknown(s, {"param", "values", "start", "stop", "count", "deltas"}, "sweep");
      SweepSpec sw;
      sw.param = s.at("param").get<std::string>();
      if (s.contains("values"))
        sw.values = s["values"].get<std::vector<double>>();
      else
        sw.values = linspace(s.at("start").get<double>(), s.at("stop").get<double>(), s.at("count").get<long>());
      if (s.contains("deltas"))
        for (const auto& d : s["deltas"]) sw.deltas.push_back(params_from_json(d, "sweep.deltas[]"));
      c.sweep = sw;
    }
    if (j.contains("noisy")) {
      const auto& n = j["noisy"];
      reject_unknown(n, {"x0", "steps", "trials"}, "noisy");
      if (n.contains("x0")) c.x0 = n["x0"].get<std::vector<double>>();
      if (n.contains("steps")) c.steps = n["steps"].get<long>();
      if (n.contains("trials")) c.trials = n["trials"].get<int>();
    }
    if (j.contains("portrait")) {
      const auto& p = j["portrait"];
      reject_unknown(p, {"flow", "D", "beta", "seeds", "T", "step", "level_grid"}, "portrait");
      if (p.contains("flow")) c.flow = p["flow"].get<std::string>();
      if (p.contains("D")) c.D = p["D"].get<double>();
      if (p.contains("beta")) c.beta = p["beta"].get<double>();
      if (p.contains("seeds")) c.seeds = p["seeds"].get<std::vector<std::array<double, 2>>>();
      if (p.contains("T")) c.T = p["T"].get<double>();
      if (p.contains("step")) c.step = p["step"].get<double>();
      if (p.contains("level_grid")) c.level_grid = p["level_grid"].get<std::array<int, 2>>();
    }
    if (j.contains("verify")) {
      const auto& v = j["verify"];
      reject_unknown(v, {"samples", "tol", "radius", "range", "grid", "period"}, "verify");
      if (v.contains("samples")) c.verify_samples = v["samples"].get<int>();
      if (v.contains("tol")) c.tol = v["tol"].get<double>();
      if (v.contains("radius")) c.radius = v["radius"].get<double>();
      if (v.contains("range")) {
        const auto r = v["range"].get<std::array<double, 2>>();
        c.range = std::pair{r[0], r[1]};
      }
      if (v.contains("grid")) c.grid = v["grid"].get<int>();
      if (v.contains("period")) c.period = v["period"].get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

bool wants(const RunConfig& c, const std::string& fmt) {
  return std::find(c.formats.begin(), c.formats.end(), fmt) != c.formats.end();
}

// --- shared machinery -----------------------------------------------------------

MapSystem build_system(const RunConfig& c, const ParamSet& params) {
  if (c.system.empty()) throw ConfigError("no system given (use --system or \"system\" in the config)");
  MapSystem sys = make_system(c.system, params);
  if (c.domain) {
    if (c.domain->dim != sys.dim) throw ConfigError("domain dimension does not match the system");
    sys.domain = *c.domain;
  }
  if (c.involution) attach_involution(sys, *c.involution);
  return sys;
}

std::vector<Stage> resolve_schedule(const RunConfig& c, const Domain& domain) {
  std::vector<Stage> out;
  for (const auto& s : c.schedule) {
    if (s.depth < 0 || s.depth > 30) throw ConfigError("stage depth must lie in [0, 30]");
    Stage st;
    st.depth = s.depth;
    st.samples_per_axis = s.samples;
    double width = 0.0;
    for (int i = 0; i < domain.dim; ++i) width = std::max(width, domain.extent(i) / std::ldexp(1.0, s.depth));
    st.epsilon = s.epsilon.in_widths ? s.epsilon.value * width : s.epsilon.value;
    out.push_back(st);
  }
  validate_schedule(out);
  return out;
}

Point to_point(const std::vector<double>& v, int dim, const std::string& what) {
  if (static_cast<int>(v.size()) != dim) throw ConfigError(what + " must have " + std::to_string(dim) + " coordinates");
  Point p(dim);
  for (int i = 0; i < dim; ++i) p[i] = v[static_cast<std::size_t>(i)];
  return p;
}

Point domain_center(const Domain& d) {
  Point p(d.dim);
  for (int i = 0; i < d.dim; ++i) p[i] = 0.5 * (d.lower[i] + d.upper[i]);
  return p;
}

std::string cache_key(const MapSystem& sys, const BoxSet& bs, double eps, const SampleScheme& scheme) {
  std::string k = sys.name;
  for (const auto& [n, v] : sys.params.items()) k += ";" + n + "=" + hexnum(v);
  k += ";domain=" + domain_json(sys.domain);
  k += ";depth=" + std::to_string(bs.depth()) + ";eps=" + hexnum(eps);
  k += ";samples=" + std::to_string(scheme.samples_per_axis) + ";pad=" + to_string(scheme.pad);
  return k;
}

// Builds a graph, going through the on-disk cache when one is configured.
struct GraphSource {
  std::optional<std::string> dir;

  TransitionGraph operator()(const MapSystem& sys, const BoxSet& bs, double eps, const GraphOptions& go) const {
    if (!dir || bs.size() != bs.total_cells()) return build_graph(sys, bs, eps, go);
    char name[40];
    std::snprintf(name, sizeof name, "graph-%016llx.bin",
                  static_cast<unsigned long long>(fnv1a(cache_key(sys, bs, eps, go.scheme))));
    const fs::path path = fs::path(*dir) / name;
    if (fs::exists(path)) {
      try {
        TransitionGraph g = load_graph(path.string());
        if (g.boxes() == bs && g.epsilon() == eps && g.scheme() == go.scheme) return g;
      } catch (const ConfigError&) {
        // stale or damaged entry; rebuild below
      }
    }
    TransitionGraph g = build_graph(sys, bs, eps, go);
    fs::create_directories(*dir);
    save_graph(g, path.string());
    return g;
  }
};

struct StageGraph {
  TransitionGraph graph;
  ChainDecomposition dec;
};

StageGraph final_stage_graph(const RunConfig& c, const MapSystem& sys, const Stage& st) {
  const BoxSet cover = initial_cover(sys.domain, st.depth, c.box_budget);
  GraphOptions go;
  go.scheme = {st.samples_per_axis, pad_mode_from_string(c.pad)};
  go.workers = c.workers;
  go.edge_budget = c.edge_budget;
  StageGraph sg;
  sg.graph = GraphSource{c.cache}(sys, cover, st.epsilon, go);
  sg.dec = decompose(sg.graph);
  return sg;
}

fs::path out_path(const RunConfig& c, const std::string& file) {
  fs::create_directories(c.out);
  return fs::path(c.out) / file;
}

void write_raster(const RunConfig& c, const std::string& file, const BoxSet& frame,
                  std::span<const std::uint64_t> keys, std::span<const std::uint8_t> levels) {
  if (frame.dim() > 2) return;  // no raster for 3D phase spaces
  write_pgm(out_path(c, file).string(), make_raster(frame, keys, levels));
}

std::string box_columns(int dim) {
  std::string h;
  for (int i = 0; i < dim; ++i) h += "i" + std::to_string(i) + ",";
  for (int i = 0; i < dim; ++i) h += "x" + std::to_string(i) + ",";
  return h;
}

std::string box_fields(const BoxSet& frame, std::uint64_t key) {
  std::string row;
  const BoxId id = frame.decode(key);
  const Point ctr = frame.center(key);
  for (int i = 0; i < frame.dim(); ++i) row += std::to_string(id.coords[i]) + ",";
  for (int i = 0; i < frame.dim(); ++i) row += num(ctr[i]) + ",";
  return row;
}

// --- commands ---------------------------------------------------------------------

int cmd_classify(const RunConfig& c, std::ostream& out) {
  const MapSystem sys = build_system(c, c.params);
  const auto schedule = resolve_schedule(c, sys.domain);
  const Stage& st = schedule.back();
  const StageGraph sg = final_stage_graph(c, sys, st);
  AttractorReport rep = make_report(sys.name, sg.graph, sg.dec);
  write_text(out_path(c, "report.json").string(), to_json(rep));
  const auto levels = role_levels(sg.graph, sg.dec);
  if (wants(c, "pgm")) write_raster(c, "portrait.pgm", sg.graph.boxes(), sg.graph.boxes().keys(), levels);
  if (wants(c, "csv")) {
    std::string csv = box_columns(sys.dim) + "scc,level\n";
    const BoxSet& bs = sg.graph.boxes();
    for (std::size_t i = 0; i < bs.size(); ++i)
      csv += box_fields(bs, bs.keys()[i]) + std::to_string(sg.dec.scc_of[i]) + "," + std::to_string(levels[i]) + "\n";
    write_text(out_path(c, "boxes.csv").string(), csv);
  }
  out << "classification: " << to_string(rep.classification) << ", attractors: " << rep.n_attractors
      << ", repellers: " << rep.n_repellers << ", overlap: " << num(rep.overlap) << "\n";
  return kExitOk;
}

int cmd_core_scan(const RunConfig& c, std::ostream& out) {
  const MapSystem sys = build_system(c, c.params);
  const auto schedule = resolve_schedule(c, sys.domain);
  if (schedule.size() < 2) throw ConfigError("core-scan needs at least two schedule stages");
  const Point target = c.target ? to_point(*c.target, sys.dim, "target") : domain_center(sys.domain);
  ScanOptions so;
  so.workers = c.workers;
  so.pad = pad_mode_from_string(c.pad);
  so.box_budget = c.box_budget;
  so.edge_budget = c.edge_budget;
  so.graph_builder = GraphSource{c.cache};
  const CoreCertificate cert = core_scan(sys, schedule, target, so);
  write_text(out_path(c, "certificate.json").string(), to_json(cert));
  out << "core-persistent: " << (cert.core_persistent ? "yes" : "no") << ", stages: " << cert.stages.size()
      << ", attractor-witnesses: " << cert.distinct_attractor_witnesses
      << ", repeller-witnesses: " << cert.distinct_repeller_witnesses << "\n";
  return kExitOk;
}

int cmd_merge_scan(const RunConfig& c, std::ostream& out) {
  if (!c.sweep) throw ConfigError("merge-scan needs a sweep (--sweep or \"sweep\" in the config)");
  const SweepSpec& sw = *c.sweep;
  if (sw.values.size() < 2) throw ConfigError("a sweep needs at least two values");
  if (!sw.deltas.empty() && sw.deltas.size() != sw.values.size())
    throw ConfigError("sweep deltas must match the number of values");
  const bool degenerate = sw.param == "none";
  {
    // The swept parameter must belong to the system; checked once up front.
    const MapSystem probe = build_system(c, c.params);
    if (!degenerate && !probe.params.has(sw.param)) {
      ParamSet trial = c.params;
      trial.set(sw.param, sw.values.front());
      build_system(c, trial);  // throws for unknown names
    }
  }
  std::string csv = "value,overlap,n_attractors,n_repellers,classification,note\n";
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    const double v = sw.values[i];
    ParamSet params = c.params;
    if (!degenerate) params.set(sw.param, v);
    if (!sw.deltas.empty())
      for (const auto& [k, dv] : sw.deltas[i].items()) params.set(k, dv);
    ordered_json row;
    row["value"] = v;
    try {
      const MapSystem sys = build_system(c, params);
      const auto schedule = resolve_schedule(c, sys.domain);
      const StageGraph sg = final_stage_graph(c, sys, schedule.back());
      const AttractorReport rep = make_report(sys.name, sg.graph, sg.dec);
      csv += num(v) + "," + num(rep.overlap) + "," + std::to_string(rep.n_attractors) + "," +
             std::to_string(rep.n_repellers) + "," + to_string(rep.classification) + ",\n";
      row["overlap"] = rep.overlap;
      row["n_attractors"] = rep.n_attractors;
      row["n_repellers"] = rep.n_repellers;
      row["classification"] = to_string(rep.classification);
      row["note"] = "";
      if (wants(c, "pgm")) {
        char name[32];
        std::snprintf(name, sizeof name, "merge-%03zu.pgm", i);
        write_raster(c, name, sg.graph.boxes(), sg.graph.boxes().keys(), role_levels(sg.graph, sg.dec));
      }
    } catch (const std::exception& e) {
      // Per-value failures are data; the scan goes on.
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      csv += num(v) + ",,,,error," + msg + "\n";
      row["overlap"] = nullptr;
      row["n_attractors"] = nullptr;
      row["n_repellers"] = nullptr;
      row["classification"] = "error";
      row["note"] = msg;
    }
    rows.push_back(row);
  }
  write_text(out_path(c, "merge_scan.csv").string(), csv);
  if (wants(c, "json")) {
    ordered_json j;
    j["kind"] = "merge-scan";
    j["system"] = c.system;
    j["param"] = sw.param;
    j["rows"] = rows;
    write_text(out_path(c, "merge_scan.json").string(), j.dump(2) + "\n");
  }
  out << "merge-scan: " << sw.values.size() << " values\n";
  return kExitOk;
}

flows::NormalFormParams nf_params(const ParamSet& p) {
  flows::NormalFormParams nf;
  nf.p = static_cast<int>(p.get_or("p", 1.0));
  nf.q = static_cast<int>(p.get_or("q", 5.0));
  nf.mu = p.get_or("mu", 0.0);
  nf.delta = p.get_or("delta", 0.0);
  nf.B = p.get_or("B", 1.0);
  nf.C = p.get_or("C", -1.0);
  nf.omega_poly = {p.get_or("omega1", 1.0), p.get_or("omega2", 0.0), p.get_or("omega3", 0.0)};
  while (nf.omega_poly.size() > 1 && nf.omega_poly.back() == 0.0) nf.omega_poly.pop_back();
  nf.validate();
  return nf;
}

int cmd_portrait(const RunConfig& c, std::ostream& out) {
  if (!(c.step > 0.0) || !std::isfinite(c.T)) throw ConfigError("portrait needs a positive step and finite T");
  const std::string& flow = c.flow;
  if (flow != "limit" && flow != "rescaled" && flow != "polar")
    throw ConfigError("portrait flow must be limit, rescaled or polar");
  const double rho0 = c.params.get_or("rho0", 0.05);
  flows::NormalFormParams nf = flow == "limit" ? flows::NormalFormParams{} : nf_params(c.params);
  if (flow == "polar" && !c.params.has("mu") && !c.params.has("delta")) nf = flows::rescaled_params(nf, rho0, c.D);
  double beta = c.beta;
  if (flow == "rescaled") beta = flows::rescale(nf, rho0, c.D).beta;
  if (beta == 0.0) throw ConfigError("beta must be non-zero");

  auto field = [&](const flows::Vec2& s) -> flows::Vec2 {
    if (flow == "limit") return flows::limit_field(s.a, s.b, c.D, beta);
    if (flow == "rescaled") return flows::rescaled_field(s.a, s.b, nf, rho0, c.D);
    if (s.a < 0.0) return {std::nan(""), std::nan("")};
    return flows::polar_field(s.a, s.b, nf);
  };

  std::vector<std::array<double, 2>> seeds = c.seeds;
  if (seeds.empty())
    for (double v : {-1.5, -0.5, 0.5, 1.5})
      for (double phi : {-1.5707963267948966, 1.5707963267948966}) seeds.push_back({v, phi});

  const std::string first = flow == "polar" ? "rho" : "V";
  std::vector<flows::Trajectory<flows::Vec2>> trajs(seeds.size());
  parallel_for(seeds.size(), c.workers, [&](std::size_t i) {
    trajs[i] = flows::integrate(field, flows::Vec2{seeds[i][0], seeds[i][1]}, c.T, c.step);
  });
  std::string index = "index," + first + "0,phi0,points,blew_up\n";
  std::size_t blown = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& tr = trajs[i];
    std::string csv = "t," + first + ",phi\n";
    for (std::size_t k = 0; k < tr.states.size(); ++k)
      csv += num(tr.times[k]) + "," + num(tr.states[k].a) + "," + num(tr.states[k].b) + "\n";
    char name[40];
    std::snprintf(name, sizeof name, "trajectory-%03zu.csv", i);
    write_text(out_path(c, name).string(), csv);
    index += std::to_string(i) + "," + num(seeds[i][0]) + "," + num(seeds[i][1]) + "," +
             std::to_string(tr.states.size()) + "," + (tr.blew_up ? "1" : "0") + "\n";
    blown += tr.blew_up ? 1 : 0;
  }
  write_text(out_path(c, "trajectories.csv").string(), index);

  std::size_t n_eq = 0;
  if (flow != "polar") {
    const auto eq = flows::equilibria(c.D, beta);
    n_eq = eq.size();
    std::string csv = "name,V,phi,type,lambda1_re,lambda1_im,lambda2_re,lambda2_im\n";
    for (const auto& e : eq)
      csv += e.name + "," + num(e.V) + "," + num(e.phi) + "," + flows::to_string(e.type) + "," +
             num(e.eigenvalues[0].real()) + "," + num(e.eigenvalues[0].imag()) + "," + num(e.eigenvalues[1].real()) +
             "," + num(e.eigenvalues[1].imag()) + "\n";
    write_text(out_path(c, "equilibria.csv").string(), csv);
    if (wants(c, "json")) write_text(out_path(c, "equilibria.json").string(), to_json(eq));

    // First-integral values on a (V, phi) grid, for contour plots of the level sets.
    const int nv = c.level_grid[0], np = c.level_grid[1];
    if (nv < 2 || np < 2) throw ConfigError("level_grid needs at least 2 x 2 points");
    std::string lv = "V,phi,K\n";
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < np; ++b) {
        const double V = -2.0 + 4.0 * a / (nv - 1);
        const double phi = -std::numbers::pi + 2.0 * std::numbers::pi * b / np;
        if (std::abs(c.D + V) < 1e-9) continue;
        lv += num(V) + "," + num(phi) + "," + num(flows::first_integral_K(V, phi, c.D, beta)) + "\n";
      }
    write_text(out_path(c, "levels.csv").string(), lv);
  }
  out << "portrait: " << seeds.size() << " trajectories (" << blown << " blew up), " << n_eq << " equilibria\n";
  return kExitOk;
}

std::vector<Point> verify_samples(const RunConfig& c, const Domain& domain) {
  Domain box = domain;
  if (c.radius) {
    const Point ctr = domain_center(domain);
    for (int i = 0; i < box.dim; ++i) {
      box.lower[i] = std::max(domain.lower[i], ctr[i] - *c.radius);
      box.upper[i] = std::min(domain.upper[i], ctr[i] + *c.radius);
    }
    box.validate();
  }
  if (c.verify_samples < 1) throw ConfigError("verify needs at least one sample");
  const int per_axis =
      std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(c.verify_samples), 1.0 / box.dim))));
  return sample_grid(box, per_axis);
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  const MapSystem sys = build_system(c, c.params);
  if (!sys.involution) throw ConfigError("system '" + sys.name + "' has no involution; pass --involution");
  const auto samples = verify_samples(c, sys.domain);
  const ReversibilityReport rev = verify_reversibility(sys, samples, c.tol);
  const InvolutionCheck inv = check_involution(sys);
  ordered_json j;
  j["kind"] = "verify";
  j["system"] = sys.name;
  j["involution"] = sys.involution->name;
  j["samples"] = samples.size();
  j["tol"] = c.tol;
  j["pass"] = rev.pass && inv.pass;
  j["reversibility"] = ordered_json::parse(to_json(rev));
  j["involution_check"] = ordered_json::parse(to_json(inv));
  std::size_t n_points = 0;
  if (sys.involution->fixed_line) {
    LineSearchOptions lo;
    lo.grid = c.grid;
    lo.period = c.period;
    lo.workers = c.workers;
    const FixedPointSearch fp = find_symmetric_fixed_points(sys, lo, c.range);
    n_points = fp.points.size();
    j["symmetric_points"] = ordered_json::parse(to_json(fp));
  } else {
    j["symmetric_points"] = nullptr;
  }
  if (sys.name == "periodic_spot" && !sys.params.has("eps")) {
    const double theta = sys.params.get_or("theta", 2.0 * std::numbers::pi / 5.0);
    j["periodic_spot"] = ordered_json::parse(to_json(periodic_spot_check(static_cast<int>(sys.params.get("q")), theta)));
  } else {
    j["periodic_spot"] = nullptr;
  }
  write_text(out_path(c, "verify.json").string(), j.dump(2) + "\n");
  out << "reversible: " << (rev.pass ? "yes" : "no") << ", residual: " << num(rev.max_residual)
      << ", involution residual: " << num(inv.max_residual) << ", symmetric points: " << n_points << "\n";
  return kExitOk;
}

int cmd_noisy(const RunConfig& c, std::ostream& out) {
  const MapSystem sys = build_system(c, c.params);
  const auto schedule = resolve_schedule(c, sys.domain);
  const Stage& st = schedule.back();
  if (!(st.epsilon > 0.0)) throw ConfigError("noisy needs epsilon > 0");
  const Point x0 = c.x0 ? to_point(*c.x0, sys.dim, "x0") : domain_center(sys.domain);
  if (!sys.domain.contains(x0)) throw ConfigError("x0 lies outside the domain");
  if (c.steps < 1 || c.trials < 1) throw ConfigError("noisy needs steps >= 1 and trials >= 1");
  const BoxSet bs = initial_cover(sys.domain, st.depth, c.box_budget);
  NoisyOptions no;
  no.epsilon = st.epsilon;
  no.n_steps = c.steps;
  no.n_trials = c.trials;
  no.seed = c.seed;
  no.workers = c.workers;
  const NoisyResult res = noisy_attractor(sys, x0, bs, no);

  // Cross-check: the Monte-Carlo support must sit inside the graph's reach.
  const StageGraph sg = final_stage_graph(c, sys, st);
  const BoxSet start(sys.domain, st.depth, {*bs.key_of(sys.domain.reduce(x0))});
  const BoxSet reach = attainable_from(sg.graph, start, 0);
  const bool contained = is_subset(res.support, reach);

  std::uint64_t peak = 0;
  for (auto v : res.counts) peak = std::max(peak, v);
  std::string csv = box_columns(sys.dim) + "count\n";
  std::vector<std::uint64_t> keys;
  std::vector<std::uint8_t> levels;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (res.counts[i] == 0) continue;
    csv += box_fields(bs, bs.keys()[i]) + std::to_string(res.counts[i]) + "\n";
    keys.push_back(bs.keys()[i]);
    levels.push_back(static_cast<std::uint8_t>(1 + (254 * res.counts[i]) / peak));
  }
  write_text(out_path(c, "histogram.csv").string(), csv);
  write_raster(c, "heat.pgm", bs, keys, levels);
  ordered_json j;
  j["kind"] = "noisy";
  j["system"] = sys.name;
  j["depth"] = st.depth;
  j["epsilon"] = st.epsilon;
  j["x0"] = std::vector<double>(x0.x.begin(), x0.x.begin() + x0.dim);
  j["n_steps"] = c.steps;
  j["n_trials"] = c.trials;
  j["seed"] = c.seed;
  j["total_visits"] = res.total_visits;
  j["exits"] = res.exits;
  j["support_boxes"] = res.support.size();
  j["reachable_boxes"] = reach.size();
  j["contained_in_reachable"] = contained;
  write_text(out_path(c, "noisy.json").string(), j.dump(2) + "\n");
  out << "noisy: support " << res.support.size() << " boxes, exits " << res.exits << ", contained: "
      << (contained ? "yes" : "no") << "\n";
  return kExitOk;
}

// --- flag plumbing ------------------------------------------------------------------

struct Flags {
  std::string config, system, depth, epsilon, samples, schedule, seed, out, workers, involution, cache, target, pad;
  std::vector<std::string> params, formats;
  std::string sweep, x0, steps, trials, flow, D, beta, seeds, T, step, tol, radius, range, grid, period;
  std::string box_budget, edge_budget;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file");
  app.add_option("--system", f.system, "builtin system name");
  app.add_option("--param", f.params, "system parameter k=v (repeatable)");
  app.add_option("--depth", f.depth, "subdivision depth of the final stage");
  app.add_option("--epsilon", f.epsilon, "noise radius of the final stage (suffix w: box widths)");
  app.add_option("--samples", f.samples, "sample points per box axis of the final stage");
  app.add_option("--schedule", f.schedule, "stages d:e[:s],d:e[:s],...");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--format", f.formats, "json, csv or pgm (repeatable)");
  app.add_option("--workers", f.workers, "worker threads");
  app.add_option("--involution", f.involution, "swap, negate or conj");
  app.add_option("--cache", f.cache, "graph cache directory");
  app.add_option("--target", f.target, "core-scan target x,y");
  app.add_option("--pad", f.pad, "auto, lipschitz, empirical or none");
  app.add_option("--sweep", f.sweep, "merge-scan sweep name=start:stop:count or name=v1,v2,...");
  app.add_option("--x0", f.x0, "noisy start point x,y");
  app.add_option("--steps", f.steps, "noisy steps per trial");
  app.add_option("--trials", f.trials, "noisy trials");
  app.add_option("--flow", f.flow, "portrait flow: limit, rescaled or polar");
  app.add_option("--D", f.D, "portrait D");
  app.add_option("--beta", f.beta, "portrait beta");
  app.add_option("--seeds", f.seeds, "portrait seeds a:phi,a:phi,...");
  app.add_option("--T", f.T, "portrait integration time");
  app.add_option("--step", f.step, "portrait RK4 step");
  app.add_option("--tol", f.tol, "verify tolerance");
  app.add_option("--radius", f.radius, "verify sample half-width around the domain centre");
  app.add_option("--range", f.range, "verify search range lo:hi along Fix(g)");
  app.add_option("--grid", f.grid, "verify search grid size");
  app.add_option("--period", f.period, "verify period");
  app.add_option("--box-budget", f.box_budget, "largest box count per cover");
  app.add_option("--edge-budget", f.edge_budget, "largest edge count per graph");
}

std::uint64_t budget_flag(const std::string& text, const char* what) {
  const long v = parse_long(text, what);
  if (v < 1) throw ConfigError(std::string(what) + " must be positive");
  return static_cast<std::uint64_t>(v);
}

RunConfig make_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) load_config_file(f.config, c);
  if (!f.system.empty()) c.system = f.system;
  for (const auto& p : f.params) {
    auto [k, v] = ParamSet::parse_assignment(p);
    c.params.set(k, v);
  }
  if (!f.schedule.empty()) c.schedule = parse_schedule(f.schedule);
  if (c.schedule.empty()) c.schedule.push_back(StageSpec{});
  StageSpec& last = c.schedule.back();
  if (!f.depth.empty()) last.depth = static_cast<int>(parse_long(f.depth, "--depth"));
  if (!f.epsilon.empty()) last.epsilon = parse_eps(f.epsilon);
  if (!f.samples.empty()) last.samples = static_cast<int>(parse_long(f.samples, "--samples"));
  if (!f.seed.empty()) {
    const long s = parse_long(f.seed, "--seed");
    if (s < 0) throw ConfigError("--seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (!f.out.empty()) c.out = f.out;
  if (!f.formats.empty()) {
    c.formats.clear();
    for (const auto& s : f.formats)
      for (const auto& part : split(s, ',')) c.formats.push_back(part);
  }
  if (!f.box_budget.empty()) c.box_budget = budget_flag(f.box_budget, "--box-budget");
  if (!f.edge_budget.empty()) c.edge_budget = budget_flag(f.edge_budget, "--edge-budget");
  if (!f.workers.empty()) c.workers = static_cast<int>(parse_long(f.workers, "--workers"));
  if (!f.involution.empty()) c.involution = f.involution;
  if (!f.cache.empty()) c.cache = f.cache;
  if (!f.target.empty()) c.target = parse_list(f.target, "--target");
  if (!f.pad.empty()) c.pad = f.pad;
  if (!f.sweep.empty()) c.sweep = parse_sweep(f.sweep);
  if (!f.x0.empty()) c.x0 = parse_list(f.x0, "--x0");
  if (!f.steps.empty()) c.steps = parse_long(f.steps, "--steps");
  if (!f.trials.empty()) c.trials = static_cast<int>(parse_long(f.trials, "--trials"));
  if (!f.flow.empty()) c.flow = f.flow;
  if (!f.D.empty()) c.D = parse_double(f.D, "--D");
  if (!f.beta.empty()) c.beta = parse_double(f.beta, "--beta");
  if (!f.seeds.empty()) {
    c.seeds.clear();
    for (const auto& s : split(f.seeds, ',')) {
      const auto ab = split(s, ':');
      if (ab.size() != 2) throw ConfigError("--seeds entries look like a:phi");
      c.seeds.push_back({parse_double(ab[0], "--seeds"), parse_double(ab[1], "--seeds")});
    }
  }
  if (!f.T.empty()) c.T = parse_double(f.T, "--T");
  if (!f.step.empty()) c.step = parse_double(f.step, "--step");
  if (!f.tol.empty()) c.tol = parse_double(f.tol, "--tol");
  if (!f.radius.empty()) c.radius = parse_double(f.radius, "--radius");
  if (!f.range.empty()) {
    const auto r = split(f.range, ':');
    if (r.size() != 2) throw ConfigError("--range looks like lo:hi");
    c.range = std::pair{parse_double(r[0], "--range"), parse_double(r[1], "--range")};
  }
  if (!f.grid.empty()) c.grid = static_cast<int>(parse_long(f.grid, "--grid"));
  if (!f.period.empty()) c.period = static_cast<int>(parse_long(f.period, "--period"));

  if (c.formats.empty()) c.formats = {"json", "pgm"};
  for (const auto& fmt : c.formats)
    if (fmt != "json" && fmt != "csv" && fmt != "pgm") throw ConfigError("unknown format '" + fmt + "'");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  pad_mode_from_string(c.pad);
  return c;
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Box-covering analysis of attractors, repellers and reversible cores", "mixdyn"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"classify", "conservative / dissipative / mixed report of the final stage"},
      {"core-scan", "follow the target component through the schedule"},
      {"merge-scan", "Ruelle attractor / repeller overlap along a parameter sweep"},
      {"portrait", "trajectories, equilibria and level sets of the planar flows"},
      {"verify", "reversibility, involution and symmetric-point checks"},
      {"noisy", "Monte-Carlo epsilon-attractor histogram"}};
  for (const auto& [name, help] : commands) add_flags(*app.add_subcommand(name, help), flags);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mixdyn: error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const RunConfig c = make_config(flags);
    if (cmd == "classify") return cmd_classify(c, out);
    if (cmd == "core-scan") return cmd_core_scan(c, out);
    if (cmd == "merge-scan") return cmd_merge_scan(c, out);
    if (cmd == "portrait") return cmd_portrait(c, out);
    if (cmd == "verify") return cmd_verify(c, out);
    return cmd_noisy(c, out);
  } catch (const ConfigError& e) {
    err << "mixdyn: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BudgetExceeded& e) {
    err << "mixdyn: budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const NumericError& e) {
    err << "mixdyn: numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "mixdyn: config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace mixdyn::cli
