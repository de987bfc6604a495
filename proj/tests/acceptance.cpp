// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 only if
// the failing criteria are exactly those listed with --expect-fail (criteria
// known to be out of reach are documented in the README, and listing them
// keeps a surprise pass from going unnoticed).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "mixdyn/boxio.hpp"
#include "mixdyn/chain.hpp"
#include "mixdyn/flows.hpp"
#include "mixdyn/revcore.hpp"

using namespace mixdyn;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double box_width(const Domain& d, int depth) {
  double w = 0.0;
  for (int i = 0; i < d.dim; ++i) w = std::max(w, d.extent(i) / std::ldexp(1.0, depth));
  return w;
}

Outcome c1_conservative() {
  const auto t0 = std::chrono::steady_clock::now();
  const MapSystem sys = make_system("cat_map");
  const BoxSet cover = initial_cover(sys.domain, 8);
  const TransitionGraph g = build_graph(sys, cover, box_width(sys.domain, 8));
  const ChainDecomposition dec = decompose(g);
  const Classification c = classify(g, dec);
  const double t = seconds_since(t0);
  const bool one = dec.scc_count() == 1 && dec.members[0].size() == cover.size();
  return {one && c == Classification::Conservative && t < 30.0,
          fmt("sccs=%zu covering %zu/%zu boxes, %s, %.1f s", dec.scc_count(), dec.members[0].size(), cover.size(),
              to_string(c).c_str(), t)};
}

Outcome c2_semistable() {
  const MapSystem sys = make_system("circle_semistable");
  bool all = true;
  std::string counts;
  for (int d = 7; d <= 9; ++d) {
    const BoxSet cover = initial_cover(sys.domain, d);
    const TransitionGraph g = build_graph(sys, cover, box_width(sys.domain, d));
    const std::size_t rec = chain_recurrent(g, decompose(g)).size();
    all = all && rec == cover.size();
    counts += fmt("d%d %zu/%zu ", d, rec, cover.size());
  }
  FixedLine line{Point{0.0}, Point{1.0}, 0.0, 2.0 * kPi, "circle"};
  const FixedPointSearch fp = find_fixed_points_on_line(sys, line);
  bool one = fp.points.size() == 1 && !fp.degenerate;
  double where = one ? fp.points[0].location[0] : std::nan("");
  if (one) one = std::abs(wrap_difference(where, 0.0, 2.0 * kPi)) <= 1e-8;
  return {all && one, counts + fmt("recurrent; fixed points=%zu at phi=%.3g", fp.points.size(), where)};
}

Outcome c3_dissipative() {
  const MapSystem sys = make_system("cubic_interval", {{"a", 0.25}});
  const int depth = 8;
  const double w = box_width(sys.domain, depth);
  const TransitionGraph g = build_graph(sys, initial_cover(sys.domain, depth), w / 4);
  const ChainDecomposition dec = decompose(g);
  const Classification c = classify(g, dec);
  const BoxSet A = full_attractor(g, dec), R = full_repeller(g, dec);
  double a_off = 0.0, r_off = 0.0;
  for (auto k : A.keys()) {
    const double x = A.center(k)[0];
    a_off = std::max(a_off, std::min(std::abs(x - 1.0), std::abs(x + 1.0)));
  }
  for (auto k : R.keys()) r_off = std::max(r_off, std::abs(R.center(k)[0]));
  const std::size_t inter =
      set_intersection(full_ruelle_attractor(g, dec), full_ruelle_repeller(g, dec)).size();
  const bool ok = c == Classification::Dissipative && !A.empty() && !R.empty() && a_off <= 2 * w && r_off <= 2 * w &&
                  inter == 0;
  return {ok, fmt("%s, attractor boxes within %.2f widths of +-1, repeller boxes within %.2f widths of 0, "
                  "Ruelle intersection %zu boxes",
                  to_string(c).c_str(), a_off / w, r_off / w, inter)};
}

Outcome c4_core() {
  const MapSystem sys = make_system("nested_rings");
  const std::vector<Stage> sched{{7, 1.0 / 64, 4}, {8, 1.0 / 128, 4}, {9, 1.0 / 256, 4}};
  const CoreCertificate cert = core_scan(sys, sched, Point{0.0, 0.0});
  const bool ok = cert.core_persistent && cert.distinct_attractor_witnesses >= 2 && cert.distinct_repeller_witnesses >= 2;
  return {ok, fmt("%s, attractor witnesses %zu, repeller witnesses %zu", cert.verdict.c_str(),
                  cert.distinct_attractor_witnesses, cert.distinct_repeller_witnesses)};
}

Outcome c5_absorbing_domains() {
  const auto t0 = std::chrono::steady_clock::now();
  // Normal-form data: q=5, p=1, B=1, C=-1, Omega(Z)=Z, rho0=0.05, D=0.
  const MapSystem sys = make_system("nf_timeq", {{"q", 5}, {"p", 1}, {"B", 1}, {"C", -1}, {"rho0", 0.05}, {"D", 0}});
  std::vector<Stage> sched;
  for (int d = 7; d <= 9; ++d) sched.push_back({d, box_width(sys.domain, d) / 4, 2});
  const CoreCertificate cert = core_scan(sys, sched, Point{0.0, 0.0});
  const double rmax = std::sqrt(3.0 * 0.05);  // |z|^2 < 3 rho0
  bool ok = true;
  std::string detail;
  for (const auto& st : cert.stages) {
    const auto good = [&](const RegionSummary& r) {
      return r.absorbing && r.contains_target && !r.whole_cover && r.radius < rmax;
    };
    ok = ok && st.target_recurrent && good(st.forward) && good(st.backward);
    detail += fmt("d%d: forward r=%.3f (%zu boxes), backward r=%.3f (%zu boxes); ", st.stage.depth, st.forward.radius,
                  st.forward.box_count, st.backward.radius, st.backward.box_count);
  }
  const double t = seconds_since(t0);
  ok = ok && t < 300.0;
  return {ok, detail + fmt("bound r<%.3f, %.0f s", rmax, t)};
}

Outcome c6_equilibria() {
  const auto eq = flows::equilibria(0.0, 1.0);
  struct Want {
    const char* name;
    double V, phi;
    flows::EquilibriumType type;
  };
  const Want want[] = {{"O+", 1.0, 0.0, flows::EquilibriumType::Saddle},
                       {"O-", -1.0, kPi, flows::EquilibriumType::Saddle},
                       {"M_a", 0.0, -kPi / 2, flows::EquilibriumType::Sink},
                       {"M_r", 0.0, kPi / 2, flows::EquilibriumType::Source}};
  bool ok = eq.size() == 4;
  double err = 0.0;
  for (const auto& w : want) {
    auto it = std::find_if(eq.begin(), eq.end(), [&](const auto& e) { return e.name == w.name; });
    if (it == eq.end()) {
      ok = false;
      continue;
    }
    err = std::max({err, std::abs(it->V - w.V), std::abs(it->phi - w.phi)});
    ok = ok && it->type == w.type;
    if (w.type == flows::EquilibriumType::Sink || w.type == flows::EquilibriumType::Source) {
      const double lam = w.type == flows::EquilibriumType::Sink ? -1.0 : 1.0;
      for (const auto& ev : it->eigenvalues) ok = ok && std::abs(ev - Complex(lam, 0.0)) < 1e-10;
    }
  }
  return {ok && err <= 1e-10, fmt("%zu equilibria, max location error %.1e", eq.size(), err)};
}

// Seeds whose orbits keep |V + D| >= 1.4 on [0, 10] for all three betas. K has
// a |V + D|^-beta factor, so orbits falling onto M_a (on V = -D) make it
// ill-conditioned; those seeds are excluded rather than judged.
Outcome c7_first_integral() {
  const double D = 0.0;
  const std::array<std::array<double, 2>, 10> seeds{{{-4.0, -2.0}, {-4.0, 3.0}, {-3.0, -3.0}, {-2.0, 3.0},
                                                     {-1.5, -3.0}, {1.5, 0.0}, {2.0, 0.0}, {3.0, 1.0},
                                                     {4.0, -1.0}, {3.0, 0.0}}};
  double worst = 0.0, closest = INFINITY;
  bool finite = true;
  for (double beta : {0.5, 1.0, 2.5}) {
    for (const auto& s0 : seeds) {
      auto field = [&](const flows::Vec2& s) { return flows::limit_field(s.a, s.b, D, beta); };
      const auto tr = flows::integrate(field, flows::Vec2{s0[0], s0[1]}, 10.0, 1e-3);
      finite = finite && !tr.blew_up;
      const double K0 = flows::first_integral_K(s0[0], s0[1], D, beta);
      for (const auto& s : tr.states) {
        worst = std::max(worst, std::abs(flows::first_integral_K(s.a, s.b, D, beta) - K0));
        closest = std::min(closest, std::abs(s.a + D));
      }
    }
  }
  return {finite && worst < 1e-6,
          fmt("10 seeds x 3 betas, max |K drift| = %.2e, min |V + D| along orbits %.2f", worst, closest)};
}

Outcome c8_polar_cartesian() {
  flows::NormalFormParams p;
  p.q = 5;
  p.p = 1;
  p.delta = 0.02;
  p.mu = 0.01;
  p.B = 1.0;
  p.C = -1.0;
  double worst_r = 0.0, worst_phase = 0.0;
  for (double r0 : {0.1, 0.25, 0.4}) {
    for (double a0 : {0.0, 0.7, -2.1}) {
      const Complex z0 = std::polar(r0, a0);
      auto cart = [&](const Complex& z) { return flows::nf_field(z, p); };
      auto pol = [&](const flows::Vec2& s) { return flows::polar_field(s.a, s.b, p); };
      const auto tz = flows::integrate(cart, z0, 1.0, 1e-3);
      const auto tp = flows::integrate(pol, flows::Vec2{r0 * r0, p.q * a0}, 1.0, 1e-3);
      for (std::size_t k = 0; k < tz.states.size() && k < tp.states.size(); ++k) {
        const Complex z = tz.states[k];
        worst_r = std::max(worst_r, std::abs(std::abs(z) - std::sqrt(tp.states[k].a)));
        worst_phase = std::max(worst_phase, std::abs(wrap_difference(std::arg(z), tp.states[k].b / p.q, 2.0 * kPi)));
      }
    }
  }
  return {worst_r < 1e-6 && worst_phase < 1e-6, fmt("max |z| gap %.1e, max phase gap %.1e", worst_r, worst_phase)};
}

double remainder_gap(double rho0) {
  flows::NormalFormParams p;
  p.q = 5;
  p.B = 1.0;
  p.C = -1.0;
  const double beta = flows::rescale(p, rho0, 0.0).beta;
  double gap = 0.0;
  for (int i = 0; i <= 80; ++i)
    for (int j = 0; j < 128; ++j) {
      const double V = -2.0 + 4.0 * i / 80.0, phi = -kPi + 2.0 * kPi * j / 128.0;
      const auto a = flows::rescaled_field(V, phi, p, rho0, 0.0);
      const auto b = flows::limit_field(V, phi, 0.0, beta);
      gap = std::max({gap, std::abs(a.a - b.a), std::abs(a.b - b.b)});
    }
  return gap;
}

Outcome c9_rescaling() {
  const double g1 = remainder_gap(1e-2), g2 = remainder_gap(1e-3);
  const double slope = std::log(g1 / g2) / std::log(10.0);
  return {std::abs(slope - 1.5) <= 0.2 * 1.5, fmt("gaps %.3e, %.3e; fitted exponent %.3f", g1, g2, slope)};
}

Outcome c10_reversibility() {
  const MapSystem sys = make_system("nf_timeq", {{"D", 0.0}});
  std::vector<Point> samples;
  for (int i = 0; i < 100; ++i) {
    const double r = 0.2 * std::sqrt((i % 10 + 0.5) / 10.0);
    const double a = 2.0 * kPi * (i / 10 + 0.25) / 10.0;
    samples.push_back(Point{r * std::cos(a), r * std::sin(a)});
  }
  const ReversibilityReport rev = verify_reversibility(sys, samples, 1e-8);
  const FixedPointSearch fp = find_symmetric_fixed_points(sys, {}, std::pair{-0.2, 0.2});
  double pairing = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : fp.points)
    for (const auto& pr : p.multipliers.pairs) {
      pairing = std::max(pairing, pr.pairing_error);
      ++pairs;
    }
  return {rev.pass && rev.max_residual < 1e-8 && !fp.points.empty() && pairs > 0 && pairing < 1e-6,
          fmt("residual %.1e on %zu samples; %zu symmetric points, max |l1 l2 - 1| = %.1e", rev.max_residual,
              samples.size(), fp.points.size(), pairing)};
}

Outcome c11_spot() {
  const SpotCheck s = periodic_spot_check(3, 2.0 * kPi / 5.0);
  const bool ok = std::abs(s.epsilon - 0.23032767) <= 1e-8 && s.k == 5 && s.residual < 1e-9 &&
                  s.max_return_error <= 1e-8 && s.samples == 100;
  return {ok, fmt("eps=%.10f k=%d |M^k - I|=%.1e return error %.1e over %zu points", s.epsilon, s.k, s.residual,
                  s.max_return_error, s.samples)};
}

// Shared-box check between every attractor and every repeller SCC.
std::size_t shared_box_counterexamples(const TransitionGraph& g) {
  const ChainDecomposition dec = decompose(g);
  std::size_t bad = 0;
  for (const auto& a : attractors(g, dec)) {
    const BoxSet ab = scc_boxes(g, dec, a.scc);
    for (const auto& r : repellers(g, dec)) {
      const BoxSet rb = scc_boxes(g, dec, r.scc);
      if (set_intersection(ab, rb).empty()) continue;
      if (a.scc != r.scc || !(dec.terminal[a.scc] && dec.initial[a.scc])) ++bad;
    }
  }
  return bad;
}

TransitionGraph random_graph(std::mt19937_64& gen) {
  const std::size_t n = 1 + gen() % 200;
  const double density = static_cast<double>(gen() % 1000) / 1000.0 * 3.0 / static_cast<double>(n);
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = i;
  BoxSet bs(Domain::interval(0.0, 1.0), 8, keys);
  std::vector<std::uint64_t> off{0};
  std::vector<std::uint32_t> tgt;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (static_cast<double>(gen() >> 11) * 0x1.0p-53 < density) tgt.push_back(static_cast<std::uint32_t>(j));
    off.push_back(tgt.size());
  }
  return TransitionGraph(bs, 0.0, {}, off, tgt);
}

Outcome c12_shared_boxes() {
  std::mt19937_64 gen(20240611);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) bad += shared_box_counterexamples(random_graph(gen));
  const std::vector<std::pair<std::string, int>> builtins{{"cat_map", 6},     {"circle_semistable", 8},
                                                          {"cubic_interval", 8}, {"nested_rings", 7},
                                                          {"nf_timeq", 6},    {"periodic_spot", 6},
                                                          {"identity", 5}};
  for (const auto& [name, depth] : builtins) {
    const MapSystem sys = make_system(name);
    const BoxSet cover = initial_cover(sys.domain, depth);
    bad += shared_box_counterexamples(build_graph(sys, cover, box_width(sys.domain, depth) / 2));
  }
  return {bad == 0, fmt("1000 random graphs + %zu builtin graphs, %zu counterexamples", builtins.size(), bad)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text(e.path().string());
  return files;
}

Outcome c13_determinism() {
  const fs::path root = fs::temp_directory_path() / "mixdyn-acceptance-determinism";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"classify", "--system", "cubic_interval", "--depth", "8", "--epsilon", "0.25w", "--format", "json,csv,pgm"},
      {"classify", "--system", "nested_rings", "--depth", "7", "--epsilon", "0.5w"},
      {"core-scan", "--system", "nested_rings", "--schedule", "6:0.015625,7:0.0078125"},
      {"merge-scan", "--system", "cubic_interval", "--depth", "7", "--epsilon", "0.25w", "--sweep", "a=0.1:0.4:4",
       "--format", "csv,json,pgm"},
      {"portrait", "--D", "0", "--beta", "1", "--T", "5", "--format", "json"},
      {"verify", "--system", "nf_timeq", "--param", "D=0", "--radius", "0.2", "--range=-0.2:0.2"},
      {"noisy", "--system", "cubic_interval", "--depth", "8", "--epsilon", "1e-3", "--x0", "0.5", "--trials", "8",
       "--seed", "11"}};
  std::size_t mismatches = 0, files = 0;
  std::string bad;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::map<std::string, std::string> first;
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (std::to_string(i) + "-" + std::to_string(run));
      auto args = commands[i];
      args.insert(args.end(), {"--out", out.string(), "--workers", run == 0 ? "1" : "3"});
      std::ostringstream so, se;
      if (cli::run(args, so, se) != 0) {
        ++mismatches;
        bad += commands[i][0] + "(exit) ";
        continue;
      }
      auto snap = snapshot(out);
      snap["<stdout>"] = so.str();
      if (run == 0) {
        first = std::move(snap);
      } else if (snap != first) {
        ++mismatches;
        bad += commands[i][0] + " ";
      } else {
        files += snap.size();
      }
    }
  }
  fs::remove_all(root);
  return {mismatches == 0, fmt("%zu commands, workers 1 vs 3, %zu identical outputs%s%s", commands.size(), files,
                               bad.empty() ? "" : "; differing: ", bad.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "--expect-fail" || a == "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) (a == "--only" ? only : expected).insert(std::stoi(item));
    }
  }
  const std::vector<std::function<Outcome()>> criteria{c1_conservative, c2_semistable,      c3_dissipative,
                                                       c4_core,         c5_absorbing_domains,        c6_equilibria,
                                                       c7_first_integral, c8_polar_cartesian, c9_rescaling,
                                                       c10_reversibility, c11_spot,         c12_shared_boxes,
                                                       c13_determinism};
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::set<int> expected_run;
  for (int id : expected)
    if (only.empty() || only.count(id)) expected_run.insert(id);
  if (failed != expected_run) {
    std::printf("failing set differs from the expected set\n");
    return 1;
  }
  return 0;
}
