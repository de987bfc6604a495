#include <algorithm>
#include <optional>
#include <random>

#include "mixdyn/chain.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/parallel.hpp"

namespace mixdyn {

namespace {

// Uniform on [0, 1) from the top 53 bits, independent of the library's
// distribution implementation.
double unit(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

constexpr int kMaxRedraws = 1000;

}  // namespace

std::vector<std::uint32_t> noisy_trial(const MapSystem& sys, const Point& x0, const BoxSet& bs,
                                       const NoisyOptions& options, int trial, bool& exited) {
  std::mt19937_64 gen(options.seed + static_cast<std::uint64_t>(trial));
  const long burn = options.n_steps / 10;
  std::vector<std::uint32_t> visits;
  visits.reserve(static_cast<std::size_t>(std::max(0L, options.n_steps - burn)));
  exited = false;
  Point x = x0;
  for (long step = 1; step <= options.n_steps; ++step) {
    const Point fx = sys.forward(x);
    if (!fx.finite()) throw NumericError("non-finite map value along a noisy orbit");
    std::optional<std::size_t> idx;
    if (sys.domain.contains(fx)) {
      // The noise is conditioned on the phase space: draws landing outside
      // the domain are redrawn. The ball around a point of the domain always
      // meets it in at least 2^-dim of its volume, so this ends quickly.
      for (int attempt = 0; attempt < kMaxRedraws && !idx; ++attempt) {
        Point y = fx;
        for (int i = 0; i < y.dim; ++i) y[i] += options.epsilon * (2.0 * unit(gen) - 1.0);
        if (!sys.domain.contains(y)) continue;
        y = sys.domain.reduce(y);
        const auto key = bs.key_of(y);
        idx = key ? bs.index_of(*key) : std::nullopt;
        if (!idx) break;
        x = y;
      }
    }
    if (!idx) {
      exited = true;
      break;
    }
    if (step > burn) visits.push_back(static_cast<std::uint32_t>(*idx));
  }
  return visits;
}

NoisyResult noisy_attractor(const MapSystem& sys, const Point& x0, const BoxSet& bs, const NoisyOptions& options) {
  if (!(options.epsilon > 0.0)) throw ConfigError("noise amplitude epsilon must be positive");
  if (options.n_steps < 1 || options.n_trials < 1) throw ConfigError("steps and trials must be positive");
  if (x0.dim != sys.dim || !sys.domain.contains(x0)) throw ConfigError("initial point lies outside the domain");

  const auto trials = static_cast<std::size_t>(options.n_trials);
  std::vector<std::vector<std::uint32_t>> per_trial(trials);
  std::vector<char> exited(trials, 0);
  parallel_for(trials, options.workers, [&](std::size_t t) {
    bool e = false;
    per_trial[t] = noisy_trial(sys, x0, bs, options, static_cast<int>(t), e);
    exited[t] = e;
  });

  NoisyResult out;
  out.counts.assign(bs.size(), 0);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::uint32_t v : per_trial[t]) ++out.counts[v];
    out.total_visits += per_trial[t].size();
    out.exits += exited[t] ? 1 : 0;
  }
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i < out.counts.size(); ++i)
    if (out.counts[i]) keys.push_back(bs.keys()[i]);
  out.support = BoxSet(bs.domain(), bs.depth(), std::move(keys));
  return out;
}

}  // namespace mixdyn
