#include "mixdyn/boxdyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixdyn/errors.hpp"
#include "mixdyn/mapzoo.hpp"
#include "mixdyn/parallel.hpp"

namespace mixdyn {

namespace {

void check_depth(const Domain& domain, int depth) {
  if (depth < 0) throw ConfigError("depth must be non-negative");
  if (depth > 30 || depth * domain.dim > 62)
    throw BudgetExceeded("depth " + std::to_string(depth) + " is beyond the addressable range");
}

void sort_unique(std::vector<std::uint64_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::string box_label(const BoxSet& bs, std::uint64_t key) {
  const BoxId id = bs.decode(key);
  std::ostringstream os;
  os << "box (";
  for (int i = 0; i < bs.dim(); ++i) os << (i ? ", " : "") << id.coords[i];
  os << ") at depth " << bs.depth();
  return os.str();
}

// Inclusive range of cell indices along one axis meeting the closed interval
// [a, b]; empty when lo > hi. Periodic ranges are returned unreduced.
struct AxisRange {
  std::int64_t lo = 0;
  std::int64_t hi = -1;
};

AxisRange cells_meeting(const Domain& dom, int axis, std::int64_t cells, double a, double b) {
  const double w = dom.extent(axis) / static_cast<double>(cells);
  const double u = (a - dom.lower[axis]) / w;
  const double v = (b - dom.lower[axis]) / w;
  AxisRange r;
  if (!(u <= v)) return r;
  if (dom.periodic[axis] && v - u + 1.0 >= static_cast<double>(cells)) {
    r.lo = 0;
    r.hi = cells - 1;
    return r;
  }
  const double lo = std::ceil(u - 1.0);
  const double hi = std::floor(v);
  if (dom.periodic[axis]) {
    r.lo = static_cast<std::int64_t>(lo);
    r.hi = static_cast<std::int64_t>(hi);
    if (r.hi - r.lo + 1 >= cells) {
      r.lo = 0;
      r.hi = cells - 1;
    }
    return r;
  }
  const auto top = static_cast<double>(cells);
  r.lo = static_cast<std::int64_t>(std::clamp(lo, 0.0, top));
  r.hi = static_cast<std::int64_t>(std::clamp(hi, -1.0, top - 1.0));
  return r;
}

}  // namespace

// --- BoxSet ---------------------------------------------------------------

BoxSet::BoxSet(Domain domain, int depth) : domain_(domain), depth_(depth) {
  domain_.validate();
  check_depth(domain_, depth_);
}

BoxSet::BoxSet(Domain domain, int depth, std::vector<std::uint64_t> keys)
    : domain_(domain), depth_(depth), keys_(std::move(keys)) {
  domain_.validate();
  check_depth(domain_, depth_);
  sort_unique(keys_);
  if (!keys_.empty() && keys_.back() >= total_cells()) throw ConfigError("box key out of range for this depth");
}

std::uint64_t BoxSet::total_cells() const { return std::uint64_t{1} << (depth_ * domain_.dim); }

double BoxSet::max_width() const {
  double w = 0.0;
  for (int i = 0; i < dim(); ++i) w = std::max(w, width(i));
  return w;
}

double BoxSet::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= width(i);
  return v;
}

bool BoxSet::contains(std::uint64_t key) const { return std::binary_search(keys_.begin(), keys_.end(), key); }

std::optional<std::size_t> BoxSet::index_of(std::uint64_t key) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::uint64_t BoxSet::encode(const BoxId& id) const {
  std::uint64_t key = 0;
  for (int i = dim() - 1; i >= 0; --i) key = (key << depth_) | id.coords[i];
  return key;
}

BoxId BoxSet::decode(std::uint64_t key) const {
  BoxId id;
  id.depth = depth_;
  const std::uint64_t mask = cells_per_axis() - 1;
  for (int i = 0; i < dim(); ++i) {
    id.coords[i] = static_cast<std::uint32_t>(key & mask);
    key >>= depth_;
  }
  return id;
}

std::optional<std::uint64_t> BoxSet::key_of(const Point& p) const {
  if (!domain_.contains(p)) return std::nullopt;
  const Point r = domain_.reduce(p);
  const auto n = static_cast<std::int64_t>(cells_per_axis());
  BoxId id;
  id.depth = depth_;
  for (int i = 0; i < dim(); ++i) {
    auto c = static_cast<std::int64_t>(std::floor((r[i] - domain_.lower[i]) / width(i)));
    c = std::clamp<std::int64_t>(c, 0, n - 1);
    id.coords[i] = static_cast<std::uint32_t>(c);
  }
  return encode(id);
}

Point BoxSet::lower_corner(std::uint64_t key) const {
  const BoxId id = decode(key);
  Point p(dim());
  for (int i = 0; i < dim(); ++i) p[i] = domain_.lower[i] + static_cast<double>(id.coords[i]) * width(i);
  return p;
}

Point BoxSet::center(std::uint64_t key) const {
  const BoxId id = decode(key);
  Point p(dim());
  for (int i = 0; i < dim(); ++i) p[i] = domain_.lower[i] + (static_cast<double>(id.coords[i]) + 0.5) * width(i);
  return p;
}

double BoxSet::far_distance(std::uint64_t key, const Point& p) const {
  const Point c = center(key);
  double d = 0.0;
  for (int i = 0; i < dim(); ++i) d = std::max(d, std::abs(domain_.axis_difference(c, p, i)) + 0.5 * width(i));
  return d;
}

namespace {

void require_compatible(const BoxSet& a, const BoxSet& b) {
  if (a.depth() != b.depth() || !(a.domain() == b.domain()))
    throw ConfigError("box sets differ in depth or domain");
}

}  // namespace

BoxSet set_union(const BoxSet& a, const BoxSet& b) {
  require_compatible(a, b);
  std::vector<std::uint64_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.keys().begin(), a.keys().end(), b.keys().begin(), b.keys().end(), std::back_inserter(out));
  return BoxSet(a.domain(), a.depth(), std::move(out));
}

BoxSet set_intersection(const BoxSet& a, const BoxSet& b) {
  require_compatible(a, b);
  std::vector<std::uint64_t> out;
  std::set_intersection(a.keys().begin(), a.keys().end(), b.keys().begin(), b.keys().end(),
                        std::back_inserter(out));
  return BoxSet(a.domain(), a.depth(), std::move(out));
}

BoxSet set_difference(const BoxSet& a, const BoxSet& b) {
  require_compatible(a, b);
  std::vector<std::uint64_t> out;
  std::set_difference(a.keys().begin(), a.keys().end(), b.keys().begin(), b.keys().end(), std::back_inserter(out));
  return BoxSet(a.domain(), a.depth(), std::move(out));
}

bool is_subset(const BoxSet& sub, const BoxSet& super) {
  require_compatible(sub, super);
  return std::includes(super.keys().begin(), super.keys().end(), sub.keys().begin(), sub.keys().end());
}

BoxSet coarsen(const BoxSet& bs, int depth) {
  if (depth < 0 || depth > bs.depth()) throw ConfigError("coarsen target depth out of range");
  BoxSet target(bs.domain(), depth);
  const int shift = bs.depth() - depth;
  std::vector<std::uint64_t> out;
  out.reserve(bs.size());
  for (std::uint64_t key : bs.keys()) {
    BoxId id = bs.decode(key);
    id.depth = depth;
    for (int i = 0; i < bs.dim(); ++i) id.coords[i] >>= shift;
    out.push_back(target.encode(id));
  }
  return BoxSet(bs.domain(), depth, std::move(out));
}

BoxSet initial_cover(const Domain& domain, int depth, std::uint64_t budget) {
  domain.validate();
  check_depth(domain, depth);
  const std::uint64_t total = std::uint64_t{1} << (depth * domain.dim);
  if (total > budget)
    throw BudgetExceeded("cover of " + std::to_string(total) + " boxes exceeds budget " + std::to_string(budget));
  std::vector<std::uint64_t> keys(total);
  for (std::uint64_t k = 0; k < total; ++k) keys[k] = k;
  return BoxSet(domain, depth, std::move(keys));
}

BoxSet subdivide(const BoxSet& bs, std::uint64_t budget) {
  const int children = 1 << bs.dim();
  const std::uint64_t count = static_cast<std::uint64_t>(bs.size()) * static_cast<std::uint64_t>(children);
  if (count > budget)
    throw BudgetExceeded("subdivision to " + std::to_string(count) + " boxes exceeds budget " + std::to_string(budget));
  BoxSet fine(bs.domain(), bs.depth() + 1);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t key : bs.keys()) {
    const BoxId id = bs.decode(key);
    for (int c = 0; c < children; ++c) {
      BoxId child;
      child.depth = bs.depth() + 1;
      for (int i = 0; i < bs.dim(); ++i) child.coords[i] = 2 * id.coords[i] + ((c >> i) & 1);
      out.push_back(fine.encode(child));
    }
  }
  return BoxSet(bs.domain(), bs.depth() + 1, std::move(out));
}

// --- pad modes ------------------------------------------------------------

std::string to_string(PadMode mode) {
  switch (mode) {
    case PadMode::Automatic: return "auto";
    case PadMode::Lipschitz: return "lipschitz";
    case PadMode::Empirical: return "empirical";
    case PadMode::None: return "none";
  }
  return "auto";
}

PadMode pad_mode_from_string(const std::string& name) {
  if (name == "auto") return PadMode::Automatic;
  if (name == "lipschitz") return PadMode::Lipschitz;
  if (name == "empirical") return PadMode::Empirical;
  if (name == "none") return PadMode::None;
  throw ConfigError("unknown pad mode '" + name + "' (expected auto, lipschitz, empirical or none)");
}

// --- TransitionGraph ------------------------------------------------------

TransitionGraph::TransitionGraph(BoxSet boxes, double epsilon, SampleScheme scheme, std::vector<std::uint64_t> offsets,
                                 std::vector<std::uint32_t> targets)
    : boxes_(std::move(boxes)),
      epsilon_(epsilon),
      scheme_(scheme),
      offsets_(std::move(offsets)),
      targets_(std::move(targets)) {
  if (offsets_.size() != boxes_.size() + 1 || offsets_.front() != 0 || offsets_.back() != targets_.size())
    throw ConfigError("malformed adjacency offsets");
  for (std::uint32_t t : targets_)
    if (t >= boxes_.size()) throw ConfigError("edge endpoint is not a node");
}

bool TransitionGraph::has_edge(std::size_t from, std::size_t to) const {
  auto s = successors(from);
  return std::binary_search(s.begin(), s.end(), static_cast<std::uint32_t>(to));
}

std::vector<std::uint32_t> TransitionGraph::nodes_of(const BoxSet& bs) const {
  require_compatible(bs, boxes_);
  std::vector<std::uint32_t> out;
  out.reserve(bs.size());
  for (std::uint64_t key : bs.keys()) {
    auto idx = boxes_.index_of(key);
    if (!idx) throw ConfigError(box_label(bs, key) + " is not a node of the graph");
    out.push_back(static_cast<std::uint32_t>(*idx));
  }
  return out;
}

BoxSet TransitionGraph::boxes_of(std::span<const std::uint32_t> nodes) const {
  std::vector<std::uint64_t> keys;
  keys.reserve(nodes.size());
  for (std::uint32_t n : nodes) keys.push_back(boxes_.keys()[n]);
  return BoxSet(boxes_.domain(), boxes_.depth(), std::move(keys));
}

BoxSet TransitionGraph::boxes_of_mask(const std::vector<char>& mask) const {
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i < mask.size() && i < node_count(); ++i)
    if (mask[i]) keys.push_back(boxes_.keys()[i]);
  return BoxSet(boxes_.domain(), boxes_.depth(), std::move(keys));
}

// --- graph construction ---------------------------------------------------

TransitionGraph build_graph(const MapSystem& sys, const BoxSet& bs, double epsilon, const GraphOptions& options) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be finite and non-negative");
  const int n = options.scheme.samples_per_axis;
  if (n < 2 || n > 64) throw ConfigError("samples per axis must be between 2 and 64");
  if (sys.dim != bs.dim()) throw ConfigError("system and box set dimensions differ");
  if (!sys.forward) throw ConfigError("system has no forward map");

  PadMode pad_mode = options.scheme.pad;
  if (pad_mode == PadMode::Automatic) pad_mode = sys.lipschitz_hint ? PadMode::Lipschitz : PadMode::Empirical;
  if (pad_mode == PadMode::Lipschitz && !sys.lipschitz_hint)
    throw ConfigError("lipschitz padding requested but system '" + sys.name + "' has no Lipschitz hint");

  const Domain& dom = bs.domain();
  const int dim = bs.dim();
  const auto cells = static_cast<std::int64_t>(bs.cells_per_axis());
  // Shared lattice: every sample of every box is a lattice point, so images at
  // common corners and edges are computed once and agree bit for bit.
  const std::int64_t res = 2 * cells * (n - 1);
  std::array<std::int64_t, kMaxDim> extent{};
  for (int i = 0; i < dim; ++i) extent[i] = dom.periodic[i] ? res : res + 1;

  auto lattice_key = [&](const std::array<std::int64_t, kMaxDim>& j) {
    std::uint64_t key = 0;
    for (int i = dim - 1; i >= 0; --i) {
      std::int64_t v = j[i];
      if (dom.periodic[i]) v %= res;
      key = key * static_cast<std::uint64_t>(extent[i]) + static_cast<std::uint64_t>(v);
    }
    return key;
  };
  auto lattice_point = [&](std::uint64_t key) {
    Point p(dim);
    for (int i = 0; i < dim; ++i) {
      const auto j = static_cast<double>(key % static_cast<std::uint64_t>(extent[i]));
      key /= static_cast<std::uint64_t>(extent[i]);
      p[i] = dom.lower[i] + j * dom.extent(i) / static_cast<double>(res);
    }
    return p;
  };

  std::int64_t grid_count = 1;
  for (int i = 0; i < dim; ++i) grid_count *= n;
  // Per-box sample list: the n^dim grid (axis 0 fastest) followed by the centre.
  auto sample_keys = [&](std::uint64_t box_key, std::vector<std::uint64_t>& out) {
    out.clear();
    const BoxId id = bs.decode(box_key);
    std::array<std::int64_t, kMaxDim> j{};
    for (std::int64_t g = 0; g < grid_count; ++g) {
      std::int64_t rem = g;
      for (int i = 0; i < dim; ++i) {
        j[i] = 2 * (n - 1) * static_cast<std::int64_t>(id.coords[i]) + 2 * (rem % n);
        rem /= n;
      }
      out.push_back(lattice_key(j));
    }
    for (int i = 0; i < dim; ++i) j[i] = 2 * (n - 1) * static_cast<std::int64_t>(id.coords[i]) + (n - 1);
    out.push_back(lattice_key(j));
  };

  std::vector<std::uint64_t> lattice;
  {
    std::vector<std::uint64_t> tmp;
    lattice.reserve(bs.size() * static_cast<std::size_t>(grid_count + 1));
    for (std::uint64_t key : bs.keys()) {
      sample_keys(key, tmp);
      lattice.insert(lattice.end(), tmp.begin(), tmp.end());
    }
    sort_unique(lattice);
  }

  std::vector<Point> images(lattice.size());
  parallel_for(lattice.size(), options.workers, [&](std::size_t i) {
    Point img(dim);
    for (int a = 0; a < dim; ++a) img[a] = std::numeric_limits<double>::quiet_NaN();
    try {
      img = sys.forward(lattice_point(lattice[i]));
    } catch (const NumericError&) {
    }
    images[i] = img;
  });

  const double spacing = bs.max_width() / static_cast<double>(n - 1);
  const double lip_pad = pad_mode == PadMode::Lipschitz ? *sys.lipschitz_hint * spacing / 2.0 : 0.0;
  const std::uint64_t total = bs.total_cells();

  std::vector<std::vector<std::uint32_t>> succ(bs.size());
  parallel_for(bs.size(), options.workers, [&](std::size_t b) {
    std::vector<std::uint64_t> keys;
    sample_keys(bs.keys()[b], keys);
    std::vector<const Point*> pts(keys.size());
    for (std::size_t s = 0; s < keys.size(); ++s) {
      auto it = std::lower_bound(lattice.begin(), lattice.end(), keys[s]);
      pts[s] = &images[static_cast<std::size_t>(it - lattice.begin())];
      if (!pts[s]->finite())
        throw NumericError("non-finite map value on a sample of " + box_label(bs, bs.keys()[b]));
    }

    std::array<double, kMaxDim> radius{};
    for (int i = 0; i < dim; ++i) radius[i] = epsilon + lip_pad;
    if (pad_mode == PadMode::Empirical) {
      std::array<double, kMaxDim> spread{};
      std::int64_t stride = 1;
      for (int ax = 0; ax < dim; ++ax) {
        for (std::int64_t g = 0; g < grid_count; ++g) {
          if ((g / stride) % n == n - 1) continue;
          const Point& p = *pts[static_cast<std::size_t>(g)];
          const Point& q = *pts[static_cast<std::size_t>(g + stride)];
          for (int i = 0; i < dim; ++i) spread[i] = std::max(spread[i], std::abs(dom.axis_difference(p, q, i)));
        }
        stride *= n;
      }
      for (int i = 0; i < dim; ++i) radius[i] += 0.5 * spread[i];
    }

    std::vector<std::uint64_t> hits;
    for (const Point* img : pts) {
      std::array<AxisRange, kMaxDim> rng{};
      bool empty = false;
      std::uint64_t count = 1;
      for (int i = 0; i < dim; ++i) {
        rng[i] = cells_meeting(dom, i, cells, (*img)[i] - radius[i], (*img)[i] + radius[i]);
        if (rng[i].hi < rng[i].lo) {
          empty = true;
          break;
        }
        count *= static_cast<std::uint64_t>(rng[i].hi - rng[i].lo + 1);
      }
      if (empty) continue;
      if (count > options.edge_budget)
        throw BudgetExceeded("edge count exceeds budget " + std::to_string(options.edge_budget));
      std::array<std::int64_t, kMaxDim> c{};
      for (int i = 0; i < dim; ++i) c[i] = rng[i].lo;
      for (std::uint64_t k = 0; k < count; ++k) {
        BoxId id;
        id.depth = bs.depth();
        for (int i = 0; i < dim; ++i) {
          std::int64_t v = c[i];
          if (dom.periodic[i]) v = ((v % cells) + cells) % cells;
          id.coords[i] = static_cast<std::uint32_t>(v);
        }
        hits.push_back(bs.encode(id));
        for (int i = 0; i < dim; ++i) {
          if (++c[i] <= rng[i].hi) break;
          c[i] = rng[i].lo;
        }
      }
      if (hits.size() > 4 * total + 64) sort_unique(hits);
    }
    sort_unique(hits);
    auto& out = succ[b];
    out.reserve(hits.size());
    for (std::uint64_t h : hits)
      if (auto idx = bs.index_of(h)) out.push_back(static_cast<std::uint32_t>(*idx));
  });

  std::vector<std::uint64_t> offsets(bs.size() + 1, 0);
  for (std::size_t b = 0; b < bs.size(); ++b) {
    offsets[b + 1] = offsets[b] + succ[b].size();
    if (offsets[b + 1] > options.edge_budget)
      throw BudgetExceeded("edge count exceeds budget " + std::to_string(options.edge_budget));
  }
  std::vector<std::uint32_t> targets;
  targets.reserve(offsets.back());
  for (auto& s : succ) {
    targets.insert(targets.end(), s.begin(), s.end());
    std::vector<std::uint32_t>().swap(s);
  }
  return TransitionGraph(bs, epsilon, options.scheme, std::move(offsets), std::move(targets));
}

BoxSet image_of(const BoxSet& sub, const TransitionGraph& g) {
  const auto nodes = g.nodes_of(sub);
  std::vector<char> mask(g.node_count(), 0);
  for (std::uint32_t v : nodes)
    for (std::uint32_t w : g.successors(v)) mask[w] = 1;
  return g.boxes_of_mask(mask);
}

TransitionGraph reverse(const TransitionGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::uint64_t> offsets(n + 1, 0);
  for (std::uint32_t t : g.targets()) ++offsets[t + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::uint32_t> targets(g.edge_count());
  std::vector<std::uint64_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t v = 0; v < n; ++v)
    for (std::uint32_t w : g.successors(v)) targets[fill[w]++] = static_cast<std::uint32_t>(v);
  return TransitionGraph(g.boxes(), g.epsilon(), g.scheme(), std::move(offsets), std::move(targets));
}

}  // namespace mixdyn
