#include "mixdyn/boxio.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "mixdyn/errors.hpp"

namespace mixdyn {

using nlohmann::json;

namespace {

json domain_to_json(const Domain& d) {
  json j;
  j["dim"] = d.dim;
  j["lower"] = std::vector<double>(d.lower.begin(), d.lower.begin() + d.dim);
  j["upper"] = std::vector<double>(d.upper.begin(), d.upper.begin() + d.dim);
  j["periodic"] = std::vector<bool>(d.periodic.begin(), d.periodic.begin() + d.dim);
  return j;
}

Domain domain_from_json(const json& j) {
  Domain d;
  d.dim = j.at("dim").get<int>();
  if (d.dim < 1 || d.dim > kMaxDim) throw ConfigError("stored domain has unsupported dimension");
  const auto lo = j.at("lower").get<std::vector<double>>();
  const auto hi = j.at("upper").get<std::vector<double>>();
  const auto per = j.at("periodic").get<std::vector<bool>>();
  if (lo.size() != static_cast<std::size_t>(d.dim) || hi.size() != lo.size() || per.size() != lo.size())
    throw ConfigError("stored domain arrays do not match its dimension");
  for (int i = 0; i < d.dim; ++i) {
    d.lower[i] = lo[static_cast<std::size_t>(i)];
    d.upper[i] = hi[static_cast<std::size_t>(i)];
    d.periodic[i] = per[static_cast<std::size_t>(i)];
  }
  d.validate();
  return d;
}

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ConfigError("stored file is truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

std::vector<std::vector<std::uint32_t>> coords_of(const BoxSet& bs) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(bs.size());
  for (std::uint64_t k : bs.keys()) {
    const BoxId id = bs.decode(k);
    out.emplace_back(id.coords.begin(), id.coords.begin() + bs.dim());
  }
  return out;
}

std::uint64_t key_from_coords(const BoxSet& frame, const std::vector<std::uint32_t>& c) {
  if (c.size() != static_cast<std::size_t>(frame.dim())) throw ConfigError("stored box has wrong dimension");
  BoxId id;
  id.depth = frame.depth();
  for (int i = 0; i < frame.dim(); ++i) {
    if (c[static_cast<std::size_t>(i)] >= frame.cells_per_axis()) throw ConfigError("stored box coordinate out of range");
    id.coords[i] = c[static_cast<std::size_t>(i)];
  }
  return frame.encode(id);
}

void append_coords(std::string& out, const BoxSet& bs) {
  for (std::uint64_t k : bs.keys()) {
    const BoxId id = bs.decode(k);
    for (int i = 0; i < bs.dim(); ++i) put_le<std::uint32_t>(out, id.coords[i]);
  }
}

std::vector<std::uint64_t> read_coords(const std::string& in, std::size_t& pos, const BoxSet& frame, std::size_t count) {
  std::vector<std::uint64_t> keys;
  keys.reserve(count);
  std::vector<std::uint32_t> c(static_cast<std::size_t>(frame.dim()));
  for (std::size_t b = 0; b < count; ++b) {
    for (auto& v : c) v = get_le<std::uint32_t>(in, pos);
    keys.push_back(key_from_coords(frame, c));
  }
  return keys;
}

std::pair<json, std::size_t> split_header(const std::string& data) {
  const auto nl = data.find('\n');
  if (nl == std::string::npos) throw ConfigError("stored file has no header line");
  try {
    return {json::parse(data.substr(0, nl)), nl + 1};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stored file header is not JSON: ") + e.what());
  }
}

}  // namespace

void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw ConfigError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string domain_json(const Domain& domain) { return domain_to_json(domain).dump(); }

void save_boxset(const BoxSet& bs, const std::string& path, Encoding enc) {
  json h;
  h["format"] = "mixdyn-boxset";
  h["version"] = 1;
  h["encoding"] = enc == Encoding::Binary ? "binary" : "json";
  h["domain"] = domain_to_json(bs.domain());
  h["depth"] = bs.depth();
  h["count"] = bs.size();
  if (enc == Encoding::Json) h["boxes"] = coords_of(bs);
  std::string out = h.dump() + "\n";
  if (enc == Encoding::Binary) append_coords(out, bs);
  write_text(path, out);
}

BoxSet load_boxset(const std::string& path) {
  const std::string data = read_text(path);
  auto [h, pos] = split_header(data);
  try {
    if (h.at("format") != "mixdyn-boxset") throw ConfigError("'" + path + "' is not a stored box set");
    const Domain dom = domain_from_json(h.at("domain"));
    const BoxSet frame(dom, h.at("depth").get<int>());
    const auto count = h.at("count").get<std::size_t>();
    std::vector<std::uint64_t> keys;
    if (h.at("encoding") == "json") {
      for (const auto& c : h.at("boxes")) keys.push_back(key_from_coords(frame, c.get<std::vector<std::uint32_t>>()));
      if (keys.size() != count) throw ConfigError("stored box count mismatch");
    } else {
      keys = read_coords(data, pos, frame, count);
    }
    return BoxSet(dom, frame.depth(), std::move(keys));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed box set header: ") + e.what());
  }
}

void save_graph(const TransitionGraph& g, const std::string& path, Encoding enc) {
  json h;
  h["format"] = "mixdyn-graph";
  h["version"] = 1;
  h["encoding"] = enc == Encoding::Binary ? "binary" : "json";
  h["domain"] = domain_to_json(g.boxes().domain());
  h["depth"] = g.boxes().depth();
  h["epsilon"] = g.epsilon();
  h["samples_per_axis"] = g.scheme().samples_per_axis;
  h["pad"] = to_string(g.scheme().pad);
  h["node_count"] = g.node_count();
  h["edge_count"] = g.edge_count();
  if (enc == Encoding::Json) {
    h["boxes"] = coords_of(g.boxes());
    h["offsets"] = std::vector<std::uint64_t>(g.offsets().begin(), g.offsets().end());
    h["targets"] = std::vector<std::uint32_t>(g.targets().begin(), g.targets().end());
  }
  std::string out = h.dump() + "\n";
  if (enc == Encoding::Binary) {
    out.reserve(out.size() + g.node_count() * (4 * static_cast<std::size_t>(g.boxes().dim()) + 8) + 4 * g.edge_count());
    append_coords(out, g.boxes());
    for (std::uint64_t o : g.offsets()) put_le<std::uint64_t>(out, o);
    for (std::uint32_t t : g.targets()) put_le<std::uint32_t>(out, t);
  }
  write_text(path, out);
}

TransitionGraph load_graph(const std::string& path) {
  const std::string data = read_text(path);
  auto [h, pos] = split_header(data);
  try {
    if (h.at("format") != "mixdyn-graph") throw ConfigError("'" + path + "' is not a stored graph");
    const Domain dom = domain_from_json(h.at("domain"));
    const BoxSet frame(dom, h.at("depth").get<int>());
    const auto nodes = h.at("node_count").get<std::size_t>();
    const auto edges = h.at("edge_count").get<std::size_t>();
    SampleScheme scheme{h.at("samples_per_axis").get<int>(), pad_mode_from_string(h.at("pad").get<std::string>())};
    std::vector<std::uint64_t> keys, offsets;
    std::vector<std::uint32_t> targets;
    if (h.at("encoding") == "json") {
      for (const auto& c : h.at("boxes")) keys.push_back(key_from_coords(frame, c.get<std::vector<std::uint32_t>>()));
      offsets = h.at("offsets").get<std::vector<std::uint64_t>>();
      targets = h.at("targets").get<std::vector<std::uint32_t>>();
    } else {
      keys = read_coords(data, pos, frame, nodes);
      offsets.reserve(nodes + 1);
      for (std::size_t i = 0; i <= nodes; ++i) offsets.push_back(get_le<std::uint64_t>(data, pos));
      targets.reserve(edges);
      for (std::size_t i = 0; i < edges; ++i) targets.push_back(get_le<std::uint32_t>(data, pos));
    }
    if (keys.size() != nodes || targets.size() != edges) throw ConfigError("stored graph counts mismatch");
    if (!std::is_sorted(keys.begin(), keys.end())) throw ConfigError("stored graph nodes are not in box order");
    return TransitionGraph(BoxSet(dom, frame.depth(), std::move(keys)), h.at("epsilon").get<double>(), scheme,
                           std::move(offsets), std::move(targets));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed graph header: ") + e.what());
  }
}

Raster make_raster(const BoxSet& frame, std::span<const std::uint64_t> keys, std::span<const std::uint8_t> levels) {
  if (frame.dim() > 2) throw ConfigError("rasters are only available for 1D and 2D domains");
  if (keys.size() != levels.size()) throw ConfigError("raster keys and levels differ in length");
  Raster r;
  r.width = frame.cells_per_axis();
  r.height = frame.dim() == 2 ? frame.cells_per_axis() : 1;
  r.pixels.assign(r.width * r.height, 0);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const BoxId id = frame.decode(keys[i]);
    const std::size_t row = frame.dim() == 2 ? r.height - 1 - id.coords[1] : 0;
    r.pixels[row * r.width + id.coords[0]] = levels[i];
  }
  return r;
}

std::string pgm_bytes(const Raster& r) {
  std::ostringstream os;
  os << "P5\n" << r.width << ' ' << r.height << "\n255\n";
  std::string out = os.str();
  out.append(reinterpret_cast<const char*>(r.pixels.data()), r.pixels.size());
  return out;
}

void write_pgm(const std::string& path, const Raster& r) { write_text(path, pgm_bytes(r)); }

}  // namespace mixdyn
