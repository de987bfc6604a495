#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixdyn/boxdyn.hpp"

namespace mixdyn {

enum class Encoding { Binary, Json };

// Box sets and graphs are stored as one line of JSON header followed, for the
// binary encoding, by little-endian arrays: uint32 box coordinates (dim per
// box), then for graphs uint64 CSR offsets and uint32 targets. The JSON
// encoding puts the same arrays inside the header document instead.
void save_boxset(const BoxSet& bs, const std::string& path, Encoding enc = Encoding::Binary);
BoxSet load_boxset(const std::string& path);

void save_graph(const TransitionGraph& g, const std::string& path, Encoding enc = Encoding::Binary);
TransitionGraph load_graph(const std::string& path);

std::string domain_json(const Domain& domain);

// One grey level per box of `frame` (2^depth pixels per axis; y grows upward,
// so row 0 is the top edge). Boxes not listed stay 0. 1D domains give a
// single-row image. Throws ConfigError for 3D domains.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

Raster make_raster(const BoxSet& frame, std::span<const std::uint64_t> keys, std::span<const std::uint8_t> levels);
std::string pgm_bytes(const Raster& r);
void write_pgm(const std::string& path, const Raster& r);

// Helpers shared with the CLI.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace mixdyn
