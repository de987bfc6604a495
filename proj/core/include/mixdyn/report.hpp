#pragma once

#include <string>
#include <vector>

#include "mixdyn/chain.hpp"
#include "mixdyn/flows.hpp"
#include "mixdyn/mapzoo.hpp"
#include "mixdyn/revcore.hpp"

namespace mixdyn {

// JSON documents (two-space indent, trailing newline). Output depends only on
// the values passed in, so equal inputs give byte-identical text.
std::string to_json(const AttractorReport& r);
std::string to_json(const CoreCertificate& c);
std::string to_json(const FixedPointSearch& s);
std::string to_json(const ReversibilityReport& r);
std::string to_json(const InvolutionCheck& r);
std::string to_json(const SpotCheck& s);
std::string to_json(const std::vector<flows::Equilibrium>& eq);
std::string to_json(const MapSystem& sys);  // name, params, domain, capabilities

}  // namespace mixdyn
