#pragma once

#include <string>

#include "ehstore/limiting_dist.hpp"
#include "ehstore/sim.hpp"

namespace ehstore {

/// JSON form of a distribution:
///   {kind, params{lambda, m_eff, delta, K?, l?, n_c?, p?/d?, c?, atom?},
///    sections: [{x_lo, x_hi, formula_id, coefficients: [...]}]}
/// Doubles are written so that parsing returns the identical bits; a
/// round-trip is lossless.
std::string dist_to_json(const LimitingDistribution& dist);
LimitingDistribution dist_from_json(const std::string& text);

std::string sim_result_to_json(const SimResult& result);

/// Two-column CSV (bin_center, mass).
std::string histogram_to_csv(const Histogram& histogram);

}  // namespace ehstore
