#pragma once

// Seeded synthetic transmission cases: geolocated 345 kV meshes with 138 kV
// load buses behind autotransformers and generators behind step-up units.

#include "gmdcascade/netmodel.hpp"

#include <cstdint>

namespace gmdcascade {

struct SynthOptions {
    int buses = 169;           // total, including generator buses
    std::uint64_t seed = 1;
    double center_lat = 37.0;
    double center_lon = -78.0;
    double spacing_km = 40.0;  // mean distance between neighbouring substations
    double load_factor = 0.6;  // total load / total capacity
};

/// Deterministic for a given options value. Throws std::invalid_argument
/// when fewer than 2 buses are requested.
[[nodiscard]] NetworkCase synthesize_case(const SynthOptions& opts);

}  // namespace gmdcascade
