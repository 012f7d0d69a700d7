#pragma once

// Coupled dc line voltages from line geometry and the geoelectric field.

#include "gmdcascade/geofield.hpp"
#include "gmdcascade/netmodel.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace gmdcascade {

struct LineGeometry {
    int branch = 0;
    double from_lat = 0.0, from_lon = 0.0;
    double to_lat = 0.0, to_lon = 0.0;

    [[nodiscard]] double mid_lat() const { return 0.5 * (from_lat + to_lat); }
    [[nodiscard]] double mid_lon() const { return 0.5 * (from_lon + to_lon); }
};

/// Kilometres per degree used by the coupling model.
inline constexpr double kKmPerDegree = 111.2;

struct Displacement {
    double east_km = 0.0;
    double north_km = 0.0;
};

struct FieldVector {
    double east = 0.0;   // V/km
    double north = 0.0;  // V/km
};

[[nodiscard]] Displacement line_displacement(const LineGeometry& geom);
[[nodiscard]] double coupled_voltage(const Displacement& d, const FieldVector& e);
[[nodiscard]] std::size_t nearest_grid_point(const FieldGrid& grid, double lat, double lon);
[[nodiscard]] FieldVector field_at_midpoint(const FieldGrid& grid, const LineGeometry& geom, std::size_t step);

/// Geometry of every line in the case that can carry GIC (transformers and
/// series-compensated lines are excluded).
[[nodiscard]] std::vector<LineGeometry> line_geometries(const NetworkCase& net);

struct CoupledVoltageSeries {
    int branch = 0;
    std::vector<double> v_dc;  // volts per time step
};

/// Per-branch waveforms on a common time base.
struct BranchVoltageSet {
    double dt = 0.0;  // seconds between samples; 0 = one sample per cascade iteration
    std::vector<CoupledVoltageSeries> series;

    [[nodiscard]] std::size_t steps() const;
};

[[nodiscard]] BranchVoltageSet couple_field_grid(const std::vector<LineGeometry>& lines, const FieldGrid& grid);

/// Uniform field applied at every point, one sample per step.
[[nodiscard]] BranchVoltageSet couple_uniform_field(const std::vector<LineGeometry>& lines,
                                                    const std::vector<FieldVector>& field);

// Columnar text: "branch_id v_0 v_1 ..." rows; optional "# dt <seconds>" metadata.
[[nodiscard]] BranchVoltageSet read_branch_voltages(const std::string& path);
[[nodiscard]] std::string format_branch_voltages(const BranchVoltageSet& set);
void write_branch_voltages(const BranchVoltageSet& set, const std::string& path);

}  // namespace gmdcascade
