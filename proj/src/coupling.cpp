#include "gmdcascade/coupling.hpp"

#include "gmdcascade/textio.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gmdcascade {

Displacement line_displacement(const LineGeometry& geom) {
    const double gamma = std::numbers::pi / 180.0 * geom.mid_lat();
    const double dlat = geom.to_lat - geom.from_lat;
    const double dlon = geom.to_lon - geom.from_lon;
    return {kKmPerDegree * dlon * std::cos(gamma), kKmPerDegree * dlat};
}

double coupled_voltage(const Displacement& d, const FieldVector& e) { return d.east_km * e.east + d.north_km * e.north; }

std::size_t nearest_grid_point(const FieldGrid& grid, double lat, double lon) {
    if (grid.points.empty()) throw std::invalid_argument("empty field grid");
    std::size_t best = 0;
    double best_d = great_circle_km(lat, lon, grid.points[0].lat, grid.points[0].lon);
    for (std::size_t i = 1; i < grid.points.size(); ++i) {
        const double d = great_circle_km(lat, lon, grid.points[i].lat, grid.points[i].lon);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

FieldVector field_at_midpoint(const FieldGrid& grid, const LineGeometry& geom, std::size_t step) {
    const auto& series = grid.points[nearest_grid_point(grid, geom.mid_lat(), geom.mid_lon())].series;
    if (step >= series.size()) throw std::out_of_range("field step out of range");
    return {series.e_e[step], series.e_n[step]};
}

std::vector<LineGeometry> line_geometries(const NetworkCase& net) {
    const auto idx = net.index();
    std::vector<LineGeometry> out;
    for (const auto& br : net.branches) {
        if (br.kind != BranchKind::line || br.series_compensated) continue;
        const auto& f = net.buses[idx.bus.at(br.from_bus)];
        const auto& t = net.buses[idx.bus.at(br.to_bus)];
        out.push_back({br.id, f.lat, f.lon, t.lat, t.lon});
    }
    return out;
}

std::size_t BranchVoltageSet::steps() const { return series.empty() ? 0 : series.front().v_dc.size(); }

BranchVoltageSet couple_field_grid(const std::vector<LineGeometry>& lines, const FieldGrid& grid) {
    grid.check();
    BranchVoltageSet set;
    set.dt = grid.dt();
    const std::size_t steps = grid.steps();
    for (const auto& line : lines) {
        const Displacement d = line_displacement(line);
        const auto& s = grid.points[nearest_grid_point(grid, line.mid_lat(), line.mid_lon())].series;
        CoupledVoltageSeries cv{line.branch, std::vector<double>(steps)};
        for (std::size_t k = 0; k < steps; ++k) cv.v_dc[k] = coupled_voltage(d, {s.e_e[k], s.e_n[k]});
        set.series.push_back(std::move(cv));
    }
    return set;
}

BranchVoltageSet couple_uniform_field(const std::vector<LineGeometry>& lines, const std::vector<FieldVector>& field) {
    BranchVoltageSet set;
    for (const auto& line : lines) {
        const Displacement d = line_displacement(line);
        CoupledVoltageSeries cv{line.branch, std::vector<double>(field.size())};
        for (std::size_t k = 0; k < field.size(); ++k) cv.v_dc[k] = coupled_voltage(d, field[k]);
        set.series.push_back(std::move(cv));
    }
    return set;
}

BranchVoltageSet read_branch_voltages(const std::string& path) {
    const auto table = textio::read_table(path);
    BranchVoltageSet set;
    set.dt = table.meta_number("dt", 0.0);
    for (const auto& row : table.rows) {
        if (row.empty()) continue;
        const double id = row[0];
        if (id != std::floor(id)) throw std::runtime_error(path + ": branch id must be an integer");
        CoupledVoltageSeries cv{static_cast<int>(id), std::vector<double>(row.begin() + 1, row.end())};
        if (!set.series.empty() && cv.v_dc.size() != set.series.front().v_dc.size()) {
            throw std::runtime_error(path + ": branch " + std::to_string(cv.branch) + " has a different series length");
        }
        set.series.push_back(std::move(cv));
    }
    return set;
}

std::string format_branch_voltages(const BranchVoltageSet& set) {
    std::ostringstream out;
    if (set.dt > 0.0) out << "# dt " << textio::fmt(set.dt) << '\n';
    for (const auto& cv : set.series) {
        out << cv.branch;
        for (double v : cv.v_dc) out << ' ' << textio::fmt(v);
        out << '\n';
    }
    return out.str();
}

void write_branch_voltages(const BranchVoltageSet& set, const std::string& path) {
    textio::write_file(path, format_branch_voltages(set));
}

}  // namespace gmdcascade
