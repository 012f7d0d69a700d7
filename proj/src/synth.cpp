#include "gmdcascade/synth.hpp"

#include "gmdcascade/coupling.hpp"
#include "gmdcascade/geofield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace gmdcascade {

namespace {

// Platform-independent draws from the fully specified 64-bit Mersenne twister.
class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    int index(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }

private:
    std::mt19937_64 rng_;
};

constexpr double kHighKv = 345.0;
constexpr double kLowKv = 138.0;
// 345 kV line constants per km.
constexpr double kOhmPerKm = 0.037;
constexpr double kReactancePerKm = 0.367;
constexpr double kSiemensPerKm = 4.5e-6;

}  // namespace

NetworkCase synthesize_case(const SynthOptions& opts) {
    if (opts.buses < 2) throw std::invalid_argument("synthetic case needs at least 2 buses");
    Draw draw(opts.seed);
    const int n = opts.buses;
    const int transmission = std::clamp(static_cast<int>(std::lround(n * 73.0 / 169.0)), 1, n - 1);
    const int gens = n - transmission;
    const int low = transmission >= 4 ? transmission / 4 : 0;
    const int high = transmission - low;

    NetworkCase net;
    net.base_mva = 100.0;

    // Substations on a jittered grid.
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(high))));
    const int rows = (high + cols - 1) / cols;
    const double dlat = opts.spacing_km / kKmPerDegree;
    const double dlon = opts.spacing_km / (kKmPerDegree * std::cos(opts.center_lat * std::numbers::pi / 180.0));
    for (int i = 0; i < high; ++i) {
        Bus b;
        b.id = i + 1;
        b.name = "S" + std::to_string(b.id);
        b.base_kv = kHighKv;
        b.lat = opts.center_lat + (i / cols - 0.5 * (rows - 1)) * dlat + draw.uniform(-0.25, 0.25) * dlat;
        b.lon = opts.center_lon + (i % cols - 0.5 * (cols - 1)) * dlon + draw.uniform(-0.25, 0.25) * dlon;
        net.buses.push_back(b);

        Substation s;
        s.id = b.id;
        s.lat = b.lat;
        s.lon = b.lon;
        s.grounding_resistance = draw.uniform(0.1, 0.5);
        s.buses = {b.id};
        net.substations.push_back(s);
    }

    // Mesh: minimum spanning tree on distance plus short chords.
    auto dist = [&](int a, int b) {
        const Bus& x = net.buses[static_cast<std::size_t>(a)];
        const Bus& y = net.buses[static_cast<std::size_t>(b)];
        return great_circle_km(x.lat, x.lon, y.lat, y.lon);
    };
    std::vector<std::pair<int, int>> edges;
    {
        std::vector<bool> in(static_cast<std::size_t>(high), false);
        std::vector<double> best(static_cast<std::size_t>(high), 1e300);
        std::vector<int> via(static_cast<std::size_t>(high), -1);
        best[0] = 0.0;
        for (int step = 0; step < high; ++step) {
            int u = -1;
            for (int i = 0; i < high; ++i) {
                if (!in[static_cast<std::size_t>(i)] && (u < 0 || best[static_cast<std::size_t>(i)] < best[static_cast<std::size_t>(u)])) u = i;
            }
            in[static_cast<std::size_t>(u)] = true;
            if (via[static_cast<std::size_t>(u)] >= 0) edges.emplace_back(via[static_cast<std::size_t>(u)], u);
            for (int i = 0; i < high; ++i) {
                const double d = dist(u, i);
                if (!in[static_cast<std::size_t>(i)] && d < best[static_cast<std::size_t>(i)]) {
                    best[static_cast<std::size_t>(i)] = d;
                    via[static_cast<std::size_t>(i)] = u;
                }
            }
        }
    }
    auto connected = [&](int a, int b) {
        return std::any_of(edges.begin(), edges.end(), [&](const auto& e) {
            return (e.first == a && e.second == b) || (e.first == b && e.second == a);
        });
    };
    for (int i = 0; i < high; ++i) {
        int nearest = -1;
        for (int j = 0; j < high; ++j) {
            if (j == i || connected(i, j)) continue;
            if (nearest < 0 || dist(i, j) < dist(i, nearest)) nearest = j;
        }
        const double roll = draw.uniform(0.0, 1.0);
        if (nearest >= 0 && roll < 0.4 && dist(i, nearest) < 1.8 * opts.spacing_km) edges.emplace_back(i, nearest);
    }

    const double z_base = kHighKv * kHighKv / net.base_mva;
    int branch_id = 0;
    for (const auto& [a, b] : edges) {
        const double km = std::max(dist(a, b), 1.0);
        Branch br;
        br.id = ++branch_id;
        br.from_bus = a + 1;
        br.to_bus = b + 1;
        br.kind = BranchKind::line;
        br.series_admittance = 1.0 / Complex(kOhmPerKm * km / z_base, kReactancePerKm * km / z_base);
        br.charging_b = kSiemensPerKm * km * z_base;
        br.angle_limit = std::numbers::pi / 6.0;
        br.thermal_rating = std::round(draw.uniform(500.0, 900.0));
        net.branches.push_back(br);
    }

    // 138 kV load buses behind autotransformers in existing substations.
    for (int k = 0; k < low; ++k) {
        const int host = (k * high) / std::max(low, 1);
        const Bus& hv = net.buses[static_cast<std::size_t>(host)];
        Bus b = hv;
        b.id = high + k + 1;
        b.name = hv.name + "_LV";
        b.base_kv = kLowKv;
        net.buses.push_back(b);
        net.substations[static_cast<std::size_t>(host)].buses.push_back(b.id);
    }

    // Generators on 345 kV buses.
    double capacity = 0.0;
    for (int g = 0; g < gens; ++g) {
        Generator gen;
        gen.id = g + 1;
        gen.bus = draw.index(high) + 1;
        gen.pmax = std::round(draw.uniform(20.0, 180.0));
        gen.pmin = 0.2 * gen.pmax;
        gen.qmin = -0.3 * gen.pmax;
        gen.qmax = 0.5 * gen.pmax;
        gen.ramp_rate = gen.pmax * draw.uniform(0.01, 0.03);
        capacity += gen.pmax;
        net.generators.push_back(gen);
    }
    const auto largest = std::max_element(net.generators.begin(), net.generators.end(),
                                          [](const Generator& a, const Generator& b) { return a.pmax < b.pmax; });
    net.buses[static_cast<std::size_t>(largest->bus - 1)].is_reference = true;

    // Loads on every transmission bus, scaled to the target share of capacity.
    std::vector<double> weight(static_cast<std::size_t>(transmission));
    double total_weight = 0.0;
    for (auto& w : weight) {
        w = draw.uniform(0.5, 1.5);
        total_weight += w;
    }
    for (int i = 0; i < transmission; ++i) {
        Load l;
        l.id = i + 1;
        l.bus = i + 1;
        l.pd = std::round(10.0 * opts.load_factor * capacity * weight[static_cast<std::size_t>(i)] / total_weight) / 10.0;
        l.qd = std::round(2.0 * l.pd) / 10.0;
        net.loads.push_back(l);
    }

    for (int k = 0; k < low; ++k) {
        const Bus& lv = net.buses[static_cast<std::size_t>(high + k)];
        const int host = (k * high) / std::max(low, 1) + 1;
        const double rating = std::round(2.0 * net.loads[static_cast<std::size_t>(high + k)].pd + 100.0);
        Branch br;
        br.id = ++branch_id;
        br.from_bus = host;
        br.to_bus = lv.id;
        br.kind = BranchKind::transformer;
        br.series_admittance = 1.0 / Complex(0.002 * net.base_mva / rating, 0.1 * net.base_mva / rating);
        br.angle_limit = std::numbers::pi / 6.0;
        br.thermal_rating = rating;
        TransformerGicModel m;
        m.config = XfmrConfig::gwye_gwye_auto;
        m.alpha = kHighKv / kLowKv;
        m.k_loss = 1.18;
        m.rated_power = rating;
        m.winding_resistances.series = 0.25;
        m.winding_resistances.common = 0.2;
        br.xfmr_config = m;
        net.branches.push_back(br);
    }

    GsuDefaults gsu;
    NetworkCase out = attach_gsu_transformers(net, gsu);
    validate(out);
    return out;
}

}  // namespace gmdcascade
