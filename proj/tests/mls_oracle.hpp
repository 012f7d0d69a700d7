#pragma once

// Test-only load-shed fixtures and a brute-force scan of the cascading
// two-variable problem.

#include "fixtures.hpp"
#include "gmdcascade/mls.hpp"

#include <algorithm>
#include <cmath>

namespace gmdtest {

using namespace gmdcascade;

// Generator at bus 1, load at bus 2, one low-loss line.
inline MlsSnapshot two_bus(double pmax, double pd, double rating) {
    MlsSnapshot s;
    s.net.buses = {bus(1), bus(2)};
    s.net.buses[0].is_reference = true;
    s.net.branches = {line(1, 1, 2, 0.01, rating)};
    s.net.generators = {gen(1, 1, pmax)};
    s.net.loads = {load(1, 2, pd)};
    return s;
}

// Generator and load share bus 1; a transformer to an empty bus 2 carries the GIC loss.
inline MlsSnapshot reactive_bound_case(double q_loss_pu) {
    MlsSnapshot s;
    s.net.buses = {bus(1, 345), bus(2, 138)};
    s.net.buses[0].is_reference = true;
    s.net.branches = {gmdtest::transformer(1, 1, 2, XfmrConfig::gwye_gwye)};
    Generator g = gen(1, 1, 200.0);
    g.qmin = -50.0;
    g.qmax = 50.0;
    s.net.generators = {g};
    s.net.loads = {load(1, 1, 100.0, 20.0)};
    s.q_loss = {{1, q_loss_pu}};
    s.mode = MlsMode::cascading;
    s.gen_p0 = {{1, 120.0}};
    s.gen_bounds = {{1, {100.0, 140.0}}};
    s.load_p0 = {{1, 100.0}};
    s.load_q0 = {{1, 20.0}};
    return s;
}

// Best served fraction of reactive_bound_case over a (z_g, z_d) grid. The bus
// status is best left at 1 and the transformer can only absorb reactive
// power, so reactive balance is an inequality.
inline double reactive_bound_grid_scan(double q_loss_pu, int n = 1000) {
    double best = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double zg = double(i) / n;
        for (int j = 0; j <= n; ++j) {
            const double zd = double(j) / n;
            if (std::abs(120.0 * zg - 100.0 * zd) > 120.0 / n) continue;  // active balance within one grid step
            if (120.0 * zg > 140.0) continue;                             // ramp ceiling
            const double zbus = 1.0;
            if (50.0 * zbus < 20.0 * zd + 100.0 * q_loss_pu * zbus) continue;
            best = std::max(best, zd);
        }
    }
    return best;
}

}  // namespace gmdtest
