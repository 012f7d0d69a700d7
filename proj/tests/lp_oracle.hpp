#pragma once

// Test-only LP oracle: random bounded LPs and exhaustive vertex enumeration.

#include "gmdcascade/conic.hpp"

#include <Eigen/Dense>

#include <limits>
#include <random>
#include <vector>

namespace gmdtest {

struct DenseLp {
    int n = 0;
    std::vector<double> c;
    std::vector<std::vector<double>> G;  // G x <= h (box included)
    std::vector<double> h;
    std::vector<double> interior;
};

inline DenseLp random_bounded_lp(std::mt19937& rng, int n, int extra_rows) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> box(1.0, 5.0);
    DenseLp lp;
    lp.n = n;
    lp.interior.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        lp.c.push_back(u(rng) * 3.0);
        lp.interior[static_cast<std::size_t>(j)] = 0.5 * u(rng);
        const double b = box(rng);
        std::vector<double> up(static_cast<std::size_t>(n), 0.0), lo(static_cast<std::size_t>(n), 0.0);
        up[static_cast<std::size_t>(j)] = 1.0;
        lo[static_cast<std::size_t>(j)] = -1.0;
        lp.G.push_back(up);
        lp.h.push_back(b);
        lp.G.push_back(lo);
        lp.h.push_back(b);
    }
    for (int r = 0; r < extra_rows; ++r) {
        std::vector<double> row(static_cast<std::size_t>(n));
        double lhs = 0.0;
        for (int j = 0; j < n; ++j) {
            row[static_cast<std::size_t>(j)] = u(rng) * 2.0;
            lhs += row[static_cast<std::size_t>(j)] * lp.interior[static_cast<std::size_t>(j)];
        }
        lp.G.push_back(row);
        lp.h.push_back(lhs + 0.2 + std::abs(u(rng)));
    }
    return lp;
}

inline gmdcascade::conic::ConicProgram to_program(const DenseLp& lp) {
    using namespace gmdcascade::conic;
    ConicProgram p;
    for (int j = 0; j < lp.n; ++j) {
        p.add_variable();
        p.set_objective_coefficient(j, lp.c[static_cast<std::size_t>(j)]);
    }
    for (std::size_t r = 0; r < lp.G.size(); ++r) {
        LinearExpr e;
        for (int j = 0; j < lp.n; ++j) e.add(j, lp.G[r][static_cast<std::size_t>(j)]);
        p.add_inequality(e, lp.h[r]);
    }
    return p;
}

// Minimum of c'x over all feasible basic solutions (n active constraints).
inline double vertex_enumeration_min(const DenseLp& lp) {
    const int n = lp.n;
    const int m = static_cast<int>(lp.G.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) pick[static_cast<std::size_t>(j)] = j;
    while (true) {
        Eigen::MatrixXd M(n, n);
        Eigen::VectorXd rhs(n);
        for (int r = 0; r < n; ++r) {
            const int row = pick[static_cast<std::size_t>(r)];
            for (int j = 0; j < n; ++j) M(r, j) = lp.G[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
            rhs[r] = lp.h[static_cast<std::size_t>(row)];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (lu.rank() == n) {
            const Eigen::VectorXd x = lu.solve(rhs);
            bool feasible = true;
            for (int r = 0; r < m && feasible; ++r) {
                double v = 0.0;
                for (int j = 0; j < n; ++j) v += lp.G[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] * x[j];
                feasible = v <= lp.h[static_cast<std::size_t>(r)] + 1e-9;
            }
            if (feasible) {
                double obj = 0.0;
                for (int j = 0; j < n; ++j) obj += lp.c[static_cast<std::size_t>(j)] * x[j];
                best = std::min(best, obj);
            }
        }
        // next combination
        int k = n - 1;
        while (k >= 0 && pick[static_cast<std::size_t>(k)] == m - n + k) --k;
        if (k < 0) break;
        ++pick[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < n; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return best;
}

}  // namespace gmdtest
