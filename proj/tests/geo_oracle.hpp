#pragma once

// Test-only geofield oracles: random and flat transfer functions, a dense
// spline, an O(n^2) DFT conversion and tone generators.

#include "gmdcascade/geofield.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace gmdtest {

using namespace gmdcascade;
using cplx = std::complex<double>;

inline TransferFunction make_tf(std::vector<double> freqs, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    TransferFunction tf;
    tf.frequencies = std::move(freqs);
    for (std::size_t i = 0; i < tf.frequencies.size(); ++i) {
        ImpedanceTensor z;
        for (std::size_t c = 0; c < 4; ++c) z[c] = cplx(u(rng), u(rng));
        tf.z.push_back(z);
    }
    return tf;
}

inline TransferFunction flat_tf(cplx nn, cplx ne, cplx en, cplx ee) {
    TransferFunction tf;
    tf.frequencies = {1e-5, 1e-3, 1e-1};
    for (int i = 0; i < 3; ++i) tf.z.push_back({nn, ne, en, ee});
    return tf;
}

// Natural cubic spline through (x, y), evaluated at q, assembled as one dense system.
inline double dense_natural_spline(const std::vector<double>& x, const std::vector<double>& y, double q) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    M(0, 0) = 1.0;
    M(n - 1, n - 1) = 1.0;
    for (int i = 1; i < n - 1; ++i) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        M(i, i - 1) = h0 / 6.0;
        M(i, i) = (h0 + h1) / 3.0;
        M(i, i + 1) = h1 / 6.0;
        r[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    const Eigen::VectorXd m = M.fullPivLu().solve(r);
    int k = 0;
    while (k < n - 2 && q > x[k + 1]) ++k;
    const double h = x[k + 1] - x[k];
    const double a = (x[k + 1] - q) / h, b = (q - x[k]) / h;
    return a * y[k] + b * y[k + 1] + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0;
}

inline double component(const ImpedanceTensor& z, int c) {
    const cplx v = z[static_cast<std::size_t>(c / 2)];
    return c % 2 == 0 ? v.real() : v.imag();
}

// Whole conversion evaluated with an O(n^2) DFT.
inline FieldSeries brute_force_field(const MagneticSeries& b, const TransferFunction& tf, double taper_fraction) {
    const std::size_t n = b.size();
    const auto w = cosine_taper(n, taper_fraction);
    auto spectrum = [&](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(n);
        std::vector<cplx> f(n);
        for (std::size_t k = 0; k < n; ++k) {
            cplx acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                acc += (v[t] - mean) * w[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / double(n));
            }
            f[k] = acc;
        }
        return f;
    };
    const auto bn = spectrum(b.b_n), be = spectrum(b.b_e);
    std::vector<cplx> en(n, 0.0), ee(n, 0.0);
    for (std::size_t k = 1; 2 * k <= n; ++k) {
        const ImpedanceTensor z = interpolate_tf(tf, double(k) / (double(n) * b.dt));
        cplx a = (z.nn * bn[k] + z.ne * be[k]) / 1000.0;
        cplx c = (z.en * bn[k] + z.ee * be[k]) / 1000.0;
        if (2 * k == n) {
            en[k] = a.real();
            ee[k] = c.real();
        } else {
            en[k] = a;
            ee[k] = c;
            en[n - k] = std::conj(a);
            ee[n - k] = std::conj(c);
        }
    }
    FieldSeries out;
    out.dt = b.dt;
    for (std::size_t t = 0; t < n; ++t) {
        cplx sn = 0.0, se = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * double(k * t) / double(n));
            sn += en[k] * e;
            se += ee[k] * e;
        }
        out.e_n.push_back(sn.real() / double(n));
        out.e_e.push_back(se.real() / double(n));
    }
    return out;
}

inline MagneticSeries tones(std::size_t n, double dt, std::vector<std::pair<double, double>> bins_amp_n,
                     std::vector<std::pair<double, double>> bins_amp_e) {
    MagneticSeries b;
    b.dt = dt;
    for (std::size_t t = 0; t < n; ++t) {
        double vn = 3.0, ve = -1.0;
        for (auto [bin, amp] : bins_amp_n) vn += amp * std::sin(2.0 * std::numbers::pi * bin * double(t) / double(n));
        for (auto [bin, amp] : bins_amp_e) ve += amp * std::cos(2.0 * std::numbers::pi * bin * double(t) / double(n));
        b.b_n.push_back(vn);
        b.b_e.push_back(ve);
    }
    return b;
}

}  // namespace gmdtest
