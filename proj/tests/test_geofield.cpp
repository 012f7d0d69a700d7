#include <catch_amalgamated.hpp>

#include "geo_oracle.hpp"
#include "gmdcascade/geofield.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

using namespace gmdcascade;
using Catch::Approx;
using cplx = std::complex<double>;
using namespace gmdtest;


TEST_CASE("interpolation reproduces knot values", "[geofield]") {
    std::mt19937 rng(7);
    const auto tf = make_tf({1e-4, 3e-4, 1e-3, 5e-3, 2e-2, 1e-1}, rng);
    for (std::size_t i = 0; i < tf.frequencies.size(); ++i) {
        const auto z = interpolate_tf(tf, tf.frequencies[i]);
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(z[c].real() == Approx(tf.z[i][c].real()).margin(1e-12));
            CHECK(z[c].imag() == Approx(tf.z[i][c].imag()).margin(1e-12));
        }
    }
}

TEST_CASE("interpolation matches a dense natural spline", "[geofield]") {
    std::mt19937 rng(11);
    const auto tf = make_tf({1e-4, 2e-4, 1e-3, 4e-3, 1e-2, 6e-2, 1e-1}, rng);
    std::vector<double> x;
    for (double f : tf.frequencies) x.push_back(std::log(f));
    std::uniform_real_distribution<double> q(std::log(1e-4), std::log(1e-1));
    for (int trial = 0; trial < 50; ++trial) {
        const double lf = q(rng);
        const auto z = interpolate_tf(tf, std::exp(lf));
        for (int c = 0; c < 8; ++c) {
            std::vector<double> y;
            for (const auto& k : tf.z) y.push_back(component(k, c));
            CHECK(component(z, c) == Approx(dense_natural_spline(x, y, lf)).margin(1e-10));
        }
    }
}

TEST_CASE("two knots interpolate linearly in log frequency", "[geofield]") {
    TransferFunction tf;
    tf.frequencies = {1e-3, 1e-1};
    tf.z = {{cplx(1, 2), cplx(0, 0), cplx(0, 0), cplx(4, -2)}, {cplx(3, 0), cplx(2, 2), cplx(0, 0), cplx(0, 0)}};
    const auto z = interpolate_tf(tf, 1e-2);  // halfway in log
    CHECK(z.nn.real() == Approx(2.0));
    CHECK(z.nn.imag() == Approx(1.0));
    CHECK(z.ne.imag() == Approx(1.0));
    CHECK(z.ee.real() == Approx(2.0));

    // Outside the band the endpoint tensor is used.
    CHECK(interpolate_tf(tf, 1e-6).nn == tf.z[0].nn);
    CHECK(interpolate_tf(tf, 10.0).ne == tf.z[1].ne);
}

TEST_CASE("malformed transfer functions are rejected", "[geofield]") {
    TransferFunction tf;
    tf.frequencies = {1e-2};
    tf.z.resize(1);
    CHECK_THROWS_AS(tf.check(), std::invalid_argument);
    tf.frequencies = {1e-2, 1e-3};
    tf.z.resize(2);
    CHECK_THROWS_AS(tf.check(), std::invalid_argument);
}

TEST_CASE("taper window shape", "[geofield]") {
    const auto w = cosine_taper(100, 0.1);
    CHECK(w.front() == Approx(0.0).margin(1e-12));
    CHECK(w.back() == Approx(0.0).margin(1e-12));
    for (std::size_t i = 10; i < 90; ++i) CHECK(w[i] == 1.0);
    const auto flat = cosine_taper(50, 0.0);
    for (double v : flat) CHECK(v == 1.0);
}

TEST_CASE("single tone through a flat response", "[geofield]") {
    const std::size_t n = 1000;
    const double z0 = 250.0;
    const MagneticSeries b = tones(n, 60.0, {{25.0, 100.0}}, {});
    const FieldSeries e = compute_geoelectric(b, flat_tf(z0, 0.0, 0.0, 0.0));
    for (std::size_t t = n / 10; t < n - n / 10; ++t) {
        const double expected = z0 / 1000.0 * (b.b_n[t] - 3.0);
        CHECK(std::abs(e.e_n[t] - expected) <= 0.02 * z0 / 1000.0 * 100.0);
        CHECK(std::abs(e.e_e[t]) <= 1e-12);
    }
}

TEST_CASE("two tones match the brute-force DFT", "[geofield]") {
    std::mt19937 rng(3);
    const auto tf = make_tf({1e-5, 1e-4, 5e-4, 2e-3, 1e-2}, rng);
    for (std::size_t n : {256u, 301u}) {
        const MagneticSeries b = tones(n, 10.0, {{7.0, 80.0}, {31.0, 15.0}}, {{4.0, 60.0}, {19.5, 25.0}});
        const FieldSeries fast = compute_geoelectric(b, tf);
        const FieldSeries slow = brute_force_field(b, tf, 0.1);
        for (std::size_t t = 0; t < n; ++t) {
            CHECK(std::abs(fast.e_n[t] - slow.e_n[t]) <= 1e-9);
            CHECK(std::abs(fast.e_e[t] - slow.e_e[t]) <= 1e-9);
        }
    }
}

TEST_CASE("zero and constant input give zero field", "[geofield]") {
    std::mt19937 rng(5);
    const auto tf = make_tf({1e-4, 1e-3, 1e-2}, rng);
    MagneticSeries b;
    b.dt = 1.0;
    b.b_n.assign(128, 0.0);
    b.b_e.assign(128, 40.0);
    const FieldSeries e = compute_geoelectric(b, tf);
    for (std::size_t t = 0; t < 128; ++t) {
        CHECK(std::abs(e.e_n[t]) <= 1e-12);
        CHECK(std::abs(e.e_e[t]) <= 1e-12);
    }
}

TEST_CASE("conversion is linear", "[geofield][property]") {
    std::mt19937 rng(17);
    const auto tf = make_tf({1e-4, 1e-3, 1e-2, 1e-1}, rng);
    std::normal_distribution<double> nd(0.0, 50.0);
    MagneticSeries a, b, sum;
    a.dt = b.dt = sum.dt = 5.0;
    for (int t = 0; t < 200; ++t) {
        a.b_n.push_back(nd(rng));
        a.b_e.push_back(nd(rng));
        b.b_n.push_back(nd(rng));
        b.b_e.push_back(nd(rng));
        sum.b_n.push_back(2.0 * a.b_n.back() - 0.5 * b.b_n.back());
        sum.b_e.push_back(2.0 * a.b_e.back() - 0.5 * b.b_e.back());
    }
    const auto ea = compute_geoelectric(a, tf), eb = compute_geoelectric(b, tf), es = compute_geoelectric(sum, tf);
    for (std::size_t t = 0; t < 200; ++t) {
        CHECK(es.e_n[t] == Approx(2.0 * ea.e_n[t] - 0.5 * eb.e_n[t]).margin(1e-10));
        CHECK(es.e_e[t] == Approx(2.0 * ea.e_e[t] - 0.5 * eb.e_e[t]).margin(1e-10));
    }
}

TEST_CASE("flat real response preserves energy of the tapered input", "[geofield][property]") {
    std::mt19937 rng(23);
    std::normal_distribution<double> nd(0.0, 30.0);
    MagneticSeries b;
    b.dt = 1.0;
    const std::size_t n = 257;  // odd length: no Nyquist bin
    for (std::size_t t = 0; t < n; ++t) {
        b.b_n.push_back(nd(rng));
        b.b_e.push_back(nd(rng));
    }
    const double z0 = 400.0;
    const FieldSeries e = compute_geoelectric(b, flat_tf(0.0, 0.0, 0.0, z0));
    const auto w = cosine_taper(n, 0.1);
    double mean = 0.0;
    for (double v : b.b_e) mean += v;
    mean /= double(n);
    double ein = 0.0, eout = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double x = (b.b_e[t] - mean) * w[t];
        ein += x * x;
        eout += e.e_e[t] * e.e_e[t];
    }
    // Only the dc bin of the tapered sequence is removed.
    double dc = 0.0;
    for (std::size_t t = 0; t < n; ++t) dc += (b.b_e[t] - mean) * w[t];
    const double expected = (ein - dc * dc / double(n)) * (z0 / 1000.0) * (z0 / 1000.0);
    CHECK(eout == Approx(expected).epsilon(1e-10));
}

TEST_CASE("zero padding keeps the output length", "[geofield]") {
    std::mt19937 rng(29);
    const auto tf = make_tf({1e-4, 1e-2}, rng);
    const MagneticSeries b = tones(100, 1.0, {{3.0, 10.0}}, {});
    GeoelectricOptions opts;
    opts.fft_length = 256;
    CHECK(compute_geoelectric(b, tf, opts).size() == 100);
}

TEST_CASE("nearest site selection", "[geofield]") {
    std::vector<TransferFunction> sites(3);
    sites[0].site_lat = 37.0;
    sites[0].site_lon = -79.0;
    sites[1].site_lat = 37.0;
    sites[1].site_lon = -77.0;  // same distance from (37, -78) as site 0
    sites[2].site_lat = 40.0;
    sites[2].site_lon = -78.0;
    CHECK(nearest_tf_index(sites, 37.0, -78.0) == 0);
    CHECK(nearest_tf_index(sites, 39.5, -78.0) == 2);
    CHECK(great_circle_km(0.0, 0.0, 0.0, 1.0) == Approx(6371.0088 * std::numbers::pi / 180.0));
}

TEST_CASE("series and transfer function files round trip", "[geofield]") {
    const auto dir = std::filesystem::temp_directory_path() / "gmd_geofield_io";
    std::filesystem::create_directories(dir);
    std::mt19937 rng(31);
    auto tf = make_tf({1e-4, 1e-3, 1e-2, 1e-1}, rng);
    write_tf_file(tf, (dir / "tf.txt").string());
    const auto back = read_tf_file((dir / "tf.txt").string(), 1.0, 2.0);
    REQUIRE(back.frequencies == tf.frequencies);
    for (std::size_t i = 0; i < tf.z.size(); ++i) {
        for (std::size_t c = 0; c < 4; ++c) CHECK(back.z[i][c] == tf.z[i][c]);
    }

    const MagneticSeries b = tones(50, 2.5, {{2.0, 9.0}}, {{5.0, 1.0}});
    write_magnetic_series(b, (dir / "b.txt").string());
    const auto bb = read_magnetic_series((dir / "b.txt").string());
    CHECK(bb.dt == 2.5);
    CHECK(bb.b_n == b.b_n);
    CHECK(bb.b_e == b.b_e);
    std::filesystem::remove_all(dir);
}
