#include "gmdcascade/geofield.hpp"

#include "gmdcascade/textio.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gmdcascade {

using cplx = std::complex<double>;

std::complex<double>& ImpedanceTensor::operator[](std::size_t i) {
    switch (i) {
        case 0: return nn;
        case 1: return ne;
        case 2: return en;
        case 3: return ee;
        default: throw std::out_of_range("impedance tensor index");
    }
}

const std::complex<double>& ImpedanceTensor::operator[](std::size_t i) const {
    return const_cast<ImpedanceTensor&>(*this)[i];
}

void TransferFunction::check() const {
    if (frequencies.size() < 2) throw std::invalid_argument("transfer function needs at least 2 frequencies");
    if (z.size() != frequencies.size()) throw std::invalid_argument("transfer function tensor count mismatch");
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > 0.0)) throw std::invalid_argument("transfer function frequencies must be > 0");
        if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
            throw std::invalid_argument("transfer function frequencies must be strictly increasing");
        }
    }
}

void MagneticSeries::check() const {
    if (!(dt > 0.0)) throw std::invalid_argument("magnetic series dt must be > 0");
    if (b_n.empty() || b_n.size() != b_e.size()) {
        throw std::invalid_argument("magnetic series components must be non-empty and equal length");
    }
}

void FieldGrid::check() const {
    if (points.empty()) return;
    const auto& ref = points.front().series;
    for (const auto& p : points) {
        const auto& s = p.series;
        if (s.size() != ref.size() || s.e_e.size() != s.e_n.size() || s.dt != ref.dt || s.t0 != ref.t0) {
            throw std::invalid_argument("field grid series must share t0, dt and length");
        }
    }
}

// ---------------------------------------------------------------------------
// Transfer function interpolation

TfInterpolator::TfInterpolator(const TransferFunction& tf) {
    tf.check();
    const std::size_t n = tf.frequencies.size();
    x_.resize(n);
    for (std::size_t i = 0; i < n; ++i) x_[i] = std::log(tf.frequencies[i]);
    for (std::size_t c = 0; c < 8; ++c) {
        y_[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx v = tf.z[i][c / 2];
            y_[c][i] = (c % 2 == 0) ? v.real() : v.imag();
        }
    }
    cubic_ = n >= 4;
    if (!cubic_) return;

    // Natural spline: tridiagonal system for interior second derivatives.
    for (std::size_t c = 0; c < 8; ++c) {
        const auto& y = y_[c];
        std::vector<double> m(n, 0.0), diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        // Thomas algorithm over rows 1..n-2; sub-diagonal of row i is h_{i-1}.
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double lower = x_[i] - x_[i - 1];
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            const double next = (i + 2 < n) ? m[i + 1] : 0.0;
            m[i] = (rhs[i] - upper[i] * next) / diag[i];
            if (i == 1) break;
        }
        m_[c] = std::move(m);
    }
}

ImpedanceTensor TfInterpolator::operator()(double freq) const {
    if (!(freq > 0.0)) throw std::invalid_argument("interpolation frequency must be > 0");
    const double x = std::log(freq);
    const std::size_t n = x_.size();

    std::array<double, 8> out{};
    if (x <= x_.front() || x >= x_.back()) {
        const std::size_t k = x <= x_.front() ? 0 : n - 1;
        for (std::size_t c = 0; c < 8; ++c) out[c] = y_[c][k];
    } else {
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t hi = static_cast<std::size_t>(it - x_.begin());
        const std::size_t lo = hi - 1;
        const double h = x_[hi] - x_[lo];
        const double a = (x_[hi] - x) / h;
        const double b = (x - x_[lo]) / h;
        for (std::size_t c = 0; c < 8; ++c) {
            double v = a * y_[c][lo] + b * y_[c][hi];
            if (cubic_) {
                v += ((a * a * a - a) * m_[c][lo] + (b * b * b - b) * m_[c][hi]) * h * h / 6.0;
            }
            out[c] = v;
        }
    }

    ImpedanceTensor t;
    for (std::size_t k = 0; k < 4; ++k) t[k] = cplx(out[2 * k], out[2 * k + 1]);
    return t;
}

ImpedanceTensor interpolate_tf(const TransferFunction& tf, double freq) {
    if (!(freq > 0.0)) throw std::invalid_argument("interpolation frequency must be > 0");
    return TfInterpolator(tf)(freq);
}

// ---------------------------------------------------------------------------
// Geoelectric field

std::vector<double> cosine_taper(std::size_t n, double fraction) {
    std::vector<double> w(n, 1.0);
    if (fraction <= 0.0 || n < 2) return w;
    const auto m = static_cast<std::size_t>(std::floor(std::min(fraction, 0.5) * static_cast<double>(n)));
    if (m == 0) return w;
    for (std::size_t i = 0; i < m; ++i) {
        const double v = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(m)));
        w[i] = v;
        w[n - 1 - i] = v;
    }
    return w;
}

FieldSeries compute_geoelectric(const MagneticSeries& b, const TransferFunction& tf, const GeoelectricOptions& opts) {
    b.check();
    const std::size_t n = b.size();
    const std::size_t nfft = std::max(opts.fft_length, n);
    const TfInterpolator z(tf);
    const std::vector<double> taper = cosine_taper(n, opts.taper_fraction);

    auto prepare = [&](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(n);
        std::vector<cplx> out(nfft, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < n; ++i) out[i] = (v[i] - mean) * taper[i];
        return out;
    };

    Eigen::FFT<double> fft;
    std::vector<cplx> bn_t = prepare(b.b_n);
    std::vector<cplx> be_t = prepare(b.b_e);
    std::vector<cplx> bn_f, be_f;
    fft.fwd(bn_f, bn_t);
    fft.fwd(be_f, be_t);

    std::vector<cplx> en_f(nfft, cplx(0.0, 0.0)), ee_f(nfft, cplx(0.0, 0.0));
    const double df = 1.0 / (static_cast<double>(nfft) * b.dt);
    constexpr double kMilliToUnit = 1e-3;  // (mV/km)/nT * nT -> V/km
    for (std::size_t k = 1; 2 * k <= nfft; ++k) {
        const ImpedanceTensor zk = z(static_cast<double>(k) * df);
        cplx en = (zk.nn * bn_f[k] + zk.ne * be_f[k]) * kMilliToUnit;
        cplx ee = (zk.en * bn_f[k] + zk.ee * be_f[k]) * kMilliToUnit;
        if (2 * k == nfft) {
            // Nyquist bin is its own mirror; keep it real.
            en = cplx(en.real(), 0.0);
            ee = cplx(ee.real(), 0.0);
            en_f[k] = en;
            ee_f[k] = ee;
        } else {
            en_f[k] = en;
            ee_f[k] = ee;
            en_f[nfft - k] = std::conj(en);
            ee_f[nfft - k] = std::conj(ee);
        }
    }

    std::vector<cplx> en_t, ee_t;
    fft.inv(en_t, en_f);
    fft.inv(ee_t, ee_f);

    FieldSeries out;
    out.t0 = b.t0;
    out.dt = b.dt;
    out.e_n.resize(n);
    out.e_e.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.e_n[i] = en_t[i].real();
        out.e_e[i] = ee_t[i].real();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Site selection

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusKm = 6371.0088;
    constexpr double deg = std::numbers::pi / 180.0;
    const double p1 = lat1 * deg, p2 = lat2 * deg;
    const double dp = (lat2 - lat1) * deg;
    const double dl = (lon2 - lon1) * deg;
    const double s = std::sin(dp / 2.0);
    const double t = std::sin(dl / 2.0);
    const double a = s * s + std::cos(p1) * std::cos(p2) * t * t;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::size_t nearest_tf_index(const std::vector<TransferFunction>& sites, double lat, double lon) {
    if (sites.empty()) throw std::invalid_argument("no transfer function sites");
    std::size_t best = 0;
    double best_d = great_circle_km(lat, lon, sites[0].site_lat, sites[0].site_lon);
    for (std::size_t i = 1; i < sites.size(); ++i) {
        const double d = great_circle_km(lat, lon, sites[i].site_lat, sites[i].site_lon);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

const TransferFunction& nearest_tf(const std::vector<TransferFunction>& sites, double lat, double lon) {
    return sites[nearest_tf_index(sites, lat, lon)];
}

FieldGrid compute_field_grid(const std::vector<MagneticGridPoint>& points, const std::vector<TransferFunction>& sites,
                             const GeoelectricOptions& opts) {
    FieldGrid grid;
    grid.points.reserve(points.size());
    for (const auto& p : points) {
        const auto& tf = nearest_tf(sites, p.lat, p.lon);
        grid.points.push_back({p.lat, p.lon, compute_geoelectric(p.series, tf, opts)});
    }
    grid.check();
    return grid;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

const char* const kTfColumns[] = {"frequency_hz", "nn_re", "nn_im", "ne_re", "ne_im",
                                  "en_re",        "en_im", "ee_re", "ee_im"};

template <typename Series>
Series read_two_column_series(const std::string& path, const char* c0, const char* c1) {
    const auto table = textio::read_table(path);
    Series s;
    s.t0 = table.meta_number("t0", 0.0);
    s.dt = table.meta_number("dt");
    if (!table.header.empty() && (table.header.size() != 2 || table.header[0] != c0 || table.header[1] != c1)) {
        throw std::runtime_error(path + ": expected columns '" + c0 + " " + c1 + "'");
    }
    for (const auto& row : table.rows) {
        if (row.size() != 2) throw std::runtime_error(path + ": expected 2 columns per row");
        if constexpr (std::is_same_v<Series, MagneticSeries>) {
            s.b_n.push_back(row[0]);
            s.b_e.push_back(row[1]);
        } else {
            s.e_n.push_back(row[0]);
            s.e_e.push_back(row[1]);
        }
    }
    return s;
}

std::string two_column_text(double t0, double dt, const char* c0, const char* c1, const std::vector<double>& a,
                            const std::vector<double>& b) {
    std::ostringstream out;
    out << "# t0 " << textio::fmt(t0) << "\n# dt " << textio::fmt(dt) << "\n" << c0 << ' ' << c1 << '\n';
    for (std::size_t i = 0; i < a.size(); ++i) out << textio::fmt(a[i]) << ' ' << textio::fmt(b[i]) << '\n';
    return out.str();
}

struct IndexRow {
    double lat, lon;
    std::string file;
};

std::vector<IndexRow> read_index(const std::string& path, bool file_first) {
    std::istringstream in(textio::read_file(path));
    std::vector<IndexRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        IndexRow r{};
        bool ok = file_first ? static_cast<bool>(ls >> r.file >> r.lat >> r.lon)
                             : static_cast<bool>(ls >> r.lat >> r.lon >> r.file);
        if (!ok) {
            // Allow a header row of column names.
            if (rows.empty()) continue;
            throw std::runtime_error(path + ": malformed index row '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TransferFunction read_tf_file(const std::string& path, double lat, double lon) {
    const auto table = textio::read_table(path);
    TransferFunction tf;
    tf.site_lat = lat;
    tf.site_lon = lon;
    for (const auto& row : table.rows) {
        if (row.size() != 9) throw std::runtime_error(path + ": expected 9 columns per row");
        tf.frequencies.push_back(row[0]);
        ImpedanceTensor t;
        for (std::size_t k = 0; k < 4; ++k) t[k] = cplx(row[1 + 2 * k], row[2 + 2 * k]);
        tf.z.push_back(t);
    }
    try {
        tf.check();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return tf;
}

void write_tf_file(const TransferFunction& tf, const std::string& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < 9; ++i) out << (i ? " " : "") << kTfColumns[i];
    out << '\n';
    for (std::size_t i = 0; i < tf.frequencies.size(); ++i) {
        out << textio::fmt(tf.frequencies[i]);
        for (std::size_t k = 0; k < 4; ++k) {
            out << ' ' << textio::fmt(tf.z[i][k].real()) << ' ' << textio::fmt(tf.z[i][k].imag());
        }
        out << '\n';
    }
    textio::write_file(path, out.str());
}

std::vector<TransferFunction> read_tf_sites(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::vector<TransferFunction> sites;
    for (const auto& row : read_index((base / "sites.txt").string(), true)) {
        sites.push_back(read_tf_file((base / row.file).string(), row.lat, row.lon));
    }
    if (sites.empty()) throw std::runtime_error(dir + ": no transfer function sites listed");
    return sites;
}

MagneticSeries read_magnetic_series(const std::string& path) {
    auto s = read_two_column_series<MagneticSeries>(path, "b_n", "b_e");
    try {
        s.check();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return s;
}

void write_magnetic_series(const MagneticSeries& b, const std::string& path) {
    textio::write_file(path, two_column_text(b.t0, b.dt, "b_n", "b_e", b.b_n, b.b_e));
}

FieldSeries read_field_series(const std::string& path) {
    return read_two_column_series<FieldSeries>(path, "e_n", "e_e");
}

void write_field_series(const FieldSeries& e, const std::string& path) {
    textio::write_file(path, two_column_text(e.t0, e.dt, "e_n", "e_e", e.e_n, e.e_e));
}

FieldGrid read_field_grid(const std::string& dir) {
    const std::filesystem::path base(dir);
    FieldGrid grid;
    for (const auto& row : read_index((base / "index.txt").string(), false)) {
        grid.points.push_back({row.lat, row.lon, read_field_series((base / row.file).string())});
    }
    if (grid.points.empty()) throw std::runtime_error(dir + ": empty field grid");
    grid.check();
    return grid;
}

void write_field_grid(const FieldGrid& grid, const std::string& dir) {
    textio::ensure_directory(dir);
    const std::filesystem::path base(dir);
    std::ostringstream index;
    index << "lat lon file\n";
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const std::string file = "point_" + std::to_string(i) + ".txt";
        index << textio::fmt(grid.points[i].lat) << ' ' << textio::fmt(grid.points[i].lon) << ' ' << file << '\n';
        write_field_series(grid.points[i].series, (base / file).string());
    }
    textio::write_file((base / "index.txt").string(), index.str());
}

std::vector<MagneticGridPoint> read_magnetic_grid(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::vector<MagneticGridPoint> pts;
    for (const auto& row : read_index((base / "index.txt").string(), false)) {
        pts.push_back({row.lat, row.lon, read_magnetic_series((base / row.file).string())});
    }
    if (pts.empty()) throw std::runtime_error(dir + ": empty magnetic grid");
    return pts;
}

void write_magnetic_grid(const std::vector<MagneticGridPoint>& grid, const std::string& dir) {
    textio::ensure_directory(dir);
    const std::filesystem::path base(dir);
    std::ostringstream index;
    index << "lat lon file\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::string file = "point_" + std::to_string(i) + ".txt";
        index << textio::fmt(grid[i].lat) << ' ' << textio::fmt(grid[i].lon) << ' ' << file << '\n';
        write_magnetic_series(grid[i].series, (base / file).string());
    }
    textio::write_file((base / "index.txt").string(), index.str());
}

}  // namespace gmdcascade
