#pragma once

// Geomagnetic -> geoelectric field conversion through empirical
// magnetotelluric transfer functions, plus the columnar text formats used
// for transfer functions and field time series.

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace gmdcascade {

/// 2x2 impedance tensor [[nn, ne], [en, ee]] in (mV/km)/nT.
struct ImpedanceTensor {
    std::complex<double> nn{}, ne{}, en{}, ee{};

    [[nodiscard]] std::complex<double>& operator[](std::size_t i);
    [[nodiscard]] const std::complex<double>& operator[](std::size_t i) const;
};

struct TransferFunction {
    double site_lat = 0.0;
    double site_lon = 0.0;
    std::vector<double> frequencies;  // Hz, strictly increasing, > 0
    std::vector<ImpedanceTensor> z;

    /// Throws std::invalid_argument when the tabulation is malformed.
    void check() const;
};

struct MagneticSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> b_n;  // nT
    std::vector<double> b_e;  // nT

    void check() const;
    [[nodiscard]] std::size_t size() const { return b_n.size(); }
};

struct FieldSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> e_n;  // V/km
    std::vector<double> e_e;  // V/km

    [[nodiscard]] std::size_t size() const { return e_n.size(); }
};

struct FieldGridPoint {
    double lat = 0.0;
    double lon = 0.0;
    FieldSeries series;
};

/// Field samples on a set of surface points sharing one time base.
struct FieldGrid {
    std::vector<FieldGridPoint> points;

    void check() const;
    [[nodiscard]] std::size_t steps() const { return points.empty() ? 0 : points.front().series.size(); }
    [[nodiscard]] double dt() const { return points.empty() ? 1.0 : points.front().series.dt; }
};

/// Spline interpolant of one transfer function. Each of the eight real
/// components is interpolated over log(frequency): natural cubic spline with
/// four or more knots, piecewise linear with two or three. Queries outside
/// the tabulated band return the nearest endpoint tensor.
class TfInterpolator {
public:
    explicit TfInterpolator(const TransferFunction& tf);

    [[nodiscard]] ImpedanceTensor operator()(double freq) const;

private:
    std::vector<double> x_;                  // log frequency knots
    std::array<std::vector<double>, 8> y_;   // knot values
    std::array<std::vector<double>, 8> m_;   // second derivatives
    bool cubic_ = false;
};

[[nodiscard]] ImpedanceTensor interpolate_tf(const TransferFunction& tf, double freq);

struct GeoelectricOptions {
    double taper_fraction = 0.1;  // cosine taper length on each end, fraction of samples
    std::size_t fft_length = 0;   // 0 = series length; larger values zero-pad
};

/// Tukey window weights for n samples with the given taper fraction per end.
[[nodiscard]] std::vector<double> cosine_taper(std::size_t n, double fraction);

[[nodiscard]] FieldSeries compute_geoelectric(const MagneticSeries& b, const TransferFunction& tf,
                                              const GeoelectricOptions& opts = {});

/// Great-circle distance in kilometres on a sphere of radius 6371.0088 km.
[[nodiscard]] double great_circle_km(double lat1, double lon1, double lat2, double lon2);

[[nodiscard]] std::size_t nearest_tf_index(const std::vector<TransferFunction>& sites, double lat, double lon);
[[nodiscard]] const TransferFunction& nearest_tf(const std::vector<TransferFunction>& sites, double lat,
                                                 double lon);

/// Geoelectric field grid from per-point magnetic series, using the nearest
/// survey site's transfer function at each point.
struct MagneticGridPoint {
    double lat = 0.0;
    double lon = 0.0;
    MagneticSeries series;
};
[[nodiscard]] FieldGrid compute_field_grid(const std::vector<MagneticGridPoint>& points,
                                           const std::vector<TransferFunction>& sites,
                                           const GeoelectricOptions& opts = {});

// Text formats.
[[nodiscard]] TransferFunction read_tf_file(const std::string& path, double lat, double lon);
void write_tf_file(const TransferFunction& tf, const std::string& path);
/// Reads a directory holding sites.txt ("file lat lon" rows) and the TF files it names.
[[nodiscard]] std::vector<TransferFunction> read_tf_sites(const std::string& dir);

[[nodiscard]] MagneticSeries read_magnetic_series(const std::string& path);
void write_magnetic_series(const MagneticSeries& b, const std::string& path);
[[nodiscard]] FieldSeries read_field_series(const std::string& path);
void write_field_series(const FieldSeries& e, const std::string& path);

/// Grid directories hold index.txt ("lat lon file" rows) plus one series file per point.
[[nodiscard]] FieldGrid read_field_grid(const std::string& dir);
void write_field_grid(const FieldGrid& grid, const std::string& dir);
[[nodiscard]] std::vector<MagneticGridPoint> read_magnetic_grid(const std::string& dir);
void write_magnetic_grid(const std::vector<MagneticGridPoint>& grid, const std::string& dir);

}  // namespace gmdcascade
