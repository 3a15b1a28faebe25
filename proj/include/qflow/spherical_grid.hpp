#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace qflow {

using Vec3 = Eigen::Vector3d;

// Real orthonormal spherical harmonic coefficients c_{l,m}, 0 <= l <= L, -l <= m <= l.
// Y_{l,m} for m > 0 carries cos(m phi), m < 0 carries sin(|m| phi); no Condon-Shortley phase,
// so Y_{1,0}, Y_{1,1}, Y_{1,-1} are positive multiples of x3, x1, x2.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int band_limit);

  static constexpr int index(int l, int m) { return l * l + l + m; }
  static constexpr int size_for(int band_limit) { return (band_limit + 1) * (band_limit + 1); }

  int band_limit() const { return band_; }
  std::size_t size() const { return coef_.size(); }

  double& operator()(int l, int m) { return coef_[index(l, m)]; }
  double operator()(int l, int m) const { return coef_[index(l, m)]; }
  double& operator[](std::size_t i) { return coef_[i]; }
  double operator[](std::size_t i) const { return coef_[i]; }
  const std::vector<double>& coefficients() const { return coef_; }
  std::vector<double>& coefficients() { return coef_; }

  // Truncates or zero-pads to a new band limit.
  SpectralField resized(int band_limit) const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  static SpectralField constant(int band_limit, double value);
  // The coordinate function x_{axis+1} restricted to the sphere.
  static SpectralField coordinate(int band_limit, int axis);
  static SpectralField harmonic(int band_limit, int l, int m, double amplitude = 1.0);

 private:
  int band_ = 0;
  std::vector<double> coef_;
};

// Values on the nodes of a Grid, latitude-major: index = j * nlon + k.
using Samples = std::vector<double>;

// Gauss-Legendre in cos(theta) times uniform longitudes. Exact for integrands of degree <= 2L.
class Grid {
 public:
  int band_limit() const { return band_; }
  int nlat() const { return nlat_; }
  int nlon() const { return nlon_; }
  std::size_t size() const { return static_cast<std::size_t>(nlat_) * nlon_; }

  const std::vector<double>& cos_theta() const { return cos_theta_; }
  const std::vector<double>& sin_theta() const { return sin_theta_; }
  const std::vector<double>& phi() const { return phi_; }
  // Full per-node weights including the longitude factor 2 pi / nlon.
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vec3>& points() const { return points_; }
  Vec3 point(std::size_t node) const { return points_[node]; }
  // Smallest angular spacing between neighbouring latitudes or longitudes.
  double spacing() const;

  // Normalized associated Legendre values \bar P_l^m(cos theta_j) for l >= m.
  const Eigen::MatrixXd& legendre_block(int m) const { return legendre_[m]; }
  // Rows: 0 -> 1, 2m-1 -> cos(m phi), 2m -> sin(m phi); columns: longitudes.
  const Eigen::MatrixXd& trig() const { return trig_; }
  const Eigen::MatrixXd& trig_dphi() const { return trig_dphi_; }

 private:
  friend Grid make_grid(int band_limit);
  int band_ = 0;
  int nlat_ = 0;
  int nlon_ = 0;
  std::vector<double> cos_theta_, sin_theta_, lat_weights_, phi_, weights_;
  std::vector<Vec3> points_;
  std::vector<Eigen::MatrixXd> legendre_;  // [m] -> nlat x (L - m + 1)
  Eigen::MatrixXd trig_, trig_dphi_;
};

// Grid with L+1 Gauss-Legendre latitudes and 2L+1 longitudes; 4 <= L <= 256.
Grid build_grid(int band_limit);

// Grid of band 2L used to evaluate non-polynomial nonlinearities of band-L fields.
Grid build_oversampled_grid(int band_limit);

Samples synthesize(const SpectralField& field, const Grid& grid);
// Projects onto harmonics up to `band_limit` (defaults to the grid band limit).
SpectralField analyze(const Samples& samples, const Grid& grid, int band_limit = -1);
double integrate(const Samples& samples, const Grid& grid);

// Intrinsic gradient as an ambient vector at every node.
std::vector<Vec3> gradient(const SpectralField& field, const Grid& grid);

// Spectral Laplace-Beltrami: c_{l,m} -> -l(l+1) c_{l,m}.
SpectralField laplacian(const SpectralField& field);

// Exact product x_{axis+1} * field, band limit grows by one.
SpectralField multiply_by_coordinate(const SpectralField& field, int axis);

// Ambient components of the intrinsic gradient as fields of band L+1:
// (grad f)_i = <grad x_i, grad f> = (Delta(x_i f) + 2 x_i f - x_i Delta f) / 2.
std::array<SpectralField, 3> gradient_fields(const SpectralField& field);

// Pointwise evaluation at a unit vector.
double evaluate(const SpectralField& field, const Vec3& x);
// Evaluates all harmonics of degree <= band_limit at x, in coefficient order.
std::vector<double> harmonics_at(int band_limit, const Vec3& x);

// Orthonormal tangent frame at a unit vector x.
std::pair<Vec3, Vec3> tangent_frame(const Vec3& x);

double sup_norm(const Samples& s);
double max_value(const Samples& s);
double min_value(const Samples& s);

}  // namespace qflow
