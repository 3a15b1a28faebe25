#include "qflow/spherical_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes (descending) and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

// Fills p[index(l, m)] = \bar P_l^m(cos theta) for 0 <= m <= l <= band.
void normalized_legendre(int band, double c, double s, std::vector<double>& p) {
  p.assign(SpectralField::size_for(band), 0.0);
  double pmm = std::sqrt(1.0 / (4.0 * kPi));
  for (int m = 0; m <= band; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    p[SpectralField::index(m, m)] = pmm;
    if (m == band) break;
    double prev2 = pmm;
    double prev1 = std::sqrt(2.0 * m + 3.0) * c * pmm;
    p[SpectralField::index(m + 1, m)] = prev1;
    for (int l = m + 2; l <= band; ++l) {
      const double l2 = double(l) * l, m2 = double(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m2) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      const double cur = a * (c * prev1 - b * prev2);
      p[SpectralField::index(l, m)] = cur;
      prev2 = prev1;
      prev1 = cur;
    }
  }
}

void check_samples(const Samples& samples, const Grid& grid) {
  if (samples.size() != grid.size())
    throw ConfigurationError("sample count does not match grid");
  for (double v : samples)
    if (!std::isfinite(v)) throw NumericalInputError("non-finite sample");
}

}  // namespace

Grid make_grid(int band) {
  Grid g;
  g.band_ = band;
  g.nlat_ = band + 1;
  g.nlon_ = 2 * band + 1;
  gauss_legendre(g.nlat_, g.cos_theta_, g.lat_weights_);
  g.sin_theta_.resize(g.nlat_);
  for (int j = 0; j < g.nlat_; ++j)
    g.sin_theta_[j] = std::sqrt((1.0 - g.cos_theta_[j]) * (1.0 + g.cos_theta_[j]));
  g.phi_.resize(g.nlon_);
  for (int k = 0; k < g.nlon_; ++k) g.phi_[k] = 2.0 * kPi * k / g.nlon_;

  const double dphi = 2.0 * kPi / g.nlon_;
  g.weights_.resize(g.size());
  g.points_.resize(g.size());
  for (int j = 0; j < g.nlat_; ++j)
    for (int k = 0; k < g.nlon_; ++k) {
      const std::size_t node = static_cast<std::size_t>(j) * g.nlon_ + k;
      g.weights_[node] = g.lat_weights_[j] * dphi;
      g.points_[node] = Vec3(g.sin_theta_[j] * std::cos(g.phi_[k]),
                             g.sin_theta_[j] * std::sin(g.phi_[k]), g.cos_theta_[j]);
    }

  g.legendre_.assign(band + 1, Eigen::MatrixXd());
  for (int m = 0; m <= band; ++m) g.legendre_[m].resize(g.nlat_, band - m + 1);
  std::vector<double> p;
  for (int j = 0; j < g.nlat_; ++j) {
    normalized_legendre(band, g.cos_theta_[j], g.sin_theta_[j], p);
    for (int m = 0; m <= band; ++m)
      for (int l = m; l <= band; ++l) g.legendre_[m](j, l - m) = p[SpectralField::index(l, m)];
  }

  g.trig_.resize(2 * band + 1, g.nlon_);
  g.trig_dphi_.resize(2 * band + 1, g.nlon_);
  for (int k = 0; k < g.nlon_; ++k) {
    g.trig_(0, k) = 1.0;
    g.trig_dphi_(0, k) = 0.0;
    for (int m = 1; m <= band; ++m) {
      const double cm = std::cos(m * g.phi_[k]), sm = std::sin(m * g.phi_[k]);
      g.trig_(2 * m - 1, k) = cm;
      g.trig_(2 * m, k) = sm;
      g.trig_dphi_(2 * m - 1, k) = -m * sm;
      g.trig_dphi_(2 * m, k) = m * cm;
    }
  }
  return g;
}

Grid build_grid(int band_limit) {
  if (band_limit < 4 || band_limit > 256)
    throw ConfigurationError("band limit must lie in [4, 256]");
  return make_grid(band_limit);
}

Grid build_oversampled_grid(int band_limit) {
  if (band_limit < 4 || band_limit > 256)
    throw ConfigurationError("band limit must lie in [4, 256]");
  return make_grid(2 * band_limit);
}

double Grid::spacing() const {
  double dtheta = kPi;
  for (int j = 0; j + 1 < nlat_; ++j)
    dtheta = std::min(dtheta, std::acos(std::clamp(cos_theta_[j + 1], -1.0, 1.0)) -
                                  std::acos(std::clamp(cos_theta_[j], -1.0, 1.0)));
  return std::min(dtheta, 2.0 * kPi / nlon_);
}

SpectralField::SpectralField(int band_limit)
    : band_(band_limit), coef_(size_for(band_limit), 0.0) {
  if (band_limit < 0) throw ConfigurationError("negative band limit");
}

SpectralField SpectralField::resized(int band_limit) const {
  SpectralField out(band_limit);
  const int common = std::min(band_limit, band_);
  std::copy_n(coef_.begin(), size_for(common), out.coef_.begin());
  return out;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (o.band_ > band_) *this = resized(o.band_);
  for (std::size_t i = 0; i < o.coef_.size(); ++i) coef_[i] += o.coef_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (o.band_ > band_) *this = resized(o.band_);
  for (std::size_t i = 0; i < o.coef_.size(); ++i) coef_[i] -= o.coef_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coef_) c *= s;
  return *this;
}

SpectralField SpectralField::constant(int band_limit, double value) {
  SpectralField f(band_limit);
  f(0, 0) = value * std::sqrt(4.0 * kPi);
  return f;
}

SpectralField SpectralField::coordinate(int band_limit, int axis) {
  if (band_limit < 1) throw ConfigurationError("coordinate field needs band limit >= 1");
  SpectralField f(band_limit);
  const double s = std::sqrt(4.0 * kPi / 3.0);
  const int m = axis == 0 ? 1 : (axis == 1 ? -1 : 0);
  f(1, m) = s;
  return f;
}

SpectralField SpectralField::harmonic(int band_limit, int l, int m, double amplitude) {
  if (l > band_limit || std::abs(m) > l) throw ConfigurationError("harmonic outside band");
  SpectralField f(band_limit);
  f(l, m) = amplitude;
  return f;
}

Samples synthesize(const SpectralField& field, const Grid& grid) {
  const int lf = field.band_limit();
  if (lf > grid.band_limit()) throw ConfigurationError("field band limit exceeds grid band limit");
  const int nlat = grid.nlat();
  Eigen::MatrixXd a(nlat, 2 * lf + 1);
  Eigen::VectorXd c;
  for (int m = 0; m <= lf; ++m) {
    const auto block = grid.legendre_block(m).leftCols(lf - m + 1);
    c.resize(lf - m + 1);
    for (int l = m; l <= lf; ++l) c[l - m] = field(l, m);
    if (m == 0) {
      a.col(0).noalias() = block * c;
      continue;
    }
    a.col(2 * m - 1).noalias() = std::sqrt(2.0) * (block * c);
    for (int l = m; l <= lf; ++l) c[l - m] = field(l, -m);
    a.col(2 * m).noalias() = std::sqrt(2.0) * (block * c);
  }
  Samples out(grid.size());
  Eigen::Map<RowMajor> s(out.data(), nlat, grid.nlon());
  s.noalias() = a * grid.trig().topRows(2 * lf + 1);
  return out;
}

SpectralField analyze(const Samples& samples, const Grid& grid, int band_limit) {
  check_samples(samples, grid);
  const int lb = band_limit < 0 ? grid.band_limit() : band_limit;
  if (lb > grid.band_limit()) throw ConfigurationError("analysis band exceeds grid band limit");
  const int nlat = grid.nlat();
  Eigen::Map<const RowMajor> s(samples.data(), nlat, grid.nlon());
  Eigen::MatrixXd b = s * grid.trig().topRows(2 * lb + 1).transpose();
  // Node weights are constant along a latitude and include the longitude factor.
  for (int j = 0; j < nlat; ++j) b.row(j) *= grid.weights()[static_cast<std::size_t>(j) * grid.nlon()];
  SpectralField out(lb);
  for (int m = 0; m <= lb; ++m) {
    const auto block = grid.legendre_block(m).leftCols(lb - m + 1);
    if (m == 0) {
      const Eigen::VectorXd c = block.transpose() * b.col(0);
      for (int l = 0; l <= lb; ++l) out(l, 0) = c[l];
      continue;
    }
    const Eigen::VectorXd cc = std::sqrt(2.0) * (block.transpose() * b.col(2 * m - 1));
    const Eigen::VectorXd cs = std::sqrt(2.0) * (block.transpose() * b.col(2 * m));
    for (int l = m; l <= lb; ++l) {
      out(l, m) = cc[l - m];
      out(l, -m) = cs[l - m];
    }
  }
  return out;
}

double integrate(const Samples& samples, const Grid& grid) {
  check_samples(samples, grid);
  const auto& w = grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) sum += w[i] * samples[i];
  return sum;
}

std::vector<Vec3> gradient(const SpectralField& field, const Grid& grid) {
  const int lf = field.band_limit();
  if (lf > grid.band_limit()) throw ConfigurationError("field band limit exceeds grid band limit");
  const int nlat = grid.nlat(), nlon = grid.nlon();
  const auto& ct = grid.cos_theta();
  const auto& st = grid.sin_theta();
  Eigen::MatrixXd a(nlat, 2 * lf + 1), da(nlat, 2 * lf + 1);
  a.setZero();
  da.setZero();
  for (int m = 0; m <= lf; ++m) {
    const auto& p = grid.legendre_block(m);
    const double scale = m == 0 ? 1.0 : std::sqrt(2.0);
    for (int j = 0; j < nlat; ++j) {
      double ac = 0.0, as = 0.0, dc = 0.0, ds = 0.0;
      for (int l = m; l <= lf; ++l) {
        const double plm = p(j, l - m);
        const double prev = l > m ? p(j, l - 1 - m) : 0.0;
        const double dp =
            (l * ct[j] * plm -
             std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * (double(l) * l - double(m) * m)) * prev) /
            st[j];
        ac += field(l, m) * plm;
        dc += field(l, m) * dp;
        if (m > 0) {
          as += field(l, -m) * plm;
          ds += field(l, -m) * dp;
        }
      }
      if (m == 0) {
        a(j, 0) = ac;
        da(j, 0) = dc;
      } else {
        a(j, 2 * m - 1) = scale * ac;
        a(j, 2 * m) = scale * as;
        da(j, 2 * m - 1) = scale * dc;
        da(j, 2 * m) = scale * ds;
      }
    }
  }
  const Eigen::MatrixXd ut = da * grid.trig().topRows(2 * lf + 1);
  const Eigen::MatrixXd up = a * grid.trig_dphi().topRows(2 * lf + 1);
  std::vector<Vec3> out(grid.size());
  for (int j = 0; j < nlat; ++j)
    for (int k = 0; k < nlon; ++k) {
      const double cp = std::cos(grid.phi()[k]), sp = std::sin(grid.phi()[k]);
      const Vec3 et(ct[j] * cp, ct[j] * sp, -st[j]);
      const Vec3 ep(-sp, cp, 0.0);
      out[static_cast<std::size_t>(j) * nlon + k] = ut(j, k) * et + (up(j, k) / st[j]) * ep;
    }
  return out;
}

SpectralField laplacian(const SpectralField& field) {
  SpectralField out = field;
  for (int l = 0; l <= field.band_limit(); ++l)
    for (int m = -l; m <= l; ++m) out(l, m) *= -double(l) * (l + 1);
  return out;
}

SpectralField multiply_by_coordinate(const SpectralField& field, int axis) {
  const int band = field.band_limit() + 1;
  const Grid g = make_grid(std::max(band, 4));
  Samples s = synthesize(field, g);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= g.points()[i][axis];
  return analyze(s, g, band);
}

std::array<SpectralField, 3> gradient_fields(const SpectralField& field) {
  const SpectralField lap = laplacian(field);
  std::array<SpectralField, 3> out;
  for (int i = 0; i < 3; ++i) {
    const SpectralField xf = multiply_by_coordinate(field, i);
    out[i] = 0.5 * (laplacian(xf) + 2.0 * xf - multiply_by_coordinate(lap, i));
  }
  return out;
}

namespace {

// Recurrence factors a_{l,m}, b_{l,m} of normalized_legendre, shared by all point evaluations.
struct RecurrenceTable {
  static constexpr int kMaxBand = 512;
  std::vector<double> a, b, diag;
  RecurrenceTable() : a(SpectralField::size_for(kMaxBand)), b(a.size()), diag(kMaxBand + 1) {
    for (int m = 0; m <= kMaxBand; ++m) {
      diag[m] = m == 0 ? std::sqrt(1.0 / (4.0 * kPi)) : std::sqrt((2.0 * m + 1.0) / (2.0 * m));
      for (int l = m + 1; l <= kMaxBand; ++l) {
        const double l2 = double(l) * l, m2 = double(m) * m;
        a[SpectralField::index(l, m)] = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
        b[SpectralField::index(l, m)] =
            l == m + 1 ? 0.0 : std::sqrt(((l - 1.0) * (l - 1.0) - m2) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      }
    }
  }
};

const RecurrenceTable& recurrence_table() {
  static const RecurrenceTable table;
  return table;
}

}  // namespace

std::vector<double> harmonics_at(int band, const Vec3& x) {
  const double c = std::clamp(x[2], -1.0, 1.0);
  const double s = std::hypot(x[0], x[1]);
  const double ph = std::atan2(x[1], x[0]);
  std::vector<double> p;
  normalized_legendre(band, c, s, p);
  std::vector<double> y(SpectralField::size_for(band));
  for (int l = 0; l <= band; ++l) {
    y[SpectralField::index(l, 0)] = p[SpectralField::index(l, 0)];
    for (int m = 1; m <= l; ++m) {
      const double plm = std::sqrt(2.0) * p[SpectralField::index(l, m)];
      y[SpectralField::index(l, m)] = plm * std::cos(m * ph);
      y[SpectralField::index(l, -m)] = plm * std::sin(m * ph);
    }
  }
  return y;
}

double evaluate(const SpectralField& field, const Vec3& x) {
  const int band = field.band_limit();
  if (band > RecurrenceTable::kMaxBand) throw ConfigurationError("band limit too large for evaluation");
  const RecurrenceTable& tab = recurrence_table();
  const double c = std::clamp(x[2], -1.0, 1.0);
  const double s = std::hypot(x[0], x[1]);
  // cos(m phi), sin(m phi) by rotation; at the poles only m = 0 contributes.
  const double c1 = s > 0.0 ? x[0] / s : 1.0, s1 = s > 0.0 ? x[1] / s : 0.0;
  double cm = 1.0, sm = 0.0;
  double pmm = 0.0;
  double sum = 0.0;
  for (int m = 0; m <= band; ++m) {
    pmm = m == 0 ? tab.diag[0] : pmm * tab.diag[m] * s;
    if (m > 0) {
      const double cn = cm * c1 - sm * s1;
      sm = sm * c1 + cm * s1;
      cm = cn;
    }
    double accc = field(m, m) * pmm;
    double accs = m > 0 ? field(m, -m) * pmm : 0.0;
    double prev2 = 0.0, prev1 = pmm;
    for (int l = m + 1; l <= band; ++l) {
      const int idx = SpectralField::index(l, m);
      const double cur = tab.a[idx] * (c * prev1 - tab.b[idx] * prev2);
      accc += field[idx] * cur;
      if (m > 0) accs += field[idx - 2 * m] * cur;
      prev2 = prev1;
      prev1 = cur;
    }
    sum += m == 0 ? accc : std::sqrt(2.0) * (accc * cm + accs * sm);
    if (pmm == 0.0) break;
  }
  return sum;
}

std::pair<Vec3, Vec3> tangent_frame(const Vec3& x) {
  const Vec3 a = std::abs(x[2]) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  Vec3 e1 = (a - a.dot(x) * x).normalized();
  Vec3 e2 = x.cross(e1);
  return {e1, e2};
}

double sup_norm(const Samples& s) {
  double m = 0.0;
  for (double v : s) m = std::max(m, std::abs(v));
  return m;
}

double max_value(const Samples& s) { return *std::max_element(s.begin(), s.end()); }
double min_value(const Samples& s) { return *std::min_element(s.begin(), s.end()); }

}  // namespace qflow
