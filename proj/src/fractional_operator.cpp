#include "qflow/fractional_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "qflow/errors.hpp"
#include "qflow/special_functions.hpp"

namespace qflow {

namespace {

constexpr double kPi = std::numbers::pi;

void require_n2(const OperatorParams& params) {
  if (params.n != 2) throw ConfigurationError("field operations are implemented for n = 2 only");
}

std::array<double, 3> as_array(const Vec3& x) { return {x[0], x[1], x[2]}; }

void check_positive(const Samples& u, const Grid& grid) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u[i] > 0.0)) throw PositivityError(as_array(grid.point(i)), u[i]);
}

}  // namespace

double sphere_area(int n) {
  return 2.0 * std::pow(kPi, 0.5 * (n + 1)) / gamma_fn(0.5 * (n + 1));
}

OperatorParams OperatorParams::make(int n, double sigma) {
  if (n < 2) throw ConfigurationError("sphere dimension must be at least 2");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigurationError("sigma must lie in (0,1)");
  OperatorParams p;
  p.n = n;
  p.sigma = sigma;
  const double h = 0.5 * n;
  p.R_sigma = gamma_fn(h + sigma) / gamma_fn(h - sigma);
  p.c_kernel = std::pow(2.0, 2.0 * sigma) * sigma * gamma_fn(h + sigma) /
               (std::pow(kPi, h) * gamma_fn(1.0 - sigma));
  p.N_sigma = std::pow(2.0, 1.0 - 2.0 * sigma) * gamma_fn(1.0 - sigma) / gamma_fn(sigma);
  p.a = (2.0 - 4.0 * sigma) / (n - 2.0 * sigma);
  p.omega = sphere_area(n);
  p.Y_sigma = p.R_sigma * std::pow(p.omega, 2.0 * sigma / n);
  p.beta = beta_constant(p);
  return p;
}

double beta_constant(const OperatorParams& params) {
  // 1/beta = \int_{R^n} t^{2s} / (|x'|^2 + t^2)^{(n+2s)/2} dx'; with |x'| = t tan(psi) the
  // radial integral becomes \int_0^{pi/2} sin^{n-1} cos^{2s-1} d psi.
  const int n = params.n;
  const double s = params.sigma;
  // In w = pi/2 - psi the endpoint singularity sits at w = 0, where sin(w) is exact.
  boost::math::quadrature::tanh_sinh<double> ts;
  const double radial = ts.integrate(
      [&](double w) { return std::pow(std::cos(w), n - 1) * std::pow(std::sin(w), 2.0 * s - 1.0); },
      0.0, 0.5 * kPi);
  const double inv = (n == 1 ? 2.0 : sphere_area(n - 1)) * radial;
  return 1.0 / inv;
}

double eigenvalue(int k, const OperatorParams& params) {
  if (k < 0) throw DomainError("eigenvalue degree must be nonnegative");
  const double h = 0.5 * params.n;
  return gamma_ratio(k + h + params.sigma, k + h - params.sigma);
}

std::vector<double> eigenvalues(int band_limit, const OperatorParams& params) {
  std::vector<double> out(band_limit + 1);
  for (int k = 0; k <= band_limit; ++k) out[k] = eigenvalue(k, params);
  return out;
}

SpectralField apply_P(const SpectralField& field, const OperatorParams& params) {
  SpectralField out = field;
  for (int l = 0; l <= field.band_limit(); ++l) {
    const double lam = eigenvalue(l, params);
    for (int m = -l; m <= l; ++m) out(l, m) *= lam;
  }
  return out;
}

double quadratic_form(const SpectralField& v, const SpectralField& w, const OperatorParams& params) {
  const int band = std::min(v.band_limit(), w.band_limit());
  double sum = 0.0;
  for (int l = 0; l <= band; ++l) {
    const double lam = eigenvalue(l, params);
    double part = 0.0;
    for (int m = -l; m <= l; ++m) part += v(l, m) * w(l, m);
    sum += lam * part;
  }
  return sum;
}

Samples curvature_samples(const SpectralField& u, const OperatorParams& params, const Grid& grid) {
  require_n2(params);
  const Samples us = synthesize(u, grid);
  check_positive(us, grid);
  Samples r = synthesize(apply_P(u, params), grid);
  const double e = params.curvature_exponent();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= std::pow(us[i], -e);
  return r;
}

SpectralField curvature_field(const SpectralField& u, const OperatorParams& params, const Grid& grid) {
  return analyze(curvature_samples(u, params, grid), grid,
                 std::min(u.band_limit(), grid.band_limit()));
}

Samples conformal_apply_P_samples(const SpectralField& u, const SpectralField& v,
                                  const OperatorParams& params, const Grid& grid) {
  require_n2(params);
  const Samples us = synthesize(u, grid);
  check_positive(us, grid);
  const Samples vs = synthesize(v, grid);
  Samples uv(us.size());
  for (std::size_t i = 0; i < uv.size(); ++i) uv[i] = us[i] * vs[i];
  const int band = std::min(grid.band_limit(), u.band_limit() + v.band_limit());
  Samples out = synthesize(apply_P(analyze(uv, grid, band), params), grid);
  const double e = params.curvature_exponent();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::pow(us[i], -e);
  return out;
}

SpectralField conformal_apply_P(const SpectralField& u, const SpectralField& v,
                                const OperatorParams& params, const Grid& grid) {
  return analyze(conformal_apply_P_samples(u, v, params, grid), grid,
                 std::min(std::max(u.band_limit(), v.band_limit()), grid.band_limit()));
}

double singular_multiplier(int l, const OperatorParams& params, double delta) {
  require_n2(params);
  const double e = 1.0 + params.sigma;
  auto kernel = [&](double psi) {
    const double c = std::cos(psi);
    const double chord2 = 4.0 * std::sin(0.5 * psi) * std::sin(0.5 * psi);
    return (1.0 - legendre(l, c)) * std::sin(psi) / std::pow(chord2, e);
  };
  double integral = 0.0;
  if (l > 0) {
    // Split at multiples of the cap radius so the near-cap behaviour is resolved.
    double a = delta;
    while (a < kPi) {
      const double b = std::min(kPi, std::max(2.0 * a, a + 0.5 * kPi / (l + 1)));
      integral += integrate_adaptive(kernel, a, b);
      a = b;
    }
  }
  return params.R_sigma + params.c_kernel * 2.0 * kPi * integral;
}

SpectralField apply_P_singular(const SpectralField& field, const Grid& grid,
                               const OperatorParams& params, double delta) {
  require_n2(params);
  if (!(delta > grid.spacing()) || delta >= kPi)
    throw ConfigurationError("cap radius must exceed the grid spacing");
  SpectralField out = field;
  for (int l = 0; l <= field.band_limit(); ++l) {
    const double mu = singular_multiplier(l, params, delta);
    for (int m = -l; m <= l; ++m) out(l, m) *= mu;
  }
  return out;
}

SpectralField apply_P_singular_extrapolated(const SpectralField& field, const Grid& grid,
                                            const OperatorParams& params, double delta) {
  if (!(0.25 * delta > grid.spacing()))
    throw ConfigurationError("cap radius / 4 must exceed the grid spacing");
  const SpectralField a0 = apply_P_singular(field, grid, params, delta);
  const SpectralField a1 = apply_P_singular(field, grid, params, 0.5 * delta);
  const SpectralField a2 = apply_P_singular(field, grid, params, 0.25 * delta);
  // Cap error ~ d^{2-2s} + d^{4-2s} + ...
  const double k1 = std::pow(2.0, 2.0 - 2.0 * params.sigma);
  const double k2 = std::pow(2.0, 4.0 - 2.0 * params.sigma);
  const SpectralField b0 = (1.0 / (k1 - 1.0)) * (k1 * a1 - a0);
  const SpectralField b1 = (1.0 / (k1 - 1.0)) * (k1 * a2 - a1);
  return (1.0 / (k2 - 1.0)) * (k2 * b1 - b0);
}

double sobolev_deficit(const SpectralField& u, const OperatorParams& params, const Grid& grid) {
  require_n2(params);
  const Samples us = synthesize(u, grid);
  const double p = params.critical_exponent();
  Samples pw(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) pw[i] = std::pow(std::abs(us[i]), p);
  const double lp = integrate(pw, grid);
  return quadratic_form(u, u, params) - params.Y_sigma * std::pow(lp, 2.0 / p);
}

StroockVaropoulosTerms stroock_varopoulos_terms(const SpectralField& u, const SpectralField& v,
                                                double p, const OperatorParams& params,
                                                const Grid& grid) {
  require_n2(params);
  if (!(p >= 2.0)) throw DomainError("Stroock-Varopoulos exponent must be >= 2");
  const Samples us = synthesize(u, grid);
  check_positive(us, grid);
  const Samples vs = synthesize(v, grid);
  const double e = params.curvature_exponent();
  const double q = params.critical_exponent();
  const int band = grid.band_limit();

  // dV_g = u^q dV and P^g w = u^{-e} P(u w), so \int a P^g w dV_g = \int (u a) P(u w) dV.
  Samples uv(us.size()), ua(us.size()), uw(us.size()), rv(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double av = std::abs(vs[i]);
    uv[i] = us[i] * vs[i];
    ua[i] = us[i] * std::pow(av, p - 2.0) * vs[i];
    uw[i] = us[i] * std::pow(av, 0.5 * p);
  }
  const SpectralField uv_c = analyze(uv, grid, std::min(band, u.band_limit() + v.band_limit()));
  const Samples puv = synthesize(apply_P(uv_c, params), grid);
  StroockVaropoulosTerms t;
  Samples prod(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) prod[i] = ua[i] * puv[i];
  t.lhs = integrate(prod, grid);

  const SpectralField uw_c = analyze(uw, grid, band);
  t.energy_term = quadratic_form(uw_c, uw_c, params);

  const Samples pu = synthesize(apply_P(u, params), grid);
  for (std::size_t i = 0; i < us.size(); ++i)
    rv[i] = pu[i] * std::pow(us[i], q - e) * std::pow(std::abs(vs[i]), p);
  t.curvature_term = integrate(rv, grid);

  t.gap = t.lhs - 4.0 * (p - 1.0) / (p * p) * t.energy_term -
          (p - 2.0) * (p - 2.0) / (p * p) * t.curvature_term;
  t.coercive = t.lhs - t.curvature_term;
  return t;
}

double stroock_varopoulos_gap(const SpectralField& u, const SpectralField& v, double p,
                              const OperatorParams& params, const Grid& grid) {
  return stroock_varopoulos_terms(u, v, p, params, grid).gap;
}

namespace {

// 2^{-2s} beta (1 - tau^2)^{2s} 2 pi \int_{-1}^{1} P_l(t) (1 + tau^2 - 2 tau t)^{-1-s} dt.
double poisson_multiplier(int l, double tau, const OperatorParams& params) {
  const double s = params.sigma;
  const double pref = std::pow(2.0, -2.0 * s) * params.beta * 2.0 * kPi;
  if (tau == 0.0) return l == 0 ? pref * 2.0 : 0.0;
  const double gap2 = (1.0 - tau) * (1.0 - tau);
  // (1 - tau^2)^{2s} / (gap2 + 2 tau x)^{1+s} with x = 1 - t.
  auto f = [&](double x) {
    const double d = gap2 + 2.0 * tau * x;
    return legendre(l, 1.0 - x) * std::pow((1.0 - tau * tau) * (1.0 - tau * tau) / d, s) / d;
  };
  double total = 0.0;
  double a = 0.0;
  double b = std::min(2.0, gap2 / (2.0 * tau));
  while (a < 2.0) {
    total += integrate_adaptive(f, a, b);
    a = b;
    b = std::min(2.0, 4.0 * b);
  }
  return pref * total;
}

}  // namespace

double poisson_extension(const SpectralField& u, const Vec3& y, const OperatorParams& params) {
  require_n2(params);
  const double tau = y.norm();
  if (!(tau < 1.0)) throw DomainError("Poisson extension needs |y| < 1");
  const Vec3 dir = tau > 0.0 ? Vec3(y / tau) : Vec3(0, 0, 1);
  const std::vector<double> h = harmonics_at(u.band_limit(), dir);
  double sum = 0.0;
  for (int l = 0; l <= u.band_limit(); ++l) {
    double ul = 0.0;
    for (int m = -l; m <= l; ++m) ul += u(l, m) * h[SpectralField::index(l, m)];
    if (ul != 0.0) sum += poisson_multiplier(l, tau, params) * ul;
  }
  return sum;
}

double poisson_extension_quadrature(const SpectralField& u, const Vec3& y,
                                    const OperatorParams& params, const Grid& grid) {
  require_n2(params);
  const double tau2 = y.squaredNorm();
  if (!(tau2 < 1.0)) throw DomainError("Poisson extension needs |y| < 1");
  const Samples us = synthesize(u, grid);
  Samples k(us.size());
  const double s = params.sigma;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double d2 = (grid.point(i) - y).squaredNorm();
    k[i] = std::pow(1.0 - tau2, 2.0 * s) / std::pow(d2, 0.5 * params.n + s) * us[i];
  }
  return std::pow(2.0, -2.0 * s) * params.beta * integrate(k, grid);
}

double aliasing_tail(const Samples& samples, const Grid& grid, int band_limit) {
  Samples sq(samples.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = samples[i] * samples[i];
  const double total = integrate(sq, grid);
  const SpectralField c = analyze(samples, grid, band_limit);
  double kept = 0.0;
  for (double v : c.coefficients()) kept += v * v;
  return total > 0.0 ? std::max(0.0, total - kept) / total : 0.0;
}

}  // namespace qflow
