#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "qflow/errors.hpp"
#include "qflow/fractional_operator.hpp"
#include "test_helpers.hpp"

using namespace qflow;
using qflow::testing::random_field;
using qflow::testing::random_positive_field;

namespace {

constexpr double kPi = std::numbers::pi;

double rel_diff(const SpectralField& a, const SpectralField& b) {
  double d = 0.0, n = 0.0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    d = std::max(d, std::abs(x - y));
    n = std::max(n, std::abs(y));
  }
  return d / n;
}

}  // namespace

TEST_CASE("operator constants") {
  const auto p = OperatorParams::make(2, 0.75);
  // Gamma(1.75)/Gamma(0.25), reference from mpmath.
  CHECK(std::abs(p.R_sigma - 0.2534918400252317733732929) < 1e-14);
  CHECK(std::abs(p.omega - 4 * kPi) < 1e-14);
  CHECK(std::abs(p.Y_sigma - p.R_sigma * std::pow(4 * kPi, 0.75)) < 1e-14);
  CHECK(std::abs(p.a - (2 - 3.0) / (2 - 1.5)) < 1e-15);
  CHECK(std::abs(p.N_sigma - std::pow(2.0, -0.5) * std::tgamma(0.25) / std::tgamma(0.75)) < 1e-13);
  CHECK(std::abs(p.c_kernel - std::pow(2.0, 1.5) * 0.75 * std::tgamma(1.75) / (kPi * std::tgamma(0.25))) < 1e-13);
  CHECK(p.critical_exponent() == 8.0);
  CHECK(p.curvature_exponent() == 7.0);
  CHECK_THROWS_AS(OperatorParams::make(2, 1.5), ConfigurationError);
  CHECK_THROWS_AS(OperatorParams::make(2, 0.0), ConfigurationError);
}

TEST_CASE("beta constant matches the closed-form normalization") {
  for (int n : {2, 3, 4})
    for (double s : {0.1, 0.3, 0.5, 0.6, 0.75, 0.9}) {
      const auto p = OperatorParams::make(n, s);
      // \int_{R^n} t^{2s} (|x|^2 + t^2)^{-(n+2s)/2} dx = pi^{n/2} Gamma(s) / Gamma(n/2 + s).
      const double oracle = std::tgamma(0.5 * n + s) / (std::pow(kPi, 0.5 * n) * std::tgamma(s));
      CAPTURE(n);
      CAPTURE(s);
      CHECK(std::abs(p.beta / oracle - 1.0) < 1e-12);
    }
  // mpmath: n = 2, sigma = 0.75.
  CHECK(std::abs(OperatorParams::make(2, 0.75).beta - 0.2387324146378430036533256) < 1e-14);
}

TEST_CASE("spectrum") {
  const auto p = OperatorParams::make(2, 0.75);
  CHECK(std::abs(eigenvalue(0, p) - p.R_sigma) < 1e-15);
  CHECK(std::abs(eigenvalue(1, p) / eigenvalue(0, p) - 7.0) < 1e-13);
  CHECK(std::abs(eigenvalue(2, p) / eigenvalue(1, p) - 5.5 / 2.5) < 1e-13);
  const auto lam = eigenvalues(256, p);
  for (int k = 1; k <= 256; ++k) CHECK(lam[k] > lam[k - 1]);
  // Exact ratio Lambda_{k+1}/Lambda_k = (k + n/2 + s)/(k + n/2 - s) far beyond the direct range.
  for (int k : {100, 169, 170, 200, 255}) CHECK(std::abs(lam[k + 1] / lam[k] - (k + 1.75) / (k + 0.25)) < 1e-12);
}

TEST_CASE("spectrum near sigma = 1 and monotonicity in sigma") {
  const auto p = OperatorParams::make(2, 1.0 - 1e-6);
  for (int k = 0; k < 20; ++k) {
    const double conformal = (k + 0.5) * (k + 0.5) - 0.25;  // k(k+1) on S^2
    CHECK(std::abs(eigenvalue(k, p) - conformal) < 1e-4 * std::max(1.0, conformal));
  }
  for (int k = 1; k < 30; ++k) {
    double prev = 0.0;
    for (double s = 0.05; s < 1.0; s += 0.05) {
      const double v = eigenvalue(k, OperatorParams::make(2, s));
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("apply_P on constants, coordinates and single harmonics") {
  const auto p = OperatorParams::make(2, 0.75);
  const SpectralField one = apply_P(SpectralField::constant(8, 1.0), p);
  CHECK(rel_diff(one, SpectralField::constant(8, p.R_sigma)) < 1e-15);
  for (int a = 0; a < 3; ++a) {
    const SpectralField x = SpectralField::coordinate(8, a);
    CHECK(rel_diff(apply_P(x, p), eigenvalue(1, p) * x) < 1e-15);
  }
  const auto p6 = OperatorParams::make(2, 0.6);
  const SpectralField y = SpectralField::harmonic(8, 5, 3);
  CHECK(rel_diff(apply_P(y, p6), eigenvalue(5, p6) * y) < 1e-15);
}

TEST_CASE("apply_P commutes with rotations") {
  std::mt19937_64 rng(5);
  const auto p = OperatorParams::make(2, 0.6);
  const int band = 12;
  const Grid g = build_grid(band);
  const SpectralField f = random_field(rng, band);
  const Eigen::Matrix3d rot =
      Eigen::Quaterniond(Eigen::Vector4d(0.3, -0.5, 0.7, 0.4).normalized()).toRotationMatrix();
  auto rotate = [&](const SpectralField& h) {
    Samples s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = evaluate(h, rot.transpose() * g.point(i));
    return analyze(s, g);
  };
  CHECK(rel_diff(apply_P(rotate(f), p), rotate(apply_P(f, p))) < 1e-9);
}

TEST_CASE("quadratic form: symmetry and lower bound") {
  std::mt19937_64 rng(9);
  const auto p = OperatorParams::make(2, 0.4);
  const Grid g = build_grid(20);
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField v = random_field(rng, 20, 1.0, 0.2);
    const SpectralField w = random_field(rng, 20, 1.0, 0.2);
    const Samples vs = synthesize(v, g), ws = synthesize(w, g);
    const Samples pv = synthesize(apply_P(v, p), g), pw = synthesize(apply_P(w, p), g);
    Samples a(g.size()), b(g.size()), v2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      a[i] = vs[i] * pw[i];
      b[i] = ws[i] * pv[i];
      v2[i] = vs[i] * vs[i];
    }
    const double ia = integrate(a, g), ib = integrate(b, g);
    CHECK(std::abs(ia - ib) < 1e-11 * std::max(1.0, std::abs(ia)));
    CHECK(std::abs(ia - quadratic_form(v, w, p)) < 1e-11 * std::max(1.0, std::abs(ia)));
    CHECK(quadratic_form(v, v, p) >= p.R_sigma * integrate(v2, g));
  }
}

TEST_CASE("curvature_field") {
  const auto p = OperatorParams::make(2, 0.75);
  const Grid g = build_oversampled_grid(16);
  const SpectralField r1 = curvature_field(SpectralField::constant(16, 1.0), p, g);
  CHECK(rel_diff(r1, SpectralField::constant(16, p.R_sigma)) < 1e-13);

  SpectralField u = SpectralField::constant(16, 1.0);
  u(2, 0) = 0.1;
  const SpectralField r = curvature_field(u, p, g);
  // Oracle: pointwise P(u)/u^7 with P(u) evaluated from its closed-form expansion.
  std::mt19937_64 rng(1);
  double err = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = qflow::testing::random_unit(rng);
    const double y20 = 0.25 * std::sqrt(5.0 / kPi) * (3 * x[2] * x[2] - 1);
    const double ux = 1.0 + 0.1 * y20;
    const double pux = p.R_sigma + 0.1 * eigenvalue(2, p) * y20;
    err = std::max(err, std::abs(evaluate(r, x) - pux / std::pow(ux, 7.0)));
  }
  CHECK(err < 1e-8);

  SpectralField bad = SpectralField::constant(16, 0.1);
  bad(1, 0) = 1.0;
  CHECK_THROWS_AS(curvature_field(bad, p, g), PositivityError);
}

TEST_CASE("conformal_apply_P") {
  std::mt19937_64 rng(21);
  const auto p = OperatorParams::make(2, 0.75);
  const int band = 10;
  const Grid g = build_oversampled_grid(band);
  const SpectralField v = random_field(rng, band, 1.0, 0.3);
  const SpectralField pv = conformal_apply_P(SpectralField::constant(band, 1.0), v, p, g);
  CHECK(rel_diff(pv, apply_P(v, p)) < 1e-12);

  const SpectralField u = random_positive_field(rng, band, 0.3, 3);
  CHECK(rel_diff(conformal_apply_P(u, SpectralField::constant(band, 1.0), p, g), curvature_field(u, p, g)) < 1e-12);

  // \int w P^g v dV_g = \int (u w) P(u v) dV is symmetric in (v, w).
  const SpectralField w = random_field(rng, band, 1.0, 0.3);
  const Samples us = synthesize(u, g), vs = synthesize(v, g), ws = synthesize(w, g);
  const Samples pgv = conformal_apply_P_samples(u, v, p, g);
  const Samples pgw = conformal_apply_P_samples(u, w, p, g);
  Samples a(g.size()), b(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double vol = std::pow(us[i], 8.0);
    a[i] = ws[i] * pgv[i] * vol;
    b[i] = vs[i] * pgw[i] * vol;
  }
  const double ia = integrate(a, g), ib = integrate(b, g);
  CHECK(std::abs(ia - ib) < 1e-9 * std::max(1.0, std::abs(ia)));
}

TEST_CASE("apply_P_singular cross-check") {
  const Grid g = build_grid(32);
  const auto p3 = OperatorParams::make(2, 0.3);
  const SpectralField c = SpectralField::constant(32, 2.0);
  CHECK(rel_diff(apply_P_singular(c, g, p3, 0.4), c * p3.R_sigma) < 1e-15);

  const SpectralField x3 = SpectralField::coordinate(32, 2);
  const SpectralField ext = apply_P_singular_extrapolated(x3, g, p3, 0.8);
  CHECK(rel_diff(ext, eigenvalue(1, p3) * x3) < 1e-3);

  // Plain cap truncation converges as delta^{2-2s} for sigma < 1/2.
  double prev = 1.0;
  for (double d : {0.8, 0.4, 0.2}) {
    const double e = rel_diff(apply_P_singular(x3, g, p3, d), eigenvalue(1, p3) * x3);
    CHECK(e < prev);
    prev = e;
  }

  const auto p75 = OperatorParams::make(2, 0.75);
  const SpectralField y20 = SpectralField::harmonic(32, 2, 0);
  CHECK(rel_diff(apply_P_singular_extrapolated(y20, g, p75, 0.8), eigenvalue(2, p75) * y20) < 5e-2);
  CHECK_THROWS_AS(apply_P_singular(x3, g, p3, 0.5 * g.spacing()), ConfigurationError);
}

TEST_CASE("Sobolev deficit") {
  std::mt19937_64 rng(33);
  const auto p = OperatorParams::make(2, 0.75);
  const Grid g = build_oversampled_grid(12);
  CHECK(std::abs(sobolev_deficit(SpectralField::constant(12, 1.0), p, g)) < 1e-10);
  for (int trial = 0; trial < 30; ++trial) {
    const SpectralField u = random_positive_field(rng, 12, 0.5, 6);
    CHECK(sobolev_deficit(u, p, g) >= -1e-9);
  }
}

TEST_CASE("Stroock-Varopoulos gap") {
  std::mt19937_64 rng(44);
  const auto p = OperatorParams::make(2, 0.75);
  const int band = 12;
  const Grid g = build_oversampled_grid(band);
  const SpectralField one = SpectralField::constant(band, 1.0);
  const SpectralField vpos = random_positive_field(rng, band, 0.4, 4);
  CHECK(std::abs(stroock_varopoulos_gap(random_positive_field(rng, band, 0.3, 3), vpos, 2.0, p, g)) < 1e-9);

  SpectralField v = SpectralField::constant(band, 1.0);
  v(1, 0) = 0.2;
  CHECK(stroock_varopoulos_gap(one, v, 4.0, p, g) >= -1e-6);

  for (int trial = 0; trial < 5; ++trial) {
    const SpectralField u = random_positive_field(rng, band, 0.3, 3);
    const SpectralField w = random_field(rng, band, 1.0, 0.8, 5);
    for (double q : {2.0, 3.0, 4.0}) {
      const auto t = stroock_varopoulos_terms(u, w, q, p, g);
      CHECK(t.gap >= -1e-6);
      CHECK(t.coercive >= -1e-6);
    }
  }
  CHECK_THROWS_AS(stroock_varopoulos_gap(one, v, 1.5, p, g), DomainError);
}

TEST_CASE("Poisson extension") {
  const auto half = OperatorParams::make(2, 0.5);
  const SpectralField one = SpectralField::constant(4, 1.0);
  CHECK(std::abs(poisson_extension(one, Vec3::Zero(), half) - 1.0) < 1e-12);

  const auto p = OperatorParams::make(2, 0.75);
  SpectralField u = SpectralField::constant(4, 1.0);
  u(1, 0) = 0.3;
  const Grid g = build_grid(48);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5; ++i) {
    const Vec3 y = 0.5 * qflow::testing::random_unit(rng) * (0.2 + 0.15 * i);
    CHECK(std::abs(poisson_extension(u, y, p) - poisson_extension_quadrature(u, y, p, g)) < 1e-10);
  }

  const Vec3 x = Vec3(0.3, -0.2, 0.9).normalized();
  const double ux = evaluate(u, x);
  double prev = 1e9;
  for (double tau : {0.9, 0.99, 0.999, 0.9999}) {
    const double err = std::abs(poisson_extension(u, tau * x, p) - ux);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
  CHECK_THROWS_AS(poisson_extension(u, Vec3(0, 0, 1), p), DomainError);
}
