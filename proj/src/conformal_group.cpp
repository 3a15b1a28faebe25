#include "qflow/conformal_group.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

std::array<double, 3> as_array(const Vec3& x) { return {x[0], x[1], x[2]}; }

ConformalParams from_log_vector(const Vec3& w, const Vec3& fallback_q) {
  const double s = w.norm();
  if (s == 0.0) return {fallback_q, 1.0};
  return {w / s, std::exp(s)};
}

Samples power_samples(const Samples& u, double p, const Grid& grid) {
  Samples out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0)) throw PositivityError(as_array(grid.point(i)), u[i]);
    out[i] = std::pow(u[i], p);
  }
  return out;
}

}  // namespace

ConformalParams ConformalParams::make(const Vec3& q, double r) {
  if (std::abs(q.norm() - 1.0) > 1e-12) throw DomainError("Moebius center must be a unit vector");
  if (!(r >= 1.0) || !std::isfinite(r)) throw DomainError("Moebius dilation must satisfy r >= 1");
  return {q, r};
}

Vec3 mobius_map_raw(const Vec3& q, double r, const Vec3& x) {
  const double t = q.dot(x);
  const double r2 = r * r;
  const double den = r2 * (1.0 + t) + (1.0 - t);
  return (2.0 * r * (x - t * q) + (r2 * (1.0 + t) - (1.0 - t)) * q) / den;
}

Vec3 mobius_map(const ConformalParams& params, const Vec3& x) {
  return mobius_map_raw(params.q, params.r, x).normalized();
}

Vec3 mobius_inverse(const ConformalParams& params, const Vec3& x) {
  return mobius_map_raw(params.q, 1.0 / params.r, x).normalized();
}

double mobius_conformal_factor(const Vec3& q, double r, const Vec3& x) {
  const double t = q.dot(x);
  return 2.0 * r / (r * r * (1.0 + t) + (1.0 - t));
}

double mobius_jacobian(const ConformalParams& params, const Vec3& x, int n) {
  return std::pow(mobius_conformal_factor(params.q, params.r, x), n);
}

double bubble_value(const Bubble& b, const OperatorParams& params, const Vec3& x) {
  const double lam = b.scale;
  const double k = 2.0 * lam / (2.0 + (lam * lam - 1.0) * (1.0 - x.dot(b.center)));
  return b.amplitude * std::pow(k, 0.5 * (params.n - 2.0 * params.sigma));
}

SpectralField bubble_field(const Bubble& b, const OperatorParams& params, const Grid& grid,
                           int band_limit) {
  if (!(b.scale >= 1.0)) throw DomainError("bubble scale must be >= 1");
  Samples s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = bubble_value(b, params, grid.point(i));
  return analyze(s, grid, band_limit);
}

double bubble_amplitude(const OperatorParams& params, double alpha, double f_value) {
  return std::pow(params.R_sigma / (alpha * f_value),
                  (params.n - 2.0 * params.sigma) / (4.0 * params.sigma));
}

Samples compose_samples(const SpectralField& field, const ConformalParams& params, const Grid& grid) {
  Samples s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = evaluate(field, mobius_map(params, grid.point(i)));
  return s;
}

Samples pullback_samples(const SpectralField& u, const ConformalParams& params,
                         const OperatorParams& op, const Grid& grid) {
  Samples s(grid.size());
  const double e = 0.5 * (op.n - 2.0 * op.sigma);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 x = grid.point(i);
    const Vec3 y = mobius_map(params, x);
    const double uy = evaluate(u, y);
    if (!(uy > 0.0)) throw PositivityError(as_array(y), uy);
    s[i] = uy * std::pow(mobius_conformal_factor(params.q, params.r, x), e);
  }
  return s;
}

SpectralField pullback_factor(const SpectralField& u, const ConformalParams& params,
                              const OperatorParams& op, const Grid& grid, int band_limit) {
  const int band = band_limit < 0 ? std::min(u.band_limit(), grid.band_limit()) : band_limit;
  return analyze(pullback_samples(u, params, op, grid), grid, band);
}

Vec3 center_of_mass(const Samples& u, const OperatorParams& op, const Grid& grid) {
  const Samples w = power_samples(u, op.critical_exponent(), grid);
  Vec3 c = Vec3::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) c += grid.weights()[i] * w[i] * grid.point(i);
  return c;
}

Vec3 center_of_mass(const SpectralField& u, const OperatorParams& op, const Grid& grid) {
  return center_of_mass(synthesize(u, grid), op, grid);
}

Vec3 pulled_back_center_of_mass(const Samples& u_pow, const ConformalParams& params, const Grid& grid) {
  Vec3 c = Vec3::Zero();
  for (std::size_t i = 0; i < u_pow.size(); ++i)
    c += grid.weights()[i] * u_pow[i] * mobius_inverse(params, grid.point(i));
  return c;
}

RecenterResult recenter(const SpectralField& u, const OperatorParams& op, const Grid& grid,
                        const ConformalParams& initial_guess, const RecenterOptions& options) {
  const Samples us = synthesize(u, grid);
  const Samples w8 = power_samples(us, op.critical_exponent(), grid);
  const double omega = op.omega;
  Vec3 fallback = initial_guess.q;
  auto residual = [&](const Vec3& w) {
    return Vec3(pulled_back_center_of_mass(w8, from_log_vector(w, fallback), grid) / omega);
  };

  Vec3 w = std::log(initial_guess.r) * initial_guess.q;
  Vec3 f = residual(w);
  Vec3 best_w = w;
  double best = f.norm();
  int iter = 0;
  const double h = 1e-6;
  while (best > options.tolerance && iter < options.max_iterations) {
    ++iter;
    Eigen::Matrix3d jac;
    for (int k = 0; k < 3; ++k) {
      Vec3 dw = Vec3::Zero();
      dw[k] = h;
      jac.col(k) = (residual(w + dw) - residual(w - dw)) / (2.0 * h);
    }
    const Vec3 step = jac.fullPivLu().solve(-f);
    if (!step.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
      const Vec3 trial = w + t * step;
      const Vec3 ft = residual(trial);
      if (ft.norm() < f.norm()) {
        w = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (w.norm() > 0.0) fallback = w.normalized();
    if (f.norm() < best) {
      best = f.norm();
      best_w = w;
    }
  }
  if (!(best <= options.tolerance)) throw RecenteringError(best);

  RecenterResult out;
  out.params = from_log_vector(best_w, fallback);
  out.residual = best;
  out.iterations = iter;
  if (options.compute_v) {
    const int band = options.band_limit < 0 ? u.band_limit() : options.band_limit;
    out.v = pullback_factor(u, out.params, op, grid, std::min(band, grid.band_limit()));
  }
  return out;
}

}  // namespace qflow
