#include "qflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "qflow/errors.hpp"
#include "qflow/special_functions.hpp"

namespace qflow {

double power(double x, double e) {
  if (e == std::floor(e) && std::abs(e) <= 16.0) {
    int k = static_cast<int>(std::abs(e));
    double base = x, acc = 1.0;
    while (k > 0) {
      if (k & 1) acc *= base;
      base *= base;
      k >>= 1;
    }
    return e < 0 ? 1.0 / acc : acc;
  }
  return std::pow(x, e);
}

FlowQuantities evaluate_quantities(const SpectralField& u, const Samples& f, const OperatorParams& op,
                                   const Grid& grid) {
  if (op.n != 2) throw ConfigurationError("field operations are implemented for n = 2 only");
  if (f.size() != grid.size()) throw ConfigurationError("f samples do not match the grid");
  FlowQuantities q;
  q.u = synthesize(u, grid);
  for (std::size_t i = 0; i < q.u.size(); ++i)
    if (!(q.u[i] > 0.0)) {
      const Vec3 x = grid.point(i);
      throw PositivityError({x[0], x[1], x[2]}, q.u[i]);
    }
  q.pu = synthesize(apply_P(u, op), grid);
  q.f = f;
  const std::size_t n = q.u.size();
  q.curvature.resize(n);
  q.density.resize(n);
  q.deviation.resize(n);
  const double e = op.curvature_exponent();
  const double p = op.critical_exponent();
  const auto& w = grid.weights();
  double num = 0.0, mass = 0.0, vol = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = q.u[i];
    q.curvature[i] = q.pu[i] * power(ui, -e);
    q.density[i] = power(ui, p);
    num += w[i] * ui * q.pu[i];
    mass += w[i] * f[i] * q.density[i];
    vol += w[i] * q.density[i];
  }
  q.energy_num = num;
  q.f_mass = mass;
  q.volume = vol;
  q.alpha = num / mass;
  q.energy = num / std::pow(mass, 2.0 / p);
  double f2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    q.deviation[i] = q.alpha * f[i] - q.curvature[i];
    f2 += w[i] * q.deviation[i] * q.deviation[i] * q.density[i];
  }
  q.F2 = f2;
  return q;
}

double alpha(const SpectralField& u, const SpectralField& f, const Grid& grid, const OperatorParams& op) {
  return evaluate_quantities(u, synthesize(f, grid), op, grid).alpha;
}

double energy(const SpectralField& u, const SpectralField& f, const Grid& grid, const OperatorParams& op) {
  return evaluate_quantities(u, synthesize(f, grid), op, grid).energy;
}

double f_p(const FlowQuantities& q, double p, const Grid& grid) {
  if (!(p >= 1.0)) throw DomainError("F_p needs p >= 1");
  const auto& w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < q.u.size(); ++i) s += w[i] * power(std::abs(q.deviation[i]), p) * q.density[i];
  return s;
}

double f_p(const SpectralField& u, const SpectralField& f, double p, const Grid& grid,
           const OperatorParams& op) {
  return f_p(evaluate_quantities(u, synthesize(f, grid), op, grid), p, grid);
}

double g_2(const FlowQuantities& q, const Grid& grid, const OperatorParams& op) {
  Samples uw(q.u.size());
  for (std::size_t i = 0; i < uw.size(); ++i) uw[i] = q.u[i] * q.deviation[i];
  const SpectralField c = analyze(uw, grid);
  return quadratic_form(c, c, op);
}

double g_2(const SpectralField& u, const SpectralField& f, const Grid& grid, const OperatorParams& op) {
  return g_2(evaluate_quantities(u, synthesize(f, grid), op, grid), grid, op);
}

Vec3 kazdan_warner_residual(const FlowQuantities& q, const Grid& grid) {
  const std::vector<Vec3> grad = gradient(analyze(q.curvature, grid), grid);
  Vec3 kw = Vec3::Zero();
  for (std::size_t i = 0; i < grad.size(); ++i) kw += grid.weights()[i] * q.density[i] * grad[i];
  return kw;
}

Vec3 kazdan_warner_residual(const SpectralField& u, const Grid& grid, const OperatorParams& op) {
  return kazdan_warner_residual(evaluate_quantities(u, Samples(grid.size(), 1.0), op, grid), grid);
}

Vec3 shadow(const ConformalParams& params, int n) {
  const double r2 = params.r * params.r;
  if (params.r == 1.0) return Vec3::Zero();
  // <phi(x), q> as a function of t = <x, q>; it jumps from -1 to ~1 within 1 + t ~ 1/r^2.
  auto h = [&](double t) {
    const double a = r2 * (1.0 + t), b = 1.0 - t;
    return (a - b) / (a + b) * std::pow(1.0 - t * t, 0.5 * (n - 2));
  };
  double total = 0.0;
  double lo = -1.0;
  double width = 1.0 / r2;
  while (lo < 1.0) {
    const double hi = std::min(1.0, -1.0 + width);
    total += integrate_adaptive(h, lo, hi);
    lo = hi;
    width *= 8.0;
  }
  const double weight = sphere_area(n - 1) / sphere_area(n);
  return weight * total * params.q;
}

Vec3 shadow_quadrature(const ConformalParams& params, const Grid& grid) {
  Vec3 s = Vec3::Zero();
  for (std::size_t i = 0; i < grid.size(); ++i) s += grid.weights()[i] * mobius_map(params, grid.point(i));
  double total = 0.0;
  for (double w : grid.weights()) total += w;
  return s / total;
}

std::optional<Vec3> shadow_direction(const Vec3& theta) {
  if (theta.norm() > 1e-10) return theta.normalized();
  return std::nullopt;
}

Vec3 b_vector(const FlowQuantities& q, const ConformalParams& params, const Grid& grid,
              const OperatorParams& op) {
  Vec3 b = Vec3::Zero();
  for (std::size_t i = 0; i < grid.size(); ++i)
    b += grid.weights()[i] * q.deviation[i] * q.density[i] * mobius_inverse(params, grid.point(i));
  return b / op.omega;
}

Vec3 b_vector(const SpectralField& u, const SpectralField& f, const ConformalParams& params,
              const Grid& grid, const OperatorParams& op) {
  return b_vector(evaluate_quantities(u, synthesize(f, grid), op, grid), params, grid, op);
}

double mass_in_cap(const Samples& density, const Vec3& center, double radius, const Grid& grid) {
  const double cos_r = std::cos(radius);
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double m = grid.weights()[i] * density[i];
    total += m;
    if (grid.point(i).dot(center) >= cos_r) inside += m;
  }
  return inside / total;
}

ConcentrationMetrics concentration_metrics(const SpectralField& u, const ConformalParams& params,
                                           const Grid& grid, const OperatorParams& op,
                                           double cap_radius) {
  const Samples us = synthesize(u, grid);
  Samples dens(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) dens[i] = power(std::abs(us[i]), op.critical_exponent());
  ConcentrationMetrics m;
  m.epsilon = params.epsilon();
  m.mass_in_cap = mass_in_cap(dens, params.q, cap_radius, grid);
  m.u_ratio = max_value(us) / min_value(us);
  return m;
}

}  // namespace qflow
