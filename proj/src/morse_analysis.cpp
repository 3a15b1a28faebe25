#include "qflow/morse_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

struct Derivatives {
  std::array<SpectralField, 3> grad;
  std::array<std::array<SpectralField, 3>, 3> hess;  // [i][j] = (grad G_i)_j

  explicit Derivatives(const SpectralField& f) : grad(gradient_fields(f)) {
    for (int i = 0; i < 3; ++i) hess[i] = gradient_fields(grad[i]);
  }

  Vec3 gradient_at(const Vec3& x) const {
    return Vec3(evaluate(grad[0], x), evaluate(grad[1], x), evaluate(grad[2], x));
  }

  // Covariant Hessian in the tangent frame (e1, e2): H(a, b) = sum_ij b_i a_j J_ij.
  Eigen::Matrix2d hessian_at(const Vec3& x, const Vec3& e1, const Vec3& e2) const {
    Eigen::Matrix3d j;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) j(a, b) = evaluate(hess[a][b], x);
    const Vec3 e[2] = {e1, e2};
    Eigen::Matrix2d h;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) h(a, b) = e[b].dot(j * e[a]);
    return 0.5 * (h + h.transpose());
  }
};

bool location_less(const CriticalPoint& a, const CriticalPoint& b) {
  const Vec3 &x = a.location, &y = b.location;
  if (x[0] != y[0]) return x[0] < y[0];
  if (x[1] != y[1]) return x[1] < y[1];
  return x[2] < y[2];
}

std::vector<std::size_t> seed_nodes(const Samples& s, const Grid& grid) {
  const int nlat = grid.nlat(), nlon = grid.nlon();
  std::vector<std::size_t> seeds;
  auto at = [&](int j, int k) { return s[static_cast<std::size_t>(j) * nlon + ((k % nlon) + nlon) % nlon]; };
  for (int j = 0; j < nlat; ++j) {
    for (int k = 0; k < nlon; ++k) {
      const double v = at(j, k);
      bool is_min = true;
      for (int dj = -1; dj <= 1 && is_min; ++dj) {
        const int jj = j + dj;
        if (jj < 0 || jj >= nlat) continue;
        for (int dk = -1; dk <= 1; ++dk)
          if ((dj != 0 || dk != 0) && at(jj, k + dk) < v) {
            is_min = false;
            break;
          }
      }
      // Across the pole.
      if (is_min && (j == 0 || j == nlat - 1)) {
        for (int dk = -1; dk <= 1; ++dk)
          if (at(j, k + nlon / 2 + dk) < v) is_min = false;
      }
      if (is_min) seeds.push_back(static_cast<std::size_t>(j) * nlon + k);
    }
  }
  return seeds;
}

// Newton on the sphere for grad f = 0, retracting through the gnomonic chart at the iterate.
std::optional<Vec3> newton_critical(const Derivatives& d, Vec3 x, int max_iterations, double scale) {
  const double grad_tol = 1e-12 * std::max(1.0, scale);
  for (int it = 0; it <= max_iterations; ++it) {
    const auto [e1, e2] = tangent_frame(x);
    const Vec3 gx = d.gradient_at(x);
    const Eigen::Vector2d gt(gx.dot(e1), gx.dot(e2));
    if (gt.norm() <= grad_tol) return x;
    if (it == max_iterations) break;
    const Eigen::Matrix2d h = d.hessian_at(x, e1, e2);
    if (std::abs(h.determinant()) < 1e-300) break;
    Eigen::Vector2d step = -h.inverse() * gt;
    const double len = step.norm();
    if (len > 0.25) step *= 0.25 / len;
    x = (x + step[0] * e1 + step[1] * e2).normalized();
    if (len < 1e-15) {
      if (d.gradient_at(x).norm() < 1e-9) return x;
      break;
    }
  }
  return std::nullopt;
}

}  // namespace

std::pair<double, double> extrema(const SpectralField& f, const Grid& grid) {
  const Samples fs = synthesize(f, grid);
  const auto [lo, hi] = std::minmax_element(fs.begin(), fs.end());
  double fmin = *lo, fmax = *hi;
  const Derivatives d(f);
  const double scale = sup_norm(fs);
  if (auto x = newton_critical(d, grid.point(lo - fs.begin()), 50, scale)) fmin = std::min(fmin, evaluate(f, *x));
  if (auto x = newton_critical(d, grid.point(hi - fs.begin()), 50, scale)) fmax = std::max(fmax, evaluate(f, *x));
  return {fmin, fmax};
}

std::vector<CriticalPoint> find_critical_points(const SpectralField& f, const Grid& grid,
                                                const CriticalPointOptions& options) {
  if (f.band_limit() > grid.band_limit()) throw ConfigurationError("grid band is below the band of f");
  const Samples fs = synthesize(f, grid);
  const double scale = sup_norm(fs);
  const Derivatives d(f);
  const SpectralField lap = laplacian(f);

  const std::vector<Vec3> g = gradient(f, grid);
  Samples g2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i].squaredNorm();
  const std::vector<std::size_t> seeds = seed_nodes(g2, grid);

  std::vector<CriticalPoint> found;
  std::size_t failures = 0;
  for (std::size_t node : seeds) {
    const std::optional<Vec3> root = newton_critical(d, grid.point(node), options.max_iterations, scale);
    if (!root) {
      ++failures;
      continue;
    }
    const Vec3 x = *root;
    bool duplicate = false;
    for (const CriticalPoint& p : found)
      if (std::acos(std::clamp(p.location.dot(x), -1.0, 1.0)) < options.dedupe_distance ||
          (p.location - x).norm() < options.dedupe_distance)
        duplicate = true;
    if (duplicate) continue;

    const auto [e1, e2] = tangent_frame(x);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(d.hessian_at(x, e1, e2));
    const Eigen::Vector2d ev = eig.eigenvalues();
    CriticalPoint p;
    p.location = x;
    p.value = evaluate(f, x);
    p.index = (ev[0] < 0.0) + (ev[1] < 0.0);
    p.laplacian = evaluate(lap, x);
    p.residual = d.gradient_at(x).norm();
    p.min_abs_eigenvalue = std::min(std::abs(ev[0]), std::abs(ev[1]));
    if (p.min_abs_eigenvalue < options.degeneracy_tolerance * scale)
      throw NotMorseError({x[0], x[1], x[2]}, p.min_abs_eigenvalue);
    found.push_back(p);
  }
  if (2 * failures > seeds.size()) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "Newton failed from %zu of %zu seeds", failures, seeds.size());
    throw UnreliableLandscapeError(buf);
  }
  int euler = 0;
  for (const CriticalPoint& p : found) euler += (p.index % 2 == 0) ? 1 : -1;
  if (euler != 2) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "critical points give Euler characteristic %d, expected 2", euler);
    throw UnreliableLandscapeError(buf);
  }
  std::sort(found.begin(), found.end(), location_less);
  return found;
}

std::vector<int> gamma_counts(const std::vector<CriticalPoint>& points, int n) {
  std::vector<int> gamma(n + 1, 0);
  for (const CriticalPoint& p : points) {
    if (p.index < 0 || p.index > n) throw DomainError("Morse index out of range");
    if (p.laplacian < 0.0) ++gamma[n - p.index];
  }
  return gamma;
}

MorseSystem condition_iii(const std::vector<int>& gamma) {
  if (gamma.empty()) throw DomainError("gamma must have n + 1 entries");
  for (int g : gamma)
    if (g < 0) throw DomainError("gamma entries must be nonnegative");
  const int n = static_cast<int>(gamma.size()) - 1;
  MorseSystem s;
  long prev = 0;
  for (int i = 0; i <= n; ++i) {
    const long k = i == 0 ? gamma[0] - 1L : gamma[i] - prev;
    s.k.push_back(k);
    prev = k;
    if (k < 0) {
      s.violation_index = i;
      s.witness = "k_" + std::to_string(i) + " = " + std::to_string(k) + " < 0";
      break;
    }
  }
  if (s.violation_index < 0 && s.k.back() != 0) {
    s.violation_index = n;
    s.witness = "k_" + std::to_string(n) + " = " + std::to_string(s.k.back()) + " != 0";
  }
  s.solvable = s.violation_index < 0;
  s.condition_holds = !s.solvable;
  return s;
}

double pinching_threshold(const OperatorParams& op) {
  return std::pow(2.0, 2.0 * op.sigma / (op.n - 2.0 * op.sigma));
}

PinchingCheck condition_i(const SpectralField& f, const OperatorParams& op, const Grid& grid) {
  const auto [fmin, fmax] = extrema(f, grid);
  if (!(fmin > 0.0)) throw DomainError("f must be positive");
  PinchingCheck c;
  c.ratio = fmax / fmin;
  c.threshold = pinching_threshold(op);
  c.holds = c.ratio < c.threshold;
  return c;
}

NondegeneracyCheck condition_ii(const std::vector<CriticalPoint>& points, const SpectralField& f,
                                const Grid& grid) {
  NondegeneracyCheck c;
  c.min_abs_laplacian = std::numeric_limits<double>::infinity();
  for (const CriticalPoint& p : points) c.min_abs_laplacian = std::min(c.min_abs_laplacian, std::abs(p.laplacian));
  const std::vector<Vec3> g = gradient(f, grid);
  const Samples lap = synthesize(laplacian(f), grid);
  c.min_landscape = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i)
    c.min_landscape = std::min(c.min_landscape, g[i].squaredNorm() + lap[i] * lap[i]);
  c.holds = c.min_abs_laplacian > 1e-8 && c.min_landscape > 1e-10;
  return c;
}

std::optional<double> epsilon0(double fmin, double fmax, const OperatorParams& op) {
  const double e = pinching_threshold(op) * fmin / fmax - 1.0 - 1e-6;
  if (!(e > 0.0)) return std::nullopt;
  return e;
}

double admissible_energy(double eps0, double fmin, const OperatorParams& op) {
  const double n = op.n, s = op.sigma;
  return op.R_sigma * std::pow(op.omega, 2.0 * s / n) * std::pow(1.0 + eps0, (n - 2.0 * s) / n) *
         std::pow(fmin, -(n - 2.0 * s) / n);
}

MorseReport assemble_report(std::vector<CriticalPoint> points, std::vector<int> gamma,
                            const PinchingCheck& pinching, const NondegeneracyCheck& nondegeneracy,
                            double fmin, double fmax, const OperatorParams& op,
                            std::optional<double> u0_energy) {
  MorseReport r;
  r.points = std::move(points);
  r.gamma = std::move(gamma);
  r.system = condition_iii(r.gamma);
  r.pinching = pinching;
  r.nondegeneracy = nondegeneracy;
  for (const CriticalPoint& p : r.points) r.euler_characteristic += (p.index % 2 == 0) ? 1 : -1;
  r.epsilon0 = epsilon0(fmin, fmax, op);
  if (r.epsilon0) r.beta = admissible_energy(*r.epsilon0, fmin, op);
  r.u0_energy = u0_energy;
  if (u0_energy && r.beta) r.u0_admissible = *u0_energy <= *r.beta;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (std::size_t j = i + 1; j < r.points.size(); ++j)
      if (std::abs(r.points[i].value - r.points[j].value) <= 1e-9 * std::max(1.0, std::abs(fmax))) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "critical points %zu and %zu share the level %.12g", i, j, r.points[i].value);
        r.warnings.emplace_back(buf);
      }
  r.applicable = r.pinching.holds && r.nondegeneracy.holds && r.system.condition_holds;
  return r;
}

MorseReport applicability_report(const SpectralField& f, const OperatorParams& op, const Grid& grid,
                                 std::optional<double> u0_energy) {
  if (op.n != 2) throw ConfigurationError("critical point search is implemented for n = 2");
  std::vector<CriticalPoint> points = find_critical_points(f, grid);
  std::vector<int> gamma = gamma_counts(points, op.n);
  const PinchingCheck pinching = condition_i(f, op, grid);
  const NondegeneracyCheck nondeg = condition_ii(points, f, grid);
  const auto [fmin, fmax] = extrema(f, grid);
  return assemble_report(std::move(points), std::move(gamma), pinching, nondeg, fmin, fmax, op, u0_energy);
}

}  // namespace qflow
