#include "qflow/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

// Lanczos approximation, g = 671/128, 15 terms.
constexpr double kLanczosG = 5.24218750000000000;
constexpr double kSqrtTwoPi = 2.5066282746310005024;
constexpr std::array<double, 14> kLanczosCoef = {
    57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
    -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
    -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
    .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
    -.261908384015814087e-4, .368991826595316234e-5};

double lanczos_series(double x) {
  double ser = 0.999999999999997092;
  double y = x;
  for (double c : kLanczosCoef) ser += c / ++y;
  return ser;
}

}  // namespace

double gamma_fn(double x) {
  if (!(x > 0.0) || x > 171.0) throw DomainError("gamma_fn argument out of (0, 171]");
  const double t = x + kLanczosG;
  // t^(x+1/2) e^-t split in two halves so neither factor overflows near 171.
  const double h = std::pow(t, 0.5 * (x + 0.5));
  return (h * std::exp(-t)) * (h * (kSqrtTwoPi * lanczos_series(x) / x));
}

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_gamma argument must be positive");
  const double t = x + kLanczosG;
  return (x + 0.5) * std::log(t) - t + std::log(kSqrtTwoPi * lanczos_series(x) / x);
}

double gamma_ratio(double a, double b) {
  if (a <= 171.0 && b <= 171.0) return gamma_fn(a) / gamma_fn(b);
  return std::exp(log_gamma(a) - log_gamma(b));
}

double legendre(int l, double t) {
  if (l == 0) return 1.0;
  double p0 = 1.0, p1 = t;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, rel_tol, &err);
}

}  // namespace qflow
