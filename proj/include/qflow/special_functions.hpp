#pragma once

#include <functional>

namespace qflow {

// Gamma function for 0 < x <= 171, relative error below 1e-13.
double gamma_fn(double x);

// log Gamma for x > 0; used where Gamma itself would overflow.
double log_gamma(double x);

// Gamma(a) / Gamma(b) without intermediate overflow.
double gamma_ratio(double a, double b);

// Legendre polynomial P_l(t).
double legendre(int l, double t);

// Adaptive Gauss-Kronrod quadrature on [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12);

}  // namespace qflow
