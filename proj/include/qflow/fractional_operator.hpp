#pragma once

#include <vector>

#include "qflow/spherical_grid.hpp"

namespace qflow {

// Order 2 sigma intertwining operator on S^n and its constants.
struct OperatorParams {
  int n = 2;
  double sigma = 0.5;
  double R_sigma = 0.0;   // Lambda_0 = Gamma(n/2 + sigma) / Gamma(n/2 - sigma)
  double c_kernel = 0.0;  // c_{n,-sigma} of the singular-integral form
  double N_sigma = 0.0;   // 2^{1-2 sigma} Gamma(1 - sigma) / Gamma(sigma)
  double a = 0.0;         // (2 - 4 sigma) / (n - 2 sigma)
  double omega = 0.0;     // |S^n|
  double Y_sigma = 0.0;   // R_sigma omega^{2 sigma / n}
  double beta = 0.0;      // Poisson kernel normalization, by quadrature

  static OperatorParams make(int n, double sigma);

  double critical_exponent() const { return 2.0 * n / (n - 2.0 * sigma); }  // 2n/(n-2s)
  double curvature_exponent() const { return (n + 2.0 * sigma) / (n - 2.0 * sigma); }
  double flow_factor() const { return (n - 2.0 * sigma) / 4.0; }
};

double sphere_area(int n);

// Lambda_k = Gamma(k + n/2 + sigma) / Gamma(k + n/2 - sigma).
double eigenvalue(int k, const OperatorParams& params);
std::vector<double> eigenvalues(int band_limit, const OperatorParams& params);

SpectralField apply_P(const SpectralField& field, const OperatorParams& params);
// sum_l Lambda_l c_{l,m} d_{l,m} = \int v P w dV.
double quadratic_form(const SpectralField& v, const SpectralField& w, const OperatorParams& params);

// Grid samples of u^{-(n+2s)/(n-2s)} P(u); throws PositivityError on non-positive samples.
Samples curvature_samples(const SpectralField& u, const OperatorParams& params, const Grid& grid);
SpectralField curvature_field(const SpectralField& u, const OperatorParams& params, const Grid& grid);

// Samples of u^{-(n+2s)/(n-2s)} P(u v) with u v analyzed up to the grid band limit.
Samples conformal_apply_P_samples(const SpectralField& u, const SpectralField& v,
                                  const OperatorParams& params, const Grid& grid);
SpectralField conformal_apply_P(const SpectralField& u, const SpectralField& v,
                                const OperatorParams& params, const Grid& grid);

// Principal-value form of P excluding the geodesic cap of radius delta about each point.
// Evaluated per degree through the zonal (Funk-Hecke) reduction of the kernel.
SpectralField apply_P_singular(const SpectralField& field, const Grid& grid,
                               const OperatorParams& params, double delta);
// Richardson extrapolation in delta using delta, delta/2, delta/4.
SpectralField apply_P_singular_extrapolated(const SpectralField& field, const Grid& grid,
                                            const OperatorParams& params, double delta);
// Multiplier of degree l in apply_P_singular.
double singular_multiplier(int l, const OperatorParams& params, double delta);

double sobolev_deficit(const SpectralField& u, const OperatorParams& params, const Grid& grid);

struct StroockVaropoulosTerms {
  double lhs = 0.0;          // \int |v|^{p-2} v P^g v dV_g
  double energy_term = 0.0;  // \int |v|^{p/2} P^g |v|^{p/2} dV_g
  double curvature_term = 0.0;  // \int R^g |v|^p dV_g
  double gap = 0.0;
  double coercive = 0.0;     // lhs - curvature_term
};
StroockVaropoulosTerms stroock_varopoulos_terms(const SpectralField& u, const SpectralField& v,
                                                double p, const OperatorParams& params,
                                                const Grid& grid);
double stroock_varopoulos_gap(const SpectralField& u, const SpectralField& v, double p,
                              const OperatorParams& params, const Grid& grid);

// Poisson extension into the unit ball, by the zonal reduction of the kernel (n = 2).
double poisson_extension(const SpectralField& u, const Vec3& y, const OperatorParams& params);
// Same integral by direct sphere quadrature; accurate only for |y| well inside the ball.
double poisson_extension_quadrature(const SpectralField& u, const Vec3& y,
                                    const OperatorParams& params, const Grid& grid);
double beta_constant(const OperatorParams& params);

// Spectral tail norm of a sample set beyond band L: ||s||^2 - ||P_L s||^2, relative.
double aliasing_tail(const Samples& samples, const Grid& grid, int band_limit);

}  // namespace qflow
