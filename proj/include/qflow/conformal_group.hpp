#pragma once

#include "qflow/fractional_operator.hpp"
#include "qflow/spherical_grid.hpp"

namespace qflow {

// Moebius dilation of S^n with center q and factor r >= 1.
struct ConformalParams {
  Vec3 q = Vec3(0, 0, 1);
  double r = 1.0;

  static ConformalParams make(const Vec3& q, double r);
  double epsilon() const { return 1.0 / r; }
};

// phi_{q,r}(x) for any r > 0, without renormalization. phi_{q,1/r} is the inverse of phi_{q,r}.
Vec3 mobius_map_raw(const Vec3& q, double r, const Vec3& x);
Vec3 mobius_map(const ConformalParams& params, const Vec3& x);
Vec3 mobius_inverse(const ConformalParams& params, const Vec3& x);
// |det d phi|^{1/n} = 2r / (r^2 (1 + <x,q>) + 1 - <x,q>).
double mobius_conformal_factor(const Vec3& q, double r, const Vec3& x);
double mobius_jacobian(const ConformalParams& params, const Vec3& x, int n = 2);

struct Bubble {
  Vec3 center = Vec3(0, 0, 1);
  double scale = 1.0;
  double amplitude = 1.0;
};

// b (2 lambda / (2 + (lambda^2 - 1)(1 - <x, x0>)))^{(n - 2 sigma)/2}; maximal at x0.
double bubble_value(const Bubble& bubble, const OperatorParams& params, const Vec3& x);
SpectralField bubble_field(const Bubble& bubble, const OperatorParams& params, const Grid& grid,
                           int band_limit = -1);
// Amplitude making b u_{x,lambda} stationary for P u = alpha f(x) u^{(n+2s)/(n-2s)}.
double bubble_amplitude(const OperatorParams& params, double alpha, double f_value);

// Samples of field(phi(x)) at the grid nodes.
Samples compose_samples(const SpectralField& field, const ConformalParams& params, const Grid& grid);
// v = (u o phi) |det d phi|^{(n-2s)/(2n)}, sampled on the grid.
Samples pullback_samples(const SpectralField& u, const ConformalParams& params,
                         const OperatorParams& op, const Grid& grid);
SpectralField pullback_factor(const SpectralField& u, const ConformalParams& params,
                              const OperatorParams& op, const Grid& grid, int band_limit = -1);

// \int x u^{2n/(n-2s)} dV.
Vec3 center_of_mass(const SpectralField& u, const OperatorParams& op, const Grid& grid);
Vec3 center_of_mass(const Samples& u, const OperatorParams& op, const Grid& grid);
// Center of mass of the pulled-back metric, by change of variables:
// \int x dV_h = \int phi^{-1}(y) u(y)^{2n/(n-2s)} dV(y).
Vec3 pulled_back_center_of_mass(const Samples& u_pow, const ConformalParams& params, const Grid& grid);

struct RecenterResult {
  ConformalParams params;
  SpectralField v;
  double residual = 0.0;  // |center of mass of h| / omega_n
  int iterations = 0;
};

struct RecenterOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;  // on |center of mass| / omega_n
  bool compute_v = true;
  int band_limit = -1;      // band of v; defaults to the band of u
};

// Finds (q, r) with vanishing center of mass of the pulled-back metric by damped Newton in
// w = log(r) q, which stays regular at r = 1.
RecenterResult recenter(const SpectralField& u, const OperatorParams& op, const Grid& grid,
                        const ConformalParams& initial_guess, const RecenterOptions& options = {});

}  // namespace qflow
