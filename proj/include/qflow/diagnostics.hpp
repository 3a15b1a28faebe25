#pragma once

#include <optional>

#include "qflow/conformal_group.hpp"
#include "qflow/fractional_operator.hpp"
#include "qflow/spherical_grid.hpp"

namespace qflow {

// x^e, by repeated multiplication when e is a small integer.
double power(double x, double e);

// Pointwise data of the metric g = u^{4/(n-2s)} g_round against a prescribed f.
struct FlowQuantities {
  Samples u, pu, f;
  Samples curvature;       // R^g = u^{-(n+2s)/(n-2s)} P u
  Samples density;         // u^{2n/(n-2s)}, so dV_g = density dV
  Samples deviation;       // alpha f - R^g
  double energy_num = 0.0; // \int u P u dV
  double f_mass = 0.0;     // \int f dV_g
  double volume = 0.0;     // \int dV_g
  double alpha = 0.0;
  double energy = 0.0;     // E_f[u]
  double F2 = 0.0;
};

// Throws PositivityError if u has a non-positive sample.
FlowQuantities evaluate_quantities(const SpectralField& u, const Samples& f, const OperatorParams& op,
                                   const Grid& grid);

double alpha(const SpectralField& u, const SpectralField& f, const Grid& grid, const OperatorParams& op);
double energy(const SpectralField& u, const SpectralField& f, const Grid& grid, const OperatorParams& op);
double f_p(const SpectralField& u, const SpectralField& f, double p, const Grid& grid,
           const OperatorParams& op);
double g_2(const SpectralField& u, const SpectralField& f, const Grid& grid, const OperatorParams& op);

double f_p(const FlowQuantities& q, double p, const Grid& grid);
// \int w P^g w dV_g = \int (u w) P (u w) dV with w = alpha f - R^g, (u w) truncated at the grid band.
double g_2(const FlowQuantities& q, const Grid& grid, const OperatorParams& op);

// Components \int <grad x_i, grad R^g> dV_g.
Vec3 kazdan_warner_residual(const SpectralField& u, const Grid& grid, const OperatorParams& op);
Vec3 kazdan_warner_residual(const FlowQuantities& q, const Grid& grid);

// Theta = (1/omega) \int phi_{q,r}(x) dV, reduced to a 1-D integral along q by axial symmetry.
Vec3 shadow(const ConformalParams& params, int n = 2);
// Same average by direct grid quadrature.
Vec3 shadow_quadrature(const ConformalParams& params, const Grid& grid);
// Theta / |Theta| when |Theta| > 1e-10.
std::optional<Vec3> shadow_direction(const Vec3& theta);

// b = (1/omega) \int x (alpha f o phi - R^h) dV_h for the normalized metric h = phi^* g,
// evaluated on g by change of variables.
Vec3 b_vector(const FlowQuantities& q, const ConformalParams& params, const Grid& grid,
              const OperatorParams& op);
Vec3 b_vector(const SpectralField& u, const SpectralField& f, const ConformalParams& params,
              const Grid& grid, const OperatorParams& op);

struct ConcentrationMetrics {
  double epsilon = 1.0;
  double mass_in_cap = 0.0;  // fraction of volume within geodesic distance `cap_radius` of the cap center
  double u_ratio = 1.0;
};

// The cap is centered at q of the recentering map, where a bubble of center q concentrates.
ConcentrationMetrics concentration_metrics(const SpectralField& u, const ConformalParams& params,
                                           const Grid& grid, const OperatorParams& op,
                                           double cap_radius = 0.5);
double mass_in_cap(const Samples& density, const Vec3& center, double radius, const Grid& grid);

struct DiagnosticsRecord {
  double t = 0.0, dt = 0.0, alpha = 0.0, energy = 0.0, volume = 0.0;
  double F2 = 0.0, F4 = 0.0, G2 = 0.0;
  Vec3 center_of_mass = Vec3::Zero();
  double r = 1.0, eps = 1.0;
  Vec3 q = Vec3(0, 0, 1);
  Vec3 theta_vec = Vec3::Zero();   // shadow Theta
  std::optional<Vec3> theta;       // Theta / |Theta|
  Vec3 b = Vec3::Zero();
  Vec3 kw = Vec3::Zero();
  double umax = 0.0, umin = 0.0;
  double curv_margin = 0.0;
  std::optional<double> v_dev;     // ||v - 1||_inf when the recentering is trusted
  double mass_in_cap = 0.0;        // around q, radius 0.5
  bool recenter_trusted = false;
};

}  // namespace qflow
