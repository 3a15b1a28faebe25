#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qflow/fractional_operator.hpp"
#include "qflow/spherical_grid.hpp"

namespace qflow {

struct CriticalPoint {
  Vec3 location;
  double value = 0.0;
  int index = 0;           // number of negative Hessian eigenvalues
  double laplacian = 0.0;  // Delta f at the point
  double residual = 0.0;   // |grad f| at convergence
  double min_abs_eigenvalue = 0.0;
};

struct CriticalPointOptions {
  double degeneracy_tolerance = 1e-6;  // relative to sup |f|
  double dedupe_distance = 1e-6;
  int max_iterations = 50;
};

// All critical points of f on S^2, by Newton on the sphere (gnomonic retraction at the current
// iterate) from every grid-local minimum of |grad f|^2. Sorted by location.
std::vector<CriticalPoint> find_critical_points(const SpectralField& f, const Grid& grid,
                                                const CriticalPointOptions& options = {});

// gamma_i = #{critical points with Delta f < 0 and index n - i}, i = 0..n.
std::vector<int> gamma_counts(const std::vector<CriticalPoint>& points, int n);

struct MorseSystem {
  bool solvable = false;          // nonnegative k exists
  bool condition_holds = false;   // condition (iii): no such k
  std::vector<long> k;            // forced recurrence values, up to the first violation
  int violation_index = -1;       // first i with k_i < 0, or n when k_n != 0
  std::string witness;
};

// Solves gamma_0 = 1 + k_0, gamma_i = k_{i-1} + k_i, k_n = 0 by the forced recurrence.
MorseSystem condition_iii(const std::vector<int>& gamma);

struct PinchingCheck {
  bool holds = false;
  double ratio = 0.0;      // max f / min f
  double threshold = 0.0;  // 2^{2s/(n-2s)}
};

double pinching_threshold(const OperatorParams& op);
// Min and max of f: grid extrema polished by Newton on grad f.
std::pair<double, double> extrema(const SpectralField& f, const Grid& grid);
PinchingCheck condition_i(const SpectralField& f, const OperatorParams& op, const Grid& grid);

struct NondegeneracyCheck {
  bool holds = false;
  double min_abs_laplacian = 0.0;  // over critical points
  double min_landscape = 0.0;      // grid minimum of |grad f|^2 + |Delta f|^2
};

NondegeneracyCheck condition_ii(const std::vector<CriticalPoint>& points, const SpectralField& f,
                                const Grid& grid);

struct MorseReport {
  std::vector<CriticalPoint> points;
  std::vector<int> gamma;
  MorseSystem system;
  PinchingCheck pinching;
  NondegeneracyCheck nondegeneracy;
  int euler_characteristic = 0;
  std::optional<double> epsilon0;  // unset when condition (i) fails
  std::optional<double> beta;
  std::optional<double> u0_energy;
  std::optional<bool> u0_admissible;  // E_f[u0] <= beta
  std::vector<std::string> warnings;
  bool applicable = false;
};

// Largest eps0 with [(1 + eps0) max f / min f]^{(n-2s)/n} < 2^{2s/n}, less a 1e-6 margin.
std::optional<double> epsilon0(double fmin, double fmax, const OperatorParams& op);
// R_s omega^{2s/n} (1 + eps0)^{(n-2s)/n} (min f)^{-(n-2s)/n}.
double admissible_energy(double eps0, double fmin, const OperatorParams& op);

// Assembles the verdicts from precomputed parts; gamma may be injected.
MorseReport assemble_report(std::vector<CriticalPoint> points, std::vector<int> gamma,
                            const PinchingCheck& pinching, const NondegeneracyCheck& nondegeneracy,
                            double fmin, double fmax, const OperatorParams& op,
                            std::optional<double> u0_energy = std::nullopt);

MorseReport applicability_report(const SpectralField& f, const OperatorParams& op, const Grid& grid,
                                 std::optional<double> u0_energy = std::nullopt);

}  // namespace qflow
