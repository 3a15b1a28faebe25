#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qflow/diagnostics.hpp"

namespace qflow {

struct FlowConfig {
  OperatorParams op = OperatorParams::make(2, 0.75);
  int band_limit = 32;
  SpectralField f;   // prescribed function, positive
  SpectralField u0;  // initial conformal factor, positive; volume-normalized on entry
  double t_end = 100.0;
  double dt_init = 1e-2;
  double dt_min = 1e-9;
  double dt_max = 1.0;
  double c_stab = 0.8;
  double energy_tolerance = 1e-10;       // relative energy increase that triggers rejection
  double convergence_tolerance = 1e-10;  // F2 threshold for CONVERGED
  double r_max = 1e3;
  double ratio_max = 1e6;
  double r_trust = 1e2;
  int recenter_period = 10;
  int stall_steps = 100;
  int cadence = 1;
  long max_steps = 10'000'000;

  // Throws ConfigurationError on inconsistent settings.
  void validate() const;
};

enum class FlowEvent {
  kNone,
  kConverged,
  kBlowup,
  kStalled,
  kTimeReached,
  kStiffnessFailure,   // dt fell below dt_min
  kPositivityFailure,
  kMaxSteps,
};

std::string to_string(FlowEvent e);

// Constants of the a priori alpha bounds and the curvature lower bound.
struct AlphaBounds {
  double alpha1 = 0.0;  // R_sigma omega^{... } / max f
  double alpha2 = 0.0;  // E_f[u0] (min f omega)^{-2 s / n}
  double alpha3 = 0.0;  // bound on alpha'
  double gamma = 0.0;   // lower bound of R^g - alpha f
};

struct FlowState {
  double t = 0.0;
  SpectralField u;
  FlowQuantities q;  // evaluation of u, reused as the first RK4 stage
  double dt = 0.0;   // step size proposal for the next step
  double last_dt = 0.0;
  long step_count = 0;
  int accept_streak = 0;
  int pinned_steps = 0;
  ConformalParams recenter;
  double recenter_residual = 0.0;
  bool recenter_trusted = false;
  bool recenter_failed = false;
  long rejections = 0;

  double alpha() const { return q.alpha; }
  double energy() const { return q.energy; }
  double volume() const { return q.volume; }
};

struct RunSummary {
  double alpha_min = 0.0, alpha_max = 0.0;
  double energy_max_increase = 0.0;  // largest relative increase across accepted steps
  double volume_max_drift = 0.0;     // largest |volume - omega| / omega after renormalization
  double curv_margin_min = 0.0;
  long recenter_failures = 0;
  long rejections = 0;
};

struct RunResult {
  FlowEvent event = FlowEvent::kNone;
  FlowState final_state;
  std::vector<DiagnosticsRecord> records;
  RunSummary summary;
  std::string message;
};

class FlowEngine {
 public:
  explicit FlowEngine(FlowConfig config);

  const FlowConfig& config() const { return config_; }
  const Grid& grid() const { return grid_; }
  const Grid& base_grid() const { return base_grid_; }
  const Samples& f_samples() const { return f_samples_; }
  const AlphaBounds& bounds() const { return bounds_; }

  FlowState initial_state() const;
  FlowQuantities evaluate(const SpectralField& u) const;
  // -(n-2s)/4 (R^g - alpha f) u, analyzed at the band limit.
  SpectralField rhs(const FlowQuantities& q) const;
  SpectralField rhs(const SpectralField& u) const;
  // Largest dt with dt Lambda_L max(u^{-4s/(n-2s)}) (n-2s)/4 <= C_stab.
  double stable_dt(const FlowQuantities& q) const;
  // One classical RK4 step of size dt, no renormalization.
  SpectralField rk4_advance(const SpectralField& u, const FlowQuantities& q0, double dt) const;
  SpectralField renormalize(const SpectralField& u) const;

  // Advances by one accepted step (possibly after rejections). Returns kNone on success or
  // the failure event.
  FlowEvent step(FlowState& state) const;
  // Accepts a step of exactly dt (renormalized); throws PositivityError on failure.
  void advance_fixed(FlowState& state, double dt) const;
  // Updates the recentering parameters of the state; returns false on Newton failure.
  bool update_recentering(FlowState& state) const;

  double curvature_margin(const FlowQuantities& q) const;
  DiagnosticsRecord diagnose(const FlowState& state, bool with_v) const;

  using Observer = std::function<void(const DiagnosticsRecord&, const FlowState&)>;
  RunResult run(const Observer& observer = {}) const;

 private:
  FlowConfig config_;
  Grid grid_;       // band 2L, for nonlinear evaluation
  Grid base_grid_;  // band L, for pulled-back fields
  Samples f_samples_;
  double lambda_max_ = 0.0;
  double inf_curvature0_ = 0.0;
  AlphaBounds bounds_;
};

// sup_{t <= T} ||u1 - u2||_2 / ||u1(0) - u2(0)||_2 for u0 and u0 + delta Y_{1,1}, both integrated
// with the same fixed step schedule.
double stability_probe(const FlowConfig& config, double delta, double horizon);

}  // namespace qflow
