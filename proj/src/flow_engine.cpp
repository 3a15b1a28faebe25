#include "qflow/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

// Quantities of c u from those of u.
void rescale(FlowQuantities& q, double c, const OperatorParams& op, const Grid& grid) {
  const double e = op.curvature_exponent();
  const double p = op.critical_exponent();
  const double cr = power(c, 1.0 - e), cp = power(c, p);
  for (std::size_t i = 0; i < q.u.size(); ++i) {
    q.u[i] *= c;
    q.pu[i] *= c;
    q.curvature[i] *= cr;
    q.density[i] *= cp;
  }
  q.energy_num *= c * c;
  q.f_mass *= cp;
  q.volume *= cp;
  q.alpha = q.energy_num / q.f_mass;
  q.energy = q.energy_num / std::pow(q.f_mass, 2.0 / p);
  const auto& w = grid.weights();
  double f2 = 0.0;
  for (std::size_t i = 0; i < q.u.size(); ++i) {
    q.deviation[i] = q.alpha * q.f[i] - q.curvature[i];
    f2 += w[i] * q.deviation[i] * q.deviation[i] * q.density[i];
  }
  q.F2 = f2;
}

double coefficient_distance(const SpectralField& a, const SpectralField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::string to_string(FlowEvent e) {
  switch (e) {
    case FlowEvent::kNone: return "NONE";
    case FlowEvent::kConverged: return "CONVERGED";
    case FlowEvent::kBlowup: return "BLOWUP";
    case FlowEvent::kStalled: return "STALLED";
    case FlowEvent::kTimeReached: return "T_END";
    case FlowEvent::kStiffnessFailure: return "STIFFNESS_FAILURE";
    case FlowEvent::kPositivityFailure: return "POSITIVITY_FAILURE";
    case FlowEvent::kMaxSteps: return "MAX_STEPS";
  }
  return "UNKNOWN";
}

void FlowConfig::validate() const {
  if (op.n != 2) throw ConfigurationError("the flow is implemented for n = 2");
  if (band_limit < 4 || band_limit > 128) throw ConfigurationError("band limit must lie in [4, 128]");
  if (f.size() == 0 || u0.size() == 0) throw ConfigurationError("f and u0 must be set");
  if (f.band_limit() > band_limit || u0.band_limit() > band_limit)
    throw ConfigurationError("f and u0 must be band-limited to the flow band limit");
  if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
    throw ConfigurationError("need 0 < dt_min <= dt_init <= dt_max");
  if (!(c_stab > 0.0)) throw ConfigurationError("c_stab must be positive");
  if (!(t_end > 0.0)) throw ConfigurationError("t_end must be positive");
  if (!(energy_tolerance >= 0.0)) throw ConfigurationError("energy tolerance must be nonnegative");
  if (!(r_max > 1.0 && ratio_max > 1.0 && r_trust >= 1.0))
    throw ConfigurationError("blow-up thresholds must exceed 1");
  if (recenter_period < 1 || cadence < 1 || stall_steps < 1 || max_steps < 1)
    throw ConfigurationError("periods and step counts must be positive");
}

FlowEngine::FlowEngine(FlowConfig config)
    : config_(std::move(config)),
      grid_(build_oversampled_grid(config_.band_limit)),
      base_grid_(build_grid(config_.band_limit)) {
  config_.validate();
  f_samples_ = synthesize(config_.f, grid_);
  const double fmin = min_value(f_samples_), fmax = max_value(f_samples_);
  if (!(fmin > 0.0)) throw ConfigurationError("f must be positive");
  lambda_max_ = eigenvalue(config_.band_limit, config_.op);

  const FlowState s0 = initial_state();
  inf_curvature0_ = min_value(s0.q.curvature);
  const OperatorParams& op = config_.op;
  const double n = op.n, s = op.sigma;
  bounds_.alpha1 = op.Y_sigma * std::pow(op.omega, -2.0 * s / n) / fmax;
  bounds_.alpha2 = s0.q.energy * std::pow(fmin * op.omega, -2.0 * s / n);
  bounds_.alpha3 = s * s / (2.0 * (n - 2.0 * s)) * bounds_.alpha2 * bounds_.alpha2 * fmax * fmax / fmin;
  bounds_.gamma = std::min(inf_curvature0_ - bounds_.alpha2 * fmax,
                           -(fmax / (s * bounds_.alpha1 * fmin)) *
                               (bounds_.alpha3 + s * bounds_.alpha2 * bounds_.alpha2 * fmax));
}

FlowQuantities FlowEngine::evaluate(const SpectralField& u) const {
  return evaluate_quantities(u, f_samples_, config_.op, grid_);
}

SpectralField FlowEngine::rhs(const FlowQuantities& q) const {
  const double k = config_.op.flow_factor();
  Samples s(q.u.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = k * q.deviation[i] * q.u[i];
  return analyze(s, grid_, config_.band_limit);
}

SpectralField FlowEngine::rhs(const SpectralField& u) const { return rhs(evaluate(u)); }

double FlowEngine::stable_dt(const FlowQuantities& q) const {
  const OperatorParams& op = config_.op;
  const double umin = min_value(q.u);
  const double stiff = lambda_max_ * std::pow(umin, -4.0 * op.sigma / (op.n - 2.0 * op.sigma)) * op.flow_factor();
  return config_.c_stab / stiff;
}

SpectralField FlowEngine::rk4_advance(const SpectralField& u, const FlowQuantities& q0, double dt) const {
  const SpectralField k1 = rhs(q0);
  const SpectralField k2 = rhs(u + (0.5 * dt) * k1);
  const SpectralField k3 = rhs(u + (0.5 * dt) * k2);
  const SpectralField k4 = rhs(u + dt * k3);
  SpectralField out = u;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

SpectralField FlowEngine::renormalize(const SpectralField& u) const {
  const FlowQuantities q = evaluate(u);
  return std::pow(config_.op.omega / q.volume, 1.0 / config_.op.critical_exponent()) * u;
}

FlowState FlowEngine::initial_state() const {
  FlowState s;
  s.u = config_.u0.resized(config_.band_limit);
  s.q = evaluate(s.u);
  const double c = std::pow(config_.op.omega / s.q.volume, 1.0 / config_.op.critical_exponent());
  s.u *= c;
  rescale(s.q, c, config_.op, grid_);
  s.dt = config_.dt_init;
  return s;
}

void FlowEngine::advance_fixed(FlowState& state, double dt) const {
  SpectralField u1 = rk4_advance(state.u, state.q, dt);
  FlowQuantities q1 = evaluate(u1);
  const double c = std::pow(config_.op.omega / q1.volume, 1.0 / config_.op.critical_exponent());
  u1 *= c;
  rescale(q1, c, config_.op, grid_);
  state.u = std::move(u1);
  state.q = std::move(q1);
  state.t += dt;
  state.last_dt = dt;
  ++state.step_count;
}

FlowEvent FlowEngine::step(FlowState& state) const {
  const double remaining = config_.t_end - state.t;
  double dt = std::min({state.dt, stable_dt(state.q), config_.dt_max, remaining});
  const bool final_step = dt == remaining;
  const double e0 = state.q.energy;
  while (true) {
    if (dt < config_.dt_min && !final_step) return FlowEvent::kStiffnessFailure;
    bool ok = true;
    SpectralField u1;
    FlowQuantities q1;
    try {
      u1 = rk4_advance(state.u, state.q, dt);
      q1 = evaluate(u1);
      const double c = std::pow(config_.op.omega / q1.volume, 1.0 / config_.op.critical_exponent());
      u1 *= c;
      rescale(q1, c, config_.op, grid_);
      if (q1.energy > e0 + config_.energy_tolerance * std::abs(e0)) ok = false;
    } catch (const PositivityError&) {
      ok = false;
    }
    if (!ok) {
      ++state.rejections;
      state.accept_streak = 0;
      if (final_step && dt < config_.dt_min) return FlowEvent::kStiffnessFailure;
      dt *= 0.5;
      continue;
    }
    state.u = std::move(u1);
    state.q = std::move(q1);
    state.t = final_step ? config_.t_end : state.t + dt;
    state.last_dt = dt;
    ++state.step_count;
    state.pinned_steps = dt <= config_.dt_min * (1.0 + 1e-12) ? state.pinned_steps + 1 : 0;
    if (++state.accept_streak >= 5) {
      state.accept_streak = 0;
      state.dt = std::min(1.2 * dt, config_.dt_max);
    } else {
      state.dt = std::max(dt, std::min(state.dt, dt * 1.0));
    }
    return FlowEvent::kNone;
  }
}

bool FlowEngine::update_recentering(FlowState& state) const {
  RecenterOptions opt;
  opt.compute_v = false;
  try {
    const RecenterResult res = recenter(state.u, config_.op, grid_, state.recenter, opt);
    state.recenter = res.params;
    state.recenter_residual = res.residual;
    state.recenter_trusted = res.params.r <= config_.r_trust;
    state.recenter_failed = false;
    return true;
  } catch (const RecenteringError& e) {
    state.recenter_failed = true;
    state.recenter_residual = e.best_residual;
    return false;
  }
}

double FlowEngine::curvature_margin(const FlowQuantities& q) const {
  double m = std::numeric_limits<double>::infinity();
  for (double d : q.deviation) m = std::min(m, -d);
  return m - bounds_.gamma;
}

DiagnosticsRecord FlowEngine::diagnose(const FlowState& state, bool with_v) const {
  const OperatorParams& op = config_.op;
  const FlowQuantities& q = state.q;
  DiagnosticsRecord d;
  d.t = state.t;
  d.dt = state.last_dt;
  d.alpha = q.alpha;
  d.energy = q.energy;
  d.volume = q.volume;
  d.F2 = q.F2;
  d.F4 = f_p(q, 4.0, grid_);
  d.G2 = g_2(q, grid_, op);
  for (std::size_t i = 0; i < grid_.size(); ++i) d.center_of_mass += grid_.weights()[i] * q.density[i] * grid_.point(i);
  d.r = state.recenter.r;
  d.eps = state.recenter.epsilon();
  d.q = state.recenter.q;
  d.theta_vec = shadow(state.recenter, op.n);
  d.theta = shadow_direction(d.theta_vec);
  d.b = b_vector(q, state.recenter, grid_, op);
  d.kw = kazdan_warner_residual(q, grid_);
  d.umax = max_value(q.u);
  d.umin = min_value(q.u);
  d.curv_margin = curvature_margin(q);
  d.mass_in_cap = mass_in_cap(q.density, state.recenter.q, 0.5, grid_);
  d.recenter_trusted = state.recenter_trusted && !state.recenter_failed;
  if (with_v && d.recenter_trusted) {
    const Samples v = pullback_samples(state.u, state.recenter, op, base_grid_);
    double dev = 0.0;
    for (double x : v) dev = std::max(dev, std::abs(x - 1.0));
    d.v_dev = dev;
  }
  return d;
}

RunResult FlowEngine::run(const Observer& observer) const {
  RunResult out;
  FlowState state = initial_state();
  update_recentering(state);
  RunSummary& sum = out.summary;
  sum.alpha_min = sum.alpha_max = state.q.alpha;
  sum.curv_margin_min = curvature_margin(state.q);
  auto emit = [&](const FlowState& s) {
    DiagnosticsRecord d = diagnose(s, true);
    sum.curv_margin_min = std::min(sum.curv_margin_min, d.curv_margin);
    if (observer) observer(d, s);
    out.records.push_back(std::move(d));
  };
  emit(state);

  FlowEvent event = FlowEvent::kNone;
  while (event == FlowEvent::kNone) {
    const double e0 = state.q.energy;
    const FlowEvent failure = step(state);
    if (failure != FlowEvent::kNone) {
      event = failure;
      out.message = "step failed at t = " + std::to_string(state.t);
      break;
    }
    sum.alpha_min = std::min(sum.alpha_min, state.q.alpha);
    sum.alpha_max = std::max(sum.alpha_max, state.q.alpha);
    sum.energy_max_increase = std::max(sum.energy_max_increase, (state.q.energy - e0) / std::abs(e0));
    sum.volume_max_drift =
        std::max(sum.volume_max_drift, std::abs(state.q.volume - config_.op.omega) / config_.op.omega);
    sum.curv_margin_min = std::min(sum.curv_margin_min, curvature_margin(state.q));

    if (state.step_count % config_.recenter_period == 0) {
      if (!update_recentering(state)) ++sum.recenter_failures;
      if (!state.recenter_failed && state.recenter.r > config_.r_max) event = FlowEvent::kBlowup;
    }
    if (event == FlowEvent::kNone) {
      if (state.q.F2 < config_.convergence_tolerance) {
        event = FlowEvent::kConverged;
      } else if (max_value(state.q.u) / min_value(state.q.u) > config_.ratio_max) {
        event = FlowEvent::kBlowup;
      } else if (state.t >= config_.t_end) {
        event = FlowEvent::kTimeReached;
      } else if (state.pinned_steps >= config_.stall_steps) {
        event = FlowEvent::kStalled;
      } else if (state.step_count >= config_.max_steps) {
        event = FlowEvent::kMaxSteps;
      }
    }
    if (event != FlowEvent::kNone && state.step_count % config_.recenter_period != 0) {
      if (!update_recentering(state)) ++sum.recenter_failures;
    }
    if (event != FlowEvent::kNone || state.step_count % config_.cadence == 0) emit(state);
  }
  if (event != FlowEvent::kNone && out.records.back().t != state.t) emit(state);
  sum.rejections = state.rejections;
  out.event = event;
  out.final_state = std::move(state);
  return out;
}

double stability_probe(const FlowConfig& config, double delta, double horizon) {
  if (!(delta >= 0.0 && delta <= 1e-3)) throw DomainError("perturbation size must lie in [0, 1e-3]");
  if (!(horizon > 0.0 && horizon <= 1.0)) throw DomainError("probe horizon must lie in (0, 1]");
  FlowConfig perturbed = config;
  perturbed.u0 = config.u0.resized(config.band_limit);
  perturbed.u0(1, 1) += delta;
  const FlowEngine e1(config), e2(perturbed);
  FlowState s1 = e1.initial_state(), s2 = e2.initial_state();
  const double dt0 = std::min({e1.stable_dt(s1.q), e2.stable_dt(s2.q), config.dt_max});
  const long steps = static_cast<long>(std::ceil(horizon / dt0));
  const double dt = horizon / steps;
  const double d0 = coefficient_distance(s1.u, s2.u);
  double worst = d0;
  try {
    for (long k = 0; k < steps; ++k) {
      e1.advance_fixed(s1, dt);
      e2.advance_fixed(s2, dt);
      worst = std::max(worst, coefficient_distance(s1.u, s2.u));
    }
  } catch (const Error& e) {
    throw Error(std::string("stability probe failed: ") + e.what());
  }
  if (d0 == 0.0) {
    if (worst != 0.0) throw Error("stability probe: identical inputs diverged");
    return 1.0;
  }
  return worst / d0;
}

}  // namespace qflow
