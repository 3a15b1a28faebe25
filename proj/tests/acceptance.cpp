// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qflow/errors.hpp"
#include "qflow/flow_engine.hpp"
#include "qflow/io.hpp"
#include "qflow/morse_analysis.hpp"
#include "qflow/scenario.hpp"
#include "test_helpers.hpp"

using namespace qflow;
using qflow::testing::random_field;
using qflow::testing::random_positive_field;
using qflow::testing::random_unit;
namespace fs = std::filesystem;

namespace {

const double kPi = 3.14159265358979323846;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Outcome::require(bool cond, const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  if (!detail.empty()) detail += "; ";
  detail += buf;
  if (!cond) {
    ok = false;
    detail += " [violated]";
  }
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + "exception: " + e.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && elapsed > budget_s) {
    o.ok = false;
    char buf[96];
    std::snprintf(buf, sizeof buf, "; runtime %.1f s exceeds %.0f s", elapsed, budget_s);
    o.detail += buf;
  }
  if (!o.ok) ++failures;
  std::printf("criterion %2d %s  %s (%.2f s): %s\n", id, o.ok ? "PASS" : "FAIL", name, elapsed, o.detail.c_str());
  std::fflush(stdout);
}

std::string scenario_path(const char* name) { return std::string(QFLOW_SOURCE_DIR) + "/scenarios/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double sup_relative_residual(const SpectralField& u, const OperatorParams& p, const Grid& g) {
  const Samples us = synthesize(u, g), pu = synthesize(apply_P(u, p), g);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double rhs = p.R_sigma * std::pow(us[i], p.curvature_exponent());
    num = std::max(num, std::abs(pu[i] - rhs));
    den = std::max(den, std::abs(rhs));
  }
  return num / den;
}

// Reference: exhaustive search for nonnegative k with gamma_0 = 1 + k_0, gamma_i = k_{i-1} + k_i, k_n = 0.
bool brute_force_solvable(const std::vector<int>& gamma) {
  const int n = static_cast<int>(gamma.size()) - 1;
  const int top = *std::max_element(gamma.begin(), gamma.end()) + 1;
  std::vector<int> k(n + 1, 0);
  while (true) {
    bool ok = k[n] == 0 && gamma[0] == 1 + k[0];
    for (int i = 1; ok && i <= n; ++i) ok = gamma[i] == k[i - 1] + k[i];
    if (ok) return true;
    int i = 0;
    while (i <= n && ++k[i] > top) k[i++] = 0;
    if (i > n) return false;
  }
}

struct YamabeRun {
  FlowConfig config;
  RunResult result;
  FlowState mid;
  bool have_mid = false;
};

YamabeRun& yamabe_run() {
  static YamabeRun run = [] {
    YamabeRun y;
    y.config = build_flow_config(parse_config(scenario_path("yamabe.cfg")));
    y.result = FlowEngine(y.config).run([&](const DiagnosticsRecord&, const FlowState& s) {
      if (!y.have_mid && s.step_count >= 200) {
        y.mid = s;
        y.have_mid = true;
      }
    });
    return y;
  }();
  return run;
}

}  // namespace

int main() {
  criterion(1, "spectrum ratios", 1.0, [](Outcome& o) {
    double worst1 = 0.0, worst2 = 0.0;
    int pairs = 0;
    for (int n = 2; n <= 5; ++n)
      for (double s : {0.1, 0.3, 0.5, 0.75, 0.9}) {
        const auto p = OperatorParams::make(n, s);
        const double l0 = eigenvalue(0, p), l1 = eigenvalue(1, p), l2 = eigenvalue(2, p);
        worst1 = std::max(worst1, std::abs(l1 / l0 / ((n + 2 * s) / (n - 2 * s)) - 1.0));
        worst2 = std::max(worst2, std::abs(l2 / l1 / ((2 + n + 2 * s) / (2 + n - 2 * s)) - 1.0));
        ++pairs;
      }
    o.require(pairs == 20, "%d (n, sigma) pairs", pairs);
    o.require(worst1 < 1e-12, "Lambda1/Lambda0 rel err %.2e", worst1);
    o.require(worst2 < 1e-12, "Lambda2/Lambda1 rel err %.2e", worst2);
  });

  criterion(2, "transform fidelity at L = 32", 5.0, [](Outcome& o) {
    std::mt19937_64 rng(2);
    const Grid g = build_grid(32);
    const SpectralField c = random_field(rng, 32);
    const Samples s = synthesize(c, g);
    const SpectralField back = analyze(s, g);
    double err = 0.0, norm = 0.0, parseval = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      err = std::max(err, std::abs(back[i] - c[i]));
      norm = std::max(norm, std::abs(c[i]));
      parseval += c[i] * c[i];
    }
    Samples sq(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) sq[i] = s[i] * s[i];
    const double perr = std::abs(integrate(sq, g) / parseval - 1.0);
    const double area = std::abs(integrate(Samples(g.size(), 1.0), g) - 4.0 * kPi);
    o.require(err / norm < 1e-10, "roundtrip %.2e", err / norm);
    o.require(perr < 1e-11, "Parseval %.2e", perr);
    o.require(area < 1e-13, "area %.2e", area);
  });

  criterion(3, "bubble stationarity at L = 48", 30.0, [](Outcome& o) {
    const Grid g = build_oversampled_grid(48);
    double worst = 0.0;
    for (double s : {0.6, 0.75, 0.9}) {
      const auto p = OperatorParams::make(2, s);
      for (double lambda : {1.5, 2.0, 3.0})
        worst = std::max(worst, sup_relative_residual(
                                    bubble_field({Vec3(0.3, -0.4, 0.5).normalized(), lambda, 1.0}, p, g, 48), p, g));
    }
    o.require(worst < 1e-6, "max relative sup residual %.2e over 9 bubbles", worst);
  });

  criterion(4, "conformal invariance of the energy", 30.0, [](Outcome& o) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> radius(1.0, 4.0);
    const auto op = OperatorParams::make(2, 0.75);
    const int band = 48;
    const Grid g = build_oversampled_grid(band);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const SpectralField u = random_positive_field(rng, band, 0.3);
      const SpectralField f = random_positive_field(rng, band, 0.5, 3);
      const ConformalParams phi = ConformalParams::make(random_unit(rng), radius(rng));
      const SpectralField v = pullback_factor(u, phi, op, g, band);
      const double e0 = evaluate_quantities(u, synthesize(f, g), op, g).energy;
      const double e1 = evaluate_quantities(v, compose_samples(f, phi, g), op, g).energy;
      worst = std::max(worst, std::abs(e1 - e0) / e0);
    }
    o.require(worst < 1e-6, "max relative energy change %.2e over 20 draws", worst);
  });

  criterion(5, "Sobolev inequality", 60.0, [](Outcome& o) {
    std::mt19937_64 rng(5);
    const auto p = OperatorParams::make(2, 0.75);
    const Grid g = build_oversampled_grid(12);
    double lowest = 1e300;
    for (int k = 0; k < 100; ++k)
      lowest = std::min(lowest, sobolev_deficit(random_positive_field(rng, 12, 0.5, 6), p, g));
    const Grid g48 = build_oversampled_grid(48);
    double bubble = 0.0;
    for (double lambda : {1.0, 1.5, 2.0, 3.0})
      bubble = std::max(bubble, std::abs(sobolev_deficit(bubble_field({random_unit(rng), lambda, 1.0}, p, g48, 48), p, g48)));
    o.require(lowest >= -1e-9, "min deficit %.2e over 100 fields", lowest);
    o.require(bubble < 1e-6, "max |deficit| %.2e on bubbles", bubble);
  });

  criterion(6, "Stroock-Varopoulos inequality", 60.0, [](Outcome& o) {
    std::mt19937_64 rng(6);
    const auto p = OperatorParams::make(2, 0.75);
    const int band = 12;
    const Grid g = build_oversampled_grid(band);
    double lowest = 1e300;
    for (int k = 0; k < 50; ++k) {
      const SpectralField u = random_positive_field(rng, band, 0.3, 3);
      const SpectralField v = random_field(rng, band, 1.0, 0.8, 5);
      for (double q : {2.0, 3.0, 4.0}) lowest = std::min(lowest, stroock_varopoulos_gap(u, v, q, p, g));
    }
    o.require(lowest >= -1e-6, "min gap %.2e over 50 draws x 3 exponents", lowest);
  });

  criterion(7, "Yamabe flow conservation and monotonicity", 300.0, [](Outcome& o) {
    YamabeRun& y = yamabe_run();
    const RunResult& r = y.result;
    const FlowEngine e(y.config);
    o.require(r.event == FlowEvent::kConverged, "event %s after %ld steps", to_string(r.event).c_str(),
              r.final_state.step_count);
    o.require(r.summary.volume_max_drift < 1e-9, "volume drift %.2e", r.summary.volume_max_drift);
    o.require(r.summary.energy_max_increase <= 0.0, "max energy increase %.2e", r.summary.energy_max_increase);
    const double n = y.config.op.n, s = y.config.op.sigma;
    double worst = 0.0;
    std::vector<FlowState> probes = {e.initial_state()};
    if (y.have_mid) probes.push_back(y.mid);
    for (const FlowState& s0 : probes) {
      const double predicted = (n - 2 * s) / 2.0 * s0.q.F2 / std::pow(s0.q.f_mass, (n - 2 * s) / n);
      auto slope = [&](double dt) {
        FlowState st = s0;
        e.advance_fixed(st, dt);
        return -(st.q.energy - s0.q.energy) / dt;
      };
      const double extrapolated = 2.0 * slope(0.01) - slope(0.02);
      worst = std::max(worst, std::abs(extrapolated / predicted - 1.0));
    }
    o.require(y.have_mid && worst < 1e-2, "Richardson dE/dt rel err %.2e at t = 0 and step 200", worst);
    const DiagnosticsRecord& last = r.records.back();
    o.require(last.F2 < 1e-10, "terminal F2 %.2e", last.F2);
    o.require(last.v_dev && *last.v_dev < 1e-4, "terminal |v - 1|_inf %.2e", last.v_dev ? *last.v_dev : NAN);
  });

  criterion(8, "Kazdan-Warner residual", 10.0, [](Outcome& o) {
    YamabeRun& y = yamabe_run();
    const Grid g = build_oversampled_grid(y.config.band_limit);
    const double terminal = kazdan_warner_residual(y.result.final_state.u, g, y.config.op).norm();
    const auto op = OperatorParams::make(2, 0.75);
    const Grid g48 = build_oversampled_grid(48);
    double bubble = 0.0;
    for (double lambda : {1.5, 2.0, 3.0})
      bubble = std::max(bubble, kazdan_warner_residual(bubble_field({Vec3(0.3, -0.4, 0.5).normalized(), lambda, 1.0},
                                                                    op, g48, 48),
                                                       g48, op)
                                    .norm());
    o.require(terminal < 1e-6, "terminal Yamabe state %.2e", terminal);
    o.require(bubble < 1e-6, "bubbles %.2e", bubble);
  });

  // Criteria 9 and 10 share the obstruction run.
  RunResult obstruction;
  FlowConfig ocfg;
  std::string obstruction_error;
  double alpha1 = 0.0, alpha2 = 0.0, obstruction_seconds = 0.0;
  criterion(9, "obstruction blow-up at the north pole", 600.0, [&](Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig sc = parse_config(scenario_path("obstruction.cfg"));
    sc.flow.cadence = 10;
    ocfg = build_flow_config(sc);
    const FlowEngine e(ocfg);
    alpha1 = e.bounds().alpha1;
    alpha2 = e.bounds().alpha2;
    obstruction = e.run();
    obstruction_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const DiagnosticsRecord& last = obstruction.records.back();
    o.require(obstruction.event == FlowEvent::kBlowup && exit_code_for(obstruction.event) == 2, "event %s at t = %.4g, r = %.3g",
              to_string(obstruction.event).c_str(), last.t, last.r);
    const Vec3 north(0, 0, 1);
    const auto dir = last.theta ? shadow_direction(*last.theta) : std::nullopt;
    const double dist = dir ? std::acos(std::clamp(dir->dot(north), -1.0, 1.0)) : NAN;
    o.require(dir && dist < 0.1, "theta distance to north pole %.3e", dist);
    const double af = dir ? last.alpha * evaluate(ocfg.f, *dir) / ocfg.op.R_sigma : NAN;
    o.require(std::abs(af - 1.0) < 0.05, "alpha f(theta) / R_sigma = %.4f", af);
    const auto& sm = obstruction.summary;
    o.require(sm.alpha_min >= alpha1 * (1 - 1e-12) && sm.alpha_max <= alpha2 * (1 + 1e-12),
              "alpha in [%.6f, %.6f] within [%.6f, %.6f]", sm.alpha_min, sm.alpha_max, alpha1, alpha2);
    const FlowQuantities q = e.evaluate(obstruction.final_state.u);
    const double mass = mass_in_cap(q.density, north, 0.5, e.grid());
    o.require(mass > 0.5, "mass in north cap %.4f", mass);
  });

  criterion(10, "F2 / |B|^2 coupling on eps in [0.01, 0.1]", 0.0, [&](Outcome& o) {
    const double omega = 4.0 * kPi, n = ocfg.op.n;
    double lo = 1e300, hi = -1e300, rmin = 1e300, rmax = 0.0;
    int count = 0;
    for (const DiagnosticsRecord& d : obstruction.records) {
      if (d.r < 10.0 || d.r > 100.0) continue;
      const double ratio = (d.F2 / omega) / ((n + 1) * d.b.squaredNorm());
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      rmin = std::min(rmin, d.r);
      rmax = std::max(rmax, d.r);
      ++count;
    }
    o.require(count > 0, "%d records with r in [%.3g, %.3g] (eps in [%.4f, %.4f])", count, rmin, rmax, 1.0 / rmax,
              1.0 / rmin);
    o.require(count > 0 && lo >= 0.5 && hi <= 2.0, "ratio in [%.4f, %.4f]", lo, hi);
    o.require(obstruction_seconds > 0.0, "shares the %.0f s run of criterion 9", obstruction_seconds);
  });

  criterion(11, "Morse verdicts", 30.0, [](Outcome& o) {
    const auto op = OperatorParams::make(2, 0.75);
    const SpectralField f = SpectralField::constant(16, 2.0) + SpectralField::coordinate(16, 2);
    const MorseReport r = applicability_report(f, op, build_grid(16));
    o.require(r.gamma == std::vector<int>{1, 0, 0}, "gamma (%d, %d, %d)", r.gamma[0], r.gamma[1], r.gamma[2]);
    o.require(r.system.solvable && !r.system.condition_holds && r.system.k == std::vector<long>{0, 0, 0},
              "condition (iii) %s with k = (0, 0, 0)", r.system.condition_holds ? "HOLDS" : "FAILS");
    const MorseSystem injected = condition_iii({2, 0, 0});
    o.require(injected.condition_holds && injected.witness == "k_1 = -1 < 0", "injected (2, 0, 0): %s, witness '%s'",
              injected.condition_holds ? "HOLDS" : "FAILS", injected.witness.c_str());
    o.require(r.pinching.holds && r.pinching.threshold == 8.0 && std::abs(r.pinching.ratio - 3.0) < 1e-12,
              "condition (i) ratio %.12g threshold %.12g", r.pinching.ratio, r.pinching.threshold);
    o.require(r.euler_characteristic == 2, "Euler characteristic %d", r.euler_characteristic);
    int cases = 0, disagree = 0;
    for (int n = 1; n <= 4; ++n) {
      std::vector<int> g(n + 1, 0);
      while (true) {
        ++cases;
        if (condition_iii(g).solvable != brute_force_solvable(g)) ++disagree;
        int i = 0;
        while (i <= n && ++g[i] > 3) g[i++] = 0;
        if (i > n) break;
      }
    }
    o.require(disagree == 0, "brute force agrees on %d gamma vectors (%d disagreements)", cases, disagree);
  });

  criterion(12, "stability amplification over T = 0.5", 300.0, [](Outcome& o) {
    const FlowConfig c = build_flow_config(parse_config(scenario_path("yamabe.cfg")));
    const double a1 = stability_probe(c, 1e-4, 0.5), a2 = stability_probe(c, 5e-5, 0.5);
    const double rel = std::abs(a1 / a2 - 1.0);
    o.require(rel < 0.1, "amplification %.6f vs %.6f (rel diff %.2e)", a1, a2, rel);
    o.require(a1 < 1e3 && a2 < 1e3, "below 1e3");
  });

  criterion(13, "Poisson extension", 30.0, [](Outcome& o) {
    const auto half = OperatorParams::make(2, 0.5);
    const double center = poisson_extension(SpectralField::constant(8, 1.0), Vec3::Zero(), half);
    o.require(std::abs(center - 1.0) < 1e-8, "Q_1/2[1](0) - 1 = %.2e", center - 1.0);
    SpectralField u = SpectralField::constant(6, 1.0);
    u(1, 0) = 0.3;
    u(2, 1) = -0.2;
    u(3, -2) = 0.1;
    const Vec3 x = Vec3(0.3, -0.2, 0.9).normalized();
    const double ux = evaluate(u, x);
    for (double s : {0.5, 0.75}) {
      const auto p = OperatorParams::make(2, s);
      std::vector<double> errs;
      for (double tau : {0.9, 0.99, 0.999}) errs.push_back(std::abs(poisson_extension(u, tau * x, p) - ux));
      o.require(errs[0] > errs[1] && errs[1] > errs[2], "sigma %.2f: errors %.2e, %.2e, %.2e", s, errs[0], errs[1],
                errs[2]);
    }
  });

  criterion(14, "singular-integral cross-check", 60.0, [](Outcome& o) {
    const Grid g = build_grid(32);
    const auto p = OperatorParams::make(2, 0.3);
    const SpectralField x3 = SpectralField::coordinate(32, 2);
    const SpectralField ext = apply_P_singular_extrapolated(x3, g, p, 0.8);
    const SpectralField ref = eigenvalue(1, p) * x3;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      num += (ext[i] - ref[i]) * (ext[i] - ref[i]);
      den += ref[i] * ref[i];
    }
    o.require(std::sqrt(num / den) < 1e-3, "relative error %.2e", std::sqrt(num / den));
  });

  criterion(15, "reproducibility", 0.0, [](Outcome& o) {
    const fs::path root = fs::temp_directory_path() / "qflow_acceptance";
    fs::remove_all(root);
    const ScenarioConfig yam = parse_config(scenario_path("yamabe.cfg"));
    const ScenarioConfig pert = parse_config_text(R"(name = perturbed
[operator]
sigma = 0.6
[grid]
band_limit = 16
[f]
type = harmonics
constant = 1.5
coefficients = 1 0 0.2; 2 1 0.1
[u0]
type = perturbed
base = 1
amplitude = 0.3
max_degree = 5
[flow]
t_end = 5
[output]
cadence = 5
snapshot_cadence = 50
seed = 12345
)");
    for (const ScenarioConfig* sc : {&yam, &pert}) {
      const RunOutcome a = run_scenario(*sc, {(root / (sc->name + "_a")).string(), true});
      const RunOutcome b = run_scenario(*sc, {(root / (sc->name + "_b")).string(), true});
      bool same = a.exit_code == b.exit_code;
      int files = 0;
      for (const auto& entry : fs::recursive_directory_iterator(root / (sc->name + "_a"))) {
        if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
        const fs::path rel = fs::relative(entry.path(), root / (sc->name + "_a"));
        same = same && slurp(entry.path()) == slurp(root / (sc->name + "_b") / rel);
        ++files;
      }
      o.require(same && files >= 2, "%s: exit %d, %d CSV/snapshot files byte-identical", sc->name.c_str(),
                a.exit_code, files);
    }
    fs::remove_all(root);
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
