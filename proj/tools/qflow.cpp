#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qflow/errors.hpp"
#include "qflow/flow_engine.hpp"
#include "qflow/scenario.hpp"

using namespace qflow;

namespace {

struct Check {
  int failures = 0;
  void line(const char* name, bool ok, double value, double bound) {
    std::printf("%-28s %s  (%.3e, bound %.1e)\n", name, ok ? "PASS" : "FAIL", value, bound);
    if (!ok) ++failures;
  }
};

// Invariant suite on the initial state of a scenario.
int run_check(const ScenarioConfig& cfg) {
  const FlowConfig flow = build_flow_config(cfg);
  const FlowEngine engine(flow);
  const Grid& g = engine.grid();
  const FlowState s = engine.initial_state();
  const OperatorParams& op = flow.op;
  Check c;

  const Samples us = synthesize(s.u, g);
  const SpectralField back = analyze(us, g, flow.band_limit);
  double roundtrip = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    roundtrip = std::max(roundtrip, std::abs(back[i] - s.u[i]));
    norm2 += s.u[i] * s.u[i];
  }
  Samples sq = us;
  for (auto& v : sq) v *= v;
  c.line("transform roundtrip", roundtrip < 1e-10, roundtrip, 1e-10);
  const double parseval = std::abs(integrate(sq, g) - norm2) / norm2;
  c.line("Parseval", parseval < 1e-11, parseval, 1e-11);

  const double umin = min_value(s.q.u);
  c.line("u0 positive", umin > 0.0, umin, 0.0);
  const double vol = std::abs(s.q.volume / sphere_area(op.n) - 1.0);
  c.line("volume normalized", vol < 1e-12, vol, 1e-12);
  const auto& b = engine.bounds();
  const double a = s.q.alpha;
  c.line("alpha >= alpha1", a >= b.alpha1 * (1 - 1e-12), a - b.alpha1, 0.0);
  c.line("alpha <= alpha2", a <= b.alpha2 * (1 + 1e-12), b.alpha2 - a, 0.0);
  const double margin = engine.curvature_margin(s.q);
  c.line("curvature lower bound", margin >= -1e-9, margin, -1e-9);
  const double deficit = sobolev_deficit(s.u, op, g);
  c.line("Sobolev deficit >= 0", deficit >= -1e-9, deficit, -1e-9);

  const ConformalParams phi = ConformalParams::make(Vec3(0.48, -0.6, 0.64), 2.0);
  const SpectralField v = pullback_factor(s.u, phi, op, g, flow.band_limit);
  const double e1 = evaluate_quantities(v, compose_samples(flow.f, phi, g), op, g).energy;
  const double inv = std::abs(e1 / s.q.energy - 1.0);
  c.line("Moebius energy invariance", inv < 1e-6, inv, 1e-6);
  const double tail = aliasing_tail(us, g, flow.band_limit);
  c.line("u0 band-limited", tail < 1e-12, tail, 1e-12);

  std::printf("%d check(s) failed\n", c.failures);
  return c.failures == 0 ? 0 : 3;
}

double time_op(const std::function<void()>& fn) {
  using clock = std::chrono::steady_clock;
  fn();
  int reps = 0;
  const auto t0 = clock::now();
  double elapsed = 0.0;
  do {
    fn();
    ++reps;
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
  } while (elapsed < 0.5);
  return elapsed / reps;
}

int run_bench(const ScenarioConfig& cfg) {
  const FlowConfig flow = build_flow_config(cfg);
  const FlowEngine engine(flow);
  const Grid& g = engine.grid();
  const FlowState s = engine.initial_state();
  Samples us = synthesize(s.u, g);
  SpectralField sink;
  std::printf("band limit %d, grid %d x %d\n", flow.band_limit, g.nlat(), g.nlon());
  auto report = [](const char* name, double sec) { std::printf("%-22s %10.3f ms\n", name, 1e3 * sec); };
  report("synthesize", time_op([&] { us = synthesize(s.u, g); }));
  report("analyze", time_op([&] { sink = analyze(us, g, flow.band_limit); }));
  report("apply_P", time_op([&] { sink = apply_P(s.u, flow.op); }));
  report("evaluate", time_op([&] { (void)engine.evaluate(s.u); }));
  report("rk4 step", time_op([&] { sink = engine.rk4_advance(s.u, s.q, 1e-3); }));
  report("diagnose", time_op([&] { (void)engine.diagnose(s, true); }));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional curvature flow on S^2"};
  app.require_subcommand(1);
  std::string path, out;
  std::uint64_t seed = 0;
  int cadence = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a scenario and write timeseries.csv, snapshots and manifest.json");
  run->add_option("config", path, "Scenario file")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--seed", seed, "Random seed (overrides the config)");
  run->add_option("--cadence", cadence, "Record every k steps")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Suppress progress output");

  auto* morse = app.add_subcommand("morse", "Print the applicability report for f");
  morse->add_option("config", path, "Scenario file")->required();
  auto* check = app.add_subcommand("check", "Run the invariant suite on the initial state");
  check->add_option("config", path, "Scenario file")->required();
  auto* bench = app.add_subcommand("bench", "Time the transforms and the operator");
  bench->add_option("config", path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ScenarioConfig cfg = parse_config(path);
    if (run->count("--seed")) cfg.seed = seed;
    if (cadence > 0) cfg.flow.cadence = cadence;
    if (*run) return run_scenario(cfg, RunOptions{out, quiet}).exit_code;
    if (*morse) {
      std::cout << format_report(scenario_morse_report(cfg));
      return 0;
    }
    if (*check) return run_check(cfg);
    return run_bench(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "qflow: " << path << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "qflow: " << e.what() << "\n";
    return 3;
  }
}
