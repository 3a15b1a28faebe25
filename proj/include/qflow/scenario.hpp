#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qflow/flow_engine.hpp"
#include "qflow/morse_analysis.hpp"

namespace qflow {

// A field given by the scenario file. Types:
//   constant  : value
//   affine    : a + b x_axis (axis in 1..3)
//   harmonics : constant value plus a sum of "l m c" triples (orthonormal real harmonics)
//   bubble    : amplitude * u_{center, scale}
//   perturbed : base + random harmonics of degree 1..max_degree with sup bound amplitude
struct FieldSpec {
  std::string type;
  double value = 1.0;
  double a = 0.0, b = 0.0;
  int axis = 3;
  double constant = 0.0;
  std::vector<std::array<double, 3>> coefficients;
  Vec3 center = Vec3(0, 0, 1);
  double scale = 1.0;
  double amplitude = 1.0;
  double base = 1.0;
  int max_degree = 4;
  int line = 0;  // line of the type key
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string source_path;
  std::string source_text;
  FlowConfig flow;  // f and u0 are filled by build_flow_config
  FieldSpec f_spec, u0_spec;
  std::string out_dir;  // empty: derived from the name
  long snapshot_cadence = 0;  // 0 disables intermediate snapshots
  std::uint64_t seed = 1;
  bool morse = false;
};

// Key/value text with [section] headers and '#' comments; see the README for the keys.
// Throws ConfigError with the first offending line, key and reason.
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig parse_config(const std::string& path);

SpectralField build_field(const FieldSpec& spec, int band_limit, const OperatorParams& op, std::uint64_t seed);
// Materializes f and u0 at the configured band limit and seed.
FlowConfig build_flow_config(const ScenarioConfig& config);

struct RunOptions {
  std::string out_dir;  // overrides the config when non-empty
  bool quiet = false;
};

struct RunOutcome {
  int exit_code = 0;  // 0 converged or t_end, 2 blow-up, 3 numerical failure, 4 I/O failure
  FlowEvent event = FlowEvent::kNone;
  std::string out_dir;
  std::string message;
};

// Output directory: options, then config, then $QFLOW_OUT/<name>, then ./out/<name>.
std::string resolve_out_dir(const ScenarioConfig& config, const RunOptions& options);
int exit_code_for(FlowEvent event);
RunOutcome run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

MorseReport scenario_morse_report(const ScenarioConfig& config);
std::string format_report(const MorseReport& report);

}  // namespace qflow
