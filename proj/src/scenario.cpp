#include "qflow/scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/version.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "qflow/errors.hpp"
#include "qflow/io.hpp"

namespace qflow {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"name"}},
      {"operator", {"n", "sigma"}},
      {"grid", {"band_limit"}},
      {"f", {"type", "value", "a", "b", "axis", "constant", "coefficients"}},
      {"u0", {"type", "value", "constant", "coefficients", "center", "scale", "amplitude", "base", "max_degree"}},
      {"flow",
       {"t_end", "dt_init", "dt_min", "dt_max", "c_stab", "energy_tolerance", "convergence_tolerance", "r_max",
        "ratio_max", "r_trust", "recenter_period", "stall_steps", "max_steps"}},
      {"output", {"dir", "cadence", "snapshot_cadence", "seed"}},
      {"analysis", {"morse"}}};
  return s;
}

const std::map<std::string, std::set<std::string>>& field_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"constant", {"value"}},
      {"affine", {"a", "b", "axis"}},
      {"harmonics", {"constant", "coefficients"}},
      {"bubble", {"center", "scale", "amplitude"}},
      {"perturbed", {"base", "amplitude", "max_degree"}}};
  return k;
}

class Table {
 public:
  std::map<std::string, Entry> entries;
  std::map<std::string, int> section_lines;

  const Entry* find(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }

  int section_line(const std::string& key) const {
    const auto dot = key.find('.');
    if (dot == std::string::npos) return 0;
    auto it = section_lines.find(key.substr(0, dot));
    return it == section_lines.end() ? 0 : it->second;
  }

  const Entry& require(const std::string& key) const {
    if (const Entry* e = find(key)) return *e;
    throw ConfigError(section_line(key), key, "missing required key");
  }

  double real(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    return e ? to_real(key, *e) : fallback;
  }

  long integer(const std::string& key, long fallback) const {
    const Entry* e = find(key);
    return e ? to_integer(key, *e) : fallback;
  }

  static double to_real(const std::string& key, const Entry& e) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (e.value.empty() || errno != 0 || end != e.value.c_str() + e.value.size() || !std::isfinite(v))
      throw ConfigError(e.line, key, "expected a real number, got '" + e.value + "'");
    return v;
  }

  static long to_integer(const std::string& key, const Entry& e) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(e.value.c_str(), &end, 10);
    if (e.value.empty() || errno != 0 || end != e.value.c_str() + e.value.size())
      throw ConfigError(e.line, key, "expected an integer, got '" + e.value + "'");
    return v;
  }
};

Table tokenize(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(lineno, "", "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty() || !schema().count(section)) throw ConfigError(lineno, section, "unknown section");
      if (t.section_lines.count(section)) throw ConfigError(lineno, section, "duplicate section");
      t.section_lines[section] = lineno;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "", "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    if (key.empty()) throw ConfigError(lineno, "", "empty key");
    if (!schema().at(section).count(key)) throw ConfigError(lineno, full, "unknown key");
    if (t.entries.count(full)) throw ConfigError(lineno, full, "duplicate key");
    t.entries[full] = {value, lineno};
  }
  return t;
}

Vec3 parse_vector(const std::string& key, const Entry& e) {
  std::istringstream in(e.value);
  std::string a, b, c, extra;
  if (!(in >> a >> b >> c) || (in >> extra)) throw ConfigError(e.line, key, "expected three real numbers");
  return Vec3(Table::to_real(key, {a, e.line}), Table::to_real(key, {b, e.line}), Table::to_real(key, {c, e.line}));
}

std::vector<std::array<double, 3>> parse_coefficients(const std::string& key, const Entry& e, int band) {
  std::vector<std::array<double, 3>> out;
  std::istringstream in(e.value);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (trim(item).empty()) continue;
    std::istringstream is(item);
    std::string l, m, c, extra;
    if (!(is >> l >> m >> c) || (is >> extra))
      throw ConfigError(e.line, key, "expected 'l m coefficient' triples separated by ';'");
    const long li = Table::to_integer(key, {l, e.line}), mi = Table::to_integer(key, {m, e.line});
    if (li < 0 || std::labs(mi) > li) throw ConfigError(e.line, key, "need 0 <= l and |m| <= l");
    if (li > band) throw ConfigError(e.line, key, "degree exceeds band_limit");
    out.push_back({static_cast<double>(li), static_cast<double>(mi), Table::to_real(key, {c, e.line})});
  }
  return out;
}

FieldSpec parse_field(const Table& t, const std::string& sec, int band) {
  FieldSpec s;
  const Entry& type = t.require(sec + ".type");
  s.type = type.value;
  s.line = type.line;
  const std::set<std::string> allowed_types =
      sec == "f" ? std::set<std::string>{"constant", "affine", "harmonics"}
                 : std::set<std::string>{"constant", "harmonics", "bubble", "perturbed"};
  if (!allowed_types.count(s.type)) throw ConfigError(type.line, sec + ".type", "unknown field type '" + s.type + "'");
  const auto& keys = field_keys().at(s.type);
  for (const auto& [k, e] : t.entries) {
    if (k.rfind(sec + ".", 0) != 0) continue;
    const std::string key = k.substr(sec.size() + 1);
    if (key != "type" && !keys.count(key)) throw ConfigError(e.line, k, "key not used by type '" + s.type + "'");
  }
  auto key = [&](const char* k) { return sec + "." + k; };
  if (s.type == "constant") {
    s.value = t.real(key("value"), 1.0);
    if (!(s.value > 0.0)) throw ConfigError(s.line, key("value"), sec + " must be positive");
  } else if (s.type == "affine") {
    s.a = Table::to_real(key("a"), t.require(key("a")));
    s.b = Table::to_real(key("b"), t.require(key("b")));
    s.axis = static_cast<int>(t.integer(key("axis"), 3));
    if (s.axis < 1 || s.axis > 3) throw ConfigError(t.require(key("axis")).line, key("axis"), "axis must be 1, 2 or 3");
    if (!(s.a - std::abs(s.b) > 0.0))
      throw ConfigError(t.require(key("b")).line, key("b"), sec + " must be positive: a - |b| <= 0");
  } else if (s.type == "harmonics") {
    s.constant = t.real(key("constant"), 0.0);
    if (const Entry* e = t.find(key("coefficients"))) s.coefficients = parse_coefficients(key("coefficients"), *e, band);
  } else if (s.type == "bubble") {
    if (const Entry* e = t.find(key("center"))) {
      s.center = parse_vector(key("center"), *e);
      if (!(s.center.norm() > 0.0)) throw ConfigError(e->line, key("center"), "center must be nonzero");
      s.center.normalize();
    }
    s.scale = t.real(key("scale"), 1.0);
    s.amplitude = t.real(key("amplitude"), 1.0);
    if (!(s.scale > 0.0)) throw ConfigError(s.line, key("scale"), "scale must be positive");
    if (!(s.amplitude > 0.0)) throw ConfigError(s.line, key("amplitude"), "amplitude must be positive");
  } else {
    s.base = t.real(key("base"), 1.0);
    s.amplitude = t.real(key("amplitude"), 0.1);
    s.max_degree = static_cast<int>(t.integer(key("max_degree"), 4));
    if (!(s.base > 0.0 && s.amplitude >= 0.0 && s.amplitude < s.base))
      throw ConfigError(s.line, key("amplitude"), "need 0 <= amplitude < base");
    if (s.max_degree < 1 || s.max_degree > band)
      throw ConfigError(s.line, key("max_degree"), "max_degree must lie in [1, band_limit]");
  }
  return s;
}

void check_positive(const SpectralField& field, const Grid& grid, const FieldSpec& spec, const std::string& sec) {
  const double m = min_value(synthesize(field, grid));
  if (!(m > 0.0)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " must be positive (grid minimum %.6g)", m);
    throw ConfigError(spec.line, sec + ".type", sec + buf);
  }
}

nlohmann::json json_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }

nlohmann::json flow_json(const FlowConfig& c) {
  return {{"n", c.op.n},
          {"sigma", c.op.sigma},
          {"band_limit", c.band_limit},
          {"t_end", c.t_end},
          {"dt_init", c.dt_init},
          {"dt_min", c.dt_min},
          {"dt_max", c.dt_max},
          {"c_stab", c.c_stab},
          {"energy_tolerance", c.energy_tolerance},
          {"convergence_tolerance", c.convergence_tolerance},
          {"r_max", c.r_max},
          {"ratio_max", c.ratio_max},
          {"r_trust", c.r_trust},
          {"recenter_period", c.recenter_period},
          {"stall_steps", c.stall_steps},
          {"max_steps", c.max_steps},
          {"cadence", c.cadence}};
}

nlohmann::json report_json(const MorseReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const CriticalPoint& p : r.points)
    pts.push_back({{"location", json_vec(p.location)},
                   {"value", p.value},
                   {"index", p.index},
                   {"laplacian", p.laplacian},
                   {"residual", p.residual}});
  nlohmann::json j = {{"critical_points", pts},
                      {"gamma", r.gamma},
                      {"k", r.system.k},
                      {"morse_system_solvable", r.system.solvable},
                      {"witness", r.system.witness},
                      {"condition_i", {{"holds", r.pinching.holds}, {"ratio", r.pinching.ratio}, {"threshold", r.pinching.threshold}}},
                      {"condition_ii",
                       {{"holds", r.nondegeneracy.holds},
                        {"min_abs_laplacian", r.nondegeneracy.min_abs_laplacian},
                        {"min_landscape", r.nondegeneracy.min_landscape}}},
                      {"condition_iii", r.system.condition_holds},
                      {"euler_characteristic", r.euler_characteristic},
                      {"warnings", r.warnings},
                      {"applicable", r.applicable}};
  j["epsilon0"] = r.epsilon0 ? nlohmann::json(*r.epsilon0) : nlohmann::json(nullptr);
  j["beta"] = r.beta ? nlohmann::json(*r.beta) : nlohmann::json(nullptr);
  j["u0_energy"] = r.u0_energy ? nlohmann::json(*r.u0_energy) : nlohmann::json(nullptr);
  j["u0_admissible"] = r.u0_admissible ? nlohmann::json(*r.u0_admissible) : nlohmann::json(nullptr);
  return j;
}

std::string vector_text(const std::vector<long>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + ")";
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
  const Table t = tokenize(text);
  ScenarioConfig c;
  c.source_path = origin;
  c.source_text = text;
  if (const Entry* e = t.find("name")) {
    if (e->value.empty() || e->value.find_first_of("/\\ ") != std::string::npos)
      throw ConfigError(e->line, "name", "name must be a nonempty word without slashes or spaces");
    c.name = e->value;
  }

  FlowConfig& f = c.flow;
  f.op.n = static_cast<int>(t.integer("operator.n", 2));
  if (f.op.n != 2) throw ConfigError(t.require("operator.n").line, "operator.n", "only n = 2 is supported");
  const Entry& sig = t.require("operator.sigma");
  const double sigma = Table::to_real("operator.sigma", sig);
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError(sig.line, "operator.sigma", "sigma must lie in (0,1)");
  f.op = OperatorParams::make(2, sigma);

  const Entry& band = t.require("grid.band_limit");
  f.band_limit = static_cast<int>(Table::to_integer("grid.band_limit", band));
  if (f.band_limit < 4 || f.band_limit > 128)
    throw ConfigError(band.line, "grid.band_limit", "band_limit must lie in [4, 128]");

  c.f_spec = parse_field(t, "f", f.band_limit);
  c.u0_spec = parse_field(t, "u0", f.band_limit);

  struct RealKey { const char* key; double* slot; bool positive; };
  const RealKey reals[] = {{"flow.t_end", &f.t_end, true},
                           {"flow.dt_init", &f.dt_init, true},
                           {"flow.dt_min", &f.dt_min, true},
                           {"flow.dt_max", &f.dt_max, true},
                           {"flow.c_stab", &f.c_stab, true},
                           {"flow.energy_tolerance", &f.energy_tolerance, false},
                           {"flow.convergence_tolerance", &f.convergence_tolerance, true},
                           {"flow.r_max", &f.r_max, true},
                           {"flow.ratio_max", &f.ratio_max, true},
                           {"flow.r_trust", &f.r_trust, true}};
  for (const auto& k : reals) {
    *k.slot = t.real(k.key, *k.slot);
    if (k.positive ? !(*k.slot > 0.0) : !(*k.slot >= 0.0))
      throw ConfigError(t.find(k.key)->line, k.key, k.positive ? "must be positive" : "must be nonnegative");
  }
  struct IntKey { const char* key; int* slot; };
  const IntKey ints[] = {{"flow.recenter_period", &f.recenter_period},
                         {"flow.stall_steps", &f.stall_steps},
                         {"output.cadence", &f.cadence}};
  for (const auto& k : ints) {
    *k.slot = static_cast<int>(t.integer(k.key, *k.slot));
    if (*k.slot < 1) throw ConfigError(t.find(k.key)->line, k.key, "must be a positive integer");
  }
  if (!(f.dt_min <= f.dt_init && f.dt_init <= f.dt_max)) {
    const Entry* e = t.find("flow.dt_min");
    if (!e) e = t.find("flow.dt_init");
    if (!e) e = t.find("flow.dt_max");
    throw ConfigError(e ? e->line : 0, "flow.dt_min", "need dt_min <= dt_init <= dt_max");
  }
  if (!(f.r_max > 1.0)) throw ConfigError(t.find("flow.r_max")->line, "flow.r_max", "r_max must exceed 1");
  if (!(f.ratio_max > 1.0))
    throw ConfigError(t.find("flow.ratio_max")->line, "flow.ratio_max", "ratio_max must exceed 1");
  if (!(f.r_trust >= 1.0)) throw ConfigError(t.find("flow.r_trust")->line, "flow.r_trust", "r_trust must be >= 1");

  if (const Entry* e = t.find("output.dir")) c.out_dir = e->value;
  c.snapshot_cadence = t.integer("output.snapshot_cadence", 0);
  if (c.snapshot_cadence < 0)
    throw ConfigError(t.find("output.snapshot_cadence")->line, "output.snapshot_cadence", "must be nonnegative");
  if (const Entry* e = t.find("output.seed")) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (e->value.empty() || e->value[0] == '-' || errno != 0 || end != e->value.c_str() + e->value.size())
      throw ConfigError(e->line, "output.seed", "expected an unsigned 64-bit integer");
    c.seed = v;
  }
  if (const Entry* e = t.find("analysis.morse")) {
    if (e->value != "true" && e->value != "false") throw ConfigError(e->line, "analysis.morse", "expected true or false");
    c.morse = e->value == "true";
  }

  // Materialize once so that positivity and band problems surface here.
  const FlowConfig full = build_flow_config(c);
  const Grid g = build_oversampled_grid(f.band_limit);
  check_positive(full.f, g, c.f_spec, "f");
  check_positive(full.u0, g, c.u0_spec, "u0");
  return c;
}

ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

SpectralField build_field(const FieldSpec& s, int band, const OperatorParams& op, std::uint64_t seed) {
  if (s.type == "constant") return SpectralField::constant(band, s.value);
  if (s.type == "affine")
    return SpectralField::constant(band, s.a) + s.b * SpectralField::coordinate(band, s.axis - 1);
  if (s.type == "harmonics") {
    SpectralField out = SpectralField::constant(band, s.constant);
    for (const auto& c : s.coefficients) out(static_cast<int>(c[0]), static_cast<int>(c[1])) += c[2];
    return out;
  }
  if (s.type == "bubble")
    return bubble_field({s.center, s.scale, s.amplitude}, op, build_oversampled_grid(band), band);
  if (s.type == "perturbed") {
    // |Y_{l,m}| <= sqrt((2l+1)/(4 pi)), so the l1 norm bound keeps the perturbation below amplitude.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SpectralField p(band);
    double norm = 0.0;
    for (int l = 1; l <= s.max_degree; ++l)
      for (int m = -l; m <= l; ++m) {
        p(l, m) = dist(rng);
        norm += std::abs(p(l, m));
      }
    const double bound = std::sqrt((2.0 * s.max_degree + 1.0) / (4.0 * M_PI));
    if (norm > 0.0) p *= s.amplitude / (norm * bound);
    return SpectralField::constant(band, s.base) + p;
  }
  throw ConfigurationError("unknown field type " + s.type);
}

FlowConfig build_flow_config(const ScenarioConfig& c) {
  FlowConfig f = c.flow;
  f.f = build_field(c.f_spec, f.band_limit, f.op, c.seed);
  f.u0 = build_field(c.u0_spec, f.band_limit, f.op, c.seed);
  return f;
}

std::string resolve_out_dir(const ScenarioConfig& c, const RunOptions& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("QFLOW_OUT"); env && *env) return std::string(env) + "/" + c.name;
  return "out/" + c.name;
}

int exit_code_for(FlowEvent e) {
  switch (e) {
    case FlowEvent::kConverged:
    case FlowEvent::kTimeReached: return 0;
    case FlowEvent::kBlowup: return 2;
    default: return 3;
  }
}

RunOutcome run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  namespace fs = std::filesystem;
  RunOutcome out;
  out.out_dir = resolve_out_dir(config, options);
  const fs::path dir(out.out_dir);
  std::error_code ec;
  fs::create_directories(dir / "snapshots", ec);
  std::ofstream csv;
  if (!ec) csv.open(dir / "timeseries.csv", std::ios::binary | std::ios::trunc);
  if (ec || !csv) {
    out.exit_code = 4;
    out.message = "cannot write to " + out.out_dir + (ec ? ": " + ec.message() : "");
    if (!options.quiet) std::cerr << "qflow: " << out.message << "\n";
    return out;
  }

  const FlowConfig flow = build_flow_config(config);
  nlohmann::json manifest;
  manifest["scenario"] = config.name;
  manifest["config_path"] = config.source_path;
  manifest["config_text"] = config.source_text;
  manifest["seed"] = config.seed;
  manifest["snapshot_cadence"] = config.snapshot_cadence;
  manifest["effective"] = flow_json(flow);
  manifest["f"] = config.f_spec.type;
  manifest["u0"] = config.u0_spec.type;
  manifest["versions"] = {{"qflow", kVersion},
                          {"compiler", __VERSION__},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"boost", BOOST_LIB_VERSION}};

  bool io_failed = false;
  std::vector<std::string> snapshots;
  auto snapshot = [&](const FlowState& s) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/step_%09ld.txt", s.step_count);
    try {
      write_snapshot((dir / name).string(), Snapshot{s.t, flow.op.sigma, flow.op.n, s.u});
      snapshots.emplace_back(name);
    } catch (const Error&) {
      io_failed = true;
    }
  };

  try {
    if (config.morse) {
      const MorseReport r = scenario_morse_report(config);
      manifest["morse"] = report_json(r);
    }
  } catch (const Error& e) {
    manifest["morse"] = {{"error", e.what()}};
  }

  write_timeseries_header(csv);
  RunResult result;
  try {
    const FlowEngine engine(flow);
    manifest["alpha_bounds"] = {{"alpha1", engine.bounds().alpha1},
                                {"alpha2", engine.bounds().alpha2},
                                {"alpha3", engine.bounds().alpha3},
                                {"gamma", engine.bounds().gamma}};
    long last_snapshot = -1;
    result = engine.run([&](const DiagnosticsRecord& d, const FlowState& s) {
      write_timeseries_row(csv, d);
      if (!csv) io_failed = true;
      if (config.snapshot_cadence > 0 && s.step_count % config.snapshot_cadence == 0) {
        snapshot(s);
        last_snapshot = s.step_count;
      }
      if (!options.quiet && s.step_count % (100 * flow.cadence) == 0) {
        std::printf("step %ld t=%.6g E=%.12g F2=%.3e r=%.4g\n", s.step_count, d.t, d.energy, d.F2, d.r);
        std::fflush(stdout);
      }
    });
    if (result.final_state.step_count != last_snapshot) snapshot(result.final_state);
    out.event = result.event;
    out.exit_code = exit_code_for(result.event);
    out.message = result.message;
  } catch (const Error& e) {
    out.event = FlowEvent::kNone;
    out.exit_code = 3;
    out.message = e.what();
  }
  csv.close();
  if (!csv) io_failed = true;

  manifest["event"] = to_string(out.event);
  manifest["message"] = out.message;
  manifest["steps"] = result.final_state.step_count;
  manifest["t_final"] = result.final_state.t;
  manifest["summary"] = {{"alpha_min", result.summary.alpha_min},
                         {"alpha_max", result.summary.alpha_max},
                         {"energy_max_increase", result.summary.energy_max_increase},
                         {"volume_max_drift", result.summary.volume_max_drift},
                         {"curv_margin_min", result.summary.curv_margin_min},
                         {"recenter_failures", result.summary.recenter_failures},
                         {"rejections", result.summary.rejections}};
  manifest["artifacts"] = {{"timeseries", "timeseries.csv"}, {"snapshots", snapshots}};
  if (io_failed) {
    out.exit_code = 4;
    manifest["partial"] = true;
    manifest["note"] = "some artifacts could not be written";
  }
  manifest["exit_code"] = out.exit_code;
  std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  mf << manifest.dump(2) << "\n";
  if (!mf) out.exit_code = 4;
  if (!options.quiet)
    std::printf("%s: %s after %ld steps, t=%.6g (exit %d)\n", config.name.c_str(), to_string(out.event).c_str(),
                result.final_state.step_count, result.final_state.t, out.exit_code);
  return out;
}

MorseReport scenario_morse_report(const ScenarioConfig& config) {
  const FlowConfig flow = build_flow_config(config);
  const Grid g = build_oversampled_grid(flow.band_limit);
  const double e0 = evaluate_quantities(flow.u0, synthesize(flow.f, g), flow.op, g).energy;
  return applicability_report(flow.f, flow.op, build_grid(std::max(flow.band_limit, 16)), e0);
}

std::string format_report(const MorseReport& r) {
  std::ostringstream o;
  char buf[256];
  o << "critical points: " << r.points.size() << "\n";
  for (const CriticalPoint& p : r.points) {
    std::snprintf(buf, sizeof buf, "  x = (% .9f, % .9f, % .9f)  f = %.9g  index %d  laplacian %.6g\n", p.location[0],
                  p.location[1], p.location[2], p.value, p.index, p.laplacian);
    o << buf;
  }
  o << "gamma: " << vector_text(std::vector<long>(r.gamma.begin(), r.gamma.end())) << "\n";
  std::snprintf(buf, sizeof buf, "condition (i): %s (max f / min f = %.9g, threshold %.9g)\n",
                r.pinching.holds ? "HOLDS" : "FAILS", r.pinching.ratio, r.pinching.threshold);
  o << buf;
  std::snprintf(buf, sizeof buf, "condition (ii): %s (min |Delta f| at critical points %.6g, min |grad f|^2 + |Delta f|^2 %.3g)\n",
                r.nondegeneracy.holds ? "HOLDS" : "FAILS", r.nondegeneracy.min_abs_laplacian,
                r.nondegeneracy.min_landscape);
  o << buf;
  if (r.system.solvable)
    o << "condition (iii): FAILS (k = " << vector_text(r.system.k) << " solves the Morse system)\n";
  else
    o << "condition (iii): HOLDS (" << r.system.witness << ")\n";
  o << "euler characteristic: " << r.euler_characteristic << "\n";
  if (r.beta) {
    std::snprintf(buf, sizeof buf, "eps0 = %.9g, admissible energy beta = %.12g\n", *r.epsilon0, *r.beta);
    o << buf;
  } else {
    o << "admissible energy: undefined (condition (i) fails)\n";
  }
  if (r.u0_energy) {
    std::snprintf(buf, sizeof buf, "E_f[u0] = %.12g", *r.u0_energy);
    o << buf;
    if (r.u0_admissible) o << (*r.u0_admissible ? " <= beta: admissible" : " > beta: not admissible");
    o << "\n";
  }
  for (const auto& w : r.warnings) o << "warning: " << w << "\n";
  o << "theorem applicable: " << (r.applicable ? "YES" : "NO") << "\n";
  return o.str();
}

}  // namespace qflow
