#include "qflow/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

void put(std::ostream& out, double v, bool last = false) {
  char buf[40];
  if (std::isnan(v))
    std::snprintf(buf, sizeof buf, "NaN");
  else
    std::snprintf(buf, sizeof buf, "%.16e", v);
  out << buf << (last ? '\n' : ',');
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size();
}

bool parse_int(const std::string& s, long& v) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  v = std::strtol(s.c_str(), &end, 10);
  return errno == 0 && end == s.c_str() + s.size();
}

}  // namespace

const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols = {
      "t",      "dt",     "alpha",  "energy", "volume", "F2",  "F4",  "G2",   "r",           "eps",   "q1",  "q2", "q3",
      "theta1", "theta2", "theta3", "b1",     "b2",     "b3",  "kw1", "kw2", "kw3", "umax", "umin", "curv_margin", "v_dev"};
  return cols;
}

void write_timeseries_header(std::ostream& out) {
  const auto& cols = timeseries_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << cols[i] << (i + 1 == cols.size() ? '\n' : ',');
}

void write_timeseries_row(std::ostream& out, const DiagnosticsRecord& d) {
  const double nan = std::nan("");
  for (double v : {d.t, d.dt, d.alpha, d.energy, d.volume, d.F2, d.F4, d.G2, d.r, d.eps}) put(out, v);
  for (int i = 0; i < 3; ++i) put(out, d.q[i]);
  for (int i = 0; i < 3; ++i) put(out, d.theta ? (*d.theta)[i] : nan);
  for (int i = 0; i < 3; ++i) put(out, d.b[i]);
  for (int i = 0; i < 3; ++i) put(out, d.kw[i]);
  put(out, d.umax);
  put(out, d.umin);
  put(out, d.curv_margin);
  put(out, d.v_dev ? *d.v_dev : nan, true);
}

void write_timeseries(const std::string& path, const std::vector<DiagnosticsRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_timeseries_header(out);
  for (const auto& r : records) write_timeseries_row(out, r);
  if (!out) throw Error("write to " + path + " failed");
}

void write_snapshot(std::ostream& out, const Snapshot& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# t=%.17g L=%d sigma=%.17g n=%d\n", s.t, s.field.band_limit(), s.sigma, s.n);
  out << buf;
  const int band = s.field.band_limit();
  for (int l = 0; l <= band; ++l)
    for (int m = -l; m <= l; ++m) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", l, m, s.field(l, m));
      out << buf;
    }
}

void write_snapshot(const std::string& path, const Snapshot& snapshot) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_snapshot(out, snapshot);
  if (!out) throw Error("write to " + path + " failed");
}

Snapshot load_snapshot(std::istream& in) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw SnapshotError(lineno, "empty snapshot");
  Snapshot s;
  long band = -1;
  {
    std::istringstream hs(line);
    std::string hash, t, l, sigma, n;
    if (!(hs >> hash >> t >> l >> sigma >> n) || hash != "#" || t.rfind("t=", 0) != 0 ||
        l.rfind("L=", 0) != 0 || sigma.rfind("sigma=", 0) != 0 || n.rfind("n=", 0) != 0)
      throw SnapshotError(lineno, "expected header '# t=<t> L=<L> sigma=<sigma> n=<n>'");
    std::string rest;
    if (hs >> rest) throw SnapshotError(lineno, "trailing text in header");
    long nn = 0;
    if (!parse_double(t.substr(2), s.t)) throw SnapshotError(lineno, "malformed t");
    if (!parse_int(l.substr(2), band) || band < 0 || band > 512) throw SnapshotError(lineno, "malformed L");
    if (!parse_double(sigma.substr(6), s.sigma)) throw SnapshotError(lineno, "malformed sigma");
    if (!parse_int(n.substr(2), nn) || nn < 1) throw SnapshotError(lineno, "malformed n");
    s.n = static_cast<int>(nn);
  }
  s.field = SpectralField(static_cast<int>(band));
  for (long l = 0; l <= band; ++l)
    for (long m = -l; m <= l; ++m) {
      ++lineno;
      if (!std::getline(in, line)) throw SnapshotError(lineno, "missing coefficient lines");
      std::istringstream ls(line);
      std::string a, b, c, extra;
      long li = 0, mi = 0;
      double v = 0.0;
      if (!(ls >> a >> b >> c) || (ls >> extra)) throw SnapshotError(lineno, "expected 'l m coefficient'");
      if (!parse_int(a, li) || !parse_int(b, mi)) throw SnapshotError(lineno, "malformed degree or order");
      if (li != l || mi != m) throw SnapshotError(lineno, "coefficients out of (l, m) order");
      if (!parse_double(c, v) || !std::isfinite(v)) throw SnapshotError(lineno, "malformed coefficient");
      s.field(static_cast<int>(l), static_cast<int>(m)) = v;
    }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw SnapshotError(lineno, "trailing data");
  }
  return s;
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_snapshot(in);
}

}  // namespace qflow
