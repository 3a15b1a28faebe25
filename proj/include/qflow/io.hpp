#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qflow/diagnostics.hpp"
#include "qflow/spherical_grid.hpp"

namespace qflow {

// Column order of timeseries.csv.
const std::vector<std::string>& timeseries_columns();
void write_timeseries_header(std::ostream& out);
// One row in %.16e; missing theta and v_dev are written as NaN.
void write_timeseries_row(std::ostream& out, const DiagnosticsRecord& record);
void write_timeseries(const std::string& path, const std::vector<DiagnosticsRecord>& records);

struct Snapshot {
  double t = 0.0;
  double sigma = 0.0;
  int n = 2;
  SpectralField field;
};

// "# t=<t> L=<L> sigma=<sigma> n=<n>", then "l m coefficient" for every (l, m) in
// lexicographic order, with 17 significant digits so that loading is bit-exact.
void write_snapshot(std::ostream& out, const Snapshot& snapshot);
void write_snapshot(const std::string& path, const Snapshot& snapshot);
// Throws SnapshotError carrying the offending line number.
Snapshot load_snapshot(std::istream& in);
Snapshot load_snapshot(const std::string& path);

}  // namespace qflow
