#include "qflow/errors.hpp"

#include <cstdio>

namespace qflow {

namespace {

std::string point_text(const std::array<double, 3>& x) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "(%.6g, %.6g, %.6g)", x[0], x[1], x[2]);
  return buf;
}

}  // namespace

PositivityError::PositivityError(const std::array<double, 3>& where, double v)
    : Error("non-positive conformal factor " + std::to_string(v) + " at " + point_text(where)),
      location(where),
      value(v) {}

RecenteringError::RecenteringError(double best)
    : Error("recentering did not converge, best residual " + std::to_string(best)),
      best_residual(best) {}

NotMorseError::NotMorseError(const std::array<double, 3>& where, double ev)
    : Error("degenerate critical point at " + point_text(where) + " (hessian eigenvalue " +
            std::to_string(ev) + ")"),
      location(where),
      min_eigenvalue(ev) {}

SnapshotError::SnapshotError(int l, const std::string& reason)
    : Error("snapshot line " + std::to_string(l) + ": " + reason), line(l) {}

ConfigError::ConfigError(int l, const std::string& k, const std::string& r)
    : Error("config line " + std::to_string(l) + (k.empty() ? "" : ", key '" + k + "'") + ": " + r),
      line(l),
      key(k),
      reason(r) {}

}  // namespace qflow
