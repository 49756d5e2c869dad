#include "adgda/schedule.hpp"

#include "adgda/errors.hpp"

#include <cmath>
#include <string>

namespace adgda {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kInvSqrtT: return "invsqrtT";
    case ScheduleKind::kGeometric: return "geometric";
  }
  return "constant";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "invsqrtT") return ScheduleKind::kInvSqrtT;
  if (name == "geometric") return ScheduleKind::kGeometric;
  throw ConfigError("unknown schedule '" + std::string(name) + "'");
}

void validate(const Schedule& s) {
  if (!(s.eta_lambda0 > 0.0) || (!s.coupled && !(s.eta_theta0 > 0.0))) {
    throw ConfigError("learning rates must be positive");
  }
  if (s.kind == ScheduleKind::kGeometric && !(s.ratio > 0.0 && s.ratio < 1.0)) {
    throw ConfigError("geometric schedule ratio must lie in (0, 1)");
  }
  if (s.coupled && !(s.kappa >= 0.0)) throw ConfigError("condition number must be nonnegative");
}

Rates lr_schedule(const Schedule& s, long t, long rounds) {
  validate(s);
  if (t < 0 || t >= rounds) throw std::out_of_range("schedule round outside [0, T)");
  double factor = 1.0;
  switch (s.kind) {
    case ScheduleKind::kConstant: break;
    case ScheduleKind::kInvSqrtT: factor = 1.0 / std::sqrt(static_cast<double>(rounds)); break;
    case ScheduleKind::kGeometric: factor = std::pow(s.ratio, static_cast<double>(t)); break;
  }
  Rates r;
  r.lambda = s.eta_lambda0 * factor;
  r.theta = s.coupled ? r.lambda / (16.0 * (s.kappa + 1.0) * (s.kappa + 1.0)) : s.eta_theta0 * factor;
  return r;
}

}  // namespace adgda
