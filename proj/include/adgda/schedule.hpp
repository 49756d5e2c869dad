#pragma once

#include <string_view>

namespace adgda {

enum class ScheduleKind { kConstant, kInvSqrtT, kGeometric };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

struct Schedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double eta_theta0 = 0.1;
  double eta_lambda0 = 0.1;
  double ratio = 0.995;  // geometric decay per round

  // When set, eta_theta = eta_lambda / (16 (kappa + 1)^2) and eta_theta0 is
  // ignored.
  bool coupled = false;
  double kappa = 1.0;

  bool operator==(const Schedule&) const = default;
};

struct Rates {
  double theta = 0.0;
  double lambda = 0.0;
};

// constant: eta0; invsqrtT: eta0 / sqrt(T) at every t; geometric: eta0 * r^t.
Rates lr_schedule(const Schedule& schedule, long t, long rounds);

void validate(const Schedule& schedule);

}  // namespace adgda
