// SPDX-License-Identifier: Apache-2.0

#include "forge/task_kind.hpp"

#include <stdexcept>

namespace forge {

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::distance: return "distance";
    case TaskKind::principal_axis_distance: return "principal_axis_distance";
    case TaskKind::speed: return "speed";
    case TaskKind::time: return "time";
    case TaskKind::two_point_distance: return "two_point_distance";
    case TaskKind::pose: return "pose";
  }
  return "distance";
}

TaskKind task_kind_from_string(const std::string& s) {
  for (TaskKind t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown task kind: " + s);
}

std::string task_unit(TaskKind t) {
  switch (t) {
    case TaskKind::speed: return "m/s";
    case TaskKind::time: return "s";
    default: return "m";
  }
}

}  // namespace forge
