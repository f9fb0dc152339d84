// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

namespace forge {

/// The six question kinds the pipeline can generate.
enum class TaskKind {
  distance,
  principal_axis_distance,
  speed,
  time,
  two_point_distance,
  pose,
};

constexpr std::array<TaskKind, 6> kAllTasks = {
    TaskKind::distance,     TaskKind::principal_axis_distance,
    TaskKind::speed,        TaskKind::time,
    TaskKind::two_point_distance, TaskKind::pose,
};

std::string to_string(TaskKind t);
TaskKind task_kind_from_string(const std::string& s);

/// Unit of the task's ground-truth value.
std::string task_unit(TaskKind t);

}  // namespace forge
