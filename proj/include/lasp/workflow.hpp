//  Copyright 2026 The lasp-sim Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef LASP_WORKFLOW_HPP_
#define LASP_WORKFLOW_HPP_

// Coordination-free barriers. Each task is a grow-only map of per-node
// completion flags; a task is complete when every expected node's flag is
// set, and a task may start once all earlier tasks are complete.

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>

#include "lasp/lattice.hpp"
#include "lasp/wcrdt.hpp"

namespace lasp::workflow {

/// 0-based position of a task in the sequence.
struct TaskIndex {
  std::size_t value = 0;
  friend auto operator<=>(const TaskIndex&, const TaskIndex&) = default;
};

/// Tasks of one experiment run, in order.
enum class Task : std::size_t {
  event_generation = 0,
  convergence = 1,
  log_aggregation = 2,
  shutdown = 3,
};
inline constexpr std::size_t kExperimentTasks = 4;

inline WCRDT wcrdt_new(std::size_t task_count) {
  if (task_count == 0) {
    throw std::invalid_argument("wcrdt_new: task_count must be >= 1");
  }
  return WCRDT(task_count);
}

inline Mutated<WCRDT> mark_complete(const WCRDT& w, TaskIndex task,
                                    const ActorId& node) {
  if (task.value >= w.task_count()) {
    throw std::out_of_range("mark_complete: task index out of range");
  }
  auto m = w.task(task.value).set_true(node);
  WCRDT delta = WCRDT(w.task_count()).with_task(task.value, std::move(m.delta));
  return {w.with_task(task.value, std::move(m.state)), std::move(delta)};
}

inline bool is_task_complete(const WCRDT& w, TaskIndex task,
                             const std::set<ActorId>& expected) {
  if (expected.empty()) {
    throw std::invalid_argument("is_task_complete: expected set is empty");
  }
  const GMap& flags = w.task(task.value);
  for (const auto& node : expected) {
    if (!flags.flag(node)) return false;
  }
  return true;
}

/// First task not yet complete, or nullopt once the whole workflow is done.
/// Every task before the returned one is complete, so the node may work on
/// it; this is the same for every node given the same replica.
inline std::optional<TaskIndex> current_task(const WCRDT& w,
                                             const ActorId& /*node*/,
                                             const std::set<ActorId>& expected) {
  for (std::size_t i = 0; i < w.task_count(); ++i) {
    if (!is_task_complete(w, TaskIndex{i}, expected)) return TaskIndex{i};
  }
  return std::nullopt;
}

inline Mutator mark(TaskIndex task, ActorId node) {
  return [task, node = std::move(node)](const LatticeState& s) {
    auto m = mark_complete(s.as<WCRDT>(), task, node);
    return Mutated<LatticeState>{std::move(m.state), std::move(m.delta)};
  };
}

/// The same workflow expressed as right-nested Pairs of GMaps:
/// (t0, (t1, (t2, t3))). Its join agrees with WCRDT's elementwise join.
inline LatticeState as_nested_pairs(const WCRDT& w) {
  if (w.task_count() == 1) return w.task(0);
  LatticeState tail = w.task(w.task_count() - 1);
  for (std::size_t i = w.task_count() - 1; i-- > 0;) {
    tail = PairState(w.task(i), std::move(tail));
  }
  return tail;
}

}  // namespace lasp::workflow

#endif  // LASP_WORKFLOW_HPP_
