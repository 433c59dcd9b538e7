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

#ifndef LASP_WCRDT_HPP_
#define LASP_WCRDT_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lasp/gmap.hpp"

namespace lasp {

/// Workflow CRDT value: a fixed-length sequence of grow-only flag maps,
/// one per task, joined elementwise. Operations live in workflow.hpp.
class WCRDT {
 public:
  WCRDT() = default;
  explicit WCRDT(std::size_t task_count) : tasks_(task_count) {}

  std::size_t task_count() const { return tasks_.size(); }
  const GMap& task(std::size_t i) const { return tasks_.at(i); }
  const std::vector<GMap>& tasks() const { return tasks_; }

  /// Replaces one task map; used by the workflow operations.
  WCRDT with_task(std::size_t i, GMap map) const {
    WCRDT out = *this;
    out.tasks_.at(i) = std::move(map);
    return out;
  }

  friend WCRDT join(const WCRDT& a, const WCRDT& b) {
    if (a.tasks_.size() != b.tasks_.size()) {
      throw std::logic_error("wcrdt join: task count mismatch");
    }
    WCRDT out(a.tasks_.size());
    for (std::size_t i = 0; i < a.tasks_.size(); ++i) {
      out.tasks_[i] = join(a.tasks_[i], b.tasks_[i]);
    }
    return out;
  }

  bool includes(const WCRDT& other) const {
    if (tasks_.size() != other.tasks_.size()) return false;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      if (!tasks_[i].includes(other.tasks_[i])) return false;
    }
    return true;
  }

  template <codec::ByteSink S>
  void encode(S& sink) const {
    sink.u32(codec::ByteWriter::checked_length(tasks_.size()));
    for (const auto& t : tasks_) t.encode(sink);
  }

  friend bool operator==(const WCRDT&, const WCRDT&) = default;

 private:
  std::vector<GMap> tasks_;
};

}  // namespace lasp

#endif  // LASP_WCRDT_HPP_
