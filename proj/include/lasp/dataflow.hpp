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

#ifndef LASP_DATAFLOW_HPP_
#define LASP_DATAFLOW_HPP_

// Node-local variable store with set combinators and monotonic triggers.
//
// Source variables are mutated through CRDT mutators or by joining remote
// state. Derived variables are defined by exactly one combinator edge and are
// recomputed from the full state of their sources whenever a source changes;
// their membership is stored as a canonical AWSet so two stores holding the
// same sources hold structurally equal derived values.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lasp/lattice.hpp"

namespace lasp::dataflow {

using VariableId = std::string;

enum class Kind { source, derived };
enum class Combinator { map, filter, product };

class DataflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  Combinator combinator;
  std::vector<VariableId> sources;
  VariableId destination;
  std::function<bool(const Element&)> predicate;
  std::function<Element(const Element&)> fn;
};

using TriggerId = std::size_t;

class Store {
 public:
  using Condition = std::function<bool(const LatticeState&)>;
  using Action = std::function<void(Store&)>;

  /// Declares a source variable holding `bottom`.
  void declare(const VariableId& id, LatticeState bottom) {
    if (vars_.contains(id)) {
      throw DataflowError("declare: variable '" + id + "' already exists");
    }
    vars_.emplace(id, Variable{std::make_shared<const LatticeState>(std::move(bottom)),
                               Kind::source});
  }

  bool contains(const VariableId& id) const { return vars_.contains(id); }

  const LatticeState& state(const VariableId& id) const { return *at(id).state; }

  std::shared_ptr<const LatticeState> state_ptr(const VariableId& id) const {
    return at(id).state;
  }

  Kind kind(const VariableId& id) const { return at(id).kind; }

  std::vector<VariableId> sources() const {
    std::vector<VariableId> out;
    for (const auto& [id, v] : vars_) {
      if (v.kind == Kind::source) out.push_back(id);
    }
    return out;
  }

  /// Bumped on every state change of any variable.
  std::uint64_t version() const { return version_; }

  /// Applies a mutator to a source variable and returns its delta.
  Delta update(const VariableId& id, const Mutator& mutator) {
    Variable& v = at(id);
    if (v.kind == Kind::derived) {
      throw DataflowError("update: '" + id + "' is derived");
    }
    auto m = mutator(*v.state);
    if (!same_shape(m.state, *v.state)) {
      throw StructuralError("update: mutator changed the variant of '" + id + "'");
    }
    const bool changed = !(m.state == *v.state);
    v.state = std::make_shared<const LatticeState>(std::move(m.state));
    if (changed) {
      local_deltas_.emplace_back(id, m.delta);
      on_changed(id);
    }
    return std::move(m.delta);
  }

  /// Joins a remote state into a source variable, declaring it at bottom
  /// first if unknown. Returns true iff the local state grew.
  bool merge(const VariableId& id, const LatticeState& remote) {
    auto it = vars_.find(id);
    if (it == vars_.end()) {
      declare(id, bottom_like(remote));
      it = vars_.find(id);
    }
    Variable& v = it->second;
    if (v.kind == Kind::derived) {
      throw DataflowError("merge: '" + id + "' is derived");
    }
    if (!same_shape(*v.state, remote)) {
      throw StructuralError("merge: shape mismatch for '" + id + "'");
    }
    if (includes(*v.state, remote)) return false;
    v.state = std::make_shared<const LatticeState>(join(*v.state, remote));
    on_changed(id);
    return true;
  }

  void product(const VariableId& a, const VariableId& b, const VariableId& dst) {
    add_edge(Edge{Combinator::product, {a, b}, dst, {}, {}});
  }

  void filter(const VariableId& src, std::function<bool(const Element&)> predicate,
              const VariableId& dst) {
    add_edge(Edge{Combinator::filter, {src}, dst, std::move(predicate), {}});
  }

  void map(const VariableId& src, std::function<Element(const Element&)> fn,
           const VariableId& dst) {
    add_edge(Edge{Combinator::map, {src}, dst, {}, std::move(fn)});
  }

  /// Registers a one-shot trigger. `condition` must be monotone in the
  /// variable's lattice order; this is not checked. Fires immediately if the
  /// condition already holds.
  TriggerId read_threshold(const VariableId& id, Condition condition,
                           Action action) {
    at(id);
    triggers_.push_back(Trigger{id, std::move(condition), std::move(action), false});
    const TriggerId tid = triggers_.size() - 1;
    check_triggers();
    return tid;
  }

  bool fired(TriggerId id) const { return triggers_.at(id).fired; }

  /// Deltas of state-changing update() calls since the last call, in order.
  std::vector<std::pair<VariableId, Delta>> take_local_deltas() {
    return std::exchange(local_deltas_, {});
  }

  /// Membership a derived variable should have given current sources.
  std::vector<Element> evaluate(const Edge& e) const {
    std::vector<Element> out;
    const auto& src = state(e.sources.at(0)).as<AWSet>();
    switch (e.combinator) {
      case Combinator::product: {
        const auto& rhs = state(e.sources.at(1)).as<AWSet>();
        for (const auto& [x, dx] : src.dot_store()) {
          for (const auto& [y, dy] : rhs.dot_store()) {
            out.push_back(Element::tuple({x, y}));
          }
        }
        break;
      }
      case Combinator::filter:
        for (const auto& [x, dx] : src.dot_store()) {
          if (e.predicate(x)) out.push_back(x);
        }
        break;
      case Combinator::map:
        for (const auto& [x, dx] : src.dot_store()) out.push_back(e.fn(x));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        break;
    }
    return out;
  }

  const Edge* defining_edge(const VariableId& id) const {
    auto it = edges_.find(id);
    return it == edges_.end() ? nullptr : &it->second;
  }

 private:
  struct Variable {
    std::shared_ptr<const LatticeState> state;
    Kind kind;
  };

  struct Trigger {
    VariableId variable;
    Condition condition;
    Action action;
    bool fired;
  };

  Variable& at(const VariableId& id) {
    auto it = vars_.find(id);
    if (it == vars_.end()) throw DataflowError("unknown variable '" + id + "'");
    return it->second;
  }
  const Variable& at(const VariableId& id) const {
    auto it = vars_.find(id);
    if (it == vars_.end()) throw DataflowError("unknown variable '" + id + "'");
    return it->second;
  }

  bool reaches(const VariableId& from, const VariableId& to) const {
    std::vector<VariableId> stack{from};
    std::set<VariableId> seen;
    while (!stack.empty()) {
      VariableId cur = std::move(stack.back());
      stack.pop_back();
      if (cur == to) return true;
      if (!seen.insert(cur).second) continue;
      auto it = children_.find(cur);
      if (it == children_.end()) continue;
      for (const auto& c : it->second) stack.push_back(c);
    }
    return false;
  }

  void add_edge(Edge e) {
    for (const auto& s : e.sources) {
      if (!at(s).state->is<AWSet>()) {
        throw DataflowError("combinator source '" + s + "' is not an AWSet");
      }
    }
    Variable& dst = at(e.destination);
    if (!dst.state->is<AWSet>()) {
      throw DataflowError("combinator destination '" + e.destination +
                          "' is not an AWSet");
    }
    if (edges_.contains(e.destination)) {
      throw DataflowError("'" + e.destination + "' already has a defining edge");
    }
    for (const auto& s : e.sources) {
      if (s == e.destination || reaches(e.destination, s)) {
        throw DataflowError("edge into '" + e.destination + "' creates a cycle");
      }
    }
    dst.kind = Kind::derived;
    for (const auto& s : e.sources) children_[s].insert(e.destination);
    const VariableId id = e.destination;
    edges_.emplace(id, std::move(e));
    rebuild_topo_order();
    recompute(id);
    ++version_;
    check_triggers();
  }

  void rebuild_topo_order() {
    topo_.clear();
    std::map<VariableId, int> indegree;
    for (const auto& [dst, e] : edges_) {
      indegree.try_emplace(dst, 0);
      for (const auto& s : e.sources) {
        if (edges_.contains(s)) ++indegree[dst];
      }
    }
    std::vector<VariableId> ready;
    for (const auto& [id, d] : indegree) {
      if (d == 0) ready.push_back(id);
    }
    while (!ready.empty()) {
      VariableId cur = ready.front();
      ready.erase(ready.begin());
      topo_.push_back(cur);
      if (auto it = children_.find(cur); it != children_.end()) {
        for (const auto& c : it->second) {
          if (--indegree[c] == 0) ready.push_back(c);
        }
      }
    }
  }

  void recompute(const VariableId& id) {
    const Edge& e = edges_.at(id);
    at(id).state = std::make_shared<const LatticeState>(
        AWSet::canonical(evaluate(e), ActorId("~" + id)));
  }

  void on_changed(const VariableId& id) {
    ++version_;
    if (children_.contains(id)) {
      std::set<VariableId> dirty{id};
      for (const auto& d : topo_) {
        const Edge& e = edges_.at(d);
        const bool stale = std::any_of(e.sources.begin(), e.sources.end(),
                                       [&](const auto& s) { return dirty.contains(s); });
        if (!stale) continue;
        auto before = at(d).state;
        recompute(d);
        if (!(*before == *at(d).state)) dirty.insert(d);
      }
    }
    check_triggers();
  }

  void check_triggers() {
    for (std::size_t i = 0; i < triggers_.size(); ++i) {
      if (triggers_[i].fired) continue;
      if (!triggers_[i].condition(state(triggers_[i].variable))) continue;
      triggers_[i].fired = true;
      // Copy: the action may register more triggers and reallocate.
      Action action = triggers_[i].action;
      action(*this);
    }
  }

  std::map<VariableId, Variable> vars_;
  std::map<VariableId, Edge> edges_;
  std::map<VariableId, std::set<VariableId>> children_;
  std::vector<VariableId> topo_;
  std::vector<Trigger> triggers_;
  std::vector<std::pair<VariableId, Delta>> local_deltas_;
  std::uint64_t version_ = 0;
};

}  // namespace lasp::dataflow

#endif  // LASP_DATAFLOW_HPP_
