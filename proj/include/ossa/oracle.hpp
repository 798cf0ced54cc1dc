#pragma once

// Rule-based ground truth for the three table-clearing tasks.

#include <optional>
#include <string>
#include <string_view>

#include "ossa/catalog.hpp"

namespace ossa {

enum class TaskId { t1, t2, t3 };

constexpr std::string_view to_string(TaskId t) {
  switch (t) {
    case TaskId::t1: return "T1";
    case TaskId::t2: return "T2";
    case TaskId::t3: return "T3";
  }
  return "?";
}

inline std::optional<TaskId> parse_task_id(std::string_view text) {
  std::string t = detail::to_lower(detail::trim(text));
  if (t == "t1") return TaskId::t1;
  if (t == "t2") return TaskId::t2;
  if (t == "t3") return TaskId::t3;
  return std::nullopt;
}

constexpr std::string_view canonical_instruction(TaskId t) {
  switch (t) {
    case TaskId::t1: return "clear the table";
    case TaskId::t2: return "clear the table and keep all the leftover food";
    case TaskId::t3: return "clear the table and discard all the leftover food";
  }
  return "";
}

struct TaskSpec {
  TaskId id = TaskId::t1;
  std::string instruction;

  static TaskSpec make(TaskId id) { return {id, std::string(canonical_instruction(id))}; }

  // Recognizes an instruction by its canonical phrasing (case, whitespace and
  // a trailing period are ignored).
  static TaskSpec from_instruction(std::string_view text) {
    std::string norm;
    for (const auto& w : detail::split_words(detail::to_lower(text))) {
      if (!norm.empty()) norm.push_back(' ');
      norm += w;
    }
    if (!norm.empty() && norm.back() == '.') norm.pop_back();
    for (TaskId id : {TaskId::t1, TaskId::t2, TaskId::t3})
      if (norm == canonical_instruction(id)) return make(id);
    throw Error(ErrorCode::invalid_config, "instruction does not match any task: '" + std::string(text) + "'");
  }

  bool operator==(const TaskSpec&) const = default;
};

enum class LeftoverClass { none, leftover_food, containing_leftover_food };

constexpr std::string_view to_string(LeftoverClass c) {
  switch (c) {
    case LeftoverClass::none: return "none";
    case LeftoverClass::leftover_food: return "leftover food";
    case LeftoverClass::containing_leftover_food: return "containing leftover food";
  }
  return "?";
}

struct ExpectedPlan {
  std::string name;
  ObjectState state = ObjectState::intact;
  Destination destination = Destination::cupboard;
  GraspType grasping_type = GraspType::top_grasp;
  PlaceType placing_type = PlaceType::place;
  bool ambiguous = false;

  bool operator==(const ExpectedPlan&) const = default;
};

inline LeftoverClass classify_leftover(ObjectState state, bool container) {
  if (container ? !is_container_state(state) : state == ObjectState::containing_leftover_food)
    throw Error(ErrorCode::incompatible_pair, "state '" + std::string(to_string(state)) +
                                                  "' with container=" + (container ? "true" : "false"));
  switch (state) {
    case ObjectState::containing_leftover_food: return LeftoverClass::containing_leftover_food;
    case ObjectState::leftover_food: return LeftoverClass::leftover_food;
    default: return LeftoverClass::none;
  }
}

// Where a non-leftover object belongs regardless of the task. The catalog may
// pin a destination per category state; otherwise peel goes to the bin, dirty
// items to the dishwasher and clean ones to the cupboard.
inline Destination default_destination(const ObjectAnnotation& a, const Catalog& catalog = default_catalog()) {
  if (classify_leftover(a.state, a.container) != LeftoverClass::none)
    throw Error(ErrorCode::leftover_not_defaultable, a.name + " holds leftover food");
  if (const CatalogEntry* entry = catalog.find_by_label(a.name))
    if (const CatalogState* cs = entry->find_state(a.state); cs && cs->destination) return *cs->destination;
  switch (a.state) {
    case ObjectState::peel: return Destination::trash_bin;
    case ObjectState::dirty: return Destination::dishwasher;
    case ObjectState::clean: return Destination::cupboard;
    case ObjectState::intact: return Destination::cupboard;
    default: break;
  }
  return Destination::cupboard;
}

// Containers and medium/big flat items are taken by the edge; everything else
// from the top.
inline GraspType grasp_rule(bool container, ShapeClass shape, SizeClass size) {
  if (container) return GraspType::edge_grasp;
  bool flat = shape == ShapeClass::rectangle || shape == ShapeClass::oval;
  bool large = size == SizeClass::medium || size == SizeClass::big;
  return flat && large ? GraspType::edge_grasp : GraspType::top_grasp;
}

inline GraspType expected_grasp(const ObjectAnnotation& a, const Catalog& catalog = default_catalog()) {
  if (const CatalogEntry* entry = catalog.find_by_label(a.name); entry && entry->grasping_type)
    return *entry->grasping_type;
  return grasp_rule(a.container, a.shape, a.size);
}

inline ExpectedPlan ground_truth_plan(const ObjectAnnotation& a, const TaskSpec& task,
                                      const Catalog& catalog = default_catalog()) {
  ExpectedPlan p;
  p.name = a.name;
  p.state = a.state;
  p.grasping_type = expected_grasp(a, catalog);
  p.placing_type = PlaceType::place;

  LeftoverClass leftover = classify_leftover(a.state, a.container);
  if (leftover == LeftoverClass::none) {
    p.destination = default_destination(a, catalog);
    return p;
  }
  switch (task.id) {
    case TaskId::t1:
      p.destination = Destination::uncertain;
      p.ambiguous = true;
      break;
    case TaskId::t2:
      p.destination = Destination::fridge;
      break;
    case TaskId::t3:
      if (leftover == LeftoverClass::leftover_food) {
        p.destination = Destination::trash_bin;
      } else {
        p.destination = Destination::dishwasher;
        p.placing_type = PlaceType::pour;
      }
      break;
  }
  return p;
}

}  // namespace ossa
