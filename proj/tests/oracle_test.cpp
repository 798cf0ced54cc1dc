#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace ossa;
using ossa::test::object;

namespace {

constexpr std::array<TaskId, 3> kTasks{TaskId::t1, TaskId::t2, TaskId::t3};

std::vector<ObjectAnnotation> every_catalog_object() {
  std::vector<ObjectAnnotation> out;
  for (const auto& e : default_catalog().entries())
    for (const auto& st : e.states)
      for (SizeClass size : e.sizes)
        for (ShapeClass shape : e.shapes)
          out.push_back(make_annotation(e, st, e.colors.front(), size, shape, default_catalog()));
  return out;
}

}  // namespace

TEST(TaskSpec, CanonicalInstructions) {
  EXPECT_EQ(TaskSpec::make(TaskId::t1).instruction, "clear the table");
  EXPECT_EQ(TaskSpec::make(TaskId::t2).instruction, "clear the table and keep all the leftover food");
  EXPECT_EQ(TaskSpec::make(TaskId::t3).instruction, "clear the table and discard all the leftover food");
  EXPECT_EQ(TaskSpec::from_instruction("  Clear the   table and KEEP all the leftover food. ").id, TaskId::t2);
  EXPECT_THROW(TaskSpec::from_instruction("wash the dishes"), Error);
}

TEST(ClassifyLeftover, Examples) {
  EXPECT_EQ(classify_leftover(ObjectState::containing_leftover_food, true), LeftoverClass::containing_leftover_food);
  EXPECT_EQ(classify_leftover(ObjectState::intact, false), LeftoverClass::none);
  EXPECT_EQ(classify_leftover(ObjectState::leftover_food, false), LeftoverClass::leftover_food);
  EXPECT_EQ(classify_leftover(ObjectState::dirty, true), LeftoverClass::none);
  try {
    classify_leftover(ObjectState::containing_leftover_food, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incompatible_pair);
  }
  EXPECT_THROW(classify_leftover(ObjectState::peel, true), Error);
}

TEST(DefaultDestination, Examples) {
  EXPECT_EQ(default_destination(object("bananas", ObjectState::peel)), Destination::trash_bin);
  EXPECT_EQ(default_destination(object("bananas", ObjectState::intact)), Destination::cupboard);
  EXPECT_EQ(default_destination(object("plate", ObjectState::dirty)), Destination::dishwasher);
  EXPECT_EQ(default_destination(object("fork", ObjectState::clean)), Destination::cupboard);
  EXPECT_EQ(default_destination(object("apple", ObjectState::intact)), Destination::fridge);
  EXPECT_EQ(default_destination(object("orange", ObjectState::intact)), Destination::fridge);
  EXPECT_EQ(default_destination(object("napkin", ObjectState::dirty)), Destination::trash_bin);
  try {
    default_destination(object("apple", ObjectState::leftover_food));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::leftover_not_defaultable);
  }
}

TEST(GroundTruthPlan, Examples) {
  auto soup = object("bowl", ObjectState::containing_leftover_food);
  auto t3 = ground_truth_plan(soup, TaskSpec::make(TaskId::t3));
  EXPECT_EQ(t3.destination, Destination::dishwasher);
  EXPECT_EQ(t3.placing_type, PlaceType::pour);
  EXPECT_FALSE(t3.ambiguous);

  auto half_orange = object("orange", ObjectState::leftover_food);
  EXPECT_EQ(half_orange.name, "half orange");
  auto t1 = ground_truth_plan(half_orange, TaskSpec::make(TaskId::t1));
  EXPECT_EQ(t1.destination, Destination::uncertain);
  EXPECT_TRUE(t1.ambiguous);
  EXPECT_EQ(t1.placing_type, PlaceType::place);
  auto t2 = ground_truth_plan(half_orange, TaskSpec::make(TaskId::t2));
  EXPECT_EQ(t2.destination, Destination::fridge);
  EXPECT_EQ(t2.placing_type, PlaceType::place);
  EXPECT_EQ(ground_truth_plan(half_orange, TaskSpec::make(TaskId::t3)).destination, Destination::trash_bin);

  auto apple = object("apple", ObjectState::intact);
  for (TaskId t : kTasks) {
    auto e = ground_truth_plan(apple, TaskSpec::make(t));
    EXPECT_EQ(e.destination, default_destination(apple));
    EXPECT_FALSE(e.ambiguous);
  }
}

TEST(GraspRule, Table) {
  EXPECT_EQ(grasp_rule(true, ShapeClass::round, SizeClass::small), GraspType::edge_grasp);
  EXPECT_EQ(grasp_rule(false, ShapeClass::rectangle, SizeClass::medium), GraspType::edge_grasp);
  EXPECT_EQ(grasp_rule(false, ShapeClass::oval, SizeClass::big), GraspType::edge_grasp);
  EXPECT_EQ(grasp_rule(false, ShapeClass::oval, SizeClass::small), GraspType::top_grasp);
  EXPECT_EQ(grasp_rule(false, ShapeClass::elongated, SizeClass::big), GraspType::top_grasp);
  EXPECT_EQ(grasp_rule(false, ShapeClass::spherical, SizeClass::medium), GraspType::top_grasp);
}

// Properties over every catalog (category, state, size, shape) combination.

TEST(GroundTruthPlanProperty, TaskSensitivityConfinedToLeftovers) {
  for (const auto& a : every_catalog_object()) {
    if (classify_leftover(a.state, a.container) != LeftoverClass::none) continue;
    auto p1 = ground_truth_plan(a, TaskSpec::make(TaskId::t1));
    EXPECT_EQ(p1, ground_truth_plan(a, TaskSpec::make(TaskId::t2))) << a.name;
    EXPECT_EQ(p1, ground_truth_plan(a, TaskSpec::make(TaskId::t3))) << a.name;
  }
}

TEST(GroundTruthPlanProperty, PourAndUncertainConditions) {
  for (const auto& a : every_catalog_object())
    for (TaskId t : kTasks) {
      auto e = ground_truth_plan(a, TaskSpec::make(t));
      bool leftover = classify_leftover(a.state, a.container) != LeftoverClass::none;
      EXPECT_EQ(e.placing_type == PlaceType::pour, t == TaskId::t3 && a.state == ObjectState::containing_leftover_food)
          << a.name;
      EXPECT_EQ(e.destination == Destination::uncertain, t == TaskId::t1 && leftover) << a.name;
      EXPECT_EQ(e.ambiguous, e.destination == Destination::uncertain);
      if (e.placing_type == PlaceType::pour) {
        EXPECT_EQ(e.destination, Destination::dishwasher);
      }
      bool edge = a.container || ((a.shape == ShapeClass::rectangle || a.shape == ShapeClass::oval) &&
                                  (a.size == SizeClass::medium || a.size == SizeClass::big));
      auto entry = default_catalog().find_by_label(a.name);
      if (!entry->grasping_type) {
        EXPECT_EQ(e.grasping_type == GraspType::edge_grasp, edge) << a.name;
      }
      EXPECT_EQ(e, ground_truth_plan(a, TaskSpec::make(t)));
    }
}

TEST(Catalog, StatesRespectCompatibilityRules) {
  const auto& cat = default_catalog();
  EXPECT_EQ(cat.version(), "catalog-v1");
  for (const auto& e : cat.entries()) {
    EXPECT_FALSE(e.states.empty()) << e.category;
    EXPECT_FALSE(e.colors.empty());
    EXPECT_FALSE(e.sizes.empty());
    EXPECT_FALSE(e.shapes.empty());
    for (const auto& st : e.states) {
      EXPECT_TRUE(state_allowed(st.state, e.container, e.edible)) << st.name;
      EXPECT_EQ(cat.find_by_label(st.name), &e) << st.name;
    }
  }
  for (const char* c : {"apple", "bananas", "orange", "bread", "bowl", "plate", "cup", "napkin", "fork", "knife", "spoon"})
    EXPECT_NE(cat.find(c), nullptr) << c;
  EXPECT_TRUE(cat.find("plate")->container);
  EXPECT_FALSE(cat.find("napkin")->container);
  EXPECT_FALSE(cat.find("napkin")->edible);
}

TEST(Catalog, RejectsIncompatibleStates) {
  Json doc = Json::parse(detail::kCatalogJson);
  doc["categories"][0]["states"][0]["state"] = "clean";
  EXPECT_THROW(Catalog::from_json(doc), Error);
}
