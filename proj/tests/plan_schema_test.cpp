#include <gtest/gtest.h>

#include "ossa/plan_schema.hpp"
#include "ossa/prompt.hpp"
#include "test_support.hpp"

using namespace ossa;

namespace {

template <class T>
T value_of(const FieldValue& v) {
  return std::get<T>(v);
}

}  // namespace

TEST(NormalizeValue, Examples) {
  EXPECT_EQ(value_of<Destination>(normalize_value(PlanField::destination, "Trash Bin")), Destination::trash_bin);
  EXPECT_EQ(value_of<GraspType>(normalize_value(PlanField::grasping_type, "grasp from the top")), GraspType::top_grasp);
  EXPECT_EQ(value_of<ObjectState>(normalize_value(PlanField::state, "half eaten")), ObjectState::leftover_food);
  EXPECT_EQ(value_of<Destination>(normalize_value(PlanField::destination, "garbage bin")), Destination::trash_bin);
  EXPECT_EQ(value_of<Destination>(normalize_value(PlanField::destination, "fridge.")), Destination::fridge);
  EXPECT_EQ(value_of<ObjectState>(normalize_value(PlanField::state, "containing_leftover_food")),
            ObjectState::containing_leftover_food);
  EXPECT_TRUE(is_unknown(normalize_value(PlanField::state, "sliced")));
  EXPECT_TRUE(is_unknown(normalize_value(PlanField::size, "")));
  EXPECT_TRUE(value_of<bool>(normalize_value(PlanField::container, "yes")));
  EXPECT_EQ(value_of<std::string>(normalize_value(PlanField::color, "Dark  Green")), "dark green");
}

TEST(NormalizeValue, ArbitraryTextNeverFaults) {
  SplitMix64 rng(99);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz _-.!;,:'\"{}[]0123456789\t\n\xc3\xa9";
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    auto n = rng.uniform_int(0, 24);
    for (std::uint64_t k = 0; k < n; ++k) s.push_back(alphabet[rng.uniform_int(0, alphabet.size() - 1)]);
    for (PlanField f : {PlanField::color, PlanField::size, PlanField::shape, PlanField::container, PlanField::state,
                        PlanField::destination, PlanField::grasping_type, PlanField::placing_type}) {
      FieldValue v;
      ASSERT_NO_THROW(v = normalize_value(f, s)) << s;
      if (f == PlanField::state && !is_unknown(v)) {
        ASSERT_TRUE(std::holds_alternative<ObjectState>(v));
      }
      if (f == PlanField::destination && !is_unknown(v)) {
        ASSERT_TRUE(std::holds_alternative<Destination>(v));
      }
    }
  }
}

TEST(ExtractStructuredBlock, Examples) {
  auto fenced = extract_structured_block("Here is the plan:\n```\n{\"a\": {}}\n```\nand {\"b\": 1}");
  ASSERT_EQ(fenced.size(), 1u);
  EXPECT_TRUE(fenced[0].fenced);
  EXPECT_EQ(fenced[0].text, "{\"a\": {}}");

  std::string doc = "{\n  \"apple\": {\"color\": \"red\"}\n}";
  auto bare = extract_structured_block(doc);
  ASSERT_EQ(bare.size(), 1u);
  EXPECT_EQ(bare[0].text, doc);
  EXPECT_EQ(bare[0].offset, 0u);

  auto two = extract_structured_block("x {\"a\": {}} y {\"b\": {}}");
  ASSERT_EQ(two.size(), 2u);
  EXPECT_LT(two[0].offset, two[1].offset);

  try {
    extract_structured_block("no objects found.");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_structured_content);
  }
  EXPECT_THROW(extract_structured_block("{ unbalanced"), Error);
}

TEST(ParsePlans, Examples) {
  auto r = parse_plans(R"({"apple": {"state":"intact","destination":"fridge"}})");
  ASSERT_EQ(r.plans.size(), 1u);
  EXPECT_EQ(r.plans[0].state, ObjectState::intact);
  EXPECT_EQ(r.plans[0].grasping_type, std::nullopt);

  auto two = parse_plans(R"({"plate 1":{"state":"dirty"}, "plate 2":{"state":"clean"}})");
  ASSERT_EQ(two.plans.size(), 2u);
  EXPECT_EQ(two.plans[0].name, "plate 1");
  EXPECT_EQ(two.plans[1].name, "plate 2");

  auto sliced = parse_plans(R"({"apple": {"state":"sliced"}})");
  ASSERT_EQ(sliced.plans.size(), 1u);
  EXPECT_EQ(sliced.plans[0].state, std::nullopt);
  ASSERT_EQ(sliced.warnings.size(), 1u);
  EXPECT_NE(sliced.warnings[0].find("unmapped value 'sliced'"), std::string::npos);
}

TEST(ParsePlans, MalformedReportsOffset) {
  try {
    parse_plans(R"({"apple": {"state" "intact"}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_block);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
}

TEST(ParsePlans, UnknownIsNeverACanonicalValue) {
  Plan p;
  p.name = "apple";
  for (ObjectState s : all_values<ObjectState>()) EXPECT_NE(p.state, std::optional<ObjectState>(s));
  Plan q = p;
  EXPECT_EQ(p, q);
  q.raw_source = "different";
  EXPECT_EQ(p, q);
}

TEST(ParsePlans, EveryTopLevelKeyIsAccounted) {
  SplitMix64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::string doc = "{";
    std::size_t keys = rng.uniform_int(1, 8);
    for (std::size_t k = 0; k < keys; ++k) {
      if (k) doc += ", ";
      std::string key = "\"obj " + std::to_string(k) + "\": ";
      switch (rng.uniform_int(0, 2)) {
        case 0: doc += key + "{\"state\": \"dirty\"}"; break;
        case 1: doc += key + "\"text\""; break;
        default: doc += key + "42"; break;
      }
    }
    doc += "}";
    auto r = parse_plans(doc);
    EXPECT_EQ(r.plans.size() + r.discarded_fragments, keys) << doc;
  }
}

TEST(ParseModelOutput, DuplicatesKeepLast) {
  auto r = parse_model_output(R"(
    {"cup": {"state": "clean"}}
    {"Cup": {"state": "dirty"}}
  )");
  ASSERT_EQ(r.plans.size(), 1u);
  EXPECT_EQ(r.plans[0].state, ObjectState::dirty);
  EXPECT_EQ(r.warnings.back(), "duplicate object 'Cup', kept last occurrence");
}

// Fixture corpus: every file under fixtures/model_outputs with its expected
// plans and warnings in expected.json.
TEST(Corpus, FixturesParseAsDocumented) {
  auto dir = test::test_dir() / "fixtures/model_outputs";
  Json expected = Json::parse(read_text_file(dir / "expected.json"));
  std::size_t files = 0, plans_expected = 0, plans_recovered = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    ++files;
    std::string name = entry.path().filename().string();
    ASSERT_TRUE(expected.contains(name)) << "no expectation for " << name;
    const Json& want = expected[name];
    std::string text = read_text_file(entry.path());
    if (want.contains("error")) {
      try {
        parse_model_output(text);
        ADD_FAILURE() << name << ": expected " << want["error"];
      } catch (const Error& e) {
        EXPECT_EQ(std::string(to_string(e.code())), want["error"].get<std::string>()) << name;
      }
      continue;
    }
    ParseReport r = parse_model_output(text);
    plans_expected += want["plans"].size();
    ASSERT_EQ(r.plans.size(), want["plans"].size()) << name;
    for (std::size_t i = 0; i < r.plans.size(); ++i) {
      Json got = {{"name", r.plans[i].name}};
      Json fields = plan_to_json(r.plans[i]);
      for (auto& [k, v] : fields.items()) got[k] = v;
      EXPECT_EQ(got, want["plans"][i]) << name;
      plans_recovered += got == want["plans"][i];
      EXPECT_FALSE(r.plans[i].raw_source.empty()) << name;
    }
    EXPECT_EQ(Json(r.warnings), want["warnings"]) << name;
    EXPECT_EQ(r.discarded_fragments, want["discarded"].get<std::size_t>()) << name;
  }
  EXPECT_GE(files, 20u);
  EXPECT_EQ(files, expected.size());
  EXPECT_EQ(plans_recovered, plans_expected);
}

TEST(EmitParse, IdentityForRandomPlans) {
  SplitMix64 rng(20240601);
  std::vector<std::string> names;
  for (const auto& e : default_catalog().entries())
    for (const auto& s : e.states) names.push_back(s.name);
  for (int i = 0; i < 1000; ++i) {
    Plan p = test::random_plan(rng, names[rng.uniform_int(0, names.size() - 1)]);
    auto r = parse_model_output(emit_plans({p}));
    ASSERT_EQ(r.plans.size(), 1u);
    EXPECT_EQ(r.plans[0], p) << emit_plans({p});
    EXPECT_TRUE(r.warnings.empty()) << r.warnings.front();
  }
}

TEST(EmitParse, MultiPlanDocumentsAndUnknownFields) {
  SplitMix64 rng(77);
  for (int i = 0; i < 100; ++i) {
    std::vector<Plan> plans;
    std::size_t n = rng.uniform_int(1, 6);
    for (std::size_t k = 0; k < n; ++k) {
      Plan p = test::random_plan(rng, "plate " + std::to_string(k + 1));
      if (rng.uniform() < 0.3) p.state.reset();
      if (rng.uniform() < 0.3) p.grasping_type.reset();
      plans.push_back(p);
    }
    auto r = parse_model_output("Plan:\n```json\n" + emit_plans(plans) + "\n```");
    EXPECT_EQ(r.plans, plans);
    EXPECT_TRUE(r.warnings.empty());
  }
}

TEST(EmitPlans, FieldOrderMatchesAnnotationFormat) {
  Plan p;
  p.name = "apple";
  p.state = ObjectState::intact;
  std::string text = emit_plans({p});
  std::vector<std::string> keys{"color", "size", "shape", "container", "state", "destination", "grasping_type",
                                "placing_type"};
  std::size_t last = 0;
  for (const auto& k : keys) {
    auto at = text.find("\"" + k + "\"");
    ASSERT_NE(at, std::string::npos) << k;
    EXPECT_GT(at, last) << k;
    last = at;
  }
  EXPECT_NE(text.find("\"destination\": null"), std::string::npos);
}

TEST(EmitPlans, OracleOutputMatchesSceneFormat) {
  Scene s = generate_scene({}, 0);
  std::vector<Plan> plans;
  for (const auto& a : s.objects) {
    Plan p = plan_from_expected(ground_truth_plan(a, TaskSpec::make(TaskId::t2)), a);
    plans.push_back(p);
  }
  Json emitted = plans_to_json(plans);
  Json scene = scene_to_json(s)["objects"];
  for (const auto& a : s.objects) {
    for (const char* k : {"color", "size", "shape", "container", "state", "grasping_type", "placing_type"})
      EXPECT_EQ(emitted[a.name][k], scene[a.name][k]) << a.name << "." << k;
  }
}

TEST(StateOnly, DropsEverythingButState) {
  SplitMix64 rng(1);
  std::vector<Plan> plans{test::random_plan(rng, "apple"), test::random_plan(rng, "cup")};
  auto r = parse_model_output(emit_state_only(plans));
  ASSERT_EQ(r.plans.size(), 2u);
  EXPECT_EQ(r.plans[0].state, plans[0].state);
  EXPECT_FALSE(r.plans[0].destination.has_value());
  EXPECT_FALSE(r.plans[1].color.has_value());
}
