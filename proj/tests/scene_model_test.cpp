#include <gtest/gtest.h>

#include <set>

#include "ossa/scene_gen.hpp"
#include "test_support.hpp"

using namespace ossa;
using ossa::test::object;

namespace {

template <class E>
void expect_enum_bijection() {
  std::set<std::string_view> seen;
  for (E v : all_values<E>()) {
    auto s = to_string(v);
    EXPECT_TRUE(seen.insert(s).second) << s;
    EXPECT_EQ(parse_enum<E>(s), v) << s;
  }
  EXPECT_FALSE(parse_enum<E>("sliced").has_value());
}

bool has_violation(const ValidationResult& r, const std::string& text) {
  return std::find(r.violations.begin(), r.violations.end(), text) != r.violations.end();
}

}  // namespace

TEST(Enums, ParseEmitIsABijection) {
  expect_enum_bijection<SizeClass>();
  expect_enum_bijection<ShapeClass>();
  expect_enum_bijection<ObjectState>();
  expect_enum_bijection<Destination>();
  expect_enum_bijection<GraspType>();
  expect_enum_bijection<PlaceType>();
}

TEST(Enums, SerializedWithSpaces) {
  EXPECT_EQ(to_string(Destination::trash_bin), "trash bin");
  EXPECT_EQ(to_string(GraspType::top_grasp), "top grasp");
  EXPECT_EQ(to_string(ObjectState::leftover_food), "leftover food");
  EXPECT_EQ(to_string(ObjectState::containing_leftover_food), "containing leftover food");
  EXPECT_EQ(all_values<ShapeClass>().size(), 7u);
  EXPECT_EQ(all_values<SizeClass>().size(), 3u);
}

TEST(ValidateAnnotation, BowlWithSoupIsValid) {
  ObjectAnnotation a = object("bowl", ObjectState::containing_leftover_food);
  EXPECT_EQ(a.name, "bowl with soup");
  EXPECT_TRUE(a.container);
  EXPECT_TRUE(validate_annotation(a).ok());
}

TEST(ValidateAnnotation, EdibleNonContainerCannotBeClean) {
  ObjectAnnotation a = object("apple", ObjectState::intact);
  a.state = ObjectState::clean;
  auto r = validate_annotation(a);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_violation(r, "state not allowed for edible non-container"));
}

TEST(ValidateAnnotation, ContainingLeftoverRequiresContainer) {
  ObjectAnnotation a = object("fork", ObjectState::clean);
  a.state = ObjectState::containing_leftover_food;
  auto r = validate_annotation(a);
  EXPECT_TRUE(has_violation(r, "containing_leftover_food requires container"));
  EXPECT_TRUE(has_violation(r, "state not allowed for inedible non-container"));
}

TEST(ValidateAnnotation, ReportsEveryViolation) {
  ObjectAnnotation a = object("fork", ObjectState::clean);
  a.name = " ";
  a.state = ObjectState::containing_leftover_food;
  a.placing_type = PlaceType::pour;
  a.destination = Destination::uncertain;
  auto r = validate_annotation(a);
  EXPECT_EQ(r.violations.size(), 5u);
  EXPECT_TRUE(has_violation(r, "pour requires container"));
  EXPECT_TRUE(has_violation(r, "stored destination must not be uncertain"));
  EXPECT_TRUE(has_violation(r, "name must not be empty"));
}

TEST(ValidateAnnotation, ContainerWithFoodStateIsRejected) {
  ObjectAnnotation a = object("plate", ObjectState::clean);
  a.state = ObjectState::peel;
  EXPECT_TRUE(has_violation(validate_annotation(a), "state not allowed for container"));
}

TEST(CanonicalizeLabel, StripsIndex) {
  auto l = canonicalize_label("Plate 2");
  EXPECT_EQ(l.token, "plate 2");
  EXPECT_EQ(l.stem, "plate");
  EXPECT_EQ(l.index, 2);
}

TEST(CanonicalizeLabel, IdentityAndSynonyms) {
  EXPECT_EQ(canonicalize_label("trash bin").token, "trash bin");
  EXPECT_EQ(canonicalize_label("garbage bin").token, "trash bin");
  EXPECT_EQ(canonicalize_label("  Dirty   Plate ").token, "dirty plate");
  EXPECT_EQ(canonicalize_label("dirty plate").stem, "plate");
  EXPECT_EQ(canonicalize_label("bow with soup").token, "bowl with soup");
  EXPECT_EQ(canonicalize_label("sliced oranges 3").token, "half orange 3");
  EXPECT_EQ(canonicalize_label("banana peel").stem, "bananas");
}

TEST(CanonicalizeLabel, BlankIsAnError) {
  try {
    canonicalize_label("   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_label);
  }
}

TEST(CanonicalizeLabel, Idempotent) {
  std::vector<std::string> labels{"Plate 2", "garbage bin", "  BOWL with   soup", "sliced oranges",
                                  "half-apple",  "fork 10",     "x",                  "dirty_cup 1"};
  for (const auto& c : default_catalog().entries()) {
    labels.push_back(c.category);
    for (const auto& s : c.states) labels.push_back(s.name + " 1");
  }
  for (const auto& [k, v] : default_synonyms().labels()) labels.push_back(k);
  for (const auto& raw : labels) {
    auto once = canonicalize_label(raw);
    EXPECT_EQ(canonicalize_label(once.token), once) << raw;
  }
}

TEST(SynonymTable, DestinationLikeLabelsMapIntoTheEnumeration) {
  const auto& table = default_synonyms();
  for (const auto& [field, entries] : table.fields()) {
    for (const auto& [raw, canonical] : entries) {
      bool ok = false;
      if (field == "size") ok = parse_enum<SizeClass>(canonical).has_value();
      else if (field == "shape") ok = parse_enum<ShapeClass>(canonical).has_value();
      else if (field == "state") ok = parse_enum<ObjectState>(canonical).has_value();
      else if (field == "destination") ok = parse_enum<Destination>(canonical).has_value();
      else if (field == "grasping_type") ok = parse_enum<GraspType>(canonical).has_value();
      else if (field == "placing_type") ok = parse_enum<PlaceType>(canonical).has_value();
      else if (field == "container") ok = canonical == "true" || canonical == "false";
      EXPECT_TRUE(ok) << field << ": " << raw << " -> " << canonical;
    }
  }
  // Label synonyms that name a place land on a destination value.
  for (const auto& raw : {"garbage bin", "trash can", "refrigerator", "bin"}) {
    auto it = table.labels().find(raw);
    if (it == table.labels().end()) continue;
    EXPECT_TRUE(parse_enum<Destination>(it->second).has_value()) << raw;
  }
  EXPECT_FALSE(table.field_value("state", "sliced").has_value());
}

TEST(LoadDataset, MinimalFixture) {
  Dataset d = load_dataset(test::test_dir() / "fixtures/scenes/minimal.json");
  ASSERT_EQ(d.scenes.size(), 1u);
  ASSERT_EQ(d.scenes[0].objects.size(), 1u);
  EXPECT_EQ(d.scenes[0].objects[0].state, ObjectState::containing_leftover_food);
}

TEST(LoadDataset, UnknownStateNamesTheField) {
  try {
    load_dataset(test::test_dir() / "fixtures/scenes/sliced_state.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::schema_error);
    std::string msg = e.what();
    EXPECT_NE(msg.find("$.scenes[0].objects[\"apple\"].state"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sliced"), std::string::npos) << msg;
  }
}

TEST(LoadDataset, MalformedDocumentReportsLine) {
  try {
    load_dataset(test::test_dir() / "fixtures/scenes/malformed.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, MissingFileIsIoError) {
  try {
    load_dataset("/nonexistent/ossa.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_error);
  }
}

TEST(LoadDataset, SceneRulesAreEnforced) {
  Json doc = dataset_to_json(generate_dataset({.seed = 1, .scene_count = 1}));
  Json dup = doc;
  dup["scenes"].push_back(dup["scenes"][0]);
  EXPECT_THROW(dataset_from_json(dup), Error);

  Json empty = doc;
  empty["scenes"][0]["objects"] = Json::object();
  EXPECT_THROW(dataset_from_json(empty), Error);

  Json unindexed = doc;
  Json body = unindexed["scenes"][0]["objects"].begin().value();
  unindexed["scenes"][0]["objects"] = Json::object();
  unindexed["scenes"][0]["objects"]["fork"] = body;
  unindexed["scenes"][0]["objects"]["fork 1"] = body;
  // "fork" and "fork 1" share a base, so the bare name is missing its index
  // (body validity aside).
  EXPECT_THROW(dataset_from_json(unindexed), Error);
}

TEST(LoadDataset, RoundTripGenerated) {
  Dataset d = generate_dataset({});
  auto path = std::filesystem::temp_directory_path() / "ossa_roundtrip.json";
  save_dataset(d, path);
  EXPECT_EQ(load_dataset(path), d);
  std::filesystem::remove(path);
}

TEST(LoadDataset, RoundTripManySeeds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Dataset d = generate_dataset({.seed = seed, .scene_count = 8, .min_objects = 1, .max_objects = 9});
    EXPECT_EQ(parse_dataset(serialize_dataset(d)), d) << seed;
  }
}

TEST(LoadDataset, ImageRefRoundTrips) {
  Dataset d = generate_dataset({.seed = 3, .scene_count = 2});
  d.scenes[1].image_ref = "images/scene-001.png";
  Dataset back = parse_dataset(serialize_dataset(d));
  EXPECT_EQ(back, d);
  EXPECT_FALSE(back.scenes[0].image_ref.has_value());
}
