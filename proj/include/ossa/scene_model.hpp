#pragma once

// Annotated scenes: the closed vocabularies used by the annotation format,
// the per-object record, validation, label canonicalization and the dataset
// file format.

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ossa/detail/fixtures.hpp"
#include "ossa/detail/text.hpp"
#include "ossa/error.hpp"

namespace ossa {

using Json = nlohmann::ordered_json;

enum class SizeClass { small, medium, big };
enum class ShapeClass { elongated, irregular, oval, round, spherical, cylindrical, rectangle };
enum class ObjectState { clean, dirty, containing_leftover_food, intact, peel, leftover_food };
enum class Destination { trash_bin, fridge, cupboard, dishwasher, uncertain };
enum class GraspType { top_grasp, edge_grasp };
enum class PlaceType { place, pour };

template <class E>
struct EnumTraits;

template <>
struct EnumTraits<SizeClass> {
  static constexpr std::string_view field = "size";
  static constexpr std::array<std::pair<SizeClass, std::string_view>, 3> entries{{
      {SizeClass::small, "small"},
      {SizeClass::medium, "medium"},
      {SizeClass::big, "big"},
  }};
};

template <>
struct EnumTraits<ShapeClass> {
  static constexpr std::string_view field = "shape";
  static constexpr std::array<std::pair<ShapeClass, std::string_view>, 7> entries{{
      {ShapeClass::elongated, "elongated"},
      {ShapeClass::irregular, "irregular"},
      {ShapeClass::oval, "oval"},
      {ShapeClass::round, "round"},
      {ShapeClass::spherical, "spherical"},
      {ShapeClass::cylindrical, "cylindrical"},
      {ShapeClass::rectangle, "rectangle"},
  }};
};

template <>
struct EnumTraits<ObjectState> {
  static constexpr std::string_view field = "state";
  static constexpr std::array<std::pair<ObjectState, std::string_view>, 6> entries{{
      {ObjectState::clean, "clean"},
      {ObjectState::dirty, "dirty"},
      {ObjectState::containing_leftover_food, "containing leftover food"},
      {ObjectState::intact, "intact"},
      {ObjectState::peel, "peel"},
      {ObjectState::leftover_food, "leftover food"},
  }};
};

template <>
struct EnumTraits<Destination> {
  static constexpr std::string_view field = "destination";
  static constexpr std::array<std::pair<Destination, std::string_view>, 5> entries{{
      {Destination::trash_bin, "trash bin"},
      {Destination::fridge, "fridge"},
      {Destination::cupboard, "cupboard"},
      {Destination::dishwasher, "dishwasher"},
      {Destination::uncertain, "uncertain"},
  }};
};

template <>
struct EnumTraits<GraspType> {
  static constexpr std::string_view field = "grasping_type";
  static constexpr std::array<std::pair<GraspType, std::string_view>, 2> entries{{
      {GraspType::top_grasp, "top grasp"},
      {GraspType::edge_grasp, "edge grasp"},
  }};
};

template <>
struct EnumTraits<PlaceType> {
  static constexpr std::string_view field = "placing_type";
  static constexpr std::array<std::pair<PlaceType, std::string_view>, 2> entries{{
      {PlaceType::place, "place"},
      {PlaceType::pour, "pour"},
  }};
};

template <class E>
constexpr std::string_view to_string(E value) {
  for (const auto& [v, name] : EnumTraits<E>::entries)
    if (v == value) return name;
  return "?";
}

// Exact parse of the serialized form ("trash bin", "leftover food", ...).
template <class E>
constexpr std::optional<E> parse_enum(std::string_view text) {
  for (const auto& [v, name] : EnumTraits<E>::entries)
    if (name == text) return v;
  return std::nullopt;
}

template <class E>
constexpr auto all_values() {
  std::array<E, EnumTraits<E>::entries.size()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = EnumTraits<E>::entries[i].first;
  return out;
}

struct ObjectAnnotation {
  std::string name;
  std::string color;
  SizeClass size = SizeClass::small;
  ShapeClass shape = ShapeClass::round;
  bool container = false;
  ObjectState state = ObjectState::intact;
  Destination destination = Destination::cupboard;  // context-free default
  GraspType grasping_type = GraspType::top_grasp;
  PlaceType placing_type = PlaceType::place;
  bool edible = false;

  bool operator==(const ObjectAnnotation&) const = default;
};

struct Scene {
  std::string scene_id;
  std::optional<std::string> image_ref;
  std::vector<ObjectAnnotation> objects;

  bool operator==(const Scene&) const = default;
};

struct Dataset {
  std::string name;
  std::string version;
  std::string catalog_version;
  std::vector<Scene> scenes;

  bool empty() const { return scenes.empty(); }
  std::size_t object_count() const {
    std::size_t n = 0;
    for (const auto& s : scenes) n += s.objects.size();
    return n;
  }
  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline bool is_container_state(ObjectState s) {
  return s == ObjectState::clean || s == ObjectState::dirty || s == ObjectState::containing_leftover_food;
}
inline bool is_edible_state(ObjectState s) {
  return s == ObjectState::intact || s == ObjectState::peel || s == ObjectState::leftover_food;
}
inline bool is_inedible_state(ObjectState s) { return s == ObjectState::clean || s == ObjectState::dirty; }

inline bool state_allowed(ObjectState s, bool container, bool edible) {
  if (container) return is_container_state(s);
  return edible ? is_edible_state(s) : is_inedible_state(s);
}

inline ValidationResult validate_annotation(const ObjectAnnotation& a) {
  ValidationResult r;
  if (detail::trim(a.name).empty()) r.violations.emplace_back("name must not be empty");
  if (a.container && !is_container_state(a.state))
    r.violations.emplace_back("state not allowed for container");
  if (!a.container && a.edible && !is_edible_state(a.state))
    r.violations.emplace_back("state not allowed for edible non-container");
  if (!a.container && !a.edible && !is_inedible_state(a.state))
    r.violations.emplace_back("state not allowed for inedible non-container");
  if (a.state == ObjectState::containing_leftover_food && !a.container)
    r.violations.emplace_back("containing_leftover_food requires container");
  if (a.placing_type == PlaceType::pour && !a.container)
    r.violations.emplace_back("pour requires container");
  if (a.destination == Destination::uncertain)
    r.violations.emplace_back("stored destination must not be uncertain");
  return r;
}

// ---------------------------------------------------------------------------
// Label canonicalization

// Versioned synonym data: label synonyms, label -> category stem, and
// per-field value synonyms used when normalizing model output.
class SynonymTable {
 public:
  static SynonymTable from_json(const Json& doc) {
    SynonymTable t;
    t.version_ = doc.at("synonym_version").get<std::string>();
    for (const auto& [k, v] : doc.at("labels").items()) t.labels_[k] = v.get<std::string>();
    for (const auto& [k, v] : doc.at("stems").items()) t.stems_[k] = v.get<std::string>();
    for (const auto& [field, table] : doc.at("fields").items())
      for (const auto& [k, v] : table.items()) t.fields_[field][k] = v.get<std::string>();
    return t;
  }

  const std::string& version() const { return version_; }
  const std::map<std::string, std::string>& labels() const { return labels_; }
  const std::map<std::string, std::string>& stems() const { return stems_; }
  const std::map<std::string, std::map<std::string, std::string>>& fields() const { return fields_; }

  std::string map_label(const std::string& base) const {
    auto it = labels_.find(base);
    return it == labels_.end() ? base : it->second;
  }
  std::string stem_of(const std::string& label) const {
    auto it = stems_.find(label);
    return it == stems_.end() ? label : it->second;
  }
  std::optional<std::string> field_value(const std::string& field, const std::string& key) const {
    auto f = fields_.find(field);
    if (f == fields_.end()) return std::nullopt;
    auto it = f->second.find(key);
    if (it == f->second.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::string version_;
  std::map<std::string, std::string> labels_;
  std::map<std::string, std::string> stems_;
  std::map<std::string, std::map<std::string, std::string>> fields_;
};

inline const SynonymTable& default_synonyms() {
  static const SynonymTable table = SynonymTable::from_json(Json::parse(detail::kSynonymsJson));
  return table;
}

struct CanonicalLabel {
  std::string token;  // synonym-mapped label including any index, e.g. "plate 2"
  std::string base;   // token without the index, e.g. "dirty plate"
  std::string stem;   // category stem, e.g. "plate"
  std::optional<int> index;

  bool operator==(const CanonicalLabel&) const = default;
};

inline CanonicalLabel canonicalize_label(std::string_view raw, const SynonymTable& table = default_synonyms()) {
  std::string spaced = detail::normalize_spacing(raw);
  if (spaced.empty()) throw Error(ErrorCode::empty_label, "label is blank");

  CanonicalLabel out;
  std::string base = spaced;
  auto cut = spaced.rfind(' ');
  if (cut != std::string::npos) {
    std::string_view last = std::string_view(spaced).substr(cut + 1);
    if (detail::all_digits(last) && last.size() <= 6) {
      out.index = std::stoi(std::string(last));
      base = spaced.substr(0, cut);
    }
  }
  out.base = table.map_label(base);
  out.stem = table.stem_of(out.base);
  out.token = out.index ? out.base + " " + std::to_string(*out.index) : out.base;
  return out;
}

// ---------------------------------------------------------------------------
// Dataset file format

inline Json annotation_fields_to_json(const ObjectAnnotation& a) {
  Json j = Json::object();
  j["color"] = a.color;
  j["size"] = std::string(to_string(a.size));
  j["shape"] = std::string(to_string(a.shape));
  j["container"] = a.container;
  j["state"] = std::string(to_string(a.state));
  j["destination"] = std::string(to_string(a.destination));
  j["grasping_type"] = std::string(to_string(a.grasping_type));
  j["placing_type"] = std::string(to_string(a.placing_type));
  j["edible"] = a.edible;
  return j;
}

inline Json scene_to_json(const Scene& s) {
  Json j = Json::object();
  j["scene_id"] = s.scene_id;
  if (s.image_ref) j["image_ref"] = *s.image_ref;
  Json objects = Json::object();
  for (const auto& a : s.objects) objects[a.name] = annotation_fields_to_json(a);
  j["objects"] = std::move(objects);
  return j;
}

inline Json dataset_to_json(const Dataset& d) {
  Json j = Json::object();
  j["name"] = d.name;
  j["version"] = d.version;
  j["catalog_version"] = d.catalog_version;
  j["metadata"] = {{"scene_count", d.scenes.size()}, {"object_count", d.object_count()}, {"empty", d.empty()}};
  Json scenes = Json::array();
  for (const auto& s : d.scenes) scenes.push_back(scene_to_json(s));
  j["scenes"] = std::move(scenes);
  return j;
}

inline std::string serialize_dataset(const Dataset& d) { return dataset_to_json(d).dump(2) + "\n"; }

namespace detail {

inline std::string json_path_key(std::string_view key) { return "[\"" + std::string(key) + "\"]"; }

[[noreturn]] inline void schema_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::schema_error, path + ": " + what);
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path + "." + key, "missing field");
  return *it;
}

inline std::string require_string(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) schema_fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline bool require_bool(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_boolean()) schema_fail(path + "." + key, "expected true or false");
  return v.get<bool>();
}

template <class E>
E require_enum(const Json& obj, const char* key, const std::string& path) {
  std::string text = require_string(obj, key, path);
  auto v = parse_enum<E>(text);
  if (!v) schema_fail(path + "." + key, "unknown value '" + text + "'");
  return *v;
}

}  // namespace detail

inline ObjectAnnotation annotation_from_json(const std::string& name, const Json& j, const std::string& path) {
  ObjectAnnotation a;
  a.name = name;
  a.color = detail::require_string(j, "color", path);
  a.size = detail::require_enum<SizeClass>(j, "size", path);
  a.shape = detail::require_enum<ShapeClass>(j, "shape", path);
  a.container = detail::require_bool(j, "container", path);
  a.state = detail::require_enum<ObjectState>(j, "state", path);
  a.destination = detail::require_enum<Destination>(j, "destination", path);
  a.grasping_type = detail::require_enum<GraspType>(j, "grasping_type", path);
  a.placing_type = detail::require_enum<PlaceType>(j, "placing_type", path);
  a.edible = detail::require_bool(j, "edible", path);
  return a;
}

// Scene-level rules: non-empty, unique names, indexed duplicates.
inline ValidationResult validate_scene(const Scene& s) {
  ValidationResult r;
  if (s.scene_id.empty()) r.violations.emplace_back("scene_id must not be empty");
  if (s.objects.empty()) r.violations.emplace_back("scene has no objects");
  std::set<std::string> names;
  std::map<std::string, std::vector<std::optional<int>>> by_base;
  for (const auto& a : s.objects) {
    for (auto& v : validate_annotation(a).violations) r.violations.push_back(a.name + ": " + v);
    if (!names.insert(a.name).second) r.violations.push_back(a.name + ": duplicate object name");
    if (detail::trim(a.name).empty()) continue;
    auto label = canonicalize_label(a.name);
    by_base[label.base].push_back(label.index);
  }
  for (const auto& [base, indices] : by_base) {
    if (indices.size() < 2) continue;
    for (const auto& idx : indices)
      if (!idx) {
        r.violations.push_back(base + ": repeated category name without index");
        break;
      }
  }
  return r;
}

inline Scene scene_from_json(const Json& j, const std::string& path) {
  Scene s;
  s.scene_id = detail::require_string(j, "scene_id", path);
  if (auto it = j.find("image_ref"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) detail::schema_fail(path + ".image_ref", "expected a string");
    s.image_ref = it->get<std::string>();
  }
  const Json& objects = detail::require(j, "objects", path);
  if (!objects.is_object()) detail::schema_fail(path + ".objects", "expected an object keyed by name");
  for (const auto& [name, body] : objects.items()) {
    std::string opath = path + ".objects" + detail::json_path_key(name);
    s.objects.push_back(annotation_from_json(name, body, opath));
    auto v = validate_annotation(s.objects.back());
    if (!v.ok()) detail::schema_fail(opath, v.violations.front());
  }
  auto v = validate_scene(s);
  if (!v.ok()) detail::schema_fail(path, v.violations.front());
  return s;
}

inline Dataset dataset_from_json(const Json& j) {
  Dataset d;
  d.name = detail::require_string(j, "name", "$");
  d.version = detail::require_string(j, "version", "$");
  if (auto it = j.find("catalog_version"); it != j.end() && it->is_string()) d.catalog_version = it->get<std::string>();
  const Json& scenes = detail::require(j, "scenes", "$");
  if (!scenes.is_array()) detail::schema_fail("$.scenes", "expected an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::string path = "$.scenes[" + std::to_string(i) + "]";
    d.scenes.push_back(scene_from_json(scenes[i], path));
    if (!ids.insert(d.scenes.back().scene_id).second)
      detail::schema_fail(path + ".scene_id", "duplicate scene_id '" + d.scenes.back().scene_id + "'");
  }
  return d;
}

inline Json parse_json_document(std::string_view text, std::string_view origin) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::parse_error, std::string(origin) + ": line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + " (offset " + std::to_string(offset) +
                                            "): " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline Dataset parse_dataset(std::string_view text, std::string_view origin = "<memory>") {
  return dataset_from_json(parse_json_document(text, origin));
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path), path.string());
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_text_file(path, serialize_dataset(d));
}

}  // namespace ossa
