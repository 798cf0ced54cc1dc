#pragma once

// Seeded synthetic scenes. Scene i of a dataset depends only on
// (config.seed, i), so scenes can be produced in any order or in parallel.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ossa/catalog.hpp"
#include "ossa/oracle.hpp"
#include "ossa/rng.hpp"

namespace ossa {

struct GenConfig {
  std::uint64_t seed = 42;
  std::size_t scene_count = 40;
  std::size_t min_objects = 3;
  std::size_t max_objects = 6;
  // Missing categories get weight 1 unless `only_listed_categories` is set.
  std::map<std::string, double> category_weights;
  // category -> state -> weight; missing states default to weight 1.
  std::map<std::string, std::map<ObjectState, double>> state_weights;
  bool only_listed_categories = false;
  std::string dataset_name = "ossa-synthetic";

  bool operator==(const GenConfig&) const = default;
};

inline constexpr std::string_view kGeneratorVersion = "gen-v1";

struct ResolvedWeights {
  std::vector<const CatalogEntry*> categories;
  std::vector<double> category_weights;
  std::vector<std::vector<double>> state_weights;  // parallel to each entry's states
};

inline ResolvedWeights resolve_weights(const GenConfig& config, const Catalog& catalog) {
  if (catalog.empty()) throw Error(ErrorCode::invalid_config, "catalog is empty");
  if (config.min_objects < 1) throw Error(ErrorCode::invalid_config, "objects_per_scene minimum must be >= 1");
  if (config.min_objects > config.max_objects)
    throw Error(ErrorCode::invalid_config, "objects_per_scene minimum exceeds maximum");
  for (const auto& [name, w] : config.category_weights) {
    if (!catalog.find(name)) throw Error(ErrorCode::invalid_config, "unknown category '" + name + "'");
    if (!(w >= 0.0)) throw Error(ErrorCode::invalid_config, "negative weight for category '" + name + "'");
  }
  for (const auto& [name, states] : config.state_weights) {
    const CatalogEntry* e = catalog.find(name);
    if (!e) throw Error(ErrorCode::invalid_config, "unknown category '" + name + "' in state weights");
    for (const auto& [s, w] : states) {
      if (!e->find_state(s))
        throw Error(ErrorCode::invalid_config,
                    "state '" + std::string(to_string(s)) + "' is not listed for '" + name + "'");
      if (!(w >= 0.0)) throw Error(ErrorCode::invalid_config, "negative state weight for '" + name + "'");
    }
  }

  ResolvedWeights r;
  double total = 0.0;
  for (const auto& e : catalog.entries()) {
    double w = config.only_listed_categories ? 0.0 : 1.0;
    if (auto it = config.category_weights.find(e.category); it != config.category_weights.end()) w = it->second;
    std::vector<double> sw;
    double state_total = 0.0;
    auto listed = config.state_weights.find(e.category);
    for (const auto& cs : e.states) {
      double v = 1.0;
      if (listed != config.state_weights.end()) {
        auto it = listed->second.find(cs.state);
        v = it == listed->second.end() ? 0.0 : it->second;
      }
      sw.push_back(v);
      state_total += v;
    }
    if (w > 0.0 && state_total <= 0.0)
      throw Error(ErrorCode::invalid_config, "all state weights are zero for '" + e.category + "'");
    r.categories.push_back(&e);
    r.category_weights.push_back(w);
    r.state_weights.push_back(std::move(sw));
    total += w;
  }
  if (total <= 0.0) throw Error(ErrorCode::invalid_config, "category weights sum to zero");
  return r;
}

inline void validate_config(const GenConfig& config, const Catalog& catalog = default_catalog()) {
  (void)resolve_weights(config, catalog);
}

// Annotation for one category state, with the stored destination set to the
// context-free default (leftovers are stored as kept, i.e. fridge).
inline ObjectAnnotation make_annotation(const CatalogEntry& entry, const CatalogState& cs, std::string color,
                                        SizeClass size, ShapeClass shape, const Catalog& catalog) {
  ObjectAnnotation a;
  a.name = cs.name;
  a.color = std::move(color);
  a.size = size;
  a.shape = shape;
  a.container = entry.container;
  a.edible = entry.edible;
  a.state = cs.state;
  a.placing_type = PlaceType::place;
  a.grasping_type = expected_grasp(a, catalog);
  a.destination = classify_leftover(a.state, a.container) == LeftoverClass::none ? default_destination(a, catalog)
                                                                                 : Destination::fridge;
  return a;
}

// Appends " 1", " 2", ... to names that occur more than once, in scene order.
inline void index_duplicate_names(std::vector<ObjectAnnotation>& objects) {
  std::map<std::string, int> counts;
  for (const auto& a : objects) ++counts[a.name];
  std::map<std::string, int> next;
  for (auto& a : objects)
    if (counts[a.name] > 1) a.name += " " + std::to_string(++next[a.name]);
}

inline std::string scene_id_for(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "scene-" + digits;
}

inline Scene generate_scene(const GenConfig& config, std::size_t scene_index,
                            const Catalog& catalog = default_catalog()) {
  ResolvedWeights w = resolve_weights(config, catalog);
  SplitMix64 rng(SplitMix64::stream(config.seed, {0x5CE7E, scene_index}));

  Scene scene;
  scene.scene_id = scene_id_for(scene_index);
  auto n = rng.uniform_int(config.min_objects, config.max_objects);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::size_t ci = rng.weighted(w.category_weights);
    const CatalogEntry& entry = *w.categories[ci];
    const CatalogState& cs = entry.states[rng.weighted(w.state_weights[ci])];
    std::string color = entry.colors[rng.uniform_int(0, entry.colors.size() - 1)];
    SizeClass size = entry.sizes[rng.uniform_int(0, entry.sizes.size() - 1)];
    ShapeClass shape = entry.shapes[rng.uniform_int(0, entry.shapes.size() - 1)];
    scene.objects.push_back(make_annotation(entry, cs, std::move(color), size, shape, catalog));
  }
  index_duplicate_names(scene.objects);
  return scene;
}

inline Dataset generate_dataset(const GenConfig& config, const Catalog& catalog = default_catalog()) {
  validate_config(config, catalog);
  Dataset d;
  d.name = config.dataset_name;
  d.catalog_version = catalog.version();
  d.version = std::string(kGeneratorVersion) + "+" + catalog.version() + "+seed" + std::to_string(config.seed);
  d.scenes.reserve(config.scene_count);
  for (std::size_t i = 0; i < config.scene_count; ++i) d.scenes.push_back(generate_scene(config, i, catalog));
  return d;
}

// ---------------------------------------------------------------------------
// Config file: {"seed", "scene_count", "objects_per_scene": [min, max],
// "category_weights": {...}, "state_weights": {category: {state: w}},
// "only_listed_categories", "dataset_name"}. Absent keys keep defaults.

inline GenConfig gen_config_from_json(const Json& j, GenConfig base = {}) {
  auto fail = [](const std::string& what) -> void { throw Error(ErrorCode::invalid_config, what); };
  if (!j.is_object()) fail("generator config must be an object");
  try {
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scene_count")) base.scene_count = j.at("scene_count").get<std::size_t>();
    if (j.contains("objects_per_scene")) {
      const auto& r = j.at("objects_per_scene");
      if (!r.is_array() || r.size() != 2) fail("objects_per_scene must be [min, max]");
      base.min_objects = r[0].get<std::size_t>();
      base.max_objects = r[1].get<std::size_t>();
    }
    if (j.contains("category_weights"))
      base.category_weights = j.at("category_weights").get<std::map<std::string, double>>();
    if (j.contains("only_listed_categories")) base.only_listed_categories = j.at("only_listed_categories").get<bool>();
    if (j.contains("dataset_name")) base.dataset_name = j.at("dataset_name").get<std::string>();
    if (j.contains("state_weights")) {
      base.state_weights.clear();
      for (const auto& [cat, states] : j.at("state_weights").items())
        for (const auto& [state, w] : states.items()) {
          auto s = parse_enum<ObjectState>(state);
          if (!s) fail("unknown state '" + state + "' in state_weights");
          base.state_weights[cat][*s] = w.get<double>();
        }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("generator config: ") + e.what());
  }
  return base;
}

inline Json gen_config_to_json(const GenConfig& c) {
  Json j = Json::object();
  j["seed"] = c.seed;
  j["scene_count"] = c.scene_count;
  j["objects_per_scene"] = {c.min_objects, c.max_objects};
  Json cw = Json::object();
  for (const auto& [k, v] : c.category_weights) cw[k] = v;
  j["category_weights"] = std::move(cw);
  Json sw = Json::object();
  for (const auto& [cat, states] : c.state_weights)
    for (const auto& [s, w] : states) sw[cat][std::string(to_string(s))] = w;
  j["state_weights"] = std::move(sw);
  j["only_listed_categories"] = c.only_listed_categories;
  j["dataset_name"] = c.dataset_name;
  return j;
}

// Categories whose catalog entry lists exactly two states.
inline GenConfig paired_state_config(GenConfig base = {}, const Catalog& catalog = default_catalog()) {
  base.category_weights.clear();
  for (const auto& e : catalog.entries()) base.category_weights[e.category] = e.states.size() == 2 ? 1.0 : 0.0;
  base.only_listed_categories = true;
  return base;
}

}  // namespace ossa
