#pragma once

// Simulated dense captioning and a rule-based planner that reads captions.
//
// The simulated captioner writes one sentence per object. With probability
// p_state_omit the state qualifier is dropped ("half apple" -> "apple"), the
// failure mode that makes caption-based planning lose state information.
// Each object's draws come from a stream keyed by (seed, scene, object), so
// raising p_state_omit only ever removes more qualifiers for a fixed seed.

#include <algorithm>
#include <string>
#include <vector>

#include "ossa/catalog.hpp"
#include "ossa/oracle.hpp"
#include "ossa/plan_schema.hpp"
#include "ossa/rng.hpp"
#include "ossa/scene_gen.hpp"

namespace ossa {

struct CaptionErrorModel {
  double p_state_omit = 0.0;
  double p_object_miss = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p_state_omit >= 0.0 && p_state_omit <= 1.0) || !(p_object_miss >= 0.0 && p_object_miss <= 1.0))
      throw Error(ErrorCode::invalid_config, "caption error probabilities must lie in [0, 1]");
  }
};

inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0x84222325CBF29CE4ULL;
  for (unsigned char c : s) h = SplitMix64::mix(h ^ c);
  return h;
}

struct CaptionDraws {
  double miss;
  double omit;
};

inline CaptionDraws caption_draws(std::uint64_t seed, const std::string& scene_id, std::size_t object_index) {
  SplitMix64 rng(SplitMix64::stream(seed, {0xCA9710, stable_hash(scene_id), object_index}));
  CaptionDraws d{};
  d.miss = rng.uniform();
  d.omit = rng.uniform();
  return d;
}

// Phrase for one object, with or without its state qualifier.
inline std::string caption_phrase(const ObjectAnnotation& a, bool with_state, const Catalog& catalog) {
  const CatalogEntry* entry = catalog.find_by_label(a.name);
  if (!entry) return canonicalize_label(a.name).base;
  if (!with_state) return entry->category;
  const CatalogState* cs = entry->find_state(a.state);
  return cs ? cs->caption : entry->category;
}

inline std::string simulate_captions(const Scene& scene, const CaptionErrorModel& em,
                                     const Catalog& catalog = default_catalog()) {
  em.validate();
  std::string out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const ObjectAnnotation& a = scene.objects[i];
    CaptionDraws d = caption_draws(em.seed, scene.scene_id, i);
    if (d.miss < em.p_object_miss) continue;
    bool keep_state = !(d.omit < em.p_state_omit);
    out += "a " + a.color + " " + caption_phrase(a, keep_state, catalog) + " on the table.\n";
  }
  return out;
}

// Every qualifier word the catalog uses in captions.
inline std::vector<std::string> state_qualifiers(const Catalog& catalog = default_catalog()) {
  std::vector<std::string> out;
  for (const auto& e : catalog.entries())
    for (const auto& s : e.states)
      for (const auto& q : s.qualifiers)
        if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
  return out;
}

// Reads captions sentence by sentence, recognizes the catalog phrase at the
// end of each sentence and applies the task rules to what it recognized.
// Without a qualifier it assumes the category's bare state. Size and shape
// are not visible in text, so the catalog's first option is assumed.
class RuleBasedTextPlanner {
 public:
  explicit RuleBasedTextPlanner(const Catalog& catalog = default_catalog()) : catalog_(catalog) {}

  std::string plan(const std::string& captions, const TaskSpec& task) const {
    std::vector<ObjectAnnotation> seen;
    std::size_t start = 0;
    while (start < captions.size()) {
      std::size_t end = captions.find_first_of(".\n", start);
      if (end == std::string::npos) end = captions.size();
      if (auto a = read_sentence(captions.substr(start, end - start))) seen.push_back(std::move(*a));
      start = end + 1;
    }
    index_duplicate_names(seen);
    std::vector<Plan> plans;
    for (const auto& a : seen) plans.push_back(plan_from_expected(ground_truth_plan(a, task, catalog_), a));
    return emit_plans(plans);
  }

 private:
  std::optional<ObjectAnnotation> read_sentence(std::string_view raw) const {
    std::string s = detail::normalize_spacing(raw);
    for (std::string_view tail : {" on the table", " on table"})
      if (s.size() > tail.size() && s.ends_with(tail)) s.resize(s.size() - tail.size());
    for (std::string_view art : {"a ", "an ", "the "})
      if (s.starts_with(art)) {
        s.erase(0, art.size());
        break;
      }
    if (s.empty()) return std::nullopt;

    // Longest matching phrase wins ("banana peel" before "bananas").
    const CatalogEntry* best_entry = nullptr;
    const CatalogState* best_state = nullptr;
    std::size_t best_len = 0;
    auto consider = [&](const CatalogEntry& e, const CatalogState* cs, const std::string& phrase) {
      if (phrase.size() <= best_len) return;
      if (s == phrase || (s.size() > phrase.size() && s.ends_with(phrase) && s[s.size() - phrase.size() - 1] == ' ')) {
        best_entry = &e;
        best_state = cs;
        best_len = phrase.size();
      }
    };
    for (const auto& e : catalog_.entries()) {
      for (const auto& cs : e.states) consider(e, &cs, cs.caption);
      consider(e, e.find_state(e.bare_state), e.category);
    }
    if (!best_entry) return std::nullopt;

    std::string color(detail::trim(std::string_view(s).substr(0, s.size() - best_len)));
    return make_annotation(*best_entry, *best_state, color.empty() ? best_entry->colors.front() : color,
                           best_entry->sizes.front(), best_entry->shapes.front(), catalog_);
  }

  const Catalog& catalog_;
};

}  // namespace ossa
