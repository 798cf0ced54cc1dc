#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ossa/scene_model.hpp"

namespace ossa {

struct CatalogState {
  ObjectState state;
  std::string name;                     // annotation name, e.g. "half apple"
  std::string caption;                  // phrase a captioner would use, e.g. "half apple"
  std::vector<std::string> qualifiers;  // state words inside `caption`
  std::optional<Destination> destination;
};

struct CatalogEntry {
  std::string category;
  bool container = false;
  bool edible = false;
  std::vector<std::string> colors;
  std::vector<SizeClass> sizes;
  std::vector<ShapeClass> shapes;
  ObjectState bare_state = ObjectState::intact;  // assumed when a caption carries no qualifier
  std::vector<CatalogState> states;
  std::optional<GraspType> grasping_type;  // overrides the shape/size grasp rule

  const CatalogState* find_state(ObjectState s) const {
    for (const auto& cs : states)
      if (cs.state == s) return &cs;
    return nullptr;
  }
  std::vector<ObjectState> allowed_states() const {
    std::vector<ObjectState> out;
    for (const auto& cs : states) out.push_back(cs.state);
    return out;
  }
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::string version, std::vector<CatalogEntry> entries)
      : version_(std::move(version)), entries_(std::move(entries)) {
    check();
  }

  static Catalog from_json(const Json& doc) {
    std::vector<CatalogEntry> entries;
    for (const auto& e : doc.at("categories")) {
      CatalogEntry c;
      std::string path = "catalog." + e.at("category").get<std::string>();
      c.category = e.at("category").get<std::string>();
      c.container = e.at("container").get<bool>();
      c.edible = e.at("edible").get<bool>();
      c.colors = e.at("colors").get<std::vector<std::string>>();
      for (const auto& s : e.at("sizes")) c.sizes.push_back(parse_or_throw<SizeClass>(s, path));
      for (const auto& s : e.at("shapes")) c.shapes.push_back(parse_or_throw<ShapeClass>(s, path));
      c.bare_state = parse_or_throw<ObjectState>(e.at("bare_state"), path);
      if (auto g = e.find("grasping_type"); g != e.end()) c.grasping_type = parse_or_throw<GraspType>(*g, path);
      for (const auto& s : e.at("states")) {
        CatalogState cs;
        cs.state = parse_or_throw<ObjectState>(s.at("state"), path);
        cs.name = s.at("name").get<std::string>();
        cs.caption = s.at("caption").get<std::string>();
        cs.qualifiers = s.at("qualifiers").get<std::vector<std::string>>();
        if (auto d = s.find("destination"); d != s.end()) cs.destination = parse_or_throw<Destination>(*d, path);
        c.states.push_back(std::move(cs));
      }
      entries.push_back(std::move(c));
    }
    return Catalog(doc.at("catalog_version").get<std::string>(), std::move(entries));
  }

  const std::string& version() const { return version_; }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  const CatalogEntry* find(const std::string& category) const {
    for (const auto& e : entries_)
      if (e.category == category) return &e;
    return nullptr;
  }

  // Category entry for an annotation name ("half apple 2" -> apple).
  const CatalogEntry* find_by_label(const std::string& label) const {
    if (detail::trim(label).empty()) return nullptr;
    return find(canonicalize_label(label).stem);
  }

 private:
  template <class E>
  static E parse_or_throw(const Json& v, const std::string& path) {
    auto e = parse_enum<E>(v.get<std::string>());
    if (!e) throw Error(ErrorCode::schema_error, path + ": unknown value '" + v.get<std::string>() + "'");
    return *e;
  }

  void check() const {
    for (const auto& e : entries_) {
      if (e.states.empty() || e.colors.empty() || e.sizes.empty() || e.shapes.empty())
        throw Error(ErrorCode::invalid_config, "catalog entry '" + e.category + "' has an empty option list");
      for (const auto& s : e.states)
        if (!state_allowed(s.state, e.container, e.edible))
          throw Error(ErrorCode::invalid_config, "catalog entry '" + e.category + "' lists incompatible state '" +
                                                     std::string(to_string(s.state)) + "'");
      if (!e.find_state(e.bare_state))
        throw Error(ErrorCode::invalid_config, "catalog entry '" + e.category + "' bare_state is not listed");
    }
  }

  std::string version_;
  std::vector<CatalogEntry> entries_;
};

inline const Catalog& default_catalog() {
  static const Catalog catalog = Catalog::from_json(Json::parse(detail::kCatalogJson));
  return catalog;
}

}  // namespace ossa
