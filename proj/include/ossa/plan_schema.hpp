#pragma once

// Object manipulation plans as emitted by a model: locate the structured
// part of a reply, read it tolerantly and map free-form values onto the
// closed vocabularies. Values that cannot be mapped become Unknown
// (std::nullopt) rather than failing the parse, so scoring can give
// per-field credit.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ossa/loose_json.hpp"
#include "ossa/oracle.hpp"
#include "ossa/scene_model.hpp"

namespace ossa {

struct ObjectManipulationPlan {
  std::string name;
  std::optional<std::string> color;
  std::optional<SizeClass> size;
  std::optional<ShapeClass> shape;
  std::optional<bool> container;
  std::optional<ObjectState> state;
  std::optional<Destination> destination;
  std::optional<GraspType> grasping_type;
  std::optional<PlaceType> placing_type;
  std::string raw_source;  // text the plan was read from; not part of equality

  bool operator==(const ObjectManipulationPlan& o) const {
    return name == o.name && color == o.color && size == o.size && shape == o.shape && container == o.container &&
           state == o.state && destination == o.destination && grasping_type == o.grasping_type &&
           placing_type == o.placing_type;
  }
};

using Plan = ObjectManipulationPlan;

struct ParseReport {
  std::vector<Plan> plans;
  std::vector<std::string> warnings;
  std::size_t discarded_fragments = 0;
};

enum class PlanField { color, size, shape, container, state, destination, grasping_type, placing_type };

constexpr std::string_view to_string(PlanField f) {
  switch (f) {
    case PlanField::color: return "color";
    case PlanField::size: return "size";
    case PlanField::shape: return "shape";
    case PlanField::container: return "container";
    case PlanField::state: return "state";
    case PlanField::destination: return "destination";
    case PlanField::grasping_type: return "grasping_type";
    case PlanField::placing_type: return "placing_type";
  }
  return "?";
}

// std::monostate is the Unknown sentinel.
using FieldValue = std::variant<std::monostate, std::string, bool, SizeClass, ShapeClass, ObjectState, Destination,
                                GraspType, PlaceType>;

inline bool is_unknown(const FieldValue& v) { return std::holds_alternative<std::monostate>(v); }

namespace detail {

template <class E>
FieldValue lookup_enum(std::string_view field, const std::string& token, const SynonymTable& table) {
  if (auto e = parse_enum<E>(token)) return *e;
  if (auto mapped = table.field_value(std::string(field), token))
    if (auto e = parse_enum<E>(*mapped)) return *e;
  return std::monostate{};
}

}  // namespace detail

inline FieldValue normalize_value(PlanField field, std::string_view raw, const SynonymTable& table = default_synonyms()) {
  std::string token = detail::normalize_spacing(raw);
  if (token.empty()) return std::monostate{};
  // Strip sentence punctuation models like to add ("fridge.").
  while (!token.empty() && (token.back() == '.' || token.back() == '!' || token.back() == ';')) token.pop_back();
  if (token.empty()) return std::monostate{};
  switch (field) {
    case PlanField::color: return token;
    case PlanField::container: {
      auto v = table.field_value("container", token);
      if (!v) return std::monostate{};
      return *v == "true";
    }
    case PlanField::size: return detail::lookup_enum<SizeClass>("size", token, table);
    case PlanField::shape: return detail::lookup_enum<ShapeClass>("shape", token, table);
    case PlanField::state: return detail::lookup_enum<ObjectState>("state", token, table);
    case PlanField::destination: {
      // Route labels such as "garbage bin" through the label synonyms first.
      FieldValue v = detail::lookup_enum<Destination>("destination", token, table);
      if (is_unknown(v)) v = detail::lookup_enum<Destination>("destination", table.map_label(token), table);
      return v;
    }
    case PlanField::grasping_type: return detail::lookup_enum<GraspType>("grasping_type", token, table);
    case PlanField::placing_type: return detail::lookup_enum<PlaceType>("placing_type", token, table);
  }
  return std::monostate{};
}

// ---------------------------------------------------------------------------
// Locating structured content

struct StructuredBlock {
  std::string text;
  std::size_t offset = 0;
  bool fenced = false;
  bool member_list = false;  // `"name": {...}, ...` without enclosing braces
};

namespace detail {

inline bool opens_string(std::string_view s, std::size_t i) {
  if (s[i] == '"') return true;
  if (s[i] != '\'') return false;
  // A single quote opens a string only where a JSON token may start.
  std::size_t j = i;
  while (j > 0 && is_space(s[j - 1])) --j;
  if (j == 0) return false;
  char p = s[j - 1];
  return p == '{' || p == '[' || p == ',' || p == ':';
}

// Index one past the brace matching s[open], or npos.
inline std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (opens_string(s, i)) {
      char q = c;
      for (++i; i < s.size() && s[i] != q; ++i)
        if (s[i] == '\\') ++i;
      if (i >= s.size()) return std::string_view::npos;
      continue;
    }
    if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

// Start of a `"key":` (or `'key':`) immediately before position `brace`.
inline std::optional<std::size_t> key_prefix_start(std::string_view s, std::size_t brace) {
  std::size_t i = brace;
  while (i > 0 && is_space(s[i - 1])) --i;
  if (i == 0 || s[i - 1] != ':') return std::nullopt;
  --i;
  while (i > 0 && is_space(s[i - 1])) --i;
  if (i == 0 || (s[i - 1] != '"' && s[i - 1] != '\'')) return std::nullopt;
  char q = s[i - 1];
  std::size_t close = i - 1;
  if (close == 0) return std::nullopt;
  auto open = s.rfind(q, close - 1);
  if (open == std::string_view::npos || open + 1 == close) return std::nullopt;
  if (s.substr(open + 1, close - open - 1).find('\n') != std::string_view::npos) return std::nullopt;
  return open;
}

// End of a `, "key": {...}` continuation starting at `from`, or npos.
inline std::size_t member_continuation(std::string_view s, std::size_t from) {
  std::size_t i = from;
  while (i < s.size() && is_space(s[i])) ++i;
  if (i >= s.size() || s[i] != ',') return std::string_view::npos;
  ++i;
  while (i < s.size() && is_space(s[i])) ++i;
  if (i >= s.size() || (s[i] != '"' && s[i] != '\'')) return std::string_view::npos;
  auto close = s.find(s[i], i + 1);
  if (close == std::string_view::npos) return std::string_view::npos;
  i = close + 1;
  while (i < s.size() && is_space(s[i])) ++i;
  if (i >= s.size() || s[i] != ':') return std::string_view::npos;
  ++i;
  while (i < s.size() && is_space(s[i])) ++i;
  if (i >= s.size() || s[i] != '{') return std::string_view::npos;
  return match_brace(s, i);
}

inline void scan_blocks(std::string_view s, std::size_t base, bool fenced, std::vector<StructuredBlock>& out) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '{') {
      ++i;
      continue;
    }
    std::size_t end = match_brace(s, i);
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    StructuredBlock b;
    b.fenced = fenced;
    std::size_t start = i;
    if (auto k = key_prefix_start(s, i)) {
      start = *k;
      b.member_list = true;
      for (std::size_t more; (more = member_continuation(s, end)) != std::string_view::npos;) end = more;
    }
    b.offset = base + start;
    b.text = std::string(s.substr(start, end - start));
    out.push_back(std::move(b));
    i = end;
  }
}

struct Fence {
  std::size_t begin;
  std::size_t end;
};

inline std::vector<Fence> fenced_regions(std::string_view text) {
  std::vector<Fence> out;
  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string_view::npos) {
    std::size_t body = text.find('\n', pos + 3);
    if (body == std::string_view::npos) break;
    ++body;
    std::size_t close = text.find("```", body);
    if (close == std::string_view::npos) break;
    out.push_back({body, close});
    pos = close + 3;
  }
  return out;
}

}  // namespace detail

inline std::vector<StructuredBlock> extract_structured_block(std::string_view text) {
  std::vector<StructuredBlock> blocks;
  for (const auto& f : detail::fenced_regions(text))
    detail::scan_blocks(text.substr(f.begin, f.end - f.begin), f.begin, true, blocks);
  if (blocks.empty()) detail::scan_blocks(text, 0, false, blocks);
  if (blocks.empty()) throw Error(ErrorCode::no_structured_content, "no balanced {...} block in model output");
  return blocks;
}

// ---------------------------------------------------------------------------
// Parsing plans

namespace detail {

inline std::optional<PlanField> plan_field_for_key(const std::string& raw_key) {
  std::string k = normalize_spacing(raw_key);
  for (char& c : k)
    if (c == ' ') c = '_';
  static const std::map<std::string, PlanField> keys = {
      {"color", PlanField::color},
      {"colour", PlanField::color},
      {"size", PlanField::size},
      {"shape", PlanField::shape},
      {"container", PlanField::container},
      {"is_container", PlanField::container},
      {"state", PlanField::state},
      {"object_state", PlanField::state},
      {"status", PlanField::state},
      {"condition", PlanField::state},
      {"destination", PlanField::destination},
      {"dest", PlanField::destination},
      {"target_location", PlanField::destination},
      {"grasping_type", PlanField::grasping_type},
      {"grasp_type", PlanField::grasping_type},
      {"grasping", PlanField::grasping_type},
      {"grasp", PlanField::grasping_type},
      {"placing_type", PlanField::placing_type},
      {"place_type", PlanField::placing_type},
      {"placing", PlanField::placing_type},
      {"placement", PlanField::placing_type},
  };
  auto it = keys.find(k);
  if (it == keys.end()) return std::nullopt;
  return it->second;
}

inline bool is_name_key(const std::string& raw_key) {
  std::string k = normalize_spacing(raw_key);
  return k == "name" || k == "object name" || k == "object";
}

inline bool has_plan_fields(const LooseValue& v) {
  for (const auto& m : v.members)
    if (plan_field_for_key(m.key)) return true;
  return false;
}

inline bool is_wrapper(const LooseValue& v) {
  if (!v.is_object() || v.members.empty() || has_plan_fields(v)) return false;
  for (const auto& m : v.members)
    if (!m.value.is_object() && !m.value.is_array()) return false;
  return true;
}

inline std::string scalar_text(const LooseValue& v) {
  if (v.kind == LooseValue::Kind::boolean) return v.boolean ? "true" : "false";
  return v.text;
}

template <class T>
void assign_field(std::optional<T>& slot, const FieldValue& value) {
  if (auto p = std::get_if<T>(&value)) slot = *p;
}

class PlanCollector {
 public:
  PlanCollector(std::string_view source, const SynonymTable& table) : source_(source), table_(table) {}

  void collect_root(const LooseValue& root) {
    if (root.is_array()) {
      collect_array(root, "<root>");
    } else if (root.is_object()) {
      if (has_plan_fields(root) && named_member(root)) {
        add_plan(*named_member(root), root);
      } else {
        collect_object(root);
      }
    } else {
      report.warnings.push_back("discarded non-object block");
      ++report.discarded_fragments;
    }
  }

  ParseReport report;

 private:
  static const LooseValue* named_member_value(const LooseValue& v) {
    for (const auto& m : v.members)
      if (is_name_key(m.key) && m.value.is_string()) return &m.value;
    return nullptr;
  }
  static std::optional<std::string> named_member(const LooseValue& v) {
    if (auto n = named_member_value(v)) return n->text;
    return std::nullopt;
  }

  void collect_object(const LooseValue& obj) {
    for (const auto& m : obj.members) {
      if (m.value.is_object()) {
        if (is_wrapper(m.value)) {
          report.warnings.push_back("unwrapped container key '" + m.key + "'");
          collect_object(m.value);
        } else {
          add_plan(m.key, m.value);
        }
      } else if (m.value.is_array()) {
        report.warnings.push_back("unwrapped container key '" + m.key + "'");
        collect_array(m.value, m.key);
      } else {
        report.warnings.push_back("discarded non-object value for key '" + m.key + "'");
        ++report.discarded_fragments;
      }
    }
  }

  void collect_array(const LooseValue& arr, const std::string& where) {
    for (const auto& item : arr.items) {
      if (item.is_object() && named_member(item)) {
        add_plan(*named_member(item), item);
      } else if (item.is_object()) {
        collect_object(item);
      } else {
        report.warnings.push_back("discarded non-object element in '" + where + "'");
        ++report.discarded_fragments;
      }
    }
  }

  void add_plan(const std::string& raw_name, const LooseValue& body) {
    std::string name(trim(raw_name));
    if (name.empty()) {
      report.warnings.push_back("discarded plan with empty object name");
      ++report.discarded_fragments;
      return;
    }
    Plan p;
    p.name = name;
    if (body.end > body.begin && body.end <= source_.size())
      p.raw_source = std::string(source_.substr(body.begin, body.end - body.begin));

    const LooseValue* name_value = named_member_value(body);
    for (const auto& m : body.members) {
      if (&m.value == name_value) continue;
      auto field = plan_field_for_key(m.key);
      if (!field) {
        report.warnings.push_back("unknown key '" + m.key + "' in '" + name + "'");
        continue;
      }
      apply(p, *field, m.value);
    }
    commit(std::move(p));
  }

  void apply(Plan& p, PlanField field, const LooseValue& v) {
    std::string where = std::string(to_string(field)) + " of '" + p.name + "'";
    if (v.kind == LooseValue::Kind::null) return;
    if (v.is_object() || v.is_array()) {
      report.warnings.push_back("unexpected structured value for " + where);
      return;
    }
    if (field == PlanField::container && v.kind == LooseValue::Kind::boolean) {
      p.container = v.boolean;
      return;
    }
    std::string raw = scalar_text(v);
    FieldValue value = normalize_value(field, raw, table_);
    if (is_unknown(value)) {
      report.warnings.push_back("unmapped value '" + raw + "' for " + where);
      return;
    }
    if (!is_exact_form(field, raw, value))
      report.warnings.push_back("coerced '" + raw + "' for " + where);
    switch (field) {
      case PlanField::color: p.color = std::get<std::string>(value); break;
      case PlanField::container: assign_field(p.container, value); break;
      case PlanField::size: assign_field(p.size, value); break;
      case PlanField::shape: assign_field(p.shape, value); break;
      case PlanField::state: assign_field(p.state, value); break;
      case PlanField::destination: assign_field(p.destination, value); break;
      case PlanField::grasping_type: assign_field(p.grasping_type, value); break;
      case PlanField::placing_type: assign_field(p.placing_type, value); break;
    }
  }

  static bool is_exact_form(PlanField field, const std::string& raw, const FieldValue& value) {
    return std::visit(
        [&](const auto& v) -> bool {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            return false;
          } else if constexpr (std::is_same_v<T, std::string>) {
            return v == raw;
          } else if constexpr (std::is_same_v<T, bool>) {
            (void)field;
            return raw == (v ? "true" : "false");
          } else {
            return to_string(v) == raw;
          }
        },
        value);
  }

  void commit(Plan p) {
    std::string key = canonicalize_label(p.name, table_).token;
    auto it = std::find_if(report.plans.begin(), report.plans.end(),
                           [&](const Plan& q) { return canonicalize_label(q.name, table_).token == key; });
    if (it != report.plans.end()) {
      report.warnings.push_back("duplicate object '" + p.name + "', kept last occurrence");
      ++report.discarded_fragments;
      report.plans.erase(it);
    }
    report.plans.push_back(std::move(p));
  }

  std::string_view source_;
  const SynonymTable& table_;
};

}  // namespace detail

inline ParseReport parse_plans(const StructuredBlock& block, const SynonymTable& table = default_synonyms()) {
  std::string text = block.member_list ? "{" + block.text + "}" : block.text;
  LooseValue root;
  try {
    root = parse_loose(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::malformed_block,
                e.message() + " (block at offset " + std::to_string(block.offset) + ")");
  }
  detail::PlanCollector collector(text, table);
  collector.collect_root(root);
  return std::move(collector.report);
}

inline ParseReport parse_plans(std::string_view block_text, const SynonymTable& table = default_synonyms()) {
  StructuredBlock b;
  b.text = std::string(block_text);
  return parse_plans(b, table);
}

// Every block in a model reply, concatenated; later plans for the same object
// replace earlier ones. Blocks that fail to parse are counted as discarded.
inline ParseReport parse_model_output(std::string_view text, const SynonymTable& table = default_synonyms()) {
  ParseReport merged;
  auto blocks = extract_structured_block(text);
  std::size_t failures = 0;
  for (const auto& b : blocks) {
    ParseReport r;
    try {
      r = parse_plans(b, table);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::malformed_block) throw;
      merged.warnings.push_back("skipped block: " + e.message());
      ++merged.discarded_fragments;
      ++failures;
      continue;
    }
    merged.warnings.insert(merged.warnings.end(), r.warnings.begin(), r.warnings.end());
    merged.discarded_fragments += r.discarded_fragments;
    for (auto& p : r.plans) {
      std::string key = canonicalize_label(p.name, table).token;
      auto it = std::find_if(merged.plans.begin(), merged.plans.end(),
                             [&](const Plan& q) { return canonicalize_label(q.name, table).token == key; });
      if (it != merged.plans.end()) {
        merged.warnings.push_back("duplicate object '" + p.name + "', kept last occurrence");
        ++merged.discarded_fragments;
        merged.plans.erase(it);
      }
      merged.plans.push_back(std::move(p));
    }
  }
  if (failures == blocks.size())
    throw Error(ErrorCode::malformed_block, "no block could be parsed: " + merged.warnings.back());
  return merged;
}

// ---------------------------------------------------------------------------
// Emitting plans in the annotation format

inline Json plan_to_json(const Plan& p) {
  Json j = Json::object();
  auto put = [&](const char* key, const auto& opt) {
    if (opt) j[key] = std::string(to_string(*opt));
    else j[key] = nullptr;
  };
  if (p.color) j["color"] = *p.color;
  else j["color"] = nullptr;
  put("size", p.size);
  put("shape", p.shape);
  if (p.container) j["container"] = *p.container;
  else j["container"] = nullptr;
  put("state", p.state);
  put("destination", p.destination);
  put("grasping_type", p.grasping_type);
  put("placing_type", p.placing_type);
  return j;
}

inline Json plans_to_json(const std::vector<Plan>& plans) {
  Json j = Json::object();
  for (const auto& p : plans) j[p.name] = plan_to_json(p);
  return j;
}

inline std::string emit_plans(const std::vector<Plan>& plans) { return plans_to_json(plans).dump(2); }

inline Plan plan_from_expected(const ExpectedPlan& e, const ObjectAnnotation& a) {
  Plan p;
  p.name = e.name;
  p.color = a.color;
  p.size = a.size;
  p.shape = a.shape;
  p.container = a.container;
  p.state = e.state;
  p.destination = e.destination;
  p.grasping_type = e.grasping_type;
  p.placing_type = e.placing_type;
  return p;
}

}  // namespace ossa
