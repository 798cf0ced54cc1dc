#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "ossa/plan_schema.hpp"

namespace ossa {

enum class PromptMode { zero_shot, few_shot };
enum class InputKind { caption, image };
// Full plans, or object states only (the state-detection evaluation).
enum class PlanScope { full_plan, state_only };

constexpr std::string_view to_string(PromptMode m) { return m == PromptMode::zero_shot ? "zero-shot" : "few-shot"; }
constexpr std::string_view to_string(PlanScope s) { return s == PlanScope::full_plan ? "plan" : "state"; }

inline std::optional<PromptMode> parse_prompt_mode(std::string_view text) {
  std::string t = detail::normalize_spacing(text);
  if (t == "zero shot" || t == "zero" || t == "z") return PromptMode::zero_shot;
  if (t == "few shot" || t == "few" || t == "f") return PromptMode::few_shot;
  return std::nullopt;
}

struct Exemplar {
  std::string description;
  std::string answer;
};

inline std::vector<std::string> default_cot_steps() {
  return {
      "State: decide what condition each object is in. Food can be intact, a peel, or leftover food that was "
      "sliced or partly eaten; containers and utensils can be clean or dirty, and a container can still hold "
      "leftover food.",
      "Destination: choose where each object goes from its state and the user's instruction. If the instruction "
      "does not say what to do with leftover food, answer \"uncertain\" so the user can be asked.",
      "Grasping type: choose how to pick each object up from its state, shape and size.",
      "Placing type: choose what to do at the destination from the object's state and destination; a container "
      "holding leftover food that is discarded is poured out before it is put away.",
  };
}

inline std::string output_format_stanza(PlanScope scope = PlanScope::full_plan) {
  std::string s =
      "Answer with a single JSON object. Use each object's name as a key; when several objects share a name, "
      "add a number after it (\"plate 1\", \"plate 2\"). Each value has these fields:\n";
  if (scope == PlanScope::state_only) {
    s +=
        "\"object_name\": {\n"
        "    \"state\": \"clean\" | \"dirty\" | \"containing leftover food\" | \"intact\" | \"peel\" | "
        "\"leftover food\"\n"
        "}\n";
    return s;
  }
  s +=
      "\"object_name\": {\n"
      "    \"color\": \"<color>\",\n"
      "    \"size\": \"small\" | \"medium\" | \"big\",\n"
      "    \"shape\": \"elongated\" | \"irregular\" | \"oval\" | \"round\" | \"spherical\" | \"cylindrical\" | "
      "\"rectangle\",\n"
      "    \"container\": true or false,\n"
      "    \"state\": \"clean\" | \"dirty\" | \"containing leftover food\" | \"intact\" | \"peel\" | "
      "\"leftover food\",\n"
      "    \"destination\": \"trash bin\" | \"fridge\" | \"cupboard\" | \"dishwasher\" | \"uncertain\",\n"
      "    \"grasping_type\": \"top grasp\" | \"edge grasp\",\n"
      "    \"placing_type\": \"place\" | \"pour\"\n"
      "}\n";
  return s;
}

struct PromptSpec {
  TaskSpec task = TaskSpec::make(TaskId::t1);
  PromptMode mode = PromptMode::zero_shot;
  std::vector<std::string> cot_steps = default_cot_steps();
  std::vector<Exemplar> exemplars;
  PlanScope scope = PlanScope::full_plan;
};

struct Prompt {
  std::string text;
  bool attach_image = false;
};

inline std::vector<Plan> state_only(std::vector<Plan> plans) {
  for (auto& p : plans) {
    p.color.reset();
    p.size.reset();
    p.shape.reset();
    p.container.reset();
    p.destination.reset();
    p.grasping_type.reset();
    p.placing_type.reset();
  }
  return plans;
}

inline std::string emit_state_only(const std::vector<Plan>& plans) {
  Json j = Json::object();
  for (const auto& p : plans) j[p.name] = {{"state", p.state ? Json(std::string(to_string(*p.state))) : Json()}};
  return j.dump(2);
}

// The shipped exemplars with answers produced by the oracle for `task`.
inline std::vector<Exemplar> default_exemplars(const TaskSpec& task, PlanScope scope = PlanScope::full_plan) {
  static const Json doc = Json::parse(detail::kExemplarsJson);
  std::vector<Exemplar> out;
  for (const auto& ex : doc.at("exemplars")) {
    Scene scene = scene_from_json(
        Json{{"scene_id", "exemplar"}, {"objects", ex.at("objects")}}, "exemplar");
    std::vector<Plan> plans;
    for (const auto& a : scene.objects) plans.push_back(plan_from_expected(ground_truth_plan(a, task), a));
    out.push_back({ex.at("description").get<std::string>(),
                   scope == PlanScope::full_plan ? emit_plans(plans) : emit_state_only(plans)});
  }
  return out;
}

inline PromptSpec make_prompt_spec(const TaskSpec& task, PromptMode mode, PlanScope scope = PlanScope::full_plan) {
  PromptSpec spec;
  spec.task = task;
  spec.mode = mode;
  spec.scope = scope;
  if (mode == PromptMode::few_shot) spec.exemplars = default_exemplars(task, scope);
  return spec;
}

inline Prompt build_prompt(const PromptSpec& spec, InputKind input) {
  if (spec.cot_steps.size() != 4)
    throw Error(ErrorCode::invalid_config, "prompt needs exactly four reasoning steps");
  if (spec.mode == PromptMode::few_shot && spec.exemplars.empty())
    throw Error(ErrorCode::missing_exemplars, "few-shot prompt without exemplars");
  if (spec.mode == PromptMode::zero_shot && !spec.exemplars.empty())
    throw Error(ErrorCode::invalid_config, "zero-shot prompt must not carry exemplars");

  std::string t;
  t += "You are the planner of a household robot that clears tabletops. ";
  t += input == InputKind::image ? "You are given an image of the table"
                                 : "You are given a text description of the objects on the table";
  t += " and an instruction from the user. For every object, produce a manipulation plan the robot can execute.\n\n";
  t += "Instruction: \"" + spec.task.instruction + "\"\n\n";
  t += "Think through these steps for each object, in order:\n";
  for (std::size_t i = 0; i < spec.cot_steps.size(); ++i)
    t += std::to_string(i + 1) + ". " + spec.cot_steps[i] + "\n";
  t += "\n" + output_format_stanza(spec.scope);
  if (spec.mode == PromptMode::few_shot) {
    t += "\nExamples:\n";
    for (std::size_t i = 0; i < spec.exemplars.size(); ++i) {
      t += "\nExample " + std::to_string(i + 1) + "\nScene: " + spec.exemplars[i].description + "\nAnswer:\n" +
           spec.exemplars[i].answer + "\n";
    }
  }
  return {t, input == InputKind::image};
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::io_error, "sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string prompt_hash(const PromptSpec& spec, InputKind input) {
  return sha256_hex(build_prompt(spec, input).text);
}

}  // namespace ossa
