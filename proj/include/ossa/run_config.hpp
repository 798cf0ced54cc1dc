#pragma once

// Evaluation run configuration: loading, validation, dataset resolution and
// backend construction shared by the command-line tool and the tests.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ossa/evaluation.hpp"
#include "ossa/scene_gen.hpp"

namespace ossa {

inline constexpr std::array<std::string_view, 4> kBackendIds{"oracle", "modular-sim", "modular-remote",
                                                             "monolithic-remote"};

struct RunConfig {
  std::optional<std::string> dataset;
  std::optional<Json> gen_config;  // used when no dataset path is given
  std::vector<TaskId> tasks{TaskId::t1, TaskId::t2, TaskId::t3};
  std::string backend = "oracle";
  PromptMode mode = PromptMode::zero_shot;
  PlanScope scope = PlanScope::full_plan;
  std::size_t runs = 3;
  std::uint64_t seed = 42;
  std::string out;
  std::string base_url;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::size_t concurrency = 4;
  double p_state_omit = 0.0;
  double p_object_miss = 0.0;
  bool scene_averaged = false;
};

inline std::vector<TaskId> parse_task_list(std::string_view text) {
  std::string t = detail::to_lower(detail::trim(text));
  if (t == "all") return {TaskId::t1, TaskId::t2, TaskId::t3};
  std::vector<TaskId> out;
  std::size_t start = 0;
  while (start <= t.size()) {
    std::size_t comma = t.find(',', start);
    if (comma == std::string::npos) comma = t.size();
    auto id = parse_task_id(detail::trim(std::string_view(t).substr(start, comma - start)));
    if (!id) throw Error(ErrorCode::invalid_config, "unknown task '" + std::string(text) + "' (use t1, t2, t3 or all)");
    if (std::find(out.begin(), out.end(), *id) == out.end()) out.push_back(*id);
    start = comma + 1;
  }
  return out;
}

inline Json run_config_to_json(const RunConfig& c) {
  Json tasks = Json::array();
  for (TaskId t : c.tasks) tasks.push_back(std::string(to_string(t)));
  return {{"dataset", c.dataset ? Json(*c.dataset) : Json()},
          {"gen_config", c.gen_config ? *c.gen_config : Json()},
          {"tasks", std::move(tasks)},
          {"backend", c.backend},
          {"mode", std::string(to_string(c.mode))},
          {"scope", std::string(to_string(c.scope))},
          {"runs", c.runs},
          {"seed", c.seed},
          {"out", c.out},
          {"base_url", c.base_url},
          {"model", c.model},
          {"temperature", c.temperature},
          {"concurrency", c.concurrency},
          {"p_state_omit", c.p_state_omit},
          {"p_object_miss", c.p_object_miss},
          {"scene_averaged", c.scene_averaged}};
}

// Accepts a plain config object or a run manifest (reads its "config").
inline RunConfig run_config_from_json(const Json& doc, RunConfig c = {}) {
  const Json& j = doc.is_object() && doc.contains("config") && doc["config"].is_object() ? doc["config"] : doc;
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "config must be an object");
  try {
    if (auto it = j.find("dataset"); it != j.end()) {
      if (it->is_null()) c.dataset.reset();
      else c.dataset = it->get<std::string>();
    }
    if (auto it = j.find("gen_config"); it != j.end()) {
      if (it->is_null()) c.gen_config.reset();
      else c.gen_config = *it;
    }
    if (auto it = j.find("tasks"); it != j.end()) {
      if (it->is_string()) {
        c.tasks = parse_task_list(it->get<std::string>());
      } else {
        c.tasks.clear();
        for (const auto& t : *it)
          for (TaskId id : parse_task_list(t.get<std::string>())) c.tasks.push_back(id);
      }
    }
    if (j.contains("backend")) c.backend = j["backend"].get<std::string>();
    if (j.contains("mode")) {
      auto m = parse_prompt_mode(j["mode"].get<std::string>());
      if (!m) throw Error(ErrorCode::invalid_config, "unknown mode '" + j["mode"].get<std::string>() + "'");
      c.mode = *m;
    }
    if (j.contains("scope")) {
      std::string s = j["scope"].get<std::string>();
      if (s != "plan" && s != "state") throw Error(ErrorCode::invalid_config, "scope must be plan or state");
      c.scope = s == "state" ? PlanScope::state_only : PlanScope::full_plan;
    }
    if (j.contains("runs")) c.runs = j["runs"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("base_url")) c.base_url = j["base_url"].get<std::string>();
    if (j.contains("model")) c.model = j["model"].get<std::string>();
    if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
    if (j.contains("concurrency")) c.concurrency = j["concurrency"].get<std::size_t>();
    if (j.contains("p_state_omit")) c.p_state_omit = j["p_state_omit"].get<double>();
    if (j.contains("p_object_miss")) c.p_object_miss = j["p_object_miss"].get<double>();
    if (j.contains("scene_averaged")) c.scene_averaged = j["scene_averaged"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_config, e.message());
  }
  Json j;
  try {
    j = parse_json_document(text, path.string());
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_config, e.message());
  }
  return run_config_from_json(j, std::move(base));
}

inline bool is_remote_backend(std::string_view id) { return id == "modular-remote" || id == "monolithic-remote"; }

inline void validate_run_config(const RunConfig& c) {
  auto fail = [](std::string m) { throw Error(ErrorCode::invalid_config, std::move(m)); };
  if (std::find(kBackendIds.begin(), kBackendIds.end(), c.backend) == kBackendIds.end())
    fail("unknown backend '" + c.backend + "'");
  if (is_remote_backend(c.backend) && c.base_url.empty()) fail("backend " + c.backend + " requires --base-url");
  if (c.runs == 0) fail("runs must be at least 1");
  if (c.concurrency == 0) fail("concurrency must be at least 1");
  if (c.tasks.empty()) fail("no tasks selected");
  if (!c.dataset && !c.gen_config) fail("no dataset: pass --dataset or --generate");
  CaptionErrorModel{c.p_state_omit, c.p_object_miss, 0}.validate();
}

// Loads the dataset file, or generates one; the run seed overrides the
// generator config's seed.
inline Dataset resolve_dataset(const RunConfig& c) {
  if (c.dataset) {
    try {
      return load_dataset(*c.dataset);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::io_error) throw Error(ErrorCode::invalid_config, e.message());
      throw;
    }
  }
  GenConfig g = gen_config_from_json(c.gen_config ? *c.gen_config : Json::object());
  g.seed = c.seed;
  return generate_dataset(g);
}

inline std::uint64_t caption_seed_for_run(std::uint64_t seed, std::size_t run) {
  return SplitMix64::stream(seed, {0x5EED, run});
}

struct BackendBundle {
  BackendFactory factory;
  std::shared_ptr<RemoteChatClient> client;  // set for remote backends
};

inline BackendBundle make_backend_factory(const RunConfig& c) {
  BackendBundle b;
  if (c.backend == "oracle") {
    b.factory = [](std::size_t) { return std::make_unique<OracleBackend>(); };
    return b;
  }
  if (c.backend == "modular-sim") {
    b.factory = [c](std::size_t run) {
      return make_modular_sim_backend({c.p_state_omit, c.p_object_miss, caption_seed_for_run(c.seed, run)});
    };
    return b;
  }
  ClientConfig cc;
  cc.base_url = c.base_url;
  cc.max_in_flight = c.concurrency;
  b.client = std::make_shared<RemoteChatClient>(cc);
  ChatSettings settings;
  settings.model = c.model;
  settings.temperature = c.temperature;
  auto client = b.client;
  if (c.backend == "monolithic-remote") {
    b.factory = [client, settings, scope = c.scope](std::size_t) {
      return std::make_unique<MonolithicBackend>(*client, settings, "monolithic", scope);
    };
  } else {
    b.factory = [client, settings, scope = c.scope](std::size_t) -> std::unique_ptr<Backend> {
      return std::make_unique<ModularBackend>("modular-remote", "modular",
                                              std::make_shared<RemoteCaptioner>(*client, settings),
                                              std::make_shared<ChatTextPlanner>(*client, settings, scope), false,
                                              settings.temperature);
    };
  }
  return b;
}

struct EvalOutcome {
  Dataset dataset;
  EvalResult result;
  Json manifest;
};

inline EvalOutcome run_evaluation(const RunConfig& c) {
  validate_run_config(c);
  EvalOutcome o;
  o.dataset = resolve_dataset(c);
  BackendBundle bundle = make_backend_factory(c);
  EvalSettings s;
  s.tasks = c.tasks;
  s.runs = c.runs;
  s.mode = c.mode;
  s.scope = c.scope;
  s.concurrency = c.concurrency;
  s.scene_averaged = c.scene_averaged;
  o.result = evaluate(o.dataset, s, bundle.factory);
  o.result.report.provenance = {{"dataset", o.dataset.version}, {"backend", o.result.descriptor.id},
                                {"mode", std::string(to_string(c.mode))}, {"runs", c.runs}, {"seed", c.seed}};
  o.manifest = make_manifest(run_config_to_json(c), o.dataset, o.result);
  if (!c.dataset) o.manifest["generator_version"] = std::string(kGeneratorVersion);
  if (!c.out.empty()) write_run_directory(c.out, o.manifest, o.result);
  return o;
}

// 2 for configuration and input problems, 1 for failures while running.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_config:
    case ErrorCode::parse_error:
    case ErrorCode::schema_error:
    case ErrorCode::io_error:
    case ErrorCode::empty_scene:
    case ErrorCode::no_runs:
    case ErrorCode::incompatible_input:
    case ErrorCode::bind_error:
      return 2;
    default:
      return 1;
  }
}

}  // namespace ossa
