// ossa: dataset generation and validation, evaluation runs, report
// rendering and the interactive session service.

#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "ossa/run_config.hpp"
#include "ossa/session_service.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int fail(const ossa::Error& e) {
  std::cerr << "ossa: " << e.what() << "\n";
  return ossa::exit_code_for(e.code());
}

struct EvalFlags {
  std::string config;
  std::string dataset;
  std::string gen_config;
  bool generate = false;
  std::string task;
  std::string backend;
  std::string mode;
  std::string scope;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string base_url;
  std::string model;
  double temperature = 0.0;
  std::size_t concurrency = 0;
  double p_state_omit = 0.0;
  double p_object_miss = 0.0;
  bool scene_averaged = false;
};

ossa::Json read_json_file(const std::string& path) {
  std::string text;
  try {
    text = ossa::read_text_file(path);
  } catch (const ossa::Error& e) {
    throw ossa::Error(ossa::ErrorCode::invalid_config, e.message());
  }
  return ossa::parse_json_document(text, path);
}

// Config file values first, then every flag given on the command line.
ossa::RunConfig build_run_config(const CLI::App& cmd, const EvalFlags& f) {
  ossa::RunConfig c;
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--config")) c = ossa::load_run_config(f.config);
  if (given("--dataset")) {
    c.dataset = f.dataset;
    c.gen_config.reset();
  }
  if (given("--gen-config")) {
    c.gen_config = read_json_file(f.gen_config);
    c.dataset.reset();
  } else if (given("--generate")) {
    if (!c.gen_config) c.gen_config = ossa::Json::object();
    c.dataset.reset();
  }
  if (given("--task")) c.tasks = ossa::parse_task_list(f.task);
  if (given("--backend")) c.backend = f.backend;
  if (given("--mode")) {
    auto m = ossa::parse_prompt_mode(f.mode);
    if (!m) throw ossa::Error(ossa::ErrorCode::invalid_config, "unknown mode '" + f.mode + "'");
    c.mode = *m;
  }
  if (given("--scope")) c.scope = f.scope == "state" ? ossa::PlanScope::state_only : ossa::PlanScope::full_plan;
  if (given("--runs")) c.runs = f.runs;
  if (given("--seed")) c.seed = f.seed;
  if (given("--out")) c.out = f.out;
  if (given("--base-url")) c.base_url = f.base_url;
  if (given("--model")) c.model = f.model;
  if (given("--temperature")) c.temperature = f.temperature;
  if (given("--concurrency")) c.concurrency = f.concurrency;
  if (given("--p-state-omit")) c.p_state_omit = f.p_state_omit;
  if (given("--p-object-miss")) c.p_object_miss = f.p_object_miss;
  if (given("--scene-averaged")) c.scene_averaged = f.scene_averaged;
  return c;
}

void add_eval_flags(CLI::App& cmd, EvalFlags& f) {
  cmd.add_option("--config", f.config, "Config file or a stored run manifest");
  cmd.add_option("--dataset", f.dataset, "Dataset JSON file");
  cmd.add_option("--gen-config", f.gen_config, "Generate the dataset from this generator config");
  cmd.add_flag("--generate", f.generate, "Generate the default dataset from --seed");
  cmd.add_option("--task", f.task, "t1, t2, t3, a comma list, or all");
  cmd.add_option("--backend", f.backend, "oracle | modular-sim | modular-remote | monolithic-remote");
  cmd.add_option("--mode", f.mode, "zero-shot | few-shot");
  cmd.add_option("--scope", f.scope, "plan | state")->check(CLI::IsMember({"plan", "state"}));
  cmd.add_option("--runs", f.runs, "Repeated runs per task");
  cmd.add_option("--seed", f.seed, "Dataset and caption-noise seed");
  cmd.add_option("--out", f.out, "Run directory");
  cmd.add_option("--base-url", f.base_url, "Chat-completions endpoint for remote backends");
  cmd.add_option("--model", f.model, "Remote model name");
  cmd.add_option("--temperature", f.temperature, "Remote sampling temperature");
  cmd.add_option("--concurrency", f.concurrency, "Scenes evaluated in parallel");
  cmd.add_option("--p-state-omit", f.p_state_omit, "modular-sim: probability a state qualifier is dropped");
  cmd.add_option("--p-object-miss", f.p_object_miss, "modular-sim: probability an object is not captioned");
  cmd.add_flag("--scene-averaged", f.scene_averaged, "Average per scene instead of pooling objects");
}

int cmd_dataset_gen(const CLI::App& cmd, const std::string& gen_config, std::uint64_t seed, std::size_t scenes,
                    const std::string& out) {
  ossa::GenConfig g;
  if (!gen_config.empty()) g = ossa::gen_config_from_json(read_json_file(gen_config));
  if (cmd.count("--seed")) g.seed = seed;
  if (cmd.count("--scenes")) g.scene_count = scenes;
  ossa::Dataset d = ossa::generate_dataset(g);
  std::string text = ossa::serialize_dataset(d);
  if (out.empty()) {
    std::cout << text;
  } else {
    ossa::write_text_file(out, text);
    std::cerr << "wrote " << d.scenes.size() << " scenes to " << out << "\n";
  }
  return 0;
}

int cmd_dataset_validate(const std::string& path) {
  ossa::Dataset d = ossa::load_dataset(path);
  std::size_t objects = 0, problems = 0;
  for (const auto& s : d.scenes)
    for (const auto& a : s.objects) {
      ++objects;
      for (const auto& v : ossa::validate_annotation(a).violations) {
        std::cerr << s.scene_id << ": " << a.name << ": " << v << "\n";
        ++problems;
      }
    }
  if (problems) {
    std::cerr << problems << " invalid annotation(s)\n";
    return 2;
  }
  std::cout << d.name << " " << d.version << ": " << d.scenes.size() << " scenes, " << objects << " objects, ok\n";
  return 0;
}

int cmd_eval_run(const CLI::App& cmd, const EvalFlags& f, const std::string& format) {
  ossa::RunConfig c = build_run_config(cmd, f);
  auto fmt = ossa::parse_report_format(format);
  if (!fmt) throw ossa::Error(ossa::ErrorCode::invalid_config, "unknown format '" + format + "'");
  ossa::EvalOutcome o = ossa::run_evaluation(c);
  std::cout << ossa::render_report(o.result.report, *fmt);
  if (!c.out.empty()) std::cerr << "run directory: " << c.out << "\n";
  return 0;
}

int cmd_report_render(const std::string& input, const std::string& format) {
  auto fmt = ossa::parse_report_format(format);
  if (!fmt) throw ossa::Error(ossa::ErrorCode::invalid_config, "unknown format '" + format + "'");
  std::filesystem::path p = input;
  if (std::filesystem::is_directory(p)) p /= "report.json";
  ossa::MetricsReport r = ossa::report_from_json(read_json_file(p.string()));
  std::cout << ossa::render_report(r, *fmt);
  return 0;
}

int cmd_serve(const CLI::App& cmd, const EvalFlags& f, const std::string& host, int port) {
  ossa::RunConfig c = build_run_config(cmd, f);
  ossa::SessionServiceConfig sc;
  if (c.dataset || c.gen_config) sc.dataset = ossa::resolve_dataset(c);
  if (!c.out.empty()) sc.out_dir = std::filesystem::path(c.out);

  std::shared_ptr<ossa::RemoteChatClient> client;
  if (!c.base_url.empty()) {
    ossa::ClientConfig cc;
    cc.base_url = c.base_url;
    cc.max_in_flight = c.concurrency;
    client = std::make_shared<ossa::RemoteChatClient>(cc);
  }
  sc.backends = [c, client](const std::string& id) -> std::unique_ptr<ossa::Backend> {
    ossa::RunConfig rc = c;
    rc.backend = id;
    if (std::find(ossa::kBackendIds.begin(), ossa::kBackendIds.end(), id) == ossa::kBackendIds.end()) return nullptr;
    if (ossa::is_remote_backend(id) && !client)
      throw ossa::Error(ossa::ErrorCode::invalid_config, "server was started without --base-url");
    if (!ossa::is_remote_backend(id)) return ossa::make_backend_factory(rc).factory(0);
    ossa::ChatSettings settings;
    settings.model = c.model;
    settings.temperature = c.temperature;
    if (id == "monolithic-remote") return std::make_unique<ossa::MonolithicBackend>(*client, settings);
    return std::make_unique<ossa::ModularBackend>("modular-remote", "modular",
                                                  std::make_shared<ossa::RemoteCaptioner>(*client, settings),
                                                  std::make_shared<ossa::ChatTextPlanner>(*client, settings));
  };

  ossa::SessionService service(std::move(sc));
  int bound = service.start(host, port);
  std::cerr << "serving on http://" << host << ":" << bound << "/api/sessions (Ctrl-C to stop)\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  std::cerr << "shutting down\n";
  service.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-state-sensitive task planning: datasets, evaluation and sessions", "ossa"};
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "Generate or validate scene datasets");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate a synthetic dataset");
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 42;
  std::size_t gen_scenes = 40;
  gen->add_option("--gen-config,--config", gen_config, "Generator config JSON");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--scenes", gen_scenes, "Number of scenes");
  gen->add_option("--out", gen_out, "Output file (stdout when omitted)");

  auto* validate = dataset->add_subcommand("validate", "Validate a dataset file");
  std::string validate_path;
  validate->add_option("dataset", validate_path, "Dataset JSON file")->required();

  auto* eval = app.add_subcommand("eval", "Evaluation runs");
  eval->require_subcommand(1);
  auto* run = eval->add_subcommand("run", "Evaluate a backend on a dataset");
  EvalFlags eval_flags;
  std::string eval_format = "plain";
  add_eval_flags(*run, eval_flags);
  run->add_option("--format", eval_format, "plain | csv | markdown (stdout table)");

  auto* report = app.add_subcommand("report", "Reports");
  report->require_subcommand(1);
  auto* render = report->add_subcommand("render", "Render a stored report");
  std::string render_in, render_format = "plain";
  render->add_option("report", render_in, "report.json or a run directory")->required();
  render->add_option("--format", render_format, "plain | csv | markdown");

  auto* serve = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
  EvalFlags serve_flags;
  std::string host = "127.0.0.1";
  int port = 8080;
  add_eval_flags(*serve, serve_flags);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_dataset_gen(*gen, gen_config, gen_seed, gen_scenes, gen_out);
    if (*validate) return cmd_dataset_validate(validate_path);
    if (*run) return cmd_eval_run(*run, eval_flags, eval_format);
    if (*render) return cmd_report_render(render_in, render_format);
    if (*serve) return cmd_serve(*serve, serve_flags, host, port);
  } catch (const ossa::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "ossa: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
