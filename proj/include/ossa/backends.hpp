#pragma once

// Plan-generation backends behind one interface:
//   oracle      ground truth, serialized and re-parsed like model output
//   modular     caption stage, then a text-only planner
//   monolithic  one vision-language call from image + instruction

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ossa/captioner.hpp"
#include "ossa/chat_client.hpp"
#include "ossa/oracle.hpp"
#include "ossa/plan_schema.hpp"
#include "ossa/prompt.hpp"

namespace ossa {

struct ImageInput {
  std::string bytes;
  std::string media_type = "image/png";
};

struct CaptionInput {
  std::string text;
};

class SceneInput {
 public:
  enum class Kind { image, caption, scene };

  static SceneInput from_image(std::string bytes, std::string media_type) {
    return SceneInput(ImageInput{std::move(bytes), std::move(media_type)});
  }
  static SceneInput from_caption(std::string text) { return SceneInput(CaptionInput{std::move(text)}); }
  static SceneInput from_scene(Scene scene) { return SceneInput(std::move(scene)); }

  Kind kind() const { return static_cast<Kind>(value_.index()); }
  const ImageInput* image() const { return std::get_if<ImageInput>(&value_); }
  const CaptionInput* caption() const { return std::get_if<CaptionInput>(&value_); }
  const Scene* scene() const { return std::get_if<Scene>(&value_); }

 private:
  using Value = std::variant<ImageInput, CaptionInput, Scene>;
  explicit SceneInput(Value v) : value_(std::move(v)) {}
  Value value_;
};

constexpr std::string_view to_string(SceneInput::Kind k) {
  switch (k) {
    case SceneInput::Kind::image: return "image";
    case SceneInput::Kind::caption: return "caption";
    case SceneInput::Kind::scene: return "scene";
  }
  return "?";
}

struct StageRecord {
  std::string stage;
  std::string input;
  std::string output;
  double latency_ms = 0.0;
  TokenUsage usage;
  int attempts = 0;
};

struct RunTrace {
  std::vector<StageRecord> stages;
  std::vector<std::string> prompt_hashes;
};

struct PlanOutput {
  ParseReport report;
  RunTrace trace;
};

struct BackendDescriptor {
  std::string id;          // oracle | modular-sim | modular-remote | monolithic-remote
  std::string method;      // label used in report rows
  bool serialized = false;  // calls must not overlap
  double temperature = 0.0;
  std::string model;
  Json params = Json::object();
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual PlanOutput plan(const SceneInput& input, const TaskSpec& task, PromptMode mode) = 0;
  virtual BackendDescriptor descriptor() const = 0;
};

inline PlanOutput plan_with_backend(Backend& backend, const SceneInput& input, const TaskSpec& task,
                                    PromptMode mode) {
  return backend.plan(input, task, mode);
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

// Model text that contains no usable block scores as "no plans" rather than
// aborting an evaluation.
inline ParseReport parse_or_empty(const std::string& text) {
  try {
    return parse_model_output(text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_structured_content && e.code() != ErrorCode::malformed_block) throw;
    ParseReport r;
    r.warnings.push_back(e.what());
    r.discarded_fragments = 1;
    return r;
  }
}

inline std::string media_type_for(const std::filesystem::path& p) {
  std::string ext = detail::to_lower(p.extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/png";
}

}  // namespace detail

// ---------------------------------------------------------------------------

class OracleBackend : public Backend {
 public:
  explicit OracleBackend(std::string method_label = "oracle", const Catalog& catalog = default_catalog())
      : method_(std::move(method_label)), catalog_(catalog) {}

  PlanOutput plan(const SceneInput& input, const TaskSpec& task, PromptMode) override {
    const Scene* scene = input.scene();
    if (!scene)
      throw Error(ErrorCode::incompatible_input,
                  "oracle backend needs a ground-truth scene, got " + std::string(to_string(input.kind())));
    auto started = std::chrono::steady_clock::now();
    std::vector<Plan> plans;
    for (const auto& a : scene->objects) plans.push_back(plan_from_expected(ground_truth_plan(a, task, catalog_), a));
    std::string text = emit_plans(plans);
    PlanOutput out;
    out.report = parse_model_output(text);
    out.trace.stages.push_back({"oracle", scene->scene_id, text, detail::elapsed_ms(started), {}, 1});
    return out;
  }

  BackendDescriptor descriptor() const override {
    BackendDescriptor d;
    d.id = "oracle";
    d.method = method_;
    return d;
  }

 private:
  std::string method_;
  const Catalog& catalog_;
};

// ---------------------------------------------------------------------------
// Caption stage

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(const SceneInput& input, RunTrace& trace) = 0;
  virtual Json describe() const = 0;
};

class SimulatedCaptioner : public Captioner {
 public:
  explicit SimulatedCaptioner(CaptionErrorModel em, const Catalog& catalog = default_catalog())
      : em_(em), catalog_(catalog) {
    em_.validate();
  }

  std::string caption(const SceneInput& input, RunTrace& trace) override {
    const Scene* scene = input.scene();
    if (!scene) throw Error(ErrorCode::incompatible_input, "simulated captioner needs a ground-truth scene");
    auto started = std::chrono::steady_clock::now();
    std::string text = simulate_captions(*scene, em_, catalog_);
    trace.stages.push_back({"caption", scene->scene_id, text, detail::elapsed_ms(started), {}, 1});
    return text;
  }

  Json describe() const override {
    return {{"captioner", "simulated"},
            {"p_state_omit", em_.p_state_omit},
            {"p_object_miss", em_.p_object_miss},
            {"caption_seed", em_.seed}};
  }

 private:
  CaptionErrorModel em_;
  const Catalog& catalog_;
};

struct ChatSettings {
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{60000};

  ChatRequest request(std::vector<ContentPart> parts) const {
    ChatRequest r;
    r.model = model;
    r.temperature = temperature;
    r.max_tokens = max_tokens;
    r.timeout = timeout;
    r.messages.push_back({"user", std::move(parts)});
    return r;
  }
};

inline const char* kCaptionPrompt =
    "List every object on this table, one short sentence per object. Name the object and its color, and say "
    "what condition it is in (for example whole, half, sliced, peel, clean, dirty, or holding food).";

// Dense captions from a hosted vision model.
class RemoteCaptioner : public Captioner {
 public:
  RemoteCaptioner(ChatModel& model, ChatSettings settings) : model_(model), settings_(std::move(settings)) {}

  std::string caption(const SceneInput& input, RunTrace& trace) override {
    const ImageInput* image = input.image();
    ImageInput loaded;
    if (!image && input.scene() && input.scene()->image_ref) {
      loaded.bytes = read_text_file(*input.scene()->image_ref);
      loaded.media_type = detail::media_type_for(*input.scene()->image_ref);
      image = &loaded;
    }
    if (!image) throw Error(ErrorCode::incompatible_input, "remote captioner needs an image");
    ChatResponse r = model_.complete(settings_.request(
        {ContentPart::text_part(kCaptionPrompt), ContentPart::image_part(data_uri(image->media_type, image->bytes))}));
    trace.stages.push_back(
        {"caption", "<image>", r.text, static_cast<double>(r.latency.count()), r.usage, r.attempt_count});
    return r.text;
  }

  Json describe() const override { return {{"captioner", "remote"}, {"model", settings_.model}}; }

 private:
  ChatModel& model_;
  ChatSettings settings_;
};

// ---------------------------------------------------------------------------
// Text-planning stage

class TextPlanner {
 public:
  virtual ~TextPlanner() = default;
  virtual std::string plan_text(const std::string& caption, const TaskSpec& task, PromptMode mode,
                                RunTrace& trace) = 0;
  virtual Json describe() const = 0;
};

class RuleTextPlanner : public TextPlanner {
 public:
  explicit RuleTextPlanner(const Catalog& catalog = default_catalog()) : planner_(catalog) {}

  std::string plan_text(const std::string& caption, const TaskSpec& task, PromptMode, RunTrace& trace) override {
    auto started = std::chrono::steady_clock::now();
    std::string text = planner_.plan(caption, task);
    trace.stages.push_back({"plan", caption, text, detail::elapsed_ms(started), {}, 1});
    return text;
  }

  Json describe() const override { return {{"planner", "rule-based"}}; }

 private:
  RuleBasedTextPlanner planner_;
};

class ChatTextPlanner : public TextPlanner {
 public:
  ChatTextPlanner(ChatModel& model, ChatSettings settings, PlanScope scope = PlanScope::full_plan)
      : model_(model), settings_(std::move(settings)), scope_(scope) {}

  std::string plan_text(const std::string& caption, const TaskSpec& task, PromptMode mode,
                        RunTrace& trace) override {
    PromptSpec spec = make_prompt_spec(task, mode, scope_);
    Prompt prompt = build_prompt(spec, InputKind::caption);
    trace.prompt_hashes.push_back(sha256_hex(prompt.text));
    std::string text = prompt.text + "\nScene description:\n" + caption;
    ChatResponse r = model_.complete(settings_.request({ContentPart::text_part(text)}));
    trace.stages.push_back({"plan", text, r.text, static_cast<double>(r.latency.count()), r.usage, r.attempt_count});
    return r.text;
  }

  Json describe() const override { return {{"planner", "chat"}, {"model", settings_.model}}; }

 private:
  ChatModel& model_;
  ChatSettings settings_;
  PlanScope scope_;
};

class ModularBackend : public Backend {
 public:
  ModularBackend(std::string id, std::string method, std::shared_ptr<Captioner> captioner,
                 std::shared_ptr<TextPlanner> planner, bool serialized = false, double temperature = 0.0)
      : id_(std::move(id)),
        method_(std::move(method)),
        captioner_(std::move(captioner)),
        planner_(std::move(planner)),
        serialized_(serialized),
        temperature_(temperature) {}

  PlanOutput plan(const SceneInput& input, const TaskSpec& task, PromptMode mode) override {
    PlanOutput out;
    std::string caption;
    if (const CaptionInput* c = input.caption()) caption = c->text;
    else caption = captioner_->caption(input, out.trace);
    std::string text = planner_->plan_text(caption, task, mode, out.trace);
    out.report = detail::parse_or_empty(text);
    return out;
  }

  BackendDescriptor descriptor() const override {
    BackendDescriptor d;
    d.id = id_;
    d.method = method_;
    d.serialized = serialized_;
    d.temperature = temperature_;
    d.params = {{"caption", captioner_->describe()}, {"plan", planner_->describe()}};
    return d;
  }

 private:
  std::string id_;
  std::string method_;
  std::shared_ptr<Captioner> captioner_;
  std::shared_ptr<TextPlanner> planner_;
  bool serialized_;
  double temperature_;
};

class MonolithicBackend : public Backend {
 public:
  MonolithicBackend(ChatModel& model, ChatSettings settings, std::string method = "monolithic",
                    PlanScope scope = PlanScope::full_plan)
      : model_(model), settings_(std::move(settings)), method_(std::move(method)), scope_(scope) {}

  PlanOutput plan(const SceneInput& input, const TaskSpec& task, PromptMode mode) override {
    const ImageInput* image = input.image();
    ImageInput loaded;
    if (!image && input.scene()) {
      if (!input.scene()->image_ref)
        throw Error(ErrorCode::incompatible_input, "scene " + input.scene()->scene_id + " has no image_ref");
      loaded.bytes = read_text_file(*input.scene()->image_ref);
      loaded.media_type = detail::media_type_for(*input.scene()->image_ref);
      image = &loaded;
    }
    if (!image) throw Error(ErrorCode::incompatible_input, "monolithic backend needs an image or a scene image");

    PlanOutput out;
    PromptSpec spec = make_prompt_spec(task, mode, scope_);
    Prompt prompt = build_prompt(spec, InputKind::image);
    out.trace.prompt_hashes.push_back(sha256_hex(prompt.text));
    ChatResponse r = model_.complete(settings_.request(
        {ContentPart::text_part(prompt.text), ContentPart::image_part(data_uri(image->media_type, image->bytes))}));
    out.trace.stages.push_back(
        {"plan", prompt.text, r.text, static_cast<double>(r.latency.count()), r.usage, r.attempt_count});
    out.report = detail::parse_or_empty(r.text);
    return out;
  }

  BackendDescriptor descriptor() const override {
    BackendDescriptor d;
    d.id = "monolithic-remote";
    d.method = method_;
    d.serialized = !model_.thread_safe();
    d.temperature = settings_.temperature;
    d.model = settings_.model;
    return d;
  }

 private:
  ChatModel& model_;
  ChatSettings settings_;
  std::string method_;
  PlanScope scope_;
};

// Chat model that replays scripted answers; used for tests and offline
// replays of recorded model output.
class ReplayChatModel : public ChatModel {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  explicit ReplayChatModel(Responder responder) : responder_(std::move(responder)) {}

  ChatResponse complete(const ChatRequest& req) override {
    std::lock_guard lock(mutex_);
    requests_.push_back(req);
    ChatResponse r;
    r.text = responder_(req);
    return r;
  }
  bool thread_safe() const override { return false; }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Responder responder_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
};

inline std::unique_ptr<Backend> make_modular_sim_backend(CaptionErrorModel em, const Catalog& catalog = default_catalog()) {
  return std::make_unique<ModularBackend>("modular-sim", "modular-sim", std::make_shared<SimulatedCaptioner>(em, catalog),
                                          std::make_shared<RuleTextPlanner>(catalog));
}

}  // namespace ossa
