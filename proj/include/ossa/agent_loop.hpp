#pragma once

// One pass of the agent loop: generate plans for the scene, ask the user
// about every plan whose destination is uncertain, revise those plans from
// the answers and hand the resulting commands to the executor.

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ossa/backends.hpp"

namespace ossa {

enum class Answer { keep, discard };

constexpr std::string_view to_string(Answer a) { return a == Answer::keep ? "keep" : "discard"; }

inline std::optional<Answer> parse_answer(std::string_view raw) {
  std::string t = detail::normalize_spacing(raw);
  while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
  static const std::map<std::string, Answer> answers = {
      {"keep", Answer::keep},         {"keep it", Answer::keep},          {"keep them", Answer::keep},
      {"store", Answer::keep},        {"store it", Answer::keep},         {"save", Answer::keep},
      {"save it", Answer::keep},      {"discard", Answer::discard},       {"discard it", Answer::discard},
      {"throw away", Answer::discard}, {"throw it away", Answer::discard}, {"trash", Answer::discard},
      {"trash it", Answer::discard},  {"bin it", Answer::discard},        {"dispose", Answer::discard},
  };
  auto it = answers.find(t);
  if (it == answers.end()) return std::nullopt;
  return it->second;
}

struct ClarificationRequest {
  std::string object_name;
  std::optional<ObjectState> detected_state;
  std::string question;
  std::vector<std::string> allowed_answers{"keep", "discard"};
};

struct ClarificationExchange {
  ClarificationRequest request;
  std::vector<std::string> raw_answers;  // every reply, including unrecognized ones
  Answer answer = Answer::keep;
};

struct ScriptedPolicy {
  std::optional<Answer> global;
  std::map<std::string, Answer> per_object;  // keyed by canonical label token

  static ScriptedPolicy always(Answer a) { return {a, {}}; }
};

struct InteractivePolicy {
  std::function<std::string(const ClarificationRequest&)> ask;
  int max_attempts = 3;
};

using UserPolicy = std::variant<ScriptedPolicy, InteractivePolicy>;

struct Command {
  std::string object_name;
  GraspType grasping_type = GraspType::top_grasp;
  Destination destination = Destination::cupboard;
  PlaceType placing_type = PlaceType::place;

  bool operator==(const Command&) const = default;
};

struct QuarantinedPlan {
  Plan plan;
  std::vector<std::string> reasons;

  bool operator==(const QuarantinedPlan&) const = default;
};

struct CommandBatch {
  std::vector<Command> commands;
  std::vector<QuarantinedPlan> quarantined;
};

struct EpisodeTimings {
  double generate_ms = 0.0;
  double clarify_ms = 0.0;
  double dispatch_ms = 0.0;
};

struct EpisodeResult {
  TaskSpec task;
  std::vector<Plan> initial_plans;
  std::vector<Plan> final_plans;
  std::vector<ClarificationExchange> transcript;
  std::vector<Command> commands;
  std::vector<QuarantinedPlan> quarantined;
  std::vector<std::string> parse_warnings;
  RunTrace trace;
  EpisodeTimings timings;
  bool dispatched = false;
};

// Compares everything except timings and trace latencies.
inline bool same_outcome(const EpisodeResult& a, const EpisodeResult& b) {
  if (a.transcript.size() != b.transcript.size()) return false;
  for (std::size_t i = 0; i < a.transcript.size(); ++i) {
    const auto& x = a.transcript[i];
    const auto& y = b.transcript[i];
    if (x.request.object_name != y.request.object_name || x.request.question != y.request.question ||
        x.raw_answers != y.raw_answers || x.answer != y.answer)
      return false;
  }
  return a.task == b.task && a.initial_plans == b.initial_plans && a.final_plans == b.final_plans &&
         a.commands == b.commands && a.quarantined == b.quarantined && a.parse_warnings == b.parse_warnings &&
         a.dispatched == b.dispatched;
}

// Applies the user's answer to a plan whose destination is uncertain: keep
// stores the object in the fridge; discard throws leftover food away and
// pours a container's contents out before it goes to the dishwasher.
inline Plan revise_plan(const Plan& plan, Answer answer) {
  if (plan.destination != Destination::uncertain)
    throw Error(ErrorCode::not_ambiguous, plan.name + " does not have an uncertain destination");
  Plan out = plan;
  if (answer == Answer::keep) {
    out.destination = Destination::fridge;
    out.placing_type = PlaceType::place;
    return out;
  }
  bool holds_food = plan.state ? *plan.state == ObjectState::containing_leftover_food : plan.container.value_or(false);
  if (holds_food) {
    out.destination = Destination::dishwasher;
    out.placing_type = PlaceType::pour;
  } else {
    out.destination = Destination::trash_bin;
    out.placing_type = PlaceType::place;
  }
  return out;
}

inline Plan revise_plan(const Plan& plan, std::string_view answer) {
  auto a = parse_answer(answer);
  if (!a) throw Error(ErrorCode::unrecognized_answer, "'" + std::string(answer) + "' is not keep or discard");
  return revise_plan(plan, *a);
}

inline CommandBatch to_commands(const std::vector<Plan>& plans) {
  CommandBatch batch;
  for (const auto& p : plans) {
    if (p.destination == Destination::uncertain)
      throw std::logic_error("plan for " + p.name + " still has an uncertain destination");
    std::vector<std::string> reasons;
    if (!p.grasping_type) reasons.emplace_back("unknown grasp");
    if (!p.destination) reasons.emplace_back("unknown destination");
    if (!p.placing_type) reasons.emplace_back("unknown placing");
    if (!reasons.empty()) {
      batch.quarantined.push_back({p, std::move(reasons)});
      continue;
    }
    batch.commands.push_back({p.name, *p.grasping_type, *p.destination, *p.placing_type});
  }
  return batch;
}

class Executor {
 public:
  virtual ~Executor() = default;
  virtual void execute(const std::vector<Command>& commands) = 0;
};

// Stand-in for learned manipulation skills: checks each command and logs it.
class StubExecutor : public Executor {
 public:
  void execute(const std::vector<Command>& commands) override {
    for (const auto& c : commands) {
      if (c.destination == Destination::uncertain)
        throw std::logic_error("executor received an uncertain destination for " + c.object_name);
      log_.push_back(c);
    }
    ++batches_;
  }

  const std::vector<Command>& log() const { return log_; }
  std::size_t batches() const { return batches_; }

 private:
  std::vector<Command> log_;
  std::size_t batches_ = 0;
};

struct EpisodeObserver {
  std::function<void(const std::vector<Plan>&)> on_plans;
  std::function<void(const ClarificationRequest&)> on_clarification;
  std::function<void(const Plan&)> on_revised;
};

class EpisodeError : public Error {
 public:
  EpisodeError(ErrorCode code, const std::string& message, EpisodeResult partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const EpisodeResult& partial() const { return partial_; }

 private:
  EpisodeResult partial_;
};

inline ClarificationRequest make_clarification(const Plan& p) {
  ClarificationRequest r;
  r.object_name = p.name;
  r.detected_state = p.state;
  std::string state = p.state ? " (" + std::string(to_string(*p.state)) + ")" : "";
  r.question = "What should I do with the " + p.name + state + "? Should I keep it or discard it?";
  return r;
}

namespace detail {

inline ClarificationExchange resolve(const ClarificationRequest& req, const UserPolicy& policy) {
  ClarificationExchange ex;
  ex.request = req;
  if (const auto* scripted = std::get_if<ScriptedPolicy>(&policy)) {
    std::optional<Answer> a = scripted->global;
    if (auto it = scripted->per_object.find(canonicalize_label(req.object_name).token);
        it != scripted->per_object.end())
      a = it->second;
    if (!a) throw Error(ErrorCode::policy_exhausted, "no scripted answer for " + req.object_name);
    ex.raw_answers.emplace_back(to_string(*a));
    ex.answer = *a;
    return ex;
  }
  const auto& interactive = std::get<InteractivePolicy>(policy);
  for (int attempt = 0; attempt < interactive.max_attempts; ++attempt) {
    std::string reply = interactive.ask(req);
    ex.raw_answers.push_back(reply);
    if (auto a = parse_answer(reply)) {
      ex.answer = *a;
      return ex;
    }
  }
  throw Error(ErrorCode::policy_exhausted, std::to_string(interactive.max_attempts) +
                                               " unrecognized answers for " + req.object_name);
}

}  // namespace detail

inline EpisodeResult run_episode(const SceneInput& input, const TaskSpec& task, Backend& backend,
                                 const UserPolicy& policy, PromptMode mode = PromptMode::zero_shot,
                                 Executor* executor = nullptr, const EpisodeObserver* observer = nullptr) {
  using clock = std::chrono::steady_clock;
  EpisodeResult result;
  result.task = task;

  auto t0 = clock::now();
  PlanOutput generated;
  try {
    generated = plan_with_backend(backend, input, task, mode);
  } catch (const Error& e) {
    result.timings.generate_ms = detail::elapsed_ms(t0);
    throw EpisodeError(e.code() == ErrorCode::incompatible_input ? e.code() : ErrorCode::backend_error, e.message(),
                       std::move(result));
  }
  result.timings.generate_ms = detail::elapsed_ms(t0);
  result.initial_plans = generated.report.plans;
  result.parse_warnings = generated.report.warnings;
  result.trace = std::move(generated.trace);
  if (observer && observer->on_plans) observer->on_plans(result.initial_plans);

  auto t1 = clock::now();
  std::vector<Plan> commands_in;
  for (const auto& plan : result.initial_plans) {
    if (plan.destination != Destination::uncertain) {
      commands_in.push_back(plan);
      continue;
    }
    ClarificationRequest req = make_clarification(plan);
    if (observer && observer->on_clarification) observer->on_clarification(req);
    ClarificationExchange ex;
    try {
      ex = detail::resolve(req, policy);
    } catch (const Error& e) {
      result.timings.clarify_ms = detail::elapsed_ms(t1);
      result.final_plans = commands_in;
      throw EpisodeError(e.code(), e.message(), std::move(result));
    }
    Plan revised = revise_plan(plan, ex.answer);
    result.transcript.push_back(std::move(ex));
    if (observer && observer->on_revised) observer->on_revised(revised);
    commands_in.push_back(std::move(revised));
  }
  result.timings.clarify_ms = detail::elapsed_ms(t1);
  result.final_plans = commands_in;

  auto t2 = clock::now();
  CommandBatch batch = to_commands(commands_in);
  result.commands = std::move(batch.commands);
  result.quarantined = std::move(batch.quarantined);
  if (!result.commands.empty()) {
    if (executor) executor->execute(result.commands);
    result.dispatched = true;
  }
  result.timings.dispatch_ms = detail::elapsed_ms(t2);
  return result;
}

// ---------------------------------------------------------------------------
// Result documents

inline Json command_to_json(const Command& c) {
  return {{"object_name", c.object_name},
          {"grasping_type", std::string(to_string(c.grasping_type))},
          {"destination", std::string(to_string(c.destination))},
          {"placing_type", std::string(to_string(c.placing_type))}};
}

inline Json clarification_to_json(const ClarificationRequest& r) {
  Json j = {{"object_name", r.object_name},
            {"detected_state", r.detected_state ? Json(std::string(to_string(*r.detected_state))) : Json()},
            {"question", r.question},
            {"allowed_answers", r.allowed_answers}};
  return j;
}

inline Json plan_list_to_json(const std::vector<Plan>& plans) {
  Json arr = Json::array();
  for (const auto& p : plans) {
    Json j = plan_to_json(p);
    Json row = {{"name", p.name}};
    for (auto& [k, v] : j.items()) row[k] = v;
    arr.push_back(std::move(row));
  }
  return arr;
}

inline Json episode_to_json(const EpisodeResult& r) {
  Json transcript = Json::array();
  for (const auto& ex : r.transcript) {
    transcript.push_back({{"request", clarification_to_json(ex.request)},
                          {"replies", ex.raw_answers},
                          {"answer", std::string(to_string(ex.answer))}});
  }
  Json commands = Json::array();
  for (const auto& c : r.commands) commands.push_back(command_to_json(c));
  Json quarantined = Json::array();
  for (const auto& q : r.quarantined) quarantined.push_back({{"object_name", q.plan.name}, {"reasons", q.reasons}});
  return {{"task_id", std::string(to_string(r.task.id))},
          {"instruction", r.task.instruction},
          {"initial_plans", plan_list_to_json(r.initial_plans)},
          {"final_plans", plan_list_to_json(r.final_plans)},
          {"transcript", std::move(transcript)},
          {"commands", std::move(commands)},
          {"quarantined", std::move(quarantined)},
          {"parse_warnings", r.parse_warnings},
          {"dispatched", r.dispatched},
          {"timings_ms",
           {{"generate", r.timings.generate_ms}, {"clarify", r.timings.clarify_ms}, {"dispatch", r.timings.dispatch_ms}}}};
}

}  // namespace ossa
