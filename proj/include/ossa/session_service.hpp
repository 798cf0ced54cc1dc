#pragma once

// HTTP session service around run_episode.
//
//   POST /api/sessions               {scene_id | scene, task_id, backend_id, mode} -> {session_id}
//   GET  /api/sessions/{id}          -> {status, plans, pending_clarification?, ...}
//   POST /api/sessions/{id}/answer   {object_name, answer} -> session state
//   GET  /api/sessions/{id}/result   -> episode document
//
// Each session runs its episode on its own thread. The clarification policy
// blocks that thread until an answer arrives through the answer endpoint.

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "ossa/agent_loop.hpp"

namespace ossa {

enum class SessionStatus { pending, awaiting_answer, complete, error };

constexpr std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::pending: return "pending";
    case SessionStatus::awaiting_answer: return "awaiting_answer";
    case SessionStatus::complete: return "complete";
    case SessionStatus::error: return "error";
  }
  return "?";
}

using SessionBackendFactory = std::function<std::unique_ptr<Backend>(const std::string& backend_id)>;

struct SessionServiceConfig {
  std::optional<Dataset> dataset;  // scenes addressable by scene_id
  SessionBackendFactory backends;  // defaults to the oracle only
  std::optional<std::filesystem::path> out_dir;
  int max_answer_attempts = 3;
  std::chrono::milliseconds answer_wait{30000};
};

struct HttpReply {
  int status = 200;
  Json body;
};

inline HttpReply error_reply(int status, std::string_view code, std::string message) {
  return {status, {{"error_code", std::string(code)}, {"message", std::move(message)}}};
}

class SessionService {
 public:
  explicit SessionService(SessionServiceConfig config) : config_(std::move(config)) {
    if (!config_.backends) {
      config_.backends = [](const std::string& id) -> std::unique_ptr<Backend> {
        if (id == "oracle") return std::make_unique<OracleBackend>();
        return nullptr;
      };
    }
    install_routes();
  }

  ~SessionService() { stop(); }

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Binds and starts serving on a background thread; port 0 picks a free
  // port. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
      if (bound < 0) throw Error(ErrorCode::bind_error, "cannot bind " + host);
    } else if (!server_.bind_to_port(host, port)) {
      throw Error(ErrorCode::bind_error, "cannot bind " + host + ":" + std::to_string(port));
    }
    port_ = bound;
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    // stop() is a no-op until the listener runs; do not return before that.
    server_.wait_until_ready();
    return bound;
  }

  // Blocks the caller until stop() is called from elsewhere.
  void serve(const std::string& host, int port) {
    if (!server_.bind_to_port(host, port))
      throw Error(ErrorCode::bind_error, "cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    server_.listen_after_bind();
  }

  int port() const { return port_; }

  // Stops accepting requests, cancels sessions still waiting for an answer,
  // joins every session thread and flushes their documents.
  void stop() {
    {
      std::lock_guard lock(mutex_);
      if (stopped_) return;
      stopped_ = true;
    }
    server_.stop();
    if (listener_.joinable()) listener_.join();
    std::vector<std::shared_ptr<Session>> sessions;
    {
      std::lock_guard lock(mutex_);
      for (auto& [id, s] : sessions_) sessions.push_back(s);
    }
    for (auto& s : sessions) {
      {
        std::lock_guard lock(s->mutex);
        s->cancelled = true;
      }
      s->cv.notify_all();
    }
    for (auto& s : sessions)
      if (s->worker.joinable()) s->worker.join();
    for (auto& s : sessions) flush(*s);
  }

  // Request handlers, callable without HTTP.

  HttpReply create(const std::string& body) {
    Json req;
    try {
      req = Json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return error_reply(400, to_string(ErrorCode::parse_error), e.what());
    }
    if (!req.is_object()) return error_reply(400, to_string(ErrorCode::schema_error), "request body must be an object");

    auto task_id = parse_task_id(req.value("task_id", std::string()));
    if (!task_id) return error_reply(400, to_string(ErrorCode::schema_error), "task_id must be one of t1, t2, t3");
    auto mode = parse_prompt_mode(req.value("mode", std::string("zero-shot")));
    if (!mode) return error_reply(400, to_string(ErrorCode::schema_error), "mode must be zero-shot or few-shot");

    Scene scene;
    if (auto it = req.find("scene"); it != req.end()) {
      try {
        scene = scene_from_json(*it, "$.scene");
      } catch (const Error& e) {
        return error_reply(400, to_string(e.code()), e.message());
      }
    } else if (auto sid = req.find("scene_id"); sid != req.end() && sid->is_string()) {
      const Scene* found = nullptr;
      if (config_.dataset)
        for (const auto& s : config_.dataset->scenes)
          if (s.scene_id == sid->get<std::string>()) found = &s;
      if (!found) return error_reply(404, "not_found", "unknown scene_id '" + sid->get<std::string>() + "'");
      scene = *found;
    } else {
      return error_reply(400, to_string(ErrorCode::schema_error), "request needs scene_id or scene");
    }
    if (scene.objects.empty()) return error_reply(400, to_string(ErrorCode::empty_scene), "scene has no objects");

    std::string backend_id = req.value("backend_id", std::string("oracle"));
    std::unique_ptr<Backend> backend;
    try {
      backend = config_.backends(backend_id);
    } catch (const Error& e) {
      return error_reply(400, to_string(e.code()), e.message());
    }
    if (!backend) return error_reply(400, to_string(ErrorCode::invalid_config), "unknown backend_id '" + backend_id + "'");

    auto session = std::make_shared<Session>();
    session->task = TaskSpec::make(*task_id);
    session->scene_id = scene.scene_id;
    session->backend = std::move(backend);
    {
      std::lock_guard lock(mutex_);
      if (stopped_) return error_reply(409, "shutting_down", "service is stopping");
      session->id = "s-" + std::to_string(++next_id_);
      sessions_[session->id] = session;
    }
    session->worker = std::thread([this, session, scene = std::move(scene), mode = *mode]() mutable {
      run(*session, std::move(scene), mode);
    });
    return {201, {{"session_id", session->id}}};
  }

  HttpReply state(const std::string& id) {
    auto s = find(id);
    if (!s) return not_found(id);
    std::lock_guard lock(s->mutex);
    return {200, state_document(*s)};
  }

  HttpReply answer(const std::string& id, const std::string& body) {
    auto s = find(id);
    if (!s) return not_found(id);
    Json req;
    try {
      req = Json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return error_reply(400, to_string(ErrorCode::parse_error), e.what());
    }
    if (!req.is_object() || !req.contains("answer") || !req["answer"].is_string())
      return error_reply(400, to_string(ErrorCode::schema_error), "request needs a string 'answer'");

    std::unique_lock lock(s->mutex);
    if (s->status != SessionStatus::awaiting_answer || !s->pending)
      return error_reply(409, "not_awaiting_answer",
                         "session " + id + " is " + std::string(to_string(s->status)) + ", not awaiting an answer");
    if (auto name = req.find("object_name"); name != req.end() && name->is_string() &&
                                             name->get<std::string>() != s->pending->object_name)
      return error_reply(409, "stale_clarification",
                         "pending clarification is about '" + s->pending->object_name + "'");

    std::uint64_t seq = s->answers_taken;
    s->reply = req["answer"].get<std::string>();
    s->status = SessionStatus::pending;
    s->pending.reset();
    s->cv.notify_all();
    // Reply with the state after the worker has acted on the answer.
    s->cv.wait_for(lock, config_.answer_wait,
                   [&] { return s->answers_taken > seq && s->status != SessionStatus::pending; });
    return {200, state_document(*s)};
  }

  HttpReply result(const std::string& id) {
    auto s = find(id);
    if (!s) return not_found(id);
    std::lock_guard lock(s->mutex);
    if (s->status == SessionStatus::complete) return {200, episode_to_json(*s->result)};
    if (s->status == SessionStatus::error) {
      HttpReply r = error_reply(409, s->error_code, s->error_message);
      if (s->result) r.body["partial"] = episode_to_json(*s->result);
      return r;
    }
    return error_reply(409, "not_complete", "session " + id + " is " + std::string(to_string(s->status)));
  }

  // Blocks until the session leaves the pending state; for tests and the CLI.
  SessionStatus wait_settled(const std::string& id, std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    auto s = find(id);
    if (!s) throw Error(ErrorCode::schema_error, "unknown session " + id);
    std::unique_lock lock(s->mutex);
    s->cv.wait_for(lock, timeout, [&] { return s->status != SessionStatus::pending; });
    return s->status;
  }

 private:
  struct Session {
    std::string id;
    std::string scene_id;
    TaskSpec task;
    std::unique_ptr<Backend> backend;
    std::thread worker;

    std::mutex mutex;
    std::condition_variable cv;
    SessionStatus status = SessionStatus::pending;
    std::vector<Plan> plans;
    std::optional<ClarificationRequest> pending;
    std::optional<std::string> reply;
    std::uint64_t answers_taken = 0;
    Json answered = Json::array();
    std::optional<EpisodeResult> result;
    std::string error_code;
    std::string error_message;
    bool cancelled = false;
    bool flushed = false;
  };

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  static HttpReply not_found(const std::string& id) { return error_reply(404, "not_found", "no session " + id); }

  static Json state_document(const Session& s) {
    Json j = {{"session_id", s.id},
              {"status", std::string(to_string(s.status))},
              {"task_id", std::string(to_string(s.task.id))},
              {"instruction", s.task.instruction},
              {"scene_id", s.scene_id},
              {"plans", plan_list_to_json(s.plans)},
              {"answered", s.answered}};
    if (s.pending) j["pending_clarification"] = clarification_to_json(*s.pending);
    if (s.status == SessionStatus::complete && s.result) {
      Json commands = Json::array();
      for (const auto& c : s.result->commands) commands.push_back(command_to_json(c));
      j["final_plans"] = plan_list_to_json(s.result->final_plans);
      j["commands"] = std::move(commands);
    }
    if (s.status == SessionStatus::error) j["error"] = {{"error_code", s.error_code}, {"message", s.error_message}};
    return j;
  }

  void run(Session& s, Scene scene, PromptMode mode) {
    InteractivePolicy policy;
    policy.max_attempts = config_.max_answer_attempts;
    policy.ask = [&s](const ClarificationRequest& req) -> std::string {
      std::unique_lock lock(s.mutex);
      s.pending = req;
      s.status = SessionStatus::awaiting_answer;
      ++s.answers_taken;  // a new question counts as the worker having acted
      s.cv.notify_all();
      s.cv.wait(lock, [&] { return s.reply.has_value() || s.cancelled; });
      if (!s.reply) throw Error(ErrorCode::policy_exhausted, "session cancelled while awaiting an answer");
      std::string r = std::move(*s.reply);
      s.reply.reset();
      s.answered.push_back({{"object_name", req.object_name}, {"reply", r}});
      return r;
    };
    EpisodeObserver observer;
    observer.on_plans = [&s](const std::vector<Plan>& plans) {
      std::lock_guard lock(s.mutex);
      s.plans = plans;
    };

    StubExecutor executor;
    std::optional<EpisodeResult> result;
    std::string code, message;
    std::optional<EpisodeResult> partial;
    try {
      result = run_episode(SceneInput::from_scene(std::move(scene)), s.task, *s.backend, policy, mode, &executor,
                           &observer);
    } catch (const EpisodeError& e) {
      code = std::string(to_string(e.code()));
      message = e.message();
      partial = e.partial();
    } catch (const std::exception& e) {
      code = std::string(to_string(ErrorCode::backend_error));
      message = e.what();
    }
    {
      std::lock_guard lock(s.mutex);
      s.pending.reset();
      if (result) {
        s.result = std::move(result);
        s.status = SessionStatus::complete;
      } else {
        s.result = std::move(partial);
        s.error_code = code;
        s.error_message = message;
        s.status = SessionStatus::error;
      }
      ++s.answers_taken;
    }
    s.cv.notify_all();
    flush(s);
  }

  void flush(Session& s) {
    if (!config_.out_dir) return;
    Json doc;
    std::string id;
    {
      std::lock_guard lock(s.mutex);
      if (s.flushed || (s.status != SessionStatus::complete && s.status != SessionStatus::error)) return;
      s.flushed = true;
      id = s.id;
      doc = state_document(s);
      if (s.result) doc["episode"] = episode_to_json(*s.result);
    }
    std::error_code ec;
    std::filesystem::create_directories(*config_.out_dir, ec);
    write_text_file(*config_.out_dir / (id + ".json"), doc.dump(2) + "\n");
  }

  void install_routes() {
    // SO_REUSEADDR only: a second server on a taken port must fail to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    auto send = [](httplib::Response& res, const HttpReply& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server_.Post("/api/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, create(req.body));
    });
    server_.Get(R"(/api/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, state(req.matches[1]));
    });
    server_.Post(R"(/api/sessions/([^/]+)/answer)",
                 [this, send](const httplib::Request& req, httplib::Response& res) {
                   send(res, answer(req.matches[1], req.body));
                 });
    server_.Get(R"(/api/sessions/([^/]+)/result)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, result(req.matches[1]));
    });
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      Json body = {{"error_code", res.status == 404 ? "not_found" : "bad_request"},
                   {"message", "HTTP " + std::to_string(res.status)}};
      res.set_content(body.dump(), "application/json");
    });
  }

  SessionServiceConfig config_;
  httplib::Server server_;
  std::thread listener_;
  int port_ = 0;

  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 0;
  bool stopped_ = false;
};

}  // namespace ossa
