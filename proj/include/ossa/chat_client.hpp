#pragma once

// Chat-completions client for an externally hosted model.
//
// POST <base_url>/chat/completions with a bearer key read from OSSA_API_KEY.
// Transport failures, timeouts, 429 and 5xx responses are retried with
// exponential backoff; 401/403 fail immediately.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <openssl/evp.h>

#include "ossa/scene_model.hpp"

namespace ossa {

struct ContentPart {
  enum class Type { text, image_url };
  Type type = Type::text;
  std::string value;  // text, or a URL / data URI

  static ContentPart text_part(std::string t) { return {Type::text, std::move(t)}; }
  static ContentPart image_part(std::string url) { return {Type::image_url, std::move(url)}; }
};

struct ChatMessage {
  std::string role = "user";
  std::vector<ContentPart> content;
};

struct ChatRequest {
  std::string model = "gpt-4o";
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{60000};
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long total_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    total_tokens += o.total_tokens;
    return *this;
  }
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
};

class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  // False when calls must be serialized by the caller.
  virtual bool thread_safe() const { return true; }
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay_before(int attempt) const {  // attempt >= 2
    double d = static_cast<double>(initial_delay.count());
    for (int i = 2; i < attempt; ++i) d *= backoff_factor;
    return std::min(std::chrono::milliseconds(static_cast<long long>(d)), max_delay);
  }
};

struct ClientConfig {
  std::string base_url;
  std::string api_key_env = "OSSA_API_KEY";
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds connect_timeout{10000};
};

inline Json chat_request_to_json(const ChatRequest& req) {
  Json messages = Json::array();
  for (const auto& m : req.messages) {
    Json content = Json::array();
    for (const auto& part : m.content) {
      if (part.type == ContentPart::Type::text)
        content.push_back({{"type", "text"}, {"text", part.value}});
      else
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", part.value}}}});
    }
    messages.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  return {{"model", req.model},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens}};
}

inline std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline std::string data_uri(std::string_view media_type, std::string_view bytes) {
  return "data:" + std::string(media_type) + ";base64," + base64_encode(bytes);
}

struct ClientStats {
  long requests = 0;
  long attempts = 0;
  long failures = 0;
  TokenUsage usage;
  double total_latency_ms = 0.0;
};

class RemoteChatClient : public ChatModel {
 public:
  explicit RemoteChatClient(ClientConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw Error(ErrorCode::invalid_config, "remote model requires a base URL");
    auto scheme = config_.base_url.find("://");
    std::size_t host_begin = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = config_.base_url.find('/', host_begin);
    origin_ = config_.base_url.substr(0, slash);
    path_prefix_ = slash == std::string::npos ? "" : config_.base_url.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (config_.max_in_flight == 0) config_.max_in_flight = 1;
  }

  ChatResponse complete(const ChatRequest& req) override {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw Error(ErrorCode::auth_error, "environment variable " + config_.api_key_env + " is not set");

    Slot slot(*this);
    const std::string body = chat_request_to_json(req).dump();
    const auto started = std::chrono::steady_clock::now();
    std::optional<Error> last;
    int attempt = 1;
    for (; attempt <= std::max(1, config_.retry.max_attempts); ++attempt) {
      if (attempt > 1) std::this_thread::sleep_for(config_.retry.delay_before(attempt));
      record_attempt();
      try {
        ChatResponse resp = attempt_once(req, body, key);
        resp.attempt_count = attempt;
        resp.latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
        record_success(resp);
        return resp;
      } catch (const Error& e) {
        last = e;
        bool transient = e.code() == ErrorCode::rate_limited || e.code() == ErrorCode::timeout ||
                         e.code() == ErrorCode::transport_error;
        if (!transient || !retryable_) break;
      }
    }
    record_failure();
    throw *last;
  }

  ClientStats stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
  }

  std::size_t peak_in_flight() const { return peak_in_flight_.load(); }

 private:
  // Bounded number of concurrent requests.
  class Slot {
   public:
    explicit Slot(RemoteChatClient& c) : c_(c) {
      std::unique_lock lock(c_.slot_mutex_);
      c_.slot_cv_.wait(lock, [&] { return c_.in_flight_ < c_.config_.max_in_flight; });
      ++c_.in_flight_;
      std::size_t now = c_.in_flight_;
      std::size_t peak = c_.peak_in_flight_.load();
      while (now > peak && !c_.peak_in_flight_.compare_exchange_weak(peak, now)) {
      }
    }
    ~Slot() {
      {
        std::lock_guard lock(c_.slot_mutex_);
        --c_.in_flight_;
      }
      c_.slot_cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    RemoteChatClient& c_;
  };

  ChatResponse attempt_once(const ChatRequest& req, const std::string& body, const char* key) {
    retryable_ = true;
    httplib::Client cli(origin_);
    cli.set_connection_timeout(config_.connect_timeout);
    cli.set_read_timeout(req.timeout);
    cli.set_write_timeout(req.timeout);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
        throw Error(ErrorCode::timeout, "request timed out or connection dropped (" + httplib::to_string(err) + ")");
      throw Error(ErrorCode::transport_error, httplib::to_string(err));
    }
    if (res->status == 401 || res->status == 403) {
      retryable_ = false;
      throw Error(ErrorCode::auth_error, "server rejected the API key (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) throw Error(ErrorCode::rate_limited, "HTTP 429 from model endpoint");
    if (res->status == 408 || res->status == 504) throw Error(ErrorCode::timeout, "HTTP " + std::to_string(res->status));
    if (res->status >= 500) throw Error(ErrorCode::transport_error, "HTTP " + std::to_string(res->status));
    if (res->status != 200) {
      retryable_ = false;
      throw Error(ErrorCode::transport_error, "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return parse_response(res->body);
  }

  ChatResponse parse_response(const std::string& body) {
    ChatResponse out;
    try {
      Json j = Json::parse(body);
      const Json& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_string()) {
        out.text = content.get<std::string>();
      } else if (content.is_array()) {
        for (const auto& part : content)
          if (part.value("type", "") == "text") out.text += part.value("text", "");
      }
      if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
        out.usage.prompt_tokens = u->value("prompt_tokens", 0L);
        out.usage.completion_tokens = u->value("completion_tokens", 0L);
        out.usage.total_tokens = u->value("total_tokens", 0L);
      }
    } catch (const nlohmann::json::exception& e) {
      retryable_ = false;
      throw Error(ErrorCode::transport_error, std::string("malformed chat response: ") + e.what());
    }
    return out;
  }

  void record_attempt() {
    std::lock_guard lock(stats_mutex_);
    ++stats_.attempts;
  }
  void record_success(const ChatResponse& r) {
    std::lock_guard lock(stats_mutex_);
    ++stats_.requests;
    stats_.usage += r.usage;
    stats_.total_latency_ms += static_cast<double>(r.latency.count());
  }
  void record_failure() {
    std::lock_guard lock(stats_mutex_);
    ++stats_.requests;
    ++stats_.failures;
  }

  ClientConfig config_;
  std::string origin_;
  std::string path_prefix_;
  // Set per attempt; only read on the same thread.
  static inline thread_local bool retryable_ = true;

  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  std::atomic<std::size_t> peak_in_flight_{0};

  mutable std::mutex stats_mutex_;
  ClientStats stats_;
};

inline ChatResponse query_chat_model(ChatModel& model, const ChatRequest& req) { return model.complete(req); }

}  // namespace ossa
