#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ailp/concurrency.hpp"
#include "ailp/error.hpp"
#include "ailp/text.hpp"
#include "ailp/url.hpp"

namespace ailp {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

inline void to_json(nlohmann::json& j, const ChatRequest& r) {
  j = nlohmann::json{{"model", r.model}, {"messages", nlohmann::json::array()}, {"temperature", r.temperature}};
  for (const auto& m : r.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
}

/// Provider-agnostic chat-completion endpoint. complete() returns the raw
/// completion text; errors surface as Auth, RateLimited (with retry_after),
/// or Transport.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct OpenAiChatConfig {
  std::string base_url = "https://api.deepseek.com";
  std::string api_key;
  std::string model = "deepseek-chat";
  std::chrono::seconds timeout{60};
};

/// Client for OpenAI-compatible `POST <base>/chat/completions` endpoints.
/// The API key is sent only to the configured base URL.
class OpenAiChatClient final : public ChatClient {
 public:
  explicit OpenAiChatClient(OpenAiChatConfig config)
      : config_(std::move(config)), base_(parse_url_or_throw(config_.base_url)) {
    if (base_.scheme != "http" && base_.scheme != "https") {
      throw Error(ErrorKind::InvalidUrl, "LLM base URL must be http(s): " + config_.base_url);
    }
  }

  std::string model_id() const override { return config_.model; }

  std::string endpoint_path() const {
    std::string path = base_.path;
    while (!path.empty() && path.back() == '/') path.pop_back();
    return path + "/chat/completions";
  }

  std::string complete(const ChatRequest& request) override {
    httplib::Client client(base_.origin());
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    client.set_follow_location(false);
    const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}, {"Accept", "application/json"}};
    const auto res = client.Post(endpoint_path(), headers, nlohmann::json(request).dump(), "application/json");
    if (!res) throw Error(ErrorKind::Transport, "LLM request failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorKind::Auth, "LLM provider rejected the API key (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      long long retry_after = 1;
      if (res->has_header("Retry-After")) retry_after = std::atoll(res->get_header_value("Retry-After").c_str());
      throw Error(ErrorKind::RateLimited, "LLM provider rate limit").with_retry_after(retry_after);
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::Transport, "LLM provider returned HTTP " + std::to_string(res->status));
    }
    try {
      const auto body = nlohmann::json::parse(res->body);
      const auto& content = body.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Transport, std::string("malformed completion response: ") + e.what());
    }
  }

 private:
  OpenAiChatConfig config_;
  Url base_;
};

/// Deterministic offline client: answers "MOCK: " followed by the first
/// five words of the last message.
class MockChatClient final : public ChatClient {
 public:
  std::string model_id() const override { return "mock-echo"; }

  std::string complete(const ChatRequest& request) override {
    const std::string_view prompt = request.messages.empty() ? std::string_view{} : request.messages.back().content;
    std::string out = "MOCK:";
    const auto words = text::split_whitespace(prompt);
    for (std::size_t i = 0; i < words.size() && i < 5; ++i) {
      out += ' ';
      out.append(words[i]);
    }
    return out;
  }
};

/// Bounds the number of completions in flight on the wrapped client.
class LimitedChatClient final : public ChatClient {
 public:
  LimitedChatClient(std::shared_ptr<ChatClient> inner, std::size_t max_in_flight)
      : inner_(std::move(inner)), limit_(max_in_flight) {}

  std::string model_id() const override { return inner_->model_id(); }

  std::string complete(const ChatRequest& request) override {
    SemaphoreGuard guard(limit_);
    return inner_->complete(request);
  }

 private:
  std::shared_ptr<ChatClient> inner_;
  Semaphore limit_;
};

}  // namespace ailp
