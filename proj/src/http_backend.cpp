#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "json.hpp"
#include "socrasynth/backend.hpp"
#include "socrasynth/error.hpp"

namespace socrasynth {

namespace {

constexpr std::size_t kExcerptLimit = 200;
constexpr int kMaxBackoffMs = 30000;

std::string_view wire_role(Speaker s) {
  switch (s) {
    case Speaker::System: return "system";
    case Speaker::Orchestrator: return "user";
    case Speaker::Model: return "assistant";
  }
  return "user";
}

bool retriable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

// Holds one slot of the profile's in-flight budget for the lifetime of a request.
class FlightSlot {
 public:
  FlightSlot(std::mutex& mu, std::condition_variable& cv, int& count, int cap) : mu_(mu), cv_(cv), count_(count) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ < cap; });
    ++count_;
  }
  ~FlightSlot() {
    {
      std::lock_guard lock(mu_);
      --count_;
    }
    cv_.notify_one();
  }
  FlightSlot(const FlightSlot&) = delete;
  FlightSlot& operator=(const FlightSlot&) = delete;

 private:
  std::mutex& mu_;
  std::condition_variable& cv_;
  int& count_;
};

}  // namespace

HttpBackend::HttpBackend(BackendProfile profile) : profile_(std::move(profile)) {
  validate_profile(profile_);
  const auto& url = profile_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint '" + url + "' lacks a scheme", "endpoint");
  }
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpBackend::request_body(std::span<const ChatTurn> history, const RenderedPrompt& prompt) const {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& turn : history) {
    messages.push_back({{"role", wire_role(turn.speaker)}, {"content", turn.text}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt.text}});
  nlohmann::json body{{"model", profile_.model_name},
                      {"temperature", profile_.temperature},
                      {"messages", std::move(messages)}};
  return body.dump();
}

Completion HttpBackend::complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) {
  FlightSlot slot(gate_mu_, gate_cv_, in_flight_, profile_.max_in_flight);

  httplib::Client client(origin_);
  auto timeout = std::chrono::milliseconds(profile_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!profile_.api_key_env.empty()) {
    if (const char* key = std::getenv(profile_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const std::string body = request_body(history, prompt);

  int retries = 0;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(path_, headers, body, "application/json");
    bool can_retry = attempt < profile_.max_retries;

    if (!res) {
      auto err = res.error();
      bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      if (!can_retry) {
        if (timed_out) {
          throw Error(ErrorCode::Timeout, "request to " + origin_ + " timed out", prompt.template_id);
        }
        throw Error(ErrorCode::ProviderError, "transport error: " + httplib::to_string(err), "0");
      }
    } else if (res->status >= 200 && res->status < 300) {
      auto parsed = nlohmann::json::parse(res->body, nullptr, false);
      const nlohmann::json* content = nullptr;
      if (!parsed.is_discarded()) {
        auto ptr = nlohmann::json::json_pointer("/choices/0/message/content");
        if (parsed.contains(ptr) && parsed.at(ptr).is_string()) content = &parsed.at(ptr);
      }
      if (!content) {
        throw Error(ErrorCode::ProviderError,
                    "response has no choices[0].message.content: " + res->body.substr(0, kExcerptLimit),
                    std::to_string(res->status));
      }
      record_call(prompt.template_id, retries);
      return Completion{content->get<std::string>(), prompt.template_id, profile_.model_name,
                        profile_.temperature, retries};
    } else if (!retriable_status(res->status) || !can_retry) {
      throw Error(ErrorCode::ProviderError,
                  "status " + std::to_string(res->status) + ": " + res->body.substr(0, kExcerptLimit),
                  std::to_string(res->status));
    }

    ++retries;
    long long delay = static_cast<long long>(profile_.backoff_ms) << std::min(attempt, 16);
    std::this_thread::sleep_for(std::chrono::milliseconds(std::min<long long>(delay, kMaxBackoffMs)));
  }
}

}  // namespace socrasynth
