#pragma once

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "socrasynth/serialization.hpp"
#include "socrasynth/service.hpp"
#include "socrasynth/store.hpp"
#include "support.hpp"

namespace testing {

using nlohmann::json;

// Backends every test service knows by id: filler debaters and the scripted judges.
inline ServiceOptions service_options(const std::string& token = {}) {
  ServiceOptions o;
  for (const auto& p : {filler_profile("filler-pro", 1), filler_profile("filler-con", 2)}) o.backends[p.id] = p;
  for (const auto& j : judge_panel()) o.backends[j.backend.id] = j.backend;
  o.auth_token = token;
  o.heartbeat_ms = 200;
  return o;
}

struct HttpReply {
  int status = 0;
  json body;
};

class ServiceClient {
 public:
  explicit ServiceClient(int port, std::string token = {}) : port_(port), token_(std::move(token)) {}

  HttpReply get(const std::string& path) { return wrap(client().Get(path, headers())); }
  HttpReply post(const std::string& path, const json& body = json::object()) {
    return wrap(client().Post(path, headers(), body.dump(), "application/json"));
  }
  HttpReply patch(const std::string& path, const json& body) {
    return wrap(client().Patch(path, headers(), body.dump(), "application/json"));
  }

  // Reads a whole SSE stream (the server closes it once the session has concluded).
  std::string stream(const std::string& path, httplib::Headers extra = {}) {
    auto h = headers();
    h.insert(extra.begin(), extra.end());
    std::string data;
    auto c = client();
    c.set_read_timeout(std::chrono::seconds(30));
    auto res = c.Get(path, h, [&](const char* chunk, std::size_t n) {
      data.append(chunk, n);
      return true;
    });
    if (!res || res->status != 200) return "<error>";
    return data;
  }

  // Polls the snapshot until no step is running.
  json wait_idle(const std::string& id, int timeout_ms = 30000) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      auto r = get("/sessions/" + id);
      if (r.status == 200 && !r.body.at("in_flight").get<bool>()) return r.body;
      if (std::chrono::steady_clock::now() > deadline) return r.body;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }

 private:
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(std::chrono::seconds(30));
    return c;
  }
  httplib::Headers headers() const {
    httplib::Headers h;
    if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
    return h;
  }
  static HttpReply wrap(const httplib::Result& res) {
    HttpReply r;
    if (!res) return r;
    r.status = res->status;
    r.body = json::parse(res->body, nullptr, false);
    return r;
  }

  int port_;
  std::string token_;
};

struct SseEvent {
  std::string id;
  std::string event;
  json data;
};

inline std::vector<SseEvent> parse_sse(const std::string& text) {
  std::vector<SseEvent> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find("\n\n", pos);
    std::string block = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 2;
    SseEvent ev;
    bool any = false;
    std::size_t lp = 0;
    while (lp < block.size()) {
      auto eol = block.find('\n', lp);
      std::string line = block.substr(lp, eol == std::string::npos ? std::string::npos : eol - lp);
      lp = eol == std::string::npos ? block.size() : eol + 1;
      if (line.rfind("id: ", 0) == 0) ev.id = line.substr(4), any = true;
      if (line.rfind("event: ", 0) == 0) ev.event = line.substr(7), any = true;
      if (line.rfind("data: ", 0) == 0) ev.data = json::parse(line.substr(6)), any = true;
    }
    if (any) out.push_back(std::move(ev));
  }
  return out;
}

// Request body for a filler debate gated by a fixed gamma sequence.
inline json session_body(std::vector<double> gammas = {5.0}, bool headless = true) {
  return json{{"config", {{"subject", "Should the use of large language models in education and research be regulated?"}}},
              {"proponent", "filler-pro"},
              {"opponent", "filler-con"},
              {"gate", {{"kind", "Sequence"}, {"sequence", gammas}}},
              {"headless", headless}};
}

// fold(initial, events) compared with the snapshot state of a session.
inline bool fold_matches(ServiceClient& client, const std::string& id) {
  auto initial = client.get("/sessions/" + id + "/initial");
  auto events = client.get("/sessions/" + id + "/events?stream=false");
  auto snap = client.get("/sessions/" + id);
  if (initial.status != 200 || events.status != 200 || snap.status != 200) return false;
  auto folded = fold_events(initial.body.at("state").get<SessionState>(),
                            events.body.at("events").get<std::vector<SessionEvent>>());
  return folded == snap.body.at("state").get<SessionState>();
}

}  // namespace testing
