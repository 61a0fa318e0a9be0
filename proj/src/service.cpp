#include "socrasynth/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "socrasynth/error.hpp"
#include "socrasynth/serialization.hpp"
#include "socrasynth/store.hpp"

namespace socrasynth {

ServiceOptions with_env_defaults(ServiceOptions options) {
  if (options.auth_token.empty()) {
    if (const char* token = std::getenv("SOCRASYNTH_TOKEN")) options.auth_token = token;
  }
  return options;
}

namespace {

json field_list(std::initializer_list<std::pair<const char*, const char*>> fields) {
  json out = json::object();
  for (const auto& [name, kind] : fields) out[name] = kind;
  return out;
}

}  // namespace

json service_schema() {
  json s;
  s["schema_version"] = kSchemaVersion;
  s["types"]["DebateConfig"] = field_list({{"subject", "string"},
                                           {"delta0", "number"},
                                           {"decay", "number"},
                                           {"floor", "number"},
                                           {"max_rounds", "integer"},
                                           {"topic_count", "integer"},
                                           {"proposals_per_agent", "integer"},
                                           {"gamma_tolerance", "number"}});
  s["types"]["BackendProfile"] = field_list({{"id", "string"},
                                             {"kind", "Scripted|LiveHttp"},
                                             {"endpoint", "string"},
                                             {"model_name", "string"},
                                             {"temperature", "number"},
                                             {"timeout_ms", "integer"},
                                             {"max_retries", "integer"},
                                             {"backoff_ms", "integer"},
                                             {"api_key_env", "string"},
                                             {"max_in_flight", "integer"},
                                             {"script", "string"},
                                             {"strict", "boolean"},
                                             {"seed", "integer"}});
  s["types"]["Topic"] = field_list({{"id", "string"}, {"title", "string"}, {"description", "string"}});
  s["types"]["Utterance"] = field_list({{"role", "Proponent|Opponent"},
                                        {"phase", "TopicFormation|Opening|Refutation|Closing|Concluded"},
                                        {"round", "integer"},
                                        {"delta_at_time", "number"},
                                        {"sections", "array of {topic_id, text}"},
                                        {"raw_text", "string"},
                                        {"timestamp", "integer"}});
  s["types"]["SteeringEvent"] = field_list({{"kind", "SetDelta|RequestExtraRound|ConcludeNow|ApproveTopics"},
                                            {"value", "number"},
                                            {"topics", "array of Topic"},
                                            {"at_round", "integer"},
                                            {"step", "integer"},
                                            {"actor", "string"}});
  s["types"]["SessionState"] = field_list({{"id", "string"},
                                           {"config", "DebateConfig"},
                                           {"backends", "array of {id, kind, model_name, temperature}"},
                                           {"proponent_backend", "string"},
                                           {"opponent_backend", "string"},
                                           {"proposals", "array of Topic"},
                                           {"topics", "array of Topic"},
                                           {"topics_approved", "boolean"},
                                           {"delta_current", "number"},
                                           {"round_index", "integer"},
                                           {"theta_pro", "array of Utterance"},
                                           {"theta_con", "array of Utterance"},
                                           {"gamma_history", "array of {round, gamma}"},
                                           {"opponent_gamma", "array of {round, gamma}"},
                                           {"phase", "string"},
                                           {"concluded_with_gap", "boolean"},
                                           {"moderator_log", "array of SteeringEvent"},
                                           {"step", "integer"}});
  s["types"]["SessionEvent"] = field_list({{"sequence", "integer, gap-free from 0"},
                                           {"step", "integer"},
                                           {"kind",
                                            "PhaseChanged|UtteranceAdded|GammaUpdated|DeltaChanged|SteeringApplied|"
                                            "TopicsProposed|Error"},
                                           {"payload", "object"},
                                           {"at", "integer"}});
  s["types"]["SessionEvent"]["payloads"] = {
      {"PhaseChanged", field_list({{"from", "string"}, {"to", "string"}, {"with_gap", "boolean, closing only"}})},
      {"UtteranceAdded", field_list({{"utterance", "Utterance"}})},
      {"GammaUpdated", field_list({{"round", "integer"}, {"gamma", "number"}, {"opponent_gamma", "number|null"}})},
      {"DeltaChanged", field_list({{"delta", "number"}, {"previous", "number"}, {"cause", "decay|override"}})},
      {"SteeringApplied", field_list({{"event", "SteeringEvent"}})},
      {"TopicsProposed", field_list({{"proposals", "array of Topic"}, {"topics", "array of Topic"}})},
      {"Error", field_list({{"code", "string"}, {"message", "string"}, {"detail", "string"}})}};
  s["types"]["ScoreTable"] = field_list({{"judge", "string"},
                                         {"orientation", "{arguer, counterer}"},
                                         {"rows", "array of {topic_id, arguer_score, counterer_score, missing, "
                                                  "rationale}"},
                                         {"arguer_total", "number"},
                                         {"counterer_total", "number"},
                                         {"complete", "boolean"},
                                         {"prompt", "string"}});
  s["types"]["Verdict"] = field_list({{"per_judge", "array of {judge, orientation, winner, arguer_total, "
                                                    "counterer_total}"},
                                      {"overall", "Proponent|Opponent|Draw"},
                                      {"rationale", "string"},
                                      {"failed_judges", "array of string"}});
  s["types"]["Error"] = field_list({{"error", "error code"}, {"message", "string"}, {"field", "string"}});

  auto ep = [](const char* method, const char* path, const char* body, const char* response) {
    return json{{"method", method}, {"path", path}, {"body", body}, {"response", response}};
  };
  s["endpoints"] = json::array({
      ep("POST", "/sessions",
         "{config: DebateConfig | DebateConfig fields, proponent: id | BackendProfile, opponent: id | BackendProfile, "
         "gate?: {kind, sequence, repeat_last, backend, opponent_side, max_depth}, headless?: boolean, auto_run?: "
         "boolean}",
         "201 {id} | 400 Error"),
      ep("GET", "/sessions", "", "200 {sessions: [id]}"),
      ep("GET", "/sessions/{id}", "",
         "200 {id, state: SessionState, pending_steering, in_flight, auto_run, awaiting_approval, event_count, "
         "last_error}"),
      ep("GET", "/sessions/{id}/initial", "", "200 {id, state: SessionState before any event}"),
      ep("POST", "/sessions/{id}/advance", "{auto_run?: boolean}", "202 | 409 | 410"),
      ep("PATCH", "/sessions/{id}/contentiousness", "{value: number}", "202 | 422 | 410"),
      ep("POST", "/sessions/{id}/extra-round", "", "202 | 410"),
      ep("POST", "/sessions/{id}/conclude", "", "202 | 410"),
      ep("POST", "/sessions/{id}/topics:approve", "{topics?: [Topic]}", "202 | 409 | 410"),
      ep("GET", "/sessions/{id}/events?from=N", "",
         "text/event-stream, id = sequence, data = SessionEvent; stream=false returns {events: [SessionEvent]}"),
      ep("POST", "/sessions/{id}/judge",
         "{judges: [id | BackendProfile | {backend, display_name}], mode?: direct|crit, source?: "
         "closing|transcript}",
         "200 {tables: [ScoreTable], verdict: Verdict} | 409"),
      ep("GET", "/sessions/{id}/verdict", "", "200 {tables, verdict} | 404"),
      ep("GET", "/schema", "", "200 this document"),
  });
  return s;
}

struct Service::Impl {
  struct Entry {
    std::string id;
    SessionSpec spec;
    SessionState initial;
    std::unique_ptr<Debate> debate;
    std::mutex mu;
    std::condition_variable cv;
    bool in_flight = false;
    bool judging = false;
    bool auto_run = false;
    bool concluded = false;
    std::thread worker;
    std::optional<Error> last_error;
    std::optional<std::vector<ScoreTable>> tables;
    std::optional<Verdict> verdict;

    ~Entry() {
      if (worker.joinable()) worker.detach();
    }
  };
  using EntryPtr = std::shared_ptr<Entry>;

  ServiceOptions options;
  httplib::Server server;
  std::thread listener;
  std::atomic<bool> stopping{false};
  mutable std::mutex sessions_mu;
  std::map<std::string, EntryPtr> sessions;
  std::uint64_t next_id = 1;

  explicit Impl(ServiceOptions o) : options(with_env_defaults(std::move(o))) {
    if (!options.factory) options.factory = make_backend;
    routes();
  }

  // ---- helpers ----------------------------------------------------------

  static void reply(httplib::Response& res, int status, json body) {
    body["schema_version"] = kSchemaVersion;
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                          const std::string& field = {}) {
    reply(res, status, json{{"error", code}, {"message", message}, {"field", field}});
  }

  static void reply_error(httplib::Response& res, int status, const Error& e) {
    reply_error(res, status, to_string(e.code()), e.message(), e.detail());
  }

  EntryPtr find(const httplib::Request& req, httplib::Response& res) const {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(req.matches[1].str());
    if (it == sessions.end()) {
      reply_error(res, 404, "NotFound", "no session '" + req.matches[1].str() + "'", "id");
      return nullptr;
    }
    return it->second;
  }

  static std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return json::object();
    try {
      auto j = json::parse(req.body);
      if (!j.is_object()) {
        reply_error(res, 400, "InvalidConfig", "request body must be a JSON object", "body");
        return std::nullopt;
      }
      return j;
    } catch (const json::parse_error& e) {
      reply_error(res, 400, "InvalidConfig", std::string("malformed JSON: ") + e.what(), "body");
      return std::nullopt;
    }
  }

  BackendProfile profile_ref(const json& j, const std::string& field) const {
    if (j.is_string()) {
      auto it = options.backends.find(j.get<std::string>());
      if (it == options.backends.end()) {
        throw Error(ErrorCode::InvalidConfig, "unknown backend id '" + j.get<std::string>() + "'", field);
      }
      return it->second;
    }
    if (j.is_object()) {
      auto p = decode<BackendProfile>(j, field);
      validate_profile(p);
      return p;
    }
    throw Error(ErrorCode::InvalidConfig, "expected a backend id or profile", field);
  }

  SessionSpec spec_from(const json& body) {
    SessionSpec spec;
    const json& cfg = body.contains("config") ? body.at("config") : body;
    try {
      spec.config = cfg.get<DebateConfig>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.what(), "config");
    }
    validate_config(spec.config);
    if (!body.contains("proponent")) throw Error(ErrorCode::InvalidConfig, "proponent backend is required", "proponent");
    if (!body.contains("opponent")) throw Error(ErrorCode::InvalidConfig, "opponent backend is required", "opponent");
    spec.proponent = profile_ref(body.at("proponent"), "proponent");
    spec.opponent = profile_ref(body.at("opponent"), "opponent");
    if (auto it = body.find("gate"); it != body.end() && !it->is_null()) {
      json gate = *it;
      std::optional<BackendProfile> gate_backend;
      if (auto b = gate.find("backend"); b != gate.end() && !b->is_null()) {
        gate_backend = profile_ref(*b, "gate.backend");
        gate.erase("backend");
      }
      try {
        spec.gate = gate.get<GateSpec>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed gate: ") + e.what(), "gate");
      }
      spec.gate.backend = gate_backend;
    }
    spec.headless = body.value("headless", false);
    spec.clock = body.value("clock", std::string("logical")) == "wall" ? ClockMode::Wall : ClockMode::Logical;
    return spec;
  }

  // ---- stepping ---------------------------------------------------------

  void persist(const EntryPtr& e) {
    if (options.data_dir.empty()) return;
    try {
      SessionLayout layout{options.data_dir / e->id};
      std::filesystem::create_directories(layout.dir);
      save(layout.meta(), e->spec);
      write_session_outputs(layout, *e->debate);
      std::lock_guard lock(e->mu);
      if (e->tables) save(layout.tables(), *e->tables);
      if (e->verdict) save(layout.verdict(), *e->verdict);
    } catch (const std::exception&) {
      // Persistence is best effort; the in-memory session stays authoritative.
    }
  }

  void run_steps(const EntryPtr& e) {
    for (;;) {
      std::optional<Error> failure;
      try {
        e->debate->step();
      } catch (const Error& err) {
        failure = err;
      } catch (const std::exception& err) {
        failure = Error(ErrorCode::InvariantViolation, err.what());
      }
      bool concluded = e->debate->state().phase == Phase::Concluded;
      if (concluded) persist(e);
      bool more;
      {
        std::lock_guard lock(e->mu);
        if (failure && failure->code() != ErrorCode::AwaitingTopicApproval) e->last_error = failure;
        e->concluded = concluded;
        more = !failure && !concluded && e->auto_run && !stopping && !e->debate->awaiting_approval();
        if (!more) e->in_flight = false;
      }
      if (!more) break;
    }
    e->cv.notify_all();
  }

  // Starts a worker if none is running. Caller holds e->mu.
  void launch(const EntryPtr& e) {
    e->in_flight = true;
    if (e->worker.joinable()) e->worker.join();
    e->worker = std::thread([this, e] { run_steps(e); });
  }

  // ---- handlers ---------------------------------------------------------

  void create(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    try {
      SessionSpec spec = spec_from(*body);
      auto e = std::make_shared<Entry>();
      {
        std::lock_guard lock(sessions_mu);
        e->id = "session-" + std::to_string(next_id++);
      }
      spec.id = e->id;
      e->spec = spec;
      e->initial = initial_state(spec);
      e->debate = make_debate(spec, options.factory);
      e->auto_run = body->value("auto_run", false);
      std::weak_ptr<Entry> weak = e;
      e->debate->set_sink([weak](const SessionEvent&) {
        if (auto p = weak.lock()) {
          { std::lock_guard lock(p->mu); }
          p->cv.notify_all();
        }
      });
      {
        std::lock_guard lock(sessions_mu);
        sessions[e->id] = e;
      }
      if (e->auto_run) {
        std::lock_guard lock(e->mu);
        launch(e);
      }
      reply(res, 201, json{{"id", e->id}, {"phase", to_string(Phase::TopicFormation)}});
    } catch (const Error& err) {
      reply_error(res, 400, err);
    }
  }

  json snapshot(const EntryPtr& e) {
    SessionState s = e->debate->state();
    std::lock_guard lock(e->mu);
    json out{{"id", e->id},
             {"state", projection(s)},
             {"pending_steering", e->debate->queued_steering()},
             {"in_flight", e->in_flight},
             {"auto_run", e->auto_run},
             {"awaiting_approval", e->debate->awaiting_approval()},
             {"event_count", e->debate->event_count()},
             {"judged", e->verdict.has_value()},
             {"last_error", nullptr}};
    if (e->last_error) {
      out["last_error"] = {{"error", to_string(e->last_error->code())},
                           {"message", e->last_error->message()},
                           {"field", e->last_error->detail()}};
    }
    return out;
  }

  void advance(const httplib::Request& req, httplib::Response& res) {
    auto e = find(req, res);
    if (!e) return;
    auto body = body_json(req, res);
    if (!body) return;
    std::lock_guard lock(e->mu);
    if (e->debate->state().phase == Phase::Concluded) {
      return reply_error(res, 410, "PhaseViolation", "session is concluded");
    }
    if (e->in_flight) return reply_error(res, 409, "StepInFlight", "a step is already running");
    if (e->debate->awaiting_approval()) {
      return reply_error(res, 409, "AwaitingTopicApproval", "topics await moderator approval", "topics");
    }
    if (auto it = body->find("auto_run"); it != body->end() && it->is_boolean()) e->auto_run = it->get<bool>();
    e->last_error.reset();
    launch(e);
    reply(res, 202, json{{"id", e->id}, {"accepted", true}});
  }

  void steer(const httplib::Request& req, httplib::Response& res, SteeringKind kind) {
    auto e = find(req, res);
    if (!e) return;
    auto body = body_json(req, res);
    if (!body) return;
    SteeringEvent ev;
    ev.kind = kind;
    ev.actor = body->value("actor", std::string("moderator"));
    if (kind == SteeringKind::SetDelta) {
      auto it = body->find("value");
      if (it == body->end() || !it->is_number()) {
        return reply_error(res, 422, "InvalidDelta", "value must be a number in [0, 1]", "value");
      }
      ev.value = it->get<double>();
    }
    if (kind == SteeringKind::ApproveTopics) {
      if (auto it = body->find("topics"); it != body->end() && !it->is_null()) {
        try {
          ev.topics = it->get<std::vector<Topic>>();
        } catch (const json::exception& x) {
          return reply_error(res, 400, "InvalidConfig", std::string("malformed topics: ") + x.what(), "topics");
        }
      }
    }
    bool resume = false;
    {
      std::lock_guard lock(e->mu);
      SessionState s = e->debate->state();
      if (s.phase == Phase::Concluded) return reply_error(res, 410, "PhaseViolation", "session is concluded");
      if (kind == SteeringKind::ApproveTopics && s.topics.empty()) {
        return reply_error(res, 409, "PhaseViolation", "topics have not been proposed yet", "topics");
      }
      try {
        e->debate->enqueue(ev);
      } catch (const Error& err) {
        int status = err.code() == ErrorCode::InvalidDelta ? 422 : 409;
        return reply_error(res, status, err);
      }
      if (kind == SteeringKind::ApproveTopics && e->auto_run && !e->in_flight) {
        launch(e);
        resume = true;
      }
    }
    reply(res, 202, json{{"id", e->id}, {"queued", to_string(kind)}, {"resumed", resume}});
  }

  void events(const httplib::Request& req, httplib::Response& res) {
    auto e = find(req, res);
    if (!e) return;
    std::size_t from = 0;
    try {
      if (req.has_param("from")) {
        from = static_cast<std::size_t>(std::stoull(req.get_param_value("from")));
      } else if (req.has_header("Last-Event-ID")) {
        from = static_cast<std::size_t>(std::stoull(req.get_header_value("Last-Event-ID"))) + 1;
      }
    } catch (const std::exception&) {
      return reply_error(res, 400, "InvalidConfig", "from must be a non-negative integer", "from");
    }
    if (req.get_param_value("stream") == "false") {
      return reply(res, 200, json{{"id", e->id}, {"events", e->debate->events_from(from)}});
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_header("X-Accel-Buffering", "no");
    auto heartbeat = std::chrono::milliseconds(std::max(1, options.heartbeat_ms));
    res.set_chunked_content_provider(
        "text/event-stream", [this, e, next = from, heartbeat](std::size_t, httplib::DataSink& sink) mutable {
          if (stopping) {
            sink.done();
            return true;
          }
          auto batch = e->debate->events_from(next);
          if (!batch.empty()) {
            std::string chunk;
            for (const auto& ev : batch) {
              json j = ev;
              j["schema_version"] = kSchemaVersion;
              chunk += "id: " + std::to_string(ev.sequence) + "\nevent: " + std::string(to_string(ev.kind)) +
                       "\ndata: " + j.dump() + "\n\n";
            }
            next += batch.size();
            return sink.write(chunk.data(), chunk.size());
          }
          bool woke;
          {
            std::unique_lock lock(e->mu);
            if (e->concluded && !e->in_flight && e->debate->event_count() <= next) {
              sink.done();
              return true;
            }
            woke = e->cv.wait_for(lock, heartbeat, [&] {
              return stopping.load() || e->debate->event_count() > next || (e->concluded && !e->in_flight);
            });
          }
          if (!woke) {
            static constexpr char kBeat[] = ": heartbeat\n\n";
            return sink.write(kBeat, sizeof(kBeat) - 1);
          }
          return true;
        });
  }

  void judge(const httplib::Request& req, httplib::Response& res) {
    auto e = find(req, res);
    if (!e) return;
    auto body = body_json(req, res);
    if (!body) return;
    SessionState transcript = e->debate->state();
    if (transcript.phase != Phase::Concluded) {
      return reply_error(res, 409, "PhaseViolation", "judging requires a concluded session");
    }
    std::vector<JudgeProfile> panel;
    JudgeOptions judge_options;
    try {
      for (const auto& j : body->value("judges", json::array())) {
        if (j.is_object() && j.contains("backend")) {
          JudgeProfile p;
          p.backend = profile_ref(j.at("backend"), "judges");
          p.display_name = j.value("display_name", p.backend.id);
          panel.push_back(std::move(p));
        } else {
          auto profile = profile_ref(j, "judges");
          panel.push_back(JudgeProfile{profile, profile.id});
        }
      }
      if (auto it = body->find("mode"); it != body->end()) judge_options.mode = parse_judge_mode(it->get<std::string>());
      if (auto it = body->find("source"); it != body->end()) {
        judge_options.source = parse_judge_source(it->get<std::string>());
      }
    } catch (const Error& err) {
      return reply_error(res, 400, err);
    } catch (const json::exception& x) {
      return reply_error(res, 400, "InvalidConfig", x.what(), "judges");
    }
    {
      std::lock_guard lock(e->mu);
      if (e->judging) return reply_error(res, 409, "StepInFlight", "a judge panel is already running");
      e->judging = true;
    }
    try {
      auto result = run_panel(transcript, panel, judge_options, options.factory);
      Verdict verdict = decide_winner(result.tables);
      for (const auto& f : result.failed_judges) {
        if (std::find(verdict.failed_judges.begin(), verdict.failed_judges.end(), f) == verdict.failed_judges.end()) {
          verdict.failed_judges.push_back(f);
        }
      }
      {
        std::lock_guard lock(e->mu);
        e->tables = result.tables;
        e->verdict = verdict;
        e->judging = false;
      }
      persist(e);
      reply(res, 200, json{{"id", e->id}, {"tables", result.tables}, {"verdict", verdict}});
    } catch (const Error& err) {
      {
        std::lock_guard lock(e->mu);
        e->judging = false;
      }
      reply_error(res, err.category() == ErrorCategory::Backend ? 502 : 400, err);
    }
  }

  void verdict(const httplib::Request& req, httplib::Response& res) {
    auto e = find(req, res);
    if (!e) return;
    std::lock_guard lock(e->mu);
    if (!e->verdict) return reply_error(res, 404, "NotFound", "session has not been judged", "verdict");
    reply(res, 200, json{{"id", e->id}, {"tables", *e->tables}, {"verdict", *e->verdict}});
  }

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (options.auth_token.empty() || req.path.rfind("/console", 0) == 0) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      if (req.get_header_value("Authorization") == "Bearer " + options.auth_token) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      reply_error(res, 401, "Unauthorized", "missing or wrong bearer token", "Authorization");
      return httplib::Server::HandlerResponse::Handled;
    });
    if (!options.console_dir.empty()) server.set_mount_point("/console", options.console_dir.string());

    server.Get("/schema", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, service_schema()); });
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });
    server.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      std::vector<std::string> ids;
      {
        std::lock_guard lock(sessions_mu);
        for (const auto& [id, _] : sessions) ids.push_back(id);
      }
      reply(res, 200, json{{"sessions", ids}});
    });
    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto e = find(req, res)) reply(res, 200, snapshot(e));
    });
    server.Get(R"(/sessions/([^/]+)/initial)", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto e = find(req, res)) reply(res, 200, json{{"id", e->id}, {"state", e->initial}});
    });
    server.Post(R"(/sessions/([^/]+)/advance)",
                [this](const httplib::Request& req, httplib::Response& res) { advance(req, res); });
    server.Patch(R"(/sessions/([^/]+)/contentiousness)", [this](const httplib::Request& req, httplib::Response& res) {
      steer(req, res, SteeringKind::SetDelta);
    });
    server.Post(R"(/sessions/([^/]+)/extra-round)", [this](const httplib::Request& req, httplib::Response& res) {
      steer(req, res, SteeringKind::RequestExtraRound);
    });
    server.Post(R"(/sessions/([^/]+)/conclude)", [this](const httplib::Request& req, httplib::Response& res) {
      steer(req, res, SteeringKind::ConcludeNow);
    });
    server.Post(R"(/sessions/([^/]+)/topics:approve)", [this](const httplib::Request& req, httplib::Response& res) {
      steer(req, res, SteeringKind::ApproveTopics);
    });
    server.Get(R"(/sessions/([^/]+)/events)",
               [this](const httplib::Request& req, httplib::Response& res) { events(req, res); });
    server.Post(R"(/sessions/([^/]+)/judge)",
                [this](const httplib::Request& req, httplib::Response& res) { judge(req, res); });
    server.Get(R"(/sessions/([^/]+)/verdict)",
               [this](const httplib::Request& req, httplib::Response& res) { verdict(req, res); });
  }

  void shutdown() {
    stopping = true;
    std::vector<EntryPtr> all;
    {
      std::lock_guard lock(sessions_mu);
      for (const auto& [_, e] : sessions) all.push_back(e);
    }
    for (const auto& e : all) {
      {
        std::lock_guard lock(e->mu);
        e->auto_run = false;
      }
      e->cv.notify_all();
    }
    server.stop();
    if (listener.joinable()) listener.join();
    for (const auto& e : all) {
      std::thread worker;
      {
        std::lock_guard lock(e->mu);
        worker = std::move(e->worker);
      }
      if (worker.joinable()) worker.join();
    }
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port), "listen");
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    if (impl_->stopping) return;
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port), "listen");
  }
}

void Service::stop() {
  if (impl_ && !impl_->stopping) impl_->shutdown();
}

std::vector<std::string> Service::session_ids() const {
  std::lock_guard lock(impl_->sessions_mu);
  std::vector<std::string> ids;
  for (const auto& [id, _] : impl_->sessions) ids.push_back(id);
  return ids;
}

}  // namespace socrasynth
