#include <atomic>
#include <future>

#include "doctest.h"
#include "service_client.hpp"

using namespace socrasynth;
using testing::json;

namespace {

struct Running {
  explicit Running(ServiceOptions options, std::string token = {})
      : service(std::move(options)), port(service.start()), client(port, std::move(token)) {}
  Service service;
  int port;
  testing::ServiceClient client;
};

std::string create(testing::ServiceClient& c, const json& body = testing::session_body()) {
  auto r = c.post("/sessions", body);
  REQUIRE(r.status == 201);
  return r.body.at("id").get<std::string>();
}

// Advances one step at a time until the session concludes; returns the number of steps.
int drive(testing::ServiceClient& c, const std::string& id) {
  int steps = 0;
  for (;;) {
    auto snap = c.wait_idle(id);
    if (snap.at("state").at("phase") == "Concluded") return steps;
    auto r = c.post("/sessions/" + id + "/advance");
    REQUIRE(r.status == 202);
    ++steps;
    REQUIRE(steps < 100);
  }
}

}  // namespace

TEST_CASE("service: create, list, snapshot") {
  Running s(testing::service_options());
  auto a = create(s.client);
  auto b = create(s.client);
  CHECK(a != b);
  auto list = s.client.get("/sessions");
  CHECK(list.body.at("sessions").size() == 2);
  CHECK(list.body.at("schema_version") == kSchemaVersion);

  auto snap = s.client.get("/sessions/" + a);
  CHECK(snap.status == 200);
  CHECK(snap.body.at("state").at("phase") == "TopicFormation");
  CHECK(snap.body.at("event_count") == 0);
  CHECK(snap.body.at("in_flight") == false);
  CHECK(s.client.get("/sessions/nope").status == 404);

  auto bad = testing::session_body();
  bad["config"]["decay"] = 1.0;
  auto r = s.client.post("/sessions", bad);
  CHECK(r.status == 400);
  CHECK(r.body.at("error") == "DecayNotGreaterThanOne");
  CHECK(r.body.contains("message"));

  auto unknown = testing::session_body();
  unknown["proponent"] = "no-such-backend";
  CHECK(s.client.post("/sessions", unknown).status == 400);
  CHECK(s.client.post("/sessions", json::array()).status == 400);
}

TEST_CASE("service: stepping to conclusion") {
  Running s(testing::service_options());
  auto id = create(s.client);
  int steps = drive(s.client, id);
  CHECK(steps == 15);
  auto snap = s.client.get("/sessions/" + id).body;
  CHECK(snap.at("state").at("round_index") == 12);
  CHECK(snap.at("state").at("theta_pro").size() == 14);
  CHECK(snap.at("last_error").is_null());
  CHECK(testing::fold_matches(s.client, id));

  auto again = s.client.post("/sessions/" + id + "/advance");
  CHECK(again.status == 410);
  CHECK(s.client.post("/sessions/" + id + "/conclude").status == 410);
}

TEST_CASE("service: auto-run") {
  Running s(testing::service_options());
  auto body = testing::session_body({5.0, 6.0, 5.5});
  body["auto_run"] = true;
  auto id = create(s.client, body);
  auto snap = s.client.wait_idle(id);
  CHECK(snap.at("state").at("phase") == "Concluded");
  CHECK(snap.at("state").at("round_index") == 3);
}

TEST_CASE("service: one step at a time") {
  auto options = testing::service_options();
  std::atomic<bool> hold{true};
  options.factory = [&hold](const BackendProfile& p) -> BackendPtr {
    auto inner = std::make_shared<ScriptedBackend>(p, std::vector<ScriptEntry>{});
    return std::make_shared<FunctionBackend>(p, [&hold, inner](std::span<const ChatTurn> h, const RenderedPrompt& rp) {
      while (hold) std::this_thread::sleep_for(std::chrono::milliseconds(1));
      return inner->complete(h, rp).text;
    });
  };
  Running s(options);
  auto id = create(s.client);

  auto path = "/sessions/" + id + "/advance";
  auto first = std::async(std::launch::async, [&] { return testing::ServiceClient(s.port).post(path).status; });
  auto second = std::async(std::launch::async, [&] { return testing::ServiceClient(s.port).post(path).status; });
  std::vector<int> codes{first.get(), second.get()};
  std::sort(codes.begin(), codes.end());
  CHECK(codes == std::vector<int>{202, 409});
  auto busy = s.client.post(path);
  CHECK(busy.status == 409);
  CHECK(busy.body.at("error") == "StepInFlight");

  hold = false;
  auto snap = s.client.wait_idle(id);
  CHECK(snap.at("state").at("topics").size() == 5);
  CHECK(snap.at("event_count") == 1);
}

TEST_CASE("service: contentiousness and steering") {
  Running s(testing::service_options());
  auto id = create(s.client);
  for (int i = 0; i < 3; ++i) {
    s.client.wait_idle(id);
    REQUIRE(s.client.post("/sessions/" + id + "/advance").status == 202);
  }
  s.client.wait_idle(id);
  auto before = s.client.get("/sessions/" + id).body.at("event_count").get<std::size_t>();

  auto r = s.client.patch("/sessions/" + id + "/contentiousness", {{"value", 0.3}});
  CHECK(r.status == 202);
  CHECK(s.client.get("/sessions/" + id).body.at("pending_steering").size() == 1);
  CHECK(s.client.patch("/sessions/" + id + "/contentiousness", {{"value", 1.5}}).status == 422);
  CHECK(s.client.patch("/sessions/" + id + "/contentiousness", {{"value", "high"}}).status == 422);

  REQUIRE(s.client.post("/sessions/" + id + "/advance").status == 202);
  s.client.wait_idle(id);
  auto events = s.client.get("/sessions/" + id + "/events?stream=false&from=" + std::to_string(before)).body["events"];
  std::vector<double> deltas;
  for (const auto& e : events) {
    if (e.at("kind") == "DeltaChanged") deltas.push_back(e.at("payload").at("delta"));
  }
  REQUIRE(deltas.size() == 2);
  CHECK(deltas[0] == 0.3);
  CHECK(deltas[1] == doctest::Approx(0.25));

  CHECK(s.client.post("/sessions/" + id + "/extra-round").status == 202);
  CHECK(s.client.post("/sessions/" + id + "/conclude").status == 202);
  REQUIRE(s.client.post("/sessions/" + id + "/advance").status == 202);
  auto snap = s.client.wait_idle(id);
  CHECK(snap.at("state").at("phase") == "Concluded");
  CHECK(testing::fold_matches(s.client, id));
}

TEST_CASE("service: topic approval") {
  Running s(testing::service_options());
  auto id = create(s.client, testing::session_body({5.0}, false));
  CHECK(s.client.post("/sessions/" + id + "/topics:approve").status == 409);
  REQUIRE(s.client.post("/sessions/" + id + "/advance").status == 202);
  auto snap = s.client.wait_idle(id);
  CHECK(snap.at("awaiting_approval") == true);
  auto blocked = s.client.post("/sessions/" + id + "/advance");
  CHECK(blocked.status == 409);
  CHECK(blocked.body.at("error") == "AwaitingTopicApproval");

  json topics = json::array({{{"id", "T1"}, {"title", "Cost"}, {"description", ""}, {"proposed_by", "Merged"}}});
  CHECK(s.client.post("/sessions/" + id + "/topics:approve", {{"topics", topics}}).status == 202);
  CHECK(s.client.post("/sessions/" + id + "/advance").status == 202);
  snap = s.client.wait_idle(id);
  CHECK(snap.at("state").at("phase") == "Refutation");
  CHECK(snap.at("state").at("topics").size() == 1);
  CHECK(snap.at("state").at("moderator_log").at(0).at("actor") == "moderator");
}

TEST_CASE("service: event stream") {
  Running s(testing::service_options());
  auto id = create(s.client, testing::session_body({5.0, 6.0, 5.5}));

  // Two subscribers attached before any step see the same complete stream.
  auto path = "/sessions/" + id + "/events?from=0";
  auto sub1 = std::async(std::launch::async, [&] { return testing::ServiceClient(s.port).stream(path); });
  auto sub2 = std::async(std::launch::async, [&] { return testing::ServiceClient(s.port).stream(path); });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  drive(s.client, id);
  auto a = testing::parse_sse(sub1.get());
  auto b = testing::parse_sse(sub2.get());
  auto count = s.client.get("/sessions/" + id).body.at("event_count").get<std::size_t>();
  REQUIRE(a.size() == count);
  REQUIRE(b.size() == count);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == std::to_string(i));
    CHECK(a[i].data == b[i].data);
    CHECK(a[i].event == a[i].data.at("kind"));
    CHECK(a[i].data.at("schema_version") == kSchemaVersion);
  }
  CHECK(a.front().event == "TopicsProposed");
  CHECK(a.back().event == "PhaseChanged");

  auto tail = testing::parse_sse(s.client.stream("/sessions/" + id + "/events?from=" + std::to_string(count - 2)));
  CHECK(tail.size() == 2);
  auto resumed = testing::parse_sse(s.client.stream("/sessions/" + id + "/events", {{"Last-Event-ID", "4"}}));
  REQUIRE(resumed.size() == count - 5);
  CHECK(resumed.front().id == "5");
  CHECK(testing::parse_sse(s.client.stream("/sessions/" + id + "/events?from=" + std::to_string(count + 10))).empty());
  CHECK(s.client.get("/sessions/" + id + "/events?from=abc").status == 400);
}

TEST_CASE("service: heartbeats keep an idle stream alive") {
  Running s(testing::service_options());
  auto id = create(s.client);
  auto text = std::async(std::launch::async, [&] {
    return testing::ServiceClient(s.port).stream("/sessions/" + id + "/events");
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(500));
  drive(s.client, id);
  auto body = text.get();
  CHECK(body.find(": heartbeat") != std::string::npos);
}

TEST_CASE("service: judging") {
  Running s(testing::service_options());
  auto id = create(s.client);
  json panel = json::array({"judge-davinci-003", "judge-gpt-3.5", "judge-gpt-4"});
  CHECK(s.client.post("/sessions/" + id + "/judge", {{"judges", panel}}).status == 409);
  CHECK(s.client.get("/sessions/" + id + "/verdict").status == 404);
  drive(s.client, id);

  CHECK(s.client.post("/sessions/" + id + "/judge", {{"judges", json::array()}}).status == 400);
  CHECK(s.client.post("/sessions/" + id + "/judge", {{"judges", json::array({"filler-pro"})}}).status == 400);

  auto r = s.client.post("/sessions/" + id + "/judge", {{"judges", panel}});
  REQUIRE(r.status == 200);
  CHECK(r.body.at("verdict").at("overall") == "Proponent");
  CHECK(r.body.at("tables").size() == 6);
  CHECK(r.body.at("tables").at(0).at("arguer_total") == 37);
  auto v = s.client.get("/sessions/" + id + "/verdict");
  CHECK(v.status == 200);
  CHECK(v.body.at("verdict") == r.body.at("verdict"));
  CHECK(s.client.get("/sessions/" + id).body.at("judged") == true);
}

TEST_CASE("service: bearer token") {
  Running s(testing::service_options("s3cret"), "s3cret");
  testing::ServiceClient anonymous(s.port);
  auto denied = anonymous.get("/sessions");
  CHECK(denied.status == 401);
  CHECK(denied.body.at("error") == "Unauthorized");
  CHECK(testing::ServiceClient(s.port, "wrong").get("/schema").status == 401);
  CHECK(s.client.get("/sessions").status == 200);
}

TEST_CASE("service: schema and persistence") {
  testing::TempDir dir;
  auto options = testing::service_options();
  options.data_dir = dir.path();
  Running s(options);
  auto schema = s.client.get("/schema");
  REQUIRE(schema.status == 200);
  for (const char* type : {"DebateConfig", "Utterance", "SessionEvent", "ScoreTable", "Verdict"}) {
    CHECK(schema.body.at("types").contains(type));
  }
  CHECK(schema.body.at("endpoints").is_array());

  auto id = create(s.client, testing::session_body({5.0, 4.0}));
  drive(s.client, id);
  SessionLayout layout{dir.path() / id};
  CHECK(std::filesystem::exists(layout.transcript()));
  CHECK(std::filesystem::exists(layout.events()));
  CHECK(load_transcript(layout.transcript()) == s.client.get("/sessions/" + id).body.at("state").get<SessionState>());
}

TEST_CASE("service: environment token") {
  ::setenv("SOCRASYNTH_TOKEN", "from-env", 1);
  CHECK(with_env_defaults({}).auth_token == "from-env");
  ServiceOptions explicit_token;
  explicit_token.auth_token = "given";
  CHECK(with_env_defaults(explicit_token).auth_token == "given");
  ::unsetenv("SOCRASYNTH_TOKEN");
}
