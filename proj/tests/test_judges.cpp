#include "doctest.h"
#include "socrasynth/error.hpp"
#include "socrasynth/judges.hpp"
#include "support.hpp"

using namespace socrasynth;

namespace {

ScoreTable table(const std::string& judge, Orientation o, double a, double c, bool complete = true) {
  ScoreTable t;
  t.judge = judge;
  t.orientation = o;
  t.arguer_total = a;
  t.counterer_total = c;
  t.complete = complete;
  return t;
}

BackendPtr constant_judge(const std::string& id, int a, int c, std::vector<std::string>* prompts = nullptr) {
  BackendProfile p;
  p.id = id;
  return std::make_shared<FunctionBackend>(p, [=](std::span<const ChatTurn>, const RenderedPrompt& rp) {
    if (prompts) prompts->push_back(rp.text);
    return testing::fenced({{"arguer_score", a}, {"counterer_score", c}, {"rationale", "even"}});
  });
}

}  // namespace

TEST_CASE("scripted panel reproduces the published tables") {
  auto transcript = testing::concluded_transcript();
  REQUIRE(transcript.topics.size() == 5);
  auto result = run_panel(transcript, testing::judge_panel());
  CHECK(result.failed_judges.empty());
  REQUIRE(result.tables.size() == 6);

  // (judge, orientation) -> (arguer total, counterer total)
  struct Expected {
    std::string judge;
    Orientation orientation;
    double arguer, counterer;
  };
  std::vector<Expected> expected{
      {"davinci-003", kProponentArgues, 37, 32}, {"davinci-003", kOpponentArgues, 38, 38},
      {"gpt-3.5", kProponentArgues, 36, 33},     {"gpt-3.5", kOpponentArgues, 36, 39},
      {"gpt-4", kProponentArgues, 39, 32},       {"gpt-4", kOpponentArgues, 33, 38},
  };
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& t = result.tables[i];
    CHECK(t.judge == expected[i].judge);
    CHECK(t.orientation == expected[i].orientation);
    CHECK(t.arguer_total == expected[i].arguer);
    CHECK(t.counterer_total == expected[i].counterer);
    CHECK(recompute_totals(t) == std::pair{t.arguer_total, t.counterer_total});
    REQUIRE(t.rows.size() == 5);
    CHECK(t.rows[0].topic_id == "T1");
    CHECK(t.rows[4].topic_id == "T5");
    CHECK(t.complete);
  }

  auto verdict = decide_winner(result.tables);
  CHECK(verdict.overall == OverallWinner::Proponent);
  REQUIRE(verdict.per_judge.size() == 6);
  CHECK(verdict.per_judge[1].winner == TableWinner::Tie);
  CHECK(verdict.per_judge[3].winner == TableWinner::Proponent);
  CHECK(verdict.per_judge[5].winner == TableWinner::Proponent);
}

TEST_CASE("equal scores give equal totals") {
  auto transcript = testing::concluded_transcript();
  JudgeProfile judge{BackendProfile{.id = "even"}, "even"};
  std::vector<std::string> prompts;
  auto backend = constant_judge("even", 5, 5, &prompts);
  auto t = score_orientation(transcript, kOpponentArgues, judge, *backend);
  REQUIRE(t.rows.size() == 5);
  for (const auto& row : t.rows) {
    CHECK(row.arguer_score == 5);
    CHECK(row.counterer_score == 5);
  }
  CHECK(t.arguer_total == 25);
  CHECK(t.counterer_total == 25);
  REQUIRE(prompts.size() == 5);
  CHECK(prompts[0].find(transcript.topics[0].title) != std::string::npos);
  CHECK(decide_winner({t}).per_judge.at(0).winner == TableWinner::Tie);
}

TEST_CASE("judge prompts see closing text by default") {
  auto transcript = testing::concluded_transcript();
  const auto& topic = transcript.topics[0];
  auto closing = side_text(transcript, AgentRole::Proponent, topic, JudgeSource::Closing);
  auto everything = side_text(transcript, AgentRole::Proponent, topic, JudgeSource::FullTranscript);
  CHECK_FALSE(closing.empty());
  CHECK(everything.size() > closing.size());
  CHECK(everything.find(closing) != std::string::npos);
}

TEST_CASE("panel errors") {
  auto transcript = testing::concluded_transcript();
  try {
    run_panel(transcript, {});
    FAIL("empty panel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPanel);
  }
  auto panel = testing::judge_panel();
  panel[1].backend.id = transcript.proponent_backend;
  try {
    run_panel(transcript, panel);
    FAIL("debater on the panel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::JudgeConflict);
    CHECK(e.detail() == transcript.proponent_backend);
  }
}

TEST_CASE("a failing judge is isolated") {
  auto transcript = testing::concluded_transcript();
  auto panel = testing::judge_panel();
  panel.push_back({testing::scripted_profile("judge-broken", testing::fixture("payloads/garbage.txt")), "broken"});
  auto result = run_panel(transcript, panel);
  CHECK(result.failed_judges == std::vector<std::string>{"broken"});
  CHECK(result.tables.size() == 6);
}

TEST_CASE("missing rows make a table incomplete") {
  auto transcript = testing::concluded_transcript();
  int calls = 0;
  BackendProfile p;
  p.id = "flaky";
  FunctionBackend flaky(p, [&](std::span<const ChatTurn>, const RenderedPrompt& rp) -> std::string {
    ++calls;
    if (rp.slots.text("topic").rfind(transcript.topics[2].title, 0) == 0) return "no scores today";
    return testing::fenced({{"arguer_score", 6}, {"counterer_score", 4}, {"rationale", "r"}});
  });
  auto t = score_orientation(transcript, kProponentArgues, JudgeProfile{p, "flaky"}, flaky);
  CHECK_FALSE(t.complete);
  CHECK(t.rows[2].missing);
  CHECK(t.arguer_total == 24);
  CHECK(t.counterer_total == 16);
  // Each topic: one call, plus a parse retry and a second attempt for the failing one.
  CHECK(calls == 4 + 4);
  CHECK(decide_winner({t}).per_judge.empty());
}

TEST_CASE("verdict rules") {
  auto draw = decide_winner({table("a", kProponentArgues, 30, 20), table("b", kProponentArgues, 20, 30)});
  CHECK(draw.overall == OverallWinner::Draw);

  auto single = decide_winner({table("a", kOpponentArgues, 40, 30)});
  CHECK(single.overall == OverallWinner::Opponent);
  CHECK(single.per_judge.at(0).winner == TableWinner::Opponent);

  auto ties_only = decide_winner({table("a", kProponentArgues, 30, 30), table("b", kOpponentArgues, 25, 25)});
  CHECK(ties_only.overall == OverallWinner::Draw);

  auto with_incomplete = decide_winner({table("a", kProponentArgues, 30, 20),
                                        table("b", kOpponentArgues, 40, 10, false),
                                        table("c", kOpponentArgues, 10, 40)});
  CHECK(with_incomplete.overall == OverallWinner::Proponent);
  CHECK(with_incomplete.per_judge.size() == 2);

  CHECK(parse_overall_winner(to_string(OverallWinner::Draw)) == OverallWinner::Draw);
  CHECK(parse_judge_mode("crit") == JudgeMode::Crit);
  CHECK(parse_judge_source("transcript") == JudgeSource::FullTranscript);
  CHECK_THROWS_AS(parse_judge_mode("vote"), Error);
}

TEST_CASE("CRIT judging mode yields bounded scores") {
  auto transcript = testing::concluded_transcript();
  JudgeProfile judge{BackendProfile{.id = "crit"}, "crit"};
  BackendProfile p;
  p.id = "crit";
  FunctionBackend evaluator(p, [](std::span<const ChatTurn>, const RenderedPrompt& rp) -> std::string {
    const auto& id = rp.template_id;
    if (id == "p1.1") return testing::fenced({{"Ω", "side claim"}});
    if (id == "p2") return testing::fenced({{"R", {rp.slots.text("Ω").rfind("It is not", 0) == 0 ? "rival" : "reason"}}});
    if (id == "p3.1" || id == "p5.1") return testing::fenced({{"evidence", "e"}});
    if (id == "p3.2" || id == "p5.2") return testing::fenced({{"type", "A"}});
    if (id == "p3.4") return testing::fenced({{"γ", 8}, {"θ", 5}});
    if (id == "p5.4") return testing::fenced({{"γ", 4}, {"θ", 5}});
    return testing::fenced({{"justification", "j"}});
  });
  JudgeOptions options;
  options.mode = JudgeMode::Crit;
  auto t = score_orientation(transcript, kProponentArgues, judge, evaluator, options);
  CHECK(t.prompt == "crit");
  REQUIRE(t.rows.size() == 5);
  // (8*5 + 4*5) / 2 / 10 for each side.
  for (const auto& row : t.rows) {
    CHECK(row.arguer_score == doctest::Approx(3.0));
    CHECK(row.counterer_score == doctest::Approx(3.0));
  }
}
