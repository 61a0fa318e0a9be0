#include <fstream>

#include "doctest.h"
#include "socrasynth/error.hpp"
#include "socrasynth/serialization.hpp"
#include "socrasynth/store.hpp"
#include "support.hpp"

using namespace socrasynth;

namespace {

ErrorCode load_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a load error");
  return ErrorCode::IoError;
}

CritReport regulation_report() {
  auto backend = load_script(testing::fixture("regulation/crit.script"), testing::scripted_profile("s", ""));
  CritDocument doc{"position", read_text_file(testing::fixture("regulation/position.txt")), DocOrigin{}};
  return evaluate(doc, *backend, NullResolver{});
}

CritReport chain_report() {
  auto corpus = load_corpus(testing::fixture("corpus/chain"));
  CritDocument d1{"d1", read_text_file(testing::fixture("corpus/chain/d1.txt")), DocOrigin{}};
  return evaluate(d1, *testing::corpus_evaluator(), *corpus);
}

}  // namespace

TEST_CASE("round-trip of every document kind") {
  testing::TempDir dir;
  auto debate = make_debate(testing::regulation_spec());
  debate->run();
  auto transcript = debate->state();
  auto spec = testing::regulation_spec();
  auto report = chain_report();
  auto panel = run_panel(testing::concluded_transcript(), testing::judge_panel());
  auto verdict = decide_winner(panel.tables);

  save(dir / "session.meta", spec);
  save(dir / "transcript.doc", transcript);
  save(dir / "report.doc", report);
  save(dir / "tables.doc", panel.tables);
  save(dir / "verdict.doc", verdict);

  CHECK(load_session_spec(dir / "session.meta") == spec);
  CHECK(load_transcript(dir / "transcript.doc") == transcript);
  CHECK(load_crit_report(dir / "report.doc") == report);
  CHECK(load_score_tables(dir / "tables.doc") == panel.tables);
  CHECK(load_verdict(dir / "verdict.doc") == verdict);
  CHECK(load_crit_report(dir / "report.doc").tree_height() == 3);

  // Saving what was loaded reproduces the bytes.
  auto first = read_text_file(dir / "transcript.doc");
  save(dir / "again.doc", load_transcript(dir / "transcript.doc"));
  CHECK(read_text_file(dir / "again.doc") == first);
}

TEST_CASE("serialization is byte-stable") {
  auto report = regulation_report();
  auto a = serialize_document(DocKind::CritReport, json(report));
  auto b = serialize_document(DocKind::CritReport, json(regulation_report()));
  CHECK(a == b);
  auto loaded = parse_document(a);
  CHECK(loaded.kind == DocKind::CritReport);
  CHECK(loaded.schema_version == kSchemaVersion);
  CHECK(loaded.digest == document_digest(DocKind::CritReport, kSchemaVersion, loaded.body));
  CHECK(loaded.digest.size() == 64);
}

TEST_CASE("canonical dump sorts keys and rejects non-finite numbers") {
  CHECK(canonical_dump(json{{"b", 1}, {"a", 0.1}}) == "{\"a\":0.1,\"b\":1}");
  try {
    canonical_dump(json{{"x", std::numeric_limits<double>::infinity()}});
    FAIL("infinity must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonCanonicalizable);
  }
}

TEST_CASE("load rejects tampered documents") {
  testing::TempDir dir;
  auto report = regulation_report();
  save(dir / "report.doc", report);

  // Edited bytes no longer match the digest.
  auto text = read_text_file(dir / "report.doc");
  auto pos = text.find("\"theta\": 9");
  REQUIRE(pos != std::string::npos);
  auto edited = text;
  edited.replace(pos, 10, "\"theta\": 8");
  write_text_atomic(dir / "edited.doc", edited);
  CHECK(load_code([&] { load_crit_report(dir / "edited.doc"); }) == ErrorCode::DigestMismatch);

  // A consistent digest over an out-of-range score is still refused.
  json body = report;
  body["assessments"][0]["gamma"] = 11;
  save_document(dir / "eleven.doc", DocKind::CritReport, body);
  CHECK(load_code([&] { load_crit_report(dir / "eleven.doc"); }) == ErrorCode::InvariantViolation);

  json wrong_total = report;
  wrong_total["gamma_total"] = 9.9;
  save_document(dir / "total.doc", DocKind::CritReport, wrong_total);
  CHECK(load_code([&] { load_crit_report(dir / "total.doc"); }) == ErrorCode::InvariantViolation);

  // Newer schema versions are refused before anything else.
  json env{{"schema_version", kSchemaVersion + 1},
           {"kind", "CritReport"},
           {"body", json(report)},
           {"digest", document_digest(DocKind::CritReport, kSchemaVersion + 1, json(report))}};
  write_text_atomic(dir / "future.doc", env.dump(2));
  CHECK(load_code([&] { load_crit_report(dir / "future.doc"); }) == ErrorCode::SchemaTooNew);

  // Right envelope, wrong kind.
  save(dir / "verdict.doc", Verdict{});
  CHECK(load_code([&] { load_crit_report(dir / "verdict.doc"); }) == ErrorCode::InvariantViolation);
  CHECK(load_code([&] { load_crit_report(dir / "absent.doc"); }) == ErrorCode::IoError);
  write_text_atomic(dir / "junk.doc", "not json");
  CHECK(load_code([&] { parse_document(read_text_file(dir / "junk.doc")); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("transcript invariants") {
  auto s = testing::concluded_transcript();
  CHECK_NOTHROW(check_invariants(s));

  auto bad_delta = s;
  bad_delta.delta_current = 1.5;
  CHECK_THROWS_AS(check_invariants(bad_delta), Error);

  auto bad_topic = s;
  bad_topic.theta_pro[0].sections[0].topic_id = "T9";
  CHECK_THROWS_AS(check_invariants(bad_topic), Error);

  auto wrong_side = s;
  wrong_side.theta_pro[0].role = AgentRole::Opponent;
  CHECK_THROWS_AS(check_invariants(wrong_side), Error);

  auto decreasing = s;
  decreasing.gamma_history = GammaHistory{};
  decreasing.gamma_history.append(1, 5);
  decreasing.gamma_history.append(2, 4);
  decreasing.gamma_history.append(3, 3);
  CHECK_THROWS_AS(check_invariants(decreasing), Error);
}

TEST_CASE("score table invariants") {
  auto tables = run_panel(testing::concluded_transcript(), testing::judge_panel()).tables;
  CHECK_NOTHROW(check_invariants(tables));
  auto off = tables;
  off[0].arguer_total += 1;
  CHECK_THROWS_AS(check_invariants(off), Error);
  auto flag = tables;
  flag[0].complete = false;
  CHECK_THROWS_AS(check_invariants(flag), Error);

  auto verdict = decide_winner(tables);
  CHECK_NOTHROW(check_invariants(verdict));
  verdict.per_judge[0].winner = TableWinner::Opponent;
  CHECK_THROWS_AS(check_invariants(verdict), Error);
}

TEST_CASE("atomic writes replace the whole file") {
  testing::TempDir dir;
  write_text_atomic(dir / "nested/out.txt", "first version, longer");
  write_text_atomic(dir / "nested/out.txt", "second");
  CHECK(read_text_file(dir / "nested/out.txt") == "second");
  int files = 0;
  for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir / "nested")) ++files;
  CHECK(files == 1);
}

TEST_CASE("events log round-trip") {
  auto debate = make_debate(testing::sequence_spec({5.0}));
  debate->run();
  auto text = events_log_text(debate->events());
  CHECK(parse_events_log(text) == debate->events());
  CHECK(events_log_text(parse_events_log(text)) == text);

  auto dropped = text.substr(text.find('\n') + 1);
  CHECK(load_code([&] { parse_events_log(dropped); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("session layout and script adoption") {
  testing::TempDir dir;
  SessionLayout layout{dir.path() / "regulation"};
  auto spec = adopt_scripts(layout, testing::regulation_spec());
  CHECK(spec.proponent.script == "scripts/agent-a.script");
  CHECK(spec.gate.backend->script == "scripts/gate.script");
  CHECK(std::filesystem::exists(layout.scripts() / "agent-b.script"));
  save(layout.meta(), spec);

  auto loaded = resolve_scripts(layout, load_session_spec(layout.meta()));
  auto debate = make_debate(loaded);
  debate->run();
  write_session_outputs(layout, *debate);
  CHECK(std::filesystem::exists(layout.report(12)));
  CHECK(layout.report(3).filename() == "round-03.doc");
  CHECK(load_transcript(layout.transcript()) == debate->state());
}
