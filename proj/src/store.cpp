#include "socrasynth/store.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "socrasynth/error.hpp"
#include "socrasynth/serialization.hpp"
#include "socrasynth/util.hpp"

namespace socrasynth {

namespace fs = std::filesystem;

std::string_view to_string(DocKind kind) {
  switch (kind) {
    case DocKind::Session: return "session";
    case DocKind::Transcript: return "transcript";
    case DocKind::CritReport: return "crit_report";
    case DocKind::ScoreTables: return "score_tables";
    case DocKind::Verdict: return "verdict";
  }
  return "session";
}

DocKind parse_doc_kind(std::string_view text) {
  for (auto k : {DocKind::Session, DocKind::Transcript, DocKind::CritReport, DocKind::ScoreTables, DocKind::Verdict}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown document kind '" + std::string(text) + "'", "kind");
}

namespace {

void require_finite(const json& v) {
  if (v.is_number_float() && !std::isfinite(v.get<double>())) {
    throw Error(ErrorCode::NonCanonicalizable, "non-finite number cannot be serialized");
  }
  if (v.is_structured()) {
    for (const auto& child : v) require_finite(child);
  }
}

json envelope_core(DocKind kind, int schema_version, const json& body) {
  return json{{"kind", to_string(kind)}, {"schema_version", schema_version}, {"body", body}};
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); }

void check_score(double v, const std::string& what) {
  if (!(v >= 1.0 && v <= 10.0)) violation(what + " = " + format_real(v) + " is outside [1, 10]");
}

void check_report(const CritReport& r, int expected_depth) {
  if (r.depth != expected_depth) {
    violation("report " + r.document_id + " has depth " + std::to_string(r.depth) + ", expected " +
              std::to_string(expected_depth));
  }
  if (r.assessments.empty()) violation("report " + r.document_id + " has no assessments");
  if (r.gamma_total != r.gamma_total_raw / 10.0) violation("report " + r.document_id + " totals disagree");
  for (const auto& a : r.assessments) {
    check_score(a.gamma, "gamma of '" + a.reason + "'");
    check_score(a.theta, "theta of '" + a.reason + "'");
    if (a.sub_report) {
      if (a.evidence_type != EvidenceType::ClaimFromOtherSources) {
        violation("sub-report on '" + a.reason + "' without evidence type D");
      }
      check_report(*a.sub_report, expected_depth + 1);
    }
  }
}

template <class T>
T decode_body(const LoadedDocument& doc, DocKind expected, std::string_view what) {
  if (doc.kind != expected) {
    violation("expected a " + std::string(to_string(expected)) + " document, found " + std::string(to_string(doc.kind)));
  }
  return decode<T>(doc.body, what);
}

LoadedDocument load_path(const fs::path& path) { return parse_document(read_text_file(path), path.string()); }

}  // namespace

std::string canonical_dump(const json& value) {
  require_finite(value);
  try {
    return value.dump();
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::NonCanonicalizable, e.what());
  }
}

std::string document_digest(DocKind kind, int schema_version, const json& body) {
  return sha256_hex(canonical_dump(envelope_core(kind, schema_version, body)));
}

std::string serialize_document(DocKind kind, const json& body) {
  auto digest = document_digest(kind, kSchemaVersion, body);
  json env = envelope_core(kind, kSchemaVersion, body);
  env["digest"] = digest;
  return env.dump(2) + "\n";
}

LoadedDocument parse_document(std::string_view text, std::string_view origin) {
  auto env = json::parse(text, nullptr, false);
  if (env.is_discarded() || !env.is_object()) violation(std::string(origin) + " is not a JSON document");
  for (const char* key : {"schema_version", "kind", "body", "digest"}) {
    if (!env.contains(key)) violation(std::string(origin) + " lacks '" + key + "'");
  }
  if (!env["schema_version"].is_number_integer() || !env["kind"].is_string() || !env["digest"].is_string()) {
    violation(std::string(origin) + " has a malformed envelope");
  }
  LoadedDocument doc;
  doc.schema_version = env["schema_version"].get<int>();
  if (doc.schema_version > kSchemaVersion) {
    throw Error(ErrorCode::SchemaTooNew,
                std::string(origin) + " has schema_version " + std::to_string(doc.schema_version) +
                    "; this build reads up to " + std::to_string(kSchemaVersion),
                std::to_string(doc.schema_version));
  }
  doc.kind = parse_doc_kind(env["kind"].get<std::string>());
  doc.body = env["body"];
  doc.digest = env["digest"].get<std::string>();
  if (document_digest(doc.kind, doc.schema_version, doc.body) != doc.digest) {
    throw Error(ErrorCode::DigestMismatch, std::string(origin) + " does not match its digest", std::string(origin));
  }
  return doc;
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string(), path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "short write to " + tmp.string(), path.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot replace " + path.string(), path.string());
  }
}

std::string save_document(const fs::path& path, DocKind kind, const json& body) {
  auto text = serialize_document(kind, body);
  write_text_atomic(path, text);
  return document_digest(kind, kSchemaVersion, body);
}

std::string save(const fs::path& path, const SessionSpec& spec) { return save_document(path, DocKind::Session, spec); }

std::string save(const fs::path& path, const SessionState& transcript) {
  return save_document(path, DocKind::Transcript, transcript);
}

std::string save(const fs::path& path, const CritReport& report) {
  return save_document(path, DocKind::CritReport, report);
}

std::string save(const fs::path& path, const std::vector<ScoreTable>& tables) {
  return save_document(path, DocKind::ScoreTables, tables);
}

std::string save(const fs::path& path, const Verdict& verdict) {
  return save_document(path, DocKind::Verdict, verdict);
}

SessionSpec load_session_spec(const fs::path& path) {
  auto spec = decode_body<SessionSpec>(load_path(path), DocKind::Session, "session");
  try {
    validate_config(spec.config);
    validate_profile(spec.proponent);
    validate_profile(spec.opponent);
  } catch (const Error& e) {
    violation("session.meta: " + std::string(e.what()));
  }
  return spec;
}

SessionState load_transcript(const fs::path& path) {
  auto s = decode_body<SessionState>(load_path(path), DocKind::Transcript, "transcript");
  check_invariants(s);
  return s;
}

CritReport load_crit_report(const fs::path& path) {
  auto r = decode_body<CritReport>(load_path(path), DocKind::CritReport, "crit report");
  check_invariants(r);
  return r;
}

std::vector<ScoreTable> load_score_tables(const fs::path& path) {
  auto t = decode_body<std::vector<ScoreTable>>(load_path(path), DocKind::ScoreTables, "score tables");
  check_invariants(t);
  return t;
}

Verdict load_verdict(const fs::path& path) {
  auto v = decode_body<Verdict>(load_path(path), DocKind::Verdict, "verdict");
  check_invariants(v);
  return v;
}

void check_invariants(const SessionState& s) {
  if (!(s.delta_current >= 0.0 && s.delta_current <= 1.0)) violation("delta_current outside [0, 1]");
  std::set<std::string> topic_ids;
  for (const auto& t : s.topics) {
    if (canonical_whitespace(t.title).empty()) violation("topic " + t.id + " has an empty title");
    if (!topic_ids.insert(t.id).second) violation("duplicate topic id " + t.id);
  }
  for (auto role : {AgentRole::Proponent, AgentRole::Opponent}) {
    const auto& list = role == AgentRole::Proponent ? s.theta_pro : s.theta_con;
    Phase last = Phase::Opening;
    for (const auto& u : list) {
      if (u.role != role) violation("utterance filed under the wrong side");
      if (u.phase == Phase::TopicFormation || u.phase == Phase::Concluded) violation("utterance in a non-speaking phase");
      if (u.phase < last) violation("utterance phases out of order");
      if (u.phase > s.phase) violation("utterance from a phase the session has not reached");
      last = u.phase;
      if (!(u.delta_at_time >= 0.0 && u.delta_at_time <= 1.0)) violation("utterance delta outside [0, 1]");
      for (const auto& sec : u.sections) {
        if (!topic_ids.count(sec.topic_id)) violation("section for unknown topic " + sec.topic_id);
      }
    }
  }
  int extra = 0;
  for (const auto& ev : s.moderator_log) extra += ev.kind == SteeringKind::RequestExtraRound;
  if (s.gamma_history.strict_decreases() > 1 + extra) violation("gamma history decreases more than the loop allows");
  if (s.round_index > s.config.max_rounds + extra) violation("more rounds than max_rounds");
}

void check_invariants(const CritReport& report) { check_report(report, report.depth); }

void check_invariants(const std::vector<ScoreTable>& tables) {
  for (const auto& t : tables) {
    if (t.orientation.arguer == t.orientation.counterer) violation("table of " + t.judge + " has one role on both sides");
    bool any_missing = false;
    for (const auto& row : t.rows) {
      if (row.missing) {
        any_missing = true;
        continue;
      }
      check_score(row.arguer_score, t.judge + " " + row.topic_id + " arguer score");
      check_score(row.counterer_score, t.judge + " " + row.topic_id + " counterer score");
    }
    auto [a, c] = recompute_totals(t);
    if (a != t.arguer_total || c != t.counterer_total) violation("totals of " + t.judge + " do not match the rows");
    if (any_missing == t.complete) violation("completeness flag of " + t.judge + " disagrees with the rows");
  }
}

void check_invariants(const Verdict& v) {
  for (const auto& vote : v.per_judge) {
    if (vote.orientation.arguer == vote.orientation.counterer) violation("vote with one role on both sides");
    TableWinner expected = TableWinner::Tie;
    if (vote.arguer_total != vote.counterer_total) {
      AgentRole w = vote.arguer_total > vote.counterer_total ? vote.orientation.arguer : vote.orientation.counterer;
      expected = w == AgentRole::Proponent ? TableWinner::Proponent : TableWinner::Opponent;
    }
    if (vote.winner != expected) violation("vote of " + vote.judge + " contradicts its totals");
  }
}

std::string events_log_text(const std::vector<SessionEvent>& events) {
  std::string out;
  for (const auto& e : events) out += canonical_dump(json(e)) + "\n";
  return out;
}

std::vector<SessionEvent> parse_events_log(std::string_view text) {
  std::vector<SessionEvent> out;
  std::size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    auto row = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line;
    if (row.empty()) continue;
    auto j = json::parse(row, nullptr, false);
    if (j.is_discarded()) violation("events.log line " + std::to_string(line) + " is not JSON");
    out.push_back(decode<SessionEvent>(j, "event"));
    if (out.back().sequence != static_cast<std::int64_t>(out.size()) - 1) {
      violation("events.log line " + std::to_string(line) + " breaks the sequence");
    }
  }
  return out;
}

fs::path SessionLayout::report(int round) const {
  char name[32];
  std::snprintf(name, sizeof(name), "round-%02d.doc", round);
  return dir / "reports" / name;
}

SessionSpec adopt_scripts(const SessionLayout& layout, SessionSpec spec) {
  std::vector<BackendProfile*> profiles{&spec.proponent, &spec.opponent};
  if (spec.gate.backend) profiles.push_back(&*spec.gate.backend);
  std::error_code ec;
  fs::create_directories(layout.scripts(), ec);
  for (auto* p : profiles) {
    if (p->kind != BackendKind::Scripted || p->script.empty()) continue;
    fs::path src = p->script;
    if (src.is_relative() && !fs::exists(src)) src = layout.dir / src;
    fs::path name = fs::path("scripts") / (p->id + ".script");
    write_text_atomic(layout.dir / name, read_text_file(src));
    p->script = name.generic_string();
  }
  return spec;
}

SessionSpec resolve_scripts(const SessionLayout& layout, SessionSpec spec) {
  std::vector<BackendProfile*> profiles{&spec.proponent, &spec.opponent};
  if (spec.gate.backend) profiles.push_back(&*spec.gate.backend);
  for (auto* p : profiles) {
    if (!p->script.empty() && fs::path(p->script).is_relative()) p->script = (layout.dir / p->script).string();
  }
  return spec;
}

void write_session_outputs(const SessionLayout& layout, const Debate& debate) {
  save(layout.transcript(), debate.state());
  for (const auto& [round, report] : debate.gate_reports()) save(layout.report(round), report);
  write_text_atomic(layout.events(), events_log_text(debate.events()));
}

}  // namespace socrasynth
