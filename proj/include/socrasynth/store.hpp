#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "socrasynth/crit.hpp"
#include "socrasynth/engine.hpp"
#include "socrasynth/judges.hpp"

namespace socrasynth {

inline constexpr int kSchemaVersion = 1;

enum class DocKind { Session, Transcript, CritReport, ScoreTables, Verdict };

std::string_view to_string(DocKind kind);
DocKind parse_doc_kind(std::string_view text);

// Compact JSON with sorted keys and shortest round-trip numbers. Throws NonCanonicalizable
// for non-finite numbers and invalid UTF-8.
std::string canonical_dump(const nlohmann::json& value);

// sha256 of canonical_dump({kind, schema_version, body}).
std::string document_digest(DocKind kind, int schema_version, const nlohmann::json& body);

// The on-disk text of a document: an indented envelope {schema_version, kind, body, digest}.
std::string serialize_document(DocKind kind, const nlohmann::json& body);

struct LoadedDocument {
  DocKind kind = DocKind::Session;
  int schema_version = kSchemaVersion;
  nlohmann::json body;
  std::string digest;
};

// Checks the envelope, the schema version (SchemaTooNew) and the digest (DigestMismatch).
LoadedDocument parse_document(std::string_view text, std::string_view origin = "document");

// Writes via a temporary sibling and rename. Returns the digest.
std::string save_document(const std::filesystem::path& path, DocKind kind, const nlohmann::json& body);

std::string save(const std::filesystem::path& path, const SessionSpec& spec);
std::string save(const std::filesystem::path& path, const SessionState& transcript);
std::string save(const std::filesystem::path& path, const CritReport& report);
std::string save(const std::filesystem::path& path, const std::vector<ScoreTable>& tables);
std::string save(const std::filesystem::path& path, const Verdict& verdict);

// Loaders re-check type invariants and throw InvariantViolation on any breach.
SessionSpec load_session_spec(const std::filesystem::path& path);
SessionState load_transcript(const std::filesystem::path& path);
CritReport load_crit_report(const std::filesystem::path& path);
std::vector<ScoreTable> load_score_tables(const std::filesystem::path& path);
Verdict load_verdict(const std::filesystem::path& path);

// Same checks on in-memory values.
void check_invariants(const SessionState& transcript);
void check_invariants(const CritReport& report);
void check_invariants(const std::vector<ScoreTable>& tables);
void check_invariants(const Verdict& verdict);

// One canonical JSON object per line.
std::string events_log_text(const std::vector<SessionEvent>& events);
std::vector<SessionEvent> parse_events_log(std::string_view text);

void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// <root>/<id>/{session.meta, transcript.doc, reports/round-XX.doc, verdict.doc, events.log, scripts/}
struct SessionLayout {
  std::filesystem::path dir;

  std::filesystem::path meta() const { return dir / "session.meta"; }
  std::filesystem::path transcript() const { return dir / "transcript.doc"; }
  std::filesystem::path verdict() const { return dir / "verdict.doc"; }
  std::filesystem::path tables() const { return dir / "tables.doc"; }
  std::filesystem::path events() const { return dir / "events.log"; }
  std::filesystem::path scripts() const { return dir / "scripts"; }
  std::filesystem::path report(int round) const;
};

// Copies each scripted profile's script into scripts/ and points the profile at the copy
// (relative to the session directory). Returns the updated spec.
SessionSpec adopt_scripts(const SessionLayout& layout, SessionSpec spec);

// Makes relative script paths absolute against the session directory.
SessionSpec resolve_scripts(const SessionLayout& layout, SessionSpec spec);

// Writes transcript, gate reports and events.log for a debate.
void write_session_outputs(const SessionLayout& layout, const Debate& debate);

}  // namespace socrasynth
