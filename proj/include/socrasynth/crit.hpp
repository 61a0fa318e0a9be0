#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "socrasynth/backend.hpp"
#include "socrasynth/core.hpp"
#include "socrasynth/util.hpp"

namespace socrasynth {

enum class DocOriginKind { UserProvided, DebateSide, Resolved };

std::string_view to_string(DocOriginKind kind);
DocOriginKind parse_doc_origin_kind(std::string_view text);

struct DocOrigin {
  DocOriginKind kind = DocOriginKind::UserProvided;
  std::optional<AgentRole> role;  // DebateSide
  std::string parent_reason;      // Resolved: the citing reason text

  friend bool operator==(const DocOrigin&, const DocOrigin&) = default;
};

struct CritDocument {
  std::string id;
  std::string text;
  DocOrigin origin;

  friend bool operator==(const CritDocument&, const CritDocument&) = default;
};

enum class CritMode { Monologue, Dialogue };

std::string_view to_string(CritMode mode);
CritMode parse_crit_mode(std::string_view text);

// An opponent contribution that rivals may be drawn from in Dialogue mode.
struct RivalSource {
  int round = 0;
  std::string text;
};

struct CritReport;

struct ReasonAssessment {
  std::string reason;
  std::string evidence;
  EvidenceType evidence_type = EvidenceType::Opinion;
  double gamma = 1.0;
  double theta = 1.0;
  bool is_rival = false;
  std::optional<int> source_round;  // Dialogue rivals: round of the opponent utterance
  Box<CritReport> sub_report;
  std::string justification;
  // Type-D bookkeeping: why recursion did not fire.
  bool truncated_by_depth = false;
  bool cycle_detected = false;
  bool unresolved = false;

  friend bool operator==(const ReasonAssessment&, const ReasonAssessment&) = default;
};

struct CritReport {
  std::string document_id;
  std::string claim;
  std::vector<ReasonAssessment> assessments;  // reasons first, then rivals
  double gamma_total_raw = 0.0;
  double gamma_total = 0.0;
  double gamma_paper_scale = 1.0;  // max(1, gamma_total)
  int depth = 0;                   // nesting level of this report; the root is 0
  bool truncated_by_depth = false; // set when any assessment in this subtree was cut off
  bool cycle_detected = false;     // set when any assessment in this subtree hit a cycle
  bool reasons_truncated = false;
  bool rivals_truncated = false;

  // Levels in the report tree; a report without sub-reports has height 1.
  int tree_height() const;

  friend bool operator==(const CritReport&, const CritReport&) = default;
};

// Maps a type-D reason to the document it cites (FindDoc).
class DocResolver {
 public:
  virtual ~DocResolver() = default;
  virtual std::optional<CritDocument> resolve(const std::string& reason, const std::string& evidence) const = 0;
};

// Resolves by citation key: the first key (in sorted order) that occurs in the reason text,
// or failing that in the evidence text.
class MapResolver : public DocResolver {
 public:
  void add(std::string key, CritDocument doc);
  std::optional<CritDocument> resolve(const std::string& reason, const std::string& evidence) const override;

 private:
  std::map<std::string, CritDocument> docs_;
};

// Directory with index.json {"key": "file.txt", ...}; document ids are the file stems.
std::shared_ptr<MapResolver> load_corpus(const std::filesystem::path& dir);

class NullResolver : public DocResolver {
 public:
  std::optional<CritDocument> resolve(const std::string&, const std::string&) const override {
    return std::nullopt;
  }
};

struct CritOptions {
  int max_depth = 2;
  CritMode mode = CritMode::Monologue;
  std::vector<RivalSource> opponent_utterances;  // Dialogue only
  std::size_t max_reasons = 8;
  std::size_t max_rivals = 8;
  bool justify = true;
};

// Phrase used for the claim when rivals are extracted from opponent utterances.
std::string negate_claim(const std::string& claim);

std::string extract_claim(const CritDocument& doc, Backend& backend);

struct ReasonList {
  std::vector<std::string> items;
  bool truncated = false;
};

// Throws NoReasonsFound on an empty list.
ReasonList extract_reasons(const CritDocument& doc, const std::string& claim, Backend& backend,
                           std::size_t cap = 8);

// path holds the ids of documents on the current recursion chain (including doc).
ReasonAssessment assess_reason(const std::string& reason, const std::string& claim, const CritDocument& doc,
                               Backend& backend, const DocResolver& resolver, int depth_budget,
                               const std::vector<std::string>& path = {}, const CritOptions& options = {});

struct RivalList {
  std::vector<std::string> items;
  std::vector<std::optional<int>> source_rounds;  // parallel to items
  bool truncated = false;
};

RivalList elicit_rivals(const std::string& claim, std::span<const std::string> reasons, const CritDocument& doc,
                        Backend& backend, CritMode mode, std::span<const RivalSource> opponent_utterances,
                        std::size_t cap = 8);

struct Aggregate {
  double raw = 0.0;
  double normalized = 0.0;
};

// Mean of gamma*theta with compensated summation; normalized = raw / 10.
Aggregate aggregate_pairs(std::span<const std::pair<double, double>> pairs);
Aggregate aggregate(std::span<const ReasonAssessment> assessments);

CritReport evaluate(const CritDocument& doc, Backend& backend, const DocResolver& resolver,
                    const CritOptions& options = {});

struct RevisedScore {
  std::string reason;
  bool is_rival = false;
  double gamma = 0.0;
  double theta = 0.0;
  double revised_gamma = 0.0;
  double revised_theta = 0.0;
  double delta_gamma = 0.0;  // original - revised
  double delta_theta = 0.0;
};

// Re-scores every top-level assessment with the context prepended. An empty context
// re-issues the original scoring prompts unchanged.
std::vector<RevisedScore> counterfactual_reassess(const CritReport& report, const CritDocument& doc,
                                                  const std::string& context_override, Backend& backend);

}  // namespace socrasynth
