#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace socrasynth {

// Proponent argues for the subject (LLM+), Opponent against it (LLM-).
enum class AgentRole { Proponent, Opponent };

// Totally ordered; a session only ever moves forward through these.
enum class Phase { TopicFormation, Opening, Refutation, Closing, Concluded };

enum class EvidenceType { Theory, Opinion, Statistics, ClaimFromOtherSources };

enum class TopicOrigin { Proponent, Opponent, Merged };

std::string_view to_string(AgentRole role);
std::string_view to_string(Phase phase);
std::string_view to_string(EvidenceType type);
std::string_view to_string(TopicOrigin origin);
AgentRole parse_agent_role(std::string_view text);
Phase parse_phase(std::string_view text);
EvidenceType parse_evidence_type(std::string_view text);
TopicOrigin parse_topic_origin(std::string_view text);

AgentRole other(AgentRole role);
// "A" for the proponent, "B" for the opponent.
std::string_view agent_letter(AgentRole role);
// Letter used in the evidence-type prompt: A) theory ... D) claim from other sources.
char evidence_letter(EvidenceType type);

struct DebateConfig {
  std::string subject;
  double delta0 = 0.9;
  double decay = 1.2;
  double floor = 0.1;
  int max_rounds = 16;
  int topic_count = 5;
  int proposals_per_agent = 5;
  // The plateau guard passes while gamma >= previous_gamma - gamma_tolerance.
  double gamma_tolerance = 0.0;

  friend bool operator==(const DebateConfig&, const DebateConfig&) = default;
};

struct Topic {
  std::string id;
  std::string title;
  std::string description;
  TopicOrigin proposed_by = TopicOrigin::Merged;

  friend bool operator==(const Topic&, const Topic&) = default;
};

struct UtteranceSection {
  std::string topic_id;
  std::string text;

  friend bool operator==(const UtteranceSection&, const UtteranceSection&) = default;
};

struct Utterance {
  AgentRole role = AgentRole::Proponent;
  Phase phase = Phase::Opening;
  int round = 0;
  double delta_at_time = 0.0;
  std::vector<UtteranceSection> sections;
  std::string raw_text;
  std::int64_t timestamp = 0;

  // Section text for a topic, or nullptr.
  const std::string* section(std::string_view topic_id) const;
  // Sections rendered as "[T1] ..." lines, or the raw text when unstructured.
  std::string display_text() const;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct GammaEntry {
  int round = 0;
  double gamma = 0.0;

  friend bool operator==(const GammaEntry&, const GammaEntry&) = default;
};

class GammaHistory {
 public:
  // Rounds must be strictly increasing.
  void append(int round, double gamma);

  const std::vector<GammaEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  // Latest gamma, 0 before any evaluation.
  double current() const noexcept;
  // Gamma before the latest one, 0 when fewer than two entries exist.
  double previous() const noexcept;
  int strict_decreases() const noexcept;

  friend bool operator==(const GammaHistory&, const GammaHistory&) = default;

 private:
  std::vector<GammaEntry> entries_;
};

// Throws Error(DecayNotGreaterThanOne | FloorOutOfRange | EmptySubject | InvalidConfig).
const DebateConfig& validate_config(const DebateConfig& cfg);

// Contentiousness values used by successive refutation rounds:
// [d0/decay, d0/decay^2, ...] while the value stays strictly above floor.
std::vector<double> decay_sequence(double delta0, double decay, double floor);

inline constexpr std::array<double, 5> kProfileLevels{0.9, 0.7, 0.5, 0.3, 0.0};

// Closest profile level; exact midpoints resolve to the more contentious level.
double nearest_profile_level(double delta);

}  // namespace socrasynth
