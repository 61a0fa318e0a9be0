#include "socrasynth/core.hpp"

#include <cmath>

#include "socrasynth/error.hpp"
#include "socrasynth/util.hpp"

namespace socrasynth {

std::string_view to_string(AgentRole role) {
  return role == AgentRole::Proponent ? "Proponent" : "Opponent";
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::TopicFormation: return "TopicFormation";
    case Phase::Opening: return "Opening";
    case Phase::Refutation: return "Refutation";
    case Phase::Closing: return "Closing";
    case Phase::Concluded: return "Concluded";
  }
  return "Unknown";
}

std::string_view to_string(EvidenceType type) {
  switch (type) {
    case EvidenceType::Theory: return "Theory";
    case EvidenceType::Opinion: return "Opinion";
    case EvidenceType::Statistics: return "Statistics";
    case EvidenceType::ClaimFromOtherSources: return "ClaimFromOtherSources";
  }
  return "Unknown";
}

std::string_view to_string(TopicOrigin origin) {
  switch (origin) {
    case TopicOrigin::Proponent: return "Proponent";
    case TopicOrigin::Opponent: return "Opponent";
    case TopicOrigin::Merged: return "Merged";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void bad_enum(std::string_view kind, std::string_view text) {
  throw Error(ErrorCode::InvariantViolation,
              "unknown " + std::string(kind) + " '" + std::string(text) + "'", std::string(kind));
}

}  // namespace

AgentRole parse_agent_role(std::string_view text) {
  if (text == "Proponent") return AgentRole::Proponent;
  if (text == "Opponent") return AgentRole::Opponent;
  bad_enum("role", text);
}

Phase parse_phase(std::string_view text) {
  for (auto p : {Phase::TopicFormation, Phase::Opening, Phase::Refutation, Phase::Closing,
                 Phase::Concluded}) {
    if (to_string(p) == text) return p;
  }
  bad_enum("phase", text);
}

EvidenceType parse_evidence_type(std::string_view text) {
  for (auto t : {EvidenceType::Theory, EvidenceType::Opinion, EvidenceType::Statistics,
                 EvidenceType::ClaimFromOtherSources}) {
    if (to_string(t) == text) return t;
  }
  bad_enum("evidence type", text);
}

TopicOrigin parse_topic_origin(std::string_view text) {
  for (auto o : {TopicOrigin::Proponent, TopicOrigin::Opponent, TopicOrigin::Merged}) {
    if (to_string(o) == text) return o;
  }
  bad_enum("topic origin", text);
}

AgentRole other(AgentRole role) {
  return role == AgentRole::Proponent ? AgentRole::Opponent : AgentRole::Proponent;
}

std::string_view agent_letter(AgentRole role) { return role == AgentRole::Proponent ? "A" : "B"; }

char evidence_letter(EvidenceType type) {
  switch (type) {
    case EvidenceType::Theory: return 'A';
    case EvidenceType::Opinion: return 'B';
    case EvidenceType::Statistics: return 'C';
    case EvidenceType::ClaimFromOtherSources: return 'D';
  }
  return '?';
}

const std::string* Utterance::section(std::string_view topic_id) const {
  for (const auto& s : sections) {
    if (s.topic_id == topic_id) return &s.text;
  }
  return nullptr;
}

std::string Utterance::display_text() const {
  if (sections.empty()) return raw_text;
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += '\n';
    out += "[" + s.topic_id + "] " + s.text;
  }
  return out;
}

void GammaHistory::append(int round, double gamma) {
  if (!entries_.empty() && round <= entries_.back().round) {
    throw Error(ErrorCode::InvariantViolation,
                "gamma history rounds must increase (" + std::to_string(round) + " after " +
                    std::to_string(entries_.back().round) + ")");
  }
  entries_.push_back({round, gamma});
}

double GammaHistory::current() const noexcept {
  return entries_.empty() ? 0.0 : entries_.back().gamma;
}

double GammaHistory::previous() const noexcept {
  return entries_.size() < 2 ? 0.0 : entries_[entries_.size() - 2].gamma;
}

int GammaHistory::strict_decreases() const noexcept {
  int n = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].gamma < entries_[i - 1].gamma) ++n;
  }
  return n;
}

const DebateConfig& validate_config(const DebateConfig& cfg) {
  if (canonical_whitespace(cfg.subject).empty()) {
    throw Error(ErrorCode::EmptySubject, "debate subject is empty", "subject");
  }
  if (!(cfg.delta0 > 0.0 && cfg.delta0 <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "delta0 must lie in (0, 1]", "delta0");
  }
  if (!(cfg.decay > 1.0) || !std::isfinite(cfg.decay)) {
    throw Error(ErrorCode::DecayNotGreaterThanOne,
                "decay must be > 1 or contentiousness never falls to the floor", "decay");
  }
  if (!(cfg.floor >= 0.0 && cfg.floor < 1.0) || cfg.floor >= cfg.delta0) {
    throw Error(ErrorCode::FloorOutOfRange, "floor must lie in [0, 1) and below delta0", "floor");
  }
  if (!(cfg.delta0 / cfg.decay > cfg.floor)) {
    throw Error(ErrorCode::FloorOutOfRange,
                "first decayed contentiousness is already at or below the floor", "floor");
  }
  if (cfg.max_rounds < 1) throw Error(ErrorCode::InvalidConfig, "max_rounds must be >= 1", "max_rounds");
  if (cfg.topic_count < 1) throw Error(ErrorCode::InvalidConfig, "topic_count must be >= 1", "topic_count");
  if (cfg.proposals_per_agent < 1) {
    throw Error(ErrorCode::InvalidConfig, "proposals_per_agent must be >= 1", "proposals_per_agent");
  }
  if (!(cfg.gamma_tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "gamma_tolerance must be >= 0", "gamma_tolerance");
  }
  return cfg;
}

std::vector<double> decay_sequence(double delta0, double decay, double floor) {
  if (!(decay > 1.0) || !(floor >= 0.0) || !(floor < delta0) || !(delta0 <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "decay_sequence requires decay > 1 and 0 <= floor < delta0 <= 1");
  }
  std::vector<double> out;
  double delta = delta0;
  while ((delta /= decay) > floor) out.push_back(delta);
  return out;
}

double nearest_profile_level(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::InvalidDelta, "contentiousness must lie in [0, 1]", "delta");
  }
  // Levels are scanned from most to least contentious; a later level only wins when it
  // is strictly closer, so midpoints stay with the higher level.
  constexpr double kTieSlack = 1e-12;
  double best = kProfileLevels.front();
  double best_distance = std::abs(delta - best);
  for (double level : kProfileLevels) {
    double d = std::abs(delta - level);
    if (d < best_distance - kTieSlack) {
      best = level;
      best_distance = d;
    }
  }
  return best;
}

}  // namespace socrasynth
