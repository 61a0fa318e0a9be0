#pragma once

// JSON mappings for every persisted or transmitted type. Enums are written by name,
// optional fields as null.

#include "json.hpp"
#include "socrasynth/backend.hpp"
#include "socrasynth/error.hpp"
#include "socrasynth/core.hpp"
#include "socrasynth/crit.hpp"
#include "socrasynth/engine.hpp"
#include "socrasynth/judges.hpp"

namespace socrasynth {

using nlohmann::json;

void to_json(json& j, const DebateConfig& v);
void from_json(const json& j, DebateConfig& v);
void to_json(json& j, const Topic& v);
void from_json(const json& j, Topic& v);
void to_json(json& j, const UtteranceSection& v);
void from_json(const json& j, UtteranceSection& v);
void to_json(json& j, const Utterance& v);
void from_json(const json& j, Utterance& v);
void to_json(json& j, const GammaEntry& v);
void from_json(const json& j, GammaEntry& v);
void to_json(json& j, const GammaHistory& v);
void from_json(const json& j, GammaHistory& v);

void to_json(json& j, const BackendProfile& v);
void from_json(const json& j, BackendProfile& v);

void to_json(json& j, const CritDocument& v);
void from_json(const json& j, CritDocument& v);
void to_json(json& j, const ReasonAssessment& v);
void from_json(const json& j, ReasonAssessment& v);
void to_json(json& j, const CritReport& v);
void from_json(const json& j, CritReport& v);

void to_json(json& j, const SteeringEvent& v);
void from_json(const json& j, SteeringEvent& v);
void to_json(json& j, const BackendInfo& v);
void from_json(const json& j, BackendInfo& v);
void to_json(json& j, const SessionState& v);
void from_json(const json& j, SessionState& v);
void to_json(json& j, const SessionEvent& v);
void from_json(const json& j, SessionEvent& v);
void to_json(json& j, const GateSpec& v);
void from_json(const json& j, GateSpec& v);
void to_json(json& j, const SessionSpec& v);
void from_json(const json& j, SessionSpec& v);

void to_json(json& j, const JudgeProfile& v);
void from_json(const json& j, JudgeProfile& v);
void to_json(json& j, const Orientation& v);
void from_json(const json& j, Orientation& v);
void to_json(json& j, const ScoreRow& v);
void from_json(const json& j, ScoreRow& v);
void to_json(json& j, const ScoreTable& v);
void from_json(const json& j, ScoreTable& v);
void to_json(json& j, const JudgeVote& v);
void from_json(const json& j, JudgeVote& v);
void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);

// Any from_json failure (missing key, wrong type, unknown enum) becomes InvariantViolation.
template <class T>
T decode(const json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvariantViolation, "malformed " + std::string(what) + ": " + e.what(),
                std::string(what));
  }
}

}  // namespace socrasynth
