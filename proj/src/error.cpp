#include "socrasynth/error.hpp"

namespace socrasynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySubject: return "EmptySubject";
    case ErrorCode::DecayNotGreaterThanOne: return "DecayNotGreaterThanOne";
    case ErrorCode::FloorOutOfRange: return "FloorOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::TemplateParseError: return "TemplateParseError";
    case ErrorCode::ScriptParseError: return "ScriptParseError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::NoScriptMatch: return "NoScriptMatch";
    case ErrorCode::NoStructuredPayload: return "NoStructuredPayload";
    case ErrorCode::SlotKindMismatch: return "SlotKindMismatch";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::NoReasonsFound: return "NoReasonsFound";
    case ErrorCode::TopicParseFailure: return "TopicParseFailure";
    case ErrorCode::TooFewTopics: return "TooFewTopics";
    case ErrorCode::EmptyAssessmentSet: return "EmptyAssessmentSet";
    case ErrorCode::PhaseViolation: return "PhaseViolation";
    case ErrorCode::AwaitingTopicApproval: return "AwaitingTopicApproval";
    case ErrorCode::EmptyPanel: return "EmptyPanel";
    case ErrorCode::JudgeConflict: return "JudgeConflict";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonCanonicalizable: return "NonCanonicalizable";
    case ErrorCode::SchemaTooNew: return "SchemaTooNew";
    case ErrorCode::DigestMismatch: return "DigestMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySubject:
    case ErrorCode::DecayNotGreaterThanOne:
    case ErrorCode::FloorOutOfRange:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidDelta:
    case ErrorCode::UnknownTemplate:
    case ErrorCode::MissingSlot:
    case ErrorCode::TemplateParseError:
    case ErrorCode::ScriptParseError:
    case ErrorCode::NotFound:
      return ErrorCategory::Config;
    case ErrorCode::Timeout:
    case ErrorCode::ProviderError:
    case ErrorCode::NoScriptMatch:
    case ErrorCode::NoStructuredPayload:
    case ErrorCode::SlotKindMismatch:
    case ErrorCode::ScoreOutOfRange:
    case ErrorCode::ExtractionFailed:
    case ErrorCode::NoReasonsFound:
    case ErrorCode::TopicParseFailure:
    case ErrorCode::TooFewTopics:
      return ErrorCategory::Backend;
    default:
      return ErrorCategory::Validation;
  }
}

Error::Error(ErrorCode code, std::string message, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(std::move(message)),
      detail_(std::move(detail)) {}

Error Error::with_context(const std::string& context) const {
  return Error(code_, message_ + "; " + context, detail_);
}

}  // namespace socrasynth
