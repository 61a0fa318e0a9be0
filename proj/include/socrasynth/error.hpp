#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace socrasynth {

enum class ErrorCode {
  // configuration
  EmptySubject,
  DecayNotGreaterThanOne,
  FloorOutOfRange,
  InvalidConfig,
  InvalidDelta,
  UnknownTemplate,
  MissingSlot,
  TemplateParseError,
  ScriptParseError,
  // backend / model output
  Timeout,
  ProviderError,
  NoScriptMatch,
  NoStructuredPayload,
  SlotKindMismatch,
  ScoreOutOfRange,
  ExtractionFailed,
  NoReasonsFound,
  TopicParseFailure,
  TooFewTopics,
  // protocol / validation
  EmptyAssessmentSet,
  PhaseViolation,
  AwaitingTopicApproval,
  EmptyPanel,
  JudgeConflict,
  IoError,
  NonCanonicalizable,
  SchemaTooNew,
  DigestMismatch,
  InvariantViolation,
  NotFound,
};

// Coarse grouping used for process exit codes and HTTP status mapping.
enum class ErrorCategory { Config, Backend, Validation };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {});

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  // Offending slot, field, template id or similar; may be empty.
  const std::string& detail() const noexcept { return detail_; }
  // Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

  // Same code and detail, with context appended to the message.
  Error with_context(const std::string& context) const;

 private:
  ErrorCode code_;
  std::string message_;
  std::string detail_;
};

}  // namespace socrasynth
