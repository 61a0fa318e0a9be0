#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socrasynth/prompts.hpp"

namespace socrasynth {

enum class BackendKind { Scripted, LiveHttp };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);

struct BackendProfile {
  std::string id;
  BackendKind kind = BackendKind::Scripted;
  std::string endpoint;  // LiveHttp: full chat-completions URL
  std::string model_name;
  double temperature = 0.7;
  int timeout_ms = 60000;
  int max_retries = 3;
  int backoff_ms = 500;       // first retry delay; doubles per attempt
  std::string api_key_env;    // name of the env var holding the bearer token
  int max_in_flight = 4;
  std::string script;         // Scripted: path to the script file (may be empty)
  bool strict = true;         // Scripted: unmatched calls fail instead of producing filler
  std::uint64_t seed = 0;     // Scripted filler seed

  friend bool operator==(const BackendProfile&, const BackendProfile&) = default;
};

// Throws InvalidConfig when the profile cannot be used.
void validate_profile(const BackendProfile& profile);

enum class Speaker { System, Orchestrator, Model };

struct ChatTurn {
  Speaker speaker = Speaker::Orchestrator;
  std::string text;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct Completion {
  std::string text;
  std::string template_id;
  std::string model_name;
  double temperature = 0.0;
  int retries = 0;  // transport-level retries spent on this call
};

struct UsageStats {
  std::map<std::string, int> calls_per_template;
  int total_calls = 0;
  int total_retries = 0;

  friend bool operator==(const UsageStats&, const UsageStats&) = default;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendProfile& profile() const = 0;
  // The prompt is sent after the history as one orchestrator turn.
  virtual Completion complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) = 0;

  UsageStats usage() const;

 protected:
  void record_call(const std::string& template_id, int retries);

 private:
  mutable std::mutex usage_mu_;
  UsageStats usage_;
};

using BackendPtr = std::shared_ptr<Backend>;

// Renders nothing itself: calls the backend, parses the prompt's out-slots and retries the
// call once when the reply has no valid payload. The second failure becomes
// ExtractionFailed naming the template id.
SlotMap complete_structured(Backend& backend, std::span<const ChatTurn> history,
                            const RenderedPrompt& prompt, Completion* completion = nullptr);

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

struct ScriptEntry {
  std::string template_id;
  std::optional<std::string> fingerprint;  // nullopt = wildcard
  std::string response;
  std::optional<int> remaining_uses;       // nullopt = unlimited
  int line = 0;

  friend bool operator==(const ScriptEntry&, const ScriptEntry&) = default;
};

// "MATCH <template_id> <fingerprint|*> [uses=N]" followed by an indented response block.
// Lines starting with '#' outside a block are comments. Throws ScriptParseError(line).
std::vector<ScriptEntry> parse_script(std::string_view text);

// Inverse of parse_script for entries whose responses are non-empty.
std::string format_script(std::span<const ScriptEntry> entries);

class ScriptedBackend : public Backend {
 public:
  struct CallRecord {
    std::string template_id;
    std::string fingerprint;
    std::string prompt_text;
    std::vector<ChatTurn> history;
    std::string response;
    std::optional<int> matched_line;  // nullopt when filler was produced
  };

  ScriptedBackend(BackendProfile profile, std::vector<ScriptEntry> entries);

  const BackendProfile& profile() const override { return profile_; }
  Completion complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) override;

  std::vector<CallRecord> calls() const;
  std::vector<ScriptEntry> entries() const;

 private:
  std::string filler(const RenderedPrompt& prompt, std::uint64_t ordinal) const;

  BackendProfile profile_;
  mutable std::mutex mu_;
  std::vector<ScriptEntry> entries_;
  std::vector<CallRecord> calls_;
  std::map<std::string, std::uint64_t> filler_counts_;
};

// Reads and parses the script at path; the profile's script field is set to path.
std::shared_ptr<ScriptedBackend> load_script(const std::filesystem::path& path, BackendProfile profile);

// ---------------------------------------------------------------------------
// Live HTTP backend (chat-completions message array)
// ---------------------------------------------------------------------------

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendProfile profile);

  const BackendProfile& profile() const override { return profile_; }
  Completion complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) override;

  // Request body exactly as sent; exposed for tests.
  std::string request_body(std::span<const ChatTurn> history, const RenderedPrompt& prompt) const;

 private:
  BackendProfile profile_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::mutex gate_mu_;
  std::condition_variable gate_cv_;
  int in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Callback backend: responses computed by a function (test doubles, adapters)
// ---------------------------------------------------------------------------

class FunctionBackend : public Backend {
 public:
  using Handler = std::function<std::string(std::span<const ChatTurn>, const RenderedPrompt&)>;

  FunctionBackend(BackendProfile profile, Handler handler);

  const BackendProfile& profile() const override { return profile_; }
  Completion complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) override;

 private:
  BackendProfile profile_;
  Handler handler_;
};

// Scripted profiles load their script (empty when no path is set); LiveHttp builds a client.
BackendPtr make_backend(const BackendProfile& profile);

}  // namespace socrasynth
