#include "socrasynth/backend.hpp"

#include "socrasynth/error.hpp"

namespace socrasynth {

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::LiveHttp ? "LiveHttp" : "Scripted";
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "LiveHttp" || text == "live_http" || text == "http") return BackendKind::LiveHttp;
  if (text == "Scripted" || text == "scripted") return BackendKind::Scripted;
  throw Error(ErrorCode::InvalidConfig, "unknown backend kind '" + std::string(text) + "'", "kind");
}

void validate_profile(const BackendProfile& p) {
  if (p.id.empty()) throw Error(ErrorCode::InvalidConfig, "backend profile needs an id", "id");
  if (p.kind == BackendKind::LiveHttp && p.endpoint.empty()) {
    throw Error(ErrorCode::InvalidConfig, "backend '" + p.id + "' is LiveHttp but has no endpoint",
                "endpoint");
  }
  if (!(p.temperature >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0", "temperature");
  }
  if (p.timeout_ms <= 0) throw Error(ErrorCode::InvalidConfig, "timeout_ms must be > 0", "timeout_ms");
  if (p.max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0", "max_retries");
  if (p.backoff_ms < 0) throw Error(ErrorCode::InvalidConfig, "backoff_ms must be >= 0", "backoff_ms");
  if (p.max_in_flight < 1) {
    throw Error(ErrorCode::InvalidConfig, "max_in_flight must be >= 1", "max_in_flight");
  }
}

UsageStats Backend::usage() const {
  std::lock_guard lock(usage_mu_);
  return usage_;
}

void Backend::record_call(const std::string& template_id, int retries) {
  std::lock_guard lock(usage_mu_);
  ++usage_.calls_per_template[template_id];
  ++usage_.total_calls;
  usage_.total_retries += retries;
}

SlotMap complete_structured(Backend& backend, std::span<const ChatTurn> history,
                            const RenderedPrompt& prompt, Completion* completion) {
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion c = backend.complete(history, prompt);
    try {
      SlotMap slots = parse_structured_output(c.text, prompt.expected_out);
      if (completion) *completion = std::move(c);
      return slots;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::NoStructuredPayload:
        case ErrorCode::SlotKindMismatch:
        case ErrorCode::ScoreOutOfRange:
          last_error = e.what();
          break;
        default:
          throw;
      }
    }
  }
  throw Error(ErrorCode::ExtractionFailed,
              "template '" + prompt.template_id + "' gave no usable output after one retry (" +
                  last_error + ")",
              prompt.template_id);
}

FunctionBackend::FunctionBackend(BackendProfile profile, Handler handler)
    : profile_(std::move(profile)), handler_(std::move(handler)) {}

Completion FunctionBackend::complete(std::span<const ChatTurn> history, const RenderedPrompt& prompt) {
  Completion c;
  c.text = handler_(history, prompt);
  c.template_id = prompt.template_id;
  c.model_name = profile_.model_name;
  c.temperature = profile_.temperature;
  record_call(prompt.template_id, 0);
  return c;
}

BackendPtr make_backend(const BackendProfile& profile) {
  validate_profile(profile);
  if (profile.kind == BackendKind::LiveHttp) return std::make_shared<HttpBackend>(profile);
  if (profile.script.empty()) return std::make_shared<ScriptedBackend>(profile, std::vector<ScriptEntry>{});
  return load_script(profile.script, profile);
}

}  // namespace socrasynth
