#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "socrasynth/backend.hpp"
#include "socrasynth/engine.hpp"
#include "socrasynth/judges.hpp"
#include "socrasynth/prompts.hpp"
#include "socrasynth/util.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace socrasynth;

inline fs::path fixture(const std::string& rel) { return fs::path(SOCRASYNTH_FIXTURES) / rel; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("socrasynth-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

// Non-strict scripted profile: every call gets deterministic filler.
inline BackendProfile filler_profile(const std::string& id, std::uint64_t seed) {
  BackendProfile p;
  p.id = id;
  p.kind = BackendKind::Scripted;
  p.model_name = "filler";
  p.strict = false;
  p.seed = seed;
  return p;
}

inline BackendProfile scripted_profile(const std::string& id, const fs::path& script) {
  BackendProfile p;
  p.id = id;
  p.kind = BackendKind::Scripted;
  p.model_name = "scripted";
  p.script = script.string();
  return p;
}

// Filler debaters with a fixed Γ sequence.
inline SessionSpec sequence_spec(std::vector<double> gammas, bool repeat_last = true, std::uint64_t seed = 1) {
  SessionSpec spec;
  spec.id = "seq-" + std::to_string(seed);
  spec.config.subject = "Should the use of large language models in education and research be regulated?";
  spec.proponent = filler_profile("filler-pro", seed);
  spec.opponent = filler_profile("filler-con", seed + 1000);
  spec.gate.kind = GateKind::Sequence;
  spec.gate.sequence = std::move(gammas);
  spec.gate.repeat_last = repeat_last;
  spec.headless = true;
  return spec;
}

// Scripted regulation debate with the CRIT gate.
inline SessionSpec regulation_spec() {
  SessionSpec spec;
  spec.id = "regulation";
  spec.config.subject = "Should the use of large language models in education and research be regulated?";
  spec.proponent = scripted_profile("agent-a", fixture("regulation/agent-a.script"));
  spec.opponent = scripted_profile("agent-b", fixture("regulation/agent-b.script"));
  spec.gate.kind = GateKind::Crit;
  spec.gate.backend = scripted_profile("gate", fixture("regulation/gate.script"));
  spec.headless = true;
  return spec;
}

inline std::string fenced(const nlohmann::json& j) { return "```json\n" + j.dump() + "\n```"; }

// Independent decay oracle: divide until the value no longer exceeds the floor.
inline std::vector<double> decay_oracle(double delta0, double decay, double floor) {
  std::vector<double> out;
  double d = delta0;
  for (;;) {
    d = d / decay;
    if (!(d > floor)) break;
    out.push_back(d);
  }
  return out;
}

// Evaluator for the "Claim: / Reason:" corpus documents. Reasons citing "[key]" are type D.
inline BackendPtr corpus_evaluator(double gamma = 6, double theta = 7) {
  auto handler = [gamma, theta](std::span<const ChatTurn>, const RenderedPrompt& p) -> std::string {
    auto lines_with = [](const std::string& text, const std::string& prefix) {
      std::vector<std::string> out;
      std::size_t pos = 0;
      while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        auto line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        if (line.rfind(prefix, 0) == 0) out.push_back(line.substr(prefix.size()));
        if (eol == std::string::npos) break;
        pos = eol + 1;
      }
      return out;
    };
    const auto& id = p.template_id;
    if (id == "p1.1") return fenced({{"Ω", lines_with(p.slots.text("d"), "Claim: ").at(0)}});
    if (id == "p2") return fenced({{"R", lines_with(p.slots.text("d"), "Reason: ")}});
    if (id == "p4") return fenced({{"R'", nlohmann::json::array()}});
    if (id == "p3.1") return fenced({{"evidence", p.slots.text("r")}});
    if (id == "p3.2") {
      bool cites = p.slots.text("evidence").find('[') != std::string::npos;
      return fenced({{"type", cites ? "D" : "A"}});
    }
    if (id == "p3.4" || id == "p5.4") return fenced({{"γ", gamma}, {"θ", theta}});
    if (id == "p7") return fenced({{"justification", "ok"}});
    return "unexpected template " + id;
  };
  BackendProfile profile;
  profile.id = "corpus-evaluator";
  profile.model_name = "function";
  return std::make_shared<FunctionBackend>(profile, handler);
}

// The three scripted judges of the regulation panel, in panel order.
inline std::vector<JudgeProfile> judge_panel() {
  std::vector<JudgeProfile> panel;
  for (const std::string name : {"davinci-003", "gpt-3.5", "gpt-4"}) {
    auto profile = scripted_profile("judge-" + name, fixture("judges/" + name + ".script"));
    profile.model_name = name;
    panel.push_back({profile, name});
  }
  return panel;
}

// A concluded filler debate with five topics: opening, one round, closing.
inline SessionState concluded_transcript(std::uint64_t seed = 1) {
  auto debate = make_debate(sequence_spec({5.0, 4.0}, false, seed));
  debate->run();
  return debate->state();
}

}  // namespace testing
