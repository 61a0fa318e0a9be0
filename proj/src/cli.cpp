#include "socrasynth/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "socrasynth/backend.hpp"
#include "socrasynth/crit.hpp"
#include "socrasynth/engine.hpp"
#include "socrasynth/judges.hpp"
#include "socrasynth/prompts.hpp"
#include "socrasynth/serialization.hpp"
#include "socrasynth/service.hpp"
#include "socrasynth/store.hpp"
#include "socrasynth/util.hpp"

namespace fs = std::filesystem;

namespace socrasynth {

int exit_code_for(const Error& error) {
  switch (error.category()) {
    case ErrorCategory::Config: return kExitConfig;
    case ErrorCategory::Backend: return kExitBackend;
    case ErrorCategory::Validation: return kExitValidation;
  }
  return kExitValidation;
}

namespace {

json read_json_file(const fs::path& path) {
  std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what(), path.string());
  }
}

void anchor_script(BackendProfile& profile, const fs::path& base) {
  if (!profile.script.empty() && fs::path(profile.script).is_relative()) {
    profile.script = (base / profile.script).lexically_normal().string();
  }
}

BackendProfile load_profile(const fs::path& path) {
  json j = read_json_file(path);
  BackendProfile p;
  try {
    p = j.get<BackendProfile>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what(), path.string());
  }
  anchor_script(p, path.parent_path());
  return p;
}

BackendProfile scripted_profile(std::string id, const std::string& script) {
  BackendProfile p;
  p.id = std::move(id);
  p.kind = BackendKind::Scripted;
  p.model_name = "scripted";
  p.script = script;
  return p;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "'" + item + "' is not a number", field);
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "expected a comma-separated list of numbers", field);
  return out;
}

std::string delta_text(double delta) { return format_fixed(delta, 6); }

std::string session_id_for(SessionSpec spec) {
  spec.id.clear();
  return "debate-" + sha256_hex(canonical_dump(json(spec))).substr(0, 12);
}

// ---------------------------------------------------------------------------
// debate
// ---------------------------------------------------------------------------

struct DebateFlags {
  std::string config_file;
  std::optional<std::string> subject;
  std::optional<double> delta0, decay, floor;
  std::optional<int> topics, max_rounds;
  std::string backend_pro, backend_con;
  std::string script, script_pro, script_con, gate_script;
  std::string gate_sequence;
  bool gate_no_repeat = false;
  bool headless = false;
  std::string session_id;
  std::string out;
};

SessionSpec build_spec(const DebateFlags& f) {
  SessionSpec spec;
  bool config_headless = false;
  if (!f.config_file.empty()) {
    json j = read_json_file(f.config_file);
    config_headless = j.is_object() && j.value("headless", false);
    try {
      spec = j.get<SessionSpec>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, f.config_file + ": " + e.what(), "config");
    }
    fs::path base = fs::path(f.config_file).parent_path();
    anchor_script(spec.proponent, base);
    anchor_script(spec.opponent, base);
    if (spec.gate.backend) anchor_script(*spec.gate.backend, base);
  }
  if (f.subject) spec.config.subject = *f.subject;
  if (f.delta0) spec.config.delta0 = *f.delta0;
  if (f.decay) spec.config.decay = *f.decay;
  if (f.floor) spec.config.floor = *f.floor;
  if (f.topics) spec.config.topic_count = *f.topics;
  if (f.max_rounds) spec.config.max_rounds = *f.max_rounds;

  if (!f.script.empty()) {
    spec.proponent = scripted_profile("scripted", f.script);
    spec.opponent = spec.proponent;
  }
  if (!f.script_pro.empty()) spec.proponent = scripted_profile("scripted-pro", f.script_pro);
  if (!f.script_con.empty()) spec.opponent = scripted_profile("scripted-con", f.script_con);
  if (!f.backend_pro.empty()) spec.proponent = load_profile(f.backend_pro);
  if (!f.backend_con.empty()) spec.opponent = load_profile(f.backend_con);
  if (spec.proponent.id.empty()) {
    throw Error(ErrorCode::InvalidConfig, "no proponent backend; pass --backend-pro, --script or --script-pro",
                "backend-pro");
  }
  if (spec.opponent.id.empty()) {
    throw Error(ErrorCode::InvalidConfig, "no opponent backend; pass --backend-con, --script or --script-con",
                "backend-con");
  }
  if (!f.gate_sequence.empty()) {
    spec.gate.kind = GateKind::Sequence;
    spec.gate.sequence = parse_number_list(f.gate_sequence, "gate-sequence");
    spec.gate.repeat_last = !f.gate_no_repeat;
    spec.gate.backend.reset();
  } else if (!f.gate_script.empty()) {
    spec.gate.kind = GateKind::Crit;
    spec.gate.backend = scripted_profile("scripted-gate", f.gate_script);
  }
  spec.headless = f.headless || config_headless;
  validate_config(spec.config);
  validate_profile(spec.proponent);
  validate_profile(spec.opponent);
  spec.id = f.session_id.empty() ? session_id_for(spec) : f.session_id;
  return spec;
}

class SummaryPrinter {
 public:
  explicit SummaryPrinter(std::ostream& out, double delta0) : out_(out), delta_(delta0) {}

  void operator()(const SessionEvent& e) {
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::TopicsProposed:
        for (const auto& t : p.at("topics")) {
          out_ << "topic " << t.at("id").get<std::string>() << ": " << t.at("title").get<std::string>() << '\n';
        }
        break;
      case EventKind::SteeringApplied: {
        auto ev = p.at("event").get<SteeringEvent>();
        out_ << "steering " << to_string(ev.kind);
        if (ev.kind == SteeringKind::SetDelta) out_ << " value=" << delta_text(ev.value);
        out_ << " by " << ev.actor << '\n';
        break;
      }
      case EventKind::DeltaChanged:
        delta_ = p.at("delta").get<double>();
        break;
      case EventKind::UtteranceAdded: {
        auto u = p.at("utterance").get<Utterance>();
        if (u.role != AgentRole::Proponent) break;
        if (u.phase == Phase::Opening) out_ << "opening Δ=" << delta_text(u.delta_at_time) << '\n';
        if (u.phase == Phase::Closing) out_ << "closing Δ=" << delta_text(u.delta_at_time) << '\n';
        break;
      }
      case EventKind::GammaUpdated:
        out_ << "round " << p.at("round").get<int>() << " Δ=" << delta_text(delta_) << " Γ="
             << format_real(p.at("gamma").get<double>()) << '\n';
        break;
      case EventKind::Error:
        out_ << "error " << p.value("code", std::string()) << ": " << p.value("message", std::string()) << '\n';
        break;
      case EventKind::PhaseChanged:
        break;
    }
    out_.flush();
  }

 private:
  std::ostream& out_;
  double delta_;
};

// Returns false when the moderator rejects the topics.
bool approve_interactively(Debate& debate, CliIo& io) {
  auto state = debate.state();
  io.out << "proposed topics:\n";
  for (const auto& t : state.topics) io.out << "  " << t.id << ". " << t.title << '\n';
  for (;;) {
    io.out << "approve topics? [y]es / [e]dit / [n]o: " << std::flush;
    std::string answer;
    if (!std::getline(io.in, answer)) return false;
    answer = canonical_whitespace(answer);
    if (answer == "y" || answer == "yes") {
      debate.enqueue(SteeringEvent{SteeringKind::ApproveTopics, 0.0, {}, 0, 0, "moderator"});
      return true;
    }
    if (answer == "n" || answer == "no") return false;
    if (answer == "e" || answer == "edit") {
      std::vector<Topic> edited = state.topics;
      for (auto& t : edited) {
        io.out << t.id << " title [" << t.title << "]: " << std::flush;
        std::string line;
        if (!std::getline(io.in, line)) return false;
        if (!canonical_whitespace(line).empty()) t.title = canonical_whitespace(line);
      }
      debate.enqueue(SteeringEvent{SteeringKind::ApproveTopics, 0.0, edited, 0, 0, "moderator"});
      return true;
    }
  }
}

int cmd_debate(const DebateFlags& flags, CliIo& io) {
  SessionSpec spec = build_spec(flags);
  if (!spec.headless && !io.interactive) {
    io.err << "error: topic approval needs an interactive terminal; rerun with --headless\n";
    return kExitConfig;
  }
  auto debate = make_debate(spec);
  io.out << "session " << spec.id << '\n';
  io.out << "subject: " << spec.config.subject << '\n';
  debate->set_sink(SummaryPrinter(io.out, spec.config.delta0));

  std::optional<SessionLayout> layout;
  if (!flags.out.empty()) {
    layout = SessionLayout{flags.out};
    fs::create_directories(layout->dir);
    save(layout->meta(), adopt_scripts(*layout, spec));
  }

  int code = kExitOk;
  try {
    while (debate->state().phase != Phase::Concluded) {
      if (debate->awaiting_approval()) {
        if (!approve_interactively(*debate, io)) {
          io.err << "error: topics rejected by the moderator\n";
          code = kExitValidation;
          break;
        }
      }
      debate->step();
    }
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    code = exit_code_for(e);
  }

  auto state = debate->state();
  if (code == kExitOk) {
    io.out << "concluded rounds=" << state.round_index
           << " utterances=" << state.theta_pro.size() + state.theta_con.size() << " steps=" << state.step;
    if (state.concluded_with_gap) io.out << " closing=incomplete";
    io.out << '\n';
  }
  if (layout) {
    write_session_outputs(*layout, *debate);
    io.out << "transcript " << layout->transcript().string() << '\n';
  }
  return code;
}

// ---------------------------------------------------------------------------
// crit
// ---------------------------------------------------------------------------

struct CritFlags {
  std::string doc;
  int max_depth = 2;
  std::string corpus;
  std::string mode = "monologue";
  std::vector<std::string> opponent;
  std::string backend, script;
  bool no_justify = false;
  std::string out;
};

void print_assessments(std::ostream& out, const CritReport& report, const std::string& indent) {
  int reason_no = 0, rival_no = 0;
  for (const auto& a : report.assessments) {
    out << indent << (a.is_rival ? "rival " : "reason ") << (a.is_rival ? ++rival_no : ++reason_no)
        << " γ=" << format_real(a.gamma) << " θ=" << format_real(a.theta) << " type=" << evidence_letter(a.evidence_type);
    if (a.truncated_by_depth) out << " truncated_by_depth";
    if (a.cycle_detected) out << " cycle_detected";
    if (a.unresolved) out << " unresolved";
    out << ": " << a.reason << '\n';
    if (a.sub_report) {
      out << indent << "  cites " << a.sub_report->document_id << " Γ=" << format_real(a.sub_report->gamma_total)
          << '\n';
      print_assessments(out, *a.sub_report, indent + "    ");
    }
  }
}

int cmd_crit(const CritFlags& f, CliIo& io) {
  CritDocument doc;
  doc.id = fs::path(f.doc).stem().string();
  doc.text = read_text_file(f.doc);
  BackendProfile profile;
  if (!f.backend.empty()) {
    profile = load_profile(f.backend);
  } else if (!f.script.empty()) {
    profile = scripted_profile("scripted", f.script);
  } else {
    throw Error(ErrorCode::InvalidConfig, "no evaluator backend; pass --backend or --script", "backend");
  }
  if (f.max_depth < 0) throw Error(ErrorCode::InvalidConfig, "max depth must be non-negative", "max-depth");
  auto backend = make_backend(profile);

  CritOptions options;
  options.max_depth = f.max_depth;
  options.mode = parse_crit_mode(f.mode);
  options.justify = !f.no_justify;
  for (std::size_t i = 0; i < f.opponent.size(); ++i) {
    options.opponent_utterances.push_back({static_cast<int>(i) + 1, read_text_file(f.opponent[i])});
  }
  std::shared_ptr<DocResolver> resolver = std::make_shared<NullResolver>();
  if (!f.corpus.empty()) resolver = load_corpus(f.corpus);

  CritReport report = evaluate(doc, *backend, *resolver, options);
  io.out << "claim: " << report.claim << '\n';
  print_assessments(io.out, report, "");
  io.out << "Γ = " << format_real(report.gamma_total) << " (raw " << format_real(report.gamma_total_raw) << ")\n";
  if (report.truncated_by_depth) io.out << "truncated_by_depth\n";
  if (report.cycle_detected) io.out << "cycle_detected\n";
  if (!f.out.empty()) {
    save(f.out, report);
    io.out << "report " << f.out << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

struct JudgeFlags {
  std::string transcript;
  std::string panel;
  std::string mode = "direct";
  std::string source = "closing";
  std::string out;
};

std::vector<JudgeProfile> load_panel(const fs::path& path) {
  json j = read_json_file(path);
  if (j.is_object() && j.contains("judges")) j = j.at("judges");
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "panel file must hold an array of judges", "panel");
  std::vector<JudgeProfile> panel;
  try {
    for (const auto& item : j) {
      JudgeProfile p;
      if (item.contains("backend")) {
        p.backend = item.at("backend").get<BackendProfile>();
        p.display_name = item.value("display_name", p.backend.id);
      } else {
        p.backend = item.get<BackendProfile>();
        p.display_name = p.backend.id;
      }
      anchor_script(p.backend, path.parent_path());
      panel.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what(), "panel");
  }
  return panel;
}

void print_table(std::ostream& out, const ScoreTable& t) {
  out << "table " << t.judge << " arguer=" << to_string(t.orientation.arguer)
      << " counterer=" << to_string(t.orientation.counterer);
  if (!t.complete) out << " incomplete";
  out << '\n';
  for (const auto& r : t.rows) {
    out << "  " << r.topic_id;
    if (r.missing) {
      out << " missing\n";
    } else {
      out << ' ' << format_real(r.arguer_score) << ' ' << format_real(r.counterer_score) << '\n';
    }
  }
  out << "  total " << format_real(t.arguer_total) << ' ' << format_real(t.counterer_total) << '\n';
}

int cmd_judge(const JudgeFlags& f, CliIo& io) {
  SessionState transcript = load_transcript(f.transcript);
  auto panel = load_panel(f.panel);
  JudgeOptions options;
  options.mode = parse_judge_mode(f.mode);
  options.source = parse_judge_source(f.source);
  auto result = run_panel(transcript, panel, options);
  Verdict verdict = decide_winner(result.tables);
  for (const auto& failed : result.failed_judges) {
    if (std::find(verdict.failed_judges.begin(), verdict.failed_judges.end(), failed) == verdict.failed_judges.end()) {
      verdict.failed_judges.push_back(failed);
    }
  }
  for (const auto& t : result.tables) print_table(io.out, t);
  for (const auto& v : verdict.per_judge) {
    io.out << "vote " << v.judge << " arguer=" << to_string(v.orientation.arguer) << " winner=" << to_string(v.winner)
           << '\n';
  }
  for (const auto& failed : verdict.failed_judges) io.out << "failed " << failed << '\n';
  io.out << "verdict " << to_string(verdict.overall) << '\n';
  if (!f.out.empty()) {
    SessionLayout layout{f.out};
    fs::create_directories(layout.dir);
    save(layout.tables(), result.tables);
    save(layout.verdict(), verdict);
    io.out << "verdict written to " << layout.verdict().string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

int cmd_replay(const std::string& session_dir, CliIo& io) {
  SessionLayout layout{session_dir};
  SessionSpec spec = resolve_scripts(layout, load_session_spec(layout.meta()));
  std::string recorded_events = read_text_file(layout.events());
  std::string recorded_transcript = read_text_file(layout.transcript());
  auto events = parse_events_log(recorded_events);

  std::map<int, std::vector<SteeringEvent>> steering;
  for (const auto& e : events) {
    if (e.kind != EventKind::SteeringApplied) continue;
    auto ev = e.payload.at("event").get<SteeringEvent>();
    if (ev.actor == "auto") continue;
    int at = ev.step;
    ev.step = 0;
    ev.at_round = 0;
    steering[at].push_back(std::move(ev));
  }

  auto debate = make_debate(spec);
  std::optional<Error> failure;
  try {
    while (debate->state().phase != Phase::Concluded) {
      int next = debate->state().step + 1;
      if (auto it = steering.find(next); it != steering.end()) {
        for (const auto& ev : it->second) debate->enqueue(ev);
      }
      if (debate->awaiting_approval()) break;
      debate->step();
    }
  } catch (const Error& e) {
    failure = e;
  }

  std::string replayed_events = events_log_text(debate->events());
  std::string replayed_transcript = serialize_document(DocKind::Transcript, json(debate->state()));
  bool same_events = replayed_events == recorded_events;
  bool same_transcript = replayed_transcript == recorded_transcript;
  if (same_events && same_transcript) {
    io.out << "identical\n";
    return kExitOk;
  }
  if (failure) io.out << "replay stopped: " << failure->what() << '\n';
  if (!same_transcript) io.out << "differs: transcript\n";
  if (!same_events) {
    auto replayed = debate->events();
    std::size_t i = 0;
    while (i < replayed.size() && i < events.size() && replayed[i] == events[i]) ++i;
    io.out << "differs: events from sequence " << i << " (recorded " << events.size() << ", replayed "
           << replayed.size() << ")\n";
  }
  return kExitValidation;
}

// ---------------------------------------------------------------------------
// serve / fingerprint
// ---------------------------------------------------------------------------

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string backends;
  std::string token;
  std::string console;
  std::string data_dir;
  int heartbeat_ms = 15000;
};

int cmd_serve(const ServeFlags& f, CliIo& io) {
  ServiceOptions options;
  if (!f.backends.empty()) {
    json j = read_json_file(f.backends);
    if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "backends file must hold an array of profiles", "backends");
    for (const auto& item : j) {
      auto p = decode<BackendProfile>(item, "backends");
      anchor_script(p, fs::path(f.backends).parent_path());
      validate_profile(p);
      options.backends[p.id] = p;
    }
  }
  options.auth_token = f.token;
  options.console_dir = f.console;
  options.data_dir = f.data_dir;
  options.heartbeat_ms = f.heartbeat_ms;
  Service service(options);
  int port = service.start(f.host, f.port);
  io.out << "listening on http://" << f.host << ':' << port << std::endl;
  // Runs until the process is terminated.
  for (;;) std::this_thread::sleep_for(std::chrono::hours(24));
}

SlotValue slot_from_json(const json& v, const std::string& name) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.get<double>();
  if (v.is_array()) {
    if (std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_string(); })) return v.get<TextList>();
    PairList pairs;
    for (const auto& x : v) {
      if (!x.is_array() || x.size() != 2) break;
      pairs.emplace_back(x[0].get<std::string>(), x[1].get<std::string>());
    }
    if (pairs.size() == v.size()) return pairs;
  }
  throw Error(ErrorCode::InvalidConfig, "unsupported value for slot '" + name + "'", name);
}

int cmd_fingerprint(const std::string& template_id, const std::string& slots_file, std::optional<double> delta,
                    bool show, CliIo& io) {
  json j = slots_file.empty() ? json::object() : read_json_file(slots_file);
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "slots file must hold an object", "slots");
  SlotMap slots;
  for (const auto& [name, value] : j.items()) slots.set(name, slot_from_json(value, name));
  auto rendered = render(template_id, slots, delta);
  io.out << rendered.fingerprint << '\n';
  if (show) io.out << rendered.text << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliIo io) {
  CLI::App app{"Multi-agent debate orchestration, CRIT evaluation and judge panels", "socrasynth"};
  app.require_subcommand(1);

  DebateFlags debate;
  auto* d = app.add_subcommand("debate", "Run a debate end to end");
  d->add_option("--config", debate.config_file, "Session spec JSON (flags win)")->check(CLI::ExistingFile);
  d->add_option("--subject", debate.subject, "Debate subject");
  d->add_option("--delta0", debate.delta0, "Initial contentiousness");
  d->add_option("--decay", debate.decay, "Contentiousness divisor per round");
  d->add_option("--floor", debate.floor, "Contentiousness floor");
  d->add_option("--topics", debate.topics, "Number of debate topics");
  d->add_option("--max-rounds", debate.max_rounds, "Refutation round cap");
  d->add_option("--backend-pro", debate.backend_pro, "Proponent backend profile JSON")->check(CLI::ExistingFile);
  d->add_option("--backend-con", debate.backend_con, "Opponent backend profile JSON")->check(CLI::ExistingFile);
  d->add_option("--script", debate.script, "Script for both agents")->check(CLI::ExistingFile);
  d->add_option("--script-pro", debate.script_pro, "Proponent script")->check(CLI::ExistingFile);
  d->add_option("--script-con", debate.script_con, "Opponent script")->check(CLI::ExistingFile);
  d->add_option("--gate-script", debate.gate_script, "Script for the CRIT gate evaluator")->check(CLI::ExistingFile);
  d->add_option("--gate-sequence", debate.gate_sequence, "Fixed Γ values per round, comma separated");
  d->add_flag("--gate-no-repeat", debate.gate_no_repeat, "Fail when the Γ sequence runs out");
  d->add_flag("--headless", debate.headless, "Approve proposed topics automatically");
  d->add_option("--session-id", debate.session_id, "Session id (default derived from the spec)");
  d->add_option("--out", debate.out, "Session output directory");

  CritFlags crit;
  auto* c = app.add_subcommand("crit", "Evaluate a document with CRIT");
  c->add_option("--doc", crit.doc, "Document to evaluate")->required()->check(CLI::ExistingFile);
  c->add_option("--max-depth", crit.max_depth, "Citation recursion depth");
  c->add_option("--corpus", crit.corpus, "Directory with index.json of cited documents")->check(CLI::ExistingDirectory);
  c->add_option("--mode", crit.mode, "monologue or dialogue");
  c->add_option("--opponent", crit.opponent, "Opponent utterance files (dialogue mode)")->check(CLI::ExistingFile);
  c->add_option("--backend", crit.backend, "Evaluator backend profile JSON")->check(CLI::ExistingFile);
  c->add_option("--script", crit.script, "Evaluator script")->check(CLI::ExistingFile);
  c->add_flag("--no-justify", crit.no_justify, "Skip per-reason justifications");
  c->add_option("--out", crit.out, "Report output file");

  JudgeFlags judge;
  auto* j = app.add_subcommand("judge", "Score a transcript with a judge panel");
  j->add_option("--transcript", judge.transcript, "transcript.doc")->required()->check(CLI::ExistingFile);
  j->add_option("--panel", judge.panel, "Panel JSON")->required()->check(CLI::ExistingFile);
  j->add_option("--mode", judge.mode, "direct or crit");
  j->add_option("--source", judge.source, "closing or transcript");
  j->add_option("--out", judge.out, "Output directory for tables.doc and verdict.doc");

  std::string session_dir;
  auto* r = app.add_subcommand("replay", "Re-run a stored session and diff the results");
  r->add_option("--session", session_dir, "Session directory")->required()->check(CLI::ExistingDirectory);

  ServeFlags serve;
  auto* s = app.add_subcommand("serve", "Run the HTTP session service");
  s->add_option("--host", serve.host, "Listen address");
  s->add_option("--port", serve.port, "Listen port (0 picks one)");
  s->add_option("--backends", serve.backends, "JSON array of backend profiles")->check(CLI::ExistingFile);
  s->add_option("--token", serve.token, "Bearer token (default SOCRASYNTH_TOKEN)");
  s->add_option("--console", serve.console, "Console asset directory")->check(CLI::ExistingDirectory);
  s->add_option("--data-dir", serve.data_dir, "Directory for concluded sessions");
  s->add_option("--heartbeat-ms", serve.heartbeat_ms, "Event stream heartbeat interval");

  std::string template_id, slots_file;
  std::optional<double> fp_delta;
  bool show = false;
  auto* fp = app.add_subcommand("fingerprint", "Print the script fingerprint of a rendered prompt");
  fp->add_option("--template", template_id, "Template id")->required();
  fp->add_option("--slots", slots_file, "JSON object of slot values")->check(CLI::ExistingFile);
  fp->add_option("--delta", fp_delta, "Contentiousness level");
  fp->add_flag("--show", show, "Also print the rendered prompt");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (d->parsed()) return cmd_debate(debate, io);
    if (c->parsed()) return cmd_crit(crit, io);
    if (j->parsed()) return cmd_judge(judge, io);
    if (r->parsed()) return cmd_replay(session_dir, io);
    if (s->parsed()) return cmd_serve(serve, io);
    if (fp->parsed()) return cmd_fingerprint(template_id, slots_file, fp_delta, show, io);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitConfig;
}

}  // namespace socrasynth
