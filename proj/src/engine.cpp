#include "socrasynth/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <set>
#include <tuple>

#include "socrasynth/error.hpp"
#include "socrasynth/serialization.hpp"

namespace socrasynth {

std::string_view to_string(SteeringKind kind) {
  switch (kind) {
    case SteeringKind::SetDelta: return "SetDelta";
    case SteeringKind::RequestExtraRound: return "RequestExtraRound";
    case SteeringKind::ConcludeNow: return "ConcludeNow";
    case SteeringKind::ApproveTopics: return "ApproveTopics";
  }
  return "ConcludeNow";
}

SteeringKind parse_steering_kind(std::string_view text) {
  for (auto k : {SteeringKind::SetDelta, SteeringKind::RequestExtraRound, SteeringKind::ConcludeNow,
                 SteeringKind::ApproveTopics}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown steering kind '" + std::string(text) + "'");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::PhaseChanged: return "PhaseChanged";
    case EventKind::UtteranceAdded: return "UtteranceAdded";
    case EventKind::GammaUpdated: return "GammaUpdated";
    case EventKind::DeltaChanged: return "DeltaChanged";
    case EventKind::SteeringApplied: return "SteeringApplied";
    case EventKind::TopicsProposed: return "TopicsProposed";
    case EventKind::Error: return "Error";
  }
  return "Error";
}

EventKind parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::PhaseChanged, EventKind::UtteranceAdded, EventKind::GammaUpdated, EventKind::DeltaChanged,
                 EventKind::SteeringApplied, EventKind::TopicsProposed, EventKind::Error}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown event kind '" + std::string(text) + "'");
}

std::vector<Utterance> transcript_order(const SessionState& state) {
  std::vector<Utterance> all(state.theta_pro);
  all.insert(all.end(), state.theta_con.begin(), state.theta_con.end());
  std::stable_sort(all.begin(), all.end(), [](const Utterance& a, const Utterance& b) {
    return std::tuple(a.phase, a.round, a.role) < std::tuple(b.phase, b.round, b.role);
  });
  return all;
}

SessionState projection(SessionState state) {
  state.pending_steering.clear();
  state.extra_round_pending = false;
  state.conclude_pending = false;
  return state;
}

SessionState fold_events(SessionState s, const std::vector<SessionEvent>& events) {
  for (const auto& e : events) {
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::TopicsProposed:
        s.proposals = p.at("proposals").get<std::vector<Topic>>();
        s.topics = p.at("topics").get<std::vector<Topic>>();
        break;
      case EventKind::SteeringApplied: {
        auto ev = p.at("event").get<SteeringEvent>();
        if (ev.kind == SteeringKind::ApproveTopics) {
          if (!ev.topics.empty()) s.topics = ev.topics;
          s.topics_approved = true;
        }
        s.moderator_log.push_back(std::move(ev));
        break;
      }
      case EventKind::DeltaChanged:
        s.delta_current = p.at("delta").get<double>();
        break;
      case EventKind::PhaseChanged:
        s.phase = parse_phase(p.at("to").get<std::string>());
        if (s.phase == Phase::Concluded) s.concluded_with_gap = p.value("with_gap", false);
        break;
      case EventKind::UtteranceAdded: {
        auto u = p.at("utterance").get<Utterance>();
        (u.role == AgentRole::Proponent ? s.theta_pro : s.theta_con).push_back(std::move(u));
        break;
      }
      case EventKind::GammaUpdated: {
        int round = p.at("round").get<int>();
        s.gamma_history.append(round, p.at("gamma").get<double>());
        s.round_index = round;
        if (auto it = p.find("opponent_gamma"); it != p.end() && !it->is_null()) {
          s.opponent_gamma.push_back({round, it->get<double>()});
        }
        break;
      }
      case EventKind::Error:
        continue;
    }
    s.step = std::max(s.step, e.step);
  }
  return projection(std::move(s));
}

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

namespace {

std::string topics_text(const std::vector<Topic>& topics) {
  std::string out;
  for (const auto& t : topics) {
    if (!out.empty()) out += '\n';
    out += t.id + ". " + t.title;
    if (!t.description.empty()) out += ": " + t.description;
  }
  return out;
}

std::string stance_of(AgentRole role) {
  return role == AgentRole::Proponent ? "advocate in favor of" : "argue against";
}

std::string utterance_label(const Utterance& u) {
  std::string label = "Agent " + std::string(agent_letter(u.role)) + ", " + std::string(to_string(u.phase));
  if (u.phase == Phase::Refutation) label += " round " + std::to_string(u.round);
  return label;
}

}  // namespace

CritDocument composite_document(const SessionState& state, AgentRole side) {
  const auto& own = side == AgentRole::Proponent ? state.theta_pro : state.theta_con;
  const auto& rival = side == AgentRole::Proponent ? state.theta_con : state.theta_pro;
  std::string text = "Debate subject: " + state.config.subject + "\nAgent " + std::string(agent_letter(side)) +
                     " is to " + stance_of(side) + " the subject.\nTopics:\n" + topics_text(state.topics);
  for (const auto* list : {&own, &rival}) {
    for (const auto& u : *list) text += "\n\n[" + utterance_label(u) + "]\n" + u.display_text();
  }
  char id[64];
  std::snprintf(id, sizeof(id), "composite-%s-round-%02d", std::string(agent_letter(side)).c_str(), state.round_index);
  return CritDocument{id, text, DocOrigin{DocOriginKind::DebateSide, side, {}}};
}

CritGate::CritGate(BackendPtr backend, int max_depth, bool opponent_side)
    : backend_(std::move(backend)), max_depth_(max_depth), opponent_side_(opponent_side) {}

GateResult CritGate::evaluate(const SessionState& state) {
  auto run = [&](AgentRole side) {
    CritOptions options;
    options.max_depth = max_depth_;
    options.mode = CritMode::Dialogue;
    for (const auto& u : side == AgentRole::Proponent ? state.theta_con : state.theta_pro) {
      options.opponent_utterances.push_back({u.round, u.display_text()});
    }
    return socrasynth::evaluate(composite_document(state, side), *backend_, NullResolver{}, options);
  };
  GateResult result;
  result.report = run(AgentRole::Proponent);
  result.gamma = result.report->gamma_total;
  if (opponent_side_) result.opponent_gamma = run(AgentRole::Opponent).gamma_total;
  return result;
}

SequenceGate::SequenceGate(std::vector<double> values, bool repeat_last)
    : values_(std::move(values)), repeat_last_(repeat_last) {
  if (values_.empty()) throw Error(ErrorCode::InvalidConfig, "sequence gate needs at least one value", "gate.sequence");
}

GateResult SequenceGate::evaluate(const SessionState&) {
  if (next_ >= values_.size() && !repeat_last_) {
    throw Error(ErrorCode::InvalidConfig, "sequence gate exhausted after " + std::to_string(values_.size()) + " values",
                "gate.sequence");
  }
  GateResult r;
  r.gamma = values_[std::min(next_, values_.size() - 1)];
  ++next_;
  return r;
}

// ---------------------------------------------------------------------------
// Debate coordinator
// ---------------------------------------------------------------------------

struct Debate::Working {
  SessionState state;
  std::vector<SessionEvent> events;
  std::vector<std::pair<int, CritReport>> reports;
  std::int64_t base = 0;
  const Clock* clock = nullptr;

  void emit(EventKind kind, json payload) {
    SessionEvent e;
    e.sequence = base + static_cast<std::int64_t>(events.size());
    e.step = state.step;
    e.kind = kind;
    e.payload = std::move(payload);
    e.at = (*clock)();
    events.push_back(std::move(e));
  }
};

SessionState initial_state(const SessionSpec& spec) {
  SessionState s;
  s.id = spec.id;
  s.config = spec.config;
  s.proponent_backend = spec.proponent.id;
  s.opponent_backend = spec.opponent.id;
  s.backends.push_back({spec.proponent.id, spec.proponent.kind, spec.proponent.model_name, spec.proponent.temperature});
  if (spec.opponent.id != spec.proponent.id) {
    s.backends.push_back({spec.opponent.id, spec.opponent.kind, spec.opponent.model_name, spec.opponent.temperature});
  }
  s.delta_current = spec.config.delta0;
  s.phase = Phase::TopicFormation;
  return s;
}

Debate::Debate(SessionState initial, BackendPtr proponent, BackendPtr opponent, std::unique_ptr<GammaGate> gate,
               Clock clock, bool headless, bool concurrent_opening)
    : state_(std::move(initial)),
      proponent_(std::move(proponent)),
      opponent_(std::move(opponent)),
      gate_(std::move(gate)),
      clock_(std::move(clock)),
      headless_(headless),
      concurrent_opening_(concurrent_opening && proponent_ != opponent_) {
  validate_config(state_.config);
  if (!proponent_ || !opponent_ || !gate_) throw Error(ErrorCode::InvalidConfig, "debate needs two backends and a gate");
  if (!clock_) clock_ = make_clock(ClockMode::Logical);
}

SessionState Debate::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::vector<SessionEvent> Debate::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<SessionEvent> Debate::events_from(std::size_t from) const {
  std::lock_guard lock(mu_);
  if (from >= events_.size()) return {};
  return std::vector<SessionEvent>(events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end());
}

std::size_t Debate::event_count() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

bool Debate::awaiting_approval() const {
  std::lock_guard lock(mu_);
  if (state_.phase != Phase::TopicFormation || state_.topics.empty() || state_.topics_approved) return false;
  auto is_approval = [](const SteeringEvent& e) { return e.kind == SteeringKind::ApproveTopics; };
  return std::none_of(state_.pending_steering.begin(), state_.pending_steering.end(), is_approval) &&
         std::none_of(inbox_.begin(), inbox_.end(), is_approval);
}

std::vector<SteeringEvent> Debate::queued_steering() const {
  std::lock_guard lock(mu_);
  std::vector<SteeringEvent> out = state_.pending_steering;
  out.insert(out.end(), inbox_.begin(), inbox_.end());
  return out;
}

std::vector<std::pair<int, CritReport>> Debate::gate_reports() const {
  std::lock_guard lock(mu_);
  return reports_;
}

void Debate::set_sink(EventSink sink) {
  std::lock_guard step_lock(step_mu_);
  sink_ = std::move(sink);
}

void Debate::enqueue(SteeringEvent event) {
  std::lock_guard lock(mu_);
  if (state_.phase == Phase::Concluded) {
    throw Error(ErrorCode::PhaseViolation, "session is concluded", std::string(to_string(event.kind)));
  }
  if (event.kind == SteeringKind::SetDelta && !(event.value >= 0.0 && event.value <= 1.0)) {
    throw Error(ErrorCode::InvalidDelta, "contentiousness must lie in [0, 1]", "value");
  }
  if (event.kind == SteeringKind::ApproveTopics && state_.topics_approved) {
    throw Error(ErrorCode::PhaseViolation, "topics are already approved", "ApproveTopics");
  }
  inbox_.push_back(std::move(event));
}

Backend& Debate::backend_for(AgentRole role) const {
  return role == AgentRole::Proponent ? *proponent_ : *opponent_;
}

template <class F>
void Debate::transact(F&& body) {
  std::lock_guard step_lock(step_mu_);
  Working w;
  w.clock = &clock_;
  {
    std::lock_guard lock(mu_);
    for (auto& e : inbox_) state_.pending_steering.push_back(std::move(e));
    inbox_.clear();
    w.state = state_;
    w.base = static_cast<std::int64_t>(events_.size());
  }
  ++w.state.step;

  std::vector<SessionEvent> published;
  try {
    body(w);
  } catch (const std::exception& ex) {
    Working failure;
    failure.clock = &clock_;
    failure.base = w.base;
    failure.state.step = w.state.step;
    const auto* err = dynamic_cast<const Error*>(&ex);
    failure.emit(EventKind::Error, json{{"code", err ? std::string(to_string(err->code())) : "Internal"},
                                        {"message", err ? err->message() : std::string(ex.what())},
                                        {"detail", err ? err->detail() : std::string{}}});
    {
      std::lock_guard lock(mu_);
      events_.push_back(failure.events.front());
    }
    if (sink_) sink_(failure.events.front());
    throw;
  }

  {
    std::lock_guard lock(mu_);
    state_ = std::move(w.state);
    events_.insert(events_.end(), w.events.begin(), w.events.end());
    for (auto& r : w.reports) reports_.push_back(std::move(r));
  }
  if (sink_) {
    for (const auto& e : w.events) sink_(e);
  }
}

std::vector<ChatTurn> Debate::history_for(const SessionState& s, AgentRole role, double delta) const {
  char strength[32];
  std::snprintf(strength, sizeof(strength), "%.4g", delta);
  std::vector<ChatTurn> turns;
  turns.push_back({Speaker::System, render("M1", {{"self", std::string(agent_letter(role))},
                                                   {"other", std::string(agent_letter(other(role)))},
                                                   {"stance", stance_of(role)},
                                                   {"strength", std::string(strength)}})
                                        .text});
  if (!s.topics.empty()) {
    turns.push_back({Speaker::Orchestrator,
                     "Debate subject: " + s.config.subject + "\nAgreed topics:\n" + topics_text(s.topics)});
  }
  for (const auto& u : transcript_order(s)) {
    if (u.role == role) {
      turns.push_back({Speaker::Model, u.display_text()});
    } else {
      turns.push_back({Speaker::Orchestrator, utterance_label(u) + ":\n" + u.display_text()});
    }
  }
  return turns;
}

SlotMap Debate::debate_slots(const SessionState& s, AgentRole role) const {
  TextList ids;
  for (const auto& t : s.topics) ids.push_back(t.id);
  SlotMap slots{{"self", std::string(agent_letter(role))},
                {"other", std::string(agent_letter(other(role)))},
                {"stance", stance_of(role)},
                {"subject", s.config.subject},
                {"topics", topics_text(s.topics)},
                {"topic_ids", ids}};
  const auto& theirs = role == AgentRole::Proponent ? s.theta_con : s.theta_pro;
  if (!theirs.empty()) {
    auto ordered = transcript_order(s);
    for (auto it = ordered.rbegin(); it != ordered.rend(); ++it) {
      if (it->role != role) {
        slots.set("opponent_latest", it->display_text());
        break;
      }
    }
  }
  return slots;
}

Utterance Debate::speak(const SessionState& s, AgentRole role, Phase phase, int round, double delta,
                        std::string_view template_id) const {
  auto prompt = render(template_id, debate_slots(s, role), delta);
  auto history = history_for(s, role, delta);
  auto completion = backend_for(role).complete(history, prompt);

  Utterance u;
  u.role = role;
  u.phase = phase;
  u.round = round;
  u.delta_at_time = delta;
  u.raw_text = completion.text;
  try {
    auto slots = parse_structured_output(completion.text, prompt.expected_out);
    std::set<std::string> seen;
    for (const auto& [topic_id, text] : slots.pairs("sections")) {
      if (seen.insert(topic_id).second) u.sections.push_back({topic_id, text});
    }
  } catch (const Error&) {
    // Unstructured replies are kept whole in raw_text.
  }
  return u;
}

namespace {

std::vector<Topic> to_topics(const PairList& pairs, const std::string& prefix, TopicOrigin origin) {
  std::vector<Topic> out;
  for (const auto& [title, description] : pairs) {
    auto t = canonical_whitespace(title);
    if (t.empty()) continue;
    out.push_back({prefix + std::to_string(out.size() + 1), t, description, origin});
  }
  return out;
}

PairList ask_topics(Backend& backend, std::span<const ChatTurn> history, const RenderedPrompt& prompt) {
  try {
    return complete_structured(backend, history, prompt).pairs("topics");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ExtractionFailed) throw;
    throw Error(ErrorCode::TopicParseFailure, e.message(), e.detail());
  }
}

}  // namespace

void Debate::do_formulate(Working& w) {
  auto& s = w.state;
  if (s.phase != Phase::TopicFormation) throw Error(ErrorCode::PhaseViolation, "topics are formed only once");

  std::vector<Topic> proposals;
  std::vector<std::string> listed;
  for (auto role : {AgentRole::Proponent, AgentRole::Opponent}) {
    auto prompt = render("M3", {{"self", std::string(agent_letter(role))},
                                {"other", std::string(agent_letter(other(role)))},
                                {"subject", s.config.subject},
                                {"count", std::to_string(s.config.proposals_per_agent)}});
    auto history = history_for(s, role, s.config.delta0);
    auto mine = to_topics(ask_topics(backend_for(role), history, prompt), std::string(agent_letter(role)),
                          role == AgentRole::Proponent ? TopicOrigin::Proponent : TopicOrigin::Opponent);
    if (mine.empty()) throw Error(ErrorCode::TopicParseFailure, "agent proposed no topics", "M3");
    listed.push_back(topics_text(mine));
    proposals.insert(proposals.end(), mine.begin(), mine.end());
  }

  auto merge = render("topics.merge", {{"subject", s.config.subject},
                                       {"proposals_a", listed[0]},
                                       {"proposals_b", listed[1]},
                                       {"count", std::to_string(s.config.topic_count)}});
  std::vector<Topic> merged;
  for (int attempt = 0; attempt < 2; ++attempt) {
    merged = to_topics(ask_topics(*proponent_, {}, merge), "T", TopicOrigin::Merged);
    if (static_cast<int>(merged.size()) >= s.config.topic_count) break;
  }
  if (static_cast<int>(merged.size()) < s.config.topic_count) {
    throw Error(ErrorCode::TooFewTopics,
                "merge produced " + std::to_string(merged.size()) + " of " + std::to_string(s.config.topic_count) +
                    " topics",
                "topics.merge");
  }
  merged.resize(static_cast<std::size_t>(s.config.topic_count));

  s.proposals = proposals;
  s.topics = merged;
  w.emit(EventKind::TopicsProposed, json{{"proposals", proposals}, {"topics", merged}});
  if (headless_) {
    SteeringEvent approve;
    approve.kind = SteeringKind::ApproveTopics;
    approve.actor = "auto";
    s.pending_steering.push_back(std::move(approve));
  }
}

void Debate::do_approve(Working& w) {
  auto& s = w.state;
  auto it = std::find_if(s.pending_steering.begin(), s.pending_steering.end(),
                         [](const SteeringEvent& e) { return e.kind == SteeringKind::ApproveTopics; });
  if (it == s.pending_steering.end()) {
    throw Error(ErrorCode::AwaitingTopicApproval, "topics await moderator approval", "topics");
  }
  SteeringEvent ev = std::move(*it);
  s.pending_steering.erase(it);

  if (!ev.topics.empty()) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < ev.topics.size(); ++i) {
      auto& t = ev.topics[i];
      if (t.id.empty()) t.id = "T" + std::to_string(i + 1);
      if (canonical_whitespace(t.title).empty()) {
        throw Error(ErrorCode::InvariantViolation, "approved topic " + t.id + " has an empty title", "topics");
      }
      if (!ids.insert(t.id).second) {
        throw Error(ErrorCode::InvariantViolation, "duplicate topic id " + t.id, "topics");
      }
    }
    s.topics = ev.topics;
  }
  if (s.topics.empty()) throw Error(ErrorCode::InvariantViolation, "no topics to approve", "topics");
  s.topics_approved = true;
  ev.at_round = s.round_index;
  ev.step = s.step;
  s.moderator_log.push_back(ev);
  w.emit(EventKind::SteeringApplied, json{{"event", ev}});
}

void Debate::do_opening(Working& w) {
  auto& s = w.state;
  if (s.phase != Phase::TopicFormation || !s.topics_approved) {
    throw Error(ErrorCode::PhaseViolation, "opening requires approved topics", std::string(to_string(s.phase)));
  }
  s.phase = Phase::Opening;
  w.emit(EventKind::PhaseChanged, json{{"from", "TopicFormation"}, {"to", "Opening"}});

  const double delta = s.config.delta0;
  const SessionState snapshot = s;
  auto run = [&](AgentRole role) { return speak(snapshot, role, Phase::Opening, 0, delta, "debate.opening"); };

  Utterance pro, con;
  if (concurrent_opening_) {
    auto f_pro = std::async(std::launch::async, run, AgentRole::Proponent);
    auto f_con = std::async(std::launch::async, run, AgentRole::Opponent);
    std::exception_ptr failure;
    try {
      pro = f_pro.get();
    } catch (...) {
      failure = std::current_exception();
    }
    try {
      con = f_con.get();
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    pro = run(AgentRole::Proponent);
    con = run(AgentRole::Opponent);
  }
  pro.timestamp = clock_();
  con.timestamp = clock_();

  s.theta_pro.push_back(pro);
  w.emit(EventKind::UtteranceAdded, json{{"utterance", pro}});
  s.theta_con.push_back(con);
  w.emit(EventKind::UtteranceAdded, json{{"utterance", con}});
  s.phase = Phase::Refutation;
  w.emit(EventKind::PhaseChanged, json{{"from", "Opening"}, {"to", "Refutation"}});
}

void Debate::consume_steering(Working& w) {
  auto& s = w.state;
  std::vector<SteeringEvent> keep;
  for (auto& ev : s.pending_steering) {
    if (ev.kind == SteeringKind::ApproveTopics && !s.topics_approved) {
      keep.push_back(std::move(ev));
      continue;
    }
    ev.at_round = s.round_index;
    ev.step = s.step;
    s.moderator_log.push_back(ev);
    w.emit(EventKind::SteeringApplied, json{{"event", ev}});
    switch (ev.kind) {
      case SteeringKind::SetDelta: {
        double previous = s.delta_current;
        s.delta_current = ev.value;
        w.emit(EventKind::DeltaChanged, json{{"delta", ev.value}, {"previous", previous}, {"cause", "override"}});
        break;
      }
      case SteeringKind::RequestExtraRound:
        s.extra_round_pending = true;
        break;
      case SteeringKind::ConcludeNow:
        s.conclude_pending = true;
        break;
      case SteeringKind::ApproveTopics:
        break;  // already approved; recorded only
    }
  }
  s.pending_steering = std::move(keep);
}

bool Debate::guard(Working& w) {
  auto& s = w.state;
  double previous = s.delta_current;
  s.delta_current = previous / s.config.decay;
  w.emit(EventKind::DeltaChanged, json{{"delta", s.delta_current}, {"previous", previous}, {"cause", "decay"}});

  bool plateau_ok = s.gamma_history.current() >= s.gamma_history.previous() - s.config.gamma_tolerance;
  bool extra = s.extra_round_pending;
  s.extra_round_pending = false;
  bool conclude = s.conclude_pending;
  s.conclude_pending = false;
  return s.delta_current > s.config.floor && (plateau_ok || extra) && s.round_index < s.config.max_rounds && !conclude;
}

void Debate::do_round(Working& w) {
  auto& s = w.state;
  if (s.phase != Phase::Refutation) {
    throw Error(ErrorCode::PhaseViolation, "refutation rounds run only in the Refutation phase",
                std::string(to_string(s.phase)));
  }
  const int round = s.round_index + 1;
  const double delta = s.delta_current;

  auto pro = speak(s, AgentRole::Proponent, Phase::Refutation, round, delta, "debate.refute");
  pro.timestamp = clock_();
  s.theta_pro.push_back(pro);
  w.emit(EventKind::UtteranceAdded, json{{"utterance", pro}});

  auto con = speak(s, AgentRole::Opponent, Phase::Refutation, round, delta, "debate.refute");
  con.timestamp = clock_();
  s.theta_con.push_back(con);
  w.emit(EventKind::UtteranceAdded, json{{"utterance", con}});

  s.round_index = round;
  auto result = gate_->evaluate(s);
  s.gamma_history.append(round, result.gamma);
  if (result.opponent_gamma) s.opponent_gamma.push_back({round, *result.opponent_gamma});
  if (result.report) w.reports.emplace_back(round, std::move(*result.report));
  w.emit(EventKind::GammaUpdated,
         json{{"round", round},
              {"gamma", result.gamma},
              {"opponent_gamma", result.opponent_gamma ? json(*result.opponent_gamma) : json(nullptr)}});
}

void Debate::do_closing(Working& w) {
  auto& s = w.state;
  if (s.phase != Phase::Refutation) {
    throw Error(ErrorCode::PhaseViolation, "closing follows the refutation phase", std::string(to_string(s.phase)));
  }
  s.phase = Phase::Closing;
  w.emit(EventKind::PhaseChanged, json{{"from", "Refutation"}, {"to", "Closing"}});

  // Both closings are conditioned on the same transcript; neither sees the other's closing.
  const SessionState before = s;
  bool gap = false;
  for (auto role : {AgentRole::Proponent, AgentRole::Opponent}) {
    std::optional<Utterance> u;
    std::string last_error;
    for (int attempt = 0; attempt < 2 && !u; ++attempt) {
      try {
        u = speak(before, role, Phase::Closing, s.round_index, s.delta_current, "debate.closing");
      } catch (const Error& e) {
        last_error = e.what();
        w.emit(EventKind::Error, json{{"code", std::string(to_string(e.code()))},
                                      {"message", e.message()},
                                      {"detail", e.detail()},
                                      {"role", std::string(to_string(role))},
                                      {"attempt", attempt + 1}});
      }
    }
    if (!u) {
      gap = true;
      continue;
    }
    u->timestamp = clock_();
    (role == AgentRole::Proponent ? s.theta_pro : s.theta_con).push_back(*u);
    w.emit(EventKind::UtteranceAdded, json{{"utterance", *u}});
  }
  s.phase = Phase::Concluded;
  s.concluded_with_gap = gap;
  w.emit(EventKind::PhaseChanged, json{{"from", "Closing"}, {"to", "Concluded"}, {"with_gap", gap}});
}

void Debate::step() {
  Phase phase = state().phase;
  bool needs_approval = awaiting_approval();
  if (phase == Phase::Concluded) throw Error(ErrorCode::PhaseViolation, "session is concluded", "Concluded");
  if (needs_approval) throw Error(ErrorCode::AwaitingTopicApproval, "topics await moderator approval", "topics");

  transact([&](Working& w) {
    auto& s = w.state;
    switch (s.phase) {
      case Phase::TopicFormation:
        if (s.topics.empty()) {
          do_formulate(w);
        } else {
          if (!s.topics_approved) do_approve(w);
          do_opening(w);
        }
        break;
      case Phase::Opening:
        throw Error(ErrorCode::InvariantViolation, "committed state cannot rest in Opening");
      case Phase::Refutation:
        consume_steering(w);
        if (guard(w)) {
          do_round(w);
        } else {
          do_closing(w);
        }
        break;
      case Phase::Closing:
        do_closing(w);
        break;
      case Phase::Concluded:
        throw Error(ErrorCode::PhaseViolation, "session is concluded");
    }
  });
}

void Debate::run() {
  while (state().phase != Phase::Concluded) step();
}

void Debate::formulate_topics() {
  transact([&](Working& w) {
    if (!w.state.topics.empty()) throw Error(ErrorCode::PhaseViolation, "topics already formulated");
    do_formulate(w);
  });
}

void Debate::opening_round() {
  transact([&](Working& w) {
    if (w.state.phase == Phase::TopicFormation && !w.state.topics.empty() && !w.state.topics_approved) do_approve(w);
    do_opening(w);
  });
}

void Debate::refutation_round() {
  transact([&](Working& w) { do_round(w); });
}

void Debate::closing_round() {
  transact([&](Working& w) { do_closing(w); });
}

std::unique_ptr<GammaGate> make_gate(const SessionSpec& spec, const BackendFactory& factory,
                                     const BackendPtr& proponent) {
  if (spec.gate.kind == GateKind::Sequence) {
    return std::make_unique<SequenceGate>(spec.gate.sequence, spec.gate.repeat_last);
  }
  BackendPtr backend = spec.gate.backend ? factory(*spec.gate.backend) : proponent;
  return std::make_unique<CritGate>(std::move(backend), spec.gate.max_depth, spec.gate.opponent_side);
}

std::unique_ptr<Debate> make_debate(const SessionSpec& spec, BackendFactory factory) {
  validate_config(spec.config);
  if (!factory) factory = make_backend;
  BackendPtr pro = factory(spec.proponent);
  BackendPtr con = spec.opponent.id == spec.proponent.id ? pro : factory(spec.opponent);
  auto gate = make_gate(spec, factory, pro);
  return std::make_unique<Debate>(initial_state(spec), pro, con, std::move(gate), make_clock(spec.clock),
                                  spec.headless, spec.concurrent_opening);
}

}  // namespace socrasynth
