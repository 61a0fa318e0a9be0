#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "socrasynth/backend.hpp"
#include "socrasynth/core.hpp"
#include "socrasynth/crit.hpp"
#include "socrasynth/util.hpp"

namespace socrasynth {

enum class SteeringKind { SetDelta, RequestExtraRound, ConcludeNow, ApproveTopics };

std::string_view to_string(SteeringKind kind);
SteeringKind parse_steering_kind(std::string_view text);

struct SteeringEvent {
  SteeringKind kind = SteeringKind::ConcludeNow;
  double value = 0.0;          // SetDelta
  std::vector<Topic> topics;   // ApproveTopics: replacement list, empty = approve as proposed
  int at_round = 0;            // filled when consumed
  int step = 0;                // filled when consumed
  std::string actor = "moderator";

  friend bool operator==(const SteeringEvent&, const SteeringEvent&) = default;
};

struct BackendInfo {
  std::string id;
  BackendKind kind = BackendKind::Scripted;
  std::string model_name;
  double temperature = 0.0;

  friend bool operator==(const BackendInfo&, const BackendInfo&) = default;
};

struct SessionState {
  std::string id;
  DebateConfig config;
  std::vector<BackendInfo> backends;
  std::string proponent_backend;
  std::string opponent_backend;
  std::vector<Topic> proposals;  // per-agent proposals before merging
  std::vector<Topic> topics;
  bool topics_approved = false;
  double delta_current = 0.9;
  int round_index = 0;
  std::vector<Utterance> theta_pro;
  std::vector<Utterance> theta_con;
  GammaHistory gamma_history;
  std::vector<GammaEntry> opponent_gamma;  // reporting only
  Phase phase = Phase::TopicFormation;
  bool concluded_with_gap = false;
  std::vector<SteeringEvent> moderator_log;
  int step = 0;  // committed steps
  // Queued moderator actions and one-shot flags; not part of the event-sourced projection.
  std::vector<SteeringEvent> pending_steering;
  bool extra_round_pending = false;
  bool conclude_pending = false;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// Both sides' utterances in protocol order (phase, round, proponent first).
std::vector<Utterance> transcript_order(const SessionState& state);

// The state without pending steering, for comparing against a folded event stream.
SessionState projection(SessionState state);

enum class EventKind { PhaseChanged, UtteranceAdded, GammaUpdated, DeltaChanged, SteeringApplied, TopicsProposed, Error };

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

struct SessionEvent {
  std::int64_t sequence = 0;
  int step = 0;
  EventKind kind = EventKind::PhaseChanged;
  nlohmann::json payload;
  std::int64_t at = 0;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

// Rebuilds the projected state from the initial state and an event stream.
SessionState fold_events(SessionState initial, const std::vector<SessionEvent>& events);

// ---------------------------------------------------------------------------
// Gamma gates
// ---------------------------------------------------------------------------

struct GateResult {
  double gamma = 0.0;
  std::optional<double> opponent_gamma;
  std::optional<CritReport> report;
};

class GammaGate {
 public:
  virtual ~GammaGate() = default;
  // Called after both utterances of round state.round_index were appended.
  virtual GateResult evaluate(const SessionState& state) = 0;
};

// Proponent-side composite (topics + both argument sets) scored by CRIT in Dialogue mode.
class CritGate : public GammaGate {
 public:
  CritGate(BackendPtr backend, int max_depth = 0, bool opponent_side = false);
  GateResult evaluate(const SessionState& state) override;

 private:
  BackendPtr backend_;
  int max_depth_;
  bool opponent_side_;
};

// Scripted oracle: returns the configured values in order.
class SequenceGate : public GammaGate {
 public:
  SequenceGate(std::vector<double> values, bool repeat_last);
  GateResult evaluate(const SessionState& state) override;

 private:
  std::vector<double> values_;
  bool repeat_last_;
  std::size_t next_ = 0;
};

// The composite document the gate evaluates for one side.
CritDocument composite_document(const SessionState& state, AgentRole side);

enum class GateKind { Crit, Sequence };

struct GateSpec {
  GateKind kind = GateKind::Crit;
  std::optional<BackendProfile> backend;  // Crit: defaults to the proponent profile
  std::vector<double> sequence;
  bool repeat_last = true;
  bool opponent_side = false;
  int max_depth = 0;

  friend bool operator==(const GateSpec&, const GateSpec&) = default;
};

// Everything needed to (re)create a session; persisted as session.meta.
struct SessionSpec {
  std::string id;
  DebateConfig config;
  BackendProfile proponent;
  BackendProfile opponent;
  GateSpec gate;
  bool headless = true;
  ClockMode clock = ClockMode::Logical;
  bool concurrent_opening = true;

  friend bool operator==(const SessionSpec&, const SessionSpec&) = default;
};

SessionState initial_state(const SessionSpec& spec);

using BackendFactory = std::function<BackendPtr(const BackendProfile&)>;
using EventSink = std::function<void(const SessionEvent&)>;

class Debate {
 public:
  Debate(SessionState initial, BackendPtr proponent, BackendPtr opponent, std::unique_ptr<GammaGate> gate,
         Clock clock, bool headless, bool concurrent_opening = true);

  SessionState state() const;
  std::vector<SessionEvent> events() const;
  std::vector<SessionEvent> events_from(std::size_t from) const;
  std::size_t event_count() const;
  // Topics are proposed and no approval is queued.
  bool awaiting_approval() const;
  // Moderator actions not yet consumed by a step, in arrival order.
  std::vector<SteeringEvent> queued_steering() const;
  // (round, report) for every CRIT-gated round.
  std::vector<std::pair<int, CritReport>> gate_reports() const;
  bool headless() const noexcept { return headless_; }

  // Called after every committed event, in sequence order.
  void set_sink(EventSink sink);

  // Queues a moderator action for the next guard point. Throws PhaseViolation after
  // Concluded and InvalidDelta for SetDelta outside [0, 1].
  void enqueue(SteeringEvent event);

  // Runs the next protocol step atomically: topic formulation, opening, one refutation
  // round, or closing. On failure the state is unchanged, an Error event is emitted and
  // the error is rethrown.
  void step();
  // Steps until Concluded.
  void run();

  // Individual phase operations (each atomic, each checks its phase).
  void formulate_topics();
  void opening_round();
  void refutation_round();
  void closing_round();

 private:
  struct Working;

  template <class F>
  void transact(F&& body);

  void do_formulate(Working& w);
  void do_approve(Working& w);
  void do_opening(Working& w);
  void do_round(Working& w);
  void do_closing(Working& w);
  void consume_steering(Working& w);
  bool guard(Working& w);

  std::vector<ChatTurn> history_for(const SessionState& s, AgentRole role, double delta) const;
  SlotMap debate_slots(const SessionState& s, AgentRole role) const;
  Utterance speak(const SessionState& s, AgentRole role, Phase phase, int round, double delta,
                  std::string_view template_id) const;
  Backend& backend_for(AgentRole role) const;

  mutable std::mutex mu_;       // guards state_, events_, inbox_, reports_
  std::mutex step_mu_;          // one step at a time
  SessionState state_;
  std::vector<SessionEvent> events_;
  std::vector<SteeringEvent> inbox_;
  std::vector<std::pair<int, CritReport>> reports_;
  BackendPtr proponent_;
  BackendPtr opponent_;
  std::unique_ptr<GammaGate> gate_;
  Clock clock_;
  bool headless_;
  bool concurrent_opening_;
  EventSink sink_;
};

std::unique_ptr<GammaGate> make_gate(const SessionSpec& spec, const BackendFactory& factory,
                                     const BackendPtr& proponent);

// Builds backends through the factory (make_backend by default); identical profile ids
// share one backend instance, in which case the opening runs sequentially.
std::unique_ptr<Debate> make_debate(const SessionSpec& spec, BackendFactory factory = {});

}  // namespace socrasynth
