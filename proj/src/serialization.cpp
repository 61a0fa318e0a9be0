#include "socrasynth/serialization.hpp"

namespace socrasynth {

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string str(const json& j, const char* key) { return j.at(key).get<std::string>(); }

}  // namespace

// --- core -------------------------------------------------------------------

void to_json(json& j, const DebateConfig& v) {
  j = json{{"subject", v.subject},
           {"delta0", v.delta0},
           {"decay", v.decay},
           {"floor", v.floor},
           {"max_rounds", v.max_rounds},
           {"topic_count", v.topic_count},
           {"proposals_per_agent", v.proposals_per_agent},
           {"gamma_tolerance", v.gamma_tolerance}};
}

void from_json(const json& j, DebateConfig& v) {
  // Omitted keys keep their defaults so configs can be written sparsely.
  DebateConfig d;
  v.subject = j.value("subject", d.subject);
  v.delta0 = j.value("delta0", d.delta0);
  v.decay = j.value("decay", d.decay);
  v.floor = j.value("floor", d.floor);
  v.max_rounds = j.value("max_rounds", d.max_rounds);
  v.topic_count = j.value("topic_count", d.topic_count);
  v.proposals_per_agent = j.value("proposals_per_agent", d.proposals_per_agent);
  v.gamma_tolerance = j.value("gamma_tolerance", d.gamma_tolerance);
}

void to_json(json& j, const Topic& v) {
  j = json{{"id", v.id}, {"title", v.title}, {"description", v.description}, {"proposed_by", to_string(v.proposed_by)}};
}

void from_json(const json& j, Topic& v) {
  v.id = str(j, "id");
  v.title = str(j, "title");
  v.description = j.value("description", std::string{});
  v.proposed_by = parse_topic_origin(j.value("proposed_by", std::string("Merged")));
}

void to_json(json& j, const UtteranceSection& v) { j = json{{"topic_id", v.topic_id}, {"text", v.text}}; }

void from_json(const json& j, UtteranceSection& v) {
  v.topic_id = str(j, "topic_id");
  v.text = str(j, "text");
}

void to_json(json& j, const Utterance& v) {
  j = json{{"role", to_string(v.role)},
           {"phase", to_string(v.phase)},
           {"round", v.round},
           {"delta_at_time", v.delta_at_time},
           {"sections", v.sections},
           {"raw_text", v.raw_text},
           {"timestamp", v.timestamp}};
}

void from_json(const json& j, Utterance& v) {
  v.role = parse_agent_role(str(j, "role"));
  v.phase = parse_phase(str(j, "phase"));
  j.at("round").get_to(v.round);
  j.at("delta_at_time").get_to(v.delta_at_time);
  j.at("sections").get_to(v.sections);
  j.at("raw_text").get_to(v.raw_text);
  j.at("timestamp").get_to(v.timestamp);
}

void to_json(json& j, const GammaEntry& v) { j = json{{"round", v.round}, {"gamma", v.gamma}}; }

void from_json(const json& j, GammaEntry& v) {
  j.at("round").get_to(v.round);
  j.at("gamma").get_to(v.gamma);
}

void to_json(json& j, const GammaHistory& v) { j = v.entries(); }

void from_json(const json& j, GammaHistory& v) {
  GammaHistory h;
  for (const auto& e : j) {
    auto entry = e.get<GammaEntry>();
    h.append(entry.round, entry.gamma);
  }
  v = std::move(h);
}

// --- backend ----------------------------------------------------------------

void to_json(json& j, const BackendProfile& v) {
  j = json{{"id", v.id},
           {"kind", to_string(v.kind)},
           {"endpoint", v.endpoint},
           {"model_name", v.model_name},
           {"temperature", v.temperature},
           {"timeout_ms", v.timeout_ms},
           {"max_retries", v.max_retries},
           {"backoff_ms", v.backoff_ms},
           {"api_key_env", v.api_key_env},
           {"max_in_flight", v.max_in_flight},
           {"script", v.script},
           {"strict", v.strict},
           {"seed", v.seed}};
}

void from_json(const json& j, BackendProfile& v) {
  BackendProfile d;
  v.id = str(j, "id");
  v.kind = parse_backend_kind(j.value("kind", std::string(to_string(d.kind))));
  v.endpoint = j.value("endpoint", d.endpoint);
  v.model_name = j.value("model_name", d.model_name);
  v.temperature = j.value("temperature", d.temperature);
  v.timeout_ms = j.value("timeout_ms", d.timeout_ms);
  v.max_retries = j.value("max_retries", d.max_retries);
  v.backoff_ms = j.value("backoff_ms", d.backoff_ms);
  v.api_key_env = j.value("api_key_env", d.api_key_env);
  v.max_in_flight = j.value("max_in_flight", d.max_in_flight);
  v.script = j.value("script", d.script);
  v.strict = j.value("strict", d.strict);
  v.seed = j.value("seed", d.seed);
}

// --- crit -------------------------------------------------------------------

void to_json(json& j, const CritDocument& v) {
  j = json{{"id", v.id},
           {"text", v.text},
           {"origin",
            {{"kind", to_string(v.origin.kind)},
             {"role", v.origin.role ? json(to_string(*v.origin.role)) : json(nullptr)},
             {"parent_reason", v.origin.parent_reason}}}};
}

void from_json(const json& j, CritDocument& v) {
  v.id = str(j, "id");
  v.text = str(j, "text");
  const auto& o = j.at("origin");
  v.origin.kind = parse_doc_origin_kind(str(o, "kind"));
  auto role = optional_from<std::string>(o, "role");
  v.origin.role = role ? std::optional(parse_agent_role(*role)) : std::nullopt;
  v.origin.parent_reason = o.value("parent_reason", std::string{});
}

void to_json(json& j, const ReasonAssessment& v) {
  j = json{{"reason", v.reason},
           {"evidence", v.evidence},
           {"evidence_type", to_string(v.evidence_type)},
           {"gamma", v.gamma},
           {"theta", v.theta},
           {"is_rival", v.is_rival},
           {"source_round", optional_json(v.source_round)},
           {"sub_report", v.sub_report ? json(*v.sub_report) : json(nullptr)},
           {"justification", v.justification},
           {"truncated_by_depth", v.truncated_by_depth},
           {"cycle_detected", v.cycle_detected},
           {"unresolved", v.unresolved}};
}

void from_json(const json& j, ReasonAssessment& v) {
  v.reason = str(j, "reason");
  v.evidence = str(j, "evidence");
  v.evidence_type = parse_evidence_type(str(j, "evidence_type"));
  j.at("gamma").get_to(v.gamma);
  j.at("theta").get_to(v.theta);
  j.at("is_rival").get_to(v.is_rival);
  v.source_round = optional_from<int>(j, "source_round");
  if (auto it = j.find("sub_report"); it != j.end() && !it->is_null()) {
    v.sub_report = Box<CritReport>(it->get<CritReport>());
  } else {
    v.sub_report = Box<CritReport>();
  }
  v.justification = j.value("justification", std::string{});
  v.truncated_by_depth = j.value("truncated_by_depth", false);
  v.cycle_detected = j.value("cycle_detected", false);
  v.unresolved = j.value("unresolved", false);
}

void to_json(json& j, const CritReport& v) {
  j = json{{"document_id", v.document_id},
           {"claim", v.claim},
           {"assessments", v.assessments},
           {"gamma_total_raw", v.gamma_total_raw},
           {"gamma_total", v.gamma_total},
           {"gamma_paper_scale", v.gamma_paper_scale},
           {"depth", v.depth},
           {"truncated_by_depth", v.truncated_by_depth},
           {"cycle_detected", v.cycle_detected},
           {"reasons_truncated", v.reasons_truncated},
           {"rivals_truncated", v.rivals_truncated}};
}

void from_json(const json& j, CritReport& v) {
  v.document_id = str(j, "document_id");
  v.claim = str(j, "claim");
  j.at("assessments").get_to(v.assessments);
  j.at("gamma_total_raw").get_to(v.gamma_total_raw);
  j.at("gamma_total").get_to(v.gamma_total);
  j.at("gamma_paper_scale").get_to(v.gamma_paper_scale);
  j.at("depth").get_to(v.depth);
  j.at("truncated_by_depth").get_to(v.truncated_by_depth);
  j.at("cycle_detected").get_to(v.cycle_detected);
  v.reasons_truncated = j.value("reasons_truncated", false);
  v.rivals_truncated = j.value("rivals_truncated", false);
}

// --- engine -----------------------------------------------------------------

void to_json(json& j, const SteeringEvent& v) {
  j = json{{"kind", to_string(v.kind)}, {"value", v.value}, {"topics", v.topics},
           {"at_round", v.at_round}, {"step", v.step}, {"actor", v.actor}};
}

void from_json(const json& j, SteeringEvent& v) {
  v.kind = parse_steering_kind(str(j, "kind"));
  v.value = j.value("value", 0.0);
  v.topics = j.value("topics", std::vector<Topic>{});
  v.at_round = j.value("at_round", 0);
  v.step = j.value("step", 0);
  v.actor = j.value("actor", std::string("moderator"));
}

void to_json(json& j, const BackendInfo& v) {
  j = json{{"id", v.id}, {"kind", to_string(v.kind)}, {"model_name", v.model_name}, {"temperature", v.temperature}};
}

void from_json(const json& j, BackendInfo& v) {
  v.id = str(j, "id");
  v.kind = parse_backend_kind(str(j, "kind"));
  v.model_name = str(j, "model_name");
  j.at("temperature").get_to(v.temperature);
}

void to_json(json& j, const SessionState& v) {
  j = json{{"id", v.id},
           {"config", v.config},
           {"backends", v.backends},
           {"proponent_backend", v.proponent_backend},
           {"opponent_backend", v.opponent_backend},
           {"proposals", v.proposals},
           {"topics", v.topics},
           {"topics_approved", v.topics_approved},
           {"delta_current", v.delta_current},
           {"round_index", v.round_index},
           {"theta_pro", v.theta_pro},
           {"theta_con", v.theta_con},
           {"gamma_history", v.gamma_history},
           {"opponent_gamma", v.opponent_gamma},
           {"phase", to_string(v.phase)},
           {"concluded_with_gap", v.concluded_with_gap},
           {"moderator_log", v.moderator_log},
           {"step", v.step},
           {"pending_steering", v.pending_steering},
           {"extra_round_pending", v.extra_round_pending},
           {"conclude_pending", v.conclude_pending}};
}

void from_json(const json& j, SessionState& v) {
  v.id = str(j, "id");
  j.at("config").get_to(v.config);
  j.at("backends").get_to(v.backends);
  v.proponent_backend = str(j, "proponent_backend");
  v.opponent_backend = str(j, "opponent_backend");
  j.at("proposals").get_to(v.proposals);
  j.at("topics").get_to(v.topics);
  j.at("topics_approved").get_to(v.topics_approved);
  j.at("delta_current").get_to(v.delta_current);
  j.at("round_index").get_to(v.round_index);
  j.at("theta_pro").get_to(v.theta_pro);
  j.at("theta_con").get_to(v.theta_con);
  j.at("gamma_history").get_to(v.gamma_history);
  j.at("opponent_gamma").get_to(v.opponent_gamma);
  v.phase = parse_phase(str(j, "phase"));
  j.at("concluded_with_gap").get_to(v.concluded_with_gap);
  j.at("moderator_log").get_to(v.moderator_log);
  j.at("step").get_to(v.step);
  v.pending_steering = j.value("pending_steering", std::vector<SteeringEvent>{});
  v.extra_round_pending = j.value("extra_round_pending", false);
  v.conclude_pending = j.value("conclude_pending", false);
}

void to_json(json& j, const SessionEvent& v) {
  j = json{{"sequence", v.sequence}, {"step", v.step}, {"kind", to_string(v.kind)}, {"payload", v.payload}, {"at", v.at}};
}

void from_json(const json& j, SessionEvent& v) {
  j.at("sequence").get_to(v.sequence);
  j.at("step").get_to(v.step);
  v.kind = parse_event_kind(str(j, "kind"));
  v.payload = j.at("payload");
  j.at("at").get_to(v.at);
}

void to_json(json& j, const GateSpec& v) {
  j = json{{"kind", v.kind == GateKind::Sequence ? "Sequence" : "Crit"},
           {"backend", optional_json(v.backend)},
           {"sequence", v.sequence},
           {"repeat_last", v.repeat_last},
           {"opponent_side", v.opponent_side},
           {"max_depth", v.max_depth}};
}

void from_json(const json& j, GateSpec& v) {
  GateSpec d;
  auto kind = j.value("kind", std::string("Crit"));
  if (kind != "Crit" && kind != "Sequence") {
    throw Error(ErrorCode::InvalidConfig, "unknown gate kind '" + kind + "'", "gate.kind");
  }
  v.kind = kind == "Sequence" ? GateKind::Sequence : GateKind::Crit;
  v.backend = optional_from<BackendProfile>(j, "backend");
  v.sequence = j.value("sequence", d.sequence);
  v.repeat_last = j.value("repeat_last", d.repeat_last);
  v.opponent_side = j.value("opponent_side", d.opponent_side);
  v.max_depth = j.value("max_depth", d.max_depth);
}

void to_json(json& j, const SessionSpec& v) {
  j = json{{"id", v.id},
           {"config", v.config},
           {"proponent", v.proponent},
           {"opponent", v.opponent},
           {"gate", v.gate},
           {"headless", v.headless},
           {"clock", v.clock == ClockMode::Wall ? "wall" : "logical"},
           {"concurrent_opening", v.concurrent_opening}};
}

void from_json(const json& j, SessionSpec& v) {
  SessionSpec d;
  v.id = j.value("id", d.id);
  j.at("config").get_to(v.config);
  j.at("proponent").get_to(v.proponent);
  j.at("opponent").get_to(v.opponent);
  v.gate = j.contains("gate") ? j.at("gate").get<GateSpec>() : d.gate;
  v.headless = j.value("headless", d.headless);
  auto clock = j.value("clock", std::string("logical"));
  if (clock != "logical" && clock != "wall") {
    throw Error(ErrorCode::InvalidConfig, "clock must be 'logical' or 'wall'", "clock");
  }
  v.clock = clock == "wall" ? ClockMode::Wall : ClockMode::Logical;
  v.concurrent_opening = j.value("concurrent_opening", d.concurrent_opening);
}

// --- judges -----------------------------------------------------------------

void to_json(json& j, const JudgeProfile& v) { j = json{{"backend", v.backend}, {"display_name", v.display_name}}; }

void from_json(const json& j, JudgeProfile& v) {
  j.at("backend").get_to(v.backend);
  v.display_name = j.value("display_name", v.backend.id);
}

void to_json(json& j, const Orientation& v) {
  j = json{{"arguer", to_string(v.arguer)}, {"counterer", to_string(v.counterer)}};
}

void from_json(const json& j, Orientation& v) {
  v.arguer = parse_agent_role(str(j, "arguer"));
  v.counterer = parse_agent_role(str(j, "counterer"));
}

void to_json(json& j, const ScoreRow& v) {
  j = json{{"topic_id", v.topic_id},
           {"arguer_score", v.arguer_score},
           {"counterer_score", v.counterer_score},
           {"missing", v.missing},
           {"rationale", v.rationale}};
}

void from_json(const json& j, ScoreRow& v) {
  v.topic_id = str(j, "topic_id");
  j.at("arguer_score").get_to(v.arguer_score);
  j.at("counterer_score").get_to(v.counterer_score);
  j.at("missing").get_to(v.missing);
  v.rationale = j.value("rationale", std::string{});
}

void to_json(json& j, const ScoreTable& v) {
  j = json{{"judge", v.judge},
           {"orientation", v.orientation},
           {"rows", v.rows},
           {"arguer_total", v.arguer_total},
           {"counterer_total", v.counterer_total},
           {"complete", v.complete},
           {"prompt", v.prompt}};
}

void from_json(const json& j, ScoreTable& v) {
  v.judge = str(j, "judge");
  j.at("orientation").get_to(v.orientation);
  j.at("rows").get_to(v.rows);
  j.at("arguer_total").get_to(v.arguer_total);
  j.at("counterer_total").get_to(v.counterer_total);
  j.at("complete").get_to(v.complete);
  v.prompt = j.value("prompt", std::string{});
}

void to_json(json& j, const JudgeVote& v) {
  j = json{{"judge", v.judge},
           {"orientation", v.orientation},
           {"winner", to_string(v.winner)},
           {"arguer_total", v.arguer_total},
           {"counterer_total", v.counterer_total}};
}

void from_json(const json& j, JudgeVote& v) {
  v.judge = str(j, "judge");
  j.at("orientation").get_to(v.orientation);
  v.winner = parse_table_winner(str(j, "winner"));
  j.at("arguer_total").get_to(v.arguer_total);
  j.at("counterer_total").get_to(v.counterer_total);
}

void to_json(json& j, const Verdict& v) {
  j = json{{"per_judge", v.per_judge},
           {"overall", to_string(v.overall)},
           {"rationale", v.rationale},
           {"failed_judges", v.failed_judges}};
}

void from_json(const json& j, Verdict& v) {
  j.at("per_judge").get_to(v.per_judge);
  v.overall = parse_overall_winner(str(j, "overall"));
  v.rationale = j.value("rationale", std::string{});
  v.failed_judges = j.value("failed_judges", std::vector<std::string>{});
}

}  // namespace socrasynth
