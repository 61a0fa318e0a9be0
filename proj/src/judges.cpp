#include "socrasynth/judges.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "socrasynth/error.hpp"

namespace socrasynth {

std::string_view to_string(TableWinner w) {
  switch (w) {
    case TableWinner::Proponent: return "Proponent";
    case TableWinner::Opponent: return "Opponent";
    case TableWinner::Tie: return "Tie";
  }
  return "Tie";
}

std::string_view to_string(OverallWinner w) {
  switch (w) {
    case OverallWinner::Proponent: return "Proponent";
    case OverallWinner::Opponent: return "Opponent";
    case OverallWinner::Draw: return "Draw";
  }
  return "Draw";
}

TableWinner parse_table_winner(std::string_view text) {
  for (auto w : {TableWinner::Proponent, TableWinner::Opponent, TableWinner::Tie}) {
    if (to_string(w) == text) return w;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown table winner '" + std::string(text) + "'");
}

OverallWinner parse_overall_winner(std::string_view text) {
  for (auto w : {OverallWinner::Proponent, OverallWinner::Opponent, OverallWinner::Draw}) {
    if (to_string(w) == text) return w;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown verdict '" + std::string(text) + "'");
}

std::string_view to_string(JudgeMode m) { return m == JudgeMode::Crit ? "crit" : "direct"; }
std::string_view to_string(JudgeSource s) { return s == JudgeSource::FullTranscript ? "transcript" : "closing"; }

JudgeMode parse_judge_mode(std::string_view text) {
  if (text == "direct") return JudgeMode::Direct;
  if (text == "crit") return JudgeMode::Crit;
  throw Error(ErrorCode::InvalidConfig, "judge mode must be 'direct' or 'crit'", "mode");
}

JudgeSource parse_judge_source(std::string_view text) {
  if (text == "closing") return JudgeSource::Closing;
  if (text == "transcript") return JudgeSource::FullTranscript;
  throw Error(ErrorCode::InvalidConfig, "judge source must be 'closing' or 'transcript'", "source");
}

std::pair<double, double> recompute_totals(const ScoreTable& table) {
  double a = 0.0, c = 0.0;
  for (const auto& row : table.rows) {
    if (row.missing) continue;
    a += row.arguer_score;
    c += row.counterer_score;
  }
  return {a, c};
}

std::string side_text(const SessionState& transcript, AgentRole role, const Topic& topic, JudgeSource source) {
  const auto& said = role == AgentRole::Proponent ? transcript.theta_pro : transcript.theta_con;
  std::string out;
  for (const auto& u : said) {
    if (source == JudgeSource::Closing && u.phase != Phase::Closing) continue;
    const std::string* section = u.section(topic.id);
    const std::string& text = section ? *section : u.raw_text;
    if (text.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += text;
  }
  return out;
}

namespace {

ScoreRow score_direct(const SessionState& t, Orientation o, const Topic& topic, Backend& backend, JudgeSource source) {
  auto prompt = render("judge.topic",
                       {{"subject", t.config.subject},
                        {"topic", topic.title + (topic.description.empty() ? "" : ": " + topic.description)},
                        {"arguer", std::string(agent_letter(o.arguer))},
                        {"counterer", std::string(agent_letter(o.counterer))},
                        {"arguer_text", side_text(t, o.arguer, topic, source)},
                        {"counterer_text", side_text(t, o.counterer, topic, source)}});
  auto slots = complete_structured(backend, {}, prompt);
  return ScoreRow{topic.id, slots.score("arguer_score"), slots.score("counterer_score"), false,
                  slots.text("rationale")};
}

double crit_side(const SessionState& t, AgentRole side, const Topic& topic, Backend& backend, JudgeSource source) {
  CritDocument doc{"judge-" + topic.id + "-" + std::string(agent_letter(side)),
                   "Topic: " + topic.title + "\n\n" + side_text(t, side, topic, source),
                   DocOrigin{DocOriginKind::DebateSide, side, {}}};
  CritOptions options;
  options.mode = CritMode::Dialogue;
  options.max_depth = 0;
  options.opponent_utterances.push_back({0, side_text(t, other(side), topic, source)});
  return std::clamp(evaluate(doc, backend, NullResolver{}, options).gamma_total, 1.0, 10.0);
}

}  // namespace

ScoreTable score_orientation(const SessionState& transcript, Orientation orientation, const JudgeProfile& judge,
                             Backend& backend, const JudgeOptions& options) {
  if (orientation.arguer == orientation.counterer) {
    throw Error(ErrorCode::InvalidConfig, "arguer and counterer must differ", "orientation");
  }
  if (transcript.topics.empty()) throw Error(ErrorCode::InvariantViolation, "transcript has no topics", "topics");

  ScoreTable table;
  table.judge = judge.display_name.empty() ? judge.backend.id : judge.display_name;
  table.orientation = orientation;
  table.prompt = options.mode == JudgeMode::Crit ? "crit" : "judge.topic";

  for (const auto& topic : transcript.topics) {
    std::optional<ScoreRow> row;
    for (int attempt = 0; attempt < 2 && !row; ++attempt) {
      try {
        if (options.mode == JudgeMode::Direct) {
          row = score_direct(transcript, orientation, topic, backend, options.source);
        } else {
          row = ScoreRow{topic.id, crit_side(transcript, orientation.arguer, topic, backend, options.source),
                         crit_side(transcript, orientation.counterer, topic, backend, options.source), false, "CRIT"};
        }
      } catch (const Error& e) {
        if (e.category() == ErrorCategory::Config) throw;
      }
    }
    if (!row) {
      row = ScoreRow{topic.id, 0.0, 0.0, true, {}};
      table.complete = false;
    }
    table.rows.push_back(std::move(*row));
  }
  std::tie(table.arguer_total, table.counterer_total) = recompute_totals(table);
  return table;
}

PanelResult run_panel(const SessionState& transcript, const std::vector<JudgeProfile>& judges,
                      const JudgeOptions& options, BackendFactory factory) {
  if (judges.empty()) throw Error(ErrorCode::EmptyPanel, "the judge panel is empty");
  std::set<std::string> debaters{transcript.proponent_backend, transcript.opponent_backend};
  for (const auto& j : judges) {
    if (debaters.count(j.backend.id)) {
      throw Error(ErrorCode::JudgeConflict, "judge backend '" + j.backend.id + "' also took part in the debate",
                  j.backend.id);
    }
  }
  if (!factory) factory = make_backend;

  struct Outcome {
    std::vector<ScoreTable> tables;
    bool failed = false;
  };
  auto judge_one = [&](const JudgeProfile& j) {
    Outcome out;
    try {
      auto backend = factory(j.backend);
      for (auto o : {kProponentArgues, kOpponentArgues}) {
        out.tables.push_back(score_orientation(transcript, o, j, *backend, options));
      }
    } catch (const Error&) {
      out.tables.clear();
      out.failed = true;
    }
    return out;
  };

  std::vector<Outcome> outcomes;
  if (options.concurrent && judges.size() > 1) {
    std::vector<std::future<Outcome>> futures;
    for (const auto& j : judges) futures.push_back(std::async(std::launch::async, judge_one, std::cref(j)));
    for (auto& f : futures) outcomes.push_back(f.get());
  } else {
    for (const auto& j : judges) outcomes.push_back(judge_one(j));
  }

  PanelResult result;
  for (std::size_t i = 0; i < judges.size(); ++i) {
    if (outcomes[i].failed) {
      result.failed_judges.push_back(judges[i].display_name.empty() ? judges[i].backend.id : judges[i].display_name);
    }
    for (auto& t : outcomes[i].tables) result.tables.push_back(std::move(t));
  }
  return result;
}

Verdict decide_winner(const std::vector<ScoreTable>& tables) {
  Verdict v;
  int pro = 0, con = 0;
  for (const auto& t : tables) {
    if (!t.complete) continue;
    JudgeVote vote{t.judge, t.orientation, TableWinner::Tie, t.arguer_total, t.counterer_total};
    if (t.arguer_total != t.counterer_total) {
      AgentRole w = t.arguer_total > t.counterer_total ? t.orientation.arguer : t.orientation.counterer;
      vote.winner = w == AgentRole::Proponent ? TableWinner::Proponent : TableWinner::Opponent;
      ++(w == AgentRole::Proponent ? pro : con);
    }
    v.per_judge.push_back(std::move(vote));
  }
  v.overall = pro > con ? OverallWinner::Proponent : con > pro ? OverallWinner::Opponent : OverallWinner::Draw;
  int ties = static_cast<int>(v.per_judge.size()) - pro - con;
  v.rationale = "Decisive votes: Proponent " + std::to_string(pro) + ", Opponent " + std::to_string(con) +
                "; ties " + std::to_string(ties) + ".";
  return v;
}

}  // namespace socrasynth
