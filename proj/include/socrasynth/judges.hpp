#pragma once

#include <optional>
#include <string>
#include <vector>

#include "socrasynth/backend.hpp"
#include "socrasynth/core.hpp"
#include "socrasynth/engine.hpp"

namespace socrasynth {

struct JudgeProfile {
  BackendProfile backend;
  std::string display_name;

  friend bool operator==(const JudgeProfile&, const JudgeProfile&) = default;
};

struct Orientation {
  AgentRole arguer = AgentRole::Proponent;
  AgentRole counterer = AgentRole::Opponent;

  friend bool operator==(const Orientation&, const Orientation&) = default;
};

inline constexpr Orientation kProponentArgues{AgentRole::Proponent, AgentRole::Opponent};
inline constexpr Orientation kOpponentArgues{AgentRole::Opponent, AgentRole::Proponent};

struct ScoreRow {
  std::string topic_id;
  double arguer_score = 0.0;
  double counterer_score = 0.0;
  bool missing = false;  // scoring failed twice; scores are not counted
  std::string rationale;

  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

struct ScoreTable {
  std::string judge;
  Orientation orientation;
  std::vector<ScoreRow> rows;
  double arguer_total = 0.0;
  double counterer_total = 0.0;
  bool complete = true;
  std::string prompt;  // template id, or "crit" for CRIT-derived scores

  friend bool operator==(const ScoreTable&, const ScoreTable&) = default;
};

// Column sums over non-missing rows.
std::pair<double, double> recompute_totals(const ScoreTable& table);

enum class TableWinner { Proponent, Opponent, Tie };
enum class OverallWinner { Proponent, Opponent, Draw };

std::string_view to_string(TableWinner w);
std::string_view to_string(OverallWinner w);
TableWinner parse_table_winner(std::string_view text);
OverallWinner parse_overall_winner(std::string_view text);

struct JudgeVote {
  std::string judge;
  Orientation orientation;
  TableWinner winner = TableWinner::Tie;
  double arguer_total = 0.0;
  double counterer_total = 0.0;

  friend bool operator==(const JudgeVote&, const JudgeVote&) = default;
};

struct Verdict {
  std::vector<JudgeVote> per_judge;
  OverallWinner overall = OverallWinner::Draw;
  std::string rationale;
  std::vector<std::string> failed_judges;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

enum class JudgeMode { Direct, Crit };
enum class JudgeSource { Closing, FullTranscript };

std::string_view to_string(JudgeMode m);
std::string_view to_string(JudgeSource s);
JudgeMode parse_judge_mode(std::string_view text);
JudgeSource parse_judge_source(std::string_view text);

struct JudgeOptions {
  JudgeMode mode = JudgeMode::Direct;
  JudgeSource source = JudgeSource::Closing;
  bool concurrent = true;
};

// Text a side contributed on one topic (closing section, or all sections in order).
std::string side_text(const SessionState& transcript, AgentRole role, const Topic& topic, JudgeSource source);

ScoreTable score_orientation(const SessionState& transcript, Orientation orientation, const JudgeProfile& judge,
                             Backend& backend, const JudgeOptions& options = {});

struct PanelResult {
  std::vector<ScoreTable> tables;  // judge order, proponent-argues first
  std::vector<std::string> failed_judges;
};

// Throws EmptyPanel and JudgeConflict (judge backend id equal to a debater's).
PanelResult run_panel(const SessionState& transcript, const std::vector<JudgeProfile>& judges,
                      const JudgeOptions& options = {}, BackendFactory factory = {});

// Winner per table by higher total; overall by majority of non-tie votes, equal counts draw.
// Incomplete tables do not vote.
Verdict decide_winner(const std::vector<ScoreTable>& tables);

}  // namespace socrasynth
