#include "socrasynth/crit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "socrasynth/error.hpp"

namespace socrasynth {

std::string_view to_string(DocOriginKind kind) {
  switch (kind) {
    case DocOriginKind::UserProvided: return "UserProvided";
    case DocOriginKind::DebateSide: return "DebateSide";
    case DocOriginKind::Resolved: return "Resolved";
  }
  return "UserProvided";
}

DocOriginKind parse_doc_origin_kind(std::string_view text) {
  for (auto k : {DocOriginKind::UserProvided, DocOriginKind::DebateSide, DocOriginKind::Resolved}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown document origin '" + std::string(text) + "'");
}

std::string_view to_string(CritMode mode) { return mode == CritMode::Dialogue ? "Dialogue" : "Monologue"; }

CritMode parse_crit_mode(std::string_view text) {
  if (text == "Dialogue" || text == "dialogue") return CritMode::Dialogue;
  if (text == "Monologue" || text == "monologue") return CritMode::Monologue;
  throw Error(ErrorCode::InvalidConfig, "unknown CRIT mode '" + std::string(text) + "'", "mode");
}

int CritReport::tree_height() const {
  int child = 0;
  for (const auto& a : assessments) {
    if (a.sub_report) child = std::max(child, a.sub_report->tree_height());
  }
  return 1 + child;
}

void MapResolver::add(std::string key, CritDocument doc) { docs_.insert_or_assign(std::move(key), std::move(doc)); }

std::optional<CritDocument> MapResolver::resolve(const std::string& reason, const std::string& evidence) const {
  for (const auto* text : {&reason, &evidence}) {
    for (const auto& [key, doc] : docs_) {
      if (text->find(key) != std::string::npos) return doc;
    }
  }
  return std::nullopt;
}

std::shared_ptr<MapResolver> load_corpus(const std::filesystem::path& dir) {
  auto index = nlohmann::json::parse(read_text_file(dir / "index.json"), nullptr, false);
  if (index.is_discarded() || !index.is_object()) {
    throw Error(ErrorCode::InvalidConfig, "corpus index.json must be an object of key -> file", "corpus");
  }
  auto resolver = std::make_shared<MapResolver>();
  for (const auto& [key, file] : index.items()) {
    if (!file.is_string()) {
      throw Error(ErrorCode::InvalidConfig, "corpus entry '" + key + "' is not a file name", "corpus");
    }
    std::filesystem::path path = dir / file.get<std::string>();
    resolver->add(key, CritDocument{path.stem().string(), read_text_file(path),
                                    DocOrigin{DocOriginKind::Resolved, std::nullopt, {}}});
  }
  return resolver;
}

std::string negate_claim(const std::string& claim) { return "It is not the case that: " + claim; }

namespace {

const std::vector<ChatTurn> kNoHistory;

template <class F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_context(context);
  }
}

SlotMap ask(Backend& backend, std::string_view template_id, const SlotMap& in) {
  return complete_structured(backend, kNoHistory, render(template_id, in));
}

// Appends items not already present (whitespace-canonical comparison) up to cap.
// Returns true when something was dropped because of the cap.
bool merge_unique(std::vector<std::string>& out, std::set<std::string>& seen, const std::vector<std::string>& items,
                  std::size_t cap, std::vector<std::optional<int>>* rounds = nullptr,
                  std::optional<int> round = std::nullopt) {
  bool truncated = false;
  for (const auto& item : items) {
    auto key = canonical_whitespace(item);
    if (key.empty() || seen.count(key)) continue;
    if (out.size() >= cap) {
      truncated = true;
      continue;
    }
    seen.insert(key);
    out.push_back(item);
    if (rounds) rounds->push_back(round);
  }
  return truncated;
}

double neumaier_mean(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return (sum + comp) / static_cast<double>(values.size());
}

void direct_scores(ReasonAssessment& a, const std::string& claim, const CritDocument& doc, Backend& backend) {
  auto scores = ask(backend, a.is_rival ? "p5.4" : "p3.4",
                    {{a.is_rival ? "r'" : "r", a.reason}, {"Ω", claim}, {"d", doc.text}});
  a.gamma = scores.score("γ");
  a.theta = scores.score("θ");
}

CritReport evaluate_at(const CritDocument& doc, Backend& backend, const DocResolver& resolver,
                       const CritOptions& options, int depth_budget, const std::vector<std::string>& path);

ReasonAssessment assess_rival(const std::string& rival, std::optional<int> source_round, const std::string& claim,
                              const CritDocument& doc, Backend& backend) {
  ReasonAssessment a;
  a.reason = rival;
  a.is_rival = true;
  a.source_round = source_round;
  a.evidence = ask(backend, "p5.1", {{"r'", rival}, {"Ω", claim}, {"d", doc.text}}).text("evidence");
  a.evidence_type = ask(backend, "p5.2", {{"evidence", a.evidence}}).evidence_type("type");
  direct_scores(a, claim, doc, backend);
  return a;
}

}  // namespace

std::string extract_claim(const CritDocument& doc, Backend& backend) {
  return with_context("extracting the claim of " + doc.id, [&] {
    auto claim = ask(backend, "p1.1", {{"d", doc.text}}).text("Ω");
    if (canonical_whitespace(claim).empty()) {
      throw Error(ErrorCode::ExtractionFailed, "empty claim", "p1.1");
    }
    return claim;
  });
}

namespace {

ReasonList reasons_unchecked(const CritDocument& doc, const std::string& claim, Backend& backend, std::size_t cap) {
  return with_context("extracting reasons of " + doc.id, [&] {
    auto raw = ask(backend, "p2", {{"Ω", claim}, {"d", doc.text}}).text_list("R");
    ReasonList out;
    std::set<std::string> seen;
    out.truncated = merge_unique(out.items, seen, raw, cap);
    return out;
  });
}

}  // namespace

ReasonList extract_reasons(const CritDocument& doc, const std::string& claim, Backend& backend, std::size_t cap) {
  auto out = reasons_unchecked(doc, claim, backend, cap);
  if (out.items.empty()) throw Error(ErrorCode::NoReasonsFound, "no supporting reasons in " + doc.id, doc.id);
  return out;
}

ReasonAssessment assess_reason(const std::string& reason, const std::string& claim, const CritDocument& doc,
                               Backend& backend, const DocResolver& resolver, int depth_budget,
                               const std::vector<std::string>& path_in, const CritOptions& options) {
  if (depth_budget < 0) throw Error(ErrorCode::InvalidConfig, "depth budget must be >= 0", "max_depth");
  std::vector<std::string> path = path_in.empty() ? std::vector<std::string>{doc.id} : path_in;

  return with_context("assessing reason '" + reason + "' in " + doc.id, [&] {
    ReasonAssessment a;
    a.reason = reason;
    a.evidence = ask(backend, "p3.1", {{"r", reason}, {"Ω", claim}, {"d", doc.text}}).text("evidence");
    a.evidence_type = ask(backend, "p3.2", {{"evidence", a.evidence}}).evidence_type("type");

    if (a.evidence_type == EvidenceType::ClaimFromOtherSources) {
      auto cited = resolver.resolve(reason, a.evidence);
      if (cited && std::find(path.begin(), path.end(), cited->id) != path.end()) {
        a.cycle_detected = true;
      } else if (depth_budget == 0) {
        a.truncated_by_depth = true;
      } else if (!cited) {
        a.unresolved = true;
      } else {
        cited->origin = DocOrigin{DocOriginKind::Resolved, std::nullopt, reason};
        auto next_path = path;
        next_path.push_back(cited->id);
        CritOptions sub_options = options;
        sub_options.mode = CritMode::Monologue;
        sub_options.opponent_utterances.clear();
        CritReport sub = evaluate_at(*cited, backend, resolver, sub_options, depth_budget - 1, next_path);
        std::vector<double> thetas;
        for (const auto& s : sub.assessments) thetas.push_back(s.theta);
        a.gamma = std::clamp(sub.gamma_total, 1.0, 10.0);
        a.theta = neumaier_mean(thetas);
        a.sub_report = Box<CritReport>(std::move(sub));
        return a;
      }
    }
    direct_scores(a, claim, doc, backend);
    return a;
  });
}

RivalList elicit_rivals(const std::string& claim, std::span<const std::string> reasons, const CritDocument& doc,
                        Backend& backend, CritMode mode, std::span<const RivalSource> opponent_utterances,
                        std::size_t cap) {
  RivalList out;
  std::set<std::string> seen;
  for (const auto& r : reasons) seen.insert(canonical_whitespace(r));

  if (mode == CritMode::Dialogue) {
    const auto negated = negate_claim(claim);
    for (const auto& u : opponent_utterances) {
      auto found = with_context("extracting rivals from round " + std::to_string(u.round), [&] {
        return ask(backend, "p2", {{"Ω", negated}, {"d", u.text}}).text_list("R");
      });
      out.truncated |= merge_unique(out.items, seen, found, cap, &out.source_rounds, u.round);
    }
    return out;
  }

  std::vector<std::string> targets(reasons.begin(), reasons.end());
  if (targets.empty()) targets.push_back(claim);
  for (const auto& r : targets) {
    auto found = with_context("eliciting counterarguments in " + doc.id, [&] {
      return ask(backend, "p4", {{"r", r}, {"Ω", claim}}).text_list("R'");
    });
    out.truncated |= merge_unique(out.items, seen, found, cap, &out.source_rounds);
  }
  return out;
}

Aggregate aggregate_pairs(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyAssessmentSet, "cannot aggregate zero assessments");
  std::vector<double> products;
  products.reserve(pairs.size());
  for (const auto& [g, t] : pairs) products.push_back(g * t);
  Aggregate agg;
  agg.raw = neumaier_mean(products);
  agg.normalized = agg.raw / 10.0;
  return agg;
}

Aggregate aggregate(std::span<const ReasonAssessment> assessments) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(assessments.size());
  for (const auto& a : assessments) pairs.emplace_back(a.gamma, a.theta);
  return aggregate_pairs(pairs);
}

namespace {

CritReport evaluate_at(const CritDocument& doc, Backend& backend, const DocResolver& resolver,
                       const CritOptions& options, int depth_budget, const std::vector<std::string>& path) {
  if (canonical_whitespace(doc.text).empty()) {
    throw Error(ErrorCode::InvalidConfig, "document " + doc.id + " is empty", doc.id);
  }
  CritReport report;
  report.document_id = doc.id;
  report.depth = static_cast<int>(path.size()) - 1;
  report.claim = extract_claim(doc, backend);

  auto reasons = reasons_unchecked(doc, report.claim, backend, options.max_reasons);
  report.reasons_truncated = reasons.truncated;
  auto rivals = elicit_rivals(report.claim, reasons.items, doc, backend, options.mode,
                              options.opponent_utterances, options.max_rivals);
  report.rivals_truncated = rivals.truncated;
  if (reasons.items.empty() && rivals.items.empty()) {
    throw Error(ErrorCode::NoReasonsFound, "no reasons or rivals in " + doc.id, doc.id);
  }

  for (const auto& r : reasons.items) {
    report.assessments.push_back(
        assess_reason(r, report.claim, doc, backend, resolver, depth_budget, path, options));
  }
  for (std::size_t i = 0; i < rivals.items.size(); ++i) {
    report.assessments.push_back(with_context("assessing rival '" + rivals.items[i] + "' in " + doc.id, [&] {
      return assess_rival(rivals.items[i], rivals.source_rounds[i], report.claim, doc, backend);
    }));
  }

  auto totals = aggregate(report.assessments);
  report.gamma_total_raw = totals.raw;
  report.gamma_total = totals.normalized;
  report.gamma_paper_scale = std::max(1.0, totals.normalized);

  for (auto& a : report.assessments) {
    report.truncated_by_depth |= a.truncated_by_depth;
    report.cycle_detected |= a.cycle_detected;
    if (a.sub_report) {
      report.truncated_by_depth |= a.sub_report->truncated_by_depth;
      report.cycle_detected |= a.sub_report->cycle_detected;
    }
    if (options.justify) {
      a.justification = with_context("justifying '" + a.reason + "'", [&] {
        return ask(backend, "p7", {{"r", a.reason}, {"Ω", report.claim}, {"γ", a.gamma}, {"θ", a.theta}})
            .text("justification");
      });
    }
  }
  return report;
}

}  // namespace

CritReport evaluate(const CritDocument& doc, Backend& backend, const DocResolver& resolver,
                    const CritOptions& options) {
  if (options.max_depth < 0) throw Error(ErrorCode::InvalidConfig, "max_depth must be >= 0", "max_depth");
  return evaluate_at(doc, backend, resolver, options, options.max_depth, {doc.id});
}

std::vector<RevisedScore> counterfactual_reassess(const CritReport& report, const CritDocument& doc,
                                                  const std::string& context_override, Backend& backend) {
  std::vector<RevisedScore> out;
  for (const auto& a : report.assessments) {
    SlotMap scores;
    if (context_override.empty()) {
      scores = ask(backend, a.is_rival ? "p5.4" : "p3.4",
                   {{a.is_rival ? "r'" : "r", a.reason}, {"Ω", report.claim}, {"d", doc.text}});
    } else {
      scores = ask(backend, "p8",
                   {{"context", context_override}, {"r", a.reason}, {"Ω", report.claim}, {"d", doc.text}});
    }
    RevisedScore rs;
    rs.reason = a.reason;
    rs.is_rival = a.is_rival;
    rs.gamma = a.gamma;
    rs.theta = a.theta;
    rs.revised_gamma = scores.score("γ");
    rs.revised_theta = scores.score("θ");
    rs.delta_gamma = a.gamma - rs.revised_gamma;
    rs.delta_theta = a.theta - rs.revised_theta;
    out.push_back(std::move(rs));
  }
  return out;
}

}  // namespace socrasynth
