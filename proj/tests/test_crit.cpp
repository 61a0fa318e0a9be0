#include <algorithm>
#include <random>

#include "doctest.h"
#include "socrasynth/crit.hpp"
#include "socrasynth/error.hpp"
#include "support.hpp"

using namespace socrasynth;

namespace {

// Plain left-to-right mean of products, the textbook definition.
double oracle_raw(const std::vector<std::pair<double, double>>& pairs) {
  double sum = 0.0;
  for (const auto& [g, t] : pairs) sum += g * t;
  return sum / static_cast<double>(pairs.size());
}

CritDocument doc_of(const std::string& id, const std::string& text) {
  return CritDocument{id, text, DocOrigin{}};
}

std::shared_ptr<FunctionBackend> responder(std::function<std::string(const RenderedPrompt&)> f,
                                           std::vector<std::string>* seen = nullptr) {
  BackendProfile p;
  p.id = "fn";
  return std::make_shared<FunctionBackend>(p, [f, seen](std::span<const ChatTurn>, const RenderedPrompt& rp) {
    if (seen) seen->push_back(rp.template_id + "|" + rp.text);
    return f(rp);
  });
}

}  // namespace

TEST_CASE("aggregate: worked example") {
  std::vector<std::pair<double, double>> pairs{{8, 9}, {7, 6}, {6, 5}};
  auto agg = aggregate_pairs(pairs);
  CHECK(std::abs(agg.raw - 48.0) <= 1e-9);
  CHECK(std::abs(agg.normalized - 4.8) <= 1e-9);
  CHECK(std::abs(agg.raw - oracle_raw(pairs)) <= 1e-12);
  CHECK(agg.normalized == agg.raw / 10.0);

  std::vector<std::pair<double, double>> top{{10, 10}, {10, 10}};
  CHECK(aggregate_pairs(top).raw == 100.0);
  CHECK(aggregate_pairs(top).normalized == 10.0);
  std::vector<std::pair<double, double>> bottom{{1, 1}};
  CHECK(aggregate_pairs(bottom).raw == 1.0);
  CHECK(aggregate_pairs(bottom).normalized == 0.1);

  std::vector<std::pair<double, double>> none;
  CHECK_THROWS_AS(aggregate_pairs(none), Error);
}

TEST_CASE("aggregate properties over random cases") {
  std::mt19937_64 rng(20240517);
  std::uniform_real_distribution<double> score(1.0, 10.0);
  std::uniform_int_distribution<int> count(1, 16);
  std::uniform_int_distribution<int> exponent(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::pair<double, double>> pairs(static_cast<std::size_t>(count(rng)));
    for (auto& p : pairs) p = {score(rng), score(rng)};
    auto base = aggregate_pairs(pairs);

    auto shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(std::abs(aggregate_pairs(shuffled).normalized - base.normalized) <= 1e-9);

    double lo = 1e300, hi = -1e300;
    for (const auto& [g, t] : pairs) {
      lo = std::min(lo, g * t);
      hi = std::max(hi, g * t);
    }
    CHECK(base.normalized >= lo / 10.0);
    CHECK(base.normalized <= hi / 10.0);
    CHECK(std::abs(base.raw - oracle_raw(pairs)) <= 1e-9);

    // Scaling every theta by a power of two scales the total exactly.
    double k = std::ldexp(1.0, exponent(rng));
    auto scaled = pairs;
    for (auto& p : scaled) p.second *= k;
    CHECK(aggregate_pairs(scaled).raw == base.raw * k);
  }
}

TEST_CASE("regulation fixture end to end") {
  auto backend = load_script(testing::fixture("regulation/crit.script"), testing::scripted_profile("s", ""));
  auto doc = doc_of("position", read_text_file(testing::fixture("regulation/position.txt")));
  auto report = evaluate(doc, *backend, NullResolver{});
  CHECK(report.claim == "Supporting regulating the use of large language models in education and research");
  REQUIRE(report.assessments.size() == 3);
  CHECK(report.assessments[0].gamma == 8);
  CHECK(report.assessments[0].theta == 9);
  CHECK(report.assessments[1].evidence_type == EvidenceType::Statistics);
  CHECK(report.assessments[2].is_rival);
  CHECK(std::abs(report.gamma_total - 4.8) <= 1e-9);
  CHECK(std::abs(report.gamma_total_raw - 48.0) <= 1e-9);
  CHECK(report.gamma_total == report.gamma_total_raw / 10.0);
  CHECK(report.depth == 0);
  CHECK(report.tree_height() == 1);
  for (const auto& a : report.assessments) CHECK_FALSE(a.justification.empty());
}

TEST_CASE("claim and reason extraction") {
  auto x = responder([](const RenderedPrompt& rp) -> std::string {
    if (rp.template_id == "p1.1") return testing::fenced({{"Ω", "X"}});
    if (rp.template_id == "p2") {
      nlohmann::json reasons = nlohmann::json::array();
      for (int i = 1; i <= 12; ++i) reasons.push_back("r" + std::to_string(i));
      return testing::fenced({{"R", reasons}});
    }
    return "";
  });
  auto doc = doc_of("d", "text");
  CHECK(extract_claim(doc, *x) == "X");
  auto reasons = extract_reasons(doc, "X", *x, 8);
  REQUIRE(reasons.items.size() == 8);
  CHECK(reasons.items.front() == "r1");
  CHECK(reasons.items.back() == "r8");
  CHECK(reasons.truncated);

  auto empty = responder([](const RenderedPrompt&) { return testing::fenced({{"R", nlohmann::json::array()}}); });
  try {
    extract_reasons(doc, "X", *empty);
    FAIL("empty reasons must throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoReasonsFound);
  }

  auto prose = responder([](const RenderedPrompt&) { return std::string("The conclusion is X."); });
  try {
    extract_claim(doc, *prose);
    FAIL("prose must not parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ExtractionFailed);
    CHECK(e.detail() == "p1.1");
  }
}

TEST_CASE("assess_reason: direct, truncated, cycle") {
  auto scorer = [](const std::string& type) {
    return responder([type](const RenderedPrompt& rp) -> std::string {
      if (rp.template_id == "p3.1") return testing::fenced({{"evidence", "see [c2]"}});
      if (rp.template_id == "p3.2") return testing::fenced({{"type", type}});
      if (rp.template_id == "p3.4") return testing::fenced({{"γ", 8}, {"θ", 9}});
      return "";
    });
  };
  auto doc = doc_of("c1", "Claim: a\nReason: b [c2]\n");

  auto theory = scorer("A");
  auto a = assess_reason("b [c2]", "a", doc, *theory, NullResolver{}, 2);
  CHECK(a.gamma == 8);
  CHECK(a.theta == 9);
  CHECK_FALSE(static_cast<bool>(a.sub_report));

  MapResolver resolver;
  resolver.add("[c2]", doc_of("c2", "Claim: c\nReason: d\n"));
  auto cited = scorer("D");
  auto t = assess_reason("b [c2]", "a", doc, *cited, resolver, 0);
  CHECK(t.truncated_by_depth);
  CHECK(t.gamma == 8);
  CHECK_FALSE(static_cast<bool>(t.sub_report));

  MapResolver self;
  self.add("[c2]", doc);
  auto c = assess_reason("b [c2]", "a", doc, *cited, self, 2);
  CHECK(c.cycle_detected);
  CHECK(c.theta == 9);

  auto u = assess_reason("b [c2]", "a", doc, *cited, NullResolver{}, 2);
  CHECK(u.unresolved);
}

TEST_CASE("recursion: self-citing document") {
  MapResolver resolver;
  auto doc = doc_of("self", "Claim: loops are fine\nReason: As argued in [self]\n");
  resolver.add("[self]", doc);
  auto report = evaluate(doc, *testing::corpus_evaluator(), resolver);
  CHECK(report.cycle_detected);
  REQUIRE(report.assessments.size() == 1);
  CHECK(report.assessments[0].cycle_detected);
  CHECK(report.tree_height() == 1);
}

TEST_CASE("recursion: three-document cycle terminates") {
  auto corpus = load_corpus(testing::fixture("corpus/cycle"));
  auto c1 = doc_of("c1", read_text_file(testing::fixture("corpus/cycle/c1.txt")));
  CritOptions options;
  options.max_depth = 2;
  auto report = evaluate(c1, *testing::corpus_evaluator(), *corpus, options);
  CHECK(report.cycle_detected);
  CHECK(std::isfinite(report.gamma_total));
  CHECK(report.tree_height() <= 3);
  // c1 -> c2 -> c3 -> c1: the c3-level reason sees c1 on the path.
  const auto& c2 = *report.assessments.at(0).sub_report;
  CHECK(c2.document_id == "c2");
  const auto& c3 = *c2.assessments.at(0).sub_report;
  CHECK(c3.document_id == "c3");
  CHECK(c3.depth == 2);
  CHECK(c3.assessments.at(0).cycle_detected);
  CHECK_FALSE(report.truncated_by_depth);
}

TEST_CASE("recursion: four-deep chain truncates at depth 2") {
  auto corpus = load_corpus(testing::fixture("corpus/chain"));
  auto d1 = doc_of("d1", read_text_file(testing::fixture("corpus/chain/d1.txt")));
  CritOptions options;
  options.max_depth = 2;
  auto report = evaluate(d1, *testing::corpus_evaluator(), *corpus, options);
  CHECK(report.truncated_by_depth);
  CHECK_FALSE(report.cycle_detected);
  const auto& d2 = *report.assessments.at(0).sub_report;
  const auto& d3 = *d2.assessments.at(0).sub_report;
  CHECK(d3.document_id == "d3");
  CHECK(d3.depth == 2);
  CHECK(d3.assessments.at(0).truncated_by_depth);
  CHECK_FALSE(static_cast<bool>(d3.assessments.at(0).sub_report));
  CHECK(report.tree_height() == 3);

  // Sub-report lifting: the citing reason takes the cited report's total.
  CHECK(d2.assessments.at(0).gamma == std::clamp(d3.gamma_total, 1.0, 10.0));
}

TEST_CASE("rivals: monologue and dialogue") {
  auto mono = responder([](const RenderedPrompt& rp) -> std::string {
    if (rp.template_id == "p4") return testing::fenced({{"R'", {"c1"}}});
    return "";
  });
  auto doc = doc_of("d", "text");
  std::vector<std::string> reasons{"r1"};
  auto rivals = elicit_rivals("X", reasons, doc, *mono, CritMode::Monologue, {});
  CHECK(rivals.items == std::vector<std::string>{"c1"});

  std::vector<std::string> claims;
  auto dialogue = responder([&](const RenderedPrompt& rp) -> std::string {
    claims.push_back(rp.slots.text("Ω"));
    // Echo the first sentence of the opponent text as the rival.
    auto d = rp.slots.text("d");
    return testing::fenced({{"R", {d.substr(0, d.find('.') + 1)}}});
  });
  std::vector<RivalSource> opponent{{1, "Review boards already cover this. More text."},
                                    {2, "Privacy law suffices. Other text."}};
  auto from_opponent = elicit_rivals("X", reasons, doc, *dialogue, CritMode::Dialogue, opponent);
  REQUIRE(from_opponent.items.size() == 2);
  for (std::size_t i = 0; i < opponent.size(); ++i) {
    CHECK(opponent[i].text.find(from_opponent.items[i]) != std::string::npos);
    CHECK(from_opponent.source_rounds[i] == opponent[i].round);
  }
  CHECK(claims.at(0) == negate_claim("X"));

  auto none = elicit_rivals("X", reasons, doc, *dialogue, CritMode::Dialogue, {});
  CHECK(none.items.empty());
}

TEST_CASE("counterfactual re-assessment") {
  std::vector<std::string> seen;
  bool overriding = false;
  auto backend = responder(
      [&](const RenderedPrompt& rp) -> std::string {
        const auto& id = rp.template_id;
        if (id == "p1.1") return testing::fenced({{"Ω", "X"}});
        if (id == "p2") return testing::fenced({{"R", {"r1", "r2"}}});
        if (id == "p4") return testing::fenced({{"R'", nlohmann::json::array()}});
        if (id == "p3.1") return testing::fenced({{"evidence", "e"}});
        if (id == "p3.2") return testing::fenced({{"type", "A"}});
        if (id == "p3.4") {
          if (overriding) return testing::fenced({{"γ", 5}, {"θ", 5}});
          return rp.slots.text("r") == "r1" ? testing::fenced({{"γ", 8}, {"θ", 9}})
                                            : testing::fenced({{"γ", 7}, {"θ", 6}});
        }
        if (id == "p8") return testing::fenced({{"γ", 5}, {"θ", 5}});
        if (id == "p7") return testing::fenced({{"justification", "j"}});
        return "";
      },
      &seen);
  auto doc = doc_of("d", "document text");
  auto report = evaluate(doc, *backend, NullResolver{});
  std::vector<std::string> originals;
  for (const auto& s : seen) {
    if (s.rfind("p3.4|", 0) == 0) originals.push_back(s);
  }

  seen.clear();
  auto same = counterfactual_reassess(report, doc, "", *backend);
  CHECK(seen == originals);
  REQUIRE(same.size() == 2);
  CHECK(same[0].delta_gamma == 0.0);

  auto revised = counterfactual_reassess(report, doc, "Assume a strict national privacy statute exists.", *backend);
  REQUIRE(revised.size() == 2);
  for (std::size_t i = 0; i < revised.size(); ++i) {
    CHECK(revised[i].delta_gamma == report.assessments[i].gamma - 5);
    CHECK(revised[i].delta_theta == report.assessments[i].theta - 5);
  }
}

TEST_CASE("corpus loading") {
  auto corpus = load_corpus(testing::fixture("corpus/chain"));
  auto hit = corpus->resolve("As shown in [d3]", "");
  REQUIRE(hit.has_value());
  CHECK(hit->id == "d3");
  CHECK_FALSE(corpus->resolve("nothing cited", "").has_value());
  CHECK_THROWS_AS(load_corpus(testing::fixture("corpus/missing")), Error);
}
