#include <cmath>

#include "doctest.h"
#include "socrasynth/core.hpp"
#include "socrasynth/error.hpp"
#include "support.hpp"

using namespace socrasynth;

namespace {

ErrorCode code_of(const DebateConfig& cfg) {
  try {
    validate_config(cfg);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a configuration error");
  return ErrorCode::InvalidConfig;
}

DebateConfig with_subject() {
  DebateConfig cfg;
  cfg.subject = "Should the use of large language models in education and research be regulated?";
  return cfg;
}

}  // namespace

TEST_CASE("default configuration is valid") {
  auto cfg = with_subject();
  CHECK(cfg.delta0 == 0.9);
  CHECK(cfg.decay == 1.2);
  CHECK(cfg.floor == 0.1);
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("configuration errors") {
  auto cfg = with_subject();
  cfg.decay = 1.0;
  CHECK(code_of(cfg) == ErrorCode::DecayNotGreaterThanOne);

  cfg = with_subject();
  cfg.floor = 0.95;
  CHECK(code_of(cfg) == ErrorCode::FloorOutOfRange);

  cfg = with_subject();
  cfg.subject = "   ";
  CHECK(code_of(cfg) == ErrorCode::EmptySubject);

  cfg = with_subject();
  cfg.delta0 = 1.5;
  CHECK(code_of(cfg) == ErrorCode::InvalidConfig);

  cfg = with_subject();
  cfg.max_rounds = 0;
  CHECK(code_of(cfg) == ErrorCode::InvalidConfig);
}

TEST_CASE("decay sequence matches direct iteration") {
  auto seq = decay_sequence(0.9, 1.2, 0.1);
  auto oracle = testing::decay_oracle(0.9, 1.2, 0.1);
  REQUIRE(seq.size() == 12);
  REQUIRE(oracle.size() == seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == doctest::Approx(oracle[i]).epsilon(1e-15));
  CHECK(seq.front() == doctest::Approx(0.75));
  CHECK(std::abs(seq.back() - 0.100941) < 1e-6);
  CHECK(std::abs(0.9 / std::pow(1.2, 13) - 0.084117) < 1e-6);

  CHECK(decay_sequence(0.5, 2.0, 0.2) == std::vector<double>{0.25});

  auto short_seq = decay_sequence(0.15, 1.2, 0.1);
  REQUIRE(short_seq.size() == 2);
  CHECK(short_seq[0] == doctest::Approx(0.125));
  CHECK(short_seq[1] == doctest::Approx(0.15 / 1.44));
}

TEST_CASE("decay sequence property: strictly decreasing and above the floor") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d0(0.2, 1.0), dec(1.01, 3.0), fl(0.0, 0.19);
  for (int i = 0; i < 500; ++i) {
    double a = d0(rng), b = dec(rng), c = fl(rng);
    auto seq = decay_sequence(a, b, c);
    auto oracle = testing::decay_oracle(a, b, c);
    REQUIRE(seq.size() == oracle.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
      CHECK(seq[k] > c);
      if (k) CHECK(seq[k] < seq[k - 1]);
    }
    if (!seq.empty()) CHECK_FALSE(seq.back() / b > c);
  }
}

TEST_CASE("nearest profile level") {
  CHECK(nearest_profile_level(0.43) == 0.5);
  CHECK(nearest_profile_level(0.8) == 0.9);
  CHECK(nearest_profile_level(0.0) == 0.0);
  CHECK(nearest_profile_level(0.9) == 0.9);
  CHECK(nearest_profile_level(1.0) == 0.9);
  CHECK(nearest_profile_level(0.6) == 0.7);
  CHECK(nearest_profile_level(0.15) == 0.3);
  CHECK(nearest_profile_level(0.1) == 0.0);
}

TEST_CASE("gamma history") {
  GammaHistory h;
  CHECK(h.current() == 0.0);
  CHECK(h.previous() == 0.0);
  h.append(1, 5.0);
  h.append(2, 6.0);
  h.append(3, 5.5);
  CHECK(h.current() == 5.5);
  CHECK(h.previous() == 6.0);
  CHECK(h.strict_decreases() == 1);
  CHECK_THROWS_AS(h.append(3, 1.0), Error);
}

TEST_CASE("enum names round-trip") {
  for (auto p : {Phase::TopicFormation, Phase::Opening, Phase::Refutation, Phase::Closing, Phase::Concluded}) {
    CHECK(parse_phase(to_string(p)) == p);
  }
  for (auto t : {EvidenceType::Theory, EvidenceType::Opinion, EvidenceType::Statistics,
                 EvidenceType::ClaimFromOtherSources}) {
    CHECK(parse_evidence_type(to_string(t)) == t);
  }
  CHECK(evidence_letter(EvidenceType::ClaimFromOtherSources) == 'D');
  CHECK(agent_letter(AgentRole::Proponent) == "A");
  CHECK(other(AgentRole::Opponent) == AgentRole::Proponent);
}

TEST_CASE("utterance display text") {
  Utterance u;
  u.sections = {{"T1", "first"}, {"T2", "second"}};
  CHECK(u.display_text() == "[T1] first\n[T2] second");
  REQUIRE(u.section("T2") != nullptr);
  CHECK(*u.section("T2") == "second");
  CHECK(u.section("T9") == nullptr);
  Utterance raw;
  raw.raw_text = "free text";
  CHECK(raw.display_text() == "free text");
}

TEST_CASE("util helpers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(canonical_whitespace("  a \n\t b  ") == "a b");
  CHECK(format_real(4.8) == "4.8");
  CHECK(format_real(48.0) == "48");
  CHECK(format_fixed(0.75, 6) == "0.750000");
  auto clock = make_clock(ClockMode::Logical);
  auto t1 = clock();
  auto t2 = clock();
  CHECK(t2 > t1);
}
