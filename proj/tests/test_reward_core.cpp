#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "oracles.hpp"
#include "random_rows.hpp"
#include "w3ar/error.hpp"
#include "w3ar/reward.hpp"

using namespace w3ar;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

AttentionMap one_hot_map(const std::vector<std::size_t>& peaks, std::size_t frames) {
  Matrix m(peaks.size(), frames);
  for (std::size_t t = 0; t < peaks.size(); ++t) m(t, peaks[t]) = 1.0;
  return validate_attention(std::move(m), kInternalTolerance);
}

}  // namespace

TEST_CASE("validate_attention accepts and rejects per the invariants") {
  CHECK(validate_attention(Matrix(1, 1, 1.0)).n_frames() == 1);
  CHECK(code_of([] { validate_attention(Matrix(1, 2, {0.5, 0.6})); }) ==
        ErrorCode::RowNotNormalized);
  CHECK(code_of([] { validate_attention(Matrix(1, 2, {-0.1, 1.1})); }) ==
        ErrorCode::NegativeWeight);
  CHECK(code_of([] { validate_attention(Matrix(0, 3)); }) == ErrorCode::EmptyMatrix);
  CHECK(code_of([] { validate_attention(Matrix(2, 0)); }) == ErrorCode::EmptyMatrix);
  CHECK(code_of([] { validate_attention(Matrix(1, 2, {NAN, 1.0})); }) ==
        ErrorCode::NonFiniteWeight);

  SUBCASE("ingestion tolerance is looser than the internal one") {
    Matrix m(1, 2, {0.5, 0.50005});
    CHECK_NOTHROW(validate_attention(m, kIngestionTolerance));
    CHECK(code_of([&] { validate_attention(m, kInternalTolerance); }) ==
          ErrorCode::RowNotNormalized);
  }

  SUBCASE("diagnostic names the worst row") {
    Matrix m(3, 2, {0.5, 0.5, 0.4, 0.4, 0.5, 0.5001});
    try {
      validate_attention(m);
      FAIL("expected RowNotNormalized");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("worst row 1") != std::string::npos);
    }
  }
}

TEST_CASE("attention_peak") {
  CHECK(attention_peak(std::vector{0.1, 0.7, 0.2}) == 1);
  CHECK(attention_peak(std::vector{0.5, 0.5}) == 0);
  CHECK(attention_peak(std::vector{0.25, 0.25, 0.25, 0.25}) == 0);
}

TEST_CASE("attention_peak is the smallest argmax on rows with ties") {
  Rng rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto row = testing::random_row(rng, 1 + rng.below(12), true);
    REQUIRE(attention_peak(row) == oracle::brute_peak(row));
  }
}

TEST_CASE("purity_reward") {
  SUBCASE("one-hot row is pure for any window") {
    for (std::size_t w : {0u, 1u, 2u, 6u, 50u}) {
      std::vector<double> row(9, 0.0);
      row[4] = 1.0;
      CHECK(purity_reward(row, w) == 1.0);
      row[4] = 0.0;
      row[0] = 1.0;
      CHECK(purity_reward(row, w) == 1.0);
    }
  }
  SUBCASE("uniform rows follow the window convention") {
    std::vector<double> row(100, 0.01);
    // peak ties to frame 0, window [0, 3]
    CHECK(purity_reward(row, 6) == doctest::Approx(0.04).epsilon(1e-12));
    // interior peak sees all 7 frames
    std::vector<double> bumped(100, 0.01);
    bumped[50] += 1e-12;
    bumped[51] -= 1e-12;
    CHECK(purity_reward(bumped, 6) == doctest::Approx(0.07).epsilon(1e-9));
  }
  SUBCASE("hand-summed window agrees with the brute-force oracle") {
    const std::vector<double> row{0.05, 0.1, 0.5, 0.2, 0.1, 0.05};
    CHECK(oracle::brute_window_sum(row, 2) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(purity_reward(row, 2) == doctest::Approx(0.8).epsilon(1e-15));
  }
}

TEST_CASE("purity_reward properties on random rows") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto row = testing::random_row(rng, 1 + rng.below(40), trial % 2 == 0);
    double prev = -1.0;
    for (std::size_t w = 0; w <= 2 * row.size() + 1; ++w) {
      const double p = purity_reward(row, w);
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
      REQUIRE(p >= prev);
      REQUIRE(p == doctest::Approx(oracle::brute_window_sum(row, w)).epsilon(1e-12));
      prev = p;
    }
    REQUIRE(purity_reward(row, 0) == *std::max_element(row.begin(), row.end()));
    REQUIRE(std::abs(purity_reward(row, 2 * row.size()) - 1.0) <= 1e-9);
  }
}

TEST_CASE("monotonicity_reward") {
  CHECK(monotonicity_reward(5, 5, 0.1) == 0.0);
  CHECK(std::abs(monotonicity_reward(20, 10, 0.1) - std::tanh(1.0)) <= 1e-12);
  CHECK(std::abs(monotonicity_reward(10, 20, 0.1) + std::tanh(1.0)) <= 1e-12);
  CHECK(std::tanh(1.0) == doctest::Approx(0.761594).epsilon(1e-6));

  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t a = rng.below(1000);
    const std::size_t b = rng.below(1000);
    const double beta = 0.01 + rng.uniform();
    REQUIRE(monotonicity_reward(a, b, beta) == -monotonicity_reward(b, a, beta));
  }
}

TEST_CASE("token_rewards") {
  RewardConfig cfg;
  cfg.window_w = 0;

  SUBCASE("diagonal map") {
    const auto tok = token_rewards(one_hot_map({0, 1, 2}, 3), cfg);
    CHECK(tok.peaks == std::vector<std::size_t>{0, 1, 2});
    CHECK(tok.purity == std::vector{1.0, 1.0, 1.0});
    CHECK(tok.monotonicity[0] == 0.0);
    CHECK(std::abs(tok.monotonicity[1] - std::tanh(0.1)) <= 1e-12);
    CHECK(std::abs(tok.monotonicity[2] - std::tanh(0.1)) <= 1e-12);
    CHECK(tok.combined[0] == 0.5);
    CHECK(std::abs(tok.combined[1] - (0.5 + 0.5 * std::tanh(0.1))) <= 1e-12);
    CHECK(tok.combined[2] == tok.combined[1]);
  }
  SUBCASE("stalled peaks") {
    const auto tok = token_rewards(one_hot_map({1, 1, 1}, 3), cfg);
    CHECK(tok.monotonicity == std::vector{0.0, 0.0, 0.0});
    CHECK(tok.combined == std::vector{0.5, 0.5, 0.5});
  }
  SUBCASE("single token") {
    Rng rng(5);
    const auto map = validate_attention(testing::random_stochastic(rng, 1, 17));
    const auto tok = token_rewards(map, RewardConfig{});
    CHECK(tok.monotonicity == std::vector{0.0});
    CHECK(tok.combined[0] == 0.5 * tok.purity[0]);
  }
  SUBCASE("invalid config is rejected") {
    RewardConfig bad;
    bad.lambda_purity = 0.0;
    bad.lambda_mono = 0.0;
    CHECK_THROWS_AS(token_rewards(one_hot_map({0}, 1), bad), Error);
  }
}

TEST_CASE("combined reward is linear in the weights and deterministic") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto map = validate_attention(
        testing::random_stochastic(rng, 1 + rng.below(10), 1 + rng.below(30), true));
    RewardConfig cfg;
    cfg.lambda_purity = rng.uniform();
    cfg.lambda_mono = rng.uniform() + 0.01;
    RewardConfig doubled = cfg;
    doubled.lambda_purity *= 2;
    doubled.lambda_mono *= 2;
    const auto a = token_rewards(map, cfg);
    const auto b = token_rewards(map, doubled);
    const auto again = token_rewards(map, cfg);
    for (std::size_t t = 0; t < a.size(); ++t) {
      REQUIRE(b.combined[t] == doctest::Approx(2 * a.combined[t]).epsilon(1e-14));
      REQUIRE(std::memcmp(&again.combined[t], &a.combined[t], sizeof(double)) == 0);
    }
  }
}

TEST_CASE("word_rewards") {
  TokenRewards tok;
  tok.combined = {0.2, 0.4};
  tok.peaks = {0, 0};
  tok.purity = tok.monotonicity = {0, 0};
  const auto single = word_rewards(tok, {{0, 0}, {"a"}});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == doctest::Approx(0.3).epsilon(1e-15));

  tok.combined = {1.0, 0.0, 0.5};
  tok.peaks = {0, 0, 0};
  tok.purity = tok.monotonicity = {0, 0, 0};
  const auto w = word_rewards(tok, {{0, 0, 1}, {}});
  CHECK(w == std::vector{0.5, 0.5});
  CHECK(word_rewards(tok, TextWordMap::identity(3)) == tok.combined);

  CHECK(code_of([&] { word_rewards(tok, {{0, 0}, {}}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("refining every token into its own word is the identity") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto map = validate_attention(
        testing::random_stochastic(rng, 1 + rng.below(12), 1 + rng.below(20)));
    const auto tok = token_rewards(map, RewardConfig{});
    REQUIRE(word_rewards(tok, TextWordMap::identity(tok.size())) == tok.combined);
  }
}

TEST_CASE("word map validation") {
  CHECK_NOTHROW(validate_word_map({{0, 0, 1, 2, 2}, {"a", "b", "c"}}));
  CHECK(code_of([] { validate_word_map({{0, 2}, {}}); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { validate_word_map({{0, 1, 0}, {}}); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { validate_word_map({{1, 1}, {}}); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { validate_word_map({{}, {}}); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { validate_word_map({{0, 1}, {"only"}}); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("word reward report aggregates token statistics") {
  // tokens 0,1 -> word 0 (peaks 2 then 1: a regression), token 2 -> word 1
  Matrix m(3, 4);
  m(0, 2) = 1.0;
  m(1, 1) = 0.6;
  m(1, 3) = 0.4;
  m(2, 3) = 1.0;
  RewardConfig cfg;
  cfg.window_w = 0;
  const auto tok = token_rewards(validate_attention(m), cfg);
  const auto rows = word_reward_report("u1", tok, {{0, 0, 1}, {"hello", "world"}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_tokens == 2);
  CHECK(rows[0].purity == doctest::Approx(0.8));
  CHECK(rows[0].min_token_purity == doctest::Approx(0.6));
  CHECK(rows[0].has_regression);
  CHECK(rows[0].mono == doctest::Approx(0.5 * std::tanh(-0.1)));
  CHECK_FALSE(rows[1].has_regression);
  CHECK(rows[1].word == "world");
  CHECK(rows[1].reward == doctest::Approx(tok.combined[2]));
}
