#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "w3ar/error.hpp"
#include "w3ar/toy_world.hpp"

using namespace w3ar;

namespace {

ToyWorldConfig config_with(std::size_t L) {
  ToyWorldConfig cfg;
  cfg.tokens_per_word = L;
  return cfg;
}

}  // namespace

TEST_CASE("world construction") {
  const ToyWorld world{ToyWorldConfig{}};
  const auto& cfg = world.config();

  SUBCASE("canonical map is injective") {
    std::set<std::size_t> images;
    for (std::size_t m = 0; m < cfg.n_text_symbols; ++m) images.insert(world.canonical(m));
    CHECK(images.size() == cfg.n_text_symbols);
  }
  SUBCASE("acoustic embeddings are orthonormal when V <= d") {
    const auto& e = world.acoustic_embeddings();
    for (std::size_t a = 0; a < e.rows(); ++a) {
      for (std::size_t b = 0; b < e.rows(); ++b) {
        double dot = 0.0;
        for (std::size_t k = 0; k < e.cols(); ++k) dot += e(a, k) * e(b, k);
        CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
      }
    }
  }
  SUBCASE("text embedding equals the canonical acoustic embedding") {
    for (std::size_t m = 0; m < cfg.n_text_symbols; ++m) {
      const auto t = world.text_embeddings().row(m);
      const auto a = world.acoustic_embeddings().row(world.canonical(m));
      CHECK(std::equal(t.begin(), t.end(), a.begin()));
    }
  }
  SUBCASE("texts have distinct symbols and the splits are disjoint") {
    CHECK(world.train_texts().size() == cfg.n_train_texts);
    CHECK(world.eval_texts().size() == cfg.n_eval_texts);
    std::set<TextSeq> train(world.train_texts().begin(), world.train_texts().end());
    CHECK(train.size() == cfg.n_train_texts);
    for (const auto& text : world.eval_texts()) CHECK(train.count(text) == 0);
    for (const auto& text : world.train_texts()) {
      CHECK(text.size() == cfg.words_per_utterance);
      CHECK(std::set<std::size_t>(text.begin(), text.end()).size() == text.size());
    }
  }
  SUBCASE("pure function of the config") {
    const ToyWorld again{ToyWorldConfig{}};
    CHECK(again.acoustic_embeddings() == world.acoustic_embeddings());
    CHECK(again.train_texts() == world.train_texts());
    ToyWorldConfig other;
    other.seed = 43;
    CHECK_FALSE(ToyWorld(other).acoustic_embeddings() == world.acoustic_embeddings());
  }
  SUBCASE("more acoustic symbols than dimensions still gives unit vectors") {
    ToyWorldConfig wide;
    wide.n_acoustic_symbols = 24;
    const ToyWorld w(wide);
    for (std::size_t a = 0; a < 24; ++a) {
      double norm = 0.0;
      for (double v : w.acoustic_embeddings().row(a)) norm += v * v;
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("invalid configs") {
    ToyWorldConfig bad;
    bad.n_acoustic_symbols = 4;
    CHECK_THROWS_AS(ToyWorld{bad}, Error);
    bad = {};
    bad.tokens_per_word = 0;
    CHECK_THROWS_AS(ToyWorld{bad}, Error);
    bad = {};
    bad.words_per_utterance = 9;
    CHECK_THROWS_AS(ToyWorld{bad}, Error);
  }
}

TEST_CASE("render_clean") {
  const ToyWorld world(config_with(3));
  const auto c2 = world.canonical(2);
  CHECK(render_clean(world, {2}) == AcousticSeq{c2, c2, c2});
  CHECK(render_clean(world, {}).empty());

  const ToyWorld w2(config_with(2));
  const auto a = w2.canonical(0);
  const auto b = w2.canonical(1);
  CHECK(render_clean(w2, {0, 1}) == AcousticSeq{a, a, b, b});
}

TEST_CASE("inject_artifact") {
  const ToyWorld world(config_with(2));
  const TextSeq text{0, 1};
  const auto clean = render_clean(world, text);
  const auto A = clean[0];
  const auto B = clean[2];
  Rng rng(5);

  CHECK(inject_artifact(world, text, clean, {ArtifactKind::Stutter, 0}, rng).size() == 6);
  CHECK(inject_artifact(world, text, clean, {ArtifactKind::Stutter, 0}, rng) ==
        AcousticSeq{A, A, A, A, B, B});
  CHECK(inject_artifact(world, text, clean, {ArtifactKind::Swap, 0}, rng) ==
        AcousticSeq{B, B, A, A});

  for (int trial = 0; trial < 200; ++trial) {
    const auto sub = inject_artifact(world, text, clean, {ArtifactKind::Substitution, 1}, rng);
    REQUIRE(sub.size() == 4);
    REQUIRE(sub[0] == A);
    REQUIRE(sub[1] == A);
    REQUIRE(sub[2] != B);
    REQUIRE(sub[3] != B);
    REQUIRE(sub[2] < world.n_acoustic_symbols());
  }

  auto code = [&](Artifact art, const AcousticSeq& seq) {
    try {
      inject_artifact(world, text, seq, art, rng);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code({ArtifactKind::Swap, 1}, clean) == ErrorCode::TargetOutOfRange);
  CHECK(code({ArtifactKind::Stutter, 2}, clean) == ErrorCode::TargetOutOfRange);
  CHECK(code({ArtifactKind::Stutter, 0}, AcousticSeq{A, A, B}) == ErrorCode::LengthMismatch);
}

TEST_CASE("toy_attention") {
  SUBCASE("single word at default sharpness") {
    const ToyWorld world{ToyWorldConfig{}};
    const std::size_t L = world.tokens_per_word();
    for (std::size_t m = 0; m < world.n_text_symbols(); ++m) {
      const auto map = toy_attention(world, {m}, render_clean(world, {m}));
      // The peak ties across the word's L frames and resolves to the first,
      // so a W = L - 1 window clips to the first two frames.
      CHECK(purity_reward(map.row(0), L - 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
      CHECK(purity_reward(map.row(0), 2 * (L - 1)) >= 0.99);
    }
  }
  SUBCASE("zero sharpness gives uniform rows") {
    ToyWorldConfig cfg;
    cfg.sharpness = 0.0;
    const ToyWorld world(cfg);
    const TextSeq text{0, 1, 2, 3, 4};
    const auto map = toy_attention(world, text, render_clean(world, text));
    REQUIRE(map.n_frames() == 15);
    for (std::size_t t = 0; t < text.size(); ++t) {
      for (double v : map.row(t)) CHECK(v == doctest::Approx(1.0 / 15.0).epsilon(1e-15));
      // peak at frame 0, window [0, 3]
      CHECK(purity_reward(map.row(t), 6) == doctest::Approx(4.0 / 15.0).epsilon(1e-12));
    }
  }
  SUBCASE("clean two-word rendering advances the peak") {
    const ToyWorld world{ToyWorldConfig{}};
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
      const auto text = world.random_text(2, rng);
      const auto map = toy_attention(world, text, render_clean(world, text));
      REQUIRE(attention_peak(map.row(1)) > attention_peak(map.row(0)));
    }
  }
  SUBCASE("frames per token widen the map") {
    ToyWorldConfig cfg;
    cfg.frames_per_acoustic_token = 2;
    const ToyWorld world(cfg);
    const TextSeq text{0, 1};
    const auto map = toy_attention(world, text, render_clean(world, text));
    CHECK(map.n_frames() == 12);
    CHECK(map.n_text_tokens() == 2);
  }
  SUBCASE("rows are exactly stochastic on random sequences") {
    const ToyWorld world{ToyWorldConfig{}};
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const auto text = world.random_text(1 + rng.below(5), rng);
      AcousticSeq seq(1 + rng.below(20));
      for (auto& a : seq) a = rng.below(world.n_acoustic_symbols());
      const auto map = toy_attention(world, text, seq);
      for (std::size_t t = 0; t < map.n_text_tokens(); ++t) {
        double sum = 0.0;
        for (double v : map.row(t)) sum += v;
        REQUIRE(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("toy_word_mismatch_rate") {
  const ToyWorld world{ToyWorldConfig{}};
  const TextSeq text{0, 1, 2, 3};
  const auto clean = render_clean(world, text);
  CHECK(toy_word_mismatch_rate(world, text, clean) == 0.0);

  Rng rng(3);
  auto all_sub = clean;
  for (std::size_t w = 0; w < text.size(); ++w)
    all_sub = inject_artifact(world, text, all_sub, {ArtifactKind::Substitution, w}, rng);
  CHECK(toy_word_mismatch_rate(world, text, all_sub) == 1.0);

  auto one_wrong = clean;
  const auto other = world.canonical(3);
  one_wrong[3] = other;  // word 1: two of three tokens wrong
  one_wrong[4] = other;
  CHECK(toy_word_mismatch_rate(world, text, one_wrong) == 0.25);

  SUBCASE("a tie counts as a mismatch") {
    ToyWorldConfig cfg;
    cfg.tokens_per_word = 2;
    const ToyWorld w2(cfg);
    auto seq = render_clean(w2, {0});
    seq[1] = w2.canonical(1);
    CHECK(toy_word_mismatch_rate(w2, {0}, seq) == 1.0);
  }
}

TEST_CASE("artifact separation points the right way on a small sample") {
  const ToyWorld world{ToyWorldConfig{}};
  const auto sep = measure_artifact_separation(world, RewardConfig{}, 40, 7);
  CHECK(sep.n_utterances == 40);
  CHECK(sep.substitution_margin() > 0.1);
  CHECK(sep.swap_negative_fraction >= 0.95);
  CHECK(sep.clean_nonnegative_fraction >= 0.99);
  CHECK(sep.substitution_mean_purity < sep.clean_mean_purity);

  const auto again = measure_artifact_separation(world, RewardConfig{}, 40, 7);
  CHECK(again.substitution_margin() == sep.substitution_margin());
}
