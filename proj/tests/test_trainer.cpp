#include <cmath>
#include <sstream>

#include "doctest.h"
#include "w3ar/error.hpp"
#include "w3ar/gradcheck.hpp"
#include "w3ar/trainer.hpp"

using namespace w3ar;

namespace {

ToyPolicy random_policy(const ToyWorld& world, std::uint64_t seed) {
  auto p = ToyPolicy::for_world(world);
  Rng rng(seed);
  for (double& v : p.parameters()) v = 0.5 * rng.normal();
  return p;
}

double max_change(const ToyPolicy& a, const ToyPolicy& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.parameters().size(); ++i)
    m = std::max(m, std::abs(a.parameters()[i] - b.parameters()[i]));
  return m;
}

struct Fixture {
  ToyWorld world{ToyWorldConfig{}};
  ToyPolicy reference = pretrain_supervised(ToyPolicy::for_world(world), world, PretrainConfig{});
};

}  // namespace

TEST_CASE("sample_group") {
  const ToyWorld world{ToyWorldConfig{}};
  const auto policy = random_policy(world, 1);
  OptimizerConfig cfg;
  const auto& text = world.train_texts()[0];
  const auto g = sample_group(policy, world, RewardConfig{}, text, cfg, 5);

  CHECK(g.batch.size() == cfg.group_size);
  CHECK(g.batch.n_words == text.size());
  CHECK(g.advantages.rows() == cfg.group_size);
  for (const auto& s : g.batch.samples) {
    CHECK(s.tokens.size() == text.size() * world.tokens_per_word());
    CHECK(s.word_of_token == fixed_rate_word_map(text.size(), world.tokens_per_word()));
    CHECK(s.word_rewards.size() == text.size());
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    double sum = 0.0;
    for (std::size_t n = 0; n < cfg.group_size; ++n) sum += g.advantages(n, i);
    CHECK(std::abs(sum) < 1e-9);
  }
  const auto again = sample_group(policy, world, RewardConfig{}, text, cfg, 5);
  CHECK(again.advantages == g.advantages);
  CHECK(again.mean_reward == g.mean_reward);
}

TEST_CASE("surrogate gradient matches finite differences with every term active") {
  const ToyWorld world{ToyWorldConfig{}};
  for (auto dir : {KlDirection::RefToPolicy, KlDirection::PolicyToRef}) {
    auto policy = random_policy(world, 11);
    const auto reference = random_policy(world, 12);
    OptimizerConfig cfg;
    cfg.group_size = 4;
    cfg.gamma_kl = 0.3;
    cfg.gamma_sup = 0.7;
    cfg.kl_direction = dir;
    const auto rollout =
        sample_group(policy, world, RewardConfig{}, world.train_texts()[3], cfg, 13);
    const auto grad = surrogate_gradient(policy, reference, world, rollout, cfg);
    auto params = policy.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + 1e-5;
      const double up = surrogate_loss(policy, reference, world, rollout, cfg).total;
      params[i] = keep - 1e-5;
      const double down = surrogate_loss(policy, reference, world, rollout, cfg).total;
      params[i] = keep;
      const double fd = (up - down) / 2e-5;
      const double a = grad.parameters()[i];
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("surrogate loss decomposes") {
  const ToyWorld world{ToyWorldConfig{}};
  const auto policy = random_policy(world, 3);
  OptimizerConfig cfg;
  cfg.gamma_sup = 0.25;
  const auto rollout = sample_group(policy, world, RewardConfig{}, world.train_texts()[0], cfg, 1);
  const auto loss = surrogate_loss(policy, policy, world, rollout, cfg);
  CHECK(loss.kl == 0.0);
  CHECK(loss.rl == doctest::Approx(rl_loss(rollout.batch, rollout.advantages)).epsilon(1e-12));
  CHECK(loss.sup > 0.0);
  CHECK(loss.total == doctest::Approx(total_loss(loss.rl, loss.kl, loss.sup, cfg)));
}

TEST_CASE("degenerate groups contribute only the anchoring terms") {
  const ToyWorld world{ToyWorldConfig{}};
  auto policy = ToyPolicy::for_world(world);
  for (std::size_t m = 0; m < world.n_text_symbols(); ++m)
    policy.emit(m, world.canonical(m)) = 50.0;
  OptimizerConfig cfg;
  const auto rollout = sample_group(policy, world, RewardConfig{}, world.train_texts()[0], cfg, 2);
  for (std::size_t n = 1; n < cfg.group_size; ++n)
    REQUIRE(rollout.batch.samples[n].tokens == rollout.batch.samples[0].tokens);
  for (double a : rollout.advantages.data()) CHECK(a == 0.0);
  // with policy == reference the KL gradient vanishes too
  CHECK(surrogate_gradient(policy, policy, world, rollout, cfg).max_abs() < 1e-12);
}

TEST_CASE("train") {
  Fixture fx;
  OptimizerConfig cfg;
  RewardConfig reward;

  SUBCASE("zero iterations leave the policy untouched") {
    cfg.iterations = 0;
    auto policy = fx.reference;
    const auto result = train(policy, fx.reference, fx.world, reward, cfg);
    CHECK(result.metrics.empty());
    CHECK(policy == fx.reference);
    CHECK(result.initial.mismatch_rate == result.final.mismatch_rate);
  }

  SUBCASE("identical seeds give identical metrics") {
    cfg.iterations = 100;
    auto p1 = fx.reference;
    auto p2 = fx.reference;
    std::ostringstream a, b;
    write_metrics_csv(a, train(p1, fx.reference, fx.world, reward, cfg).metrics);
    write_metrics_csv(b, train(p2, fx.reference, fx.world, reward, cfg).metrics);
    CHECK(a.str() == b.str());
    CHECK(p1 == p2);
    CHECK(a.str().rfind("iteration,mean_reward,mean_purity,mean_mono,word_mismatch_rate,"
                        "kl_to_ref,loss\n", 0) == 0);
  }

  SUBCASE("a strong KL anchor moves the parameters less") {
    cfg.iterations = 400;
    auto loose = fx.reference;
    auto tight = fx.reference;
    train(loose, fx.reference, fx.world, reward, cfg);
    cfg.gamma_kl = 10.0;
    train(tight, fx.reference, fx.world, reward, cfg);
    CHECK(max_change(tight, fx.reference) < max_change(loose, fx.reference));
  }

  SUBCASE("metrics are recorded per iteration") {
    cfg.iterations = 20;
    auto policy = fx.reference;
    const auto result = train(policy, fx.reference, fx.world, reward, cfg);
    REQUIRE(result.metrics.size() == 20);
    CHECK(result.metrics[0].iteration == 0);
    CHECK(result.metrics[19].iteration == 19);
    CHECK(result.metrics[0].kl_to_ref == doctest::Approx(0.0).scale(1.0));
    for (const auto& m : result.metrics) {
      CHECK(m.kl_to_ref >= 0.0);
      CHECK(m.word_mismatch_rate >= 0.0);
      CHECK(m.word_mismatch_rate <= 1.0);
    }
  }

  SUBCASE("shape and config errors propagate") {
    auto wrong = ToyPolicy(3, 3);
    CHECK_THROWS_AS(train(wrong, fx.reference, fx.world, reward, cfg), Error);
    cfg.group_size = 1;
    auto policy = fx.reference;
    CHECK_THROWS_AS(train(policy, fx.reference, fx.world, reward, cfg), Error);
  }
}

TEST_CASE("gradient_check") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = gradient_check({seed});
    CHECK(r.max_rel_error <= kGradCheckTolerance);
    CHECK(r.n_parameters == 8 * 16 + 16 * 16 + 16);
  }
  GradCheckOptions broken;
  broken.inject_error = 1e-3;
  CHECK(gradient_check(broken).max_rel_error > kGradCheckTolerance);

  GradCheckOptions coarse;
  coarse.eps = 1e-2;
  const auto r = gradient_check(coarse);
  CHECK(std::isfinite(r.max_rel_error));
  CHECK(r.max_rel_error > gradient_check({}).max_rel_error);
}
