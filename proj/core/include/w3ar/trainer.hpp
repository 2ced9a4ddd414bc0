#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "w3ar/grpo.hpp"
#include "w3ar/reward.hpp"
#include "w3ar/toy_policy.hpp"
#include "w3ar/toy_world.hpp"

namespace w3ar {

/// A sampled group for one text, scored and ready for the update.
struct GroupRollout {
  TextSeq text;
  GroupBatch batch;
  AdvantageMatrix advantages;
  double mean_reward = 0.0;
  double mean_purity = 0.0;
  double mean_mono = 0.0;
  double mismatch_rate = 0.0;
};

/// Samples config.group_size sequences for `text` and scores them through the
/// toy attention oracle. Sample n draws from its own stream Rng::mix(seed, n).
GroupRollout sample_group(const ToyPolicy& policy, const ToyWorld& world,
                          const RewardConfig& reward, const TextSeq& text,
                          const OptimizerConfig& config, std::uint64_t seed);

struct LossBreakdown {
  double rl = 0.0;
  double kl = 0.0;
  double sup = 0.0;
  double total = 0.0;
};

/// Surrogate objective with the rollout's tokens and advantages held fixed;
/// log-probabilities and logits are recomputed under `policy`.
LossBreakdown surrogate_loss(const ToyPolicy& policy, const ToyPolicy& reference,
                             const ToyWorld& world, const GroupRollout& rollout,
                             const OptimizerConfig& config);

/// Analytic gradient of surrogate_loss().total.
ToyPolicy surrogate_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                             const ToyWorld& world, const GroupRollout& rollout,
                             const OptimizerConfig& config);

struct IterationMetrics {
  std::size_t iteration = 0;
  double mean_reward = 0.0;
  double mean_purity = 0.0;
  double mean_mono = 0.0;
  double word_mismatch_rate = 0.0;
  double kl_to_ref = 0.0;  // KL(pi_ref || pi_theta) over the group's positions
  double loss = 0.0;
};

struct EvalSummary {
  double mismatch_rate = 0.0;
  double mean_reward = 0.0;
  double mean_purity = 0.0;
  double mean_mono = 0.0;
  double kl_to_ref = 0.0;
};

/// Scores `samples_per_text` sampled sequences per text. The sampling stream is
/// fixed by `seed`, so two policies evaluated with the same seed see common
/// random numbers.
EvalSummary evaluate(const ToyPolicy& policy, const ToyPolicy& reference, const ToyWorld& world,
                     const RewardConfig& reward, const OptimizerConfig& sampling,
                     const std::vector<TextSeq>& texts, std::size_t samples_per_text,
                     std::uint64_t seed);

struct TrainOptions {
  std::size_t eval_samples_per_text = 8;
};

struct TrainResult {
  std::vector<IterationMetrics> metrics;
  EvalSummary initial;
  EvalSummary final;
};

/// Group-relative policy optimization of `policy` against the toy ASR oracle.
///
/// Each iteration draws a training text, samples a group, turns word rewards
/// into group-relative advantages and takes one SGD step on
/// L_RL + gamma_kl * L_kl + gamma_sup * L_sup. Initial and final summaries are
/// computed on the world's eval texts.
TrainResult train(ToyPolicy& policy, const ToyPolicy& reference, const ToyWorld& world,
                  const RewardConfig& reward, const OptimizerConfig& config,
                  const TrainOptions& options = {});

/// Header: iteration,mean_reward,mean_purity,mean_mono,word_mismatch_rate,kl_to_ref,loss
void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics);
void write_metrics_csv(const std::string& path, const std::vector<IterationMetrics>& metrics);

}  // namespace w3ar
