#pragma once

#include <string>

#include "w3ar/grpo.hpp"
#include "w3ar/reward.hpp"
#include "w3ar/toy_policy.hpp"
#include "w3ar/toy_world.hpp"
#include "w3ar/trainer.hpp"

namespace w3ar {

/// Everything a toy experiment needs, loadable from a `key = value` file.
///
/// Format: one assignment per line, `#` starts a comment, blank lines are
/// ignored, keys are unique. Unknown keys and unparsable values are schema
/// violations. Keys (defaults in parentheses):
///
///   world.n_text_symbols (8)          world.n_acoustic_symbols (16)
///   world.tokens_per_word (3)         world.frames_per_acoustic_token (1)
///   world.embed_dim (16)              world.sharpness (10)
///   world.seed (42)                   world.words_per_utterance (5)
///   world.n_train_texts (64)          world.n_eval_texts (32)
///   reward.window_w (6)               reward.beta (0.1)
///   reward.lambda_purity (0.5)        reward.lambda_mono (0.5)
///   optim.group_size (8)              optim.gamma_kl (0.1)
///   optim.gamma_sup (0)               optim.learning_rate (0.5)
///   optim.temperature (1)             optim.top_p (1)
///   optim.iterations (1000)           optim.seed (42)
///   optim.kl_direction (ref_to_policy | policy_to_ref)
///   pretrain.epochs (300)             pretrain.learning_rate (1)
///   pretrain.p_noise (0.3)
///   eval.samples_per_text (8)
struct ExperimentConfig {
  ToyWorldConfig world;
  RewardConfig reward;
  OptimizerConfig optimizer;
  PretrainConfig pretrain;
  TrainOptions train;

  /// Runs every component's validate(); throws SchemaViolation on failure.
  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig read_experiment_config(const std::string& path);
std::string format_experiment_config(const ExperimentConfig& config);

}  // namespace w3ar
