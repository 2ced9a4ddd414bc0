#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "w3ar/attention.hpp"
#include "w3ar/matrix.hpp"
#include "w3ar/reward.hpp"

namespace w3ar {

/// One member of a sampled group: the acoustic tokens, their log-probabilities
/// under the sampling policy, the acoustic-token-to-word map w(t), and the
/// word-level rewards the scorer assigned.
struct GroupSample {
  std::vector<std::size_t> tokens;
  std::vector<double> logprobs;
  std::vector<std::size_t> word_of_token;
  std::vector<double> word_rewards;
};

struct GroupBatch {
  std::vector<GroupSample> samples;
  std::size_t n_words = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Row n holds the advantages of sample n, one column per word.
using AdvantageMatrix = Matrix;

enum class KlDirection {
  RefToPolicy,  // KL(pi_ref || pi_theta), the default
  PolicyToRef,  // KL(pi_theta || pi_ref)
};

struct OptimizerConfig {
  std::size_t group_size = 8;
  double gamma_kl = 0.1;
  /// Weight of the supervised likelihood term on the clean rendering.
  double gamma_sup = 0.0;
  /// Plain SGD step size. Large-model fine-tuning would use AdamW at 2e-5
  /// (beta1 0.9, beta2 0.98); the toy policy does not need it.
  double learning_rate = 0.5;
  double sampling_temperature = 1.0;
  double top_p = 1.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 42;
  KlDirection kl_direction = KlDirection::RefToPolicy;

  void validate() const;
};

/// A(y_i^(n)) = R(y_i^(n)) - mean_k R(y_i^(k)).
///
/// Throws GroupTooSmall for fewer than two samples and WordCountMismatch when a
/// sample's reward vector disagrees with batch.n_words.
AdvantageMatrix word_advantages(const GroupBatch& batch);

/// -(1/N) sum_n sum_t A[n][w(t)] * logprob[n][t].
double rl_loss(const GroupBatch& batch, const AdvantageMatrix& advantages);

/// Mean over positions of the categorical KL between softmax(ref_logits) and
/// softmax(theta_logits); rows of the two matrices are aligned positions.
double kl_penalty(const Matrix& theta_logits, const Matrix& ref_logits,
                  KlDirection direction = KlDirection::RefToPolicy);

double total_loss(double l_rl, double l_kl, double l_sup, const OptimizerConfig& config);

/// w(t) = floor(t / L) for n_words * L acoustic tokens.
std::vector<std::size_t> fixed_rate_word_map(std::size_t n_words, std::size_t tokens_per_word);

/// Builds w(t) from where attention places each word.
///
/// A word's position is the peak frame of its first text token. Boundaries sit
/// at the midpoints between consecutive word positions; acoustic token t goes
/// to the word whose interval contains t * frames_per_acoustic_token. A running
/// maximum keeps the result nondecreasing when the raw peaks are not.
std::vector<std::size_t> attention_derived_word_map(const AttentionMap& map,
                                                    const TextWordMap& wmap,
                                                    std::size_t n_acoustic_tokens,
                                                    double frames_per_acoustic_token);

// Categorical helpers shared by the losses and the toy policy.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double categorical_kl(std::span<const double> p_logits, std::span<const double> q_logits);

}  // namespace w3ar
