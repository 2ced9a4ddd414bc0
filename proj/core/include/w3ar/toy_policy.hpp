#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "w3ar/rng.hpp"
#include "w3ar/toy_world.hpp"

namespace w3ar {

/// Linear-softmax autoregressive policy over acoustic symbols:
///
///   logits(a_t) = emit[text symbol of t] + trans[a_{t-1}] + bias
///
/// with the transition term dropped at the first position. All parameters sit
/// in one flat vector (emit, then trans, then bias) so gradients and
/// finite-difference probes can walk them uniformly. A gradient has the same
/// type as the policy.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  ToyPolicy(std::size_t n_text_symbols, std::size_t n_acoustic_symbols);

  static ToyPolicy for_world(const ToyWorld& world) {
    return ToyPolicy(world.n_text_symbols(), world.n_acoustic_symbols());
  }

  std::size_t n_text_symbols() const noexcept { return n_text_; }
  std::size_t n_acoustic_symbols() const noexcept { return n_ac_; }

  double& emit(std::size_t m, std::size_t k) { return params_[m * n_ac_ + k]; }
  double emit(std::size_t m, std::size_t k) const { return params_[m * n_ac_ + k]; }
  double& trans(std::size_t prev, std::size_t k) { return params_[trans_offset() + prev * n_ac_ + k]; }
  double trans(std::size_t prev, std::size_t k) const {
    return params_[trans_offset() + prev * n_ac_ + k];
  }
  double& bias(std::size_t k) { return params_[bias_offset() + k]; }
  double bias(std::size_t k) const { return params_[bias_offset() + k]; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  bool same_shape(const ToyPolicy& other) const noexcept {
    return n_text_ == other.n_text_ && n_ac_ == other.n_ac_;
  }
  /// this += scale * other
  void axpy(double scale, const ToyPolicy& other);
  double max_abs() const;

  friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

 private:
  std::size_t trans_offset() const noexcept { return n_text_ * n_ac_; }
  std::size_t bias_offset() const noexcept { return n_text_ * n_ac_ + n_ac_ * n_ac_; }

  std::size_t n_text_ = 0;
  std::size_t n_ac_ = 0;
  std::vector<double> params_;
};

/// Conditioning of one generation step.
struct StepContext {
  std::size_t text_symbol = 0;
  std::optional<std::size_t> prev;  // nullopt at the first position
};

std::vector<double> policy_logits(const ToyPolicy& policy, const StepContext& ctx);

/// Step contexts for a fixed-rate generation of `tokens` given `text`:
/// position t reads text[t / L] and tokens[t - 1].
std::vector<StepContext> step_contexts(const TextSeq& text, const AcousticSeq& tokens,
                                       std::size_t tokens_per_word);

/// Adds `dlogits` (a gradient w.r.t. the step's logits) into `grad`.
void scatter_logit_grad(const StepContext& ctx, std::span<const double> dlogits, ToyPolicy& grad);

struct SampledSequence {
  AcousticSeq tokens;
  std::vector<double> logprobs;  // under the untempered policy
};

/// Draws L tokens per word. Temperatures below 1e-6 pick the argmax; top_p < 1
/// restricts each draw to the smallest high-probability set reaching top_p.
SampledSequence policy_sample(const ToyPolicy& policy, const ToyWorld& world, const TextSeq& text,
                              double temperature, double top_p, Rng& rng);

/// Samples one index from a probability vector after temperature/top-p shaping.
std::size_t sample_categorical(std::span<const double> logits, double temperature, double top_p,
                               Rng& rng);

/// Sum over positions of grad log pi(tokens[t] | context_t).
ToyPolicy grad_logprob(const ToyPolicy& policy, const TextSeq& text, const AcousticSeq& tokens,
                       std::size_t tokens_per_word);

/// Sum over positions of log pi(tokens[t] | context_t).
double sequence_logprob(const ToyPolicy& policy, const TextSeq& text, const AcousticSeq& tokens,
                        std::size_t tokens_per_word);

struct PretrainConfig {
  std::size_t epochs = 300;
  double learning_rate = 1.0;
  /// Probability mass moved to the uniform distribution after fitting.
  double p_noise = 0.3;
};

/// Fits the policy to clean renderings of the world's training texts by
/// full-batch gradient descent on the mean token cross-entropy, then degrades
/// it: each text symbol's first-step distribution p becomes
/// (1 - p_noise) * p + p_noise / V, written back as emit logits with the
/// transition weights and bias reset to zero.
ToyPolicy pretrain_supervised(const ToyPolicy& init, const ToyWorld& world,
                              const PretrainConfig& config);

}  // namespace w3ar
