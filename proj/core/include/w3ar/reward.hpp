#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "w3ar/attention.hpp"

namespace w3ar {

struct RewardConfig {
  /// Purity window: frames j* - W/2 .. j* + W/2 (integer halves, inclusive).
  std::size_t window_w = 6;
  /// Monotonicity scale inside tanh.
  double beta = 0.1;
  double lambda_purity = 0.5;
  double lambda_mono = 0.5;

  /// Throws InvalidArgument unless beta > 0, both lambdas >= 0 and their sum > 0.
  void validate() const;
};

struct TokenRewards {
  std::vector<std::size_t> peaks;
  std::vector<double> purity;
  std::vector<double> monotonicity;  // [0] is always exactly 0
  std::vector<double> combined;

  std::size_t size() const noexcept { return peaks.size(); }
};

/// Maps text tokens onto words. token_to_word is nondecreasing, starts at 0
/// and has no gaps; `words` carries display strings only.
struct TextWordMap {
  std::vector<std::size_t> token_to_word;
  std::vector<std::string> words;

  std::size_t n_words() const noexcept {
    return token_to_word.empty() ? 0 : token_to_word.back() + 1;
  }

  /// One word per token, named "w0", "w1", ...
  static TextWordMap identity(std::size_t n_tokens);
};

/// Throws SchemaViolation if token_to_word is empty, does not start at 0,
/// decreases, or skips a word index; or if `words` is nonempty with the wrong
/// length.
void validate_word_map(const TextWordMap& wmap);

/// Index of the first maximum of `row`.
std::size_t attention_peak(std::span<const double> row);

/// Attention mass within [peak - W/2, peak + W/2], clipped to the row.
double purity_reward(std::span<const double> row, std::size_t window_w);

/// tanh(beta * (peak_t - peak_prev)).
double monotonicity_reward(std::size_t peak_t, std::size_t peak_prev, double beta);

TokenRewards token_rewards(const AttentionMap& map, const RewardConfig& config);

/// Mean combined reward of each word's tokens. Throws LengthMismatch when the
/// word map does not cover exactly the scored tokens.
std::vector<double> word_rewards(const TokenRewards& tok, const TextWordMap& wmap);

/// Per-word summary row, the unit written to report files.
struct WordRewardRow {
  std::string utterance_id;
  std::size_t word_index = 0;
  std::string word;
  std::size_t n_tokens = 0;
  double purity = 0.0;  // mean over the word's tokens
  double mono = 0.0;    // mean over the word's tokens
  double reward = 0.0;  // mean combined reward
  double min_token_purity = 0.0;
  bool has_regression = false;  // any token with monotonicity < 0
};

std::vector<WordRewardRow> word_reward_report(const std::string& utterance_id,
                                              const TokenRewards& tok,
                                              const TextWordMap& wmap);

}  // namespace w3ar
