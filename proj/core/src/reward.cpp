#include "w3ar/reward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "w3ar/error.hpp"

namespace w3ar {

void RewardConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidArgument, "beta must be a positive real");
  }
  if (!(lambda_purity >= 0.0) || !(lambda_mono >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "reward weights must be nonnegative");
  }
  if (!(lambda_purity + lambda_mono > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda_purity + lambda_mono must be positive");
  }
}

TextWordMap TextWordMap::identity(std::size_t n_tokens) {
  TextWordMap wmap;
  wmap.token_to_word.resize(n_tokens);
  wmap.words.resize(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) {
    wmap.token_to_word[i] = i;
    wmap.words[i] = "w" + std::to_string(i);
  }
  return wmap;
}

void validate_word_map(const TextWordMap& wmap) {
  const auto& map = wmap.token_to_word;
  if (map.empty()) {
    throw Error(ErrorCode::SchemaViolation, "token_to_word: must be nonempty");
  }
  if (map.front() != 0) {
    throw Error(ErrorCode::SchemaViolation, "token_to_word: must start at word 0");
  }
  for (std::size_t t = 1; t < map.size(); ++t) {
    if (map[t] < map[t - 1]) {
      std::ostringstream msg;
      msg << "token_to_word: decreases at token " << t;
      throw Error(ErrorCode::SchemaViolation, msg.str());
    }
    if (map[t] > map[t - 1] + 1) {
      std::ostringstream msg;
      msg << "token_to_word: skips word index " << map[t - 1] + 1 << " at token " << t;
      throw Error(ErrorCode::SchemaViolation, msg.str());
    }
  }
  if (!wmap.words.empty() && wmap.words.size() != wmap.n_words()) {
    std::ostringstream msg;
    msg << "words: has " << wmap.words.size() << " entries, token_to_word implies "
        << wmap.n_words();
    throw Error(ErrorCode::SchemaViolation, msg.str());
  }
}

std::size_t attention_peak(std::span<const double> row) {
  // std::max_element returns the first of equal maxima.
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double purity_reward(std::span<const double> row, std::size_t window_w) {
  const std::size_t peak = attention_peak(row);
  const std::size_t half = window_w / 2;
  const std::size_t lo = peak >= half ? peak - half : 0;
  const std::size_t hi = std::min(row.size() - 1, peak + half);
  double mass = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) mass += row[j];
  return std::clamp(mass, 0.0, 1.0);
}

double monotonicity_reward(std::size_t peak_t, std::size_t peak_prev, double beta) {
  const double delta = static_cast<double>(peak_t) - static_cast<double>(peak_prev);
  return std::tanh(beta * delta);
}

TokenRewards token_rewards(const AttentionMap& map, const RewardConfig& config) {
  config.validate();
  const std::size_t n = map.n_text_tokens();
  TokenRewards out;
  out.peaks.resize(n);
  out.purity.resize(n);
  out.monotonicity.resize(n);
  out.combined.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = map.row(t);
    out.peaks[t] = attention_peak(row);
    out.purity[t] = purity_reward(row, config.window_w);
    out.monotonicity[t] =
        t == 0 ? 0.0 : monotonicity_reward(out.peaks[t], out.peaks[t - 1], config.beta);
    out.combined[t] =
        config.lambda_purity * out.purity[t] + config.lambda_mono * out.monotonicity[t];
  }
  return out;
}

namespace {

void check_covers(const TokenRewards& tok, const TextWordMap& wmap) {
  if (wmap.token_to_word.size() != tok.size()) {
    std::ostringstream msg;
    msg << "word map covers " << wmap.token_to_word.size() << " tokens, rewards cover "
        << tok.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
}

}  // namespace

std::vector<double> word_rewards(const TokenRewards& tok, const TextWordMap& wmap) {
  check_covers(tok, wmap);
  const std::size_t n_words = wmap.n_words();
  std::vector<double> sum(n_words, 0.0);
  std::vector<std::size_t> count(n_words, 0);
  for (std::size_t t = 0; t < tok.size(); ++t) {
    const std::size_t w = wmap.token_to_word[t];
    if (w >= n_words) {
      throw Error(ErrorCode::LengthMismatch, "token_to_word is not nondecreasing");
    }
    sum[w] += tok.combined[t];
    ++count[w];
  }
  for (std::size_t w = 0; w < n_words; ++w) {
    if (count[w] == 0) {
      throw Error(ErrorCode::LengthMismatch, "word " + std::to_string(w) + " has no tokens");
    }
    sum[w] /= static_cast<double>(count[w]);
  }
  return sum;
}

std::vector<WordRewardRow> word_reward_report(const std::string& utterance_id,
                                              const TokenRewards& tok,
                                              const TextWordMap& wmap) {
  check_covers(tok, wmap);
  const auto rewards = word_rewards(tok, wmap);
  std::vector<WordRewardRow> rows(rewards.size());
  for (std::size_t w = 0; w < rows.size(); ++w) {
    rows[w].utterance_id = utterance_id;
    rows[w].word_index = w;
    rows[w].word = w < wmap.words.size() ? wmap.words[w] : "";
    rows[w].reward = rewards[w];
    rows[w].min_token_purity = 1.0;
  }
  for (std::size_t t = 0; t < tok.size(); ++t) {
    auto& row = rows[wmap.token_to_word[t]];
    ++row.n_tokens;
    row.purity += tok.purity[t];
    row.mono += tok.monotonicity[t];
    row.min_token_purity = std::min(row.min_token_purity, tok.purity[t]);
    row.has_regression = row.has_regression || tok.monotonicity[t] < 0.0;
  }
  for (auto& row : rows) {
    row.purity /= static_cast<double>(row.n_tokens);
    row.mono /= static_cast<double>(row.n_tokens);
  }
  return rows;
}

}  // namespace w3ar
