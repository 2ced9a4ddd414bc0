#include "w3ar/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "w3ar/error.hpp"

namespace w3ar {

void OptimizerConfig::validate() const {
  if (group_size < 2) {
    throw Error(ErrorCode::GroupTooSmall, "group_size must be at least 2");
  }
  if (!(gamma_kl >= 0.0) || !(gamma_sup >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma_kl and gamma_sup must be nonnegative");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
  }
  if (!(sampling_temperature > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sampling_temperature must be positive");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "top_p must lie in (0, 1]");
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - mx);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double log_z = mx + std::log(z);
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - log_z;
  return out;
}

double categorical_kl(std::span<const double> p_logits, std::span<const double> q_logits) {
  if (p_logits.size() != q_logits.size()) {
    throw Error(ErrorCode::ShapeMismatch, "categorical_kl: logit vectors differ in length");
  }
  const auto log_p = log_softmax(p_logits);
  const auto log_q = log_softmax(q_logits);
  double kl = 0.0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    const double p = std::exp(log_p[k]);
    if (p > 0.0) kl += p * (log_p[k] - log_q[k]);
  }
  return std::max(kl, 0.0);
}

AdvantageMatrix word_advantages(const GroupBatch& batch) {
  const std::size_t n = batch.size();
  if (n < 2) {
    throw Error(ErrorCode::GroupTooSmall,
                "group has " + std::to_string(n) + " samples, need at least 2");
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (batch.samples[s].word_rewards.size() != batch.n_words) {
      std::ostringstream msg;
      msg << "sample " << s << " has " << batch.samples[s].word_rewards.size()
          << " word rewards, batch declares " << batch.n_words;
      throw Error(ErrorCode::WordCountMismatch, msg.str());
    }
  }

  AdvantageMatrix adv(n, batch.n_words);
  for (std::size_t i = 0; i < batch.n_words; ++i) {
    const double first = batch.samples.front().word_rewards[i];
    bool degenerate = true;
    double mean = 0.0;
    for (const auto& s : batch.samples) {
      mean += s.word_rewards[i];
      degenerate = degenerate && s.word_rewards[i] == first;
    }
    // A zero-variance word carries no signal; keep its advantages exactly zero
    // rather than leaving rounding residue from the mean.
    if (degenerate) continue;
    mean /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) adv(s, i) = batch.samples[s].word_rewards[i] - mean;
  }
  return adv;
}

double rl_loss(const GroupBatch& batch, const AdvantageMatrix& advantages) {
  if (advantages.rows() != batch.size() || advantages.cols() != batch.n_words) {
    throw Error(ErrorCode::ShapeMismatch, "advantage matrix does not match the batch");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& s = batch.samples[n];
    if (s.logprobs.size() != s.word_of_token.size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "sample " + std::to_string(n) + ": logprobs and word_of_token differ");
    }
    for (std::size_t t = 0; t < s.logprobs.size(); ++t) {
      const std::size_t w = s.word_of_token[t];
      if (w >= batch.n_words) {
        throw Error(ErrorCode::ShapeMismatch,
                    "sample " + std::to_string(n) + ": word index out of range");
      }
      total += advantages(n, w) * s.logprobs[t];
    }
  }
  return -total / static_cast<double>(batch.size());
}

double kl_penalty(const Matrix& theta_logits, const Matrix& ref_logits,
                  KlDirection direction) {
  if (theta_logits.rows() != ref_logits.rows() || theta_logits.cols() != ref_logits.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "theta and reference logits differ in shape");
  }
  if (theta_logits.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < theta_logits.rows(); ++r) {
    total += direction == KlDirection::RefToPolicy
                 ? categorical_kl(ref_logits.row(r), theta_logits.row(r))
                 : categorical_kl(theta_logits.row(r), ref_logits.row(r));
  }
  return total / static_cast<double>(theta_logits.rows());
}

double total_loss(double l_rl, double l_kl, double l_sup, const OptimizerConfig& config) {
  return l_rl + config.gamma_kl * l_kl + config.gamma_sup * l_sup;
}

std::vector<std::size_t> fixed_rate_word_map(std::size_t n_words, std::size_t tokens_per_word) {
  if (tokens_per_word == 0) {
    throw Error(ErrorCode::InvalidArgument, "tokens_per_word must be at least 1");
  }
  std::vector<std::size_t> map(n_words * tokens_per_word);
  for (std::size_t t = 0; t < map.size(); ++t) map[t] = t / tokens_per_word;
  return map;
}

std::vector<std::size_t> attention_derived_word_map(const AttentionMap& map,
                                                    const TextWordMap& wmap,
                                                    std::size_t n_acoustic_tokens,
                                                    double frames_per_acoustic_token) {
  if (!(frames_per_acoustic_token > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "frames_per_acoustic_token must be positive");
  }
  if (wmap.token_to_word.empty() || map.n_text_tokens() == 0) {
    throw Error(ErrorCode::EmptyMap, "no text tokens to derive word positions from");
  }
  if (wmap.token_to_word.size() != map.n_text_tokens()) {
    std::ostringstream msg;
    msg << "word map covers " << wmap.token_to_word.size() << " tokens, attention has "
        << map.n_text_tokens() << " rows";
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  validate_word_map(wmap);

  const std::size_t n_words = wmap.n_words();
  std::vector<double> word_peak(n_words, 0.0);
  std::vector<bool> seen(n_words, false);
  for (std::size_t t = 0; t < wmap.token_to_word.size(); ++t) {
    const std::size_t w = wmap.token_to_word[t];
    if (!seen[w]) {
      word_peak[w] = static_cast<double>(attention_peak(map.row(t)));
      seen[w] = true;
    }
  }

  // boundary[i] separates word i from word i + 1.
  std::vector<double> boundary(n_words > 0 ? n_words - 1 : 0);
  for (std::size_t i = 0; i + 1 < n_words; ++i) {
    boundary[i] = 0.5 * (word_peak[i] + word_peak[i + 1]);
  }

  std::vector<std::size_t> out(n_acoustic_tokens);
  std::size_t running = 0;
  for (std::size_t t = 0; t < n_acoustic_tokens; ++t) {
    const double frame = static_cast<double>(t) * frames_per_acoustic_token;
    std::size_t word = n_words - 1;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      if (frame < boundary[i]) {
        word = i;
        break;
      }
    }
    running = std::max(running, word);
    out[t] = running;
  }
  return out;
}

}  // namespace w3ar
