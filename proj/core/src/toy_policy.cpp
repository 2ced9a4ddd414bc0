#include "w3ar/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "w3ar/error.hpp"
#include "w3ar/grpo.hpp"

namespace w3ar {

ToyPolicy::ToyPolicy(std::size_t n_text_symbols, std::size_t n_acoustic_symbols)
    : n_text_(n_text_symbols),
      n_ac_(n_acoustic_symbols),
      params_(n_text_symbols * n_acoustic_symbols + n_acoustic_symbols * n_acoustic_symbols +
                  n_acoustic_symbols,
              0.0) {}

void ToyPolicy::axpy(double scale, const ToyPolicy& other) {
  if (!same_shape(other)) {
    throw Error(ErrorCode::ShapeMismatch, "policies differ in shape");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += scale * other.params_[i];
}

double ToyPolicy::max_abs() const {
  double m = 0.0;
  for (double p : params_) m = std::max(m, std::abs(p));
  return m;
}

std::vector<double> policy_logits(const ToyPolicy& policy, const StepContext& ctx) {
  const std::size_t V = policy.n_acoustic_symbols();
  if (ctx.text_symbol >= policy.n_text_symbols() || (ctx.prev && *ctx.prev >= V)) {
    throw Error(ErrorCode::SymbolOutOfRange, "step context outside the policy's alphabets");
  }
  std::vector<double> logits(V);
  for (std::size_t k = 0; k < V; ++k) {
    logits[k] = policy.emit(ctx.text_symbol, k) + policy.bias(k);
    if (ctx.prev) logits[k] += policy.trans(*ctx.prev, k);
  }
  return logits;
}

std::vector<StepContext> step_contexts(const TextSeq& text, const AcousticSeq& tokens,
                                       std::size_t tokens_per_word) {
  if (tokens.size() != text.size() * tokens_per_word) {
    std::ostringstream msg;
    msg << tokens.size() << " tokens do not follow the fixed-rate schedule for " << text.size()
        << " words x " << tokens_per_word;
    throw Error(ErrorCode::ShapeMismatch, msg.str());
  }
  std::vector<StepContext> ctx(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    ctx[t].text_symbol = text[t / tokens_per_word];
    if (t > 0) ctx[t].prev = tokens[t - 1];
  }
  return ctx;
}

void scatter_logit_grad(const StepContext& ctx, std::span<const double> dlogits, ToyPolicy& grad) {
  for (std::size_t k = 0; k < dlogits.size(); ++k) {
    grad.emit(ctx.text_symbol, k) += dlogits[k];
    grad.bias(k) += dlogits[k];
    if (ctx.prev) grad.trans(*ctx.prev, k) += dlogits[k];
  }
}

std::size_t sample_categorical(std::span<const double> logits, double temperature, double top_p,
                               Rng& rng) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  if (temperature < 1e-6) {
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) -
                                    logits.begin());
  }
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& l : scaled) l /= temperature;
  const auto p = softmax(scaled);

  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t kept = p.size();
  if (top_p < 1.0) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    double cum = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      cum += p[order[i]];
      if (cum >= top_p) {
        kept = i + 1;
        break;
      }
    }
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < kept; ++i) mass += p[order[i]];
  double u = rng.uniform() * mass;
  for (std::size_t i = 0; i < kept; ++i) {
    u -= p[order[i]];
    if (u < 0.0) return order[i];
  }
  return order[kept - 1];
}

SampledSequence policy_sample(const ToyPolicy& policy, const ToyWorld& world, const TextSeq& text,
                              double temperature, double top_p, Rng& rng) {
  const std::size_t L = world.tokens_per_word();
  SampledSequence out;
  out.tokens.reserve(text.size() * L);
  out.logprobs.reserve(text.size() * L);
  StepContext ctx;
  for (std::size_t t = 0; t < text.size() * L; ++t) {
    ctx.text_symbol = text[t / L];
    const auto logits = policy_logits(policy, ctx);
    const std::size_t a = sample_categorical(logits, temperature, top_p, rng);
    out.tokens.push_back(a);
    out.logprobs.push_back(log_softmax(logits)[a]);
    ctx.prev = a;
  }
  return out;
}

ToyPolicy grad_logprob(const ToyPolicy& policy, const TextSeq& text, const AcousticSeq& tokens,
                       std::size_t tokens_per_word) {
  ToyPolicy grad(policy.n_text_symbols(), policy.n_acoustic_symbols());
  const auto ctx = step_contexts(text, tokens, tokens_per_word);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto d = softmax(policy_logits(policy, ctx[t]));
    for (double& v : d) v = -v;
    d[tokens[t]] += 1.0;
    scatter_logit_grad(ctx[t], d, grad);
  }
  return grad;
}

double sequence_logprob(const ToyPolicy& policy, const TextSeq& text, const AcousticSeq& tokens,
                        std::size_t tokens_per_word) {
  const auto ctx = step_contexts(text, tokens, tokens_per_word);
  double total = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    total += log_softmax(policy_logits(policy, ctx[t]))[tokens[t]];
  }
  return total;
}

ToyPolicy pretrain_supervised(const ToyPolicy& init, const ToyWorld& world,
                              const PretrainConfig& config) {
  if (!(config.p_noise >= 0.0 && config.p_noise < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "p_noise must lie in [0, 1)");
  }
  if (init.n_text_symbols() != world.n_text_symbols() ||
      init.n_acoustic_symbols() != world.n_acoustic_symbols()) {
    throw Error(ErrorCode::ShapeMismatch, "policy does not match the world's alphabets");
  }
  const std::size_t L = world.tokens_per_word();

  std::vector<std::pair<TextSeq, AcousticSeq>> data;
  std::size_t n_tokens = 0;
  for (const auto& text : world.train_texts()) {
    data.emplace_back(text, render_clean(world, text));
    n_tokens += data.back().second.size();
  }

  ToyPolicy policy = init;
  if (n_tokens > 0) {
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      ToyPolicy grad(policy.n_text_symbols(), policy.n_acoustic_symbols());
      for (const auto& [text, clean] : data) grad.axpy(1.0, grad_logprob(policy, text, clean, L));
      // Ascent on the mean log-likelihood.
      policy.axpy(config.learning_rate / static_cast<double>(n_tokens), grad);
    }
  }

  const std::size_t V = policy.n_acoustic_symbols();
  ToyPolicy degraded(policy.n_text_symbols(), V);
  for (std::size_t m = 0; m < policy.n_text_symbols(); ++m) {
    const auto p = softmax(policy_logits(policy, {m, std::nullopt}));
    for (std::size_t k = 0; k < V; ++k) {
      degraded.emit(m, k) =
          std::log((1.0 - config.p_noise) * p[k] + config.p_noise / static_cast<double>(V));
    }
  }
  return degraded;
}

}  // namespace w3ar
