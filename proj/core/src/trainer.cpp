#include "w3ar/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "w3ar/error.hpp"

namespace w3ar {

namespace {

enum StreamTag : std::uint64_t {
  kIterationStream = 11,
  kEvalStream = 12,
  kTextPickStream = 13,
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Reference logits at the positions the rollout visits, and the positions'
// contexts, flattened across samples in sample order.
struct Positions {
  std::vector<StepContext> ctx;
  std::vector<std::size_t> sample;
  std::vector<std::size_t> token;
};

Positions rollout_positions(const GroupRollout& rollout, std::size_t L) {
  Positions pos;
  for (std::size_t n = 0; n < rollout.batch.size(); ++n) {
    const auto& tokens = rollout.batch.samples[n].tokens;
    auto ctx = step_contexts(rollout.text, tokens, L);
    for (std::size_t t = 0; t < ctx.size(); ++t) {
      pos.ctx.push_back(ctx[t]);
      pos.sample.push_back(n);
      pos.token.push_back(t);
    }
  }
  return pos;
}

Matrix logits_at(const ToyPolicy& policy, const std::vector<StepContext>& ctx) {
  Matrix out(ctx.size(), policy.n_acoustic_symbols());
  for (std::size_t r = 0; r < ctx.size(); ++r) {
    const auto l = policy_logits(policy, ctx[r]);
    std::copy(l.begin(), l.end(), out.row(r).begin());
  }
  return out;
}

double rollout_kl(const ToyPolicy& policy, const ToyPolicy& reference,
                  const GroupRollout& rollout, std::size_t L, KlDirection direction) {
  const Positions pos = rollout_positions(rollout, L);
  return kl_penalty(logits_at(policy, pos.ctx), logits_at(reference, pos.ctx), direction);
}

// d KL / d theta_logits for one position.
std::vector<double> kl_logit_grad(std::span<const double> theta_logits,
                                  std::span<const double> ref_logits, KlDirection direction) {
  const auto p = softmax(theta_logits);
  std::vector<double> g(p.size());
  if (direction == KlDirection::RefToPolicy) {
    const auto q = softmax(ref_logits);
    for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] - q[k];
  } else {
    const auto log_p = log_softmax(theta_logits);
    const auto log_q = log_softmax(ref_logits);
    double kl = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) kl += p[k] * (log_p[k] - log_q[k]);
    for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] * (log_p[k] - log_q[k] - kl);
  }
  return g;
}

}  // namespace

GroupRollout sample_group(const ToyPolicy& policy, const ToyWorld& world,
                          const RewardConfig& reward, const TextSeq& text,
                          const OptimizerConfig& config, std::uint64_t seed) {
  const std::size_t L = world.tokens_per_word();
  const TextWordMap wmap = TextWordMap::identity(text.size());
  GroupRollout out;
  out.text = text;
  out.batch.n_words = text.size();
  out.batch.samples.resize(config.group_size);

  // Each member is independent given its stream; the reductions below run in
  // sample order.
  std::vector<TokenRewards> scored(config.group_size);
  for (std::size_t n = 0; n < config.group_size; ++n) {
    Rng rng(Rng::mix(seed, n));
    auto drawn = policy_sample(policy, world, text, config.sampling_temperature, config.top_p, rng);
    auto& s = out.batch.samples[n];
    s.tokens = std::move(drawn.tokens);
    s.logprobs = std::move(drawn.logprobs);
    s.word_of_token = fixed_rate_word_map(text.size(), L);
    scored[n] = token_rewards(toy_attention(world, text, s.tokens), reward);
    s.word_rewards = word_rewards(scored[n], wmap);
  }

  for (std::size_t n = 0; n < config.group_size; ++n) {
    out.mean_reward += mean_of(out.batch.samples[n].word_rewards);
    out.mean_purity += mean_of(scored[n].purity);
    out.mean_mono += mean_of(scored[n].monotonicity);
    out.mismatch_rate += toy_word_mismatch_rate(world, text, out.batch.samples[n].tokens);
  }
  const double dn = static_cast<double>(config.group_size);
  out.mean_reward /= dn;
  out.mean_purity /= dn;
  out.mean_mono /= dn;
  out.mismatch_rate /= dn;
  out.advantages = word_advantages(out.batch);
  return out;
}

LossBreakdown surrogate_loss(const ToyPolicy& policy, const ToyPolicy& reference,
                             const ToyWorld& world, const GroupRollout& rollout,
                             const OptimizerConfig& config) {
  const std::size_t L = world.tokens_per_word();
  GroupBatch current = rollout.batch;
  for (auto& s : current.samples) {
    const auto ctx = step_contexts(rollout.text, s.tokens, L);
    for (std::size_t t = 0; t < ctx.size(); ++t) {
      s.logprobs[t] = log_softmax(policy_logits(policy, ctx[t]))[s.tokens[t]];
    }
  }

  LossBreakdown out;
  out.rl = rl_loss(current, rollout.advantages);
  out.kl = rollout_kl(policy, reference, rollout, L, config.kl_direction);
  if (config.gamma_sup > 0.0) {
    const AcousticSeq clean = render_clean(world, rollout.text);
    out.sup = -sequence_logprob(policy, rollout.text, clean, L) / static_cast<double>(clean.size());
  }
  out.total = total_loss(out.rl, out.kl, out.sup, config);
  return out;
}

ToyPolicy surrogate_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                             const ToyWorld& world, const GroupRollout& rollout,
                             const OptimizerConfig& config) {
  const std::size_t L = world.tokens_per_word();
  const std::size_t N = rollout.batch.size();
  ToyPolicy grad(policy.n_text_symbols(), policy.n_acoustic_symbols());
  const Positions pos = rollout_positions(rollout, L);
  const double kl_scale =
      pos.ctx.empty() ? 0.0 : config.gamma_kl / static_cast<double>(pos.ctx.size());

  for (std::size_t r = 0; r < pos.ctx.size(); ++r) {
    const std::size_t n = pos.sample[r];
    const std::size_t t = pos.token[r];
    const auto& s = rollout.batch.samples[n];
    const auto logits = policy_logits(policy, pos.ctx[r]);
    const auto p = softmax(logits);

    // -(A / N) * (onehot(a_t) - p)
    const double coeff = -rollout.advantages(n, s.word_of_token[t]) / static_cast<double>(N);
    std::vector<double> d(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) d[k] = -coeff * p[k];
    d[s.tokens[t]] += coeff;

    if (kl_scale > 0.0) {
      const auto ref_logits = policy_logits(reference, pos.ctx[r]);
      const auto g = kl_logit_grad(logits, ref_logits, config.kl_direction);
      for (std::size_t k = 0; k < d.size(); ++k) d[k] += kl_scale * g[k];
    }
    scatter_logit_grad(pos.ctx[r], d, grad);
  }

  if (config.gamma_sup > 0.0) {
    const AcousticSeq clean = render_clean(world, rollout.text);
    grad.axpy(-config.gamma_sup / static_cast<double>(clean.size()),
              grad_logprob(policy, rollout.text, clean, L));
  }
  return grad;
}

EvalSummary evaluate(const ToyPolicy& policy, const ToyPolicy& reference, const ToyWorld& world,
                     const RewardConfig& reward, const OptimizerConfig& sampling,
                     const std::vector<TextSeq>& texts, std::size_t samples_per_text,
                     std::uint64_t seed) {
  EvalSummary out;
  const std::size_t L = world.tokens_per_word();
  std::size_t n_seqs = 0;
  std::size_t n_positions = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& text = texts[i];
    const TextWordMap wmap = TextWordMap::identity(text.size());
    for (std::size_t k = 0; k < samples_per_text; ++k) {
      Rng rng(Rng::mix(Rng::mix(seed, i), k));
      const auto drawn =
          policy_sample(policy, world, text, sampling.sampling_temperature, sampling.top_p, rng);
      const auto tok = token_rewards(toy_attention(world, text, drawn.tokens), reward);
      out.mismatch_rate += toy_word_mismatch_rate(world, text, drawn.tokens);
      out.mean_reward += mean_of(word_rewards(tok, wmap));
      out.mean_purity += mean_of(tok.purity);
      out.mean_mono += mean_of(tok.monotonicity);
      for (const auto& ctx : step_contexts(text, drawn.tokens, L)) {
        out.kl_to_ref +=
            categorical_kl(policy_logits(reference, ctx), policy_logits(policy, ctx));
        ++n_positions;
      }
      ++n_seqs;
    }
  }
  if (n_seqs > 0) {
    const double dn = static_cast<double>(n_seqs);
    out.mismatch_rate /= dn;
    out.mean_reward /= dn;
    out.mean_purity /= dn;
    out.mean_mono /= dn;
  }
  if (n_positions > 0) out.kl_to_ref /= static_cast<double>(n_positions);
  return out;
}

TrainResult train(ToyPolicy& policy, const ToyPolicy& reference, const ToyWorld& world,
                  const RewardConfig& reward, const OptimizerConfig& config,
                  const TrainOptions& options) {
  config.validate();
  reward.validate();
  if (!policy.same_shape(reference) || policy.n_text_symbols() != world.n_text_symbols() ||
      policy.n_acoustic_symbols() != world.n_acoustic_symbols()) {
    throw Error(ErrorCode::ShapeMismatch, "policy, reference and world disagree in shape");
  }
  const auto& texts = world.train_texts();
  const std::size_t L = world.tokens_per_word();
  if (texts.empty() && config.iterations > 0) {
    throw Error(ErrorCode::InvalidArgument, "world has no training texts");
  }

  TrainResult result;
  const std::uint64_t eval_seed = Rng::mix(config.seed, kEvalStream);
  result.initial = evaluate(policy, reference, world, reward, config, world.eval_texts(),
                            options.eval_samples_per_text, eval_seed);

  Rng pick(Rng::mix(config.seed, kTextPickStream));
  result.metrics.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const TextSeq& text = texts[pick.below(texts.size())];
    const std::uint64_t step_seed = Rng::mix(Rng::mix(config.seed, kIterationStream), it);
    const GroupRollout rollout = sample_group(policy, world, reward, text, config, step_seed);
    const LossBreakdown loss = surrogate_loss(policy, reference, world, rollout, config);

    IterationMetrics m;
    m.iteration = it;
    m.mean_reward = rollout.mean_reward;
    m.mean_purity = rollout.mean_purity;
    m.mean_mono = rollout.mean_mono;
    m.word_mismatch_rate = rollout.mismatch_rate;
    m.kl_to_ref = config.kl_direction == KlDirection::RefToPolicy
                      ? loss.kl
                      : rollout_kl(policy, reference, rollout, L, KlDirection::RefToPolicy);
    m.loss = loss.total;
    result.metrics.push_back(m);

    const ToyPolicy grad = surrogate_gradient(policy, reference, world, rollout, config);
    policy.axpy(-config.learning_rate, grad);
  }

  result.final = evaluate(policy, reference, world, reward, config, world.eval_texts(),
                          options.eval_samples_per_text, eval_seed);
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics) {
  out << "iteration,mean_reward,mean_purity,mean_mono,word_mismatch_rate,kl_to_ref,loss\n";
  char buf[256];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", m.iteration,
                  m.mean_reward, m.mean_purity, m.mean_mono, m.word_mismatch_rate, m.kl_to_ref,
                  m.loss);
    out << buf;
  }
}

void write_metrics_csv(const std::string& path, const std::vector<IterationMetrics>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  write_metrics_csv(out, metrics);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

}  // namespace w3ar
