#include "w3ar/toy_world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "w3ar/error.hpp"
#include "w3ar/grpo.hpp"

namespace w3ar {

namespace {

enum StreamTag : std::uint64_t {
  kEmbeddingStream = 1,
  kCanonicalStream = 2,
  kTextStream = 3,
};

void normalize_row(std::span<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}

// Gaussian rows made unit length; Gram-Schmidt when they can be orthogonal.
Matrix unit_embeddings(std::size_t n, std::size_t dim, Rng& rng) {
  Matrix e(n, dim);
  for (double& x : e.data()) x = rng.normal();
  const bool orthogonalize = n <= dim;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = e.row(i);
    if (orthogonalize) {
      for (std::size_t k = 0; k < i; ++k) {
        const auto prev = e.row(k);
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += row[j] * prev[j];
        for (std::size_t j = 0; j < dim; ++j) row[j] -= dot * prev[j];
      }
    }
    normalize_row(row);
  }
  return e;
}

void check_symbols(const ToyWorld& world, const TextSeq& text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] >= world.n_text_symbols()) {
      std::ostringstream msg;
      msg << "text symbol " << text[i] << " at position " << i << " (alphabet has "
          << world.n_text_symbols() << ")";
      throw Error(ErrorCode::SymbolOutOfRange, msg.str());
    }
  }
}

void check_acoustic(const ToyWorld& world, const AcousticSeq& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] >= world.n_acoustic_symbols()) {
      std::ostringstream msg;
      msg << "acoustic symbol " << seq[i] << " at position " << i << " (alphabet has "
          << world.n_acoustic_symbols() << ")";
      throw Error(ErrorCode::SymbolOutOfRange, msg.str());
    }
  }
}

}  // namespace

void ToyWorldConfig::validate() const {
  if (n_text_symbols == 0 || n_acoustic_symbols < n_text_symbols) {
    throw Error(ErrorCode::InvalidArgument,
                "need 1 <= n_text_symbols <= n_acoustic_symbols");
  }
  if (tokens_per_word == 0 || frames_per_acoustic_token == 0 || embed_dim == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "tokens_per_word, frames_per_acoustic_token and embed_dim must be >= 1");
  }
  if (!(sharpness >= 0.0) || !std::isfinite(sharpness)) {
    throw Error(ErrorCode::InvalidArgument, "sharpness must be a nonnegative real");
  }
  if (words_per_utterance == 0 || words_per_utterance > n_text_symbols) {
    throw Error(ErrorCode::InvalidArgument,
                "words_per_utterance must lie in [1, n_text_symbols]");
  }
}

ToyWorld::ToyWorld(ToyWorldConfig config) : config_(config) {
  config_.validate();

  Rng embed_rng(Rng::mix(config_.seed, kEmbeddingStream));
  acoustic_embeddings_ =
      unit_embeddings(config_.n_acoustic_symbols, config_.embed_dim, embed_rng);

  Rng canon_rng(Rng::mix(config_.seed, kCanonicalStream));
  std::vector<std::size_t> perm(config_.n_acoustic_symbols);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[canon_rng.below(i)]);
  }
  canonical_.assign(perm.begin(), perm.begin() + static_cast<long>(config_.n_text_symbols));

  text_embeddings_ = Matrix(config_.n_text_symbols, config_.embed_dim);
  for (std::size_t m = 0; m < config_.n_text_symbols; ++m) {
    const auto src = acoustic_embeddings_.row(canonical_[m]);
    std::copy(src.begin(), src.end(), text_embeddings_.row(m).begin());
  }

  // Distinct texts for train and eval, drawn until both sets fill or the
  // space of utterances runs out.
  Rng text_rng(Rng::mix(config_.seed, kTextStream));
  std::set<TextSeq> seen;
  const std::size_t wanted = config_.n_train_texts + config_.n_eval_texts;
  double space = 1.0;
  for (std::size_t k = 0; k < config_.words_per_utterance; ++k) {
    space *= static_cast<double>(config_.n_text_symbols - k);
  }
  const std::size_t reachable =
      static_cast<std::size_t>(std::min(space, static_cast<double>(wanted)));
  while (seen.size() < reachable) {
    TextSeq text = random_text(config_.words_per_utterance, text_rng);
    if (!seen.insert(text).second) continue;
    if (train_texts_.size() < config_.n_train_texts) {
      train_texts_.push_back(std::move(text));
    } else {
      eval_texts_.push_back(std::move(text));
    }
  }
}

std::size_t ToyWorld::canonical(std::size_t text_symbol) const {
  if (text_symbol >= canonical_.size()) {
    throw Error(ErrorCode::SymbolOutOfRange,
                "text symbol " + std::to_string(text_symbol) + " has no canonical rendering");
  }
  return canonical_[text_symbol];
}

TextSeq ToyWorld::random_text(std::size_t n_words, Rng& rng) const {
  if (n_words > config_.n_text_symbols) {
    throw Error(ErrorCode::InvalidArgument, "cannot draw more distinct words than symbols");
  }
  std::vector<std::size_t> pool(config_.n_text_symbols);
  std::iota(pool.begin(), pool.end(), 0);
  TextSeq text(n_words);
  for (std::size_t i = 0; i < n_words; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    text[i] = pool[i];
  }
  return text;
}

AcousticSeq render_clean(const ToyWorld& world, const TextSeq& text) {
  check_symbols(world, text);
  const std::size_t L = world.tokens_per_word();
  AcousticSeq seq;
  seq.reserve(text.size() * L);
  for (std::size_t m : text) seq.insert(seq.end(), L, world.canonical(m));
  return seq;
}

std::string_view to_string(ArtifactKind kind) noexcept {
  switch (kind) {
    case ArtifactKind::Substitution: return "substitution";
    case ArtifactKind::Stutter: return "stutter";
    case ArtifactKind::Swap: return "swap";
  }
  return "unknown";
}

AcousticSeq inject_artifact(const ToyWorld& world, const TextSeq& text, const AcousticSeq& seq,
                            const Artifact& artifact, Rng& rng) {
  check_symbols(world, text);
  const std::size_t L = world.tokens_per_word();
  if (seq.size() != L * text.size()) {
    std::ostringstream msg;
    msg << "sequence has " << seq.size() << " tokens, expected " << L * text.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  const std::size_t w = artifact.target_word;
  if (w >= text.size()) {
    throw Error(ErrorCode::TargetOutOfRange, "target word " + std::to_string(w) +
                                                 " of a " + std::to_string(text.size()) +
                                                 "-word utterance");
  }
  const auto begin = seq.begin() + static_cast<long>(w * L);
  const auto end = begin + static_cast<long>(L);

  AcousticSeq out;
  switch (artifact.kind) {
    case ArtifactKind::Substitution: {
      out = seq;
      const std::size_t canon = world.canonical(text[w]);
      const std::size_t V = world.n_acoustic_symbols();
      for (std::size_t k = 0; k < L; ++k) {
        std::size_t s = rng.below(V - 1);
        if (s >= canon) ++s;  // skip the canonical symbol
        out[w * L + k] = s;
      }
      break;
    }
    case ArtifactKind::Stutter: {
      out.assign(seq.begin(), end);
      out.insert(out.end(), begin, end);
      out.insert(out.end(), end, seq.end());
      break;
    }
    case ArtifactKind::Swap: {
      if (w + 1 >= text.size()) {
        throw Error(ErrorCode::TargetOutOfRange, "swap needs a successor to word " +
                                                     std::to_string(w));
      }
      out.assign(seq.begin(), begin);
      out.insert(out.end(), end, end + static_cast<long>(L));
      out.insert(out.end(), begin, end);
      out.insert(out.end(), end + static_cast<long>(L), seq.end());
      break;
    }
  }
  return out;
}

AttentionMap toy_attention(const ToyWorld& world, const TextSeq& text, const AcousticSeq& seq) {
  check_symbols(world, text);
  check_acoustic(world, seq);
  if (text.empty() || seq.empty()) {
    throw Error(ErrorCode::EmptyMatrix, "toy attention needs nonempty text and audio");
  }
  const auto& cfg = world.config();
  const std::size_t F = cfg.frames_per_acoustic_token;
  const double scale = cfg.sharpness / std::sqrt(static_cast<double>(cfg.embed_dim));
  const auto& te = world.text_embeddings();
  const auto& ae = world.acoustic_embeddings();

  Matrix weights(text.size(), seq.size() * F);
  std::vector<double> logits(seq.size() * F);
  for (std::size_t t = 0; t < text.size(); ++t) {
    const auto q = te.row(text[t]);
    for (std::size_t a = 0; a < seq.size(); ++a) {
      const auto k = ae.row(seq[a]);
      double dot = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) dot += q[j] * k[j];
      std::fill_n(logits.begin() + static_cast<long>(a * F), F, scale * dot);
    }
    const auto p = softmax(logits);
    std::copy(p.begin(), p.end(), weights.row(t).begin());
  }
  return validate_attention(std::move(weights), kInternalTolerance);
}

double toy_word_mismatch_rate(const ToyWorld& world, const TextSeq& text,
                              const AcousticSeq& seq) {
  check_symbols(world, text);
  const std::size_t L = world.tokens_per_word();
  if (seq.size() != L * text.size()) {
    std::ostringstream msg;
    msg << "sequence has " << seq.size() << " tokens, expected " << L * text.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  if (text.empty()) return 0.0;

  std::size_t mismatched = 0;
  std::vector<std::size_t> counts(world.n_acoustic_symbols());
  for (std::size_t w = 0; w < text.size(); ++w) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t s = seq[w * L + k];
      if (s < counts.size()) ++counts[s];
    }
    const std::size_t canon = world.canonical(text[w]);
    const std::size_t best = *std::max_element(counts.begin(), counts.end());
    const auto n_best = std::count(counts.begin(), counts.end(), best);
    if (counts[canon] != best || n_best > 1) ++mismatched;
  }
  return static_cast<double>(mismatched) / static_cast<double>(text.size());
}

ArtifactSeparation measure_artifact_separation(const ToyWorld& world, const RewardConfig& reward,
                                               std::size_t n, std::uint64_t seed) {
  ArtifactSeparation out;
  out.n_utterances = n;
  if (n == 0) return out;

  Rng rng(seed);
  const std::size_t n_words = world.config().words_per_utterance;
  std::size_t clean_ok = 0;
  std::size_t swap_neg = 0;
  std::size_t swap_done = 0;

  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };

  for (std::size_t u = 0; u < n; ++u) {
    const TextSeq text = world.random_text(n_words, rng);
    const AcousticSeq clean = render_clean(world, text);
    const TokenRewards clean_tok = token_rewards(toy_attention(world, text, clean), reward);
    out.clean_mean_purity += mean(clean_tok.purity);
    out.clean_mean_mono += mean(clean_tok.monotonicity);
    if (std::all_of(clean_tok.monotonicity.begin(), clean_tok.monotonicity.end(),
                    [](double m) { return m >= 0.0; })) {
      ++clean_ok;
    }

    const std::size_t sub_target = rng.below(n_words);
    const AcousticSeq sub =
        inject_artifact(world, text, clean, {ArtifactKind::Substitution, sub_target}, rng);
    const TokenRewards sub_tok = token_rewards(toy_attention(world, text, sub), reward);
    out.substitution_mean_purity += mean(sub_tok.purity);
    out.substitution_mean_mono += mean(sub_tok.monotonicity);
    out.target_clean_purity += clean_tok.purity[sub_target];
    out.target_substituted_purity += sub_tok.purity[sub_target];

    const std::size_t stutter_target = rng.below(n_words);
    const AcousticSeq stut =
        inject_artifact(world, text, clean, {ArtifactKind::Stutter, stutter_target}, rng);
    const TokenRewards stut_tok = token_rewards(toy_attention(world, text, stut), reward);
    out.stutter_mean_purity += mean(stut_tok.purity);
    out.stutter_mean_mono += mean(stut_tok.monotonicity);

    if (n_words >= 2) {
      const std::size_t swap_target = rng.below(n_words - 1);
      const AcousticSeq swp =
          inject_artifact(world, text, clean, {ArtifactKind::Swap, swap_target}, rng);
      const TokenRewards swap_tok = token_rewards(toy_attention(world, text, swp), reward);
      out.swap_mean_purity += mean(swap_tok.purity);
      out.swap_mean_mono += mean(swap_tok.monotonicity);
      if (std::any_of(swap_tok.monotonicity.begin(), swap_tok.monotonicity.end(),
                      [](double m) { return m < 0.0; })) {
        ++swap_neg;
      }
      ++swap_done;
    }
  }

  const double dn = static_cast<double>(n);
  for (double* v : {&out.clean_mean_purity, &out.substitution_mean_purity,
                    &out.stutter_mean_purity, &out.clean_mean_mono, &out.substitution_mean_mono,
                    &out.stutter_mean_mono, &out.target_clean_purity,
                    &out.target_substituted_purity}) {
    *v /= dn;
  }
  if (swap_done > 0) {
    out.swap_mean_purity /= static_cast<double>(swap_done);
    out.swap_mean_mono /= static_cast<double>(swap_done);
    out.swap_negative_fraction = static_cast<double>(swap_neg) / static_cast<double>(swap_done);
  }
  out.clean_nonnegative_fraction = static_cast<double>(clean_ok) / dn;
  return out;
}

}  // namespace w3ar
