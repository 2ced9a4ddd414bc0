#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "w3ar/attention.hpp"
#include "w3ar/matrix.hpp"
#include "w3ar/reward.hpp"
#include "w3ar/rng.hpp"

namespace w3ar {

using TextSeq = std::vector<std::size_t>;
using AcousticSeq = std::vector<std::size_t>;

struct ToyWorldConfig {
  std::size_t n_text_symbols = 8;
  std::size_t n_acoustic_symbols = 16;
  std::size_t tokens_per_word = 3;
  std::size_t frames_per_acoustic_token = 1;
  std::size_t embed_dim = 16;
  double sharpness = 10.0;
  std::uint64_t seed = 42;

  std::size_t words_per_utterance = 5;
  std::size_t n_train_texts = 64;
  std::size_t n_eval_texts = 32;

  void validate() const;
};

/// Synthetic stand-in for a TTS/ASR pair.
///
/// Text symbols and acoustic symbols live in a shared embedding space. Each
/// text symbol m has a canonical acoustic symbol c(m); the text embedding of m
/// equals the acoustic embedding of c(m), and acoustic embeddings are unit
/// vectors (orthonormal whenever n_acoustic_symbols <= embed_dim). Attention
/// between a text token and a frame is a softmax over scaled dot products, so
/// a text token attends to the frames carrying its canonical symbol.
///
/// Everything here is a pure function of the config, seed included.
class ToyWorld {
 public:
  explicit ToyWorld(ToyWorldConfig config);

  const ToyWorldConfig& config() const noexcept { return config_; }
  std::size_t n_text_symbols() const noexcept { return config_.n_text_symbols; }
  std::size_t n_acoustic_symbols() const noexcept { return config_.n_acoustic_symbols; }
  std::size_t tokens_per_word() const noexcept { return config_.tokens_per_word; }

  const Matrix& text_embeddings() const noexcept { return text_embeddings_; }
  const Matrix& acoustic_embeddings() const noexcept { return acoustic_embeddings_; }
  std::size_t canonical(std::size_t text_symbol) const;

  /// Disjoint sets of utterances with distinct symbols within each utterance.
  const std::vector<TextSeq>& train_texts() const noexcept { return train_texts_; }
  const std::vector<TextSeq>& eval_texts() const noexcept { return eval_texts_; }

  /// Uniformly random utterance of `n_words` distinct text symbols.
  TextSeq random_text(std::size_t n_words, Rng& rng) const;

 private:
  ToyWorldConfig config_;
  Matrix text_embeddings_;
  Matrix acoustic_embeddings_;
  std::vector<std::size_t> canonical_;
  std::vector<TextSeq> train_texts_;
  std::vector<TextSeq> eval_texts_;
};

/// Each text symbol becomes L copies of its canonical acoustic symbol.
AcousticSeq render_clean(const ToyWorld& world, const TextSeq& text);

enum class ArtifactKind { Substitution, Stutter, Swap };

std::string_view to_string(ArtifactKind kind) noexcept;

struct Artifact {
  ArtifactKind kind = ArtifactKind::Substitution;
  std::size_t target_word = 0;
};

/// Corrupts one word of a clean rendering.
///
/// Substitution redraws the word's L tokens uniformly from the symbols other
/// than the word's canonical one; Stutter repeats the word's span in place;
/// Swap exchanges the spans of the target word and the next one.
/// Throws TargetOutOfRange for a target past the end (or the last word, for
/// Swap) and LengthMismatch when `seq` is not L tokens per word.
AcousticSeq inject_artifact(const ToyWorld& world, const TextSeq& text, const AcousticSeq& seq,
                            const Artifact& artifact, Rng& rng);

/// Teacher-forced attention of `text` over the frames of `seq`.
///
/// Row t is softmax_j(sharpness * <e_text(text[t]), e_ac(frame j)> / sqrt(d)),
/// with each acoustic token spanning frames_per_acoustic_token frames.
AttentionMap toy_attention(const ToyWorld& world, const TextSeq& text, const AcousticSeq& seq);

/// Fraction of words whose most frequent acoustic symbol is not the canonical
/// one. A tie for most frequent counts as a mismatch.
double toy_word_mismatch_rate(const ToyWorld& world, const TextSeq& text, const AcousticSeq& seq);

/// Statistics separating clean renderings from injected artifacts.
struct ArtifactSeparation {
  std::size_t n_utterances = 0;
  // Mean token purity per condition (all words).
  double clean_mean_purity = 0.0;
  double substitution_mean_purity = 0.0;
  double stutter_mean_purity = 0.0;
  double swap_mean_purity = 0.0;
  // Mean monotonicity per condition (all tokens).
  double clean_mean_mono = 0.0;
  double substitution_mean_mono = 0.0;
  double stutter_mean_mono = 0.0;
  double swap_mean_mono = 0.0;
  // Purity of the substituted word vs the same word rendered cleanly.
  double target_clean_purity = 0.0;
  double target_substituted_purity = 0.0;
  double swap_negative_fraction = 0.0;     // utterances with any mono < 0
  double clean_nonnegative_fraction = 0.0;  // utterances with all mono >= 0

  double substitution_margin() const { return target_clean_purity - target_substituted_purity; }
};

/// Scores `n` random utterances plus one Substitution, Stutter and Swap variant
/// of each (targets drawn uniformly). All randomness comes from `seed`.
ArtifactSeparation measure_artifact_separation(const ToyWorld& world, const RewardConfig& reward,
                                               std::size_t n, std::uint64_t seed);

}  // namespace w3ar
