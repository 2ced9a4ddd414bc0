#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "w3ar/matrix.hpp"

namespace w3ar {

/// Row-sum tolerance for maps read from model dumps (32-bit accumulation).
inline constexpr double kIngestionTolerance = 1e-4;
/// Row-sum tolerance for maps this library builds itself.
inline constexpr double kInternalTolerance = 1e-9;

class AttentionMap;

/// Checks the invariants and wraps `raw`.
///
/// Throws Error with EmptyMatrix, NonFiniteWeight, NegativeWeight or
/// RowNotNormalized. The RowNotNormalized message names the worst row and its
/// residual |sum - 1|.
AttentionMap validate_attention(Matrix raw, double tolerance = kIngestionTolerance,
                                std::optional<double> frame_hop_ms = std::nullopt);

/// Decoder-to-encoder cross-attention: one row per text token, one column per
/// encoder frame, each row a probability distribution over frames.
///
/// Instances only come out of validate_attention(), so every AttentionMap in
/// the program satisfies the row-stochastic invariant.
class AttentionMap {
 public:
  std::size_t n_text_tokens() const noexcept { return weights_.rows(); }
  std::size_t n_frames() const noexcept { return weights_.cols(); }
  const Matrix& weights() const noexcept { return weights_; }
  std::span<const double> row(std::size_t t) const { return weights_.row(t); }

  /// Milliseconds per encoder frame; metadata only.
  std::optional<double> frame_hop_ms() const noexcept { return frame_hop_ms_; }
  void set_frame_hop_ms(std::optional<double> hop) { frame_hop_ms_ = hop; }

  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;

 private:
  friend AttentionMap validate_attention(Matrix raw, double tolerance,
                                         std::optional<double> frame_hop_ms);
  explicit AttentionMap(Matrix w) : weights_(std::move(w)) {}

  Matrix weights_;
  std::optional<double> frame_hop_ms_;
};

}  // namespace w3ar
