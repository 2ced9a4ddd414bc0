#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "w3ar/attention.hpp"
#include "w3ar/reward.hpp"

namespace w3ar {

// Attention dump ("ATTN1"): a 20-byte little-endian header followed by
// T_y * T_h float32 weights, row-major.
//
//   offset  size  field
//   0       4     magic "W3AR"
//   4       2     version (u16) = 1
//   6       2     flags (u16) = 0
//   8       4     T_y (u32)
//   12      4     T_h (u32)
//   16      4     frame_hop_ms (f32), NaN when unknown
inline constexpr std::size_t kDumpHeaderSize = 20;
inline constexpr std::uint16_t kDumpVersion = 1;

std::vector<std::uint8_t> encode_attn_dump(const AttentionMap& map);

/// Parses and validates (at ingestion tolerance) an in-memory dump.
/// Errors: BadMagic, UnsupportedVersion, TruncatedPayload, ValidationFailure.
AttentionMap decode_attn_dump(std::span<const std::uint8_t> bytes);

void write_attn_dump(const AttentionMap& map, const std::string& path);
AttentionMap read_attn_dump(const std::string& path);

/// Which attention the extractor read: a decoder layer and either the mean over
/// heads or an explicit head list.
struct AttentionSource {
  std::string model;
  std::int64_t layer = 0;
  std::variant<std::string, std::vector<std::int64_t>> heads = std::string("mean");

  friend bool operator==(const AttentionSource&, const AttentionSource&) = default;
};

/// JSON metadata paired with a dump:
///
///   {
///     "utterance_id": "utt-001",
///     "text_tokens": [" The", " cat"],
///     "token_to_word": [0, 1],
///     "words": ["The", "cat"],
///     "source": {"model": "whisper-large-v2", "layer": 16, "heads": "mean"},
///     "acoustic_token_rate_hz": 50.0          // optional, may be null
///   }
struct DumpSidecar {
  std::string utterance_id;
  std::vector<std::string> text_tokens;
  std::vector<std::size_t> token_to_word;
  std::vector<std::string> words;
  AttentionSource source;
  std::optional<double> acoustic_token_rate_hz;

  TextWordMap word_map() const { return {token_to_word, words}; }

  friend bool operator==(const DumpSidecar&, const DumpSidecar&) = default;
};

/// Throws SchemaViolation naming the offending field.
DumpSidecar parse_sidecar(const std::string& text);
std::string format_sidecar(const DumpSidecar& sidecar);
DumpSidecar read_sidecar(const std::string& path);
void write_sidecar(const DumpSidecar& sidecar, const std::string& path);

/// Throws LengthMismatch unless the sidecar has one text token per dump row.
void check_pairing(const DumpSidecar& sidecar, const AttentionMap& map);

// Word reward report CSV.
inline constexpr const char* kReportHeader =
    "utterance_id,word_index,word,n_tokens,purity,mono,reward,min_token_purity,has_regression";

std::string format_report(const std::vector<WordRewardRow>& rows);
void write_report(const std::vector<WordRewardRow>& rows, const std::string& path);

/// Inverse of format_report(); reals come back as the 6-decimal values written.
std::vector<WordRewardRow> parse_report(const std::string& text);
std::vector<WordRewardRow> read_report(const std::string& path);

/// RFC 4180 quoting: fields with a comma, quote, CR or LF are double-quoted
/// and embedded quotes doubled.
std::string csv_field(const std::string& field);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::span<const char> bytes);

}  // namespace w3ar
