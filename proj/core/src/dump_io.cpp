#include "w3ar/dump_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "w3ar/error.hpp"

namespace w3ar {

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'W', '3', 'A', 'R'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

[[noreturn]] void schema(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, field + ": " + what);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path);
  return data;
}

void write_file(const std::string& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

// ---------------------------------------------------------------- dumps

std::vector<std::uint8_t> encode_attn_dump(const AttentionMap& map) {
  const std::size_t rows = map.n_text_tokens();
  const std::size_t cols = map.n_frames();
  if (rows > std::numeric_limits<std::uint32_t>::max() ||
      cols > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "attention map too large for a 32-bit header");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kDumpHeaderSize + rows * cols * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u16(out, kDumpVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
  const float hop = map.frame_hop_ms() ? static_cast<float>(*map.frame_hop_ms())
                                       : std::numeric_limits<float>::quiet_NaN();
  put_u32(out, std::bit_cast<std::uint32_t>(hop));
  for (double w : map.weights().data()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(w)));
  }
  return out;
}

AttentionMap decode_attn_dump(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                       [](char a, std::uint8_t b) {
                                         return static_cast<std::uint8_t>(a) == b;
                                       })) {
    throw Error(ErrorCode::BadMagic, "expected \"W3AR\" at offset 0");
  }
  if (bytes.size() < kDumpHeaderSize) {
    throw Error(ErrorCode::TruncatedPayload, "header needs " + std::to_string(kDumpHeaderSize) +
                                                 " bytes, file has " +
                                                 std::to_string(bytes.size()));
  }
  const std::uint16_t version = get_u16(bytes, 4);
  const std::uint16_t flags = get_u16(bytes, 6);
  if (version != kDumpVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
  if (flags != 0) {
    throw Error(ErrorCode::UnsupportedVersion, "flags " + std::to_string(flags));
  }
  const std::uint64_t rows = get_u32(bytes, 8);
  const std::uint64_t cols = get_u32(bytes, 12);
  const float hop = std::bit_cast<float>(get_u32(bytes, 16));

  const std::uint64_t need = rows * cols * 4;
  const std::uint64_t have = bytes.size() - kDumpHeaderSize;
  if (have != need) {
    std::ostringstream msg;
    msg << "header declares " << rows << "x" << cols << " (" << need
        << " payload bytes), found " << have;
    throw Error(ErrorCode::TruncatedPayload, msg.str());
  }

  Matrix weights(rows, cols);
  auto data = weights.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, kDumpHeaderSize + 4 * i)));
  }
  std::optional<double> hop_ms;
  if (!std::isnan(hop)) hop_ms = static_cast<double>(hop);
  try {
    return validate_attention(std::move(weights), kIngestionTolerance, hop_ms);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationFailure, e.what());
  }
}

void write_attn_dump(const AttentionMap& map, const std::string& path) {
  const auto bytes = encode_attn_dump(map);
  write_file(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

AttentionMap read_attn_dump(const std::string& path) {
  const std::string data = read_file(path);
  return decode_attn_dump({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

// ---------------------------------------------------------------- sidecars

DumpSidecar parse_sidecar(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema("<document>", std::string("not valid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) schema("<document>", "must be a JSON object");

  DumpSidecar out;
  static const char* const kKnown[] = {"utterance_id", "text_tokens", "token_to_word",
                                       "words",        "source",      "acoustic_token_rate_hz"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      schema(key, "unknown field");
    }
  }

  auto require = [&](const char* key) -> const json& {
    if (!doc.contains(key)) schema(key, "missing");
    return doc.at(key);
  };
  auto string_list = [&](const char* key) {
    const json& v = require(key);
    if (!v.is_array()) schema(key, "must be an array of strings");
    std::vector<std::string> list;
    for (const auto& e : v) {
      if (!e.is_string()) schema(key, "must be an array of strings");
      list.push_back(e.get<std::string>());
    }
    return list;
  };

  const json& id = require("utterance_id");
  if (!id.is_string()) schema("utterance_id", "must be a string");
  out.utterance_id = id.get<std::string>();
  out.text_tokens = string_list("text_tokens");
  out.words = string_list("words");

  const json& t2w = require("token_to_word");
  if (!t2w.is_array()) schema("token_to_word", "must be an array of integers");
  for (const auto& e : t2w) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
      schema("token_to_word", "must be an array of nonnegative integers");
    }
    out.token_to_word.push_back(e.get<std::size_t>());
  }

  const json& src = require("source");
  if (!src.is_object()) schema("source", "must be an object");
  for (const auto& [key, _] : src.items()) {
    if (key != "model" && key != "layer" && key != "heads") schema("source." + key, "unknown field");
  }
  if (!src.contains("model") || !src.at("model").is_string()) {
    schema("source.model", "must be a string");
  }
  out.source.model = src.at("model").get<std::string>();
  if (!src.contains("layer") || !src.at("layer").is_number_integer()) {
    schema("source.layer", "must be an integer");
  }
  out.source.layer = src.at("layer").get<std::int64_t>();
  if (!src.contains("heads")) schema("source.heads", "missing");
  const json& heads = src.at("heads");
  if (heads.is_string()) {
    if (heads.get<std::string>() != "mean") schema("source.heads", "string form must be \"mean\"");
    out.source.heads = std::string("mean");
  } else if (heads.is_array() && !heads.empty()) {
    std::vector<std::int64_t> list;
    for (const auto& h : heads) {
      if (!h.is_number_integer() || h.get<std::int64_t>() < 0) {
        schema("source.heads", "must list nonnegative head indices");
      }
      list.push_back(h.get<std::int64_t>());
    }
    out.source.heads = std::move(list);
  } else {
    schema("source.heads", "must be \"mean\" or a nonempty list of head indices");
  }

  if (doc.contains("acoustic_token_rate_hz") && !doc.at("acoustic_token_rate_hz").is_null()) {
    const json& rate = doc.at("acoustic_token_rate_hz");
    if (!rate.is_number() || !(rate.get<double>() > 0.0)) {
      schema("acoustic_token_rate_hz", "must be a positive number or null");
    }
    out.acoustic_token_rate_hz = rate.get<double>();
  }

  if (out.text_tokens.size() != out.token_to_word.size()) {
    schema("token_to_word", "has " + std::to_string(out.token_to_word.size()) +
                                " entries for " + std::to_string(out.text_tokens.size()) +
                                " text tokens");
  }
  validate_word_map(out.word_map());
  if (out.words.size() != out.word_map().n_words()) {
    schema("words", "has " + std::to_string(out.words.size()) + " entries, token_to_word implies " +
                        std::to_string(out.word_map().n_words()));
  }
  return out;
}

std::string format_sidecar(const DumpSidecar& sidecar) {
  json doc;
  doc["utterance_id"] = sidecar.utterance_id;
  doc["text_tokens"] = sidecar.text_tokens;
  doc["token_to_word"] = sidecar.token_to_word;
  doc["words"] = sidecar.words;
  json src;
  src["model"] = sidecar.source.model;
  src["layer"] = sidecar.source.layer;
  std::visit([&](const auto& h) { src["heads"] = h; }, sidecar.source.heads);
  doc["source"] = src;
  doc["acoustic_token_rate_hz"] =
      sidecar.acoustic_token_rate_hz ? json(*sidecar.acoustic_token_rate_hz) : json(nullptr);
  return doc.dump(2) + "\n";
}

DumpSidecar read_sidecar(const std::string& path) { return parse_sidecar(read_file(path)); }

void write_sidecar(const DumpSidecar& sidecar, const std::string& path) {
  const std::string text = format_sidecar(sidecar);
  write_file(path, text);
}

void check_pairing(const DumpSidecar& sidecar, const AttentionMap& map) {
  if (sidecar.text_tokens.size() != map.n_text_tokens()) {
    std::ostringstream msg;
    msg << "sidecar lists " << sidecar.text_tokens.size() << " text tokens, dump has "
        << map.n_text_tokens() << " rows";
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
}

// ---------------------------------------------------------------- reports

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        record.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(record));
        record.clear();
        any = false;
        break;
      default:
        field += c;
        any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::SchemaViolation, "csv: unterminated quoted field");
  if (any) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::string format_report(const std::vector<WordRewardRow>& rows) {
  std::string out = kReportHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += csv_field(r.utterance_id);
    out += ',' + std::to_string(r.word_index);
    out += ',' + csv_field(r.word);
    out += ',' + std::to_string(r.n_tokens);
    out += ',' + fixed6(r.purity);
    out += ',' + fixed6(r.mono);
    out += ',' + fixed6(r.reward);
    out += ',' + fixed6(r.min_token_purity);
    out += r.has_regression ? ",1\n" : ",0\n";
  }
  return out;
}

void write_report(const std::vector<WordRewardRow>& rows, const std::string& path) {
  write_file(path, format_report(rows));
}

std::vector<WordRewardRow> parse_report(const std::string& text) {
  const auto records = parse_csv(text);
  if (records.empty() || records.front().size() != 9) {
    throw Error(ErrorCode::SchemaViolation, "report: missing or malformed header");
  }
  std::string header;
  for (std::size_t i = 0; i < records.front().size(); ++i) {
    header += (i ? "," : "") + records.front()[i];
  }
  if (header != kReportHeader) throw Error(ErrorCode::SchemaViolation, "report: wrong header");

  std::vector<WordRewardRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r];
    if (f.size() != 9) {
      throw Error(ErrorCode::SchemaViolation, "report: row " + std::to_string(r) +
                                                  " has " + std::to_string(f.size()) +
                                                  " fields");
    }
    try {
      WordRewardRow row;
      row.utterance_id = f[0];
      row.word_index = std::stoull(f[1]);
      row.word = f[2];
      row.n_tokens = std::stoull(f[3]);
      row.purity = std::stod(f[4]);
      row.mono = std::stod(f[5]);
      row.reward = std::stod(f[6]);
      row.min_token_purity = std::stod(f[7]);
      if (f[8] != "0" && f[8] != "1") throw std::invalid_argument("has_regression");
      row.has_regression = f[8] == "1";
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::SchemaViolation, "report: row " + std::to_string(r) +
                                                  " has a malformed number");
    }
  }
  return rows;
}

std::vector<WordRewardRow> read_report(const std::string& path) {
  return parse_report(read_file(path));
}

}  // namespace w3ar
