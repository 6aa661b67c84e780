#include "modconv/dataset.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "modconv/csv.hpp"
#include "modconv/digest.hpp"
#include "modconv/error.hpp"
#include "modconv/process.hpp"
#include "modconv/text.hpp"

namespace modconv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::dev:
      return "dev";
    case Split::test:
      return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "dev") return Split::dev;
  if (text == "test") return Split::test;
  return std::nullopt;
}

std::string make_utterance_key(Split split, std::uint64_t dialogue_id, std::uint64_t utterance_id) {
  return fmt::format("{}/{}/{}", to_string(split), dialogue_id, utterance_id);
}

std::string default_media_name(std::uint64_t dialogue_id, std::uint64_t utterance_id) {
  return fmt::format("dia{}_utt{}.mp4", dialogue_id, utterance_id);
}

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_id(std::string_view raw, std::size_t row, std::string_view column) {
  const auto text = trim(raw);
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw RowError(row, fmt::format("{} is not a non-negative integer: '{}'", column, raw));
  }
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

}  // namespace

ParseResult parse_meld_csv_text(std::string_view content, Split split) {
  ParseResult result;
  result.source_digest = sha256_hex(content);

  // Strip a UTF-8 BOM; MELD exports sometimes carry one.
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);

  // Decode errors are repaired on the whole text so multi-byte sequences are never split.
  const std::string clean = sanitize_utf8(content, &result.decode_warnings);
  const auto rows = csv::parse(clean);
  if (rows.empty()) throw SchemaError("csv has no header row");

  std::map<std::string, std::size_t, std::less<>> columns;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    columns.emplace(std::string(trim(rows[0][i])), i);
  }
  auto require = [&](std::string_view name) {
    const auto it = columns.find(name);
    if (it == columns.end()) throw SchemaError(fmt::format("missing column '{}'", name));
    return it->second;
  };
  auto optional_column = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };
  const std::size_t c_text = require("Utterance");
  const std::size_t c_speaker = require("Speaker");
  const std::size_t c_emotion = require("Emotion");
  const std::size_t c_dialogue = require("Dialogue_ID");
  const std::size_t c_utterance = require("Utterance_ID");
  const auto c_start = optional_column("StartTime");
  const auto c_end = optional_column("EndTime");
  const std::size_t width = std::max({c_text, c_speaker, c_emotion, c_dialogue, c_utterance,
                                      c_start.value_or(0), c_end.value_or(0)}) + 1;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t row_number = r + 1;
    if (row.size() == 1 && trim(row[0]).empty()) continue;  // blank line
    if (row.size() < width) {
      throw RowError(row_number, fmt::format("expected at least {} fields, found {}", width, row.size()));
    }
    UtteranceRecord rec;
    rec.split = split;
    rec.dialogue_id = parse_id(row[c_dialogue], row_number, "Dialogue_ID");
    rec.utterance_id = parse_id(row[c_utterance], row_number, "Utterance_ID");
    rec.utterance_key = make_utterance_key(split, rec.dialogue_id, rec.utterance_id);
    rec.speaker = row[c_speaker];
    rec.gold_text = row[c_text];
    const auto emotion = parse_emotion(row[c_emotion]);
    if (!emotion) throw RowError(row_number, fmt::format("unknown emotion '{}'", row[c_emotion]));
    rec.emotion = *emotion;
    rec.media_path = default_media_name(rec.dialogue_id, rec.utterance_id);
    if (c_start) rec.start_time = row[*c_start];
    if (c_end) rec.end_time = row[*c_end];
    result.records.push_back(std::move(rec));
  }
  if (result.decode_warnings > 0) {
    spdlog::warn("replaced {} undecodable byte sequence(s) with U+FFFD", result.decode_warnings);
  }
  return result;
}

ParseResult parse_meld_csv(const fs::path& csv_path, Split split) {
  return parse_meld_csv_text(read_file(csv_path), split);
}

DatasetManifest build_manifest(std::vector<UtteranceRecord> records, Split split,
                               std::string source_digest) {
  DatasetManifest manifest;
  manifest.split = split;
  manifest.source_digest = std::move(source_digest);

  for (const auto& rec : records) {
    if (rec.split != split) {
      throw DomainError(fmt::format("record {} belongs to split {}, expected {}", rec.utterance_key,
                                    to_string(rec.split), to_string(split)));
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dialogue_id, a.utterance_id) < std::tie(b.dialogue_id, b.utterance_id);
  });

  std::map<std::string, std::size_t> seen;
  for (const auto& rec : records) ++seen[rec.utterance_key];
  std::vector<std::string> duplicates;
  for (const auto& [key, count] : seen) {
    if (count > 1) duplicates.push_back(key);
  }
  if (!duplicates.empty()) {
    throw IntegrityError(fmt::format("duplicate utterance_key: {}", fmt::join(duplicates, ", ")));
  }

  for (const auto& rec : records) {
    ++manifest.class_counts[ordinal(rec.emotion)];
    if (trim(rec.gold_text).empty()) manifest.degenerate_keys.push_back(rec.utterance_key);
  }
  manifest.records = std::move(records);
  return manifest;
}

namespace {

json optional_json(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

json record_to_json(const UtteranceRecord& r) {
  json j;
  j["utterance_key"] = r.utterance_key;
  j["dialogue_id"] = r.dialogue_id;
  j["utterance_id"] = r.utterance_id;
  j["split"] = to_string(r.split);
  j["speaker"] = r.speaker;
  j["gold_text"] = r.gold_text;
  j["emotion"] = to_string(r.emotion);
  j["media_path"] = optional_json(r.media_path);
  j["audio_path"] = optional_json(r.audio_path);
  j["start_time"] = optional_json(r.start_time);
  j["end_time"] = optional_json(r.end_time);
  return j;
}

UtteranceRecord record_from_json(const json& j) {
  UtteranceRecord r;
  r.utterance_key = j.at("utterance_key").get<std::string>();
  r.dialogue_id = j.at("dialogue_id").get<std::uint64_t>();
  r.utterance_id = j.at("utterance_id").get<std::uint64_t>();
  const auto split = parse_split(j.at("split").get<std::string>());
  if (!split) throw IntegrityError("manifest: bad split in record " + r.utterance_key);
  r.split = *split;
  r.speaker = j.at("speaker").get<std::string>();
  r.gold_text = j.at("gold_text").get<std::string>();
  const auto emotion = parse_emotion(j.at("emotion").get<std::string>());
  if (!emotion) throw IntegrityError("manifest: bad emotion in record " + r.utterance_key);
  r.emotion = *emotion;
  r.media_path = optional_string(j, "media_path");
  r.audio_path = optional_string(j, "audio_path");
  r.start_time = optional_string(j, "start_time");
  r.end_time = optional_string(j, "end_time");
  return r;
}

}  // namespace

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  for (const auto& rec : manifest.records) out << record_to_json(rec).dump() << '\n';
  json counts = json::object();
  for (auto label : kAllEmotions) counts[std::string(to_string(label))] = manifest.class_counts[ordinal(label)];
  json summary;
  summary["split"] = to_string(manifest.split);
  summary["record_count"] = manifest.records.size();
  summary["class_counts"] = std::move(counts);
  summary["source_digest"] = manifest.source_digest;
  summary["degenerate_keys"] = manifest.degenerate_keys;
  out << json{{"summary", std::move(summary)}}.dump() << '\n';
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_manifest(out, manifest);
  if (!out) throw IoError("write failed: " + path.string());
}

DatasetManifest read_manifest(std::istream& in) {
  std::vector<UtteranceRecord> records;
  std::optional<json> summary;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (summary) throw IntegrityError(fmt::format("manifest line {}: data after summary", line_no));
    json j;
    try {
      j = json::parse(line);
      if (j.contains("summary")) {
        summary = j.at("summary");
      } else {
        records.push_back(record_from_json(j));
      }
    } catch (const json::exception& e) {
      throw IntegrityError(fmt::format("manifest line {}: {}", line_no, e.what()));
    }
  }
  if (!summary) throw IntegrityError("manifest has no summary line");
  try {
    const auto split = parse_split(summary->at("split").get<std::string>());
    if (!split) throw IntegrityError("manifest summary: bad split");
    auto manifest = build_manifest(std::move(records), *split,
                                   summary->at("source_digest").get<std::string>());
    for (auto label : kAllEmotions) {
      const auto expected = summary->at("class_counts").at(std::string(to_string(label))).get<std::size_t>();
      if (expected != manifest.class_counts[ordinal(label)]) {
        throw IntegrityError(fmt::format("manifest summary: class count mismatch for {}", to_string(label)));
      }
    }
    if (summary->at("record_count").get<std::size_t>() != manifest.records.size()) {
      throw IntegrityError("manifest summary: record_count mismatch");
    }
    return manifest;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("manifest summary: ") + e.what());
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_manifest(in);
}

// ---------------------------------------------------------------------------
// Audio

std::optional<WavFormat> read_wav_format(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char riff[12];
  if (!in.read(riff, 12)) return std::nullopt;
  if (std::string_view(riff, 4) != "RIFF" || std::string_view(riff + 8, 4) != "WAVE") return std::nullopt;

  auto u16 = [](const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); };
  auto u32 = [](const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24));
  };
  unsigned char header[8];
  while (in.read(reinterpret_cast<char*>(header), 8)) {
    const std::uint32_t size = u32(header + 4);
    if (std::string_view(reinterpret_cast<char*>(header), 4) == "fmt ") {
      if (size < 16) return std::nullopt;
      unsigned char fmt_chunk[16];
      if (!in.read(reinterpret_cast<char*>(fmt_chunk), 16)) return std::nullopt;
      WavFormat f;
      f.audio_format = u16(fmt_chunk);
      f.channels = u16(fmt_chunk + 2);
      f.sample_rate = u32(fmt_chunk + 4);
      f.bits_per_sample = u16(fmt_chunk + 14);
      return f;
    }
    // Chunks are word aligned.
    in.seekg(static_cast<std::streamoff>(size + (size & 1)), std::ios::cur);
  }
  return std::nullopt;
}

bool wav_matches_asr_contract(const fs::path& path) {
  const auto f = read_wav_format(path);
  return f && f->audio_format == 1 && f->channels == 1 && f->sample_rate == 16000 && f->bits_per_sample == 16;
}

fs::path audio_target_path(const UtteranceRecord& record, const fs::path& out_dir) {
  return out_dir / (record.utterance_key + ".wav");
}

namespace {

std::string temp_suffix() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return fmt::format(".tmp-{}-{:016x}", ::getpid(), rng());
}

}  // namespace

fs::path extract_audio(const UtteranceRecord& record, const fs::path& media_root, const fs::path& out_dir,
                       const ExtractOptions& options) {
  const fs::path target = audio_target_path(record, out_dir);
  if (fs::exists(target) && wav_matches_asr_contract(target)) return target;

  if (!record.media_path) throw NotFoundError(record.utterance_key + ": record has no media path");
  const fs::path clip = media_root / *record.media_path;
  if (!fs::is_regular_file(clip)) {
    throw NotFoundError(fmt::format("{}: media clip not found: {}", record.utterance_key, clip.string()));
  }

  fs::create_directories(target.parent_path());
  fs::path temp = target;
  temp += temp_suffix() + ".wav";

  std::vector<std::string> argv = options.tool_command;
  if (argv.empty()) throw ConversionError("no media extraction tool configured");
  for (const char* arg : {"-nostdin", "-y", "-loglevel", "error", "-i"}) argv.emplace_back(arg);
  argv.push_back(clip.string());
  for (const char* arg : {"-vn", "-ac", "1", "-ar", "16000", "-acodec", "pcm_s16le", "-f", "wav"}) argv.emplace_back(arg);
  argv.push_back(temp.string());

  ProcessResult run;
  try {
    run = run_process(argv);
  } catch (const IoError& e) {
    throw ConversionError(fmt::format("{}: {}", record.utterance_key, e.what()));
  }
  if (run.exit_code != 0) {
    std::error_code ec;
    fs::remove(temp, ec);
    throw ConversionError(fmt::format("{}: extraction tool exited with {}{}: {}", record.utterance_key,
                                      run.exit_code, run.timed_out ? " (timeout)" : "", trim(run.output)));
  }
  if (!wav_matches_asr_contract(temp)) {
    std::error_code ec;
    fs::remove(temp, ec);
    throw ConversionError(record.utterance_key + ": extraction tool output is not 16 kHz mono s16 PCM WAV");
  }
  fs::rename(temp, target);
  return target;
}

}  // namespace modconv
