#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modconv/emotion.hpp"

namespace modconv {

enum class Split : std::uint8_t { train, dev, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct UtteranceRecord {
  std::string utterance_key;  // "<split>/<dialogue_id>/<utterance_id>"
  std::uint64_t dialogue_id = 0;
  std::uint64_t utterance_id = 0;
  Split split = Split::train;
  std::string speaker;
  std::string gold_text;  // raw, as in the CSV
  EmotionLabel emotion = EmotionLabel::neutral;
  std::optional<std::string> media_path;  // relative to a media root
  std::optional<std::string> audio_path;
  std::optional<std::string> start_time;
  std::optional<std::string> end_time;

  bool operator==(const UtteranceRecord&) const = default;
};

std::string make_utterance_key(Split split, std::uint64_t dialogue_id, std::uint64_t utterance_id);

/// MELD clip naming: dia<D>_utt<U>.mp4
std::string default_media_name(std::uint64_t dialogue_id, std::uint64_t utterance_id);

using ClassCounts = std::array<std::size_t, kNumEmotions>;

struct DatasetManifest {
  Split split = Split::train;
  std::vector<UtteranceRecord> records;  // sorted by (dialogue_id, utterance_id)
  ClassCounts class_counts{};
  std::string source_digest;
  std::vector<std::string> degenerate_keys;  // empty gold_text after trimming

  bool operator==(const DatasetManifest&) const = default;
};

struct ParseResult {
  std::vector<UtteranceRecord> records;
  std::string source_digest;
  std::size_t decode_warnings = 0;  // undecodable byte sequences replaced
};

/// Binds columns by header name (Utterance, Speaker, Emotion, Dialogue_ID,
/// Utterance_ID required; StartTime, EndTime optional).
ParseResult parse_meld_csv(const std::filesystem::path& csv_path, Split split);
ParseResult parse_meld_csv_text(std::string_view content, Split split);

/// Sorts, counts classes and flags degenerate rows. Throws IntegrityError on
/// duplicate keys and DomainError on records from another split.
DatasetManifest build_manifest(std::vector<UtteranceRecord> records, Split split,
                               std::string source_digest = {});

// JSONL manifest: one object per record, then {"summary": {...}}.
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(std::istream& in);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct ExtractOptions {
  /// argv prefix of the media tool; ffmpeg-style arguments are appended.
  std::vector<std::string> tool_command{"ffmpeg"};
};

/// Writes out_dir/<utterance_key>.wav (PCM s16le, mono, 16 kHz). A target
/// that already has a conforming header is returned without running the tool.
std::filesystem::path extract_audio(const UtteranceRecord& record,
                                    const std::filesystem::path& media_root,
                                    const std::filesystem::path& out_dir,
                                    const ExtractOptions& options = {});

std::filesystem::path audio_target_path(const UtteranceRecord& record,
                                        const std::filesystem::path& out_dir);

struct WavFormat {
  std::uint16_t audio_format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

/// Reads the RIFF/WAVE fmt chunk. nullopt if the file is not a RIFF/WAVE
/// file or has no fmt chunk.
std::optional<WavFormat> read_wav_format(const std::filesystem::path& path);

/// PCM(1), 1 channel, 16000 Hz, 16 bit.
bool wav_matches_asr_contract(const std::filesystem::path& path);

}  // namespace modconv
