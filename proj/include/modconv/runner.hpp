#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "modconv/asr.hpp"
#include "modconv/classifier.hpp"
#include "modconv/dataset.hpp"
#include "modconv/metrics.hpp"
#include "modconv/remote_classifier.hpp"

namespace modconv {

inline constexpr std::string_view kHarnessVersion = "0.1.0";

struct DatasetConfig {
  std::map<Split, std::filesystem::path> csv;
  std::filesystem::path media_root;
  std::filesystem::path audio_dir;
  std::vector<std::string> extract_tool{"ffmpeg"};
};

enum class ClassifierKind { baseline, remote };

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::baseline;
  // baseline: load `model_path`, or train on `train_split` transcripts from the same ASR backend.
  std::filesystem::path model_path;
  std::optional<Split> train_split;
  // remote
  std::string endpoint;
  RemoteOptions remote;
};

struct MethodConfig {
  std::string name;
  AsrBackendDescriptor asr;
  ClassifierConfig classifier;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<MethodConfig> methods;
  Split eval_split = Split::test;
  std::filesystem::path cache_dir = "cache";
  std::uint64_t seed = 42;
  std::filesystem::path report_out = "report";
  std::size_t parallelism = 4;
  BaselineHyper baseline;  // seed is overridden by `seed`

  /// Throws ConfigError.
  void validate() const;
  const MethodConfig* find_method(std::string_view name) const;
};

/// Parses TOML; relative paths resolve against `base_dir`. Unknown keys and
/// unknown backend kinds are ConfigErrors.
ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const MethodConfig& method);

/// Published result shown next to measured rows; rendered, never recomputed.
struct LiteratureRow {
  std::string_view method;
  std::string_view citation;
  std::string_view input_modality;
  std::string_view modality_conversion;
  double wf1_percent;
  bool speech_baseline;  // counts toward the best-baseline delta
};

/// Speech-only baselines followed by the two published modality-conversion results.
const std::vector<LiteratureRow>& literature_rows();

/// Highest WF1 (%) among the speech baselines.
double best_speech_baseline_wf1();

struct WerSummary {
  double mean = 0.0;    // mean of per-utterance WER
  double corpus = 0.0;  // pooled edits / pooled reference words
  std::size_t utterances = 0;
};

struct MethodResult {
  std::string name;
  bool ok = false;
  std::string error;
  std::string asr_backend_id;
  std::string classifier_id;
  std::optional<ScoreReport> scores;
  std::optional<ConfusionMatrix> confusion;
  std::optional<WerSummary> wer;  // external backends only
  std::size_t degenerate_transcripts = 0;
  std::size_t asr_failures = 0;  // per-utterance errors; scored as empty transcripts
  nlohmann::json config;

  // Runtime counters. Not part of the serialized report, which must not depend on cache state.
  std::size_t asr_invocations = 0;
  std::size_t cache_hits = 0;

  /// measured WF1 (%) minus best_speech_baseline_wf1(); nullopt for failed methods.
  std::optional<double> delta_points() const;
};

struct ExperimentReport {
  Split eval_split = Split::test;
  std::uint64_t seed = 0;
  std::size_t eval_records = 0;
  std::string eval_source_digest;
  nlohmann::json config;
  std::vector<MethodResult> methods;
};

/// Runs every method; a failing method is recorded and the rest still run.
/// Throws ConfigError for invalid config and DomainError for an empty eval split.
ExperimentReport run_experiment(const ExperimentConfig& config);

enum class ReportFormat { markdown, json };

nlohmann::json to_json(const ExperimentReport& report);
std::string render_report(const ExperimentReport& report, ReportFormat format);

/// Writes <report_out>.json and <report_out>.md.
void write_report(const ExperimentReport& report, const std::filesystem::path& report_out);

/// Loads and validates one split's manifest from the configured CSV.
DatasetManifest load_split(const ExperimentConfig& config, Split split);

struct ExportResult {
  std::size_t rows = 0;
  std::size_t failures = 0;
  std::filesystem::path errors_path;  // written only when failures > 0
};

/// CSV utterance_key,split,text,emotion with normalized text. `backend` is
/// "oracle" or the name of a configured method whose ASR backend is used.
/// Per-utterance failures go to <out_path>.errors.jsonl.
ExportResult export_transcripts(const ExperimentConfig& config, Split split, std::string_view backend,
                                const std::filesystem::path& out_path);

/// Reads a transcript export CSV into a training corpus (text is re-normalized).
std::vector<LabeledText> read_transcript_csv(const std::filesystem::path& path);

}  // namespace modconv
