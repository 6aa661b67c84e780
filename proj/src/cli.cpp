#include "modconv/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "modconv/dataset.hpp"
#include "modconv/error.hpp"
#include "modconv/runner.hpp"
#include "modconv/wer.hpp"

namespace modconv {

namespace fs = std::filesystem;

namespace {

void use_stderr_logging(bool quiet) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("modconv");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(quiet ? spdlog::level::warn : spdlog::level::info);
}

Split split_from_flag(const std::string& text) {
  const auto s = parse_split(text);
  if (!s) throw ConfigError("--split must be one of train, dev, test");
  return *s;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

struct IngestArgs {
  std::string csv;
  std::string split;
  std::string media_root;
  std::string audio_out;
  std::string extract_tool = "ffmpeg";
  std::string manifest_out;
};

ExitStatus cmd_ingest(const IngestArgs& a, std::ostream& out) {
  const Split split = split_from_flag(a.split);
  if (!a.audio_out.empty() && a.media_root.empty()) throw ConfigError("--audio-out requires --media-root");

  auto parsed = parse_meld_csv(a.csv, split);
  auto manifest = build_manifest(std::move(parsed.records), split, parsed.source_digest);

  std::size_t extracted = 0, failed = 0;
  if (!a.audio_out.empty()) {
    const ExtractOptions options{{a.extract_tool}};
    for (auto& rec : manifest.records) {
      try {
        rec.audio_path = extract_audio(rec, a.media_root, a.audio_out, options).string();
        ++extracted;
      } catch (const Error& e) {
        spdlog::error("{}", e.what());
        ++failed;
      }
    }
  }
  write_manifest(fs::path(a.manifest_out), manifest);

  out << fmt::format("records: {}\n", manifest.records.size());
  for (auto label : kAllEmotions) out << fmt::format("  {}: {}\n", to_string(label), manifest.class_counts[ordinal(label)]);
  out << fmt::format("decode_warnings: {}\n", parsed.decode_warnings);
  out << fmt::format("degenerate: {}\n", manifest.degenerate_keys.size());
  if (!a.audio_out.empty()) out << fmt::format("audio_extracted: {}\naudio_failed: {}\n", extracted, failed);
  out << fmt::format("source_digest: {}\nmanifest: {}\n", manifest.source_digest, a.manifest_out);
  return failed == 0 ? ExitStatus::success : ExitStatus::failure;
}

ExitStatus cmd_run(const std::string& config_path, std::ostream& out) {
  const auto config = load_config(config_path);
  const auto report = run_experiment(config);
  write_report(report, config.report_out);
  std::size_t failed = 0;
  for (const auto& m : report.methods) {
    if (m.ok) {
      out << fmt::format("{}: WF1 {:.1f}%\n", m.name, m.scores->weighted_f1 * 100.0);
    } else {
      out << fmt::format("{}: failed: {}\n", m.name, m.error);
      ++failed;
    }
  }
  out << fmt::format("report: {}.json\nreport: {}.md\n", config.report_out.string(), config.report_out.string());
  return failed == 0 ? ExitStatus::success : ExitStatus::failure;
}

ExitStatus cmd_export(const std::string& config_path, const std::string& split, const std::string& backend,
                      const std::string& out_path, std::ostream& out) {
  const auto config = load_config(config_path);
  const auto result = export_transcripts(config, split_from_flag(split), backend, out_path);
  out << fmt::format("rows: {}\nfailures: {}\n", result.rows, result.failures);
  if (result.failures > 0) out << fmt::format("errors: {}\n", result.errors_path.string());
  return result.failures == 0 ? ExitStatus::success : ExitStatus::failure;
}

ExitStatus cmd_wer(const std::string& ref_file, const std::string& hyp_file, std::ostream& out) {
  const auto refs = read_lines(ref_file);
  const auto hyps = read_lines(hyp_file);
  if (refs.size() != hyps.size()) {
    throw DomainError(fmt::format("reference has {} lines, hypothesis {}", refs.size(), hyps.size()));
  }
  CorpusWer wer;
  for (std::size_t i = 0; i < refs.size(); ++i) wer.add(refs[i], hyps[i]);
  const auto& t = wer.totals();
  spdlog::info("{} utterances, {} reference words: S={} D={} I={}", wer.utterances(), t.reference_length,
               t.substitutions, t.deletions, t.insertions);
  out << fmt::format("{:.4f}\n", wer.rate());
  return ExitStatus::success;
}

struct TrainArgs {
  std::string transcripts;
  std::string model_out;
  BaselineHyper hyper;
};

ExitStatus cmd_train_baseline(const TrainArgs& a, std::ostream& out) {
  const auto corpus = read_transcript_csv(a.transcripts);
  double last_loss = 0.0;
  const auto model = fit_baseline(corpus, a.hyper, [&](std::size_t epoch, double loss) {
    last_loss = loss;
    spdlog::debug("epoch {}: loss {:.6f}", epoch, loss);
  });
  save_baseline(a.model_out, model);
  const auto reloaded = load_baseline(a.model_out);
  std::size_t correct = 0;
  for (const auto& ex : corpus) correct += argmax_label(classify_baseline(reloaded, ex.text)) == ex.label;
  out << fmt::format("examples: {}\nvocabulary: {}\nfinal_loss: {:.6f}\ntrain_accuracy: {:.4f}\nmodel: {}\n",
                     corpus.size(), reloaded.vocab_size(), last_loss,
                     static_cast<double>(correct) / static_cast<double>(corpus.size()), a.model_out);
  return ExitStatus::success;
}

}  // namespace

ExitStatus run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speech emotion recognition through modality conversion: ASR, text classification, WF1 scoring."};
  app.name("modconv");
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a MELD CSV, optionally extract audio, write a JSONL manifest");
  ingest_cmd->add_option("--csv", ingest.csv, "MELD metadata CSV")->required();
  ingest_cmd->add_option("--split", ingest.split, "train, dev or test")->required();
  ingest_cmd->add_option("--media-root", ingest.media_root, "Directory holding dia<D>_utt<U>.mp4 clips");
  ingest_cmd->add_option("--audio-out", ingest.audio_out, "Write 16 kHz mono WAV files here");
  ingest_cmd->add_option("--extract-tool", ingest.extract_tool, "Media tool (ffmpeg-compatible)")->capture_default_str();
  ingest_cmd->add_option("--manifest-out", ingest.manifest_out, "Output manifest (JSONL)")->required();

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "Run every configured method and write <report_out>.json/.md");
  run_cmd->add_option("--config", run_config, "Experiment config (TOML)")->required();

  std::string export_config, export_split, export_backend, export_out;
  auto* export_cmd = app.add_subcommand("export", "Write transcripts as CSV (utterance_key,split,text,emotion)");
  export_cmd->add_option("--config", export_config, "Experiment config (TOML)")->required();
  export_cmd->add_option("--split", export_split, "train, dev or test")->required();
  export_cmd->add_option("--backend", export_backend, "'oracle' or a configured method name")->required();
  export_cmd->add_option("--out", export_out, "Output CSV; failures go to <out>.errors.jsonl")->required();

  std::string ref_file, hyp_file;
  auto* wer_cmd = app.add_subcommand(
      "wer",
      "Corpus-level WER of line-aligned files: total edits over all lines divided by total reference words "
      "(pooled, not an average of per-line WERs). Both sides are normalized first.");
  wer_cmd->add_option("--ref-file", ref_file, "Reference transcripts, one utterance per line")->required();
  wer_cmd->add_option("--hyp-file", hyp_file, "Hypothesis transcripts, same line order")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-baseline", "Fit the bag-of-words softmax-regression baseline");
  train_cmd->add_option("--transcripts", train.transcripts, "Transcript CSV as written by 'export'")->required();
  train_cmd->add_option("--model-out", train.model_out, "Output model (JSON)")->required();
  train_cmd->add_option("--l2-lambda", train.hyper.l2_lambda, "L2 penalty on weights")->capture_default_str();
  train_cmd->add_option("--learning-rate", train.hyper.learning_rate, "Gradient step size")->capture_default_str();
  train_cmd->add_option("--epochs", train.hyper.epochs, "Passes over the corpus")->capture_default_str();
  train_cmd->add_option("--batch-size", train.hyper.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.hyper.seed, "Shuffling seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ExitStatus::success;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ExitStatus::success;
  } catch (const CLI::ParseError& e) {
    // Subcommand --help surfaces as CallForHelp from the subcommand.
    err << e.what() << "\n";
    return ExitStatus::usage;
  }

  use_stderr_logging(quiet);
  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out);
    if (*run_cmd) return cmd_run(run_config, out);
    if (*export_cmd) return cmd_export(export_config, export_split, export_backend, export_out, out);
    if (*wer_cmd) return cmd_wer(ref_file, hyp_file, out);
    if (*train_cmd) return cmd_train_baseline(train, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return ExitStatus::usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ExitStatus::failure;
  }
  return ExitStatus::usage;
}

}  // namespace modconv
