#include "modconv/runner.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "modconv/csv.hpp"
#include "modconv/error.hpp"
#include "modconv/text.hpp"
#include "modconv/wer.hpp"
#include "parallel.hpp"

namespace modconv {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetManifest load_split(const ExperimentConfig& config, Split split) {
  const auto it = config.dataset.csv.find(split);
  if (it == config.dataset.csv.end()) throw ConfigError(fmt::format("no CSV configured for split {}", to_string(split)));
  auto parsed = parse_meld_csv(it->second, split);
  return build_manifest(std::move(parsed.records), split, std::move(parsed.source_digest));
}

namespace {

struct TranscribedSplit {
  std::vector<std::string> texts;  // normalized; empty for failed utterances
  std::vector<std::optional<Transcript>> transcripts;
  std::vector<std::string> errors;  // per record, empty when ok
  std::size_t failures = 0;
};

// Resolves audio for external backends, then transcribes through the cache.
TranscribedSplit transcribe_split(const ExperimentConfig& config, AsrBackend& backend, TranscriptCache& cache,
                                  std::vector<UtteranceRecord> records) {
  const std::size_t n = records.size();
  TranscribedSplit out;
  out.texts.resize(n);
  out.transcripts.resize(n);
  out.errors.resize(n);

  if (backend.descriptor().kind == AsrKind::external) {
    const ExtractOptions options{config.dataset.extract_tool};
    detail::parallel_for(n, config.parallelism, [&](std::size_t i) {
      try {
        records[i].audio_path = extract_audio(records[i], config.dataset.media_root, config.dataset.audio_dir, options).string();
      } catch (const NotFoundError& e) {
        out.errors[i] = e.what();
      } catch (const ConversionError& e) {
        out.errors[i] = e.what();
      }
    });
  }

  std::vector<UtteranceRecord> ready;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.errors[i].empty()) continue;
    ready.push_back(records[i]);
    positions.push_back(i);
  }
  auto outcomes = cached_transcribe_all(backend, ready, cache);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const std::size_t i = positions[k];
    if (outcomes[k].ok()) {
      out.texts[i] = outcomes[k].transcript->text;
      out.transcripts[i] = std::move(outcomes[k].transcript);
    } else {
      out.errors[i] = outcomes[k].error;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.errors[i].empty()) {
      ++out.failures;
      spdlog::warn("{}: ASR failed, scoring as empty transcript: {}", records[i].utterance_key, out.errors[i]);
    }
  }
  return out;
}

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string id() const = 0;
  virtual std::vector<EmotionDistribution> classify(const std::vector<std::string>& texts) = 0;
};

class BaselineClassifier final : public Classifier {
 public:
  BaselineClassifier(BaselineModel model, std::size_t parallelism)
      : model_(std::move(model)), parallelism_(parallelism) {}
  std::string id() const override { return model_.model_id(); }
  std::vector<EmotionDistribution> classify(const std::vector<std::string>& texts) override {
    std::vector<EmotionDistribution> out(texts.size(), EmotionDistribution::uniform());
    detail::parallel_for(texts.size(), parallelism_,
                         [&](std::size_t i) { out[i] = classify_baseline(model_, texts[i]); });
    return out;
  }

 private:
  BaselineModel model_;
  std::size_t parallelism_;
};

class RemoteBackedClassifier final : public Classifier {
 public:
  RemoteBackedClassifier(std::string endpoint, RemoteOptions options)
      : client_(std::move(endpoint), options), model_id_(client_.health()) {}
  std::string id() const override { return "remote:" + model_id_; }
  std::vector<EmotionDistribution> classify(const std::vector<std::string>& texts) override {
    return client_.classify(texts);
  }

 private:
  RemoteClassifier client_;
  std::string model_id_;
};

std::unique_ptr<Classifier> make_classifier(const ExperimentConfig& config, const MethodConfig& method,
                                            AsrBackend& backend, TranscriptCache& cache) {
  const auto& c = method.classifier;
  if (c.kind == ClassifierKind::remote) return std::make_unique<RemoteBackedClassifier>(c.endpoint, c.remote);
  if (!c.train_split) return std::make_unique<BaselineClassifier>(load_baseline(c.model_path), config.parallelism);

  // Train on the same kind of text the classifier will see at evaluation time.
  const auto manifest = load_split(config, *c.train_split);
  const auto transcribed = transcribe_split(config, backend, cache, manifest.records);
  std::vector<LabeledText> corpus;
  corpus.reserve(manifest.records.size());
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    corpus.push_back({transcribed.texts[i], manifest.records[i].emotion});
  }
  BaselineHyper hyper = config.baseline;
  hyper.seed = config.seed;
  spdlog::info("method '{}': training baseline on {} {} utterances", method.name, corpus.size(),
               to_string(*c.train_split));
  return std::make_unique<BaselineClassifier>(fit_baseline(corpus, hyper), config.parallelism);
}

MethodResult run_method(const ExperimentConfig& config, const MethodConfig& method, const DatasetManifest& eval) {
  MethodResult result;
  result.name = method.name;
  result.asr_backend_id = method.asr.backend_id;
  result.config = to_json(method);
  result.config["eval_split"] = to_string(config.eval_split);
  result.config["seed"] = config.seed;

  auto backend = make_asr_backend(method.asr);
  TranscriptCache cache(config.cache_dir);
  try {
    auto classifier = make_classifier(config, method, *backend, cache);
    result.classifier_id = classifier->id();

    const auto transcribed = transcribe_split(config, *backend, cache, eval.records);
    const auto dists = classifier->classify(transcribed.texts);
    if (dists.size() != eval.records.size()) throw ContractError("classifier returned wrong number of results");

    std::vector<EmotionLabel> golds, preds;
    golds.reserve(eval.records.size());
    preds.reserve(eval.records.size());
    for (std::size_t i = 0; i < eval.records.size(); ++i) {
      golds.push_back(eval.records[i].emotion);
      preds.push_back(argmax_label(dists[i]));
      if (transcribed.texts[i].empty()) ++result.degenerate_transcripts;
    }
    result.confusion = confusion(golds, preds);
    result.scores = score(*result.confusion);
    result.asr_failures = transcribed.failures;

    if (method.asr.kind == AsrKind::external) {
      CorpusWer pooled;
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < eval.records.size(); ++i) {
        if (!transcribed.transcripts[i]) continue;
        const auto gold = normalize_text(eval.records[i].gold_text);
        if (gold.empty()) continue;
        sum += word_error_rate(gold, transcribed.texts[i]);
        pooled.add(gold, transcribed.texts[i]);
        ++count;
      }
      if (count > 0) result.wer = WerSummary{sum / static_cast<double>(count), pooled.rate(), count};
    }
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    spdlog::error("method '{}' failed: {}", method.name, e.what());
  }
  result.asr_invocations = backend->invocations();
  result.cache_hits = cache.hits();
  return result;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto eval = load_split(config, config.eval_split);
  if (eval.records.empty()) throw DomainError(fmt::format("eval split {} is empty", to_string(config.eval_split)));

  ExperimentReport report;
  report.eval_split = config.eval_split;
  report.seed = config.seed;
  report.eval_records = eval.records.size();
  report.eval_source_digest = eval.source_digest;
  report.config = to_json(config);
  for (const auto& method : config.methods) {
    spdlog::info("method '{}': evaluating {} utterances", method.name, eval.records.size());
    report.methods.push_back(run_method(config, method, eval));
    const auto& r = report.methods.back();
    if (r.ok) {
      spdlog::info("method '{}': WF1 {:.4f}, {} ASR invocation(s), {} cache hit(s)", r.name, r.scores->weighted_f1,
                   r.asr_invocations, r.cache_hits);
    }
  }
  return report;
}

ExportResult export_transcripts(const ExperimentConfig& config, Split split, std::string_view backend_name,
                                const fs::path& out_path) {
  AsrBackendDescriptor descriptor;
  if (backend_name == "oracle") {
    descriptor = AsrBackendDescriptor::oracle();
  } else if (const auto* method = config.find_method(backend_name)) {
    descriptor = method->asr;
  } else {
    throw ConfigError(fmt::format("unknown backend '{}': use 'oracle' or a method name", backend_name));
  }
  const auto manifest = load_split(config, split);
  auto backend = make_asr_backend(descriptor);
  TranscriptCache cache(config.cache_dir);
  const auto transcribed = transcribe_split(config, *backend, cache, manifest.records);

  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path.string());
  csv::write_row(out, {"utterance_key", "split", "text", "emotion"});

  ExportResult result;
  result.errors_path = out_path;
  result.errors_path += ".errors.jsonl";
  std::ofstream errors;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& rec = manifest.records[i];
    if (!transcribed.errors[i].empty()) {
      if (!errors.is_open()) {
        errors.open(result.errors_path, std::ios::binary | std::ios::trunc);
        if (!errors) throw IoError("cannot write " + result.errors_path.string());
      }
      errors << json{{"utterance_key", rec.utterance_key}, {"error", transcribed.errors[i]}}.dump() << '\n';
      ++result.failures;
      continue;
    }
    csv::write_row(out, {rec.utterance_key, std::string(to_string(split)), transcribed.texts[i],
                         std::string(to_string(rec.emotion))});
    ++result.rows;
  }
  if (!out) throw IoError("write failed: " + out_path.string());
  if (result.failures == 0) {
    std::error_code ec;
    fs::remove(result.errors_path, ec);
  }
  return result;
}

std::vector<LabeledText> read_transcript_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto rows = csv::parse(sanitize_utf8(ss.str()));
  if (rows.empty()) throw SchemaError(path.string() + ": no header");
  std::optional<std::size_t> c_text, c_emotion;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    if (rows[0][i] == "text") c_text = i;
    if (rows[0][i] == "emotion") c_emotion = i;
  }
  if (!c_text) throw SchemaError(path.string() + ": missing column 'text'");
  if (!c_emotion) throw SchemaError(path.string() + ": missing column 'emotion'");
  std::vector<LabeledText> corpus;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() <= std::max(*c_text, *c_emotion)) throw RowError(r + 1, "too few fields");
    const auto label = parse_emotion(row[*c_emotion]);
    if (!label) throw RowError(r + 1, "unknown emotion '" + row[*c_emotion] + "'");
    corpus.push_back({normalize_text(row[*c_text]), *label});
  }
  return corpus;
}

}  // namespace modconv
