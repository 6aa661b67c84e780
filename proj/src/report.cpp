#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "modconv/error.hpp"
#include "modconv/runner.hpp"

namespace modconv {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<LiteratureRow>& literature_rows() {
  static const std::vector<LiteratureRow> rows = {
      {"SpeechFormer", "Chudasama et al., 2022", "Speech", "-", 41.9, true},
      {"SpeechFormer++", "W. Chen et al., 2023", "Speech", "-", 47.0, true},
      {"DWFormer", "S. Chen et al., 2023", "Speech", "-", 48.5, true},
      {"DST", "W. Chen et al., 2023", "Speech", "-", 48.8, true},
      {"Modality-Conversion", "Vosk ASR + fine-tuned RoBERTa-base", "Speech", "Converting to Text Modality", 43.1,
       false},
      {"Modality-Conversion++", "gold transcripts + fine-tuned RoBERTa-base", "Speech",
       "Converting to Text Modality", 60.4, false},
  };
  return rows;
}

double best_speech_baseline_wf1() {
  double best = 0.0;
  for (const auto& row : literature_rows()) {
    if (row.speech_baseline) best = std::max(best, row.wf1_percent);
  }
  return best;
}

std::optional<double> MethodResult::delta_points() const {
  if (!ok || !scores) return std::nullopt;
  return scores->weighted_f1 * 100.0 - best_speech_baseline_wf1();
}

namespace {

std::string percent1(double fraction) { return fmt::format("{:.1f}", fraction * 100.0); }
std::string signed1(double points) { return fmt::format("{:+.1f}", points); }

json method_to_json(const MethodResult& m) {
  json j{{"name", m.name},
         {"status", m.ok ? "ok" : "failed"},
         {"asr_backend_id", m.asr_backend_id},
         {"classifier_id", m.classifier_id},
         {"config", m.config}};
  if (!m.ok) {
    j["error"] = m.error;
    return j;
  }
  j["scores"] = to_json(*m.scores);
  j["confusion"] = to_json(*m.confusion);
  j["wf1_percent"] = m.scores->weighted_f1 * 100.0;
  j["wf1_percent_display"] = percent1(m.scores->weighted_f1);
  const double delta = *m.delta_points();
  j["delta_vs_best_speech_baseline_points"] = delta;
  j["delta_display"] = signed1(delta);
  j["degenerate_transcripts"] = m.degenerate_transcripts;
  j["asr_failures"] = m.asr_failures;
  if (m.wer) {
    j["wer_vs_gold"] = {{"mean", m.wer->mean}, {"corpus", m.wer->corpus}, {"utterances", m.wer->utterances}};
  } else {
    j["wer_vs_gold"] = nullptr;
  }
  return j;
}

}  // namespace

json to_json(const ExperimentReport& report) {
  json literature = json::array();
  for (const auto& row : literature_rows()) {
    literature.push_back({{"method", row.method},
                          {"citation", row.citation},
                          {"input_modality", row.input_modality},
                          {"modality_conversion", row.modality_conversion},
                          {"wf1_percent", row.wf1_percent},
                          {"wf1_percent_display", fmt::format("{:.1f}", row.wf1_percent)},
                          {"role", row.speech_baseline ? "speech_baseline" : "published_modality_conversion"},
                          {"source", "reference"}});
  }
  json methods = json::array();
  for (const auto& m : report.methods) methods.push_back(method_to_json(m));
  return json{
      {"format", "modconv-report/1"},
      {"tool_versions",
       {{"modconv", kHarnessVersion},
        {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                      NLOHMANN_JSON_VERSION_PATCH)},
        {"tomlplusplus", fmt::format("{}.{}.{}", TOML_LIB_MAJOR, TOML_LIB_MINOR, TOML_LIB_PATCH)}}},
      {"seed", report.seed},
      {"eval_split", to_string(report.eval_split)},
      {"eval_records", report.eval_records},
      {"eval_source_digest", report.eval_source_digest},
      {"conventions",
       {{"zero_division", "0/0 precision, recall and F1 are defined as 0"},
        {"weighted_f1", "sum over classes of (gold support / n) * F1"},
        {"macro_f1", "unweighted mean over all 7 classes"},
        {"wer", "(S+D+I)/N on normalized text; corpus value pools edits over utterances"},
        {"delta", "measured WF1 (%) minus best speech-baseline WF1 (%), absolute points"}}},
      {"best_speech_baseline_wf1_percent", best_speech_baseline_wf1()},
      {"literature_rows", std::move(literature)},
      {"methods", std::move(methods)},
      {"config", report.config},
  };
}

namespace {

std::string escape_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out;
}

std::string render_markdown(const ExperimentReport& report) {
  std::ostringstream md;
  md << "# Speech emotion recognition via modality conversion\n\n";
  md << fmt::format("Evaluation split: `{}` ({} utterances), seed {}.\n\n", to_string(report.eval_split),
                    report.eval_records, report.seed);
  md << "| Method | Input Modality | Using Modality Conversion | WF1(%) |\n";
  md << "|---|---|---|---|\n";
  for (const auto& row : literature_rows()) {
    md << fmt::format("| {} (reference) | {} | {} | {:.1f} |\n", row.method, row.input_modality,
                      row.modality_conversion, row.wf1_percent);
  }
  for (const auto& m : report.methods) {
    const std::string wf1 = m.ok ? percent1(m.scores->weighted_f1) : "failed";
    md << fmt::format("| {} (measured) | Speech | Converting to Text Modality | {} |\n", escape_cell(m.name), wf1);
  }

  md << fmt::format("\nDelta is measured WF1 minus the best speech baseline ({:.1f}), in absolute points.\n\n",
                    best_speech_baseline_wf1());
  md << "| Method | ASR backend | Classifier | WF1(%) | Delta | Accuracy(%) | Macro-F1(%) | Mean WER | "
        "Corpus WER | Empty transcripts | ASR failures |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& m : report.methods) {
    if (!m.ok) {
      md << fmt::format("| {} | {} | {} | failed: {} | | | | | | | |\n", escape_cell(m.name),
                        escape_cell(m.asr_backend_id), escape_cell(m.classifier_id), escape_cell(m.error));
      continue;
    }
    const std::string mean_wer = m.wer ? fmt::format("{:.4f}", m.wer->mean) : "-";
    const std::string corpus_wer = m.wer ? fmt::format("{:.4f}", m.wer->corpus) : "-";
    md << fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", escape_cell(m.name),
                      escape_cell(m.asr_backend_id), escape_cell(m.classifier_id), percent1(m.scores->weighted_f1),
                      signed1(*m.delta_points()), percent1(m.scores->accuracy), percent1(m.scores->macro_f1),
                      mean_wer, corpus_wer, m.degenerate_transcripts, m.asr_failures);
  }
  md << "\nPrecision, recall and F1 use 0 for every 0/0 case.\n";
  return md.str();
}

}  // namespace

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";
  return render_markdown(report);
}

void write_report(const ExperimentReport& report, const fs::path& report_out) {
  if (report_out.has_parent_path()) fs::create_directories(report_out.parent_path());
  for (auto [format, ext] : {std::pair{ReportFormat::json, ".json"}, std::pair{ReportFormat::markdown, ".md"}}) {
    fs::path path = report_out;
    path += ext;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << render_report(report, format);
    if (!out) throw IoError("write failed: " + path.string());
  }
}

}  // namespace modconv
