#include "modconv/metrics.hpp"

#include "modconv/error.hpp"

namespace modconv {

using nlohmann::json;

ConfusionMatrix::ConfusionMatrix(const Counts& counts) : counts_(counts) {
  for (const auto& row : counts_) {
    for (auto c : row) total_ += c;
  }
}

void ConfusionMatrix::add(EmotionLabel gold, EmotionLabel predicted, std::uint64_t count) {
  counts_[ordinal(gold)][ordinal(predicted)] += count;
  total_ += count;
}

std::uint64_t ConfusionMatrix::support(EmotionLabel gold) const {
  std::uint64_t s = 0;
  for (auto c : counts_[ordinal(gold)]) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::predicted_count(EmotionLabel label) const {
  std::uint64_t s = 0;
  for (const auto& row : counts_) s += row[ordinal(label)];
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) s += counts_[c][c];
  return s;
}

ConfusionMatrix confusion(std::span<const EmotionLabel> golds, std::span<const EmotionLabel> preds) {
  if (golds.size() != preds.size()) throw DomainError("confusion: golds and preds differ in length");
  if (golds.empty()) throw DomainError("confusion: empty label lists");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < golds.size(); ++i) cm.add(golds[i], preds[i]);
  return cm;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DomainError("metrics: empty confusion matrix");
}

}  // namespace

PerClassScores per_class_prf(const ConfusionMatrix& cm) {
  PerClassScores out{};
  for (auto label : kAllEmotions) {
    const auto c = ordinal(label);
    const double tp = static_cast<double>(cm.at(label, label));
    const double support = static_cast<double>(cm.support(label));
    const double predicted = static_cast<double>(cm.predicted_count(label));
    auto& s = out[c];
    s.support = cm.support(label);
    s.precision = ratio(tp, predicted);
    s.recall = ratio(tp, support);
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  }
  return out;
}

double weighted_f1(const PerClassScores& per_class, std::uint64_t n) {
  if (n == 0) throw DomainError("weighted_f1: n must be positive");
  double sum = 0.0;
  for (const auto& s : per_class) sum += (static_cast<double>(s.support) / static_cast<double>(n)) * s.f1;
  return sum;
}

double weighted_f1(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return weighted_f1(per_class_prf(cm), cm.total());
}

double accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

double macro_f1(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0.0;
  for (const auto& s : per_class_prf(cm)) sum += s.f1;
  return sum / static_cast<double>(kNumEmotions);
}

ScoreReport score(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  ScoreReport r;
  r.per_class = per_class_prf(cm);
  r.n = cm.total();
  r.weighted_f1 = weighted_f1(r.per_class, r.n);
  double f1_sum = 0.0;
  for (const auto& s : r.per_class) f1_sum += s.f1;
  r.macro_f1 = f1_sum / static_cast<double>(kNumEmotions);
  r.accuracy = accuracy(cm);
  return r;
}

json to_json(const ScoreReport& report) {
  json per_class = json::object();
  for (auto label : kAllEmotions) {
    const auto& s = report.per_class[ordinal(label)];
    per_class[std::string(to_string(label))] = {
        {"support", s.support}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  }
  return json{{"n", report.n},
              {"weighted_f1", report.weighted_f1},
              {"macro_f1", report.macro_f1},
              {"accuracy", report.accuracy},
              {"per_class", std::move(per_class)}};
}

json to_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (const auto& row : cm.counts()) rows.push_back(row);
  return json{{"labels", [] {
                 json l = json::array();
                 for (auto label : kAllEmotions) l.push_back(to_string(label));
                 return l;
               }()},
              {"counts", std::move(rows)}};
}

}  // namespace modconv
