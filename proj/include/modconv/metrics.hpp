#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include <json.hpp>

#include "modconv/emotion.hpp"

namespace modconv {

/// Rows are gold labels, columns predictions.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumEmotions>, kNumEmotions>;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(const Counts& counts);

  void add(EmotionLabel gold, EmotionLabel predicted, std::uint64_t count = 1);

  std::uint64_t at(EmotionLabel gold, EmotionLabel predicted) const {
    return counts_[ordinal(gold)][ordinal(predicted)];
  }
  const Counts& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t support(EmotionLabel gold) const;          // row sum
  std::uint64_t predicted_count(EmotionLabel label) const;  // column sum
  std::uint64_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Counts counts_{};
  std::uint64_t total_ = 0;
};

/// Throws DomainError on length mismatch or empty input.
ConfusionMatrix confusion(std::span<const EmotionLabel> golds, std::span<const EmotionLabel> preds);

struct ClassScore {
  std::uint64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using PerClassScores = std::array<ClassScore, kNumEmotions>;

struct ScoreReport {
  PerClassScores per_class{};
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::uint64_t n = 0;
};

/// Every 0/0 (precision, recall or F1) is defined as 0.
PerClassScores per_class_prf(const ConfusionMatrix& cm);

/// sum_c (support_c / n) * f1_c. Throws DomainError when n == 0.
double weighted_f1(const ConfusionMatrix& cm);
double weighted_f1(const PerClassScores& per_class, std::uint64_t n);

/// trace / n. Throws DomainError when n == 0.
double accuracy(const ConfusionMatrix& cm);

/// Unweighted mean over all seven classes, zero-support ones included.
double macro_f1(const ConfusionMatrix& cm);

ScoreReport score(const ConfusionMatrix& cm);

nlohmann::json to_json(const ScoreReport& report);
nlohmann::json to_json(const ConfusionMatrix& cm);

}  // namespace modconv
