#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "modconv/emotion.hpp"

namespace modconv {

/// Probability vector over the seven emotions, indexed by ordinal.
class EmotionDistribution {
 public:
  using Probs = std::array<double, kNumEmotions>;
  static constexpr double kSumTolerance = 1e-6;

  /// Throws ContractError unless every entry is finite and in [0,1] and the
  /// sum is within kSumTolerance of 1.
  static EmotionDistribution validated(const Probs& probs);
  /// Describes the first violated invariant, or nullopt.
  static std::optional<std::string> violation(const Probs& probs);

  static EmotionDistribution uniform();

  const Probs& probs() const { return probs_; }
  double operator[](EmotionLabel label) const { return probs_[ordinal(label)]; }
  bool operator==(const EmotionDistribution&) const = default;

 private:
  explicit EmotionDistribution(const Probs& probs) : probs_(probs) {}
  Probs probs_{};
};

/// Highest probability; ties go to the lowest ordinal.
EmotionLabel argmax_label(const EmotionDistribution& dist);

/// {"anger": p0, ..., "surprise": p6}
nlohmann::json to_json(const EmotionDistribution& dist);
/// Throws ContractError naming `index` for a missing key, non-number or invariant violation.
EmotionDistribution distribution_from_json(const nlohmann::json& entry, std::size_t index);

struct SparseEntry {
  std::uint32_t index;
  double value;
  bool operator==(const SparseEntry&) const = default;
};
using SparseVector = std::vector<SparseEntry>;  // sorted by index, no zero entries

struct BaselineHyper {
  double l2_lambda = 1e-4;
  double learning_rate = 0.1;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;

  bool operator==(const BaselineHyper&) const = default;
};

/// Multinomial logistic regression over TF-IDF bag-of-words features.
/// Immutable once built; safe to share between threads.
class BaselineModel {
 public:
  static constexpr int kSchemaVersion = 1;

  BaselineModel() = default;
  /// Throws DomainError if shapes disagree, vocabulary has duplicates, or values are not finite.
  BaselineModel(std::vector<std::string> vocabulary, std::vector<double> idf, std::vector<double> weights,
                std::array<double, kNumEmotions> bias, BaselineHyper hyper, std::string trained_on_digest);

  std::size_t vocab_size() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  std::optional<std::uint32_t> index_of(std::string_view token) const;
  const std::vector<double>& idf() const { return idf_; }
  /// Row-major kNumEmotions x vocab_size().
  const std::vector<double>& weights() const { return weights_; }
  const std::array<double, kNumEmotions>& bias() const { return bias_; }
  const BaselineHyper& hyper() const { return hyper_; }
  const std::string& trained_on_digest() const { return trained_on_digest_; }

  /// "baseline@<first 12 hex of corpus digest>"
  std::string model_id() const;

  BaselineModel with_bias(const std::array<double, kNumEmotions>& bias) const;

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> idf_;
  std::vector<double> weights_;
  std::array<double, kNumEmotions> bias_{};
  BaselineHyper hyper_;
  std::string trained_on_digest_;
};

struct LabeledText {
  std::string text;  // normalized
  EmotionLabel label;
};

/// Token counts times idf, L2-normalized. OOV tokens are dropped; no known tokens gives an empty vector.
SparseVector featurize(std::string_view text, const BaselineModel& model);

EmotionDistribution classify_baseline(const BaselineModel& model, std::string_view text);

/// Parameters of the linear softmax layer, exposed for gradient checking.
struct LinearParams {
  std::size_t vocab_size = 0;
  std::vector<double> weights;  // row-major kNumEmotions x vocab_size
  std::array<double, kNumEmotions> bias{};
};

struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::array<double, kNumEmotions> grad_bias{};
};

/// Mean softmax cross-entropy over the examples plus (l2/2)*||W||^2 (bias unregularized), with its gradient.
ObjectiveValue softmax_objective(const LinearParams& params, std::span<const SparseVector> features,
                                 std::span<const EmotionLabel> labels, double l2_lambda);

/// Called after epoch 0 (initial parameters) and after every epoch with the full-corpus objective.
using EpochObserver = std::function<void(std::size_t epoch, double loss)>;

/// Vocabulary = tokens with document frequency >= 2, sorted; idf = ln((1+N)/(1+df)) + 1.
/// Mini-batch gradient descent from zero parameters, shuffled with a seeded
/// mt19937_64. Deterministic for identical inputs. Throws DomainError on an empty corpus.
BaselineModel fit_baseline(std::span<const LabeledText> corpus, const BaselineHyper& hyper,
                           const EpochObserver& observer = {});

/// SHA-256 over "label\ttext\n" lines in corpus order.
std::string corpus_digest(std::span<const LabeledText> corpus);

nlohmann::json to_json(const BaselineModel& model);
/// Validates the schema; throws DomainError describing the first problem.
BaselineModel baseline_from_json(const nlohmann::json& j);
void save_baseline(const std::filesystem::path& path, const BaselineModel& model);
BaselineModel load_baseline(const std::filesystem::path& path);

}  // namespace modconv
