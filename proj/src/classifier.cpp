#include "modconv/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "modconv/digest.hpp"
#include "modconv/error.hpp"
#include "modconv/text.hpp"

namespace modconv {

using nlohmann::json;

// ---------------------------------------------------------------------------
// EmotionDistribution

std::optional<std::string> EmotionDistribution::violation(const Probs& probs) {
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const double p = probs[c];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      return fmt::format("probability for {} is out of [0,1]: {}", to_string(kAllEmotions[c]), p);
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) return fmt::format("probabilities sum to {}, not 1", sum);
  return std::nullopt;
}

EmotionDistribution EmotionDistribution::validated(const Probs& probs) {
  if (auto problem = violation(probs)) throw ContractError(*problem);
  return EmotionDistribution(probs);
}

EmotionDistribution EmotionDistribution::uniform() {
  Probs p;
  p.fill(1.0 / kNumEmotions);
  return EmotionDistribution(p);
}

EmotionLabel argmax_label(const EmotionDistribution& dist) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumEmotions; ++c) {
    if (dist.probs()[c] > dist.probs()[best]) best = c;
  }
  return kAllEmotions[best];
}

json to_json(const EmotionDistribution& dist) {
  json j = json::object();
  for (auto label : kAllEmotions) j[std::string(to_string(label))] = dist[label];
  return j;
}

EmotionDistribution distribution_from_json(const json& entry, std::size_t index) {
  if (!entry.is_object()) throw ContractError(fmt::format("distribution {}: not an object", index));
  EmotionDistribution::Probs probs{};
  for (auto label : kAllEmotions) {
    const std::string key(to_string(label));
    const auto it = entry.find(key);
    if (it == entry.end()) throw ContractError(fmt::format("distribution {}: missing label '{}'", index, key));
    if (!it->is_number()) throw ContractError(fmt::format("distribution {}: '{}' is not a number", index, key));
    probs[ordinal(label)] = it->get<double>();
  }
  if (auto problem = EmotionDistribution::violation(probs)) {
    throw ContractError(fmt::format("distribution {}: {}", index, *problem));
  }
  return EmotionDistribution::validated(probs);
}

// ---------------------------------------------------------------------------
// BaselineModel

BaselineModel::BaselineModel(std::vector<std::string> vocabulary, std::vector<double> idf,
                             std::vector<double> weights, std::array<double, kNumEmotions> bias,
                             BaselineHyper hyper, std::string trained_on_digest)
    : vocabulary_(std::move(vocabulary)),
      idf_(std::move(idf)),
      weights_(std::move(weights)),
      bias_(bias),
      hyper_(hyper),
      trained_on_digest_(std::move(trained_on_digest)) {
  const std::size_t v = vocabulary_.size();
  if (idf_.size() != v) throw DomainError(fmt::format("idf has {} entries, vocabulary {}", idf_.size(), v));
  if (weights_.size() != kNumEmotions * v) {
    throw DomainError(fmt::format("weights have {} entries, expected {}", weights_.size(), kNumEmotions * v));
  }
  auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(idf_.begin(), idf_.end(), finite) || !std::all_of(weights_.begin(), weights_.end(), finite) ||
      !std::all_of(bias_.begin(), bias_.end(), finite)) {
    throw DomainError("model parameters must be finite");
  }
  index_.reserve(v);
  for (std::size_t i = 0; i < v; ++i) {
    if (!index_.emplace(vocabulary_[i], static_cast<std::uint32_t>(i)).second) {
      throw DomainError("duplicate vocabulary token '" + vocabulary_[i] + "'");
    }
  }
}

std::optional<std::uint32_t> BaselineModel::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string BaselineModel::model_id() const { return "baseline@" + trained_on_digest_.substr(0, 12); }

BaselineModel BaselineModel::with_bias(const std::array<double, kNumEmotions>& bias) const {
  BaselineModel copy = *this;
  copy.bias_ = bias;
  return copy;
}

SparseVector featurize(std::string_view text, const BaselineModel& model) {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : split_tokens(text)) {
    if (const auto idx = model.index_of(token)) counts[*idx] += 1.0;
  }
  SparseVector out;
  out.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [idx, count] : counts) {
    const double value = count * model.idf()[idx];
    if (value == 0.0) continue;
    out.push_back({idx, value});
    norm2 += value * value;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : out) e.value *= inv;
  }
  return out;
}

namespace {

using Logits = std::array<double, kNumEmotions>;

Logits compute_logits(const std::vector<double>& weights, std::size_t vocab_size,
                      const std::array<double, kNumEmotions>& bias, const SparseVector& x) {
  Logits z = bias;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const double* row = weights.data() + c * vocab_size;
    for (const auto& e : x) z[c] += row[e.index] * e.value;
  }
  return z;
}

// In-place softmax; returns log-sum-exp of the input.
double softmax_inplace(Logits& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return mx + std::log(sum);
}

}  // namespace

EmotionDistribution classify_baseline(const BaselineModel& model, std::string_view text) {
  auto z = compute_logits(model.weights(), model.vocab_size(), model.bias(), featurize(text, model));
  softmax_inplace(z);
  return EmotionDistribution::validated(z);
}

ObjectiveValue softmax_objective(const LinearParams& params, std::span<const SparseVector> features,
                                 std::span<const EmotionLabel> labels, double l2_lambda) {
  if (features.size() != labels.size()) throw DomainError("softmax_objective: features/labels size mismatch");
  if (params.weights.size() != kNumEmotions * params.vocab_size) {
    throw DomainError("softmax_objective: weight shape mismatch");
  }
  const std::size_t v = params.vocab_size;
  ObjectiveValue out;
  out.grad_weights.assign(params.weights.size(), 0.0);

  const std::size_t n = features.size();
  if (n > 0) {
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      Logits z = compute_logits(params.weights, v, params.bias, features[i]);
      const std::size_t y = ordinal(labels[i]);
      const double target_logit = z[y];
      const double lse = softmax_inplace(z);
      out.loss += (lse - target_logit) * scale;
      for (std::size_t c = 0; c < kNumEmotions; ++c) {
        const double delta = (z[c] - (c == y ? 1.0 : 0.0)) * scale;
        out.grad_bias[c] += delta;
        double* grow = out.grad_weights.data() + c * v;
        for (const auto& e : features[i]) grow[e.index] += delta * e.value;
      }
    }
  }
  double norm2 = 0.0;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    norm2 += params.weights[k] * params.weights[k];
    out.grad_weights[k] += l2_lambda * params.weights[k];
  }
  out.loss += 0.5 * l2_lambda * norm2;
  return out;
}

std::string corpus_digest(std::span<const LabeledText> corpus) {
  std::string buf;
  for (const auto& ex : corpus) {
    buf.append(to_string(ex.label));
    buf.push_back('\t');
    buf.append(ex.text);
    buf.push_back('\n');
  }
  return sha256_hex(buf);
}

namespace {

// Unbiased draw in [0, bound) from the raw 64-bit stream, so shuffles are
// identical across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

BaselineModel fit_baseline(std::span<const LabeledText> corpus, const BaselineHyper& hyper,
                           const EpochObserver& observer) {
  if (corpus.empty()) throw DomainError("fit_baseline: empty corpus");
  if (hyper.batch_size == 0) throw DomainError("fit_baseline: batch_size must be positive");
  if (!(hyper.learning_rate > 0.0) || !(hyper.l2_lambda >= 0.0)) {
    throw DomainError("fit_baseline: learning_rate must be > 0 and l2_lambda >= 0");
  }

  std::map<std::string, std::size_t> df;
  for (const auto& ex : corpus) {
    auto tokens = split_tokens(ex.text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[t];
  }
  std::vector<std::string> vocabulary;
  std::vector<double> idf;
  const double n_docs = static_cast<double>(corpus.size());
  for (const auto& [token, count] : df) {
    if (count < 2) continue;
    vocabulary.push_back(token);
    idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  const std::size_t v = vocabulary.size();
  const std::string digest = corpus_digest(corpus);

  // Featurization only needs vocabulary and idf.
  const BaselineModel shape(vocabulary, idf, std::vector<double>(kNumEmotions * v, 0.0), {}, hyper, digest);
  std::vector<SparseVector> features;
  std::vector<EmotionLabel> labels;
  features.reserve(corpus.size());
  labels.reserve(corpus.size());
  for (const auto& ex : corpus) {
    features.push_back(featurize(ex.text, shape));
    labels.push_back(ex.label);
  }

  LinearParams params;
  params.vocab_size = v;
  params.weights.assign(kNumEmotions * v, 0.0);

  if (observer) observer(0, softmax_objective(params, features, labels, hyper.l2_lambda).loss);

  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<SparseVector> batch_x;
  std::vector<EmotionLabel> batch_y;

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_x.push_back(features[order[k]]);
        batch_y.push_back(labels[order[k]]);
      }
      const auto obj = softmax_objective(params, batch_x, batch_y, hyper.l2_lambda);
      for (std::size_t k = 0; k < params.weights.size(); ++k) {
        params.weights[k] -= hyper.learning_rate * obj.grad_weights[k];
      }
      for (std::size_t c = 0; c < kNumEmotions; ++c) params.bias[c] -= hyper.learning_rate * obj.grad_bias[c];
    }
    if (observer) observer(epoch, softmax_objective(params, features, labels, hyper.l2_lambda).loss);
  }

  return BaselineModel(std::move(vocabulary), std::move(idf), std::move(params.weights), params.bias, hyper, digest);
}

// ---------------------------------------------------------------------------
// Persistence

json to_json(const BaselineModel& model) {
  const auto& h = model.hyper();
  return json{
      {"schema_version", BaselineModel::kSchemaVersion},
      {"kind", "bow-softmax-regression"},
      {"labels", [] {
         json labels = json::array();
         for (auto label : kAllEmotions) labels.push_back(to_string(label));
         return labels;
       }()},
      {"vocabulary", model.vocabulary()},
      {"idf", model.idf()},
      {"weights", model.weights()},
      {"bias", model.bias()},
      {"hyper",
       {{"l2_lambda", h.l2_lambda},
        {"learning_rate", h.learning_rate},
        {"epochs", h.epochs},
        {"batch_size", h.batch_size},
        {"seed", h.seed}}},
      {"trained_on_digest", model.trained_on_digest()},
  };
}

BaselineModel baseline_from_json(const json& j) {
  try {
    if (!j.is_object()) throw DomainError("model: not a JSON object");
    const int version = j.at("schema_version").get<int>();
    if (version != BaselineModel::kSchemaVersion) {
      throw DomainError(fmt::format("model: unsupported schema_version {}", version));
    }
    const auto& labels = j.at("labels");
    if (!labels.is_array() || labels.size() != kNumEmotions) throw DomainError("model: labels must list 7 emotions");
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
      if (labels[c].get<std::string>() != to_string(kAllEmotions[c])) {
        throw DomainError("model: labels are not in canonical order");
      }
    }
    const auto& hj = j.at("hyper");
    BaselineHyper hyper;
    hyper.l2_lambda = hj.at("l2_lambda").get<double>();
    hyper.learning_rate = hj.at("learning_rate").get<double>();
    hyper.epochs = hj.at("epochs").get<std::size_t>();
    hyper.batch_size = hj.at("batch_size").get<std::size_t>();
    hyper.seed = hj.at("seed").get<std::uint64_t>();
    const auto bias_vec = j.at("bias").get<std::vector<double>>();
    if (bias_vec.size() != kNumEmotions) throw DomainError("model: bias must have 7 entries");
    std::array<double, kNumEmotions> bias{};
    std::copy(bias_vec.begin(), bias_vec.end(), bias.begin());
    return BaselineModel(j.at("vocabulary").get<std::vector<std::string>>(), j.at("idf").get<std::vector<double>>(),
                         j.at("weights").get<std::vector<double>>(), bias, hyper,
                         j.at("trained_on_digest").get<std::string>());
  } catch (const json::exception& e) {
    throw DomainError(std::string("model: ") + e.what());
  }
}

void save_baseline(const std::filesystem::path& path, const BaselineModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(model).dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

BaselineModel load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw DomainError(std::string("model: invalid JSON: ") + e.what());
  }
  return baseline_from_json(j);
}

}  // namespace modconv
