#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <mutex>
#include <string>
#include <vector>

#include "modconv/classifier.hpp"

namespace modconv {

struct RemoteOptions {
  std::size_t batch_size = 64;  // texts per POST; the server rejects more than 256
  std::size_t parallelism = 1;  // concurrent batches
  int max_retries = 3;          // extra attempts after a transient failure
  std::chrono::milliseconds initial_backoff{200};  // doubled per retry
  std::chrono::seconds timeout{60};
};

/// Client for the HTTP classify protocol:
///   GET  /v1/health   -> {"model_id": ...}
///   POST /v1/classify {"texts": [...]} -> {"model_id": ..., "distributions": [{label: p, ...}, ...]}
/// Connection failures, 429 and 5xx are retried; other non-2xx statuses fail at once.
class RemoteClassifier {
 public:
  /// `endpoint` is "http://host[:port][/base/path]". Throws ConfigError otherwise.
  explicit RemoteClassifier(std::string endpoint, RemoteOptions options = {});

  /// Returns model_id. Throws BackendError on failure.
  std::string health() const;

  /// Order of the result matches `texts`. Throws BackendError or ContractError.
  std::vector<EmotionDistribution> classify(const std::vector<std::string>& texts) const;

  /// model_id from the most recent classify response.
  std::string last_model_id() const;

  std::size_t requests_sent() const { return requests_.load(); }

 private:
  std::vector<EmotionDistribution> classify_batch(const std::vector<std::string>& texts, std::size_t first_index,
                                                  std::string& model_id) const;

  std::string scheme_host_port_;
  std::string base_path_;
  RemoteOptions options_;
  mutable std::atomic<std::size_t> requests_{0};
  mutable std::mutex model_id_mutex_;
  mutable std::string last_model_id_;
};

std::vector<EmotionDistribution> classify_remote(const std::string& endpoint, const std::vector<std::string>& texts,
                                                 const RemoteOptions& options = {});

}  // namespace modconv
