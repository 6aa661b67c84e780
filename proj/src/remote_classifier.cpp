#include "modconv/remote_classifier.hpp"

#include <future>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "modconv/error.hpp"

namespace modconv {

using nlohmann::json;

namespace {

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

RemoteClassifier::RemoteClassifier(std::string endpoint, RemoteOptions options) : options_(options) {
  constexpr std::string_view kScheme = "http://";
  if (endpoint.rfind(kScheme, 0) != 0) {
    throw ConfigError("classify endpoint must start with http://: " + endpoint);
  }
  const auto slash = endpoint.find('/', kScheme.size());
  if (slash == std::string::npos) {
    scheme_host_port_ = endpoint;
  } else {
    scheme_host_port_ = endpoint.substr(0, slash);
    base_path_ = endpoint.substr(slash);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
  if (scheme_host_port_.size() == kScheme.size()) throw ConfigError("classify endpoint has no host: " + endpoint);
  if (options_.batch_size == 0) throw ConfigError("classify batch_size must be positive");
  if (options_.parallelism == 0) options_.parallelism = 1;
}

std::string RemoteClassifier::health() const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  auto res = client.Get(base_path_ + "/v1/health");
  if (!res) throw BackendError("health check failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError(fmt::format("health check returned HTTP {}", res->status));
  try {
    return json::parse(res->body).at("model_id").get<std::string>();
  } catch (const json::exception& e) {
    throw ContractError(std::string("health response: ") + e.what());
  }
}

std::vector<EmotionDistribution> RemoteClassifier::classify_batch(const std::vector<std::string>& texts,
                                                                  std::size_t first_index,
                                                                  std::string& model_id) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  const std::string body = json{{"texts", texts}}.dump();

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("classify: retry {}/{} after {}", attempt, options_.max_retries, last_error);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++requests_;
    auto res = client.Post(base_path_ + "/v1/classify", body, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
      if (transient_status(res->status)) continue;
      throw BackendError("classify failed with " + last_error);
    }

    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& e) {
      throw ContractError(std::string("classify response is not JSON: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("distributions") || !reply["distributions"].is_array()) {
      throw ContractError("classify response has no distributions array");
    }
    const auto& dists = reply["distributions"];
    if (dists.size() != texts.size()) {
      throw ContractError(fmt::format("classify returned {} distributions for {} texts", dists.size(), texts.size()));
    }
    if (const auto it = reply.find("model_id"); it != reply.end() && it->is_string()) {
      model_id = it->get<std::string>();
    }
    std::vector<EmotionDistribution> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < dists.size(); ++i) out.push_back(distribution_from_json(dists[i], first_index + i));
    return out;
  }
  throw BackendError(fmt::format("classify failed after {} retries: {}", options_.max_retries, last_error));
}

std::vector<EmotionDistribution> RemoteClassifier::classify(const std::vector<std::string>& texts) const {
  std::vector<std::pair<std::size_t, std::size_t>> batches;  // [begin, end)
  for (std::size_t b = 0; b < texts.size(); b += options_.batch_size) {
    batches.emplace_back(b, std::min(texts.size(), b + options_.batch_size));
  }
  std::vector<std::vector<EmotionDistribution>> results(batches.size());
  std::vector<std::string> model_ids(batches.size());

  auto run = [&](std::size_t k) {
    const auto [begin, end] = batches[k];
    const std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                         texts.begin() + static_cast<std::ptrdiff_t>(end));
    results[k] = classify_batch(slice, begin, model_ids[k]);
  };

  // Fixed-size waves of concurrent batches; results land by batch index.
  for (std::size_t wave = 0; wave < batches.size(); wave += options_.parallelism) {
    const std::size_t wave_end = std::min(batches.size(), wave + options_.parallelism);
    std::vector<std::future<void>> futures;
    for (std::size_t k = wave + 1; k < wave_end; ++k) futures.push_back(std::async(std::launch::async, run, k));
    std::exception_ptr first_error;
    try {
      run(wave);
    } catch (...) {
      first_error = std::current_exception();
    }
    for (auto& f : futures) {
      try {
        f.get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  std::vector<EmotionDistribution> out;
  out.reserve(texts.size());
  for (auto& r : results) {
    for (auto& d : r) out.push_back(std::move(d));
  }
  if (!model_ids.empty()) {
    std::lock_guard lock(model_id_mutex_);
    last_model_id_ = model_ids.back();
  }
  return out;
}

std::string RemoteClassifier::last_model_id() const {
  std::lock_guard lock(model_id_mutex_);
  return last_model_id_;
}

std::vector<EmotionDistribution> classify_remote(const std::string& endpoint, const std::vector<std::string>& texts,
                                                 const RemoteOptions& options) {
  return RemoteClassifier(endpoint, options).classify(texts);
}

}  // namespace modconv
