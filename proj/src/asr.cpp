#include "modconv/asr.hpp"

#include <unistd.h>

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "modconv/digest.hpp"
#include "modconv/error.hpp"
#include "modconv/text.hpp"

namespace modconv {

namespace fs = std::filesystem;
using nlohmann::json;

Transcript make_transcript(std::string utterance_key, std::string raw_text, std::string backend_id,
                           std::optional<std::string> audio_digest) {
  Transcript t;
  t.utterance_key = std::move(utterance_key);
  t.text = normalize_text(raw_text);
  t.raw_text = std::move(raw_text);
  t.backend_id = std::move(backend_id);
  t.audio_digest = std::move(audio_digest);
  return t;
}

json to_json(const Transcript& t) {
  return json{
      {"utterance_key", t.utterance_key},
      {"text", t.text},
      {"raw_text", t.raw_text},
      {"backend_id", t.backend_id},
      {"audio_digest", t.audio_digest ? json(*t.audio_digest) : json(nullptr)},
  };
}

Transcript transcript_from_json(const json& j) {
  try {
    Transcript t;
    t.utterance_key = j.at("utterance_key").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.raw_text = j.at("raw_text").get<std::string>();
    t.backend_id = j.at("backend_id").get<std::string>();
    if (const auto it = j.find("audio_digest"); it != j.end() && !it->is_null()) {
      t.audio_digest = it->get<std::string>();
    }
    if (t.backend_id.empty()) throw ContractError("transcript: empty backend_id");
    if (t.text != normalize_text(t.raw_text)) throw ContractError("transcript: text is not normalize(raw_text)");
    return t;
  } catch (const json::exception& e) {
    throw ContractError(std::string("transcript: ") + e.what());
  }
}

AsrBackendDescriptor AsrBackendDescriptor::oracle() {
  AsrBackendDescriptor d;
  d.backend_id = kOracleBackendId;
  d.kind = AsrKind::oracle;
  return d;
}

void AsrBackendDescriptor::validate() const {
  if (backend_id.empty()) throw ConfigError("asr backend: backend_id must be nonempty");
  if (kind == AsrKind::oracle && !launch.empty()) throw ConfigError("asr backend: oracle takes no launch command");
  if (kind == AsrKind::external && launch.empty()) throw ConfigError("asr backend: external needs a launch command");
  if (timeout.count() <= 0) throw ConfigError("asr backend: timeout must be positive");
  if (max_in_flight == 0) throw ConfigError("asr backend: max_in_flight must be at least 1");
}

Transcript oracle_transcribe(const UtteranceRecord& record) {
  return make_transcript(record.utterance_key, record.gold_text, kOracleBackendId);
}

// ---------------------------------------------------------------------------
// External worker

AsrWorker::AsrWorker(const AsrBackendDescriptor& descriptor) : descriptor_(descriptor) {
  descriptor_.validate();
  if (descriptor_.kind != AsrKind::external) throw ConfigError("AsrWorker needs an external backend");
  try {
    child_ = std::make_unique<ChildProcess>(descriptor_.launch);
  } catch (const IoError& e) {
    throw BackendError(std::string("cannot launch ASR worker: ") + e.what());
  }

  const auto first = child_->read_line(std::chrono::steady_clock::now() + descriptor_.timeout);
  if (first.status == ChildProcess::ReadStatus::eof) {
    const int code = child_->terminate();
    throw BackendError(fmt::format("ASR worker exited before handshake (exit {})", code));
  }
  if (first.status == ChildProcess::ReadStatus::timeout) {
    child_->terminate(std::chrono::milliseconds(0));
    throw BackendError("ASR worker handshake timed out");
  }
  json hello;
  try {
    hello = json::parse(first.line);
  } catch (const json::exception&) {
    throw ProtocolError("malformed handshake line: " + first.line);
  }
  if (!hello.is_object() || !hello.contains("backend_id") || !hello["backend_id"].is_string() ||
      hello["backend_id"].get<std::string>().empty()) {
    throw ProtocolError("handshake without backend_id: " + first.line);
  }
  backend_id_ = hello["backend_id"].get<std::string>();
  if (backend_id_ != descriptor_.backend_id) {
    throw BackendError(fmt::format("ASR worker reports backend_id '{}' but '{}' is configured", backend_id_,
                                   descriptor_.backend_id));
  }
}

std::vector<TranscribeOutcome> AsrWorker::transcribe(const std::vector<AudioRequest>& requests) {
  if (broken_) throw BackendError("ASR worker is no longer usable after an earlier failure");
  std::vector<TranscribeOutcome> outcomes(requests.size());
  std::unordered_map<std::string, std::size_t> pending;
  std::vector<std::optional<std::string>> digests(requests.size());

  try {
    std::size_t next = 0;
    std::size_t done = 0;
    auto deadline = std::chrono::steady_clock::now() + descriptor_.timeout;

    auto send_more = [&] {
      while (next < requests.size() && pending.size() < descriptor_.max_in_flight) {
        const auto& req = requests[next];
        const std::size_t index = next++;
        std::error_code ec;
        if (!fs::is_regular_file(req.audio_path, ec)) {
          outcomes[index].error = "audio file not found: " + req.audio_path.string();
          ++done;
          continue;
        }
        if (pending.contains(req.utterance_key)) {
          throw DomainError("duplicate utterance key in one batch: " + req.utterance_key);
        }
        digests[index] = sha256_file_hex(req.audio_path);
        const json line{{"id", req.utterance_key}, {"audio", fs::absolute(req.audio_path).string()}};
        pending.emplace(req.utterance_key, index);
        child_->write_line(line.dump());
        // The timeout clock restarts on every response and when an idle worker gets work.
        if (pending.size() == 1) deadline = std::chrono::steady_clock::now() + descriptor_.timeout;
      }
    };

    send_more();
    while (done < requests.size()) {
      const auto read = child_->read_line(deadline);
      if (read.status == ChildProcess::ReadStatus::timeout) {
        child_->terminate(std::chrono::milliseconds(0));
        throw BackendError(fmt::format("ASR worker timed out with {} request(s) pending", pending.size()));
      }
      if (read.status == ChildProcess::ReadStatus::eof) {
        const int code = child_->terminate();
        throw BackendError(fmt::format("ASR worker exited (code {}) with {} request(s) pending", code,
                                       pending.size()));
      }
      json reply;
      try {
        reply = json::parse(read.line);
      } catch (const json::exception&) {
        throw ProtocolError("malformed response line: " + read.line);
      }
      if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_string()) {
        throw ProtocolError("response without string id: " + read.line);
      }
      const auto id = reply["id"].get<std::string>();
      const auto it = pending.find(id);
      if (it == pending.end()) throw ProtocolError("response for unknown id '" + id + "': " + read.line);
      const std::size_t index = it->second;

      if (const auto text = reply.find("text"); text != reply.end() && text->is_string()) {
        outcomes[index].transcript = make_transcript(id, text->get<std::string>(), backend_id_, digests[index]);
      } else if (const auto err = reply.find("error"); err != reply.end() && err->is_string()) {
        outcomes[index].error = err->get<std::string>();
      } else {
        throw ProtocolError("response has neither text nor error: " + read.line);
      }
      pending.erase(it);
      ++done;
      deadline = std::chrono::steady_clock::now() + descriptor_.timeout;
      send_more();
    }
  } catch (...) {
    broken_ = true;
    throw;
  }
  return outcomes;
}

int AsrWorker::shutdown() { return child_ ? child_->terminate(descriptor_.timeout) : 0; }

Transcript external_transcribe(const AsrBackendDescriptor& backend, const fs::path& audio_path,
                               const std::string& utterance_key) {
  if (!fs::is_regular_file(audio_path)) throw NotFoundError(utterance_key + ": audio file not found: " + audio_path.string());
  AsrWorker worker(backend);
  auto outcomes = worker.transcribe({{utterance_key, audio_path}});
  worker.shutdown();
  auto& outcome = outcomes.front();
  if (!outcome.ok()) throw BackendError(utterance_key + ": " + outcome.error);
  return std::move(*outcome.transcript);
}

// ---------------------------------------------------------------------------
// Backends

std::vector<TranscribeOutcome> OracleBackend::transcribe(const std::vector<UtteranceRecord>& records) {
  std::vector<TranscribeOutcome> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    out.push_back({oracle_transcribe(rec), {}});
    ++invocations_;
  }
  return out;
}

ExternalBackend::ExternalBackend(AsrBackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
  if (descriptor_.kind != AsrKind::external) throw ConfigError("ExternalBackend needs an external descriptor");
}

std::vector<TranscribeOutcome> ExternalBackend::transcribe(const std::vector<UtteranceRecord>& records) {
  std::vector<TranscribeOutcome> out(records.size());
  std::vector<AudioRequest> requests;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].audio_path) {
      out[i].error = records[i].utterance_key + ": no audio path";
      continue;
    }
    requests.push_back({records[i].utterance_key, *records[i].audio_path});
    positions.push_back(i);
  }
  if (requests.empty()) return out;
  if (!worker_) worker_ = std::make_unique<AsrWorker>(descriptor_);
  std::vector<TranscribeOutcome> got;
  try {
    got = worker_->transcribe(requests);
  } catch (...) {
    worker_.reset();
    throw;
  }
  invocations_ += requests.size();
  for (std::size_t k = 0; k < positions.size(); ++k) out[positions[k]] = std::move(got[k]);
  return out;
}

std::unique_ptr<AsrBackend> make_asr_backend(const AsrBackendDescriptor& descriptor) {
  descriptor.validate();
  if (descriptor.kind == AsrKind::oracle) return std::make_unique<OracleBackend>();
  return std::make_unique<ExternalBackend>(descriptor);
}

// ---------------------------------------------------------------------------
// Cache

namespace {

std::string safe_component(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '@' || c == '.' || c == '-' || c == '_' || c == '+';
    out.push_back(ok ? c : '_');
  }
  return out;
}

}  // namespace

TranscriptCache::TranscriptCache(fs::path cache_dir) : dir_(std::move(cache_dir)) {}

std::string TranscriptCache::content_key(const AsrBackendDescriptor& backend, const UtteranceRecord& record) {
  if (backend.kind == AsrKind::oracle) return sha256_hex(record.gold_text);
  if (!record.audio_path) throw NotFoundError(record.utterance_key + ": no audio path");
  return sha256_file_hex(*record.audio_path);
}

fs::path TranscriptCache::entry_path(const std::string& backend_id, const std::string& content_key) const {
  return dir_ / safe_component(backend_id) / (content_key + ".json");
}

std::optional<Transcript> TranscriptCache::lookup(const AsrBackendDescriptor& backend, const UtteranceRecord& record,
                                                  const std::string& content_key) {
  const auto path = entry_path(backend.backend_id, content_key);
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    ++misses_;
    return std::nullopt;
  }
  try {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto t = transcript_from_json(json::parse(ss.str()));
    if (t.backend_id != backend.backend_id) throw ContractError("backend_id mismatch");
    if (backend.kind == AsrKind::external && t.audio_digest != content_key) throw ContractError("audio digest mismatch");
    // Entries are keyed by content; identical audio or gold text may be shared between utterances.
    t.utterance_key = record.utterance_key;
    ++hits_;
    return t;
  } catch (const std::exception& e) {
    ++warnings_;
    ++misses_;
    spdlog::warn("discarding corrupt cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void TranscriptCache::store(const Transcript& transcript, const std::string& content_key) {
  const auto path = entry_path(transcript.backend_id, content_key);
  fs::create_directories(path.parent_path());
  thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path temp = path;
  temp += fmt::format(".tmp-{}-{:016x}", ::getpid(), rng());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + temp.string());
    out << to_json(transcript).dump();
    if (!out) throw IoError("write failed: " + temp.string());
  }
  fs::rename(temp, path);
}

Transcript cached_transcribe(AsrBackend& backend, const UtteranceRecord& record, TranscriptCache& cache) {
  auto outcomes = cached_transcribe_all(backend, {record}, cache);
  if (!outcomes.front().ok()) throw BackendError(record.utterance_key + ": " + outcomes.front().error);
  return std::move(*outcomes.front().transcript);
}

std::vector<TranscribeOutcome> cached_transcribe_all(AsrBackend& backend, const std::vector<UtteranceRecord>& records,
                                                     TranscriptCache& cache) {
  const auto& desc = backend.descriptor();
  std::vector<TranscribeOutcome> out(records.size());
  std::vector<std::string> keys(records.size());
  std::vector<UtteranceRecord> misses;
  std::vector<std::size_t> miss_positions;

  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      keys[i] = TranscriptCache::content_key(desc, records[i]);
    } catch (const Error& e) {
      out[i].error = e.what();
      continue;
    }
    if (auto hit = cache.lookup(desc, records[i], keys[i])) {
      out[i].transcript = std::move(*hit);
    } else {
      misses.push_back(records[i]);
      miss_positions.push_back(i);
    }
  }
  if (misses.empty()) return out;

  auto fresh = backend.transcribe(misses);
  for (std::size_t k = 0; k < miss_positions.size(); ++k) {
    const std::size_t i = miss_positions[k];
    if (fresh[k].ok()) cache.store(*fresh[k].transcript, keys[i]);
    out[i] = std::move(fresh[k]);
  }
  return out;
}

}  // namespace modconv
