#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modconv/dataset.hpp"
#include "modconv/process.hpp"

namespace modconv {

struct Transcript {
  std::string utterance_key;
  std::string text;      // normalize_text(raw_text)
  std::string raw_text;  // as produced by the backend
  std::string backend_id;
  std::optional<std::string> audio_digest;

  bool degenerate() const { return text.empty(); }
  bool operator==(const Transcript&) const = default;
};

/// Builds a Transcript and normalizes the text, so the text/raw_text invariant always holds.
Transcript make_transcript(std::string utterance_key, std::string raw_text, std::string backend_id,
                           std::optional<std::string> audio_digest = std::nullopt);

nlohmann::json to_json(const Transcript& t);
/// Throws ContractError if required fields are missing or the text invariant is broken.
Transcript transcript_from_json(const nlohmann::json& j);

enum class AsrKind { oracle, external };

struct AsrBackendDescriptor {
  std::string backend_id;             // name@version; for external workers must match the handshake
  AsrKind kind = AsrKind::oracle;
  std::vector<std::string> launch;    // argv, external only
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};  // per utterance
  std::size_t max_in_flight = 4;

  static AsrBackendDescriptor oracle();
  /// Throws ConfigError when the descriptor breaks its invariants.
  void validate() const;
};

inline constexpr const char* kOracleBackendId = "oracle@1";

/// Gold transcript passthrough: ideal ASR.
Transcript oracle_transcribe(const UtteranceRecord& record);

/// Outcome for one utterance. Exactly one of transcript/error is set.
struct TranscribeOutcome {
  std::optional<Transcript> transcript;
  std::string error;

  bool ok() const { return transcript.has_value(); }
};

struct AudioRequest {
  std::string utterance_key;
  std::filesystem::path audio_path;
};

/// Client for a worker speaking the newline-delimited JSON ASR protocol.
/// Requests are pipelined up to max_in_flight; responses may arrive in any order.
class AsrWorker {
 public:
  explicit AsrWorker(const AsrBackendDescriptor& descriptor);

  const std::string& backend_id() const { return backend_id_; }

  /// Per-utterance failures ({"error": ...}) come back as outcomes; worker
  /// exit or timeout throws BackendError; protocol violations throw ProtocolError.
  /// After a throw the worker is unusable.
  std::vector<TranscribeOutcome> transcribe(const std::vector<AudioRequest>& requests);

  /// Closes stdin and waits for the worker. Returns its exit code.
  int shutdown();

 private:
  AsrBackendDescriptor descriptor_;
  std::unique_ptr<ChildProcess> child_;
  std::string backend_id_;
  bool broken_ = false;
};

/// One-shot: launch worker, transcribe one file, shut down.
Transcript external_transcribe(const AsrBackendDescriptor& backend, const std::filesystem::path& audio_path,
                               const std::string& utterance_key);

/// Common interface for the runner and the cache.
class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  virtual const AsrBackendDescriptor& descriptor() const = 0;
  /// Records must carry audio_path for external backends.
  virtual std::vector<TranscribeOutcome> transcribe(const std::vector<UtteranceRecord>& records) = 0;
  /// Number of utterances actually sent to the underlying engine.
  virtual std::size_t invocations() const = 0;
};

class OracleBackend final : public AsrBackend {
 public:
  OracleBackend() : descriptor_(AsrBackendDescriptor::oracle()) {}
  const AsrBackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<TranscribeOutcome> transcribe(const std::vector<UtteranceRecord>& records) override;
  std::size_t invocations() const override { return invocations_; }

 private:
  AsrBackendDescriptor descriptor_;
  std::size_t invocations_ = 0;
};

/// Launches the worker lazily on first use, so fully cached runs start no process.
class ExternalBackend final : public AsrBackend {
 public:
  explicit ExternalBackend(AsrBackendDescriptor descriptor);
  const AsrBackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<TranscribeOutcome> transcribe(const std::vector<UtteranceRecord>& records) override;
  std::size_t invocations() const override { return invocations_; }

 private:
  AsrBackendDescriptor descriptor_;
  std::unique_ptr<AsrWorker> worker_;
  std::size_t invocations_ = 0;
};

std::unique_ptr<AsrBackend> make_asr_backend(const AsrBackendDescriptor& descriptor);

/// Content-addressed transcript store: cache_dir/<backend_id>/<key-hash>.json.
/// Writes go through a temp file and rename, so concurrent writers are safe.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::filesystem::path cache_dir);

  /// Hash of the audio bytes (external) or of the gold text (oracle).
  static std::string content_key(const AsrBackendDescriptor& backend, const UtteranceRecord& record);

  std::filesystem::path entry_path(const std::string& backend_id, const std::string& content_key) const;

  /// A corrupt entry counts a warning and reads as a miss.
  std::optional<Transcript> lookup(const AsrBackendDescriptor& backend, const UtteranceRecord& record,
                                   const std::string& content_key);
  void store(const Transcript& transcript, const std::string& content_key);

  std::size_t warnings() const { return warnings_.load(); }
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> warnings_{0};
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Single-record cached transcription. Throws BackendError if the backend reports an error.
Transcript cached_transcribe(AsrBackend& backend, const UtteranceRecord& record, TranscriptCache& cache);

/// Batch form used by the runner: looks every record up, sends only misses
/// to the backend in one pipelined batch, stores successes. Output order
/// matches input order.
std::vector<TranscribeOutcome> cached_transcribe_all(AsrBackend& backend,
                                                     const std::vector<UtteranceRecord>& records,
                                                     TranscriptCache& cache);

}  // namespace modconv
