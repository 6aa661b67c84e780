#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "modconv/emotion.hpp"

namespace modconv::testing {

namespace fs = std::filesystem;

inline const char* stub_worker_path() { return MODCONV_STUB_WORKER; }
inline const char* fake_media_tool_path() { return MODCONV_FAKE_MEDIA_TOOL; }

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("modconv-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t count_lines(const fs::path& path) {
  if (!fs::exists(path)) return 0;
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

// Minimal 16 kHz mono s16 WAV with `samples` samples; `seed` varies the payload.
inline void write_wav(const fs::path& path, std::uint32_t samples = 160, std::uint8_t seed = 0) {
  std::string bytes;
  auto put16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xFF));
    bytes.push_back(static_cast<char>(v >> 8));
  };
  auto put32 = [&](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  };
  const std::uint32_t data = samples * 2;
  bytes += "RIFF";
  put32(36 + data);
  bytes += "WAVEfmt ";
  put32(16);
  put16(1);
  put16(1);
  put32(16000);
  put32(32000);
  put16(2);
  put16(16);
  bytes += "data";
  put32(data);
  for (std::uint32_t i = 0; i < data; ++i) bytes.push_back(static_cast<char>((i * 7 + seed) & 0xFF));
  write_file(path, bytes);
}

struct CsvRow {
  std::string utterance;
  std::string emotion;
  int dialogue;
  int utterance_id;
  std::string speaker = "Joey";
};

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// MELD column layout, including the columns the harness ignores.
inline std::string meld_csv(const std::vector<CsvRow>& rows) {
  std::string out = "Sr No.,Utterance,Speaker,Emotion,Sentiment,Dialogue_ID,Utterance_ID,Season,Episode,StartTime,EndTime\n";
  int sr = 1;
  for (const auto& r : rows) {
    out += std::to_string(sr++) + "," + csv_quote(r.utterance) + "," + r.speaker + "," + r.emotion + ",neutral," +
           std::to_string(r.dialogue) + "," + std::to_string(r.utterance_id) + ",1,1,\"00:00:01,000\",\"00:00:02,000\"\n";
  }
  return out;
}

// Peaked distribution for texts naming an emotion, neutral-leaning otherwise.
inline nlohmann::json stub_distribution(const std::string& text) {
  nlohmann::json d = nlohmann::json::object();
  std::size_t peak = kNumEmotions;
  for (auto label : kAllEmotions) {
    if (text.find(std::string(to_string(label))) != std::string::npos) {
      peak = ordinal(label);
      break;
    }
  }
  for (auto label : kAllEmotions) {
    const auto c = ordinal(label);
    double p;
    if (peak < kNumEmotions) p = (c == peak) ? 0.7 : 0.05;
    else p = (label == EmotionLabel::neutral) ? 0.4 : 0.1;
    d[std::string(to_string(label))] = p;
  }
  return d;
}

/// In-process server for the classify HTTP protocol with scriptable misbehaviour.
class ClassifyStub {
 public:
  enum class Mode { valid, sum_08, missing_key, negative, wrong_count, always_503, bad_request, flaky };

  explicit ClassifyStub(Mode mode = Mode::valid, int flaky_failures = 0)
      : mode_(mode), flaky_left_(flaky_failures) {
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"model_id": "stub-roberta"})", "application/json");
    });
    server_.Post("/v1/classify", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ClassifyStub() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::size_t requests() const { return requests_.load(); }
  std::vector<std::size_t> batch_sizes() const {
    std::lock_guard lock(mutex_);
    return batch_sizes_;
  }
  std::vector<std::string> texts_seen() const {
    std::lock_guard lock(mutex_);
    return texts_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const auto body = nlohmann::json::parse(req.body);
    const auto texts = body.at("texts").get<std::vector<std::string>>();
    {
      std::lock_guard lock(mutex_);
      batch_sizes_.push_back(texts.size());
      texts_.insert(texts_.end(), texts.begin(), texts.end());
    }
    if (mode_ == Mode::always_503 || (mode_ == Mode::flaky && flaky_left_.fetch_sub(1) > 0)) {
      res.status = 503;
      res.set_content(R"({"error": "warming up"})", "application/json");
      return;
    }
    if (mode_ == Mode::bad_request) {
      res.status = 400;
      res.set_content(R"({"error": "bad request"})", "application/json");
      return;
    }
    nlohmann::json dists = nlohmann::json::array();
    for (const auto& t : texts) {
      auto d = stub_distribution(t);
      if (mode_ == Mode::sum_08) {
        for (auto& v : d) v = v.get<double>() * 0.8;
      }
      if (mode_ == Mode::missing_key) d.erase("surprise");
      if (mode_ == Mode::negative) d["fear"] = -0.05;
      dists.push_back(std::move(d));
    }
    if (mode_ == Mode::wrong_count && !dists.empty()) dists.erase(dists.size() - 1);
    res.set_content(nlohmann::json{{"model_id", "stub-roberta"}, {"distributions", dists}}.dump(), "application/json");
  }

  Mode mode_;
  std::atomic<int> flaky_left_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
  mutable std::mutex mutex_;
  std::vector<std::size_t> batch_sizes_;
  std::vector<std::string> texts_;
};

}  // namespace modconv::testing
