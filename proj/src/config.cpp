#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "modconv/error.hpp"
#include "modconv/runner.hpp"

namespace modconv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
void check_keys(const toml::table& table, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (auto&& [key, _] : table) {
    bool known = false;
    for (auto a : allowed) known = known || key.str() == a;
    if (!known) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key.str()));
  }
}

std::optional<std::string> get_string(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (const auto v = node->value<std::string>(); v && node->is_string()) return *v;
  throw ConfigError(fmt::format("{}.{} must be a string", where, key));
}

std::string require_string(const toml::table& t, std::string_view key, std::string_view where) {
  auto v = get_string(t, key, where);
  if (!v) throw ConfigError(fmt::format("{}: missing '{}'", where, key));
  return *v;
}

std::optional<std::int64_t> get_int(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (!node->is_integer()) throw ConfigError(fmt::format("{}.{} must be an integer", where, key));
  return node->value<std::int64_t>();
}

std::optional<std::size_t> get_count(const toml::table& t, std::string_view key, std::string_view where) {
  const auto v = get_int(t, key, where);
  if (!v) return std::nullopt;
  if (*v < 0) throw ConfigError(fmt::format("{}.{} must be non-negative", where, key));
  return static_cast<std::size_t>(*v);
}

std::optional<double> get_double(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (!node->is_number()) throw ConfigError(fmt::format("{}.{} must be a number", where, key));
  return node->value<double>();
}

std::optional<std::vector<std::string>> get_string_array(const toml::table& t, std::string_view key,
                                                         std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  const auto* arr = node->as_array();
  if (!arr) throw ConfigError(fmt::format("{}.{} must be an array of strings", where, key));
  std::vector<std::string> out;
  for (const auto& item : *arr) {
    const auto s = item.value<std::string>();
    if (!item.is_string() || !s) throw ConfigError(fmt::format("{}.{} must be an array of strings", where, key));
    out.push_back(*s);
  }
  return out;
}

const toml::table* get_table(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return nullptr;
  const auto* tbl = node->as_table();
  if (!tbl) throw ConfigError(fmt::format("{}.{} must be a table", where, key));
  return tbl;
}

Split require_split(std::string_view text, std::string_view where) {
  const auto s = parse_split(text);
  if (!s) throw ConfigError(fmt::format("{}: unknown split '{}' (train, dev, test)", where, text));
  return *s;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

AsrBackendDescriptor parse_asr(const toml::table& t, std::string_view where) {
  check_keys(t, where, {"kind", "backend_id", "launch", "timeout_seconds", "max_in_flight"});
  const auto kind = require_string(t, "kind", where);
  AsrBackendDescriptor d;
  if (kind == "oracle") {
    d = AsrBackendDescriptor::oracle();
    if (t.contains("launch")) throw ConfigError(fmt::format("{}: oracle backend takes no launch command", where));
    if (auto id = get_string(t, "backend_id", where); id && *id != d.backend_id) {
      throw ConfigError(fmt::format("{}: oracle backend_id is fixed to {}", where, d.backend_id));
    }
  } else if (kind == "external") {
    d.kind = AsrKind::external;
    d.backend_id = require_string(t, "backend_id", where);
    auto launch = get_string_array(t, "launch", where);
    if (!launch || launch->empty()) throw ConfigError(fmt::format("{}: external backend needs 'launch'", where));
    d.launch = std::move(*launch);
  } else {
    throw ConfigError(fmt::format("{}: unknown ASR backend kind '{}' (oracle, external)", where, kind));
  }
  if (auto s = get_double(t, "timeout_seconds", where)) {
    if (*s <= 0) throw ConfigError(fmt::format("{}.timeout_seconds must be positive", where));
    d.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(*s * 1000.0));
  }
  if (auto n = get_count(t, "max_in_flight", where)) d.max_in_flight = *n;
  return d;
}

ClassifierConfig parse_classifier(const toml::table& t, std::string_view where, const fs::path& base) {
  check_keys(t, where, {"kind", "model", "train_split", "endpoint", "batch_size", "max_retries", "backoff_ms",
                        "timeout_seconds"});
  const auto kind = require_string(t, "kind", where);
  ClassifierConfig c;
  if (kind == "baseline") {
    c.kind = ClassifierKind::baseline;
    const auto model = get_string(t, "model", where);
    const auto split = get_string(t, "train_split", where);
    if (model.has_value() == split.has_value()) {
      throw ConfigError(fmt::format("{}: baseline needs exactly one of 'model' or 'train_split'", where));
    }
    if (model) c.model_path = resolve(base, *model);
    if (split) c.train_split = require_split(*split, where);
  } else if (kind == "remote") {
    c.kind = ClassifierKind::remote;
    c.endpoint = require_string(t, "endpoint", where);
    if (auto n = get_count(t, "batch_size", where)) c.remote.batch_size = *n;
    if (auto n = get_int(t, "max_retries", where)) c.remote.max_retries = static_cast<int>(*n);
    if (auto n = get_count(t, "backoff_ms", where)) c.remote.initial_backoff = std::chrono::milliseconds(*n);
    if (auto n = get_count(t, "timeout_seconds", where)) c.remote.timeout = std::chrono::seconds(*n);
  } else {
    throw ConfigError(fmt::format("{}: unknown classifier kind '{}' (baseline, remote)", where, kind));
  }
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: no methods");
  std::set<std::string> names;
  for (const auto& m : methods) {
    if (m.name.empty()) throw ConfigError("config: method with empty name");
    if (!names.insert(m.name).second) throw ConfigError("config: duplicate method name '" + m.name + "'");
    m.asr.validate();
    if (m.classifier.kind == ClassifierKind::remote) {
      if (m.classifier.endpoint.rfind("http://", 0) != 0) {
        throw ConfigError(fmt::format("method '{}': endpoint must be http://...", m.name));
      }
      if (m.classifier.remote.batch_size == 0 || m.classifier.remote.batch_size > 256) {
        throw ConfigError(fmt::format("method '{}': classifier batch_size must be in [1, 256]", m.name));
      }
    } else if (m.classifier.train_split) {
      if (!dataset.csv.contains(*m.classifier.train_split)) {
        throw ConfigError(fmt::format("method '{}': train_split {} has no CSV", m.name,
                                      to_string(*m.classifier.train_split)));
      }
    } else if (m.classifier.model_path.empty()) {
      throw ConfigError(fmt::format("method '{}': baseline model path is empty", m.name));
    }
    if (m.asr.kind == AsrKind::external && (dataset.audio_dir.empty())) {
      throw ConfigError(fmt::format("method '{}': external ASR needs dataset.audio_dir", m.name));
    }
  }
  if (!dataset.csv.contains(eval_split)) {
    throw ConfigError(fmt::format("config: eval_split {} has no CSV in dataset.csv", to_string(eval_split)));
  }
  if (parallelism == 0) throw ConfigError("config: parallelism must be at least 1");
  if (cache_dir.empty()) throw ConfigError("config: cache_dir is empty");
}

const MethodConfig* ExperimentConfig::find_method(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

ExperimentConfig parse_config(std::string_view toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at " << e.source().begin;
    throw ConfigError(msg.str());
  }

  ExperimentConfig cfg;
  check_keys(root, "config",
             {"seed", "eval_split", "cache_dir", "report_out", "parallelism", "dataset", "methods", "baseline"});
  if (auto seed = get_int(root, "seed", "config")) cfg.seed = static_cast<std::uint64_t>(*seed);
  if (auto split = get_string(root, "eval_split", "config")) cfg.eval_split = require_split(*split, "config.eval_split");
  if (auto dir = get_string(root, "cache_dir", "config")) cfg.cache_dir = resolve(base_dir, *dir);
  else cfg.cache_dir = resolve(base_dir, "cache");
  if (auto out = get_string(root, "report_out", "config")) cfg.report_out = resolve(base_dir, *out);
  else cfg.report_out = resolve(base_dir, "report");
  if (auto n = get_count(root, "parallelism", "config")) cfg.parallelism = *n;

  const auto* dataset = get_table(root, "dataset", "config");
  if (!dataset) throw ConfigError("config: missing [dataset]");
  check_keys(*dataset, "dataset", {"csv", "media_root", "audio_dir", "extract_tool"});
  const auto* csv = get_table(*dataset, "csv", "dataset");
  if (!csv) throw ConfigError("dataset: missing [dataset.csv]");
  check_keys(*csv, "dataset.csv", {"train", "dev", "test"});
  for (auto split : {Split::train, Split::dev, Split::test}) {
    if (auto p = get_string(*csv, to_string(split), "dataset.csv")) cfg.dataset.csv[split] = resolve(base_dir, *p);
  }
  if (auto p = get_string(*dataset, "media_root", "dataset")) cfg.dataset.media_root = resolve(base_dir, *p);
  if (auto p = get_string(*dataset, "audio_dir", "dataset")) cfg.dataset.audio_dir = resolve(base_dir, *p);
  if (auto tool = get_string_array(*dataset, "extract_tool", "dataset")) {
    if (tool->empty()) throw ConfigError("dataset.extract_tool must not be empty");
    cfg.dataset.extract_tool = std::move(*tool);
  }

  if (const auto* baseline = get_table(root, "baseline", "config")) {
    check_keys(*baseline, "baseline", {"l2_lambda", "learning_rate", "epochs", "batch_size"});
    if (auto v = get_double(*baseline, "l2_lambda", "baseline")) cfg.baseline.l2_lambda = *v;
    if (auto v = get_double(*baseline, "learning_rate", "baseline")) cfg.baseline.learning_rate = *v;
    if (auto v = get_count(*baseline, "epochs", "baseline")) cfg.baseline.epochs = *v;
    if (auto v = get_count(*baseline, "batch_size", "baseline")) cfg.baseline.batch_size = *v;
  }
  cfg.baseline.seed = cfg.seed;

  const auto* methods = root.get("methods");
  if (!methods || !methods->is_array_of_tables()) throw ConfigError("config: missing [[methods]]");
  std::size_t index = 0;
  for (const auto& node : *methods->as_array()) {
    const auto& t = *node.as_table();
    const std::string where = fmt::format("methods[{}]", index++);
    check_keys(t, where, {"name", "asr", "classifier"});
    MethodConfig m;
    m.name = require_string(t, "name", where);
    const auto* asr = get_table(t, "asr", where);
    if (!asr) throw ConfigError(where + ": missing [methods.asr]");
    m.asr = parse_asr(*asr, where + ".asr");
    const auto* classifier = get_table(t, "classifier", where);
    if (!classifier) throw ConfigError(where + ": missing [methods.classifier]");
    m.classifier = parse_classifier(*classifier, where + ".classifier", base_dir);
    m.classifier.remote.parallelism = cfg.parallelism;
    m.asr.max_in_flight = asr->contains("max_in_flight") ? m.asr.max_in_flight : cfg.parallelism;
    cfg.methods.push_back(std::move(m));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path());
}

json to_json(const MethodConfig& m) {
  json asr{{"kind", m.asr.kind == AsrKind::oracle ? "oracle" : "external"},
           {"backend_id", m.asr.backend_id}};
  if (m.asr.kind == AsrKind::external) {
    asr["launch"] = m.asr.launch;
    asr["timeout_seconds"] = static_cast<double>(m.asr.timeout.count()) / 1000.0;
    asr["max_in_flight"] = m.asr.max_in_flight;
  }
  json classifier;
  if (m.classifier.kind == ClassifierKind::baseline) {
    classifier["kind"] = "baseline";
    if (m.classifier.train_split) {
      classifier["train_split"] = to_string(*m.classifier.train_split);
    } else {
      classifier["model"] = m.classifier.model_path.string();
    }
  } else {
    classifier["kind"] = "remote";
    classifier["endpoint"] = m.classifier.endpoint;
    classifier["batch_size"] = m.classifier.remote.batch_size;
    classifier["max_retries"] = m.classifier.remote.max_retries;
  }
  return json{{"name", m.name}, {"asr", std::move(asr)}, {"classifier", std::move(classifier)}};
}

json to_json(const ExperimentConfig& c) {
  json csv = json::object();
  for (const auto& [split, path] : c.dataset.csv) csv[std::string(to_string(split))] = path.string();
  json methods = json::array();
  for (const auto& m : c.methods) methods.push_back(to_json(m));
  return json{
      {"seed", c.seed},
      {"eval_split", to_string(c.eval_split)},
      {"cache_dir", c.cache_dir.string()},
      {"report_out", c.report_out.string()},
      {"parallelism", c.parallelism},
      {"dataset",
       {{"csv", std::move(csv)},
        {"media_root", c.dataset.media_root.string()},
        {"audio_dir", c.dataset.audio_dir.string()},
        {"extract_tool", c.dataset.extract_tool}}},
      {"baseline",
       {{"l2_lambda", c.baseline.l2_lambda},
        {"learning_rate", c.baseline.learning_rate},
        {"epochs", c.baseline.epochs},
        {"batch_size", c.baseline.batch_size},
        {"seed", c.baseline.seed}}},
      {"methods", std::move(methods)},
  };
}

}  // namespace modconv
