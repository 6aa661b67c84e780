#pragma once

// A small on-disk experiment: MELD-style CSVs, dummy media clips and a TOML
// config wired to the stub worker and the fake media tool.

#include <string>
#include <vector>

#include "modconv/classifier.hpp"
#include "support/fixtures.hpp"

namespace modconv::testing {

// Gold labels of the ten test utterances: 3 anger, 4 joy, 3 neutral.
inline const std::vector<CsvRow>& test_rows() {
  static const std::vector<CsvRow> rows{
      {"Why would you do that?!", "anger", 0, 0},  {"Get out of my apartment!", "anger", 0, 1},
      {"I can't believe this.", "anger", 0, 2},    {"This is the best day, ever!", "joy", 1, 0},
      {"Oh, I love it, Monica.", "joy", 1, 1},      {"Yes! Yes! We won!", "joy", 1, 2},
      {"Great, that's great.", "joy", 1, 3},        {"Okay.", "neutral", 2, 0},
      {"The coffee place, at noon", "neutral", 2, 1}, {"Sure, whatever you say.", "neutral", 2, 2},
  };
  return rows;
}

inline const std::vector<CsvRow>& train_rows() {
  static const std::vector<CsvRow> rows = [] {
    std::vector<CsvRow> r;
    for (int i = 0; i < 6; ++i) {
      r.push_back({"i am so angry and mad", "anger", 10 + i, 0});
      r.push_back({"happy happy great day", "joy", 10 + i, 1});
      r.push_back({"okay sure fine", "neutral", 10 + i, 2});
    }
    return r;
  }();
  return rows;
}

class Experiment {
 public:
  Experiment() {
    write_file(dir_ / "data/test.csv", meld_csv(test_rows()));
    write_file(dir_ / "data/train.csv", meld_csv(train_rows()));
    for (const auto* rows : {&test_rows(), &train_rows()}) {
      for (const auto& r : *rows) {
        write_file(dir_ / ("media/dia" + std::to_string(r.dialogue) + "_utt" + std::to_string(r.utterance_id) + ".mp4"),
                   "clip " + r.utterance);
      }
    }
    // Zero weights: every utterance scores a uniform distribution, predicted anger.
    BaselineModel zero({"okay"}, {1.0}, std::vector<double>(kNumEmotions, 0.0), {}, {}, "zero");
    save_baseline(dir_ / "zero_model.json", zero);
  }

  const TempDir& dir() const { return dir_; }
  fs::path config_path() const { return dir_ / "experiment.toml"; }
  fs::path counter_path() const { return dir_ / "asr_calls.txt"; }

  static std::string oracle_zero_method(const std::string& name = "oracle-zero") {
    return "[[methods]]\nname = \"" + name +
           "\"\n[methods.asr]\nkind = \"oracle\"\n[methods.classifier]\nkind = \"baseline\"\nmodel = \"zero_model.json\"\n";
  }

  std::string external_method(const std::string& name, const std::vector<std::string>& worker_args,
                              const std::string& classifier = "kind = \"baseline\"\nmodel = \"zero_model.json\"") const {
    std::string launch = "[\"" + std::string(stub_worker_path()) + "\", \"--backend-id\", \"stub@1\", \"--counter\", \"" +
                         counter_path().string() + "\"";
    for (const auto& a : worker_args) launch += ", \"" + a + "\"";
    launch += "]";
    return "[[methods]]\nname = \"" + name + "\"\n[methods.asr]\nkind = \"external\"\nbackend_id = \"stub@1\"\nlaunch = " +
           launch + "\ntimeout_seconds = 10\n[methods.classifier]\n" + classifier + "\n";
  }

  fs::path write_config(const std::string& methods) const {
    const std::string text = "seed = 42\neval_split = \"test\"\ncache_dir = \"cache\"\nreport_out = \"out/report\"\n"
                             "parallelism = 2\n\n[dataset]\nmedia_root = \"media\"\naudio_dir = \"audio\"\n"
                             "extract_tool = [\"" + std::string(fake_media_tool_path()) + "\"]\n\n"
                             "[dataset.csv]\ntrain = \"data/train.csv\"\ntest = \"data/test.csv\"\n\n" + methods;
    write_file(config_path(), text);
    return config_path();
  }

 private:
  TempDir dir_;
};

}  // namespace modconv::testing
