#include <doctest.h>

#include "modconv/csv.hpp"
#include "modconv/error.hpp"
#include "modconv/runner.hpp"
#include "support/experiment.hpp"

using namespace modconv;
using namespace modconv::testing;

TEST_CASE("config parsing") {
  Experiment ex;
  const std::string dataset = "[dataset]\n[dataset.csv]\ntest = \"data/test.csv\"\n";

  SUBCASE("minimal oracle config") {
    const auto cfg = parse_config(dataset + Experiment::oracle_zero_method(), ex.dir().path());
    CHECK(cfg.eval_split == Split::test);
    CHECK(cfg.seed == 42);
    CHECK(cfg.cache_dir == ex.dir().path() / "cache");
    REQUIRE(cfg.methods.size() == 1);
    CHECK(cfg.methods[0].asr.backend_id == "oracle@1");
    CHECK(cfg.methods[0].classifier.model_path == ex.dir().path() / "zero_model.json");
    CHECK(cfg.find_method("oracle-zero") != nullptr);
    CHECK(cfg.find_method("other") == nullptr);
  }
  SUBCASE("seed overrides the baseline seed") {
    const auto cfg = parse_config("seed = 7\n" + dataset + Experiment::oracle_zero_method(), ex.dir().path());
    CHECK(cfg.baseline.seed == 7);
  }
  SUBCASE("unknown ASR kind") {
    const std::string m = "[[methods]]\nname = \"x\"\n[methods.asr]\nkind = \"whisper\"\n"
                          "[methods.classifier]\nkind = \"baseline\"\nmodel = \"m.json\"\n";
    CHECK_THROWS_AS(parse_config(dataset + m, ex.dir().path()), ConfigError);
  }
  SUBCASE("unknown classifier kind") {
    const std::string m = "[[methods]]\nname = \"x\"\n[methods.asr]\nkind = \"oracle\"\n"
                          "[methods.classifier]\nkind = \"svm\"\n";
    CHECK_THROWS_AS(parse_config(dataset + m, ex.dir().path()), ConfigError);
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_AS(parse_config("colour = 1\n" + dataset + Experiment::oracle_zero_method(), ex.dir().path()),
                    ConfigError);
  }
  SUBCASE("duplicate method names") {
    CHECK_THROWS_AS(parse_config(dataset + Experiment::oracle_zero_method() + Experiment::oracle_zero_method(),
                                 ex.dir().path()),
                    ConfigError);
  }
  SUBCASE("baseline needs exactly one of model and train_split") {
    const std::string m = "[[methods]]\nname = \"x\"\n[methods.asr]\nkind = \"oracle\"\n"
                          "[methods.classifier]\nkind = \"baseline\"\nmodel = \"m.json\"\ntrain_split = \"train\"\n";
    CHECK_THROWS_AS(parse_config(dataset + m, ex.dir().path()), ConfigError);
  }
  SUBCASE("external without launch") {
    const std::string m = "[[methods]]\nname = \"x\"\n[methods.asr]\nkind = \"external\"\nbackend_id = \"w@1\"\n"
                          "[methods.classifier]\nkind = \"baseline\"\nmodel = \"m.json\"\n";
    CHECK_THROWS_AS(parse_config(dataset + m, ex.dir().path()), ConfigError);
  }
  SUBCASE("invalid TOML") { CHECK_THROWS_AS(parse_config("[dataset", ex.dir().path()), ConfigError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_config(ex.dir() / "none.toml"), ConfigError); }
}

TEST_CASE("oracle ASR with a zero-weight baseline predicts anger everywhere") {
  Experiment ex;
  const auto cfg = load_config(ex.write_config(Experiment::oracle_zero_method()));
  const auto report = run_experiment(cfg);
  REQUIRE(report.methods.size() == 1);
  const auto& m = report.methods[0];
  REQUIRE(m.ok);
  CHECK(report.eval_records == 10);
  CHECK(m.confusion->predicted_count(EmotionLabel::anger) == 10);
  // anger: P = 3/10, R = 1, F1 = 6/13; joy and neutral F1 = 0.
  CHECK(m.scores->weighted_f1 == doctest::Approx(0.3 * 6.0 / 13.0).epsilon(1e-12));
  CHECK(m.scores->accuracy == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_FALSE(m.wer.has_value());
  CHECK(m.asr_backend_id == "oracle@1");
  const auto j = to_json(report);
  CHECK(j["methods"][0]["wf1_percent_display"] == "13.8");
  CHECK(j["methods"][0]["delta_display"] == "-35.0");
}

TEST_CASE("baseline trained on the fly from oracle transcripts") {
  Experiment ex;
  const std::string m = "[[methods]]\nname = \"trained\"\n[methods.asr]\nkind = \"oracle\"\n"
                        "[methods.classifier]\nkind = \"baseline\"\ntrain_split = \"train\"\n";
  const auto report = run_experiment(load_config(ex.write_config(m)));
  REQUIRE(report.methods[0].ok);
  CHECK(report.methods[0].classifier_id.starts_with("baseline@"));
}

TEST_CASE("reruns are byte-identical and served from the cache") {
  Experiment ex;
  const auto cfg = load_config(ex.write_config(Experiment::oracle_zero_method() +
                                               ex.external_method("stub-zero", {"--text", "Okay then"})));
  const auto first = run_experiment(cfg);
  write_report(first, cfg.report_out);
  const auto json1 = read_file(ex.dir() / "out/report.json");
  const auto md1 = read_file(ex.dir() / "out/report.md");
  const auto calls = count_lines(ex.counter_path());
  CHECK(calls == 10);
  REQUIRE(first.methods[1].ok);
  CHECK(first.methods[1].asr_invocations == 10);
  REQUIRE(first.methods[1].wer.has_value());
  CHECK(first.methods[1].wer->utterances == 10);

  const auto second = run_experiment(cfg);
  write_report(second, cfg.report_out);
  CHECK(count_lines(ex.counter_path()) == calls);
  CHECK(second.methods[1].asr_invocations == 0);
  CHECK(second.methods[1].cache_hits == 10);
  CHECK(read_file(ex.dir() / "out/report.json") == json1);
  CHECK(read_file(ex.dir() / "out/report.md") == md1);
}

TEST_CASE("a failing method does not stop the others") {
  Experiment ex;
  const auto cfg = load_config(ex.write_config(ex.external_method("broken", {"--mode", "no-handshake"}) +
                                               Experiment::oracle_zero_method()));
  const auto report = run_experiment(cfg);
  REQUIRE(report.methods.size() == 2);
  CHECK_FALSE(report.methods[0].ok);
  CHECK(report.methods[0].error.find("handshake") != std::string::npos);
  CHECK(report.methods[1].ok);
  const auto md = render_report(report, ReportFormat::markdown);
  CHECK(md.find("| broken (measured) | Speech | Converting to Text Modality | failed |") != std::string::npos);
  CHECK(to_json(report)["methods"][0]["status"] == "failed");
}

TEST_CASE("per-utterance ASR errors are scored as empty transcripts") {
  Experiment ex;
  const auto cfg = load_config(ex.write_config(ex.external_method("partial", {"--mode", "error-on:test/1/1"})));
  const auto report = run_experiment(cfg);
  REQUIRE(report.methods[0].ok);
  CHECK(report.methods[0].asr_failures == 1);
  CHECK(report.methods[0].confusion->total() == 10);
}

TEST_CASE("remote classifier method") {
  Experiment ex;
  ClassifyStub stub;
  const std::string m = "[[methods]]\nname = \"remote\"\n[methods.asr]\nkind = \"oracle\"\n"
                        "[methods.classifier]\nkind = \"remote\"\nendpoint = \"" + stub.endpoint() + "\"\nbackoff_ms = 5\n";
  const auto report = run_experiment(load_config(ex.write_config(m)));
  REQUIRE(report.methods[0].ok);
  CHECK(report.methods[0].classifier_id == "remote:stub-roberta");
  CHECK(stub.texts_seen().size() == 10);
  CHECK(stub.texts_seen()[0] == "why would you do that");
}

TEST_CASE("transcript export") {
  Experiment ex;
  write_file(ex.dir() / "data/test.csv", meld_csv({{"Hi, Ross.", "joy", 0, 0},
                                                   {"Well...", "neutral", 0, 1},
                                                   {"What?!", "surprise", 0, 2}}));
  const auto cfg = load_config(ex.write_config(Experiment::oracle_zero_method() +
                                               ex.external_method("flaky", {"--mode", "error-on:test/0/1", "--text", "a, b"})));

  SUBCASE("oracle") {
    const auto out = ex.dir() / "t.csv";
    const auto r = export_transcripts(cfg, Split::test, "oracle", out);
    CHECK(r.rows == 3);
    CHECK(r.failures == 0);
    CHECK_FALSE(fs::exists(r.errors_path));
    const auto rows = csv::parse(read_file(out));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"utterance_key", "split", "text", "emotion"});
    CHECK(rows[1] == std::vector<std::string>{"test/0/0", "test", "hi ross", "joy"});
    const auto corpus = read_transcript_csv(out);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus[2].label == EmotionLabel::surprise);
  }
  SUBCASE("external with one failure") {
    const auto out = ex.dir() / "t.csv";
    const auto r = export_transcripts(cfg, Split::test, "flaky", out);
    CHECK(r.rows == 2);
    CHECK(r.failures == 1);
    CHECK(count_lines(r.errors_path) == 1);
    const auto err = nlohmann::json::parse(read_file(r.errors_path));
    CHECK(err["utterance_key"] == "test/0/1");
    const auto rows = csv::parse(read_file(out));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][2] == "a b");
  }
  SUBCASE("unknown backend") {
    CHECK_THROWS_AS(export_transcripts(cfg, Split::test, "nope", ex.dir() / "t.csv"), ConfigError);
  }
}

TEST_CASE("report rendering") {
  CHECK(best_speech_baseline_wf1() == 48.8);
  const auto& rows = literature_rows();
  REQUIRE(rows.size() == 6);
  const std::vector<double> expected{41.9, 47.0, 48.5, 48.8, 43.1, 60.4};
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].wf1_percent == expected[i]);

  ExperimentReport report;
  report.eval_records = 1;
  MethodResult m;
  m.name = "mc|pp";
  m.ok = true;
  ScoreReport s;
  s.weighted_f1 = 0.604;
  s.n = 1;
  m.scores = s;
  m.confusion = ConfusionMatrix{};
  report.methods.push_back(m);

  CHECK(*report.methods[0].delta_points() == doctest::Approx(11.6));
  const auto j = to_json(report);
  CHECK(j["methods"][0]["delta_display"] == "+11.6");
  CHECK(j["methods"][0]["wf1_percent_display"] == "60.4");
  CHECK(j["best_speech_baseline_wf1_percent"] == 48.8);
  const auto md = render_report(report, ReportFormat::markdown);
  CHECK(md.find("| Method | Input Modality | Using Modality Conversion | WF1(%) |") != std::string::npos);
  CHECK(md.find("| DST (reference) | Speech | - | 48.8 |") != std::string::npos);
  CHECK(md.find("| mc\\|pp (measured) | Speech | Converting to Text Modality | 60.4 |") != std::string::npos);
  CHECK(md.find("+11.6") != std::string::npos);
  for (const char* v : {"41.9", "47.0", "48.5", "43.1", "60.4"}) CHECK(md.find(v) != std::string::npos);
}
