#include <doctest.h>

#include "modconv/error.hpp"
#include "modconv/remote_classifier.hpp"
#include "support/fixtures.hpp"

using namespace modconv;
using modconv::testing::ClassifyStub;

namespace {

RemoteOptions fast() {
  RemoteOptions o;
  o.initial_backoff = std::chrono::milliseconds(5);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST_CASE("valid responses come back in input order") {
  ClassifyStub stub;
  const std::vector<std::string> texts{"so much joy", "plain words", "i feel anger"};
  RemoteClassifier client(stub.endpoint(), fast());
  const auto out = client.classify(texts);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto expected = distribution_from_json(testing::stub_distribution(texts[i]), i);
    CHECK(out[i] == expected);
  }
  CHECK(argmax_label(out[0]) == EmotionLabel::joy);
  CHECK(argmax_label(out[1]) == EmotionLabel::neutral);
  CHECK(argmax_label(out[2]) == EmotionLabel::anger);
  CHECK(stub.requests() == 1);
  CHECK(stub.batch_sizes() == std::vector<std::size_t>{3});
  CHECK(stub.texts_seen() == texts);
  CHECK(client.last_model_id() == "stub-roberta");
  CHECK(client.health() == "stub-roberta");
}

TEST_CASE("batching splits long inputs and keeps order") {
  ClassifyStub stub;
  auto opts = fast();
  opts.batch_size = 4;
  opts.parallelism = 3;
  std::vector<std::string> texts;
  for (int i = 0; i < 18; ++i) texts.push_back(i % 2 ? "joy " + std::to_string(i) : "fear " + std::to_string(i));
  const auto out = RemoteClassifier(stub.endpoint(), opts).classify(texts);
  REQUIRE(out.size() == 18);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(argmax_label(out[i]) == (i % 2 ? EmotionLabel::joy : EmotionLabel::fear));
  CHECK(stub.requests() == 5);
  CHECK(classify_remote(stub.endpoint(), {}, opts).empty());
}

TEST_CASE("contract violations") {
  SUBCASE("sum 0.8") {
    ClassifyStub stub(ClassifyStub::Mode::sum_08);
    CHECK_THROWS_AS(classify_remote(stub.endpoint(), {"a"}, fast()), ContractError);
  }
  SUBCASE("missing key is named") {
    ClassifyStub stub(ClassifyStub::Mode::missing_key);
    try {
      classify_remote(stub.endpoint(), {"a", "b"}, fast());
      FAIL("expected ContractError");
    } catch (const ContractError& e) {
      CHECK(std::string(e.what()).find("surprise") != std::string::npos);
    }
  }
  SUBCASE("negative probability") {
    ClassifyStub stub(ClassifyStub::Mode::negative);
    CHECK_THROWS_AS(classify_remote(stub.endpoint(), {"a"}, fast()), ContractError);
  }
  SUBCASE("wrong count") {
    ClassifyStub stub(ClassifyStub::Mode::wrong_count);
    CHECK_THROWS_AS(classify_remote(stub.endpoint(), {"a", "b"}, fast()), ContractError);
  }
}

TEST_CASE("retries") {
  SUBCASE("transient 503 then success") {
    ClassifyStub stub(ClassifyStub::Mode::flaky, 2);
    const auto out = classify_remote(stub.endpoint(), {"joy"}, fast());
    CHECK(out.size() == 1);
    CHECK(stub.requests() == 3);
  }
  SUBCASE("persistent 503 fails after max_retries") {
    ClassifyStub stub(ClassifyStub::Mode::always_503);
    CHECK_THROWS_AS(classify_remote(stub.endpoint(), {"joy"}, fast()), BackendError);
    CHECK(stub.requests() == 4);
  }
  SUBCASE("400 is not retried") {
    ClassifyStub stub(ClassifyStub::Mode::bad_request);
    CHECK_THROWS_AS(classify_remote(stub.endpoint(), {"joy"}, fast()), BackendError);
    CHECK(stub.requests() == 1);
  }
  SUBCASE("nothing listening") {
    auto opts = fast();
    opts.max_retries = 1;
    CHECK_THROWS_AS(classify_remote("http://127.0.0.1:1", {"joy"}, opts), BackendError);
  }
}

TEST_CASE("endpoint validation") {
  CHECK_THROWS_AS(RemoteClassifier("ftp://x"), ConfigError);
  CHECK_THROWS_AS(RemoteClassifier("localhost:8080"), ConfigError);
  CHECK_NOTHROW(RemoteClassifier("http://localhost:8080/api"));
}
