#include <doctest.h>

#include "modconv/dataset.hpp"
#include "modconv/error.hpp"
#include "support/fixtures.hpp"

using namespace modconv;
using namespace modconv::testing;

namespace {

UtteranceRecord clip_record() {
  UtteranceRecord r;
  r.split = Split::test;
  r.dialogue_id = 3;
  r.utterance_id = 7;
  r.utterance_key = make_utterance_key(r.split, 3, 7);
  r.gold_text = "hello";
  r.media_path = default_media_name(3, 7);
  return r;
}

}  // namespace

TEST_CASE("extract_audio writes a conforming WAV and is idempotent") {
  TempDir dir;
  const auto media = dir / "media";
  write_file(media / "dia3_utt7.mp4", "not really a video");
  const auto counter = dir / "count.txt";
  const ExtractOptions options{{fake_media_tool_path(), "--counter", counter.string()}};

  const auto path = extract_audio(clip_record(), media, dir / "audio", options);
  CHECK(path == dir / "audio" / "test/3/7.wav");
  const auto bytes = read_file(path);
  REQUIRE(bytes.size() > 44);
  CHECK(bytes.substr(0, 4) == "RIFF");
  const auto fmt = read_wav_format(path);
  REQUIRE(fmt.has_value());
  CHECK(fmt->sample_rate == 16000);
  CHECK(fmt->channels == 1);
  CHECK(fmt->bits_per_sample == 16);
  CHECK(fmt->audio_format == 1);
  CHECK(count_lines(counter) == 1);

  const auto again = extract_audio(clip_record(), media, dir / "audio", options);
  CHECK(again == path);
  CHECK(count_lines(counter) == 1);
  // No temp files left behind.
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "audio")) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("extract_audio errors") {
  TempDir dir;
  const auto media = dir / "media";
  fs::create_directories(media);

  SUBCASE("missing clip is not-found with the key") {
    try {
      extract_audio(clip_record(), media, dir / "audio", {{fake_media_tool_path()}});
      FAIL("expected NotFoundError");
    } catch (const NotFoundError& e) {
      CHECK(std::string(e.what()).find("test/3/7") != std::string::npos);
    }
  }
  SUBCASE("tool failure carries diagnostics") {
    write_file(media / "dia3_utt7.mp4", "x");
    try {
      extract_audio(clip_record(), media, dir / "audio", {{fake_media_tool_path(), "--fail"}});
      FAIL("expected ConversionError");
    } catch (const ConversionError& e) {
      CHECK(std::string(e.what()).find("invalid data found") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "audio" / "test/3/7.wav"));
  }
  SUBCASE("tool output in the wrong format is rejected") {
    write_file(media / "dia3_utt7.mp4", "x");
    CHECK_THROWS_AS(extract_audio(clip_record(), media, dir / "audio", {{fake_media_tool_path(), "--wrong-format"}}),
                    ConversionError);
  }
  SUBCASE("tool that cannot be found") {
    write_file(media / "dia3_utt7.mp4", "x");
    CHECK_THROWS_AS(extract_audio(clip_record(), media, dir / "audio", {{"/nonexistent/ffmpeg"}}), ConversionError);
  }
}

TEST_CASE("WAV header check") {
  TempDir dir;
  write_wav(dir / "ok.wav");
  CHECK(wav_matches_asr_contract(dir / "ok.wav"));
  write_file(dir / "junk.wav", "RIFX0000WAVE");
  CHECK_FALSE(wav_matches_asr_contract(dir / "junk.wav"));
  CHECK_FALSE(read_wav_format(dir / "missing.wav").has_value());
}
