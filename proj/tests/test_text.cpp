#include <doctest.h>

#include <random>
#include <sstream>

#include "modconv/csv.hpp"
#include "modconv/text.hpp"

using namespace modconv;

TEST_CASE("normalize_text examples") {
  CHECK(normalize_text("Oh my God!") == "oh my god");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("I'm   FINE... really") == "i'm fine really");
  CHECK(normalize_text("  \t\n ") == "");
  CHECK(normalize_text("Okay—fine.") == "okay fine");
  CHECK(normalize_text("CAFÉ Über") == "café über");
  CHECK(normalize_text("I\xE2\x80\x99m here") == "i'm here");  // U+2019
  CHECK(normalize_text("room 101, please") == "room 101 please");
}

TEST_CASE("normalize_text is idempotent and yields normalized form on random input") {
  std::mt19937 rng(7);
  const std::u32string pool = U"aZ09 '\t\n.,!?-Éé’ßİΣ中\U0001F600\"";
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> len(0, 24);
  for (int trial = 0; trial < 2000; ++trial) {
    std::u32string s;
    for (int k = len(rng); k > 0; --k) s.push_back(pool[pick(rng)]);
    const auto once = normalize_text(encode_utf8(s));
    CHECK(normalize_text(once) == once);
    CHECK(once.find("  ") == std::string::npos);
    if (!once.empty()) {
      CHECK(once.front() != ' ');
      CHECK(once.back() != ' ');
    }
    for (char c : once) {
      CHECK_FALSE((c >= 'A' && c <= 'Z'));
      CHECK(std::string_view(".,!?-\"\t\n").find(c) == std::string_view::npos);
    }
  }
}

TEST_CASE("decode_utf8_lossy replaces and counts invalid sequences") {
  std::size_t replaced = 0;
  const auto out = sanitize_utf8("ok\x92" "ay \xC3\xA9 \xE2\x82", &replaced);
  CHECK(replaced == 2);
  CHECK(out == "ok\xEF\xBF\xBD" "ay \xC3\xA9 \xEF\xBF\xBD");
  replaced = 0;
  CHECK(sanitize_utf8("plain ascii", &replaced) == "plain ascii");
  CHECK(replaced == 0);
  // Overlong encodings and surrogates are invalid.
  replaced = 0;
  sanitize_utf8("\xC0\xAF\xED\xA0\x80", &replaced);
  CHECK(replaced >= 2);
}

TEST_CASE("split_tokens") {
  CHECK(split_tokens("").empty());
  CHECK(split_tokens("a b  c") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("csv quoting") {
  const auto rows = csv::parse("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",,x\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == csv::Row{"a", "b,c", "say \"hi\""});
  CHECK(rows[1] == csv::Row{"multi\nline", "", "x"});
  CHECK(csv::escape_field("plain") == "plain");
  CHECK(csv::escape_field("a,b") == "\"a,b\"");
  CHECK(csv::escape_field("q\"") == "\"q\"\"\"");
  CHECK_THROWS(csv::parse("\"open"));
}

TEST_CASE("csv write then parse returns the same fields") {
  std::mt19937 rng(3);
  const std::string alphabet = "ab ,\"\n\r'x";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<csv::Row> rows(1 + trial % 4);
    for (auto& row : rows) {
      row.resize(3);
      for (auto& field : row) {
        for (int k = static_cast<int>(rng() % 6); k > 0; --k) field.push_back(alphabet[pick(rng)]);
      }
      row[0] = "k" + row[0];  // a row must not be a single empty field
    }
    std::ostringstream out;
    for (const auto& row : rows) csv::write_row(out, row);
    CHECK(csv::parse(out.str()) == rows);
  }
}
