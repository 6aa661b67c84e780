#include "modconv/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace modconv {

namespace {

constexpr std::array<std::string_view, kNumEmotions> kNames = {
    "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise",
};

std::string_view trim_ascii(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(EmotionLabel label) { return kNames.at(ordinal(label)); }

std::optional<EmotionLabel> parse_emotion(std::string_view text) {
  text = trim_ascii(text);
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    const auto name = kNames[i];
    if (name.size() != text.size()) continue;
    const bool same = std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
      return a == std::tolower(static_cast<unsigned char>(b));
    });
    if (same) return kAllEmotions[i];
  }
  return std::nullopt;
}

EmotionLabel emotion_from_ordinal(std::size_t index) {
  if (index >= kNumEmotions) throw std::out_of_range("emotion ordinal out of range");
  return kAllEmotions[index];
}

}  // namespace modconv
