#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace modconv {

/// The seven MELD emotion classes. The ordinal is the confusion-matrix axis
/// and must never change.
enum class EmotionLabel : std::uint8_t {
  anger = 0,
  disgust = 1,
  fear = 2,
  joy = 3,
  neutral = 4,
  sadness = 5,
  surprise = 6,
};

inline constexpr std::size_t kNumEmotions = 7;

inline constexpr std::array<EmotionLabel, kNumEmotions> kAllEmotions = {
    EmotionLabel::anger, EmotionLabel::disgust, EmotionLabel::fear,    EmotionLabel::joy,
    EmotionLabel::neutral, EmotionLabel::sadness, EmotionLabel::surprise,
};

constexpr std::size_t ordinal(EmotionLabel label) { return static_cast<std::size_t>(label); }

std::string_view to_string(EmotionLabel label);

/// Case-insensitive; surrounding ASCII whitespace is ignored. nullopt for anything else.
std::optional<EmotionLabel> parse_emotion(std::string_view text);

EmotionLabel emotion_from_ordinal(std::size_t index);

}  // namespace modconv
