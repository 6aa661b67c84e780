#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace modconv {

/// Decodes UTF-8, replacing each maximal invalid subsequence with U+FFFD.
/// `replacements` (if given) is incremented once per substituted sequence.
std::u32string decode_utf8_lossy(std::string_view bytes, std::size_t* replacements = nullptr);

std::string encode_utf8(std::u32string_view text);

/// Re-encodes `bytes` as valid UTF-8 (invalid sequences become U+FFFD).
std::string sanitize_utf8(std::string_view bytes, std::size_t* replacements = nullptr);

/// Lowercase; anything that is not a letter, digit, apostrophe or whitespace
/// becomes a space; whitespace runs collapse; ends trimmed. U+2019 counts as
/// an apostrophe and is written as ASCII '.
std::string normalize_text(std::string_view text);

/// Whitespace split. Input is expected to be normalized already.
std::vector<std::string> split_tokens(std::string_view normalized);

}  // namespace modconv
