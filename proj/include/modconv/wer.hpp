#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace modconv {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Minimum unit-cost word alignment. Among alignments with the minimum
/// number of edits, the breakdown prefers substitutions, then deletions.
EditCounts align_words(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// (S+D+I)/N after normalizing both sides. Throws DomainError if the
/// normalized reference is empty. May exceed 1.
double word_error_rate(std::string_view reference, std::string_view hypothesis);

/// Pooled over utterances: total edits / total reference words.
class CorpusWer {
 public:
  void add(std::string_view reference, std::string_view hypothesis);
  std::size_t utterances() const { return utterances_; }
  const EditCounts& totals() const { return totals_; }
  /// Throws DomainError when no reference words were added.
  double rate() const;

 private:
  EditCounts totals_;
  std::size_t utterances_ = 0;
};

}  // namespace modconv
