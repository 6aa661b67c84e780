#include "modconv/wer.hpp"

#include <vector>

#include "modconv/error.hpp"
#include "modconv/text.hpp"

namespace modconv {

namespace {

struct Cell {
  std::size_t cost = 0;
  std::size_t subs = 0;
  std::size_t dels = 0;
  std::size_t ins = 0;
};

}  // namespace

EditCounts align_words(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  // Row-by-row Levenshtein; each cell carries its edit breakdown.
  const std::size_t m = hypothesis.size();
  std::vector<Cell> prev(m + 1), curr(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, 0, j};

  for (std::size_t i = 1; i <= reference.size(); ++i) {
    curr[0] = {i, 0, i, 0};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool match = reference[i - 1] == hypothesis[j - 1];
      Cell diag = prev[j - 1];
      if (!match) {
        ++diag.cost;
        ++diag.subs;
      }
      Cell del = prev[j];
      ++del.cost;
      ++del.dels;
      Cell ins = curr[j - 1];
      ++ins.cost;
      ++ins.ins;
      Cell best = diag;
      if (del.cost < best.cost) best = del;
      if (ins.cost < best.cost) best = ins;
      curr[j] = best;
    }
    std::swap(prev, curr);
  }
  const Cell& end = prev[m];
  return {end.subs, end.dels, end.ins, reference.size()};
}

double word_error_rate(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_tokens(normalize_text(reference));
  if (ref.empty()) throw DomainError("word_error_rate: empty reference after normalization");
  const auto hyp = split_tokens(normalize_text(hypothesis));
  const auto counts = align_words(ref, hyp);
  return static_cast<double>(counts.errors()) / static_cast<double>(counts.reference_length);
}

void CorpusWer::add(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_tokens(normalize_text(reference));
  const auto hyp = split_tokens(normalize_text(hypothesis));
  const auto counts = align_words(ref, hyp);
  totals_.substitutions += counts.substitutions;
  totals_.deletions += counts.deletions;
  totals_.insertions += counts.insertions;
  totals_.reference_length += counts.reference_length;
  ++utterances_;
}

double CorpusWer::rate() const {
  if (totals_.reference_length == 0) throw DomainError("corpus WER: no reference words");
  return static_cast<double>(totals_.errors()) / static_cast<double>(totals_.reference_length);
}

}  // namespace modconv
