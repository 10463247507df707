#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "posnmt/errors.hpp"

namespace posnmt {

struct BleuReport {
  double bleu = 0.0;                       // 0..100
  std::array<double, 4> precisions{};      // p1..p4 in [0,1]
  double brevity_penalty = 1.0;
  std::int64_t candidate_len = 0;
  std::int64_t reference_len = 0;

  std::string to_string() const;
};

// Corpus-summed clipped n-gram matches and candidate n-gram totals.
std::pair<std::int64_t, std::int64_t> modified_precision(
    const std::vector<std::vector<std::string>>& candidates,
    const std::vector<std::vector<std::string>>& references, int n);

// Corpus BLEU, max n = 4, brevity penalty exp(1 - r/c) when c < r, no
// smoothing, scaled to 0..100. Orders of n with no candidate n-grams at all
// are vacuous (treated as precision 1) so identical corpora score 100
// regardless of sentence lengths; any measured zero precision gives 0.
BleuReport bleu_corpus(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::string>>& references);

BleuReport bleu_files(const std::string& candidate_path,
                      const std::string& reference_path);

}  // namespace posnmt
