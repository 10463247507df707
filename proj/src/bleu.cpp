#include "posnmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "posnmt/corpus.hpp"

namespace posnmt {

namespace {

std::unordered_map<std::string, std::int64_t> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::unordered_map<std::string, std::int64_t> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

std::pair<std::int64_t, std::int64_t> modified_precision(
    const std::vector<std::vector<std::string>>& candidates,
    const std::vector<std::vector<std::string>>& references, int n) {
  if (n < 1 || n > 4) throw ConfigError("modified_precision: n must be in [1,4]");
  if (candidates.size() != references.size())
    throw DataError("sentence count mismatch " + std::to_string(candidates.size()) +
                    "≠" + std::to_string(references.size()));
  std::int64_t matches = 0, total = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto cand = ngram_counts(candidates[i], n);
    auto ref = ngram_counts(references[i], n);
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) matches += std::min(count, it->second);
    }
  }
  return {matches, total};
}

BleuReport bleu_corpus(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::string>>& references) {
  if (candidates.size() != references.size())
    throw DataError("sentence count mismatch " + std::to_string(candidates.size()) +
                    "≠" + std::to_string(references.size()));
  BleuReport r;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    r.candidate_len += static_cast<std::int64_t>(candidates[i].size());
    r.reference_len += static_cast<std::int64_t>(references[i].size());
  }
  double log_sum = 0.0;
  bool zero_precision = false;
  for (int n = 1; n <= 4; ++n) {
    auto [matches, total] = modified_precision(candidates, references, n);
    if (total == 0) {
      r.precisions[static_cast<std::size_t>(n - 1)] = 1.0;  // vacuous order
      continue;
    }
    const double pn = static_cast<double>(matches) / static_cast<double>(total);
    r.precisions[static_cast<std::size_t>(n - 1)] = pn;
    if (pn == 0.0)
      zero_precision = true;
    else
      log_sum += 0.25 * std::log(pn);
  }
  if (r.candidate_len == 0) {
    r.brevity_penalty = 0.0;
    r.bleu = 0.0;
    return r;
  }
  r.brevity_penalty =
      r.candidate_len < r.reference_len
          ? std::exp(1.0 - static_cast<double>(r.reference_len) /
                               static_cast<double>(r.candidate_len))
          : 1.0;
  r.bleu = zero_precision ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum);
  return r;
}

BleuReport bleu_files(const std::string& candidate_path,
                      const std::string& reference_path) {
  auto to_tokens = [](const std::vector<std::string>& lines) {
    std::vector<std::vector<std::string>> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back(split_whitespace(l));
    return out;
  };
  return bleu_corpus(to_tokens(read_lines(candidate_path)),
                     to_tokens(read_lines(reference_path)));
}

std::string BleuReport::to_string() const {
  char buf[160];
  const double ratio = reference_len > 0 ? static_cast<double>(candidate_len) /
                                               static_cast<double>(reference_len)
                                         : 0.0;
  std::snprintf(buf, sizeof(buf),
                "BLEU = %.2f, p1/p2/p3/p4 = %.1f/%.1f/%.1f/%.1f, BP = %.3f, "
                "ratio = %.3f",
                bleu, 100.0 * precisions[0], 100.0 * precisions[1],
                100.0 * precisions[2], 100.0 * precisions[3], brevity_penalty,
                ratio);
  return buf;
}

}  // namespace posnmt
