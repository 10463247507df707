#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posnmt/errors.hpp"
#include "posnmt/rng.hpp"

namespace posnmt {

struct SentencePair {
  std::vector<std::string> source_tokens;
  std::vector<std::string> target_tokens;
  std::int64_t origin_line = 1;
};

struct FilterRuleSet {
  bool drop_single_token_number = true;
  bool drop_single_token_date = true;
  bool drop_single_token_upper_ref = true;
  int test_min_source_tokens = 0;  // 0 disables the short-sentence rule
};

struct CorpusStats {
  std::int64_t sentence_count = 0;
  std::int64_t token_count_source = 0;
  std::int64_t token_count_target = 0;
  std::int64_t unique_token_count_source = 0;
  std::int64_t unique_token_count_target = 0;
};

struct CorpusSplit {
  std::vector<SentencePair> train;
  std::vector<SentencePair> valid;
  std::vector<SentencePair> test;
};

std::vector<std::string> split_whitespace(const std::string& line);

// Reads one file's lines (LF endings, a trailing CR is tolerated and dropped).
std::vector<std::string> read_lines(const std::string& path);

std::vector<SentencePair> load_parallel(const std::string& source_path,
                                        const std::string& target_path);

std::vector<SentencePair> filter_pairs(const std::vector<SentencePair>& pairs,
                                       const FilterRuleSet& rules,
                                       bool is_test_set);

CorpusStats compute_stats(const std::vector<SentencePair>& pairs);

CorpusSplit split_corpus(const std::vector<SentencePair>& pairs,
                         double train_fraction, double valid_fraction,
                         std::uint64_t seed);

}  // namespace posnmt
