#include "posnmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

namespace posnmt {

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<SentencePair> load_parallel(const std::string& source_path,
                                        const std::string& target_path) {
  auto src = read_lines(source_path);
  auto tgt = read_lines(target_path);
  if (src.size() != tgt.size())
    throw DataError(source_path + " vs " + target_path + ": line count mismatch " +
                    std::to_string(src.size()) + "≠" + std::to_string(tgt.size()));
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    SentencePair p;
    p.source_tokens = split_whitespace(src[i]);
    p.target_tokens = split_whitespace(tgt[i]);
    p.origin_line = static_cast<std::int64_t>(i) + 1;
    if (p.source_tokens.empty())
      throw DataError(source_path + ":" + std::to_string(i + 1) + ": empty line");
    if (p.target_tokens.empty())
      throw DataError(target_path + ":" + std::to_string(i + 1) + ": empty line");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

// Anchored whole-token patterns for the single-token drop rules.
const std::regex& number_pattern() {
  static const std::regex re("^[0-9]+([.,/-][0-9]+)*$");
  return re;
}
const std::regex& date_pattern() {
  static const std::regex re("^[0-9]{1,4}[./-][0-9]{1,2}[./-][0-9]{1,4}$");
  return re;
}
const std::regex& upper_ref_pattern() {
  static const std::regex re("^[A-Z]{2,}[0-9]*$");
  return re;
}

bool drops_single_token(const std::string& tok, const FilterRuleSet& rules) {
  if (rules.drop_single_token_number && std::regex_match(tok, number_pattern()))
    return true;
  if (rules.drop_single_token_date && std::regex_match(tok, date_pattern()))
    return true;
  if (rules.drop_single_token_upper_ref && std::regex_match(tok, upper_ref_pattern()))
    return true;
  return false;
}

}  // namespace

std::vector<SentencePair> filter_pairs(const std::vector<SentencePair>& pairs,
                                       const FilterRuleSet& rules,
                                       bool is_test_set) {
  if (rules.test_min_source_tokens < 0 || rules.test_min_source_tokens > 100)
    throw ConfigError("test_min_source_tokens must be in [0, 100], got " +
                      std::to_string(rules.test_min_source_tokens));
  std::vector<SentencePair> kept;
  kept.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.source_tokens.size() == 1 && p.target_tokens.size() == 1 &&
        drops_single_token(p.source_tokens[0], rules))
      continue;
    if (is_test_set && rules.test_min_source_tokens > 0 &&
        p.source_tokens.size() <=
            static_cast<std::size_t>(rules.test_min_source_tokens))
      continue;
    kept.push_back(p);
  }
  return kept;
}

CorpusStats compute_stats(const std::vector<SentencePair>& pairs) {
  CorpusStats s;
  std::unordered_set<std::string> src_types, tgt_types;
  for (const auto& p : pairs) {
    ++s.sentence_count;
    s.token_count_source += static_cast<std::int64_t>(p.source_tokens.size());
    s.token_count_target += static_cast<std::int64_t>(p.target_tokens.size());
    src_types.insert(p.source_tokens.begin(), p.source_tokens.end());
    tgt_types.insert(p.target_tokens.begin(), p.target_tokens.end());
  }
  s.unique_token_count_source = static_cast<std::int64_t>(src_types.size());
  s.unique_token_count_target = static_cast<std::int64_t>(tgt_types.size());
  return s;
}

CorpusSplit split_corpus(const std::vector<SentencePair>& pairs,
                         double train_fraction, double valid_fraction,
                         std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(valid_fraction > 0.0) ||
      !(train_fraction + valid_fraction < 1.0))
    throw ConfigError("split fractions must be positive and sum below 1");
  if (pairs.size() < 3)
    throw DataError("split needs at least 3 pairs, got " +
                    std::to_string(pairs.size()));
  std::vector<SentencePair> shuffled = pairs;
  Rng rng(seed);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rng.next_below(i + 1)]);
  const auto n = shuffled.size();
  const auto n_train = static_cast<std::size_t>(
      static_cast<double>(n) * train_fraction);
  const auto n_valid = static_cast<std::size_t>(
      static_cast<double>(n) * valid_fraction);
  CorpusSplit out;
  out.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  out.valid.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_valid);
  out.test.assign(shuffled.begin() + n_train + n_valid, shuffled.end());
  return out;
}

}  // namespace posnmt
