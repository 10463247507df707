#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "posnmt/errors.hpp"
#include "posnmt/pos_tags.hpp"
#include "posnmt/vocab.hpp"

namespace posnmt {

inline constexpr const char* kBpeMarker = "@@";

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;  // learn order
  std::set<std::string> vocab;  // derived: the output symbol of every merge
};

// Splits a UTF-8 string into codepoint-sized symbols; malformed bytes pass
// through as single-byte symbols.
std::vector<std::string> utf8_split(const std::string& s);

std::map<std::string, std::int64_t> count_words(
    const std::vector<std::vector<std::string>>& sentences);

// Iteratively merges the most frequent adjacent symbol pair inside words
// (ties broken lexicographically); stops after num_merges merges or when the
// best pair occurs fewer than 2 times.
BpeModel learn_bpe(const std::map<std::string, std::int64_t>& word_freq,
                   int num_merges);

// Replays merges in learned order over one token; every unit except the last
// carries the "@@" suffix.
std::vector<std::string> apply_bpe_token(const std::string& token,
                                         const BpeModel& model);

struct SegmentedSentence {
  std::vector<std::string> units;
  std::vector<int> word_index;  // source word of each unit
};

SegmentedSentence apply_bpe(const std::vector<std::string>& tokens,
                            const BpeModel& model);

struct FactoredSequence {
  std::vector<std::string> units;
  std::vector<int> unit_ids;
  std::vector<int> tag_ids;
  std::vector<int> word_index;
};

// Assigns each unit the tag of its source word, then appends one EOS unit
// (tag EOS_T, word_index = word count).
FactoredSequence propagate_tags(const SegmentedSentence& segmented,
                                const TaggedSentence& tagged,
                                const TagVocabulary& tag_vocab,
                                const Vocab& unit_vocab);

std::vector<std::string> merge_subwords(const std::vector<std::string>& units,
                                        std::ostream* warnings = nullptr);

void serialize_bpe(const BpeModel& model, const std::string& path);
BpeModel deserialize_bpe(const std::string& path);

}  // namespace posnmt
