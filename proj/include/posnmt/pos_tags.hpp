#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "posnmt/errors.hpp"

namespace posnmt {

inline constexpr const char* kPadTag = "PAD_T";
inline constexpr const char* kUnkTag = "UNK_T";
inline constexpr const char* kEosTag = "EOS_T";

// Penn Treebank word + punctuation tags plus the three reserved tags.
const std::vector<std::string>& known_tags();
bool is_known_tag(const std::string& label);

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// tag <-> id, ids contiguous; 0..2 are the reserved tags.
class TagVocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;

  TagVocabulary();

  int add(const std::string& label);  // existing id if already present
  bool contains(const std::string& label) const { return index_.count(label) != 0; }
  int id_of(const std::string& label) const;    // throws DataError if absent
  int id_or_unk(const std::string& label) const;
  const std::string& label_of(int id) const;
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

  static TagVocabulary from_items(const std::vector<std::string>& items);

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

enum class TagFileFormat { slash, tsv };

// Unknown tag labels are replaced by UNK_T with a warning line on `warnings`
// (defaults to stderr when null is passed at the call sites that log).
std::vector<TaggedSentence> parse_tagged_file(const std::string& path,
                                              TagFileFormat format,
                                              std::ostream* warnings = nullptr);

void write_tagged_file(const std::string& path,
                       const std::vector<TaggedSentence>& sentences,
                       TagFileFormat format);

// Deterministic rule-cascade tagger: closed-class lexicon (articles DT,
// prepositions IN, pronouns PRP, digit pattern CD), then suffix rules
// (-ing VBG, -ed VBD, -ly RB, -s NNS), else NN.
TaggedSentence fallback_tag(const std::vector<std::string>& tokens);

TagVocabulary build_tag_vocab(const std::vector<TaggedSentence>& corpus);

}  // namespace posnmt
