#include "posnmt/pos_tags.hpp"

#include <fstream>
#include <ostream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "posnmt/corpus.hpp"

namespace posnmt {

const std::vector<std::string>& known_tags() {
  static const std::vector<std::string> tags = {
      // reserved
      kPadTag, kUnkTag, kEosTag,
      // Penn Treebank word tags
      "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
      "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS",
      "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT",
      "WP", "WP$", "WRB",
      // punctuation
      "#", "$", "''", "(", ")", ",", ".", ":", "``", "-LRB-", "-RRB-"};
  return tags;
}

bool is_known_tag(const std::string& label) {
  static const std::unordered_set<std::string> set(known_tags().begin(),
                                                   known_tags().end());
  return set.count(label) != 0;
}

TagVocabulary::TagVocabulary() {
  add(kPadTag);
  add(kUnkTag);
  add(kEosTag);
}

int TagVocabulary::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(items_.size());
  items_.push_back(label);
  index_[label] = id;
  return id;
}

int TagVocabulary::id_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw DataError("unknown tag label: " + label);
  return it->second;
}

int TagVocabulary::id_or_unk(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& TagVocabulary::label_of(int id) const {
  if (id < 0 || id >= size())
    throw DataError("tag id out of range: " + std::to_string(id));
  return items_[static_cast<std::size_t>(id)];
}

TagVocabulary TagVocabulary::from_items(const std::vector<std::string>& items) {
  if (items.size() < 3 || items[0] != kPadTag || items[1] != kUnkTag ||
      items[2] != kEosTag)
    throw DataError("tag vocabulary items must start with the reserved tags");
  TagVocabulary v;
  for (std::size_t i = 3; i < items.size(); ++i) {
    if (v.contains(items[i]))
      throw DataError("duplicate tag in vocabulary: " + items[i]);
    v.add(items[i]);
  }
  return v;
}

namespace {

std::string normalize_tag(const std::string& tag, const std::string& where,
                          std::ostream* warnings) {
  if (is_known_tag(tag)) return tag;
  if (warnings)
    *warnings << "warning: " << where << ": unknown tag '" << tag
              << "' mapped to " << kUnkTag << "\n";
  return kUnkTag;
}

std::vector<TaggedSentence> parse_slash(const std::string& path,
                                        std::ostream* warnings) {
  std::vector<TaggedSentence> out;
  auto lines = read_lines(path);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto toks = split_whitespace(lines[ln]);
    if (toks.empty()) continue;
    TaggedSentence s;
    const std::string where = path + ":" + std::to_string(ln + 1);
    for (const auto& t : toks) {
      auto pos = t.rfind('_');
      if (pos == std::string::npos || pos == 0 || pos + 1 == t.size())
        throw DataError(where + ": token without word_TAG separator: '" + t + "'");
      s.tokens.push_back(t.substr(0, pos));
      s.tags.push_back(normalize_tag(t.substr(pos + 1), where, warnings));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

std::vector<TaggedSentence> parse_tsv(const std::string& path,
                                      std::ostream* warnings) {
  std::vector<TaggedSentence> out;
  auto lines = read_lines(path);
  std::size_t i = 0;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    const std::string where = path + ":" + std::to_string(i + 1);
    if (i + 1 >= lines.size() || lines[i + 1].empty())
      throw DataError(where + ": token line without a tag line");
    TaggedSentence s;
    s.tokens = split_tabs(lines[i]);
    auto raw_tags = split_tabs(lines[i + 1]);
    if (s.tokens.size() != raw_tags.size())
      throw DataError(where + ": " + std::to_string(s.tokens.size()) +
                      " tokens but " + std::to_string(raw_tags.size()) + " tags");
    for (const auto& t : raw_tags)
      s.tags.push_back(normalize_tag(t, where, warnings));
    out.push_back(std::move(s));
    i += 2;
    if (i < lines.size() && !lines[i].empty())
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected blank line between sentences");
    ++i;
  }
  return out;
}

}  // namespace

std::vector<TaggedSentence> parse_tagged_file(const std::string& path,
                                              TagFileFormat format,
                                              std::ostream* warnings) {
  return format == TagFileFormat::slash ? parse_slash(path, warnings)
                                        : parse_tsv(path, warnings);
}

void write_tagged_file(const std::string& path,
                       const std::vector<TaggedSentence>& sentences,
                       TagFileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& s : sentences) {
    if (format == TagFileFormat::slash) {
      for (std::size_t i = 0; i < s.tokens.size(); ++i)
        out << (i ? " " : "") << s.tokens[i] << '_' << s.tags[i];
      out << '\n';
    } else {
      for (std::size_t i = 0; i < s.tokens.size(); ++i)
        out << (i ? "\t" : "") << s.tokens[i];
      out << '\n';
      for (std::size_t i = 0; i < s.tags.size(); ++i)
        out << (i ? "\t" : "") << s.tags[i];
      out << "\n\n";
    }
  }
}

namespace {

std::string lowercase_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() > suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TaggedSentence fallback_tag(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DataError("fallback_tag: empty token list");
  static const std::unordered_set<std::string> articles = {"the", "a", "an"};
  static const std::unordered_set<std::string> prepositions = {
      "of", "in", "on", "at", "by", "for", "with", "from", "about",
      "as", "into", "over", "under", "between", "through", "after", "before"};
  static const std::unordered_set<std::string> pronouns = {
      "i", "you", "he", "she", "it", "we", "they",
      "me", "him", "her", "us", "them"};
  static const std::regex digits("^[0-9]+([.,][0-9]+)*$");

  TaggedSentence s;
  s.tokens = tokens;
  s.tags.reserve(tokens.size());
  for (const auto& tok : tokens) {
    const std::string lower = lowercase_ascii(tok);
    std::string tag;
    if (articles.count(lower))
      tag = "DT";
    else if (prepositions.count(lower))
      tag = "IN";
    else if (pronouns.count(lower))
      tag = "PRP";
    else if (std::regex_match(tok, digits))
      tag = "CD";
    else if (ends_with(tok, "ing"))
      tag = "VBG";
    else if (ends_with(tok, "ed"))
      tag = "VBD";
    else if (ends_with(tok, "ly"))
      tag = "RB";
    else if (ends_with(tok, "s"))
      tag = "NNS";
    else
      tag = "NN";
    s.tags.push_back(tag);
  }
  return s;
}

TagVocabulary build_tag_vocab(const std::vector<TaggedSentence>& corpus) {
  TagVocabulary v;
  for (const auto& s : corpus)
    for (const auto& t : s.tags) v.add(t);
  return v;
}

}  // namespace posnmt
