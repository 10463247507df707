#include "posnmt/bpe.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "posnmt/corpus.hpp"

namespace posnmt {

std::vector<std::string> utf8_split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((b & 0xE0) == 0xC0)
      len = 2;
    else if ((b & 0xF0) == 0xE0)
      len = 3;
    else if ((b & 0xF8) == 0xF0)
      len = 4;
    if (i + len > s.size()) len = 1;
    // continuation bytes must look like 10xxxxxx, else fall back to 1 byte
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::map<std::string, std::int64_t> count_words(
    const std::vector<std::vector<std::string>>& sentences) {
  std::map<std::string, std::int64_t> freq;
  for (const auto& s : sentences)
    for (const auto& t : s) ++freq[t];
  return freq;
}

BpeModel learn_bpe(const std::map<std::string, std::int64_t>& word_freq,
                   int num_merges) {
  if (word_freq.empty()) throw DataError("learn_bpe: empty corpus");
  if (num_merges < 0) throw ConfigError("learn_bpe: negative merge count");

  std::vector<std::pair<std::vector<std::string>, std::int64_t>> words;
  words.reserve(word_freq.size());
  for (const auto& [word, freq] : word_freq)
    words.emplace_back(utf8_split(word), freq);

  BpeModel model;
  for (int m = 0; m < num_merges; ++m) {
    // ordered map: scanning with a strict > keeps the lexicographically
    // smallest pair among ties
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    for (const auto& [syms, freq] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        counts[{syms[i], syms[i + 1]}] += freq;
    std::pair<std::string, std::string> best;
    std::int64_t best_count = 0;
    for (const auto& [pair, count] : counts)
      if (count > best_count) {
        best = pair;
        best_count = count;
      }
    if (best_count < 2) break;
    model.merges.push_back(best);
    model.vocab.insert(best.first + best.second);
    for (auto& [syms, freq] : words) {
      std::size_t i = 0;
      while (i + 1 < syms.size()) {
        if (syms[i] == best.first && syms[i + 1] == best.second) {
          syms[i] = best.first + best.second;
          syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        } else {
          ++i;
        }
      }
    }
  }
  return model;
}

std::vector<std::string> apply_bpe_token(const std::string& token,
                                         const BpeModel& model) {
  std::vector<std::string> syms = utf8_split(token);
  for (const auto& [left, right] : model.merges) {
    std::size_t i = 0;
    while (i + 1 < syms.size()) {
      if (syms[i] == left && syms[i + 1] == right) {
        syms[i] = left + right;
        syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      } else {
        ++i;
      }
    }
  }
  for (std::size_t i = 0; i + 1 < syms.size(); ++i) syms[i] += kBpeMarker;
  return syms;
}

SegmentedSentence apply_bpe(const std::vector<std::string>& tokens,
                            const BpeModel& model) {
  SegmentedSentence out;
  for (std::size_t w = 0; w < tokens.size(); ++w)
    for (auto& unit : apply_bpe_token(tokens[w], model)) {
      out.units.push_back(std::move(unit));
      out.word_index.push_back(static_cast<int>(w));
    }
  return out;
}

FactoredSequence propagate_tags(const SegmentedSentence& segmented,
                                const TaggedSentence& tagged,
                                const TagVocabulary& tag_vocab,
                                const Vocab& unit_vocab) {
  const int n_words = static_cast<int>(tagged.tokens.size());
  if (tagged.tokens.size() != tagged.tags.size())
    throw DataError("propagate_tags: |tokens| != |tags|");
  int prev = -1;
  for (int w : segmented.word_index) {
    if (w < 0 || w >= n_words)
      throw DataError("propagate_tags: word_index " + std::to_string(w) +
                      " out of range for " + std::to_string(n_words) + " words");
    if (w < prev || w > prev + 1)
      throw DataError("propagate_tags: word_index skips from " +
                      std::to_string(prev) + " to " + std::to_string(w));
    prev = w;
  }
  if (prev != n_words - 1)
    throw DataError("propagate_tags: word_index covers only " +
                    std::to_string(prev + 1) + " of " + std::to_string(n_words) +
                    " words");

  FactoredSequence seq;
  seq.units = segmented.units;
  seq.word_index = segmented.word_index;
  for (std::size_t k = 0; k < seq.units.size(); ++k) {
    seq.unit_ids.push_back(unit_vocab.id_or_unk(seq.units[k]));
    seq.tag_ids.push_back(tag_vocab.id_or_unk(
        tagged.tags[static_cast<std::size_t>(seq.word_index[k])]));
  }
  seq.units.push_back("</s>");
  seq.unit_ids.push_back(Vocab::kEos);
  seq.tag_ids.push_back(TagVocabulary::kEos);
  seq.word_index.push_back(n_words);
  return seq;
}

std::vector<std::string> merge_subwords(const std::vector<std::string>& units,
                                        std::ostream* warnings) {
  std::vector<std::string> tokens;
  std::string pending;
  const std::string marker = kBpeMarker;
  for (const auto& u : units) {
    if (u.size() >= marker.size() &&
        u.compare(u.size() - marker.size(), marker.size(), marker) == 0) {
      pending += u.substr(0, u.size() - marker.size());
    } else {
      tokens.push_back(pending + u);
      pending.clear();
    }
  }
  if (!pending.empty()) {
    if (warnings)
      *warnings << "warning: trailing continuation marker at sentence end\n";
    tokens.push_back(pending);
  }
  return tokens;
}

void serialize_bpe(const BpeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "#bpe v1\n";
  for (const auto& [left, right] : model.merges) out << left << ' ' << right << '\n';
}

BpeModel deserialize_bpe(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "#bpe v1")
    throw DataError("unrecognized BPE file: " + path);
  BpeModel model;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_whitespace(lines[i]);
    if (fields.size() != 2)
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected 'left right' merge line");
    model.merges.emplace_back(fields[0], fields[1]);
    model.vocab.insert(fields[0] + fields[1]);
  }
  return model;
}

}  // namespace posnmt
