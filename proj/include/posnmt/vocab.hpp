#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "posnmt/errors.hpp"

namespace posnmt {

// Subword vocabulary; ids contiguous, 0..3 reserved.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  Vocab();

  int add(const std::string& item);  // existing id if already present
  bool contains(const std::string& item) const { return index_.count(item) != 0; }
  int id_of(const std::string& item) const;  // throws DataError if absent
  int id_or_unk(const std::string& item) const;
  const std::string& item(int id) const;
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

  static Vocab from_items(const std::vector<std::string>& items);

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

// First-occurrence-order vocabulary over already-segmented sentences.
Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences);

}  // namespace posnmt
