#include "posnmt/vocab.hpp"

namespace posnmt {

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
  add("<s>");
  add("</s>");
}

int Vocab::add(const std::string& item) {
  auto it = index_.find(item);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(items_.size());
  items_.push_back(item);
  index_[item] = id;
  return id;
}

int Vocab::id_of(const std::string& item) const {
  auto it = index_.find(item);
  if (it == index_.end()) throw DataError("unknown vocabulary item: " + item);
  return it->second;
}

int Vocab::id_or_unk(const std::string& item) const {
  auto it = index_.find(item);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::item(int id) const {
  if (id < 0 || id >= size())
    throw DataError("vocabulary id out of range: " + std::to_string(id));
  return items_[static_cast<std::size_t>(id)];
}

Vocab Vocab::from_items(const std::vector<std::string>& items) {
  if (items.size() < 4 || items[0] != "<pad>" || items[1] != "<unk>" ||
      items[2] != "<s>" || items[3] != "</s>")
    throw DataError("vocabulary items must start with <pad> <unk> <s> </s>");
  Vocab v;
  for (std::size_t i = 4; i < items.size(); ++i) {
    if (v.contains(items[i]))
      throw DataError("duplicate vocabulary item: " + items[i]);
    v.add(items[i]);
  }
  return v;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences) {
  Vocab v;
  for (const auto& s : sentences)
    for (const auto& u : s) v.add(u);
  return v;
}

}  // namespace posnmt
