#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include "posnmt/json_config.hpp"
#include "posnmt/model_state.hpp"

namespace posnmt {

// Binary container: header "#ckpt v1\n", then per tensor
//   u32 name length | name | u8 dtype | u8 rank | i64 dims | raw LE data.
// Entries: meta/config (JSON, self-contained model description), meta/step,
// meta/rng (dropout stream seed + counter), then param/adam-moment tensors in
// parameter order.
inline constexpr const char* kCheckpointMagic = "#ckpt v1\n";

enum class CkptDtype : std::uint8_t { f32 = 0, f64 = 1, i64 = 2, u64 = 3, u8 = 4 };

namespace detail {

struct RawEntry {
  CkptDtype dtype;
  std::vector<std::int64_t> dims;
  std::vector<char> bytes;
};

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  write_bytes(os, &v, sizeof(T));
}

inline void write_entry(std::ostream& os, const std::string& name,
                        CkptDtype dtype, const std::vector<std::int64_t>& dims,
                        const void* data, std::size_t bytes) {
  write_pod(os, static_cast<std::uint32_t>(name.size()));
  write_bytes(os, name.data(), name.size());
  write_pod(os, static_cast<std::uint8_t>(dtype));
  write_pod(os, static_cast<std::uint8_t>(dims.size()));
  for (std::int64_t d : dims) write_pod(os, d);
  write_bytes(os, data, bytes);
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

inline std::size_t dtype_size(CkptDtype d) {
  switch (d) {
    case CkptDtype::f32: return 4;
    case CkptDtype::f64: return 8;
    case CkptDtype::i64: return 8;
    case CkptDtype::u64: return 8;
    case CkptDtype::u8: return 1;
  }
  throw DataError("checkpoint: unknown dtype code");
}

inline std::map<std::string, RawEntry> read_entries(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  std::string magic(std::strlen(kCheckpointMagic), '\0');
  if (!is.read(magic.data(), static_cast<std::streamsize>(magic.size())) ||
      magic != kCheckpointMagic)
    throw DataError("unrecognized checkpoint file: " + path);
  std::map<std::string, RawEntry> entries;
  std::uint32_t name_len = 0;
  while (read_pod(is, name_len)) {
    std::string name(name_len, '\0');
    std::uint8_t dtype = 0, rank = 0;
    if (!is.read(name.data(), name_len) || !read_pod(is, dtype) ||
        !read_pod(is, rank))
      throw DataError("truncated checkpoint: " + path);
    if (dtype > static_cast<std::uint8_t>(CkptDtype::u8))
      throw DataError("checkpoint: unknown dtype code");
    RawEntry e;
    e.dtype = static_cast<CkptDtype>(dtype);
    e.dims.resize(rank);
    std::size_t numel = 1;
    for (auto& d : e.dims) {
      if (!read_pod(is, d) || d < 0)
        throw DataError("truncated checkpoint: " + path);
      numel *= static_cast<std::size_t>(d);
    }
    e.bytes.resize(numel * dtype_size(e.dtype));
    if (!is.read(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size())))
      throw DataError("truncated checkpoint: " + path);
    if (entries.count(name))
      throw DataError("checkpoint has duplicate entry: " + name);
    entries.emplace(std::move(name), std::move(e));
  }
  return entries;
}

template <typename Scalar>
constexpr CkptDtype scalar_dtype() {
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  return std::is_same_v<Scalar, float> ? CkptDtype::f32 : CkptDtype::f64;
}

template <typename Scalar>
void write_tensor(std::ostream& os, const std::string& name,
                  const Tensor<Scalar>& t) {
  std::vector<std::int64_t> dims(t.shape().begin(), t.shape().end());
  write_entry(os, name, scalar_dtype<Scalar>(), dims, t.data(),
              static_cast<std::size_t>(t.size()) * sizeof(Scalar));
}

template <typename Scalar>
void load_tensor(const std::map<std::string, RawEntry>& entries,
                 const std::string& name, Tensor<Scalar>& out) {
  auto it = entries.find(name);
  if (it == entries.end())
    throw DataError("checkpoint missing tensor: " + name);
  const RawEntry& e = it->second;
  if (e.dtype != scalar_dtype<Scalar>())
    throw DataError("checkpoint tensor " + name + " has wrong precision");
  Shape shape(e.dims.begin(), e.dims.end());
  if (shape != out.shape())
    throw DataError("checkpoint tensor " + name + " has shape " +
                    shape_str(shape) + ", expected " + shape_str(out.shape()));
  std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
}

inline Json merges_json(
    const std::vector<std::pair<std::string, std::string>>& merges) {
  Json out = Json::array();
  for (const auto& [l, r] : merges) out.push_back(Json::array({l, r}));
  return out;
}

inline std::vector<std::pair<std::string, std::string>> merges_from_json(
    const Json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& pair : j)
    out.emplace_back(pair.at(0).get<std::string>(),
                     pair.at(1).get<std::string>());
  return out;
}

}  // namespace detail

template <typename Scalar>
Json checkpoint_meta(const ModelState<Scalar>& st) {
  return Json{{"model", to_json(st.model)},
              {"pos", to_json(st.aug)},
              {"train", to_json(st.train)},
              {"optimizer", to_json(st.optim)},
              {"source_vocab", st.source_vocab.items()},
              {"target_vocab", st.target_vocab.items()},
              {"tag_vocab", st.tag_vocab.items()},
              {"source_merges", detail::merges_json(st.source_merges)},
              {"target_merges", detail::merges_json(st.target_merges)}};
}

template <typename Scalar>
void save_checkpoint(const std::string& path, const ModelState<Scalar>& st) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(kCheckpointMagic,
           static_cast<std::streamsize>(std::strlen(kCheckpointMagic)));

  const std::string config = checkpoint_meta(st).dump();
  detail::write_entry(os, "meta/config", CkptDtype::u8,
                      {static_cast<std::int64_t>(config.size())}, config.data(),
                      config.size());
  const std::int64_t step = st.step;
  detail::write_entry(os, "meta/step", CkptDtype::i64, {1}, &step,
                      sizeof(step));
  const std::uint64_t rng[2] = {st.dropout_rng.seed(),
                                st.dropout_rng.counter()};
  detail::write_entry(os, "meta/rng", CkptDtype::u64, {2}, rng, sizeof(rng));
  for (const auto& p : st.params) {
    detail::write_tensor(os, "param/" + p.name, p.value);
    detail::write_tensor(os, "adam/m/" + p.name, p.adam_m);
    detail::write_tensor(os, "adam/v/" + p.name, p.adam_v);
  }
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

// Reads only the embedded config JSON (to pick the scalar type before
// instantiating the full state).
inline Json peek_checkpoint_meta(const std::string& path) {
  auto entries = detail::read_entries(path);
  auto it = entries.find("meta/config");
  if (it == entries.end())
    throw DataError("checkpoint missing meta/config: " + path);
  const auto& bytes = it->second.bytes;
  try {
    return Json::parse(std::string(bytes.begin(), bytes.end()));
  } catch (const Json::exception& e) {
    throw DataError("checkpoint meta/config is not valid JSON: " +
                    std::string(e.what()));
  }
}

template <typename Scalar>
ModelState<Scalar> load_checkpoint(const std::string& path) {
  auto entries = detail::read_entries(path);
  auto cit = entries.find("meta/config");
  if (cit == entries.end())
    throw DataError("checkpoint missing meta/config: " + path);
  Json meta;
  try {
    meta = Json::parse(
        std::string(cit->second.bytes.begin(), cit->second.bytes.end()));
  } catch (const Json::exception& e) {
    throw DataError("checkpoint meta/config is not valid JSON: " +
                    std::string(e.what()));
  }

  ModelConfig model;
  PosAugConfig aug;
  TrainConfig train;
  OptimizerConfig optim;
  apply_json(meta.at("model"), model);
  apply_json(meta.at("pos"), aug);
  apply_json(meta.at("train"), train);
  apply_json(meta.at("optimizer"), optim);

  ModelState<Scalar> st = make_model_state<Scalar>(
      model, aug, train, optim,
      Vocab::from_items(meta.at("source_vocab").get<std::vector<std::string>>()),
      Vocab::from_items(meta.at("target_vocab").get<std::vector<std::string>>()),
      TagVocabulary::from_items(
          meta.at("tag_vocab").get<std::vector<std::string>>()),
      detail::merges_from_json(meta.at("source_merges")),
      detail::merges_from_json(meta.at("target_merges")));

  auto sit = entries.find("meta/step");
  auto rit = entries.find("meta/rng");
  if (sit == entries.end() || rit == entries.end())
    throw DataError("checkpoint missing meta entries: " + path);
  std::memcpy(&st.step, sit->second.bytes.data(), sizeof(st.step));
  std::uint64_t rng[2];
  if (rit->second.bytes.size() != sizeof(rng))
    throw DataError("checkpoint meta/rng has wrong size");
  std::memcpy(rng, rit->second.bytes.data(), sizeof(rng));
  st.dropout_rng = Rng(rng[0]);
  st.dropout_rng.restore(rng[1]);

  for (auto& p : st.params) {
    detail::load_tensor(entries, "param/" + p.name, p.value);
    detail::load_tensor(entries, "adam/m/" + p.name, p.adam_m);
    detail::load_tensor(entries, "adam/v/" + p.name, p.adam_v);
  }
  const std::size_t expected = 3 + 3 * st.params.size();
  if (entries.size() != expected)
    throw DataError("checkpoint has " + std::to_string(entries.size()) +
                    " entries, expected " + std::to_string(expected));
  return st;
}

}  // namespace posnmt
