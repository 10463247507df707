#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "posnmt/checkpoint.hpp"
#include "posnmt/trainer.hpp"
#include "test_support.hpp"

using namespace posnmt;
using testsup::ToySpec;
using testsup::toy_example;
using testsup::toy_state;

namespace {

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name) : path("ckpt_test_" + name) {}
  ~TempPath() { std::remove(path.c_str()); }
};

template <typename S>
void check_states_equal(const ModelState<S>& a, const ModelState<S>& b) {
  CHECK(a.step == b.step);
  CHECK(a.dropout_rng.seed() == b.dropout_rng.seed());
  CHECK(a.dropout_rng.counter() == b.dropout_rng.counter());
  CHECK(a.model.d_model == b.model.d_model);
  CHECK(a.aug.mode == b.aug.mode);
  CHECK(a.aug.d_pos == b.aug.d_pos);
  CHECK(a.train.seed == b.train.seed);
  CHECK(a.source_vocab.items() == b.source_vocab.items());
  CHECK(a.target_vocab.items() == b.target_vocab.items());
  CHECK(a.tag_vocab.items() == b.tag_vocab.items());
  CHECK(a.source_merges == b.source_merges);
  REQUIRE(a.params.size() == b.params.size());
  for (const auto& p : a.params) {
    const auto& q = b.params.get(p.name);
    REQUIRE(p.value.shape() == q.value.shape());
    for (Index i = 0; i < p.value.size(); ++i) {
      CHECK(p.value[i] == q.value[i]);
      CHECK(p.adam_m[i] == q.adam_m[i]);
      CHECK(p.adam_v[i] == q.adam_v[i]);
    }
  }
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round-trip restores every field bit-exactly") {
  ToySpec spec;
  spec.mode = AugMode::embed_concat;
  spec.d_pos = 2;
  spec.seed = 42;
  auto st = toy_state<double>(spec);
  st.source_merges = {{"a", "b"}, {"ab", "c"}};
  st.target_merges = {{"x", "y"}};

  // Give the moments and rng non-trivial values first.
  Rng rng(1);
  std::vector<TrainExample> data;
  for (int i = 0; i < 4; ++i) data.push_back(toy_example(rng, 3, 12, 6));
  train_step(st, make_batches(data, 4, 1, 0)[0]);
  st.dropout_rng.next_u64();

  TempPath tmp("roundtrip.bin");
  save_checkpoint(tmp.path, st);
  auto loaded = load_checkpoint<double>(tmp.path);
  check_states_equal(st, loaded);
}

TEST_CASE("float32 round-trip and precision mismatch detection") {
  ToySpec spec;
  spec.precision = "f32";
  auto st = toy_state<float>(spec);
  TempPath tmp("f32.bin");
  save_checkpoint(tmp.path, st);
  auto loaded = load_checkpoint<float>(tmp.path);
  check_states_equal(st, loaded);
  CHECK_THROWS_AS(load_checkpoint<double>(tmp.path), DataError);
}

TEST_CASE("peek reads the embedded config without a full load") {
  ToySpec spec;
  spec.mode = AugMode::pe_concat;
  spec.d_pos = 4;
  spec.d_model = 8;
  auto st = toy_state<double>(spec);
  TempPath tmp("peek.bin");
  save_checkpoint(tmp.path, st);
  Json meta = peek_checkpoint_meta(tmp.path);
  CHECK(meta.at("pos").at("mode") == "pe_concat");
  CHECK(meta.at("train").at("precision") == "f64");
  CHECK(meta.at("model").at("d_model") == 8);
}

TEST_CASE("corrupt files are rejected") {
  TempPath tmp("bad.bin");
  {
    std::ofstream os(tmp.path, std::ios::binary);
    os << "#not a checkpoint\n";
  }
  CHECK_THROWS_AS(load_checkpoint<double>(tmp.path), DataError);
  {
    std::ofstream os(tmp.path, std::ios::binary);
    os << "#ckpt v1\n";
    const std::uint32_t len = 200;  // promises more bytes than present
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os << "meta";
  }
  CHECK_THROWS_AS(load_checkpoint<double>(tmp.path), DataError);
  CHECK_THROWS_AS(load_checkpoint<double>("ckpt_test_missing.bin"), DataError);
}

TEST_CASE("save twice produces byte-identical files") {
  ToySpec spec;
  spec.seed = 3;
  auto st = toy_state<double>(spec);
  TempPath a("dup_a.bin"), b("dup_b.bin");
  save_checkpoint(a.path, st);
  save_checkpoint(b.path, st);
  std::ifstream fa(a.path, std::ios::binary), fb(b.path, std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().size() > 0);
}

TEST_CASE("resume reproduces the uninterrupted loss sequence") {
  Rng rng(8);
  std::vector<TrainExample> data;
  for (int i = 0; i < 10; ++i) data.push_back(toy_example(rng, 3, 12, 6));

  auto fresh = [&] {
    ToySpec spec;
    spec.seed = 77;
    spec.dropout_p = 0.1;  // exercises the saved rng counter
    auto st = toy_state<double>(spec);
    st.train.max_steps = 6;
    st.train.checkpoint_every = 3;
    return st;
  };

  // Uninterrupted: 6 steps.
  auto full = fresh();
  std::ostringstream full_log;
  train_loop(full, data, {}, full_log);

  // Interrupted: 3 steps, checkpoint, reload, 3 more.
  auto part = fresh();
  part.train.max_steps = 3;
  std::ostringstream log_a;
  train_loop(part, data, {}, log_a);
  TempPath tmp("resume.bin");
  save_checkpoint(tmp.path, part);
  auto resumed = load_checkpoint<double>(tmp.path);
  resumed.train.max_steps = 6;
  std::ostringstream log_b;
  train_loop(resumed, data, {}, log_b);

  CHECK(log_a.str() + log_b.str() == full_log.str());
  check_states_equal(full, resumed);
}

}  // TEST_SUITE
