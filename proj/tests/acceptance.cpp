// Acceptance gate: eleven criteria, each printed as a single PASS/FAIL line
// with the measured quantity inline. Exit code 0 only when every selected
// criterion passes. Run a single criterion with `--only N`.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "posnmt/bleu.hpp"
#include "posnmt/checkpoint.hpp"
#include "posnmt/decode.hpp"
#include "posnmt/grad_check.hpp"
#include "posnmt/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace posnmt;
namespace fs = std::filesystem;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& msg) {
  if (!cond) throw Failure(msg);
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Statement of scope: the full-scale result is not reproducible here.

std::string criterion1() {
  return "full-scale reference BLEU (baseline 29.92, embed_concat 30.84, "
         "pe_concat 28.75) trained on a private 54,914-sentence corpus is out "
         "of scope; criteria 2-11 substitute property-based checks";
}

// ---------------------------------------------------------------------------
// 2. Gradient fidelity on the desk config, all parameters, all three modes.

std::string criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_where;
  const AugMode modes[] = {AugMode::baseline, AugMode::embed_concat,
                           AugMode::pe_concat};
  for (AugMode mode : modes) {
    testsup::ToySpec spec;
    spec.seed = 11;
    spec.mode = mode;
    spec.d_pos = mode == AugMode::baseline ? 0 : 4;
    spec.vocab = 50;
    spec.tag_vocab = 6;
    spec.num_layers = 2;
    spec.num_heads = 2;
    spec.d_model = 16;
    spec.d_ffn = 32;
    spec.dropout_p = 0.0;  // finite differences need a deterministic loss
    spec.max_positions = 16;
    auto st = testsup::toy_state<double>(spec);

    Rng data_rng(77);
    std::vector<TrainExample> corpus;
    corpus.push_back(testsup::toy_example(data_rng, 7, spec.vocab, spec.tag_vocab));
    corpus.push_back(testsup::toy_example(data_rng, 4, spec.vocab, spec.tag_vocab));
    const Batch batch = make_batches(corpus, 2, 1, 0).at(0);

    const auto loss_value = [&]() -> double {
      Graph<double> g(Mode::train);
      Binding<double> bind(g, st.params);
      Rng drop(0);
      Var logits = model_forward(g, bind, st, batch, drop);
      LossResult<double> loss = label_smoothed_loss(
          g, logits, batch.dec_target, st.train.label_smoothing, Vocab::kPad);
      return g.value(loss.loss)[0];
    };

    {
      Graph<double> g(Mode::train);
      Binding<double> bind(g, st.params);
      Rng drop(0);
      Var logits = model_forward(g, bind, st, batch, drop);
      LossResult<double> loss = label_smoothed_loss(
          g, logits, batch.dec_target, st.train.label_smoothing, Vocab::kPad);
      g.backward(loss.loss);
      bind.pull_grads();
    }

    const GradCheckResult res = check_gradients(st.params, loss_value);
    if (res.max_rel_err > worst) {
      worst = res.max_rel_err;
      worst_where = std::string(aug_mode_name(mode)) + "/" + res.worst_param;
    }
    expect(res.max_rel_err < 1e-4,
           std::string(aug_mode_name(mode)) + ": max rel err " + fmt(res.max_rel_err) +
               " at " + res.worst_param + "[" +
               std::to_string(res.worst_index) + "], tolerance 1e-4");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  expect(secs < 120.0, "runtime " + fmt(secs, 3) + "s exceeds 2 min");
  return "max rel err " + fmt(worst) + " (" + worst_where + ") over all "
         "parameters x 3 modes in " + fmt(secs, 3) + "s";
}

// ---------------------------------------------------------------------------
// 3. Assembled encoder input width equals d_model for d_pos in {2,4,8}.

std::string criterion3() {
  for (AugMode mode : {AugMode::embed_concat, AugMode::pe_concat}) {
    for (int dp : {2, 4, 8}) {
      testsup::ToySpec spec;
      spec.mode = mode;
      spec.d_pos = dp;
      spec.d_model = 16;
      spec.num_heads = 2;
      auto st = testsup::toy_state<double>(spec);
      Rng rng(5);
      const FactoredSequence src = testsup::toy_source(rng, 6, spec.vocab, spec.tag_vocab);
      std::vector<TrainExample> corpus(1);
      corpus[0].source = src;
      corpus[0].target_ids = {4, 5};
      const Batch batch = make_batches(corpus, 1, 1, 0).at(0);
      Graph<double> g(Mode::eval);
      Binding<double> bind(g, st.params);
      Rng drop(0);
      Var enc_in = assemble_encoder_input(g, bind, batch.src_units,
                                          batch.src_tags, st.pe, st.model,
                                          st.aug, drop);
      const Index width = g.value(enc_in).dim(-1);
      expect(width == 16, std::string(aug_mode_name(mode)) + " d_pos " + std::to_string(dp) +
                              ": input width " + std::to_string(width) +
                              " != d_model 16");
    }
  }
  return "encoder input width == 16 for d_pos {2,4,8} x both concat modes";
}

// ---------------------------------------------------------------------------
// 4. d_pos = 0 concat modes are bit-identical to baseline, same seed.

std::string criterion4() {
  const auto run_mode = [](AugMode mode) {
    testsup::ToySpec spec;
    spec.seed = 21;
    spec.mode = mode;
    spec.d_pos = 0;
    spec.d_model = 16;
    spec.num_heads = 2;
    spec.num_layers = 2;
    spec.dropout_p = 0.1;  // exercises the dropout stream alignment too
    auto st = testsup::toy_state<double>(spec);
    Rng data_rng(9);
    std::vector<TrainExample> corpus;
    corpus.push_back(testsup::toy_example(data_rng, 5, spec.vocab, spec.tag_vocab));
    corpus.push_back(testsup::toy_example(data_rng, 3, spec.vocab, spec.tag_vocab));
    const Batch batch = make_batches(corpus, 2, 1, 0).at(0);

    Graph<double> g(Mode::train);
    Binding<double> bind(g, st.params);
    Var enc_in = assemble_encoder_input(g, bind, batch.src_units,
                                        batch.src_tags, st.pe, st.model,
                                        st.aug, st.dropout_rng);
    Mask enc_mask = key_padding_mask(batch.src_units, batch.src_units.dim(-1));
    Var enc_out =
        encoder_forward(g, bind, enc_in, &enc_mask, st.model, st.dropout_rng);
    Var dec_in = embed_target(g, bind, batch.dec_input, st.pe.full, st.model,
                              st.dropout_rng);
    const Index lt = batch.dec_input.dim(-1);
    Mask self_mask = combine_masks(causal_mask(batch.dec_input.dim(0), lt),
                                   key_padding_mask(batch.dec_input, lt));
    Mask cross_mask = key_padding_mask(batch.src_units, lt);
    Var logits = decoder_forward(g, bind, dec_in, enc_out, &self_mask,
                                 &cross_mask, st.model, st.dropout_rng);
    std::pair<Tensor<double>, Tensor<double>> out{g.value(enc_out),
                                                  g.value(logits)};
    return out;
  };

  const auto base = run_mode(AugMode::baseline);
  for (AugMode mode : {AugMode::embed_concat, AugMode::pe_concat}) {
    const auto got = run_mode(mode);
    const auto bits_equal = [](const Tensor<double>& a, const Tensor<double>& b) {
      if (a.size() != b.size()) return false;
      return std::memcmp(a.data(), b.data(),
                         sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
    };
    expect(bits_equal(base.first, got.first),
           std::string(aug_mode_name(mode)) + " d_pos 0: encoder outputs differ from baseline");
    expect(bits_equal(base.second, got.second),
           std::string(aug_mode_name(mode)) + " d_pos 0: logits differ from baseline");
  }
  return "encoder outputs and logits bit-identical to baseline at d_pos 0 "
         "(dropout active, shared seed)";
}

// ---------------------------------------------------------------------------
// Shared trainer for criteria 5 and 6.

struct FitResult {
  double final_loss = 0.0;
  int gate_step = -1;  // first step whose loss reached the gate, -1 if never
  int steps = 0;
  double accuracy = 0.0;  // greedy exact-match rate on the training set
  double seconds = 0.0;
};

// Trains until both gates hold (loss at or under gate_loss, then greedy
// exact-match at or above acc_target, re-measured every 25 steps) or the step
// budget runs out; either way reports the last loss/accuracy seen.
FitResult fit_and_score(ModelState<double>& st,
                        const std::vector<TrainExample>& corpus, int max_steps,
                        double gate_loss, double acc_target) {
  const auto t0 = std::chrono::steady_clock::now();
  FitResult r;
  const int per_epoch = static_cast<int>(
      (corpus.size() + st.train.batch_sentences - 1) / st.train.batch_sentences);
  const auto measure = [&]() {
    int hits = 0;
    for (const auto& ex : corpus) {
      const Hypothesis h = greedy_decode(st, ex.source);
      std::vector<int> want = ex.target_ids;
      want.push_back(Vocab::kEos);
      if (h.tokens == want) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(corpus.size());
  };

  double loss = std::numeric_limits<double>::infinity();
  bool done = false;
  while (st.step < max_steps && !done) {
    const std::int64_t epoch = st.step / per_epoch;
    const auto batches =
        make_batches(corpus, st.train.batch_sentences, st.train.seed, epoch);
    loss = train_step(st, batches[static_cast<std::size_t>(st.step % per_epoch)]);
    if (r.gate_step < 0 && loss <= gate_loss)
      r.gate_step = static_cast<int>(st.step);
    if (r.gate_step > 0 &&
        (st.step == r.gate_step || (st.step - r.gate_step) % 25 == 0)) {
      r.accuracy = measure();
      done = r.accuracy >= acc_target;
    }
  }
  if (!done) r.accuracy = measure();
  r.final_loss = loss;
  r.steps = static_cast<int>(st.step);
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return r;
}

// ---------------------------------------------------------------------------
// 5. Copy-task overfit in all three modes.

std::string criterion5() {
  Rng data_rng(123);
  std::vector<TrainExample> corpus;
  for (int i = 0; i < 32; ++i) {
    const int len = 3 + static_cast<int>(data_rng.next_below(6));  // 3..8
    corpus.push_back(testsup::toy_example(data_rng, len, 12, 6));
  }

  std::string detail;
  const AugMode modes[] = {AugMode::baseline, AugMode::embed_concat,
                           AugMode::pe_concat};
  for (AugMode mode : modes) {
    testsup::ToySpec spec;
    spec.seed = 3;
    spec.mode = mode;
    spec.d_pos = mode == AugMode::baseline ? 0 : 4;
    spec.vocab = 12;
    spec.num_layers = 1;
    spec.num_heads = 2;
    spec.d_model = 32;
    spec.d_ffn = 64;
    spec.dropout_p = 0.0;
    auto st = testsup::toy_state<double>(spec);
    st.train.batch_sentences = 32;
    st.train.warmup_steps = 50;

    const double floor =
        label_smoothing_floor(st.train.label_smoothing,
                              st.model.target_vocab_size);
    const FitResult r = fit_and_score(st, corpus, 500, floor + 0.1, 0.95);
    expect(r.gate_step > 0,
           std::string(aug_mode_name(mode)) + ": loss " + fmt(r.final_loss) +
               " never reached floor " + fmt(floor) + " + 0.1 within " +
               std::to_string(r.steps) + " steps");
    expect(r.accuracy >= 0.95, std::string(aug_mode_name(mode)) + ": greedy accuracy " +
                                   fmt(r.accuracy) + " < 0.95");
    expect(r.seconds < 300.0, std::string(aug_mode_name(mode)) + ": runtime " +
                                  fmt(r.seconds, 3) + "s exceeds 5 min");
    if (!detail.empty()) detail += ", ";
    detail += std::string(aug_mode_name(mode)) + " gate@" +
              std::to_string(r.gate_step) + " loss " + fmt(r.final_loss, 4) +
              " acc " + fmt(r.accuracy, 3);
  }
  return detail + " (floor+0.1 gate, 32 pairs)";
}

// ---------------------------------------------------------------------------
// 6. POS-signal sanity: the target is decidable only from the tag.

std::string criterion6() {
  // One ambiguous source unit (id 4); tag NN=3 demands target 5, VB=4 target 6.
  std::vector<TrainExample> corpus;
  for (int i = 0; i < 32; ++i) {
    TrainExample ex;
    const bool noun = i % 2 == 0;
    ex.source.unit_ids = {4, Vocab::kEos};
    ex.source.tag_ids = {noun ? 3 : 4, TagVocabulary::kEos};
    ex.source.units = {"w4", "</s>"};
    ex.source.word_index = {0, 1};
    ex.target_ids = {noun ? 5 : 6};
    corpus.push_back(ex);
  }

  int seeds_passed = 0;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto run = [&](AugMode mode) {
      testsup::ToySpec spec;
      spec.seed = seed;
      spec.mode = mode;
      spec.d_pos = mode == AugMode::baseline ? 0 : 4;
      spec.vocab = 8;
      spec.tag_vocab = 6;
      spec.num_layers = 1;
      spec.num_heads = 2;
      spec.d_model = 16;
      spec.d_ffn = 32;
      spec.dropout_p = 0.0;
      auto st = testsup::toy_state<double>(spec);
      st.train.batch_sentences = 32;
      st.train.warmup_steps = 50;
      // gate_loss -1: no early stop, accuracy measured after the full run
      return fit_and_score(st, corpus, 400, -1.0, 2.0);
    };
    const FitResult aug = run(AugMode::embed_concat);
    const FitResult base = run(AugMode::baseline);
    const bool ok = aug.accuracy >= 0.95 && base.accuracy <= 0.60;
    if (ok) ++seeds_passed;
    if (!detail.empty()) detail += "; ";
    detail += "seed " + std::to_string(seed) + ": embed " +
              fmt(aug.accuracy, 3) + ", baseline " + fmt(base.accuracy, 3) +
              (ok ? " ok" : " FAIL");
  }
  expect(seeds_passed >= 2, "only " + std::to_string(seeds_passed) +
                                "/3 seeds passed (need 2): " + detail);
  return detail + " (embed>=0.95, baseline<=0.60, 2-of-3)";
}

// ---------------------------------------------------------------------------
// 7. BLEU oracles.

std::string criterion7() {
  const std::vector<std::vector<std::string>> corpus = {
      {"the", "cat", "sat", "on", "the", "mat"},
      {"a", "quick", "brown", "fox"}};
  const BleuReport self = bleu_corpus(corpus, corpus);
  expect(self.bleu == 100.0, "bleu(x,x) = " + fmt(self.bleu, 17) + " != 100");

  const std::vector<std::vector<std::string>> cand = {
      {"the", "the", "the", "the", "the", "the", "the"}};
  const std::vector<std::vector<std::string>> ref = {
      {"the", "cat", "is", "on", "the", "mat"}};
  const auto [clipped, total] = modified_precision(cand, ref, 1);
  expect(clipped == 2 && total == 7,
         "clipped unigram precision " + std::to_string(clipped) + "/" +
             std::to_string(total) + " != 2/7");

  // Candidate half the reference length: BP = exp(1 - 2) = exp(-1).
  const std::vector<std::vector<std::string>> short_cand = {
      {"a", "b", "c", "d", "e"}};
  const std::vector<std::vector<std::string>> long_ref = {
      {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}};
  const BleuReport bp = bleu_corpus(short_cand, long_ref);
  expect(std::abs(bp.brevity_penalty - std::exp(-1.0)) < 1e-9,
         "BP " + fmt(bp.brevity_penalty, 17) + " != exp(-1) +- 1e-9");
  return "bleu(x,x)=100 exact, clipped 2/7 exact, BP=exp(-1) to 1e-9";
}

// ---------------------------------------------------------------------------
// 8. BPE oracles: pinned merge order and 1000 round trips.

std::string criterion8() {
  const std::vector<std::vector<std::string>> words = {
      {"low"}, {"lower"}, {"newest"}, {"widest"}};
  const BpeModel pinned = learn_bpe(count_words(words), 3);
  const std::vector<std::pair<std::string, std::string>> want = {
      {"e", "s"}, {"es", "t"}, {"l", "o"}};
  expect(pinned.merges == want, "merge sequence mismatch on the "
                                "{low, lower, newest, widest} corpus");

  Rng rng(2024);
  std::vector<std::vector<std::string>> corpus;
  for (int s = 0; s < 200; ++s) {
    std::vector<std::string> sent;
    const int len = 1 + static_cast<int>(rng.next_below(10));
    for (int i = 0; i < len; ++i) {
      std::string tok;
      const int tlen = 1 + static_cast<int>(rng.next_below(8));
      for (int k = 0; k < tlen; ++k)
        tok += static_cast<char>('a' + rng.next_below(26));
      sent.push_back(tok);
    }
    corpus.push_back(sent);
  }
  const BpeModel model = learn_bpe(count_words(corpus), 60);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::string> tokens;
    const int len = 1 + static_cast<int>(rng.next_below(12));
    for (int i = 0; i < len; ++i) {
      std::string tok;
      const int tlen = 1 + static_cast<int>(rng.next_below(8));
      for (int k = 0; k < tlen; ++k)
        tok += static_cast<char>('a' + rng.next_below(26));
      tokens.push_back(tok);
    }
    const SegmentedSentence seg = apply_bpe(tokens, model);
    expect(merge_subwords(seg.units) == tokens,
           "round trip " + std::to_string(t) + " failed");
    ++checked;
  }
  return "pinned merges [(e,s),(es,t),(l,o)] and " + std::to_string(checked) +
         "/1000 round trips exact";
}

// ---------------------------------------------------------------------------
// 9. Tag propagation invariants on 1000 random tagged sentences.

std::string criterion9() {
  Rng rng(31);
  const char* tags[] = {"NN", "VB", "DT", "JJ", "RB"};

  // Learn a segmenter that actually splits: small merge budget.
  std::vector<std::vector<std::string>> seed_corpus;
  for (int s = 0; s < 100; ++s) {
    std::vector<std::string> sent;
    const int len = 1 + static_cast<int>(rng.next_below(8));
    for (int i = 0; i < len; ++i) {
      std::string tok;
      const int tlen = 1 + static_cast<int>(rng.next_below(7));
      for (int k = 0; k < tlen; ++k)
        tok += static_cast<char>('a' + rng.next_below(6));  // few letters => splits
      sent.push_back(tok);
    }
    seed_corpus.push_back(sent);
  }
  const BpeModel model = learn_bpe(count_words(seed_corpus), 20);

  std::vector<TaggedSentence> sentences;
  std::vector<std::vector<std::string>> all_units;
  for (int t = 0; t < 1000; ++t) {
    TaggedSentence ts;
    const int len = 1 + static_cast<int>(rng.next_below(8));
    for (int i = 0; i < len; ++i) {
      std::string tok;
      const int tlen = 1 + static_cast<int>(rng.next_below(7));
      for (int k = 0; k < tlen; ++k)
        tok += static_cast<char>('a' + rng.next_below(6));
      ts.tokens.push_back(tok);
      ts.tags.push_back(tags[rng.next_below(5)]);
    }
    sentences.push_back(ts);
    all_units.push_back(apply_bpe(ts.tokens, model).units);
  }
  const Vocab vocab = build_vocab(all_units);
  const TagVocabulary tag_vocab = build_tag_vocab(sentences);

  std::int64_t units_seen = 0;
  for (std::size_t t = 0; t < sentences.size(); ++t) {
    const SegmentedSentence seg = apply_bpe(sentences[t].tokens, model);
    const FactoredSequence fs =
        propagate_tags(seg, sentences[t], tag_vocab, vocab);
    expect(fs.unit_ids.size() == fs.tag_ids.size(),
           "sentence " + std::to_string(t) + ": unit/tag count mismatch");
    // Walk subword units; every unit of word w must carry word w's tag.
    std::size_t word = 0;
    for (std::size_t i = 0; i < seg.units.size(); ++i) {
      const int want_tag = tag_vocab.id_of(sentences[t].tags.at(word));
      expect(fs.tag_ids[i] == want_tag,
             "sentence " + std::to_string(t) + " unit " + std::to_string(i) +
                 ": tag " + std::to_string(fs.tag_ids[i]) + " != word tag " +
                 std::to_string(want_tag));
      const auto& u = seg.units[i];
      const bool cont = u.size() > 2 && u.compare(u.size() - 2, 2, "@@") == 0;
      if (!cont) ++word;
      ++units_seen;
    }
    expect(word == sentences[t].tokens.size(),
           "sentence " + std::to_string(t) + ": word walk mismatch");
    expect(fs.unit_ids.back() == Vocab::kEos &&
               fs.tag_ids.back() == TagVocabulary::kEos,
           "sentence " + std::to_string(t) + ": missing EOS pair");
  }
  return "1000 sentences, " + std::to_string(units_seen) +
         " units: |units|==|tags| and within-word constancy, zero violations";
}

// ---------------------------------------------------------------------------
// 10. Beam correctness: beam 1 == greedy; brute-force score parity.

std::string criterion10() {
  for (int s = 1; s <= 20; ++s) {
    testsup::ToySpec spec;
    spec.seed = static_cast<std::uint64_t>(s);
    spec.mode = s % 3 == 0   ? AugMode::baseline
                : s % 3 == 1 ? AugMode::embed_concat
                             : AugMode::pe_concat;
    spec.d_pos = spec.mode == AugMode::baseline ? 0 : 2;
    spec.vocab = 8 + s % 5;
    spec.num_heads = 1 + s % 2;
    auto st = testsup::toy_state<double>(spec);
    Rng rng(static_cast<std::uint64_t>(100 + s));
    for (int q = 0; q < 2; ++q) {
      const FactoredSequence src =
          testsup::toy_source(rng, 3 + (s + q) % 4, spec.vocab, spec.tag_vocab);
      DecodeConfig dc;
      dc.beam_size = 1;
      dc.length_penalty = 0.0;
      const Hypothesis beam = beam_search(st, src, dc);
      const Hypothesis greedy = greedy_decode(st, src, dc.max_target_len);
      expect(beam.tokens == greedy.tokens,
             "model " + std::to_string(s) + " query " + std::to_string(q) +
                 ": beam-1 tokens differ from greedy");
      expect(std::abs(beam.logprob - greedy.logprob) < 1e-12,
             "model " + std::to_string(s) + ": logprob gap " +
                 fmt(std::abs(beam.logprob - greedy.logprob)));
      expect(beam.finished == greedy.finished,
             "model " + std::to_string(s) + ": finished flag differs");
    }
  }

  // Brute force: vocab 6, length cap 5, widths >= vocab*length = 30. Parity
  // is enforced at the minimal width 30 with no length penalty (where the
  // score is the monotone logprob) and at width 6 * 5^4 = 3750, which cannot
  // prune any prefix of the optimum at any penalty. With a length penalty the
  // minimal width can genuinely lose the optimum (a long hypothesis whose
  // prefix ranks below the cutoff mid-search); that gap is reported, not
  // asserted away.
  double worst_gap_penalized_tight = 0.0;
  for (int s : {3, 7, 11}) {
    testsup::ToySpec spec;
    spec.seed = static_cast<std::uint64_t>(s);
    spec.mode = s % 2 ? AugMode::embed_concat : AugMode::pe_concat;
    spec.d_pos = 2;
    spec.vocab = 6;
    spec.tag_vocab = 5;
    auto st = testsup::toy_state<double>(spec);
    Rng rng(static_cast<std::uint64_t>(500 + s));
    const FactoredSequence src =
        testsup::toy_source(rng, 4, spec.vocab, spec.tag_vocab);
    const std::int64_t cap = 5;
    SentenceDecoder<double> dec(st, src);

    for (double alpha : {0.0, 1.2}) {
      double best = -std::numeric_limits<double>::infinity();
      const std::function<void(std::vector<int>&, double)> enumerate =
          [&](std::vector<int>& prefix, double lp) {
            const std::vector<double> lps = dec.step_logprobs(prefix);
            Hypothesis fin;
            fin.tokens = prefix;
            fin.tokens.push_back(Vocab::kEos);
            fin.logprob = lp + lps[Vocab::kEos];
            best = std::max(best, hypothesis_score(fin, alpha));
            if (static_cast<std::int64_t>(prefix.size()) + 1 < cap) {
              for (int id = 0; id < st.model.target_vocab_size; ++id) {
                if (id == Vocab::kEos) continue;
                prefix.push_back(id);
                enumerate(prefix, lp + lps[static_cast<std::size_t>(id)]);
                prefix.pop_back();
              }
            }
          };
      std::vector<int> prefix;
      enumerate(prefix, 0.0);

      for (int width : {30, 3750}) {
        DecodeConfig dc;
        dc.max_target_len = 5;
        dc.length_penalty = alpha;
        dc.beam_size = width;
        const Hypothesis h = beam_search(st, src, dc);
        expect(h.finished, "model " + std::to_string(s) + " width " +
                               std::to_string(width) +
                               ": no finished hypothesis");
        const double gap = std::abs(hypothesis_score(h, alpha) - best);
        if (alpha > 0.0 && width == 30) {
          worst_gap_penalized_tight = std::max(worst_gap_penalized_tight, gap);
          continue;  // informational: minimal width is not lossless here
        }
        expect(gap < 1e-9, "model " + std::to_string(s) + " alpha " +
                               fmt(alpha, 2) + " width " +
                               std::to_string(width) + ": score gap " +
                               fmt(gap) + " vs brute force (tolerance 1e-9)");
      }
    }
  }
  return "beam-1 == greedy on 20 models; brute-force parity at width 30 "
         "(no penalty) and width 3750 (penalty 1.2); penalized width-30 gap "
         "up to " + fmt(worst_gap_penalized_tight, 4) + " shows minimal-width "
         "pruning, reported unasserted";
}

// ---------------------------------------------------------------------------
// 11. End-to-end determinism through the command-line tool.

struct TempDir {
  fs::path path;
  TempDir() {
    auto tmpl = (fs::temp_directory_path() / "posnmt_acc_XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw Failure("mkdtemp failed");
    path = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  expect(is.good(), "cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string criterion11() {
  TempDir dir;
  {
    std::ofstream src(dir.path / "train.src"), tgt(dir.path / "train.tgt");
    src << "the cat sat\nthe dog ran fast\na cat ran\nthe dog sat\n"
           "a dog sat fast\nthe cat ran\n";
    tgt << "le chat assis\nle chien courut vite\nun chat courut\n"
           "le chien assis\nun chien assis vite\nle chat courut\n";
  }
  const auto train_into = [&](const std::string& out) {
    const std::string cmd =
        std::string(POSNMT_BIN) + " train --desk --train-source " +
        (dir.path / "train.src").string() + " --train-target " +
        (dir.path / "train.tgt").string() +
        " --mode pe_concat --d-pos 4 --seed 5 --batch 2 --merges 10"
        " --max-steps 10 --checkpoint-every 10 --out " +
        (dir.path / out).string() + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    expect(WIFEXITED(raw) && WEXITSTATUS(raw) == 0,
           "train run into " + out + " failed");
  };
  train_into("runA");
  train_into("runB");

  const std::string ma = slurp(dir.path / "runA/metrics.tsv");
  const std::string mb = slurp(dir.path / "runB/metrics.tsv");
  expect(ma == mb, "metrics logs differ between identical runs");
  const std::int64_t lines =
      std::count(ma.begin(), ma.end(), '\n');
  expect(lines == 10, "expected 10 metrics lines, got " + std::to_string(lines));
  const std::string ca = slurp(dir.path / "runA/ckpt_step10.bin");
  const std::string cb = slurp(dir.path / "runB/ckpt_step10.bin");
  expect(ca == cb, "step-10 checkpoints differ between identical runs");
  return "10-step metrics logs and step-10 checkpoints byte-identical (" +
         std::to_string(ca.size()) + "-byte checkpoints)";
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc)
      only = std::atoi(argv[++i]);
    else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* title;
    std::function<std::string()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "non-reproducibility statement", criterion1},
      {2, "gradient fidelity, all parameters, three modes", criterion2},
      {3, "encoder input width invariant", criterion3},
      {4, "d_pos=0 degenerates to baseline bit-exactly", criterion4},
      {5, "copy-task overfit in all three modes", criterion5},
      {6, "POS-signal task separates embed_concat from baseline", criterion6},
      {7, "BLEU oracles", criterion7},
      {8, "BPE merge order and round-trip identity", criterion8},
      {9, "tag propagation invariants", criterion9},
      {10, "beam search: greedy equivalence and brute-force parity", criterion10},
      {11, "end-to-end CLI determinism", criterion11},
  };

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.body();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.title
         << " — " << detail << " [" << fmt(secs, 3) << "s]";
    std::cout << line.str() << std::endl;
    if (!ok) ++failures;
  }
  if (ran == 0) {
    std::cerr << "no such criterion: " << only << '\n';
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
