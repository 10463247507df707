#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "posnmt/model_state.hpp"

namespace posnmt {

struct DecodeConfig {
  int beam_size = 5;
  double length_penalty = 1.2;   // alpha
  std::int64_t max_target_len = 0;  // 0 -> 2 * source_len + 10

  void validate() const {
    if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
    if (length_penalty < 0.0) throw ConfigError("length_penalty must be >= 0");
    if (max_target_len < 0) throw ConfigError("max_target_len must be >= 0");
  }
};

struct Hypothesis {
  std::vector<int> tokens;  // emitted ids, BOS excluded, EOS included if finished
  double logprob = 0.0;
  bool finished = false;
};

// score = logprob / len^alpha over emitted tokens (EOS counts, BOS does not).
inline double hypothesis_score(const Hypothesis& h, double alpha) {
  const double n =
      static_cast<double>(std::max<std::size_t>(std::size_t{1}, h.tokens.size()));
  return h.logprob / std::pow(n, alpha);
}

// Per-sentence decoding context: encodes the source once, then serves
// next-token log-probability queries for arbitrary target prefixes.
template <typename Scalar>
class SentenceDecoder {
 public:
  SentenceDecoder(ModelState<Scalar>& st, const FactoredSequence& src)
      : st_(st), src_len_(static_cast<Index>(src.unit_ids.size())) {
    if (src.unit_ids.empty()) throw DataError("decode: empty source");
    std::vector<std::int32_t> units(src.unit_ids.begin(), src.unit_ids.end());
    std::vector<std::int32_t> tags(src.tag_ids.begin(), src.tag_ids.end());
    IdTensor unit_ids(Shape{1, src_len_}, std::move(units));
    IdTensor tag_ids(Shape{1, src_len_}, std::move(tags));
    Graph<Scalar> g(Mode::eval);
    Binding<Scalar> bind(g, st_.params);
    Rng rng(0);  // eval mode: dropout is identity, no draws
    Var enc_in = assemble_encoder_input(g, bind, unit_ids, tag_ids, st_.pe,
                                        st_.model, st_.aug, rng);
    Var enc_out = encoder_forward(g, bind, enc_in, nullptr, st_.model, rng);
    enc_states_ = g.value(enc_out);
  }

  Index source_len() const { return src_len_; }

  // log P(next token | BOS + prefix) for every target vocabulary id.
  std::vector<double> step_logprobs(const std::vector<int>& prefix) {
    const Index lt = static_cast<Index>(prefix.size()) + 1;
    std::vector<std::int32_t> ids(static_cast<std::size_t>(lt));
    ids[0] = Vocab::kBos;
    for (std::size_t i = 0; i < prefix.size(); ++i)
      ids[i + 1] = static_cast<std::int32_t>(prefix[i]);
    IdTensor dec_ids(Shape{1, lt}, std::move(ids));

    Graph<Scalar> g(Mode::eval);
    Binding<Scalar> bind(g, st_.params);
    Rng rng(0);
    Var y = embed_target(g, bind, dec_ids, st_.pe.full, st_.model, rng);
    Var enc = g.constant(enc_states_);
    Mask self = causal_mask(1, lt);
    Var logits =
        decoder_forward(g, bind, y, enc, &self, nullptr, st_.model, rng);

    const auto& Z = g.value(logits);
    const Index V = Z.last_dim();
    auto row = Z.flat().segment((lt - 1) * V, V);
    const double mx = static_cast<double>(row.maxCoeff());
    double z = 0.0;
    for (Index v = 0; v < V; ++v)
      z += std::exp(static_cast<double>(row[v]) - mx);
    const double log_z = std::log(z);
    std::vector<double> out(static_cast<std::size_t>(V));
    for (Index v = 0; v < V; ++v)
      out[static_cast<std::size_t>(v)] =
          static_cast<double>(row[v]) - mx - log_z;
    return out;
  }

 private:
  ModelState<Scalar>& st_;
  Index src_len_ = 0;
  Tensor<Scalar> enc_states_;
};

// Length budget for one source sentence: the configured cap, or
// 2 * source_len + 10, further bounded so BOS + tokens fits max_positions.
template <typename Scalar>
std::int64_t target_length_cap(const ModelState<Scalar>& st, Index source_len,
                               const DecodeConfig& dc) {
  std::int64_t cap =
      dc.max_target_len > 0 ? dc.max_target_len : 2 * source_len + 10;
  cap = std::min<std::int64_t>(cap, st.model.max_positions - 1);
  if (cap < 1) throw ConfigError("decode: target length cap < 1");
  return cap;
}

// Breadth-limited best-first search. Per step, every extension of every
// active hypothesis is ranked by log-probability (all share one length, so
// this order equals the score order); EOS extensions ranked within the top
// beam_size are finalized, and the beam_size best non-EOS extensions survive.
// Stops once beam_size hypotheses are finished and no survivor's upper bound
// (logprob / cap^alpha) can beat the best finished score, or at the cap.
// Returns the best-scoring finished hypothesis, or the best survivor if
// nothing finished within the cap. Ties break toward the lexicographically
// smaller token sequence.
template <typename Scalar>
Hypothesis beam_search(ModelState<Scalar>& st, const FactoredSequence& src,
                       const DecodeConfig& dc,
                       std::vector<Hypothesis>* all_finished = nullptr) {
  dc.validate();
  SentenceDecoder<Scalar> dec(st, src);
  const double alpha = dc.length_penalty;
  const std::int64_t cap = target_length_cap(st, dec.source_len(), dc);
  const double cap_pow = std::pow(static_cast<double>(cap), alpha);
  const std::size_t beam = static_cast<std::size_t>(dc.beam_size);

  const auto better = [](const Hypothesis& a, const Hypothesis& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.tokens < b.tokens;
  };

  std::vector<Hypothesis> active{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (std::int64_t t = 1; t <= cap && !active.empty(); ++t) {
    std::vector<Hypothesis> cands;
    cands.reserve(active.size() *
                  static_cast<std::size_t>(st.model.target_vocab_size));
    for (const auto& h : active) {
      const std::vector<double> lp = dec.step_logprobs(h.tokens);
      for (std::size_t v = 0; v < lp.size(); ++v) {
        Hypothesis nh;
        nh.tokens = h.tokens;
        nh.tokens.push_back(static_cast<int>(v));
        nh.logprob = h.logprob + lp[v];
        nh.finished = (static_cast<int>(v) == Vocab::kEos);
        cands.push_back(std::move(nh));
      }
    }
    std::sort(cands.begin(), cands.end(), better);
    active.clear();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].finished) {
        if (i < beam) finished.push_back(std::move(cands[i]));
      } else if (active.size() < beam) {
        active.push_back(std::move(cands[i]));
      }
    }

    if (finished.size() >= beam && !active.empty()) {
      double best_fin = hypothesis_score(finished[0], alpha);
      for (const auto& f : finished)
        best_fin = std::max(best_fin, hypothesis_score(f, alpha));
      // Survivors only lose log-probability and can only grow toward cap.
      const double best_bound = active.front().logprob / cap_pow;
      if (best_bound <= best_fin) break;
    }
  }

  if (all_finished) *all_finished = finished;
  const auto pick = [alpha](const std::vector<Hypothesis>& pool) {
    const Hypothesis* best = &pool.front();
    for (const auto& h : pool) {
      const double s = hypothesis_score(h, alpha);
      const double bs = hypothesis_score(*best, alpha);
      if (s > bs || (s == bs && h.tokens < best->tokens)) best = &h;
    }
    return *best;
  };
  if (!finished.empty()) return pick(finished);
  if (!active.empty()) return pick(active);
  throw DataError("decode: search produced no hypotheses");
}

// Argmax decoding: extend with the single most probable token (smallest id on
// ties) until EOS or the length cap.
template <typename Scalar>
Hypothesis greedy_decode(ModelState<Scalar>& st, const FactoredSequence& src,
                         std::int64_t max_target_len = 0) {
  DecodeConfig dc;
  dc.beam_size = 1;
  dc.max_target_len = max_target_len;
  SentenceDecoder<Scalar> dec(st, src);
  const std::int64_t cap = target_length_cap(st, dec.source_len(), dc);

  Hypothesis h;
  for (std::int64_t t = 1; t <= cap; ++t) {
    const std::vector<double> lp = dec.step_logprobs(h.tokens);
    std::size_t arg = 0;
    for (std::size_t v = 1; v < lp.size(); ++v)
      if (lp[v] > lp[arg]) arg = v;
    h.tokens.push_back(static_cast<int>(arg));
    h.logprob += lp[arg];
    if (static_cast<int>(arg) == Vocab::kEos) {
      h.finished = true;
      break;
    }
  }
  return h;
}

// Decode one factored source into target units (EOS stripped); feed the
// result to merge_subwords for word-level text.
template <typename Scalar>
std::vector<std::string> translate_units(ModelState<Scalar>& st,
                                         const FactoredSequence& src,
                                         const DecodeConfig& dc) {
  Hypothesis h = beam_search(st, src, dc);
  std::vector<std::string> units;
  for (int id : h.tokens)
    if (id != Vocab::kEos) units.push_back(st.target_vocab.item(id));
  return units;
}

}  // namespace posnmt
