#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "posnmt/bpe.hpp"
#include "posnmt/graph.hpp"
#include "posnmt/vocab.hpp"

namespace posnmt {

struct TrainConfig {
  int batch_sentences = 32;
  double label_smoothing = 0.2;
  int warmup_steps = 4000;
  int max_steps = 10000;
  std::uint64_t seed = 1;
  int checkpoint_every = 1000;
  std::string precision = "f32";

  void validate() const {
    if (batch_sentences < 1) throw ConfigError("batch_sentences must be >= 1");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
      throw ConfigError("label_smoothing must be in [0, 1)");
    if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
    if (precision != "f32" && precision != "f64")
      throw ConfigError("precision must be f32 or f64");
  }
};

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;

  void validate() const {
    if (!(0.0 < beta1 && beta1 < beta2 && beta2 < 1.0))
      throw ConfigError("adam betas must satisfy 0 < beta1 < beta2 < 1");
    if (eps <= 0.0) throw ConfigError("adam eps must be > 0");
  }
};

// d^{-1/2} * min(step^{-1/2}, step * warmup^{-3/2}); both branches meet at
// step = warmup.
inline double lr_at(std::int64_t step, int d_model, int warmup_steps) {
  if (step < 1) throw ConfigError("lr_at: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return (1.0 / std::sqrt(static_cast<double>(d_model))) *
         std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

// Analytic lower bound of the smoothed loss on a memorized corpus:
// -(1-eps)·log(1-eps+eps/V) - (V-1)·(eps/V)·log(eps/V).
inline double label_smoothing_floor(double eps_ls, std::int64_t vocab) {
  const double v = static_cast<double>(vocab);
  const double off = eps_ls / v;
  double h = -(1.0 - eps_ls) * std::log(1.0 - eps_ls + off);
  if (off > 0.0) h -= (v - 1.0) * off * std::log(off);
  return h;
}

template <typename Scalar>
struct LossResult {
  Var loss;                      // scalar: mean over non-pad target tokens
  std::int64_t token_count = 0;  // non-pad targets
};

// Cross-entropy against q = (1-eps)*onehot + eps/V over all V classes.
// Padding targets (pad_id) contribute nothing to value or gradient.
template <typename Scalar>
LossResult<Scalar> label_smoothed_loss(Graph<Scalar>& g, Var logits,
                                       const IdTensor& targets, double eps_ls,
                                       int pad_id) {
  const auto& Z = g.value(logits);
  const Index V = Z.last_dim(), rows = Z.row_count();
  if (targets.size() != rows)
    throw ShapeError("loss: " + std::to_string(rows) + " logit rows vs " +
                     std::to_string(targets.size()) + " targets");
  for (Index i = 0; i < targets.size(); ++i)
    if (targets[i] < 0 || targets[i] >= V)
      throw DataError("loss: target id " + std::to_string(targets[i]) +
                      " outside vocabulary of " + std::to_string(V));

  Tensor<Scalar> probs(Z.shape());
  std::int64_t count = 0;
  double total = 0.0;
  const double uniform_q = eps_ls / static_cast<double>(V);
  const double true_q = 1.0 - eps_ls;
  for (Index r = 0; r < rows; ++r) {
    auto row = Z.flat().segment(r * V, V);
    auto prow = probs.flat().segment(r * V, V);
    const Scalar mx = row.maxCoeff();
    prow = (row - mx).exp();
    const Scalar z = prow.sum();
    prow /= z;
    if (targets[r] == pad_id) continue;
    ++count;
    const double log_z = std::log(static_cast<double>(z));
    double sum_logp = 0.0;
    for (Index v = 0; v < V; ++v)
      sum_logp += static_cast<double>(row[v] - mx) - log_z;
    const double logp_true =
        static_cast<double>(row[targets[r]] - mx) - log_z;
    total -= true_q * logp_true + uniform_q * sum_logp;
  }
  if (count == 0) throw DataError("loss: batch has no non-pad targets");
  const double mean = total / static_cast<double>(count);

  const int logits_id = logits.id, out_id = g.next_id();
  auto tgt = targets.ids;
  Var out = g.op(
      Tensor<Scalar>::scalar(static_cast<Scalar>(mean)), {logits},
      [=, p = std::move(probs)](Graph<Scalar>& gr) {
        const Scalar upstream = gr.grad(Var{out_id})[0];
        const Scalar inv = upstream / static_cast<Scalar>(count);
        Tensor<Scalar> d(p.shape());
        for (Index r = 0; r < rows; ++r) {
          if (tgt[static_cast<std::size_t>(r)] == pad_id) continue;
          auto drow = d.flat().segment(r * V, V);
          drow = p.flat().segment(r * V, V) * inv;
          drow -= static_cast<Scalar>(uniform_q) * inv;
          d[r * V + tgt[static_cast<std::size_t>(r)]] -=
              static_cast<Scalar>(true_q) * inv;
        }
        gr.accumulate(Var{logits_id}, d);
      });
  return {out, count};
}

// Bias-corrected Adam over every parameter in the store, in place. All
// gradients are validated before anything updates, so a rejected step leaves
// every parameter and moment untouched.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, std::int64_t step, double lr,
               const OptimizerConfig& opt) {
  if (step < 1) throw ConfigError("adam_step: step must be >= 1");
  for (const auto& p : params)
    if (!p.grad.all_finite())
      throw NumericError("non-finite gradient in " + p.name);
  const Scalar b1 = static_cast<Scalar>(opt.beta1);
  const Scalar b2 = static_cast<Scalar>(opt.beta2);
  const Scalar bc1 = static_cast<Scalar>(
      1.0 - std::pow(opt.beta1, static_cast<double>(step)));
  const Scalar bc2 = static_cast<Scalar>(
      1.0 - std::pow(opt.beta2, static_cast<double>(step)));
  for (auto& p : params) {
    if (p.grad.size() == 0) continue;
    p.adam_m.flat() = b1 * p.adam_m.flat() + (Scalar(1) - b1) * p.grad.flat();
    p.adam_v.flat() =
        b2 * p.adam_v.flat() + (Scalar(1) - b2) * p.grad.flat().square();
    p.value.flat() -= static_cast<Scalar>(lr) *
                      (p.adam_m.flat() / bc1) /
                      ((p.adam_v.flat() / bc2).sqrt() + static_cast<Scalar>(opt.eps));
  }
}

// One source/target training pair after segmentation: the factored source
// (units + tags + EOS) and the raw target unit ids (no BOS/EOS yet).
struct TrainExample {
  FactoredSequence source;
  std::vector<int> target_ids;
};

struct Batch {
  IdTensor src_units;   // (B, Ls), padded with id 0
  IdTensor src_tags;    // (B, Ls), padded with tag id 0
  IdTensor dec_input;   // (B, Lt): BOS + target
  IdTensor dec_target;  // (B, Lt): target + EOS
};

// Deterministic (seed, epoch) shuffle, then fixed-size sentence batches with
// within-batch padding. Pad positions are exactly the id-0 positions.
inline std::vector<Batch> make_batches(const std::vector<TrainExample>& corpus,
                                       int batch_sentences, std::uint64_t seed,
                                       std::int64_t epoch) {
  if (corpus.empty()) throw DataError("make_batches: empty corpus");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(epoch));
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.next_below(i + 1)]);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_sentences)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(batch_sentences));
    const Index B = static_cast<Index>(end - start);
    Index ls = 0, lt = 0;
    for (std::size_t k = start; k < end; ++k) {
      const auto& ex = corpus[order[k]];
      ls = std::max(ls, static_cast<Index>(ex.source.unit_ids.size()));
      lt = std::max(lt, static_cast<Index>(ex.target_ids.size()) + 1);
    }
    Batch b{IdTensor(Shape{B, ls}, std::vector<std::int32_t>(
                                       static_cast<std::size_t>(B * ls), 0)),
            IdTensor(Shape{B, ls}, std::vector<std::int32_t>(
                                       static_cast<std::size_t>(B * ls), 0)),
            IdTensor(Shape{B, lt}, std::vector<std::int32_t>(
                                       static_cast<std::size_t>(B * lt), 0)),
            IdTensor(Shape{B, lt}, std::vector<std::int32_t>(
                                       static_cast<std::size_t>(B * lt), 0))};
    for (std::size_t k = start; k < end; ++k) {
      const auto& ex = corpus[order[k]];
      const Index r = static_cast<Index>(k - start);
      for (std::size_t j = 0; j < ex.source.unit_ids.size(); ++j) {
        b.src_units.ids[static_cast<std::size_t>(r * ls) + j] =
            static_cast<std::int32_t>(ex.source.unit_ids[j]);
        b.src_tags.ids[static_cast<std::size_t>(r * ls) + j] =
            static_cast<std::int32_t>(ex.source.tag_ids[j]);
      }
      b.dec_input.ids[static_cast<std::size_t>(r * lt)] = Vocab::kBos;
      for (std::size_t j = 0; j < ex.target_ids.size(); ++j) {
        b.dec_input.ids[static_cast<std::size_t>(r * lt) + j + 1] =
            static_cast<std::int32_t>(ex.target_ids[j]);
        b.dec_target.ids[static_cast<std::size_t>(r * lt) + j] =
            static_cast<std::int32_t>(ex.target_ids[j]);
      }
      b.dec_target.ids[static_cast<std::size_t>(r * lt) +
                       ex.target_ids.size()] = Vocab::kEos;
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace posnmt
