#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "posnmt/checkpoint.hpp"
#include "posnmt/model_state.hpp"

namespace posnmt {

// Raw token lists to TrainExamples: segment both sides, propagate source
// tags, map target units to ids (EOS/BOS are added at batch time).
inline std::vector<TrainExample> make_examples(
    const std::vector<TaggedSentence>& sources,
    const std::vector<std::vector<std::string>>& targets,
    const BpeModel& source_bpe, const BpeModel& target_bpe,
    const Vocab& source_vocab, const Vocab& target_vocab,
    const TagVocabulary& tag_vocab) {
  if (sources.size() != targets.size())
    throw DataError("examples: " + std::to_string(sources.size()) +
                    " sources vs " + std::to_string(targets.size()) +
                    " targets");
  std::vector<TrainExample> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    TrainExample ex;
    ex.source = propagate_tags(apply_bpe(sources[i].tokens, source_bpe),
                               sources[i], tag_vocab, source_vocab);
    for (const auto& unit : apply_bpe(targets[i], target_bpe).units)
      ex.target_ids.push_back(target_vocab.id_or_unk(unit));
    out.push_back(std::move(ex));
  }
  return out;
}

// One optimization step on one batch; advances st.step and the dropout
// stream, returns the mean per-token loss. Throws NumericError (leaving
// parameters untouched) on a non-finite loss or gradient.
template <typename Scalar>
double train_step(ModelState<Scalar>& st, const Batch& batch) {
  Graph<Scalar> g(Mode::train);
  Binding<Scalar> bind(g, st.params);
  Var logits = model_forward(g, bind, st, batch, st.dropout_rng);
  LossResult<Scalar> loss = label_smoothed_loss(
      g, logits, batch.dec_target, st.train.label_smoothing, Vocab::kPad);
  const double loss_value = static_cast<double>(g.value(loss.loss)[0]);
  if (!std::isfinite(loss_value))
    throw NumericError("non-finite training loss at step " +
                       std::to_string(st.step + 1));
  g.backward(loss.loss);
  bind.pull_grads();
  st.step += 1;
  adam_step(st.params, st.step,
            lr_at(st.step, st.model.d_model, st.train.warmup_steps), st.optim);
  return loss_value;
}

// Token-weighted mean loss over a dataset, eval mode (no dropout draws, so
// validation never perturbs the training stream).
template <typename Scalar>
double dataset_loss(ModelState<Scalar>& st,
                    const std::vector<TrainExample>& data) {
  double total = 0.0;
  std::int64_t tokens = 0;
  Rng no_draws(0);
  for (const Batch& batch :
       make_batches(data, st.train.batch_sentences, st.train.seed, 0)) {
    Graph<Scalar> g(Mode::eval);
    Binding<Scalar> bind(g, st.params);
    Var logits = model_forward(g, bind, st, batch, no_draws);
    LossResult<Scalar> loss = label_smoothed_loss(
        g, logits, batch.dec_target, st.train.label_smoothing, Vocab::kPad);
    total += static_cast<double>(g.value(loss.loss)[0]) *
             static_cast<double>(loss.token_count);
    tokens += loss.token_count;
  }
  return total / static_cast<double>(tokens);
}

struct TrainOutcome {
  std::int64_t final_step = 0;
  std::int64_t best_step = 0;  // by validation loss; final step if no valid set
  double best_valid_loss = std::numeric_limits<double>::quiet_NaN();
  std::string best_checkpoint;
};

namespace detail {

inline std::string metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.8e", v);
  return buf;
}

}  // namespace detail

// Runs steps st.step+1 .. max_steps. Per step: one metrics line
// `step<TAB>lr<TAB>train_loss`; every checkpoint_every steps a validation
// loss is appended and a checkpoint written (when checkpoint_dir given).
// Resuming a loaded checkpoint continues the identical loss sequence. A
// non-finite loss or gradient dumps the last completed state to
// ckpt_abort.bin and rethrows.
template <typename Scalar>
TrainOutcome train_loop(ModelState<Scalar>& st,
                        const std::vector<TrainExample>& train_data,
                        const std::vector<TrainExample>& valid_data,
                        std::ostream& metrics,
                        const std::string& checkpoint_dir = "") {
  st.train.validate();
  st.optim.validate();
  if (train_data.empty()) throw DataError("train: empty training set");

  // Batch position is a pure function of the completed step count, so a
  // resumed run consumes exactly the batches the uninterrupted run would.
  std::vector<Batch> epoch_batches;
  std::int64_t epoch = 0, consumed_in_epoch = 0;
  {
    const auto first = make_batches(train_data, st.train.batch_sentences,
                                    st.train.seed, 0);
    const auto per_epoch = static_cast<std::int64_t>(first.size());
    epoch = st.step / per_epoch;
    consumed_in_epoch = st.step % per_epoch;
    epoch_batches = epoch == 0
                        ? first
                        : make_batches(train_data, st.train.batch_sentences,
                                       st.train.seed, epoch);
  }

  TrainOutcome out;
  out.final_step = st.step;
  bool have_best = false;
  while (st.step < st.train.max_steps) {
    if (consumed_in_epoch == static_cast<std::int64_t>(epoch_batches.size())) {
      ++epoch;
      consumed_in_epoch = 0;
      epoch_batches = make_batches(train_data, st.train.batch_sentences,
                                   st.train.seed, epoch);
    }
    const Batch& batch =
        epoch_batches[static_cast<std::size_t>(consumed_in_epoch)];
    const std::uint64_t rng_mark = st.dropout_rng.counter();
    double train_loss = 0.0;
    try {
      train_loss = train_step(st, batch);
    } catch (const NumericError&) {
      st.dropout_rng.restore(rng_mark);
      if (!checkpoint_dir.empty())
        save_checkpoint(checkpoint_dir + "/ckpt_abort.bin", st);
      throw;
    }
    ++consumed_in_epoch;

    metrics << st.step << '\t'
            << detail::metric(lr_at(st.step, st.model.d_model,
                                    st.train.warmup_steps))
            << '\t' << detail::metric(train_loss);
    if (st.step % st.train.checkpoint_every == 0) {
      if (!valid_data.empty()) {
        const double valid_loss = dataset_loss(st, valid_data);
        metrics << '\t' << detail::metric(valid_loss);
        if (!have_best || valid_loss < out.best_valid_loss) {
          have_best = true;
          out.best_valid_loss = valid_loss;
          out.best_step = st.step;
        }
      }
      if (!checkpoint_dir.empty()) {
        const std::string path = checkpoint_dir + "/ckpt_step" +
                                 std::to_string(st.step) + ".bin";
        save_checkpoint(path, st);
        if (!valid_data.empty() && out.best_step == st.step)
          out.best_checkpoint = path;
      }
    }
    metrics << '\n';
    metrics.flush();
    out.final_step = st.step;
  }
  if (!have_best) out.best_step = out.final_step;
  return out;
}

}  // namespace posnmt
