#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "posnmt/pos_augment.hpp"
#include "posnmt/train.hpp"
#include "posnmt/transformer.hpp"

namespace posnmt {

// Everything a run needs to train further or translate: configuration,
// vocabularies, merge tables, parameters, optimizer moments and the dropout
// stream. This is exactly what a checkpoint persists.
template <typename Scalar>
struct ModelState {
  ModelConfig model;
  PosAugConfig aug;
  TrainConfig train;
  OptimizerConfig optim;
  Vocab source_vocab;
  Vocab target_vocab;
  TagVocabulary tag_vocab;
  std::vector<std::pair<std::string, std::string>> source_merges;
  std::vector<std::pair<std::string, std::string>> target_merges;
  ParamStore<Scalar> params;
  PeTables<Scalar> pe;
  std::int64_t step = 0;
  Rng dropout_rng{0};
};

// Dedicated fork ids off the master seed so parameter init (which forks per
// tensor starting at 0) and the training-time dropout stream never collide.
inline constexpr std::uint64_t kDropoutStream = 1u << 20;

template <typename Scalar>
ModelState<Scalar> make_model_state(
    const ModelConfig& model, const PosAugConfig& aug, const TrainConfig& train,
    const OptimizerConfig& optim, Vocab source_vocab, Vocab target_vocab,
    TagVocabulary tag_vocab,
    std::vector<std::pair<std::string, std::string>> source_merges,
    std::vector<std::pair<std::string, std::string>> target_merges) {
  train.validate();
  optim.validate();
  ModelState<Scalar> st{model,
                        aug,
                        train,
                        optim,
                        std::move(source_vocab),
                        std::move(target_vocab),
                        std::move(tag_vocab),
                        std::move(source_merges),
                        std::move(target_merges),
                        init_parameters<Scalar>(model, aug, train.seed),
                        make_pe_tables<Scalar>(model, aug),
                        0,
                        Rng(train.seed).fork(kDropoutStream)};
  if (st.model.source_vocab_size !=
      static_cast<Index>(st.source_vocab.items().size()))
    throw ConfigError("source_vocab_size disagrees with vocabulary");
  if (st.model.target_vocab_size !=
      static_cast<Index>(st.target_vocab.items().size()))
    throw ConfigError("target_vocab_size disagrees with vocabulary");
  if (st.aug.tag_vocab_size != static_cast<Index>(st.tag_vocab.items().size()))
    throw ConfigError("tag_vocab_size disagrees with tag vocabulary");
  return st;
}

// Full encoder-decoder pass over one padded batch; returns logits (B, Lt, V).
// Pad keys (id 0) are masked in encoder self-attention and cross-attention;
// decoder self-attention is causal plus target padding.
template <typename Scalar>
Var model_forward(Graph<Scalar>& g, Binding<Scalar>& bind,
                  const ModelState<Scalar>& st, const Batch& batch,
                  Rng& drop_rng) {
  const Index lt = batch.dec_input.dim(-1);
  Var enc_in = assemble_encoder_input(g, bind, batch.src_units, batch.src_tags,
                                      st.pe, st.model, st.aug, drop_rng);
  Mask enc_mask =
      key_padding_mask(batch.src_units, batch.src_units.dim(-1));
  Var enc_out = encoder_forward(g, bind, enc_in, &enc_mask, st.model, drop_rng);

  Var dec_in = embed_target(g, bind, batch.dec_input, st.pe.full, st.model,
                            drop_rng);
  Mask self_mask = combine_masks(causal_mask(batch.dec_input.dim(0), lt),
                                 key_padding_mask(batch.dec_input, lt));
  Mask cross_mask = key_padding_mask(batch.src_units, lt);
  return decoder_forward(g, bind, dec_in, enc_out, &self_mask, &cross_mask,
                         st.model, drop_rng);
}

}  // namespace posnmt
