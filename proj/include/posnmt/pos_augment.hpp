#pragma once

#include <cmath>
#include <cstdint>

#include "posnmt/transformer.hpp"

namespace posnmt {

// Standalone POS embedding table (rows = full tag vocabulary including the
// reserved tags), uniform within ±d_p^{-1/2}.
template <typename Scalar>
Tensor<Scalar> build_pos_embedding_table(int tag_vocab_size, int d_p,
                                         std::uint64_t seed) {
  if (d_p < 1) throw ConfigError("POS embedding dim must be >= 1");
  Rng rng(seed);
  return uniform_init<Scalar>({tag_vocab_size, d_p},
                              1.0 / std::sqrt(static_cast<double>(d_p)), rng);
}

// Positional-encoding tables an encoder input assembler needs: one at
// d_model, and for pe_concat one at the subword width.
template <typename Scalar>
struct PeTables {
  Tensor<Scalar> full;
  Tensor<Scalar> sub;
};

template <typename Scalar>
PeTables<Scalar> make_pe_tables(const ModelConfig& cfg, const PosAugConfig& aug) {
  PeTables<Scalar> pe;
  pe.full = sinusoidal_pe<Scalar>(cfg.max_positions, cfg.d_model);
  if (aug.mode == AugMode::pe_concat)
    pe.sub = sinusoidal_pe<Scalar>(cfg.max_positions, aug.subword_dim(cfg));
  return pe;
}

// Builds the (B, L, d_model) encoder input for one batch of source unit ids
// and their POS tag ids.
//   baseline:     sqrt(d_model)*E_w[u] + PE_{d_model}
//   embed_concat: concat(sqrt(d_w)*E_w[u], sqrt(d_p)*E_p[t]) + PE_{d_model}
//                 (concatenate first, then positional encoding over the full
//                 width)
//   pe_concat:    concat(sqrt(d_w)*E_w[u] + PE_{d_w}, sqrt(d_p)*E_p[t])
//                 (positional encoding only on the subword block, POS block
//                 appended after)
// Dropout runs after assembly in train mode.
template <typename Scalar>
Var assemble_encoder_input(Graph<Scalar>& g, Binding<Scalar>& p,
                           const IdTensor& unit_ids, const IdTensor& tag_ids,
                           const PeTables<Scalar>& pe, const ModelConfig& cfg,
                           const PosAugConfig& aug, Rng& drop_rng) {
  if (unit_ids.shape != tag_ids.shape)
    throw ShapeError("unit ids " + shape_str(unit_ids.shape) +
                     " and tag ids " + shape_str(tag_ids.shape) + " differ");
  const Index L = unit_ids.dim(-1);
  if (L > cfg.max_positions)
    throw DataError("sequence length " + std::to_string(L) +
                    " exceeds max_positions " + std::to_string(cfg.max_positions));

  const int d_w = aug.mode == AugMode::baseline ? cfg.d_model : aug.subword_dim(cfg);
  const Scalar w_scale = static_cast<Scalar>(std::sqrt(static_cast<double>(d_w)));
  const Scalar p_scale =
      static_cast<Scalar>(aug.d_pos > 0 ? std::sqrt(static_cast<double>(aug.d_pos))
                                        : 0.0);

  Var words = scale(g, embedding_lookup(g, p("enc.embed.word"), unit_ids), w_scale);
  Var x;
  switch (aug.mode) {
    case AugMode::baseline: {
      x = add(g, words, g.constant(first_rows(pe.full, L)));
      break;
    }
    case AugMode::embed_concat: {
      Var tags =
          scale(g, embedding_lookup(g, p("enc.embed.pos_tag"), tag_ids), p_scale);
      Var cat = concat_last(g, {words, tags});
      x = add(g, cat, g.constant(first_rows(pe.full, L)));
      break;
    }
    case AugMode::pe_concat: {
      const Tensor<Scalar>& sub_pe = aug.d_pos > 0 ? pe.sub : pe.full;
      Var positioned = add(g, words, g.constant(first_rows(sub_pe, L)));
      Var tags =
          scale(g, embedding_lookup(g, p("enc.embed.pos_tag"), tag_ids), p_scale);
      x = concat_last(g, {positioned, tags});
      break;
    }
  }
  if (g.value(x).last_dim() != cfg.d_model)
    throw ShapeError("assembled encoder input dim " +
                     std::to_string(g.value(x).last_dim()) + " != d_model " +
                     std::to_string(cfg.d_model));
  return dropout(g, x, cfg.dropout_p, drop_rng);
}

}  // namespace posnmt
