#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "posnmt/graph.hpp"

namespace posnmt {

enum class AugMode { baseline, embed_concat, pe_concat };

inline const char* aug_mode_name(AugMode m) {
  switch (m) {
    case AugMode::baseline: return "baseline";
    case AugMode::embed_concat: return "embed_concat";
    case AugMode::pe_concat: return "pe_concat";
  }
  return "?";
}

inline AugMode parse_aug_mode(const std::string& s) {
  if (s == "baseline") return AugMode::baseline;
  if (s == "embed_concat") return AugMode::embed_concat;
  if (s == "pe_concat") return AugMode::pe_concat;
  throw ConfigError("mode must be baseline|embed_concat|pe_concat, got '" + s + "'");
}

struct ModelConfig {
  int num_layers = 5;
  int num_heads = 2;
  int d_model = 512;
  int d_ffn = 2048;
  double dropout_p = 0.4;
  int source_vocab_size = 0;
  int target_vocab_size = 0;
  int max_positions = 512;

  void validate() const {
    if (num_layers < 0) throw ConfigError("num_layers must be >= 0");
    if (num_heads < 1) throw ConfigError("num_heads must be >= 1");
    if (d_model < 1 || d_ffn < 1 || max_positions < 1)
      throw ConfigError("model dims must be >= 1");
    if (d_model % num_heads != 0)
      throw ConfigError("d_model " + std::to_string(d_model) +
                        " not divisible by num_heads " + std::to_string(num_heads));
    if (dropout_p < 0.0 || dropout_p >= 1.0)
      throw ConfigError("dropout_p must be in [0, 1)");
    if (source_vocab_size < 1 || target_vocab_size < 1)
      throw ConfigError("vocabulary sizes must be >= 1");
  }
};

// How POS information enters the encoder input. d_pos = 0 with either concat
// mode degenerates to the baseline computation exactly.
struct PosAugConfig {
  AugMode mode = AugMode::baseline;
  int d_pos = 0;
  int tag_vocab_size = 3;  // PAD_T/UNK_T/EOS_T minimum

  int subword_dim(const ModelConfig& cfg) const { return cfg.d_model - d_pos; }

  void validate(const ModelConfig& cfg) const {
    if (tag_vocab_size < 3) throw ConfigError("tag vocabulary below reserved size");
    if (mode == AugMode::baseline) {
      if (d_pos != 0) throw ConfigError("baseline mode requires d_pos = 0");
      return;
    }
    if (d_pos < 0 || d_pos >= cfg.d_model)
      throw ConfigError("d_pos must lie in [0, d_model), got " +
                        std::to_string(d_pos));
    if (mode == AugMode::pe_concat && subword_dim(cfg) % 2 != 0)
      throw ConfigError("pe_concat needs an even subword dim, got " +
                        std::to_string(subword_dim(cfg)));
  }
};

// PE(pos, 2i) = sin(pos / 10000^(2i/dim)), PE(pos, 2i+1) = cos(same angle).
template <typename Scalar>
Tensor<Scalar> sinusoidal_pe(Index max_len, Index dim) {
  if (dim % 2 != 0)
    throw ConfigError("sinusoidal positional encoding needs an even dim, got " +
                      std::to_string(dim));
  Tensor<Scalar> pe(Shape{max_len, dim});
  for (Index pos = 0; pos < max_len; ++pos)
    for (Index i = 0; i * 2 < dim; ++i) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
      pe.at({pos, 2 * i}) = static_cast<Scalar>(std::sin(angle));
      pe.at({pos, 2 * i + 1}) = static_cast<Scalar>(std::cos(angle));
    }
  return pe;
}

template <typename Scalar>
Tensor<Scalar> first_rows(const Tensor<Scalar>& table, Index n) {
  if (table.ndim() != 2 || n > table.dim(0))
    throw ShapeError("first_rows: need " + std::to_string(n) + " rows from " +
                     shape_str(table.shape()));
  Tensor<Scalar> out(Shape{n, table.dim(1)});
  out.flat() = table.flat().segment(0, n * table.dim(1));
  return out;
}

// ---- masks -----------------------------------------------------------------
// Nonzero mask entries are blocked. Attention masks have the score shape
// (B, Lq, Lk); blocking is keyed on the key-side position, which keeps every
// query's view of real tokens unchanged when pads are appended.

inline Mask key_padding_mask(const IdTensor& key_ids, Index len_q,
                             int pad_id = 0) {
  const Index B = key_ids.dim(0), Lk = key_ids.dim(-1);
  Mask m(Shape{B, len_q, Lk});
  for (Index b = 0; b < B; ++b)
    for (Index j = 0; j < Lk; ++j)
      if (key_ids[b * Lk + j] == pad_id)
        for (Index i = 0; i < len_q; ++i) m.at({b, i, j}) = 1;
  return m;
}

inline Mask causal_mask(Index batch, Index len) {
  Mask m(Shape{batch, len, len});
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < len; ++i)
      for (Index j = i + 1; j < len; ++j) m.at({b, i, j}) = 1;
  return m;
}

inline Mask combine_masks(const Mask& a, const Mask& b) {
  if (a.shape() != b.shape())
    throw ShapeError("combine_masks: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Mask m(a.shape());
  for (Index i = 0; i < m.size(); ++i) m[i] = (a[i] || b[i]) ? 1 : 0;
  return m;
}

// ---- model blocks ----------------------------------------------------------

template <typename Scalar>
Var multi_head_attention(Graph<Scalar>& g, Binding<Scalar>& p,
                         const std::string& prefix, Var q_in, Var k_in, Var v_in,
                         const Mask* mask, int num_heads) {
  const Index d = g.value(q_in).last_dim();
  if (d % num_heads != 0)
    throw ShapeError("attention: feature dim " + std::to_string(d) +
                     " not divisible by " + std::to_string(num_heads) + " heads");
  const Index dk = d / num_heads;
  Var q = matmul(g, q_in, p(prefix + ".wq"));
  Var k = matmul(g, k_in, p(prefix + ".wk"));
  Var v = matmul(g, v_in, p(prefix + ".wv"));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(num_heads));
  for (int h = 0; h < num_heads; ++h) {
    Var qh = slice_last(g, q, h * dk, dk);
    Var kh = slice_last(g, k, h * dk, dk);
    Var vh = slice_last(g, v, h * dk, dk);
    Var scores = scale(g, matmul(g, qh, transpose_last_two(g, kh)),
                       static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dk))));
    if (mask) scores = masked_fill(g, scores, *mask);
    heads.push_back(matmul(g, softmax_last(g, scores), vh));
  }
  return matmul(g, concat_last(g, heads), p(prefix + ".wo"));
}

template <typename Scalar>
Var feed_forward(Graph<Scalar>& g, Binding<Scalar>& p, const std::string& prefix,
                 Var x) {
  Var h = relu(g, add(g, matmul(g, x, p(prefix + ".w1")), p(prefix + ".b1")));
  return add(g, matmul(g, h, p(prefix + ".w2")), p(prefix + ".b2"));
}

// Post-norm residual layout: sublayer -> dropout -> add -> layer_norm.
template <typename Scalar>
Var sublayer(Graph<Scalar>& g, Binding<Scalar>& p, const std::string& norm_prefix,
             Var x, Var sub, double dropout_p, Rng& drop_rng) {
  Var dropped = dropout(g, sub, dropout_p, drop_rng);
  return layer_norm(g, add(g, x, dropped), p(norm_prefix + ".gain"),
                    p(norm_prefix + ".bias"));
}

template <typename Scalar>
Var encoder_forward(Graph<Scalar>& g, Binding<Scalar>& p, Var x,
                    const Mask* pad_mask, const ModelConfig& cfg, Rng& drop_rng) {
  if (g.value(x).last_dim() != cfg.d_model)
    throw ShapeError("encoder input last dim " +
                     std::to_string(g.value(x).last_dim()) + " != d_model " +
                     std::to_string(cfg.d_model));
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string lp = "enc.l" + std::to_string(l);
    Var attn = multi_head_attention(g, p, lp + ".attn", x, x, x, pad_mask,
                                    cfg.num_heads);
    x = sublayer(g, p, lp + ".norm1", x, attn, cfg.dropout_p, drop_rng);
    Var ffn = feed_forward(g, p, lp + ".ffn", x);
    x = sublayer(g, p, lp + ".norm2", x, ffn, cfg.dropout_p, drop_rng);
  }
  return x;
}

template <typename Scalar>
Var decoder_forward(Graph<Scalar>& g, Binding<Scalar>& p, Var y, Var enc_states,
                    const Mask* self_mask, const Mask* cross_mask,
                    const ModelConfig& cfg, Rng& drop_rng) {
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string lp = "dec.l" + std::to_string(l);
    Var self_attn = multi_head_attention(g, p, lp + ".self_attn", y, y, y,
                                         self_mask, cfg.num_heads);
    y = sublayer(g, p, lp + ".norm1", y, self_attn, cfg.dropout_p, drop_rng);
    Var cross = multi_head_attention(g, p, lp + ".cross_attn", y, enc_states,
                                     enc_states, cross_mask, cfg.num_heads);
    y = sublayer(g, p, lp + ".norm2", y, cross, cfg.dropout_p, drop_rng);
    Var ffn = feed_forward(g, p, lp + ".ffn", y);
    y = sublayer(g, p, lp + ".norm3", y, ffn, cfg.dropout_p, drop_rng);
  }
  return add(g, matmul(g, y, p("dec.out_proj.w")), p("dec.out_proj.b"));
}

// Target-side embedding: sqrt(d_model)-scaled lookup + positional encoding,
// then dropout. The decoder input is never POS-augmented.
template <typename Scalar>
Var embed_target(Graph<Scalar>& g, Binding<Scalar>& p, const IdTensor& ids,
                 const Tensor<Scalar>& pe_table, const ModelConfig& cfg,
                 Rng& drop_rng) {
  const Index L = ids.dim(-1);
  Var e = scale(g, embedding_lookup(g, p("dec.embed.word"), ids),
                static_cast<Scalar>(std::sqrt(static_cast<double>(cfg.d_model))));
  Var x = add(g, e, g.constant(first_rows(pe_table, L)));
  return dropout(g, x, cfg.dropout_p, drop_rng);
}

// ---- initialization --------------------------------------------------------

template <typename Scalar>
Tensor<Scalar> uniform_init(Shape shape, double bound, Rng& rng) {
  Tensor<Scalar> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i)
    t[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  return t;
}

inline double glorot_bound(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Creation order is fixed, and every tensor draws from its own forked stream,
// so two configs whose common tensors have equal shapes get bit-identical
// values for those tensors regardless of the rest.
template <typename Scalar>
ParamStore<Scalar> init_parameters(const ModelConfig& cfg, const PosAugConfig& aug,
                                   std::uint64_t seed) {
  cfg.validate();
  aug.validate(cfg);
  ParamStore<Scalar> store;
  Rng master(seed);
  std::uint64_t stream = 0;

  auto embed = [&](const std::string& name, Index rows, Index dim) {
    Rng r = master.fork(stream++);
    const double bound =
        dim > 0 ? 1.0 / std::sqrt(static_cast<double>(dim)) : 0.0;
    store.add(name, uniform_init<Scalar>({rows, dim}, bound, r));
  };
  auto linear = [&](const std::string& name, Index in, Index out) {
    Rng r = master.fork(stream++);
    store.add(name, uniform_init<Scalar>({in, out}, glorot_bound(in, out), r));
  };
  auto vec = [&](const std::string& name, Index dim, Scalar fill) {
    ++stream;  // keep stream numbering aligned even for constant tensors
    store.add(name, Tensor<Scalar>::constant({dim}, fill));
  };
  auto norm = [&](const std::string& prefix) {
    vec(prefix + ".gain", cfg.d_model, Scalar(1));
    vec(prefix + ".bias", cfg.d_model, Scalar(0));
  };
  auto attention = [&](const std::string& prefix) {
    for (const char* w : {".wq", ".wk", ".wv", ".wo"})
      linear(prefix + w, cfg.d_model, cfg.d_model);
  };
  auto ffn = [&](const std::string& prefix) {
    linear(prefix + ".w1", cfg.d_model, cfg.d_ffn);
    vec(prefix + ".b1", cfg.d_ffn, Scalar(0));
    linear(prefix + ".w2", cfg.d_ffn, cfg.d_model);
    vec(prefix + ".b2", cfg.d_model, Scalar(0));
  };

  const int d_w = aug.mode == AugMode::baseline ? cfg.d_model : aug.subword_dim(cfg);
  embed("enc.embed.word", cfg.source_vocab_size, d_w);
  embed("enc.embed.pos_tag", aug.tag_vocab_size, aug.d_pos);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string lp = "enc.l" + std::to_string(l);
    attention(lp + ".attn");
    norm(lp + ".norm1");
    ffn(lp + ".ffn");
    norm(lp + ".norm2");
  }
  embed("dec.embed.word", cfg.target_vocab_size, cfg.d_model);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string lp = "dec.l" + std::to_string(l);
    attention(lp + ".self_attn");
    norm(lp + ".norm1");
    attention(lp + ".cross_attn");
    norm(lp + ".norm2");
    ffn(lp + ".ffn");
    norm(lp + ".norm3");
  }
  linear("dec.out_proj.w", cfg.d_model, cfg.target_vocab_size);
  vec("dec.out_proj.b", cfg.target_vocab_size, Scalar(0));
  return store;
}

}  // namespace posnmt
