#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "posnmt/decode.hpp"
#include "posnmt/train.hpp"
#include "posnmt/transformer.hpp"

namespace posnmt {

using Json = nlohmann::json;

inline void require_object_keys(const Json& j, const std::string& what,
                                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown key '" + item.key() + "' in " + what);
  }
}

template <typename T>
void read_key(const Json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      j.at(key).get_to(out);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

// Each apply_json overwrites only the keys present, so callers can layer
// defaults -> config file -> profile -> command-line flags.

inline void apply_json(const Json& j, ModelConfig& cfg) {
  require_object_keys(j, "model",
                      {"num_layers", "num_heads", "d_model", "d_ffn",
                       "dropout_p", "source_vocab_size", "target_vocab_size",
                       "max_positions"});
  read_key(j, "num_layers", cfg.num_layers);
  read_key(j, "num_heads", cfg.num_heads);
  read_key(j, "d_model", cfg.d_model);
  read_key(j, "d_ffn", cfg.d_ffn);
  read_key(j, "dropout_p", cfg.dropout_p);
  read_key(j, "source_vocab_size", cfg.source_vocab_size);
  read_key(j, "target_vocab_size", cfg.target_vocab_size);
  read_key(j, "max_positions", cfg.max_positions);
}

inline Json to_json(const ModelConfig& cfg) {
  return Json{{"num_layers", cfg.num_layers},
              {"num_heads", cfg.num_heads},
              {"d_model", cfg.d_model},
              {"d_ffn", cfg.d_ffn},
              {"dropout_p", cfg.dropout_p},
              {"source_vocab_size", cfg.source_vocab_size},
              {"target_vocab_size", cfg.target_vocab_size},
              {"max_positions", cfg.max_positions}};
}

inline void apply_json(const Json& j, PosAugConfig& cfg) {
  require_object_keys(j, "pos", {"mode", "d_pos", "tag_vocab_size"});
  if (j.contains("mode")) {
    std::string mode;
    read_key(j, "mode", mode);
    cfg.mode = parse_aug_mode(mode);
  }
  read_key(j, "d_pos", cfg.d_pos);
  read_key(j, "tag_vocab_size", cfg.tag_vocab_size);
}

inline Json to_json(const PosAugConfig& cfg) {
  return Json{{"mode", aug_mode_name(cfg.mode)},
              {"d_pos", cfg.d_pos},
              {"tag_vocab_size", cfg.tag_vocab_size}};
}

inline void apply_json(const Json& j, TrainConfig& cfg) {
  require_object_keys(j, "train",
                      {"batch_sentences", "label_smoothing", "warmup_steps",
                       "max_steps", "seed", "checkpoint_every", "precision"});
  read_key(j, "batch_sentences", cfg.batch_sentences);
  read_key(j, "label_smoothing", cfg.label_smoothing);
  read_key(j, "warmup_steps", cfg.warmup_steps);
  read_key(j, "max_steps", cfg.max_steps);
  read_key(j, "seed", cfg.seed);
  read_key(j, "checkpoint_every", cfg.checkpoint_every);
  read_key(j, "precision", cfg.precision);
}

inline Json to_json(const TrainConfig& cfg) {
  return Json{{"batch_sentences", cfg.batch_sentences},
              {"label_smoothing", cfg.label_smoothing},
              {"warmup_steps", cfg.warmup_steps},
              {"max_steps", cfg.max_steps},
              {"seed", cfg.seed},
              {"checkpoint_every", cfg.checkpoint_every},
              {"precision", cfg.precision}};
}

inline void apply_json(const Json& j, OptimizerConfig& cfg) {
  require_object_keys(j, "optimizer", {"beta1", "beta2", "eps"});
  read_key(j, "beta1", cfg.beta1);
  read_key(j, "beta2", cfg.beta2);
  read_key(j, "eps", cfg.eps);
}

inline Json to_json(const OptimizerConfig& cfg) {
  return Json{{"beta1", cfg.beta1}, {"beta2", cfg.beta2}, {"eps", cfg.eps}};
}

inline void apply_json(const Json& j, DecodeConfig& cfg) {
  require_object_keys(j, "decode",
                      {"beam_size", "length_penalty", "max_target_len"});
  read_key(j, "beam_size", cfg.beam_size);
  read_key(j, "length_penalty", cfg.length_penalty);
  read_key(j, "max_target_len", cfg.max_target_len);
}

inline Json to_json(const DecodeConfig& cfg) {
  return Json{{"beam_size", cfg.beam_size},
              {"length_penalty", cfg.length_penalty},
              {"max_target_len", cfg.max_target_len}};
}

}  // namespace posnmt
