#include "posnmt/run_config.hpp"

#include <fstream>

namespace posnmt {

void apply_json(const Json& j, DataPaths& cfg) {
  require_object_keys(j, "data",
                      {"train_source", "train_target", "valid_source",
                       "valid_target", "test_source", "test_target",
                       "train_tags", "valid_tags", "tag_format"});
  read_key(j, "train_source", cfg.train_source);
  read_key(j, "train_target", cfg.train_target);
  read_key(j, "valid_source", cfg.valid_source);
  read_key(j, "valid_target", cfg.valid_target);
  read_key(j, "test_source", cfg.test_source);
  read_key(j, "test_target", cfg.test_target);
  read_key(j, "train_tags", cfg.train_tags);
  read_key(j, "valid_tags", cfg.valid_tags);
  read_key(j, "tag_format", cfg.tag_format);
  if (cfg.tag_format != "slash" && cfg.tag_format != "tsv")
    throw ConfigError("tag_format must be slash or tsv, got '" +
                      cfg.tag_format + "'");
}

void apply_json(const Json& j, BpeSettings& cfg) {
  require_object_keys(j, "bpe", {"merges", "source_model", "target_model"});
  read_key(j, "merges", cfg.merges);
  read_key(j, "source_model", cfg.source_model);
  read_key(j, "target_model", cfg.target_model);
  if (cfg.merges < 0) throw ConfigError("bpe merges must be >= 0");
}

void apply_json(const Json& j, FilterRuleSet& cfg) {
  require_object_keys(j, "filter",
                      {"drop_single_token_number", "drop_single_token_date",
                       "drop_single_token_upper_ref", "test_min_source_tokens"});
  read_key(j, "drop_single_token_number", cfg.drop_single_token_number);
  read_key(j, "drop_single_token_date", cfg.drop_single_token_date);
  read_key(j, "drop_single_token_upper_ref", cfg.drop_single_token_upper_ref);
  read_key(j, "test_min_source_tokens", cfg.test_min_source_tokens);
}

void apply_json(const Json& j, RunConfig& cfg) {
  require_object_keys(j, "run config",
                      {"data", "output_dir", "bpe", "model", "pos", "train",
                       "optimizer", "decode", "filter"});
  if (j.contains("data")) apply_json(j.at("data"), cfg.data);
  read_key(j, "output_dir", cfg.output_dir);
  if (j.contains("bpe")) apply_json(j.at("bpe"), cfg.bpe);
  if (j.contains("model")) apply_json(j.at("model"), cfg.model);
  if (j.contains("pos")) apply_json(j.at("pos"), cfg.pos);
  if (j.contains("train")) apply_json(j.at("train"), cfg.train);
  if (j.contains("optimizer")) apply_json(j.at("optimizer"), cfg.optimizer);
  if (j.contains("decode")) apply_json(j.at("decode"), cfg.decode);
  if (j.contains("filter")) apply_json(j.at("filter"), cfg.filter);
}

void apply_desk_profile(RunConfig& cfg) {
  cfg.model.num_layers = 2;
  cfg.model.num_heads = 2;
  cfg.model.d_model = 16;
  cfg.model.d_ffn = 32;
  cfg.model.dropout_p = 0.1;
  cfg.model.max_positions = 64;
  cfg.bpe.merges = 200;
  cfg.train.warmup_steps = 100;
  cfg.train.max_steps = 500;
  cfg.train.checkpoint_every = 100;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  RunConfig cfg;
  apply_json(j, cfg);
  return cfg;
}

Json to_json(const RunConfig& cfg) {
  return Json{{"data",
               {{"train_source", cfg.data.train_source},
                {"train_target", cfg.data.train_target},
                {"valid_source", cfg.data.valid_source},
                {"valid_target", cfg.data.valid_target},
                {"test_source", cfg.data.test_source},
                {"test_target", cfg.data.test_target},
                {"train_tags", cfg.data.train_tags},
                {"valid_tags", cfg.data.valid_tags},
                {"tag_format", cfg.data.tag_format}}},
              {"output_dir", cfg.output_dir},
              {"bpe",
               {{"merges", cfg.bpe.merges},
                {"source_model", cfg.bpe.source_model},
                {"target_model", cfg.bpe.target_model}}},
              {"model", to_json(cfg.model)},
              {"pos", to_json(cfg.pos)},
              {"train", to_json(cfg.train)},
              {"optimizer", to_json(cfg.optimizer)},
              {"decode", to_json(cfg.decode)},
              {"filter",
               {{"drop_single_token_number", cfg.filter.drop_single_token_number},
                {"drop_single_token_date", cfg.filter.drop_single_token_date},
                {"drop_single_token_upper_ref",
                 cfg.filter.drop_single_token_upper_ref},
                {"test_min_source_tokens", cfg.filter.test_min_source_tokens}}}};
}

}  // namespace posnmt
