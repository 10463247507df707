#pragma once

#include <string>

#include "posnmt/corpus.hpp"
#include "posnmt/json_config.hpp"

namespace posnmt {

struct DataPaths {
  std::string train_source;
  std::string train_target;
  std::string valid_source;
  std::string valid_target;
  std::string test_source;
  std::string test_target;
  std::string train_tags;  // tagged source files; empty -> rule tagger
  std::string valid_tags;
  std::string tag_format = "slash";  // slash | tsv
};

struct BpeSettings {
  int merges = 8000;          // full-scale default; desk profile uses 200
  std::string source_model;   // pre-learned model paths; empty -> learn
  std::string target_model;
};

// One JSON file drives every subcommand. Field precedence: built-in defaults,
// then the file, then --desk, then explicit command-line flags.
struct RunConfig {
  DataPaths data;
  std::string output_dir = ".";
  BpeSettings bpe;
  ModelConfig model;
  PosAugConfig pos;
  TrainConfig train;
  OptimizerConfig optimizer;
  DecodeConfig decode;
  FilterRuleSet filter;
};

void apply_json(const Json& j, DataPaths& cfg);
void apply_json(const Json& j, BpeSettings& cfg);
void apply_json(const Json& j, FilterRuleSet& cfg);
void apply_json(const Json& j, RunConfig& cfg);

// Tiny sizes for CPU-scale runs: layers 2, heads 2, d_model 16, ffn 32,
// dropout 0.1, merges 200, plus short schedule and position budget.
void apply_desk_profile(RunConfig& cfg);

RunConfig load_run_config(const std::string& path);

Json to_json(const RunConfig& cfg);

}  // namespace posnmt
