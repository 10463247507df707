#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "posnmt/bleu.hpp"
#include "posnmt/checkpoint.hpp"
#include "posnmt/decode.hpp"
#include "posnmt/run_config.hpp"
#include "posnmt/trainer.hpp"

namespace {

using namespace posnmt;

std::vector<std::vector<std::string>> tokenized_lines(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) out.push_back(split_whitespace(line));
  return out;
}

void write_text_lines(const std::string& path,
                      const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path);
  for (const auto& l : lines) os << l << '\n';
  if (!os) throw DataError("failed writing " + path);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

TagFileFormat parse_tag_format(const std::string& s) {
  if (s == "slash") return TagFileFormat::slash;
  if (s == "tsv") return TagFileFormat::tsv;
  throw ConfigError("tag format must be slash or tsv, got '" + s + "'");
}

// Tags from a file when given (validated against the source), otherwise from
// the deterministic rule tagger.
std::vector<TaggedSentence> tags_for(
    const std::vector<std::vector<std::string>>& sources,
    const std::string& tag_path, const std::string& format,
    const std::string& source_name) {
  if (tag_path.empty()) {
    std::vector<TaggedSentence> out;
    out.reserve(sources.size());
    for (const auto& toks : sources) out.push_back(fallback_tag(toks));
    return out;
  }
  auto tagged = parse_tagged_file(tag_path, parse_tag_format(format), &std::cerr);
  if (tagged.size() != sources.size())
    throw DataError(tag_path + ": " + std::to_string(tagged.size()) +
                    " tagged sentences vs " + std::to_string(sources.size()) +
                    " in " + source_name);
  for (std::size_t i = 0; i < tagged.size(); ++i)
    if (tagged[i].tokens.size() != sources[i].size())
      throw DataError(tag_path + ": sentence " + std::to_string(i + 1) +
                      " has " + std::to_string(tagged[i].tokens.size()) +
                      " tokens, source has " +
                      std::to_string(sources[i].size()));
  return tagged;
}

BpeModel bpe_from_merges(
    const std::vector<std::pair<std::string, std::string>>& merges) {
  BpeModel model;
  model.merges = merges;
  for (const auto& [l, r] : merges) model.vocab.insert(l + r);
  return model;
}

template <typename F>
void with_precision(const std::string& precision, F&& f) {
  if (precision == "f32")
    f(float{});
  else if (precision == "f64")
    f(double{});
  else
    throw ConfigError("precision must be f32 or f64, got '" + precision + "'");
}

// ---- subcommand bodies ------------------------------------------------------

void cmd_preprocess(const RunConfig& cfg, const std::string& source,
                    const std::string& target, const std::string& out_source,
                    const std::string& out_target, bool test_set) {
  const auto pairs = load_parallel(source, target);
  const auto kept = filter_pairs(pairs, cfg.filter, test_set);
  std::vector<std::string> src_lines, tgt_lines;
  for (const auto& p : kept) {
    src_lines.push_back(join_tokens(p.source_tokens));
    tgt_lines.push_back(join_tokens(p.target_tokens));
  }
  write_text_lines(out_source, src_lines);
  write_text_lines(out_target, tgt_lines);
  std::cout << "kept " << kept.size() << " of " << pairs.size() << " pairs\n";
}

void cmd_learn_bpe(const std::string& input, int merges,
                   const std::string& output) {
  const auto corpus = tokenized_lines(input);
  const BpeModel model = learn_bpe(count_words(corpus), merges);
  serialize_bpe(model, output);
  std::cout << "learned " << model.merges.size() << " merges -> " << output
            << '\n';
}

void cmd_apply_bpe(const std::string& model_path, const std::string& input,
                   const std::string& output) {
  const BpeModel model = deserialize_bpe(model_path);
  std::vector<std::string> out;
  for (const auto& tokens : tokenized_lines(input))
    out.push_back(join_tokens(apply_bpe(tokens, model).units));
  write_text_lines(output, out);
}

void cmd_tag(const std::string& input, const std::string& output,
             const std::string& format, bool validate) {
  if (validate) {
    const auto sentences =
        parse_tagged_file(input, parse_tag_format(format), &std::cerr);
    std::cout << input << ": " << sentences.size() << " tagged sentences\n";
    return;
  }
  std::vector<TaggedSentence> sentences;
  for (const auto& tokens : tokenized_lines(input))
    sentences.push_back(fallback_tag(tokens));
  write_tagged_file(output, sentences, parse_tag_format(format));
  std::cout << "tagged " << sentences.size() << " sentences -> " << output
            << '\n';
}

void cmd_stats(const std::string& source, const std::string& target) {
  const auto stats = compute_stats(load_parallel(source, target));
  std::cout << "Sentences      " << stats.sentence_count << '\n'
            << "Source tokens  " << stats.token_count_source << " (unique "
            << stats.unique_token_count_source << ")\n"
            << "Target tokens  " << stats.token_count_target << " (unique "
            << stats.unique_token_count_target << ")\n";
}

template <typename Scalar>
void run_train_typed(RunConfig cfg,
                     const std::vector<TaggedSentence>& train_tags,
                     const std::vector<std::vector<std::string>>& train_targets,
                     const std::vector<TaggedSentence>& valid_tags,
                     const std::vector<std::vector<std::string>>& valid_targets,
                     const BpeModel& source_bpe, const BpeModel& target_bpe) {
  std::vector<std::vector<std::string>> src_units, tgt_units;
  for (const auto& s : train_tags)
    src_units.push_back(apply_bpe(s.tokens, source_bpe).units);
  for (const auto& t : train_targets)
    tgt_units.push_back(apply_bpe(t, target_bpe).units);
  const Vocab source_vocab = build_vocab(src_units);
  const Vocab target_vocab = build_vocab(tgt_units);
  const TagVocabulary tag_vocab = build_tag_vocab(train_tags);

  cfg.model.source_vocab_size = static_cast<int>(source_vocab.items().size());
  cfg.model.target_vocab_size = static_cast<int>(target_vocab.items().size());
  cfg.pos.tag_vocab_size = tag_vocab.size();
  cfg.model.validate();
  cfg.pos.validate(cfg.model);

  auto state = make_model_state<Scalar>(cfg.model, cfg.pos, cfg.train,
                                        cfg.optimizer, source_vocab,
                                        target_vocab, tag_vocab,
                                        source_bpe.merges, target_bpe.merges);

  const auto train_examples =
      make_examples(train_tags, train_targets, source_bpe, target_bpe,
                    source_vocab, target_vocab, tag_vocab);
  const auto valid_examples =
      make_examples(valid_tags, valid_targets, source_bpe, target_bpe,
                    source_vocab, target_vocab, tag_vocab);

  const std::string metrics_path = cfg.output_dir + "/metrics.tsv";
  std::ofstream metrics(metrics_path, std::ios::binary | std::ios::trunc);
  if (!metrics) throw DataError("cannot write " + metrics_path);

  const TrainOutcome outcome =
      train_loop(state, train_examples, valid_examples, metrics,
                 cfg.output_dir);
  const std::string final_path = cfg.output_dir + "/ckpt_final.bin";
  save_checkpoint(final_path, state);

  std::cout << "mode " << aug_mode_name(cfg.pos.mode) << ", d_pos "
            << cfg.pos.d_pos << ", vocab " << cfg.model.source_vocab_size
            << "/" << cfg.model.target_vocab_size << '\n'
            << "trained to step " << outcome.final_step << ", metrics -> "
            << metrics_path << '\n';
  if (!outcome.best_checkpoint.empty())
    std::cout << "best checkpoint: " << outcome.best_checkpoint
              << " (validation loss " << detail::metric(outcome.best_valid_loss)
              << ")\n";
  std::cout << "final checkpoint: " << final_path << '\n';
}

void cmd_train(const RunConfig& cfg) {
  if (cfg.data.train_source.empty() || cfg.data.train_target.empty())
    throw ConfigError("train needs data.train_source and data.train_target");
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec)
    throw DataError("cannot create output directory " + cfg.output_dir + ": " +
                    ec.message());

  const auto train_pairs =
      load_parallel(cfg.data.train_source, cfg.data.train_target);
  std::vector<std::vector<std::string>> train_sources, train_targets;
  for (const auto& p : train_pairs) {
    train_sources.push_back(p.source_tokens);
    train_targets.push_back(p.target_tokens);
  }
  const auto train_tags = tags_for(train_sources, cfg.data.train_tags,
                                   cfg.data.tag_format, cfg.data.train_source);

  std::vector<TaggedSentence> valid_tags;
  std::vector<std::vector<std::string>> valid_targets;
  if (!cfg.data.valid_source.empty()) {
    const auto valid_pairs =
        load_parallel(cfg.data.valid_source, cfg.data.valid_target);
    std::vector<std::vector<std::string>> valid_sources;
    for (const auto& p : valid_pairs) {
      valid_sources.push_back(p.source_tokens);
      valid_targets.push_back(p.target_tokens);
    }
    valid_tags = tags_for(valid_sources, cfg.data.valid_tags,
                          cfg.data.tag_format, cfg.data.valid_source);
  }

  const BpeModel source_bpe =
      cfg.bpe.source_model.empty()
          ? learn_bpe(count_words(train_sources), cfg.bpe.merges)
          : deserialize_bpe(cfg.bpe.source_model);
  const BpeModel target_bpe =
      cfg.bpe.target_model.empty()
          ? learn_bpe(count_words(train_targets), cfg.bpe.merges)
          : deserialize_bpe(cfg.bpe.target_model);
  serialize_bpe(source_bpe, cfg.output_dir + "/bpe.source.model");
  serialize_bpe(target_bpe, cfg.output_dir + "/bpe.target.model");

  with_precision(cfg.train.precision, [&](auto tag) {
    run_train_typed<decltype(tag)>(cfg, train_tags, train_targets, valid_tags,
                                   valid_targets, source_bpe, target_bpe);
  });
}

template <typename Scalar>
void run_translate_typed(const std::string& checkpoint,
                         const std::string& input, const std::string& output,
                         const std::string& tag_path,
                         const std::string& tag_format,
                         const DecodeConfig& dc) {
  auto state = load_checkpoint<Scalar>(checkpoint);
  const BpeModel source_bpe = bpe_from_merges(state.source_merges);
  const auto lines = read_lines(input);
  std::vector<std::vector<std::string>> sources;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto tokens = split_whitespace(lines[i]);
    if (tokens.empty())
      throw DataError(input + ":" + std::to_string(i + 1) +
                      ": empty source line");
    sources.push_back(std::move(tokens));
  }
  const auto tagged = tags_for(sources, tag_path, tag_format, input);

  std::vector<std::string> out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    try {
      const FactoredSequence src =
          propagate_tags(apply_bpe(sources[i], source_bpe), tagged[i],
                         state.tag_vocab, state.source_vocab);
      out.push_back(
          join_tokens(merge_subwords(translate_units(state, src, dc))));
    } catch (const DataError& e) {
      throw DataError(input + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  write_text_lines(output, out);
  std::cout << "translated " << out.size() << " sentences -> " << output
            << '\n';
}

void cmd_translate(const std::string& checkpoint, const std::string& input,
                   const std::string& output, const std::string& tag_path,
                   const std::string& tag_format, const DecodeConfig& dc) {
  dc.validate();
  const Json meta = peek_checkpoint_meta(checkpoint);
  const std::string precision =
      meta.at("train").value("precision", std::string("f32"));
  with_precision(precision, [&](auto tag) {
    run_translate_typed<decltype(tag)>(checkpoint, input, output, tag_path,
                                       tag_format, dc);
  });
}

void cmd_score(const std::string& candidate, const std::string& reference) {
  std::cout << bleu_files(candidate, reference).to_string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POS-augmented transformer translation pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool desk = false;
  std::optional<std::string> mode, precision, tag_format_flag;
  std::optional<int> d_pos, max_steps, batch, warmup, checkpoint_every, merges;
  std::optional<double> label_smoothing, dropout;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, train_source, train_target, valid_source,
      valid_target, train_tags_path, valid_tags_path;

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "filter a parallel corpus");
  std::string pre_src, pre_tgt, pre_out_src, pre_out_tgt;
  bool pre_test = false;
  pre->add_option("--source", pre_src)->required();
  pre->add_option("--target", pre_tgt)->required();
  pre->add_option("--out-source", pre_out_src)->required();
  pre->add_option("--out-target", pre_out_tgt)->required();
  pre->add_flag("--test-set", pre_test, "apply the test-set length rule");
  pre->add_option("--config", config_path, "run-config JSON (filter rules)");

  // learn-bpe
  auto* lbpe = app.add_subcommand("learn-bpe", "learn merge operations");
  std::string lbpe_in, lbpe_out;
  int lbpe_merges = 8000;
  lbpe->add_option("--input", lbpe_in)->required();
  lbpe->add_option("--output", lbpe_out)->required();
  lbpe->add_option("--merges", lbpe_merges);

  // apply-bpe
  auto* abpe = app.add_subcommand("apply-bpe", "segment text with a model");
  std::string abpe_model, abpe_in, abpe_out;
  abpe->add_option("--model", abpe_model)->required();
  abpe->add_option("--input", abpe_in)->required();
  abpe->add_option("--output", abpe_out)->required();

  // tag
  auto* tag = app.add_subcommand("tag", "rule-tag text or validate a tag file");
  std::string tag_in, tag_out, tag_fmt = "slash";
  bool tag_validate = false;
  tag->add_option("--input", tag_in)->required();
  tag->add_option("--output", tag_out);
  tag->add_option("--format", tag_fmt, "slash or tsv");
  tag->add_flag("--validate", tag_validate, "parse and report instead of tagging");

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  std::string stats_src, stats_tgt;
  stats->add_option("--source", stats_src)->required();
  stats->add_option("--target", stats_tgt)->required();

  // train
  auto* train = app.add_subcommand("train", "run the training loop");
  train->add_option("--config", config_path, "run-config JSON");
  train->add_flag("--desk", desk, "tiny CPU-scale profile");
  train->add_option("--mode", mode, "baseline|embed_concat|pe_concat");
  train->add_option("--d-pos", d_pos, "POS embedding width");
  train->add_option("--seed", seed);
  train->add_option("--max-steps", max_steps);
  train->add_option("--batch", batch, "sentence pairs per batch");
  train->add_option("--warmup", warmup);
  train->add_option("--checkpoint-every", checkpoint_every);
  train->add_option("--label-smoothing", label_smoothing);
  train->add_option("--dropout", dropout);
  train->add_option("--merges", merges, "BPE merge count");
  train->add_option("--precision", precision, "f32 or f64");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--train-source", train_source);
  train->add_option("--train-target", train_target);
  train->add_option("--valid-source", valid_source);
  train->add_option("--valid-target", valid_target);
  train->add_option("--train-tags", train_tags_path);
  train->add_option("--valid-tags", valid_tags_path);
  train->add_option("--tag-format", tag_format_flag, "slash or tsv");

  // translate
  auto* tr = app.add_subcommand("translate", "beam-decode a source file");
  std::string tr_ckpt, tr_in, tr_out, tr_tags, tr_tag_fmt = "slash";
  DecodeConfig tr_dc;
  tr->add_option("--checkpoint", tr_ckpt)->required();
  tr->add_option("--input", tr_in)->required();
  tr->add_option("--output", tr_out)->required();
  tr->add_option("--tags", tr_tags, "tagged source file; default rule tagger");
  tr->add_option("--tag-format", tr_tag_fmt);
  tr->add_option("--beam", tr_dc.beam_size);
  tr->add_option("--length-penalty", tr_dc.length_penalty);
  tr->add_option("--max-target-len", tr_dc.max_target_len);

  // score
  auto* score = app.add_subcommand("score", "corpus BLEU of candidate vs reference");
  std::string score_cand, score_ref;
  score->add_option("--candidate", score_cand)->required();
  score->add_option("--reference", score_ref)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (desk) apply_desk_profile(cfg);
    if (mode) cfg.pos.mode = parse_aug_mode(*mode);
    if (d_pos) cfg.pos.d_pos = *d_pos;
    if (seed) cfg.train.seed = *seed;
    if (max_steps) cfg.train.max_steps = *max_steps;
    if (batch) cfg.train.batch_sentences = *batch;
    if (warmup) cfg.train.warmup_steps = *warmup;
    if (checkpoint_every) cfg.train.checkpoint_every = *checkpoint_every;
    if (label_smoothing) cfg.train.label_smoothing = *label_smoothing;
    if (dropout) cfg.model.dropout_p = *dropout;
    if (merges) cfg.bpe.merges = *merges;
    if (precision) cfg.train.precision = *precision;
    if (out_dir) cfg.output_dir = *out_dir;
    if (train_source) cfg.data.train_source = *train_source;
    if (train_target) cfg.data.train_target = *train_target;
    if (valid_source) cfg.data.valid_source = *valid_source;
    if (valid_target) cfg.data.valid_target = *valid_target;
    if (train_tags_path) cfg.data.train_tags = *train_tags_path;
    if (valid_tags_path) cfg.data.valid_tags = *valid_tags_path;
    if (tag_format_flag) cfg.data.tag_format = *tag_format_flag;

    if (pre->parsed())
      cmd_preprocess(cfg, pre_src, pre_tgt, pre_out_src, pre_out_tgt, pre_test);
    else if (lbpe->parsed())
      cmd_learn_bpe(lbpe_in, lbpe_merges, lbpe_out);
    else if (abpe->parsed())
      cmd_apply_bpe(abpe_model, abpe_in, abpe_out);
    else if (tag->parsed())
      cmd_tag(tag_in, tag_out, tag_fmt, tag_validate);
    else if (stats->parsed())
      cmd_stats(stats_src, stats_tgt);
    else if (train->parsed())
      cmd_train(cfg);
    else if (tr->parsed())
      cmd_translate(tr_ckpt, tr_in, tr_out, tr_tags, tr_tag_fmt, tr_dc);
    else if (score->parsed())
      cmd_score(score_cand, score_ref);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
