#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "pairsim/config.hpp"

using namespace pairsim;
using nlohmann::json;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("empty config document yields the defaults") {
  RunConfig config = run_config_from_json(json::object());
  CHECK(config.merge == Merge::SUBTRACT);
  CHECK(config.dataset.path.empty());
  CHECK(config.dataset.synth_kind == "script");
  CHECK(config.dataset.split.kind == SplitKind::INST);
  CHECK(config.encoder.conv_blocks.size() == 4);
  CHECK(config.encoder.embedding_dim == 256);
  CHECK(config.consensus.rule == ConsensusRule::AVERAGE);
  CHECK(config.consensus.k == kAllExemplars);
  CHECK(config.consensus.resample_per_query);
  CHECK(config.consensus.vote_threshold == 0.5);
  CHECK(config.out_dir == "runs/out");

  TrainConfig defaults = siamese_defaults();
  CHECK(config.train.batch_size == defaults.batch_size);
  CHECK(config.train.epochs == defaults.epochs);
  CHECK(config.train.adam.lr == defaults.adam.lr);
  // Encoder and merge are mirrored into the train section.
  CHECK(config.train.merge == config.merge);
  CHECK(config.train.encoder.embedding_dim == config.encoder.embedding_dim);
  CHECK(config.train.encoder.conv_blocks.size() == config.encoder.conv_blocks.size());
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(run_config_from_json({{"datasets", json::object()}}),
                       doctest::Contains("unknown key \"datasets\""), FormatError);
  CHECK_THROWS_WITH_AS(run_config_from_json({{"dataset", {{"folder", "x"}}}}),
                       doctest::Contains("unknown key \"folder\""), FormatError);
  CHECK_THROWS_WITH_AS(
      run_config_from_json({{"dataset", {{"synth", {{"bogus", 1}}}}}}),
      doctest::Contains("unknown key \"bogus\""), FormatError);
  CHECK_THROWS_WITH_AS(
      run_config_from_json({{"dataset", {{"split", {{"frac", 0.5}}}}}}),
      doctest::Contains("unknown key \"frac\""), FormatError);
  CHECK_THROWS_WITH_AS(run_config_from_json({{"model", {{"head", "linear"}}}}),
                       doctest::Contains("unknown key \"head\""), FormatError);
  CHECK_THROWS_WITH_AS(
      run_config_from_json({{"model", {{"encoder", {{"blocks", json::array()}}}}}}),
      doctest::Contains("unknown key \"blocks\""), FormatError);
  CHECK_THROWS_WITH_AS(
      run_config_from_json(
          {{"model",
            {{"encoder", {{"conv_blocks", json::array({{{"channels", 8}}})}}}}}}),
      doctest::Contains("unknown key \"channels\""), FormatError);
  CHECK_THROWS_WITH_AS(run_config_from_json({{"train", {{"momentum", 0.9}}}}),
                       doctest::Contains("unknown key \"momentum\""), FormatError);
  CHECK_THROWS_WITH_AS(run_config_from_json({{"consensus", {{"kk", 1}}}}),
                       doctest::Contains("unknown key \"kk\""), FormatError);
}

TEST_CASE("partial conv blocks are filled with per-block defaults") {
  json j = {{"model",
             {{"encoder",
               {{"conv_blocks", json::array({{{"out_channels", 8}}, json::object()})},
                {"embedding_dim", 16}}}}}};
  RunConfig config = run_config_from_json(j);
  REQUIRE(config.encoder.conv_blocks.size() == 2);
  CHECK(config.encoder.conv_blocks[0].out_channels == 8);
  CHECK(config.encoder.conv_blocks[0].kernel_size == 3);
  CHECK(config.encoder.conv_blocks[0].pool);
  CHECK(config.encoder.conv_blocks[1].out_channels == 32);
  CHECK(config.encoder.conv_blocks[1].kernel_size == 3);
  CHECK(config.encoder.conv_blocks[1].pool);
  CHECK(config.encoder.embedding_dim == 16);
}

TEST_CASE("mistyped fields name their location") {
  CHECK_THROWS_WITH_AS(run_config_from_json({{"train", {{"batch_size", "big"}}}}),
                       doctest::Contains("train.batch_size"), FormatError);
  CHECK_THROWS_WITH_AS(run_config_from_json({{"dataset", {{"labels", "a=0"}}}}),
                       doctest::Contains("dataset.labels"), FormatError);
}

TEST_CASE("dataset path and synth are mutually exclusive") {
  json j = {{"dataset", {{"path", "folder"}, {"synth", {{"kind", "script"}}}}}};
  CHECK_THROWS_WITH_AS(run_config_from_json(j), doctest::Contains("mutually exclusive"),
                       FormatError);
}

TEST_CASE("unknown synth kind and split kind are rejected") {
  CHECK_THROWS_AS(
      run_config_from_json({{"dataset", {{"synth", {{"kind", "letters"}}}}}}),
      FormatError);
  CHECK_THROWS_AS(
      run_config_from_json({{"dataset", {{"split", {{"kind", "HOLDOUT"}}}}}}),
      FormatError);
}

TEST_CASE("consensus k accepts integers and ALL") {
  CHECK(run_config_from_json({{"consensus", {{"k", 5}}}}).consensus.k == 5);
  CHECK(run_config_from_json({{"consensus", {{"k", "ALL"}}}}).consensus.k ==
        kAllExemplars);
  CHECK(run_config_from_json({{"consensus", {{"k", "all"}}}}).consensus.k ==
        kAllExemplars);
  CHECK(run_config_from_json({{"consensus", {{"k", "7"}}}}).consensus.k == 7);
  CHECK_THROWS_AS(run_config_from_json({{"consensus", {{"k", 2.5}}}}), FormatError);
  CHECK_THROWS_AS(run_config_from_json({{"consensus", {{"k", 0}}}}), FormatError);
  CHECK_THROWS_AS(run_config_from_json({{"consensus", {{"k", -2}}}}), FormatError);
}

TEST_CASE("parse_k handles text forms") {
  CHECK(parse_k("ALL") == kAllExemplars);
  CHECK(parse_k("All") == kAllExemplars);
  CHECK(parse_k("17") == 17);
  CHECK_THROWS_AS(parse_k("0"), FormatError);
  CHECK_THROWS_AS(parse_k("-3"), FormatError);
  CHECK_THROWS_AS(parse_k("3x"), FormatError);
  CHECK_THROWS_AS(parse_k(""), FormatError);
}

TEST_CASE("parsing validates the encoder shape chain") {
  json j = {{"model",
             {{"encoder",
               {{"conv_blocks", json::array({json::object(), json::object()})},
                {"input_shape", json::array({1, 6, 6})}}}}}};
  CHECK_THROWS_AS(run_config_from_json(j), DimensionError);
}

TEST_CASE("config echo round-trips through the parser") {
  json j = {{"dataset",
             {{"synth", {{"kind", "script"}, {"chars0", 5}, {"writers", 4}, {"seed", 9}}},
              {"split", {{"kind", "SYMB"}, {"fraction", 0.25}, {"seed", 2}}}}},
            {"model",
             {{"encoder",
               {{"conv_blocks", json::array({{{"out_channels", 8}}, {{"out_channels", 16}}})},
                {"embedding_dim", 32}}},
              {"merge", "concat"}}},
            {"train", {{"batch_size", 8}, {"epochs", 2}, {"lr", 0.01}, {"seed", 6}}},
            {"consensus", {{"k", "ALL"}, {"rule", "vote"}, {"vote_threshold", 0.4}}},
            {"out_dir", "runs/demo"}};
  RunConfig config = run_config_from_json(j);
  CHECK(config.dataset.script.chars0 == 5);
  CHECK(config.dataset.script.writers == 4);
  CHECK(config.dataset.split.kind == SplitKind::SYMB);
  CHECK(config.merge == Merge::CONCAT);
  CHECK(config.train.merge == Merge::CONCAT);
  CHECK(config.train.batch_size == 8);
  CHECK(config.consensus.rule == ConsensusRule::VOTE);
  CHECK(config.consensus.k == kAllExemplars);
  CHECK(config.consensus.vote_threshold == 0.4);
  CHECK(config.out_dir == "runs/demo");

  json echoed = run_config_json(config);
  RunConfig reparsed = run_config_from_json(echoed);
  CHECK(run_config_json(reparsed) == echoed);
}

TEST_CASE("folder-mode config echo keeps path and labels") {
  RunConfig config;
  config.dataset.path = "corpus";
  config.dataset.labels = {{"kata", 0}, {"kor", 1}};
  json echoed = run_config_json(config);
  CHECK(echoed["dataset"]["path"] == "corpus");
  CHECK(echoed["dataset"]["labels"]["kata"] == 0);
  RunConfig reparsed = run_config_from_json(echoed);
  CHECK(reparsed.dataset.path == "corpus");
  CHECK(reparsed.dataset.labels == config.dataset.labels);
}

TEST_CASE("overrides fan out and validate") {
  RunConfig config = run_config_from_json(json::object());
  ConfigOverrides overrides;
  overrides.seed = 42;
  overrides.out = "runs/override";
  overrides.k = "ALL";
  overrides.rule = "vote";
  overrides.merge = "concat";
  overrides.task = "symb";
  apply_overrides(config, overrides);
  CHECK(config.dataset.split.seed == 42);
  CHECK(config.train.seed == 42);
  CHECK(config.consensus.seed == 42);
  CHECK(config.out_dir == "runs/override");
  CHECK(config.consensus.k == kAllExemplars);
  CHECK(config.consensus.rule == ConsensusRule::VOTE);
  CHECK(config.merge == Merge::CONCAT);
  CHECK(config.train.merge == Merge::CONCAT);
  CHECK(config.dataset.split.kind == SplitKind::SYMB);

  ConfigOverrides none;
  RunConfig before = config;
  apply_overrides(config, none);
  CHECK(config.dataset.split.seed == before.dataset.split.seed);
  CHECK(config.out_dir == before.out_dir);

  ConfigOverrides inst;
  inst.task = "INST";
  apply_overrides(config, inst);
  CHECK(config.dataset.split.kind == SplitKind::INST);
  ConfigOverrides rand_task;
  rand_task.task = "random";
  apply_overrides(config, rand_task);
  CHECK(config.dataset.split.kind == SplitKind::RANDOM_FRACTION);

  ConfigOverrides bad_task;
  bad_task.task = "zero-shot";
  CHECK_THROWS_AS(apply_overrides(config, bad_task), FormatError);
  ConfigOverrides bad_k;
  bad_k.k = "some";
  CHECK_THROWS_AS(apply_overrides(config, bad_k), FormatError);
  ConfigOverrides bad_rule;
  bad_rule.rule = "median";
  CHECK_THROWS_AS(apply_overrides(config, bad_rule), FormatError);
  ConfigOverrides bad_merge;
  bad_merge.merge = "sum";
  CHECK_THROWS_AS(apply_overrides(config, bad_merge), FormatError);
}

TEST_CASE("read_run_config reports missing files and bad syntax") {
  CHECK_THROWS_AS(read_run_config("/nonexistent/config.json"), IoError);

  TempFile bad("pairsim_test_bad_config.json");
  std::ofstream(bad.path) << "{ not json";
  CHECK_THROWS_AS(read_run_config(bad.path), FormatError);

  TempFile good("pairsim_test_good_config.json");
  std::ofstream(good.path) << R"({"train": {"batch_size": 4}, "out_dir": "runs/x"})";
  RunConfig config = read_run_config(good.path);
  CHECK(config.train.batch_size == 4);
  CHECK(config.out_dir == "runs/x");
}

TEST_CASE("load_dataset materializes each synth kind") {
  DatasetSpec script;
  script.synth_kind = "script";
  script.script.chars0 = 3;
  script.script.chars1 = 2;
  script.script.writers = 2;
  script.script.seed = 8;
  DatasetTable table = load_dataset(script);
  CHECK(table.size() == (3 + 2) * 2);
  CHECK(table.has_both_labels());

  DatasetSpec glyphs;
  glyphs.synth_kind = "glyphs";
  glyphs.glyph_chars = 3;
  glyphs.glyph_instances = 4;
  glyphs.glyph_bias = 0.0;
  glyphs.glyph_seed = 1;
  CHECK(load_dataset(glyphs).size() == 2 * 3 * 4);

  DatasetSpec pre;
  pre.synth_kind = "pretrain";
  pre.pretrain.n_alphabets = 3;
  pre.pretrain.chars_per_alphabet = 4;
  pre.pretrain.writers = 2;
  CHECK(load_dataset(pre).size() == 3 * 4 * 2);
}

TEST_CASE("folder mode requires a label map") {
  DatasetSpec spec;
  spec.path = "/nonexistent/corpus";
  CHECK_THROWS_WITH_AS(load_dataset(spec), doctest::Contains("labels"), FormatError);
}
