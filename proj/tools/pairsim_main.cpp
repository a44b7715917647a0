#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pairsim/config.hpp"
#include "pairsim/consensus.hpp"
#include "pairsim/experiments.hpp"
#include "pairsim/ingest.hpp"
#include "pairsim/models.hpp"
#include "pairsim/pairs.hpp"
#include "pairsim/splits.hpp"
#include "pairsim/synth.hpp"
#include "pairsim/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pairsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitTraining = 4;
constexpr int kExitData = 5;

// Artifact index accumulated by each command and written last.
class Manifest {
 public:
  explicit Manifest(fs::path out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  const fs::path& dir() const { return out_dir_; }

  fs::path path_for(const std::string& name) { return out_dir_ / name; }

  void record(const std::string& name, const std::string& kind) {
    artifacts_.push_back({{"file", name}, {"kind", kind}});
  }

  void write_json(const std::string& name, const json& j, const std::string& kind) {
    std::ofstream out(path_for(name));
    if (!out) throw IoError("cannot write " + path_for(name).string());
    out << j.dump(2) << "\n";
    record(name, kind);
  }

  void finish(const json& config_echo) {
    json index{{"config", config_echo},
               {"config_hash", config_hash(config_echo)},
               {"artifacts", artifacts_}};
    std::ofstream out(path_for("manifest.json"));
    if (!out) throw IoError("cannot write " + path_for("manifest.json").string());
    out << index.dump(2) << "\n";
  }

 private:
  fs::path out_dir_;
  json artifacts_ = json::array();
};

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> k;
  std::optional<std::string> rule;
  std::optional<std::string> merge;
  std::optional<std::string> task;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--seed", flags.seed, "Override split/train/consensus seeds");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--k", flags.k, "Exemplars per class (integer or ALL)");
  cmd->add_option("--rule", flags.rule, "Consensus rule")
      ->check(CLI::IsMember({"average", "vote"}));
  cmd->add_option("--merge", flags.merge, "Siamese merge mode")
      ->check(CLI::IsMember({"concat", "subtract"}));
  cmd->add_option("--task", flags.task, "Split protocol")
      ->check(CLI::IsMember({"inst", "symb", "random"}));
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config;
  if (!flags.config_path.empty()) {
    config = read_run_config(flags.config_path);
  } else {
    config = run_config_from_json(json::object());
  }
  ConfigOverrides overrides;
  overrides.seed = flags.seed;
  overrides.out = flags.out;
  overrides.k = flags.k;
  overrides.rule = flags.rule;
  overrides.merge = flags.merge;
  overrides.task = flags.task;
  apply_overrides(config, overrides);
  return config;
}

json dataset_summary(const DatasetTable& table) {
  std::size_t per_label[2] = {0, 0};
  for (const auto& img : table.images()) {
    per_label[static_cast<std::size_t>(img.task_label)]++;
  }
  return json{{"images", table.size()},
              {"label_0", per_label[0]},
              {"label_1", per_label[1]},
              {"content_hash", table.content_hash()}};
}

int cmd_ingest(const CommonFlags& flags, const std::vector<std::string>& labels,
               const std::string& root) {
  RunConfig config = resolve_config(flags);
  std::map<std::string, int> label_map = config.dataset.labels;
  for (const auto& pair : labels) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      throw FormatError("--label: expected <class>=<0|1>, got \"" + pair + "\"");
    }
    const std::string value = pair.substr(eq + 1);
    if (value != "0" && value != "1") {
      throw FormatError("--label " + pair + ": label must be 0 or 1");
    }
    label_map[pair.substr(0, eq)] = value == "1" ? 1 : 0;
  }
  config.dataset.path = root;
  config.dataset.labels = label_map;

  Manifest manifest(config.out_dir);
  IngestConfig ingest_config;
  ingest_config.resize = config.dataset.resize;
  fs::path resolved(root);
  if (resolved.is_relative()) {
    if (const char* env = std::getenv("PAIRSIM_DATA_ROOT")) {
      resolved = fs::path(env) / resolved;
    }
  }
  IngestReport report;
  DatasetTable table = load_image_folder(resolved, label_map, ingest_config, &report);
  json j = dataset_summary(table);
  j["source"] = resolved.string();
  j["resize"] = config.dataset.resize;
  j["loaded"] = report.loaded;
  j["skipped"] = report.skipped;
  j["warnings"] = report.warnings;
  manifest.write_json("dataset_manifest.json", j, "dataset-manifest");
  manifest.finish(run_config_json(config));
  std::cout << "ingested " << table.size() << " images from " << resolved << "\n";
  return kExitOk;
}

int cmd_synth(const CommonFlags& flags, bool write_images) {
  RunConfig config = resolve_config(flags);
  Manifest manifest(config.out_dir);
  DatasetTable table = load_dataset(config.dataset);

  if (write_images) {
    // <out>/images/<alphabet>/<character>/<writer>.png, reloadable by
    // `ingest` with one label per alphabet directory.
    const fs::path images = manifest.dir() / "images";
    auto group_of = [](const LabeledImage& img, const std::string& key,
                       const std::string& fallback) {
      auto it = img.groups.find(key);
      return it == img.groups.end() || it->second.empty() ? fallback : it->second;
    };
    for (const auto& img : table.images()) {
      std::string character = group_of(img, "character", "character");
      for (auto& c : character) {
        if (c == '/' || c == '\\') c = '-';
      }
      fs::path dir = images / group_of(img, "alphabet", "alphabet") / character;
      fs::create_directories(dir);
      const std::string stem = character + "_" + group_of(img, "writer", "w");
      write_image_png(dir / (stem + ".png"), img.pixels);
    }
    manifest.record("images", "image-tree");
  }

  json j = dataset_summary(table);
  j["kind"] = config.dataset.synth_kind;
  manifest.write_json("dataset_manifest.json", j, "dataset-manifest");
  manifest.finish(run_config_json(config));
  std::cout << "synthesized " << table.size() << " images into "
            << manifest.dir().string() << "\n";
  return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::string& model_kind) {
  RunConfig config = resolve_config(flags);
  Manifest manifest(config.out_dir);
  DatasetTable table = load_dataset(config.dataset);
  SplitResult split = make_split(table, config.dataset.split);
  write_split_manifest(manifest.path_for("split.json"), split);
  manifest.record("split.json", "split-manifest");

  const json provenance{{"seed", config.train.seed},
                        {"dataset_hash", table.content_hash()},
                        {"split_kind", split_kind_name(split.spec.kind)}};

  if (model_kind == "direct") {
    auto result = train_direct(split.train, config.train);
    result.model.save(manifest.path_for("direct.ckpt"), provenance);
    manifest.record("direct.ckpt", "checkpoint");
    manifest.record("direct.json", "checkpoint-sidecar");
    write_loss_csv(manifest.path_for("loss.csv"), result.log);
    manifest.record("loss.csv", "loss-curve");
    std::cout << "direct: " << result.log.losses.size() << " steps, final loss "
              << result.log.losses.back() << "\n";
  } else if (model_kind == "siamese") {
    auto result = train_siamese(split.train, config.train);
    result.model.save(manifest.path_for("siamese.ckpt"), provenance);
    manifest.record("siamese.ckpt", "checkpoint");
    manifest.record("siamese.json", "checkpoint-sidecar");
    write_loss_csv(manifest.path_for("loss.csv"), result.log);
    manifest.record("loss.csv", "loss-curve");
    std::cout << "siamese: " << result.log.losses.size() << " steps, final loss "
              << result.log.losses.back() << "\n";
  } else {
    DatasetTable surrogate = synth_pretrain_corpus(config.dataset.pretrain);
    auto result = pretrain_then_finetune(surrogate, split.train, config.train);
    result.model.save(manifest.path_for("siamese.ckpt"), provenance);
    manifest.record("siamese.ckpt", "checkpoint");
    manifest.record("siamese.json", "checkpoint-sidecar");
    result.pretrain_only.save(manifest.path_for("pretrain_only.ckpt"), provenance);
    manifest.record("pretrain_only.ckpt", "checkpoint");
    manifest.record("pretrain_only.json", "checkpoint-sidecar");
    write_loss_csv(manifest.path_for("loss.csv"), result.log);
    manifest.record("loss.csv", "loss-curve");
    std::cout << "pretrain+finetune: " << result.log.losses.size()
              << " steps, final loss " << result.log.losses.back() << "\n";
  }
  manifest.finish(run_config_json(config));
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint) {
  RunConfig config = resolve_config(flags);
  Manifest manifest(config.out_dir);
  DatasetTable table = load_dataset(config.dataset);
  SplitResult split = make_split(table, config.dataset.split);
  write_split_manifest(manifest.path_for("split.json"), split);
  manifest.record("split.json", "split-manifest");

  std::ifstream sidecar_in(sidecar_path(checkpoint));
  if (!sidecar_in) {
    throw IoError("cannot open checkpoint sidecar " + sidecar_path(checkpoint).string());
  }
  json sidecar;
  sidecar_in >> sidecar;
  const std::string kind = sidecar.at("kind").get<std::string>();

  json report;
  if (kind == "direct") {
    DirectClassifier model = DirectClassifier::load(checkpoint);
    EvalReport eval = evaluate_accuracy(direct_predictor(model), split.test);
    report = {{"model", "direct"},
              {"accuracy", eval.accuracy},
              {"recall_0", eval.recall[0]},
              {"recall_1", eval.recall[1]},
              {"n", eval.n},
              {"correct", eval.correct}};
  } else {
    SiameseSimilarity model = SiameseSimilarity::load(checkpoint);
    PairScorer scorer = caching_scorer(model);
    auto outcomes = classify_all(split.test, config.consensus, scorer, split.train);
    write_outcome_log(manifest.path_for("outcomes.jsonl"), outcomes, config.consensus);
    manifest.record("outcomes.jsonl", "outcome-log");
    EvalReport eval;
    eval.n = outcomes.size();
    std::size_t per_label[2] = {0, 0}, correct_label[2] = {0, 0};
    for (const auto& o : outcomes) {
      per_label[static_cast<std::size_t>(o.true_label)]++;
      if (o.predicted == o.true_label) {
        eval.correct++;
        correct_label[static_cast<std::size_t>(o.true_label)]++;
      }
    }
    eval.accuracy = accuracy_from_outcomes(outcomes);
    for (int c = 0; c < 2; ++c) {
      eval.recall[c] = per_label[c] == 0
                           ? 0.0
                           : static_cast<double>(correct_label[c]) /
                                 static_cast<double>(per_label[c]);
    }
    report = {{"model", "siamese-consensus"},
              {"rule", consensus_rule_name(config.consensus.rule)},
              {"k", config.consensus.k == kAllExemplars ? json("ALL")
                                                        : json(config.consensus.k)},
              {"accuracy", eval.accuracy},
              {"recall_0", eval.recall[0]},
              {"recall_1", eval.recall[1]},
              {"n", eval.n},
              {"correct", eval.correct}};
  }
  manifest.write_json("eval.json", report, "eval-report");
  manifest.finish(run_config_json(config));
  std::cout << "accuracy " << report.at("accuracy").get<double>() << " over "
            << report.at("n").get<std::size_t>() << " queries\n";
  return kExitOk;
}

int cmd_compare(const CommonFlags& flags, const std::string& direct_ckpt,
                const std::string& siamese_ckpt) {
  RunConfig config = resolve_config(flags);
  Manifest manifest(config.out_dir);
  DatasetTable table = load_dataset(config.dataset);
  SplitResult split = make_split(table, config.dataset.split);
  write_split_manifest(manifest.path_for("split.json"), split);
  manifest.record("split.json", "split-manifest");

  DirectClassifier direct = [&] {
    if (!direct_ckpt.empty()) return DirectClassifier::load(direct_ckpt);
    TrainConfig dc = direct_defaults();
    dc.encoder = config.encoder;
    dc.seed = config.train.seed;
    dc.l2_lambda = config.train.l2_lambda;
    return train_direct(split.train, dc).model;
  }();
  SiameseSimilarity siamese = [&] {
    if (!siamese_ckpt.empty()) return SiameseSimilarity::load(siamese_ckpt);
    return train_siamese(split.train, config.train).model;
  }();

  PairScorer scorer = caching_scorer(siamese);
  Predictor a = direct_predictor(direct);
  Predictor b = consensus_predictor(config.consensus, scorer, split.train);
  EvalReport direct_eval = evaluate_accuracy(a, split.test);
  EvalReport consensus_eval = evaluate_accuracy(b, split.test);
  AgreementMatrix m = agreement_analysis(a, b, split.test);

  json report{{"direct_accuracy", direct_eval.accuracy},
              {"consensus_accuracy", consensus_eval.accuracy},
              {"agreement", agreement_json(m)}};
  manifest.write_json("compare.json", report, "agreement-report");
  manifest.finish(run_config_json(config));
  std::cout << "direct " << direct_eval.accuracy << " vs consensus "
            << consensus_eval.accuracy << "\n";
  return kExitOk;
}

int cmd_experiment(const CommonFlags& flags, int n_splits, bool l2_grid) {
  RunConfig config = resolve_config(flags);
  Manifest manifest(config.out_dir);
  DatasetTable table = load_dataset(config.dataset);

  if (l2_grid) {
    SplitResult split = make_split(table, config.dataset.split);
    TrainConfig dc = direct_defaults();
    dc.encoder = config.encoder;
    dc.seed = config.train.seed;
    const std::vector<double> lambdas = {0.0, 1e-5, 1e-4, 1e-3};
    L2GridResult grid = grid_search_l2(split.train, split.test, lambdas, dc);
    json rows = json::array();
    for (const auto& [lambda, acc] : grid.accuracies) {
      rows.push_back({{"lambda", lambda}, {"accuracy", acc}});
    }
    manifest.write_json("l2_grid.json",
                        {{"best_lambda", grid.best_lambda}, {"grid", rows}},
                        "l2-grid-report");
    manifest.finish(run_config_json(config));
    std::cout << "best lambda " << grid.best_lambda << "\n";
    return kExitOk;
  }

  TrainConfig direct_config = direct_defaults();
  direct_config.encoder = config.encoder;
  direct_config.l2_lambda = config.train.l2_lambda;
  TrainConfig siamese_config = config.train;
  ConsensusPolicy policy = config.consensus;

  std::vector<Method> methods;
  methods.push_back(
      {"direct", [direct_config](const SplitResult& split, std::uint64_t seed) {
         TrainConfig c = direct_config;
         c.seed = seed;
         auto result = train_direct(split.train, c);
         return evaluate_accuracy(direct_predictor(result.model), split.test).accuracy;
       }});
  methods.push_back(
      {"siamese-consensus",
       [siamese_config, policy](const SplitResult& split, std::uint64_t seed) {
         TrainConfig c = siamese_config;
         c.seed = seed;
         auto result = train_siamese(split.train, c);
         PairScorer scorer = caching_scorer(result.model);
         ConsensusPolicy p = policy;
         p.seed = seed;
         return evaluate_accuracy(consensus_predictor(p, scorer, split.train),
                                  split.test)
             .accuracy;
       }});

  MultiSplitReport report = multi_split_experiment(
      table, config.dataset.split.kind, n_splits, config.dataset.split.fraction,
      methods, config.dataset.split.seed);
  manifest.write_json("experiment.json", multi_split_json(report), "experiment-report");
  write_multi_split_csv(manifest.path_for("experiment.csv"), report);
  manifest.record("experiment.csv", "experiment-rows");
  manifest.finish(run_config_json(config));
  for (const auto& method : report.methods) {
    std::cout << method.name << " mean " << method.mean << " stddev " << method.stddev
              << " failures " << method.failures << "\n";
  }
  return kExitOk;
}

json error_json(const char* kind, const std::string& message) {
  return json{{"error", kind}, {"message", message}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pair-similarity classification under domain shift"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<std::string> labels;
  std::string ingest_root;
  std::string model_kind = "siamese";
  std::string checkpoint;
  std::string direct_ckpt, siamese_ckpt;
  int n_splits = 5;
  bool write_images = false;
  bool l2_grid = false;

  CLI::App* ingest = app.add_subcommand("ingest", "Load an image folder, write a manifest");
  ingest->add_option("root", ingest_root, "Dataset root directory")->required();
  ingest->add_option("--label", labels, "Class-to-label mapping, <class>=<0|1>");
  add_common_flags(ingest, flags);

  CLI::App* synth = app.add_subcommand("synth", "Generate a procedural dataset");
  synth->add_flag("--images", write_images, "Also write the images as PNG files");
  add_common_flags(synth, flags);

  CLI::App* train = app.add_subcommand("train", "Train a model, write a checkpoint");
  train->add_option("--model", model_kind, "Model to train")
      ->check(CLI::IsMember({"direct", "siamese", "pretrain"}));
  add_common_flags(train, flags);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  add_common_flags(eval, flags);

  CLI::App* compare = app.add_subcommand("compare", "Agreement between both models");
  compare->add_option("--direct", direct_ckpt, "Direct checkpoint (trains one if unset)");
  compare->add_option("--siamese", siamese_ckpt, "Siamese checkpoint (trains one if unset)");
  add_common_flags(compare, flags);

  CLI::App* experiment = app.add_subcommand("experiment", "Multi-split study");
  experiment->add_option("--splits", n_splits, "Number of splits")
      ->check(CLI::PositiveNumber);
  experiment->add_flag("--l2-grid", l2_grid, "Run the L2 grid search instead");
  add_common_flags(experiment, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << error_json("cli", e.what()).dump() << "\n";
    return kExitConfig;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(flags, labels, ingest_root);
    if (synth->parsed()) return cmd_synth(flags, write_images);
    if (train->parsed()) return cmd_train(flags, model_kind);
    if (eval->parsed()) return cmd_eval(flags, checkpoint);
    if (compare->parsed()) return cmd_compare(flags, direct_ckpt, siamese_ckpt);
    if (experiment->parsed()) return cmd_experiment(flags, n_splits, l2_grid);
  } catch (const FormatError& e) {
    std::cerr << error_json("format", e.what()).dump() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << error_json("io", e.what()).dump() << "\n";
    return kExitIo;
  } catch (const TrainingError& e) {
    std::cerr << error_json("training", e.what()).dump() << "\n";
    return kExitTraining;
  } catch (const Error& e) {
    std::cerr << error_json("data", e.what()).dump() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()).dump() << "\n";
    return kExitData;
  }
  return kExitOk;
}
