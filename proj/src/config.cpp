#include "pairsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <initializer_list>

namespace pairsim {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw FormatError(std::string(where) + ": expected an object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw FormatError(std::string(where) + ": unknown key \"" + key + "\"");
    }
  }
}

template <typename T>
T field(const json& j, const char* where, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string(where) + "." + key + ": " + e.what());
  }
}

SplitSpec parse_split(const json& j) {
  check_keys(j, "dataset.split", {"kind", "fraction", "seed"});
  SplitSpec spec;
  spec.kind = split_kind_from_name(field<std::string>(j, "dataset.split", "kind",
                                                      split_kind_name(spec.kind)));
  spec.fraction = field<double>(j, "dataset.split", "fraction", spec.fraction);
  spec.seed = field<std::uint64_t>(j, "dataset.split", "seed", spec.seed);
  return spec;
}

DatasetSpec parse_dataset(const json& j) {
  check_keys(j, "dataset",
             {"path", "labels", "resize", "synth", "split"});
  DatasetSpec spec;
  spec.path = field<std::string>(j, "dataset", "path", "");
  if (j.contains("labels")) {
    try {
      spec.labels = j.at("labels").get<std::map<std::string, int>>();
    } catch (const json::exception& e) {
      throw FormatError(std::string("dataset.labels: ") + e.what());
    }
  }
  spec.resize = field<int>(j, "dataset", "resize", spec.resize);
  if (j.contains("synth")) {
    if (!spec.path.empty()) {
      throw FormatError("dataset: \"path\" and \"synth\" are mutually exclusive");
    }
    const json& s = j.at("synth");
    check_keys(s, "dataset.synth",
               {"kind", "chars0", "chars1", "writers", "style_gap", "char_var",
                "writer_var", "noise", "seed", "n_alphabets", "chars_per_alphabet",
                "glyph_chars", "glyph_instances", "glyph_bias"});
    spec.synth_kind = field<std::string>(s, "dataset.synth", "kind", spec.synth_kind);
    if (spec.synth_kind == "script") {
      spec.script.chars0 = field<int>(s, "dataset.synth", "chars0", spec.script.chars0);
      spec.script.chars1 = field<int>(s, "dataset.synth", "chars1", spec.script.chars1);
      spec.script.writers = field<int>(s, "dataset.synth", "writers", spec.script.writers);
      spec.script.style_gap =
          field<double>(s, "dataset.synth", "style_gap", spec.script.style_gap);
      spec.script.char_var =
          field<double>(s, "dataset.synth", "char_var", spec.script.char_var);
      spec.script.writer_var =
          field<double>(s, "dataset.synth", "writer_var", spec.script.writer_var);
      spec.script.noise = field<double>(s, "dataset.synth", "noise", spec.script.noise);
      spec.script.seed =
          field<std::uint64_t>(s, "dataset.synth", "seed", spec.script.seed);
    } else if (spec.synth_kind == "pretrain") {
      spec.pretrain.n_alphabets =
          field<int>(s, "dataset.synth", "n_alphabets", spec.pretrain.n_alphabets);
      spec.pretrain.chars_per_alphabet = field<int>(s, "dataset.synth",
                                                    "chars_per_alphabet",
                                                    spec.pretrain.chars_per_alphabet);
      spec.pretrain.writers =
          field<int>(s, "dataset.synth", "writers", spec.pretrain.writers);
      spec.pretrain.char_var =
          field<double>(s, "dataset.synth", "char_var", spec.pretrain.char_var);
      spec.pretrain.writer_var =
          field<double>(s, "dataset.synth", "writer_var", spec.pretrain.writer_var);
      spec.pretrain.noise = field<double>(s, "dataset.synth", "noise", spec.pretrain.noise);
      spec.pretrain.seed =
          field<std::uint64_t>(s, "dataset.synth", "seed", spec.pretrain.seed);
    } else if (spec.synth_kind == "glyphs") {
      spec.glyph_chars = field<int>(s, "dataset.synth", "glyph_chars", spec.glyph_chars);
      spec.glyph_instances =
          field<int>(s, "dataset.synth", "glyph_instances", spec.glyph_instances);
      spec.glyph_bias = field<double>(s, "dataset.synth", "glyph_bias", spec.glyph_bias);
      spec.glyph_seed = field<std::uint64_t>(s, "dataset.synth", "seed", spec.glyph_seed);
    } else {
      throw FormatError("dataset.synth.kind: expected script, pretrain, or glyphs, got \"" +
                        spec.synth_kind + "\"");
    }
  }
  if (j.contains("split")) spec.split = parse_split(j.at("split"));
  return spec;
}

EncoderConfig parse_encoder(const json& j) {
  check_keys(j, "model.encoder", {"conv_blocks", "embedding_dim", "input_shape"});
  if (j.contains("conv_blocks")) {
    for (const auto& b : j.at("conv_blocks")) {
      check_keys(b, "model.encoder.conv_blocks[]",
                 {"out_channels", "kernel_size", "pool"});
    }
  }
  EncoderConfig defaults;
  const ConvBlockSpec block_defaults;
  json filled = j;
  if (!filled.contains("conv_blocks")) {
    filled["conv_blocks"] = encoder_config_json(defaults)["conv_blocks"];
  } else {
    for (auto& b : filled.at("conv_blocks")) {
      if (!b.contains("out_channels")) b["out_channels"] = block_defaults.out_channels;
      if (!b.contains("kernel_size")) b["kernel_size"] = block_defaults.kernel_size;
      if (!b.contains("pool")) b["pool"] = block_defaults.pool;
    }
  }
  if (!filled.contains("embedding_dim")) filled["embedding_dim"] = defaults.embedding_dim;
  if (!filled.contains("input_shape")) filled["input_shape"] = defaults.input_shape;
  return encoder_config_from_json(filled);
}

TrainConfig parse_train(const json& j, const TrainConfig& base) {
  check_keys(j, "train",
             {"batch_size", "epochs", "steps_per_epoch", "lr", "beta1", "beta2",
              "epsilon", "l2_lambda", "seed", "same_fraction", "class_balanced",
              "pair_class_key", "pretrain_epochs", "pretrain_steps_per_epoch"});
  TrainConfig config = base;
  config.batch_size = field<int>(j, "train", "batch_size", config.batch_size);
  config.epochs = field<int>(j, "train", "epochs", config.epochs);
  config.steps_per_epoch = field<int>(j, "train", "steps_per_epoch", config.steps_per_epoch);
  config.adam.lr = field<float>(j, "train", "lr", config.adam.lr);
  config.adam.beta1 = field<float>(j, "train", "beta1", config.adam.beta1);
  config.adam.beta2 = field<float>(j, "train", "beta2", config.adam.beta2);
  config.adam.epsilon = field<float>(j, "train", "epsilon", config.adam.epsilon);
  config.l2_lambda = field<double>(j, "train", "l2_lambda", config.l2_lambda);
  config.seed = field<std::uint64_t>(j, "train", "seed", config.seed);
  config.same_fraction = field<double>(j, "train", "same_fraction", config.same_fraction);
  config.class_balanced = field<bool>(j, "train", "class_balanced", config.class_balanced);
  config.pair_class_key =
      field<std::string>(j, "train", "pair_class_key", config.pair_class_key);
  config.pretrain_epochs = field<int>(j, "train", "pretrain_epochs", config.pretrain_epochs);
  config.pretrain_steps_per_epoch = field<int>(
      j, "train", "pretrain_steps_per_epoch", config.pretrain_steps_per_epoch);
  return config;
}

ConsensusPolicy parse_consensus(const json& j) {
  check_keys(j, "consensus",
             {"rule", "k", "resample_per_query", "seed", "vote_threshold"});
  ConsensusPolicy policy;
  policy.rule = consensus_rule_from_name(
      field<std::string>(j, "consensus", "rule", consensus_rule_name(policy.rule)));
  if (j.contains("k")) {
    const json& k = j.at("k");
    if (k.is_string()) {
      policy.k = parse_k(k.get<std::string>());
    } else if (k.is_number_integer()) {
      policy.k = k.get<int>();
    } else {
      throw FormatError("consensus.k: expected an integer or \"ALL\"");
    }
  }
  policy.resample_per_query =
      field<bool>(j, "consensus", "resample_per_query", policy.resample_per_query);
  policy.seed = field<std::uint64_t>(j, "consensus", "seed", policy.seed);
  policy.vote_threshold =
      field<double>(j, "consensus", "vote_threshold", policy.vote_threshold);
  if (policy.k != kAllExemplars && policy.k < 1) {
    throw FormatError("consensus.k: must be at least 1 or \"ALL\"");
  }
  return policy;
}

}  // namespace

int parse_k(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "all") return kAllExemplars;
  try {
    std::size_t used = 0;
    const int k = std::stoi(text, &used);
    if (used != text.size() || k < 1) throw std::invalid_argument(text);
    return k;
  } catch (const std::exception&) {
    throw FormatError("k: expected a positive integer or \"ALL\", got \"" + text + "\"");
  }
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, "config", {"dataset", "model", "train", "consensus", "out_dir"});
  RunConfig config;
  if (j.contains("dataset")) config.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"encoder", "merge"});
    if (m.contains("encoder")) config.encoder = parse_encoder(m.at("encoder"));
    if (m.contains("merge")) {
      config.merge = merge_from_name(m.at("merge").get<std::string>());
    }
  }
  TrainConfig base = siamese_defaults();
  if (j.contains("train")) {
    config.train = parse_train(j.at("train"), base);
  } else {
    config.train = base;
  }
  if (j.contains("consensus")) config.consensus = parse_consensus(j.at("consensus"));
  config.out_dir = field<std::string>(j, "config", "out_dir", config.out_dir);

  config.train.encoder = config.encoder;
  config.train.merge = config.merge;
  validate_encoder_config(config.encoder);
  return config;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

nlohmann::json run_config_json(const RunConfig& config) {
  json dataset;
  if (!config.dataset.path.empty()) {
    dataset["path"] = config.dataset.path;
    if (!config.dataset.labels.empty()) dataset["labels"] = config.dataset.labels;
  } else {
    json synth;
    synth["kind"] = config.dataset.synth_kind;
    if (config.dataset.synth_kind == "script") {
      const auto& s = config.dataset.script;
      synth["chars0"] = s.chars0;
      synth["chars1"] = s.chars1;
      synth["writers"] = s.writers;
      synth["style_gap"] = s.style_gap;
      synth["char_var"] = s.char_var;
      synth["writer_var"] = s.writer_var;
      synth["noise"] = s.noise;
      synth["seed"] = s.seed;
    } else if (config.dataset.synth_kind == "pretrain") {
      const auto& p = config.dataset.pretrain;
      synth["n_alphabets"] = p.n_alphabets;
      synth["chars_per_alphabet"] = p.chars_per_alphabet;
      synth["writers"] = p.writers;
      synth["char_var"] = p.char_var;
      synth["writer_var"] = p.writer_var;
      synth["noise"] = p.noise;
      synth["seed"] = p.seed;
    } else {
      synth["glyph_chars"] = config.dataset.glyph_chars;
      synth["glyph_instances"] = config.dataset.glyph_instances;
      synth["glyph_bias"] = config.dataset.glyph_bias;
      synth["seed"] = config.dataset.glyph_seed;
    }
    dataset["synth"] = synth;
  }
  dataset["resize"] = config.dataset.resize;
  dataset["split"] = {{"kind", split_kind_name(config.dataset.split.kind)},
                      {"fraction", config.dataset.split.fraction},
                      {"seed", config.dataset.split.seed}};

  json consensus;
  consensus["rule"] = consensus_rule_name(config.consensus.rule);
  if (config.consensus.k == kAllExemplars) {
    consensus["k"] = "ALL";
  } else {
    consensus["k"] = config.consensus.k;
  }
  consensus["resample_per_query"] = config.consensus.resample_per_query;
  consensus["seed"] = config.consensus.seed;
  consensus["vote_threshold"] = config.consensus.vote_threshold;

  return json{
      {"dataset", dataset},
      {"model",
       {{"encoder", encoder_config_json(config.encoder)},
        {"merge", merge_name(config.merge)}}},
      {"train",
       {{"batch_size", config.train.batch_size},
        {"epochs", config.train.epochs},
        {"steps_per_epoch", config.train.steps_per_epoch},
        {"lr", config.train.adam.lr},
        {"beta1", config.train.adam.beta1},
        {"beta2", config.train.adam.beta2},
        {"epsilon", config.train.adam.epsilon},
        {"l2_lambda", config.train.l2_lambda},
        {"seed", config.train.seed},
        {"same_fraction", config.train.same_fraction},
        {"class_balanced", config.train.class_balanced},
        {"pair_class_key", config.train.pair_class_key},
        {"pretrain_epochs", config.train.pretrain_epochs},
        {"pretrain_steps_per_epoch", config.train.pretrain_steps_per_epoch}}},
      {"consensus", consensus},
      {"out_dir", config.out_dir}};
}

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides) {
  if (overrides.seed) {
    config.dataset.split.seed = *overrides.seed;
    config.train.seed = *overrides.seed;
    config.consensus.seed = *overrides.seed;
  }
  if (overrides.out) config.out_dir = *overrides.out;
  if (overrides.k) config.consensus.k = parse_k(*overrides.k);
  if (overrides.rule) {
    config.consensus.rule = consensus_rule_from_name(*overrides.rule);
  }
  if (overrides.merge) {
    config.merge = merge_from_name(*overrides.merge);
    config.train.merge = config.merge;
  }
  if (overrides.task) {
    std::string t = *overrides.task;
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "inst") {
      config.dataset.split.kind = SplitKind::INST;
    } else if (t == "symb") {
      config.dataset.split.kind = SplitKind::SYMB;
    } else if (t == "random") {
      config.dataset.split.kind = SplitKind::RANDOM_FRACTION;
    } else {
      throw FormatError("task: expected inst, symb, or random, got \"" + *overrides.task +
                        "\"");
    }
  }
}

DatasetTable load_dataset(const DatasetSpec& spec) {
  if (!spec.path.empty()) {
    std::filesystem::path root(spec.path);
    if (root.is_relative()) {
      if (const char* env = std::getenv("PAIRSIM_DATA_ROOT")) {
        root = std::filesystem::path(env) / root;
      }
    }
    if (spec.labels.empty()) {
      throw FormatError("dataset.labels: folder ingestion needs a class-to-label map");
    }
    IngestConfig config;
    config.resize = spec.resize;
    return load_image_folder(root, spec.labels, config);
  }
  if (spec.synth_kind == "script") return synth_script_corpus(spec.script);
  if (spec.synth_kind == "pretrain") return synth_pretrain_corpus(spec.pretrain);
  return synth_glyphs(2, spec.glyph_chars, spec.glyph_instances, spec.glyph_bias,
                      spec.glyph_seed);
}

}  // namespace pairsim
