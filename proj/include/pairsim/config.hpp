#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "pairsim/consensus.hpp"
#include "pairsim/ingest.hpp"
#include "pairsim/models.hpp"
#include "pairsim/splits.hpp"
#include "pairsim/synth.hpp"
#include "pairsim/train.hpp"

namespace pairsim {

// Dataset source: an image folder (path mode) or a procedural corpus. When
// `path` is relative it resolves against the PAIRSIM_DATA_ROOT environment
// variable if that is set.
struct DatasetSpec {
  std::string path;                   // folder mode when non-empty
  std::map<std::string, int> labels;  // class directory -> task label, folder mode
  int resize = 32;
  std::string synth_kind = "script";  // script | pretrain | glyphs
  ScriptCorpusConfig script;
  PretrainCorpusConfig pretrain;
  int glyph_chars = 12;
  int glyph_instances = 24;
  double glyph_bias = 0.8;
  std::uint64_t glyph_seed = 0;
  SplitSpec split;
};

// Whole-run configuration: parsed from one JSON tree, validated before any
// work starts, unknown keys rejected at every level.
struct RunConfig {
  DatasetSpec dataset;
  EncoderConfig encoder;
  Merge merge = Merge::SUBTRACT;
  TrainConfig train;  // encoder and merge are mirrored in by the parser
  ConsensusPolicy consensus;
  std::string out_dir = "runs/out";
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig read_run_config(const std::filesystem::path& path);

// Echo of the effective config; parsing it back yields the same RunConfig.
nlohmann::json run_config_json(const RunConfig& config);

// Command-line overrides; unset fields keep the file values. `seed` fans out
// to the split, training, and consensus seeds.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> k;  // integer text or "ALL"
  std::optional<std::string> rule;
  std::optional<std::string> merge;
  std::optional<std::string> task;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

// Materializes the dataset section: folder ingestion or synthesis.
DatasetTable load_dataset(const DatasetSpec& spec);

// Parses "ALL" (case-insensitive) or a non-negative integer exemplar count.
int parse_k(const std::string& text);

}  // namespace pairsim
