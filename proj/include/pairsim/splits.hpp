#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "pairsim/dataset.hpp"

namespace pairsim {

enum class SplitKind { INST, SYMB, RANDOM_FRACTION };

std::string split_kind_name(SplitKind kind);
SplitKind split_kind_from_name(const std::string& name);

struct SplitSpec {
  SplitKind kind = SplitKind::INST;
  double fraction = 0.3;
  std::uint64_t seed = 0;
};

struct SplitResult {
  DatasetTable train;
  DatasetTable test;
  SplitSpec spec;
};

// Instance-level split, stratified per task label: every character may appear
// on both sides, only the instances differ. When a class's per-character
// instance counts are uniform (m each), the train quota is
// round(fraction * n_characters) * m so whole characters' worth of instances
// are budgeted; otherwise round(fraction * class_size). Sampling is uniform
// over instances either way.
SplitResult split_inst(const DatasetTable& table, double fraction, std::uint64_t seed);

// Character-level split: all instances of a character land on the same side,
// round(fraction * n_characters) characters per class go to train.
SplitResult split_symb(const DatasetTable& table, double fraction, std::uint64_t seed);

// Plain stratified instance split; round(fraction * class_size) per class.
SplitResult split_random_fraction(const DatasetTable& table, double fraction,
                                  std::uint64_t seed);

SplitResult make_split(const DatasetTable& table, const SplitSpec& spec);

// Manifest schema: {kind, fraction, seed, train_ids, test_ids}.
nlohmann::json split_manifest(const SplitResult& result);
void write_split_manifest(const std::filesystem::path& path, const SplitResult& result);
// Rebuilds a split over `table` from a manifest, re-checking disjointness and
// coverage. Throws FormatError on schema violations.
SplitResult split_from_manifest(const DatasetTable& table, const nlohmann::json& manifest);
SplitResult read_split_manifest(const DatasetTable& table, const std::filesystem::path& path);

}  // namespace pairsim
