#pragma once

#include <cstdint>

#include "pairsim/dataset.hpp"

namespace pairsim {

// Procedural door-frame glyphs for domain-shift unit tests. Class 1 frames
// are closed by a bottom stroke, class 0 frames are open; that geometry is
// the label. Each image additionally carries a nuisance background patch
// ("sky" seen through the frame) whose correlation with the label is
// bias_strength in the "location A" subset and zero in "location B".
// Groups: alphabet="glyphs", character, writer, location ("A"/"B"),
// nuisance ("on"/"off").
DatasetTable synth_glyphs(int n_classes, int chars_per_class, int instances_per_char,
                          double bias_strength, std::uint64_t seed);

// Two-script handwriting surrogate: task_label 0 = angular script, 1 = curvy
// script. Characters are stroke compositions drawn from their script's style
// distribution; instances rerender a character under writer jitter (affine,
// thickness, endpoint noise). style_gap separates the two style
// distributions, char_var spreads characters within a script, writer_var
// scales instance variation.
struct ScriptCorpusConfig {
  int chars0 = 47;
  int chars1 = 40;
  int writers = 20;
  double style_gap = 0.75;
  double char_var = 0.45;
  double writer_var = 2.0;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

DatasetTable synth_script_corpus(const ScriptCorpusConfig& config);

// Corpus of additional alphabets, each with its own randomly drawn style,
// class-disjoint from any script corpus by id and character namespace.
// task_label alternates with character index so both labels exist; pair
// sampling for pre-training keys on the "character" group instead.
struct PretrainCorpusConfig {
  int n_alphabets = 48;
  int chars_per_alphabet = 14;
  int writers = 8;
  double char_var = 0.45;
  double writer_var = 1.0;
  double noise = 0.04;
  std::uint64_t seed = 1;
};

DatasetTable synth_pretrain_corpus(const PretrainCorpusConfig& config);

}  // namespace pairsim
