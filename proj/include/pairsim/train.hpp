#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pairsim/dataset.hpp"
#include "pairsim/models.hpp"
#include "pairsim/optim.hpp"

namespace pairsim {

struct TrainConfig {
  EncoderConfig encoder;
  Merge merge = Merge::CONCAT;  // Siamese only

  int batch_size = 16;
  int epochs = 5;
  // Steps per epoch. Pair training samples its batches, so the budget is
  // explicit; 0 means "full pass" for direct training and is an error for
  // pair training.
  int steps_per_epoch = 100;

  AdamConfig adam;
  double l2_lambda = 0.0;
  std::uint64_t seed = 0;

  // Pair sampling (Siamese only).
  double same_fraction = 0.5;
  bool class_balanced = true;
  // Group key defining "same" for pair sampling; empty keys on task_label.
  // Pre-training sets "character".
  std::string pair_class_key;

  // Stage-1 budget for pretrain_then_finetune; 0 reuses epochs/steps_per_epoch.
  int pretrain_epochs = 0;
  int pretrain_steps_per_epoch = 0;

  // Optional surrogate corpus for pre-training, consumed by the CLI driver.
  const DatasetTable* pretrain = nullptr;
};

TrainConfig direct_defaults();   // batch 32
TrainConfig siamese_defaults();  // batch 16

void validate_train_config(const TrainConfig& config, bool pair_training);

struct TrainLog {
  std::vector<double> losses;              // one entry per optimization step
  std::vector<std::size_t> stage_starts;   // first step index of each stage
};

// step,loss,stage rows.
void write_loss_csv(const std::filesystem::path& path, const TrainLog& log);

struct DirectTrainResult {
  DirectClassifier model;
  TrainLog log;
};

struct SiameseTrainResult {
  SiameseSimilarity model;
  TrainLog log;
};

struct PretrainResult {
  SiameseSimilarity model;          // after both stages
  SiameseSimilarity pretrain_only;  // snapshot at the stage boundary
  TrainLog log;                     // stage_starts marks the fine-tune start
};

// ADAM on mean BCE (+ L2 penalty over weights) over shuffled minibatches of
// the table. Deterministic under config.seed. Throws TrainingError with the
// step index if the loss stops being finite.
DirectTrainResult train_direct(const DatasetTable& train, const TrainConfig& config);

// Same loss on sampled pair batches: F(a,b) against the same-flag.
SiameseTrainResult train_siamese(const DatasetTable& train, const TrainConfig& config);

// Stage 1: pair training on the surrogate corpus, keyed on "character".
// Stage 2: fine-tunes all parameters on the target task's pairs. The corpora
// must be class-disjoint (ids and characters); overlap is a ContractError.
PretrainResult pretrain_then_finetune(const DatasetTable& pretrain,
                                      const DatasetTable& target,
                                      const TrainConfig& config);

}  // namespace pairsim
