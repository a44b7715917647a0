#include "pairsim/train.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "pairsim/pairs.hpp"
#include "pairsim/rng.hpp"

namespace pairsim {

namespace {

Tensor stack_scalars(const std::vector<Tensor>& scalars) {
  Tensor out = scalars.front();
  for (std::size_t i = 1; i < scalars.size(); ++i) out = concat(out, scalars[i]);
  return out;
}

void record_step(TrainLog& log, const Tensor& loss, std::size_t step) {
  const double value = loss.item();
  if (!std::isfinite(value)) {
    throw TrainingError("loss diverged at step " + std::to_string(step));
  }
  log.losses.push_back(value);
}

// One optimization step; rethrows numeric failures as training divergence
// carrying the step index.
template <typename MakeLoss>
void optimize_step(ParameterMap& params, Adam& opt, TrainLog& log, std::size_t step,
                   double l2_lambda, MakeLoss&& make_loss) {
  try {
    Tape tape;
    Tensor loss = make_loss();
    if (l2_lambda > 0.0) {
      loss = add(loss, l2_penalty(params, l2_lambda));
    }
    backward(loss, tape);
    record_step(log, loss, step);
  } catch (const NumericError& e) {
    throw TrainingError("training diverged at step " + std::to_string(step) + ": " +
                        e.what());
  }
  opt.step();
}

void run_siamese_stage(SiameseSimilarity& model, Adam& opt, const DatasetTable& table,
                       const TrainConfig& config, int epochs, int steps_per_epoch,
                       const std::string& class_key, const char* stage, TrainLog& log) {
  if (steps_per_epoch < 1) {
    throw DomainError("train_siamese: steps_per_epoch must be positive for pair training");
  }
  if (class_key.empty() && !table.has_both_labels()) {
    throw DomainError("train_siamese: table must contain both task labels");
  }
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int s = 0; s < steps_per_epoch; ++s) {
      const std::size_t step = log.losses.size();
      const auto pairs = sample_pairs(
          table, config.batch_size, config.same_fraction,
          derive_seed(config.seed, std::string(stage) + "/pairs", step),
          config.class_balanced, class_key);
      optimize_step(model.params(), opt, log, step, config.l2_lambda, [&] {
        std::vector<Tensor> preds;
        std::vector<float> targets;
        preds.reserve(pairs.size());
        for (const auto& pair : pairs) {
          preds.push_back(model.forward(pair.a.pixels, pair.b.pixels));
          targets.push_back(static_cast<float>(pair.same));
        }
        return bce_loss(stack_scalars(preds), targets);
      });
    }
  }
}

}  // namespace

TrainConfig direct_defaults() {
  TrainConfig config;
  config.batch_size = 32;
  config.epochs = 32;
  config.steps_per_epoch = 0;
  return config;
}

TrainConfig siamese_defaults() {
  TrainConfig config;
  config.batch_size = 16;
  config.epochs = 1;
  config.steps_per_epoch = 3000;
  // CONCAT needs the head to invent a multiplicative same-or-not interaction
  // before any useful gradient reaches the encoder; at this model size that
  // bootstrap reliably stalls at chance loss. The difference input makes
  // "small gap means same" reachable by first-order steps, so pair training
  // defaults to SUBTRACT.
  config.merge = Merge::SUBTRACT;
  return config;
}

void validate_train_config(const TrainConfig& config, bool pair_training) {
  validate_encoder_config(config.encoder);
  if (config.batch_size < 1) {
    throw DomainError("train config: batch_size must be at least 1");
  }
  if (config.epochs < 1) throw DomainError("train config: epochs must be at least 1");
  if (config.steps_per_epoch < 0) {
    throw DomainError("train config: steps_per_epoch must be non-negative");
  }
  if (pair_training && config.steps_per_epoch == 0) {
    throw DomainError("train config: pair training needs an explicit steps_per_epoch");
  }
  if (config.l2_lambda < 0.0) {
    throw DomainError("train config: l2_lambda must be non-negative");
  }
  if (!(config.same_fraction >= 0.0 && config.same_fraction <= 1.0)) {
    throw DomainError("train config: same_fraction outside [0,1]");
  }
  if (config.pretrain_epochs < 0 || config.pretrain_steps_per_epoch < 0) {
    throw DomainError("train config: pre-training budgets must be non-negative");
  }
}

void write_loss_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss curve to " + path.string());
  out << "step,loss,stage\n";
  for (std::size_t i = 0; i < log.losses.size(); ++i) {
    std::size_t stage = 0;
    for (std::size_t b : log.stage_starts) {
      if (i >= b && b > 0) ++stage;
    }
    out << i << "," << log.losses[i] << "," << stage << "\n";
  }
}

DirectTrainResult train_direct(const DatasetTable& train, const TrainConfig& config) {
  validate_train_config(config, false);
  if (!train.has_both_labels()) {
    throw DomainError("train_direct: table must contain both task labels");
  }

  DirectTrainResult result{
      DirectClassifier(config.encoder, derive_seed(config.seed, "init")), TrainLog{}};
  Adam opt(result.model.params(), config.adam);
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    int steps_this_epoch = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      if (config.steps_per_epoch > 0 && steps_this_epoch >= config.steps_per_epoch) break;
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::size_t step = result.log.losses.size();
      optimize_step(result.model.params(), opt, result.log, step, config.l2_lambda, [&] {
        std::vector<Tensor> preds;
        std::vector<float> targets;
        preds.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
          const auto& img = train.at(order[i]);
          preds.push_back(result.model.forward(img.pixels));
          targets.push_back(static_cast<float>(img.task_label));
        }
        return bce_loss(stack_scalars(preds), targets);
      });
      ++steps_this_epoch;
    }
  }
  return result;
}

SiameseTrainResult train_siamese(const DatasetTable& train, const TrainConfig& config) {
  validate_train_config(config, true);
  SiameseTrainResult result{
      SiameseSimilarity(config.encoder, config.merge, derive_seed(config.seed, "init")),
      TrainLog{}};
  Adam opt(result.model.params(), config.adam);
  result.log.stage_starts = {0};
  run_siamese_stage(result.model, opt, train, config, config.epochs,
                    config.steps_per_epoch, config.pair_class_key, "main", result.log);
  return result;
}

PretrainResult pretrain_then_finetune(const DatasetTable& pretrain,
                                      const DatasetTable& target,
                                      const TrainConfig& config) {
  validate_train_config(config, true);

  std::unordered_set<std::string> target_ids, target_chars;
  for (const auto& img : target.images()) {
    target_ids.insert(img.id);
    auto it = img.groups.find("character");
    if (it != img.groups.end()) target_chars.insert(it->second);
  }
  for (const auto& img : pretrain.images()) {
    if (target_ids.count(img.id)) {
      throw ContractError("pretrain_then_finetune: image '" + img.id +
                          "' appears in both corpora");
    }
    auto it = img.groups.find("character");
    if (it != img.groups.end() && target_chars.count(it->second)) {
      throw ContractError("pretrain_then_finetune: character '" + it->second +
                          "' appears in both corpora");
    }
  }

  PretrainResult result{
      SiameseSimilarity(config.encoder, config.merge, derive_seed(config.seed, "init")),
      SiameseSimilarity(config.encoder, config.merge, 0), TrainLog{}};

  const int stage1_epochs =
      config.pretrain_epochs > 0 ? config.pretrain_epochs : config.epochs;
  const int stage1_spe = config.pretrain_steps_per_epoch > 0
                             ? config.pretrain_steps_per_epoch
                             : config.steps_per_epoch;

  result.log.stage_starts = {0};
  {
    Adam opt(result.model.params(), config.adam);
    run_siamese_stage(result.model, opt, pretrain, config, stage1_epochs, stage1_spe,
                      "character", "pretrain", result.log);
  }
  result.pretrain_only = result.model.clone();

  result.log.stage_starts.push_back(result.log.losses.size());
  {
    Adam opt(result.model.params(), config.adam);  // fresh moments for fine-tuning
    run_siamese_stage(result.model, opt, target, config, config.epochs,
                      config.steps_per_epoch, config.pair_class_key, "finetune",
                      result.log);
  }
  return result;
}

}  // namespace pairsim
