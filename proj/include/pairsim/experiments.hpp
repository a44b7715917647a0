#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pairsim/consensus.hpp"
#include "pairsim/splits.hpp"
#include "pairsim/train.hpp"

namespace pairsim {

// Hard label prediction for one image.
using Predictor = std::function<int(const LabeledImage&)>;

Predictor direct_predictor(const DirectClassifier& model);  // threshold at 0.5
Predictor consensus_predictor(const ConsensusPolicy& policy, PairScorer scorer,
                              const DatasetTable& train);

struct EvalReport {
  double accuracy = 0.0;
  double recall[2] = {0.0, 0.0};  // per-class
  std::size_t n = 0;
  std::size_t correct = 0;
};

EvalReport evaluate_accuracy(const Predictor& predictor, const DatasetTable& test);

struct AgreementMatrix {
  double both_correct = 0.0;
  double only_a = 0.0;  // A right, B wrong
  double only_b = 0.0;
  double both_wrong = 0.0;
};

// Four disjoint fractions over the test set; they sum to 1 and each method's
// accuracy equals both_correct plus its own exclusive fraction.
AgreementMatrix agreement_analysis(const Predictor& a, const Predictor& b,
                                   const DatasetTable& test);

nlohmann::json agreement_json(const AgreementMatrix& m);

// One experimental method: trains/evaluates on a split and returns test
// accuracy. Injectable so stability studies run with stub methods in tests.
struct Method {
  std::string name;
  std::function<double(const SplitResult& split, std::uint64_t seed)> run;
};

struct MethodSummary {
  std::string name;
  // One entry per split; nullopt where the method failed.
  std::vector<std::optional<double>> per_split;
  std::vector<std::string> errors;  // messages of failed splits
  double mean = 0.0;
  double stddev = 0.0;  // sample std over succeeded splits
  std::size_t failures = 0;
};

struct MultiSplitReport {
  SplitKind task = SplitKind::INST;
  int n_splits = 0;
  double fraction = 0.3;
  std::uint64_t base_seed = 0;
  std::vector<MethodSummary> methods;
};

// Runs every method on n_splits splits of the table (seeds derived from
// base_seed per split). A method failing on one split is recorded, excluded
// from its statistics, and counted; the run continues.
MultiSplitReport multi_split_experiment(const DatasetTable& table, SplitKind task,
                                        int n_splits, double fraction,
                                        const std::vector<Method>& methods,
                                        std::uint64_t base_seed);

nlohmann::json multi_split_json(const MultiSplitReport& report);
// One row per split x method: split,method,accuracy,status.
void write_multi_split_csv(const std::filesystem::path& path,
                           const MultiSplitReport& report);

struct L2GridResult {
  double best_lambda = 0.0;
  std::vector<std::pair<double, double>> accuracies;  // (lambda, val accuracy)
  DirectClassifier best_model;
};

// Trains one direct model per lambda on `train`, evaluates on `val`, picks
// the argmax accuracy (first best on ties).
L2GridResult grid_search_l2(const DatasetTable& train, const DatasetTable& val,
                            const std::vector<double>& lambdas,
                            const TrainConfig& config);

// Hex digest of a config document, stamped into report files.
std::string config_hash(const nlohmann::json& config);

}  // namespace pairsim
