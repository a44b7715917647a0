#include "pairsim/experiments.hpp"

#include <cmath>
#include <fstream>

#include "pairsim/rng.hpp"

namespace pairsim {

Predictor direct_predictor(const DirectClassifier& model) {
  return [&model](const LabeledImage& img) { return model.predict(img.pixels) > 0.5f ? 1 : 0; };
}

Predictor consensus_predictor(const ConsensusPolicy& policy, PairScorer scorer,
                              const DatasetTable& train) {
  return [policy, scorer = std::move(scorer), &train](const LabeledImage& img) {
    return classify(img, policy, scorer, train).predicted;
  };
}

EvalReport evaluate_accuracy(const Predictor& predictor, const DatasetTable& test) {
  if (test.empty()) throw DomainError("evaluate_accuracy: test table is empty");
  EvalReport report;
  report.n = test.size();
  std::size_t class_total[2] = {0, 0};
  std::size_t class_correct[2] = {0, 0};
  for (const auto& img : test.images()) {
    const int predicted = predictor(img);
    ++class_total[img.task_label];
    if (predicted == img.task_label) {
      ++report.correct;
      ++class_correct[img.task_label];
    }
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.n);
  for (int label = 0; label < 2; ++label) {
    report.recall[label] = class_total[label] == 0
                               ? 0.0
                               : static_cast<double>(class_correct[label]) /
                                     static_cast<double>(class_total[label]);
  }
  return report;
}

AgreementMatrix agreement_analysis(const Predictor& a, const Predictor& b,
                                   const DatasetTable& test) {
  if (test.empty()) throw DomainError("agreement_analysis: test table is empty");
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};  // [a correct][b correct]
  for (const auto& img : test.images()) {
    const int ca = a(img) == img.task_label ? 1 : 0;
    const int cb = b(img) == img.task_label ? 1 : 0;
    ++counts[ca][cb];
  }
  const double n = static_cast<double>(test.size());
  AgreementMatrix m;
  m.both_correct = counts[1][1] / n;
  m.only_a = counts[1][0] / n;
  m.only_b = counts[0][1] / n;
  m.both_wrong = counts[0][0] / n;
  return m;
}

nlohmann::json agreement_json(const AgreementMatrix& m) {
  return {{"both_correct", m.both_correct},
          {"only_a", m.only_a},
          {"only_b", m.only_b},
          {"both_wrong", m.both_wrong},
          {"accuracy_a", m.both_correct + m.only_a},
          {"accuracy_b", m.both_correct + m.only_b}};
}

MultiSplitReport multi_split_experiment(const DatasetTable& table, SplitKind task,
                                        int n_splits, double fraction,
                                        const std::vector<Method>& methods,
                                        std::uint64_t base_seed) {
  if (n_splits < 2) {
    throw DomainError("multi_split_experiment: n_splits must be at least 2, got " +
                      std::to_string(n_splits));
  }
  if (methods.empty()) throw DomainError("multi_split_experiment: no methods given");

  MultiSplitReport report;
  report.task = task;
  report.n_splits = n_splits;
  report.fraction = fraction;
  report.base_seed = base_seed;
  for (const auto& method : methods) {
    report.methods.push_back(MethodSummary{method.name, {}, {}, 0.0, 0.0, 0});
  }

  for (int s = 0; s < n_splits; ++s) {
    const std::uint64_t split_seed = derive_seed(base_seed, "split", static_cast<std::uint64_t>(s));
    SplitResult split = make_split(table, SplitSpec{task, fraction, split_seed});
    const std::uint64_t method_seed = derive_seed(base_seed, "method", static_cast<std::uint64_t>(s));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto& summary = report.methods[m];
      try {
        summary.per_split.push_back(methods[m].run(split, method_seed));
      } catch (const Error& e) {
        summary.per_split.push_back(std::nullopt);
        summary.errors.push_back("split " + std::to_string(s) + ": " + e.what());
        ++summary.failures;
      }
    }
  }

  for (auto& summary : report.methods) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& acc : summary.per_split) {
      if (acc) {
        sum += *acc;
        ++n;
      }
    }
    summary.mean = n == 0 ? 0.0 : sum / static_cast<double>(n);
    double sq = 0.0;
    for (const auto& acc : summary.per_split) {
      if (acc) sq += (*acc - summary.mean) * (*acc - summary.mean);
    }
    summary.stddev = n < 2 ? 0.0 : std::sqrt(sq / static_cast<double>(n - 1));
  }
  return report;
}

nlohmann::json multi_split_json(const MultiSplitReport& report) {
  nlohmann::json j;
  j["task"] = split_kind_name(report.task);
  j["n_splits"] = report.n_splits;
  j["fraction"] = report.fraction;
  j["base_seed"] = report.base_seed;
  j["methods"] = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json jm;
    jm["name"] = m.name;
    jm["mean"] = m.mean;
    jm["stddev"] = m.stddev;
    jm["failures"] = m.failures;
    jm["errors"] = m.errors;
    jm["per_split"] = nlohmann::json::array();
    for (const auto& acc : m.per_split) {
      if (acc) {
        jm["per_split"].push_back(*acc);
      } else {
        jm["per_split"].push_back(nullptr);
      }
    }
    j["methods"].push_back(jm);
  }
  return j;
}

void write_multi_split_csv(const std::filesystem::path& path,
                           const MultiSplitReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report to " + path.string());
  out << "split,method,accuracy,status\n";
  for (int s = 0; s < report.n_splits; ++s) {
    for (const auto& m : report.methods) {
      const auto& acc = m.per_split[static_cast<std::size_t>(s)];
      out << s << "," << m.name << ",";
      if (acc) {
        out << *acc << ",ok\n";
      } else {
        out << ",failed\n";
      }
    }
  }
}

L2GridResult grid_search_l2(const DatasetTable& train, const DatasetTable& val,
                            const std::vector<double>& lambdas,
                            const TrainConfig& config) {
  if (lambdas.empty()) throw DomainError("grid_search_l2: lambdas must be non-empty");

  std::optional<L2GridResult> best;
  double best_acc = -1.0;
  std::vector<std::pair<double, double>> accuracies;
  for (double lambda : lambdas) {
    TrainConfig c = config;
    c.l2_lambda = lambda;
    DirectTrainResult trained = train_direct(train, c);
    const double acc = evaluate_accuracy(direct_predictor(trained.model), val).accuracy;
    accuracies.emplace_back(lambda, acc);
    if (acc > best_acc) {  // strict: first best wins ties
      best_acc = acc;
      best.emplace(L2GridResult{lambda, {}, std::move(trained.model)});
    }
  }
  best->accuracies = std::move(accuracies);
  return std::move(*best);
}

std::string config_hash(const nlohmann::json& config) {
  const std::string dumped = config.dump();
  const std::uint64_t h = fnv1a(dumped);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace pairsim
