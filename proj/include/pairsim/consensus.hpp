#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "pairsim/dataset.hpp"
#include "pairsim/models.hpp"

namespace pairsim {

// Similarity evaluator used by the consensus logic: (query, exemplar) -> (0,1).
// Decoupled from the model type so tests can plug in stubbed similarities.
using PairScorer =
    std::function<double(const LabeledImage& query, const LabeledImage& exemplar)>;

PairScorer scorer_from_model(const SiameseSimilarity& model);

// Scorer that computes each distinct image's embedding once and finishes
// pairs through the head alone; results match scorer_from_model exactly
// because the branches are deterministic. Copies share one cache. Not for
// concurrent use.
PairScorer caching_scorer(const SiameseSimilarity& model);

inline constexpr int kAllExemplars = -1;

struct ExemplarSet {
  std::vector<LabeledImage> per_class[2];
};

// Uniform draw without replacement of k exemplars per class (all of them for
// k = kAllExemplars). Deterministic under seed. Throws DomainError when k
// exceeds a class size or a class is empty.
ExemplarSet sample_exemplars(const DatasetTable& train, int k, std::uint64_t seed);

struct ClassScores {
  double s[2] = {0.0, 0.0};
  std::vector<double> similarities[2];  // per-exemplar, in exemplar-set order
};

// S_c = mean of scorer(query, exemplar) over class c's exemplars.
ClassScores score_average(const LabeledImage& query, const ExemplarSet& exemplars,
                          const PairScorer& scorer);

struct VoteScores {
  int votes[2] = {0, 0};  // similarities strictly above the threshold
  ClassScores scores;
};

VoteScores score_vote(const LabeledImage& query, const ExemplarSet& exemplars,
                      const PairScorer& scorer, double threshold = 0.5);

enum class ConsensusRule { AVERAGE, VOTE };

std::string consensus_rule_name(ConsensusRule rule);
ConsensusRule consensus_rule_from_name(const std::string& name);

struct ConsensusPolicy {
  ConsensusRule rule = ConsensusRule::AVERAGE;
  int k = kAllExemplars;
  bool resample_per_query = true;
  std::uint64_t seed = 0;
  double vote_threshold = 0.5;
};

struct ClassificationOutcome {
  std::string query_id;
  int true_label = 0;
  double s[2] = {0.0, 0.0};
  std::vector<double> similarities[2];
  int votes[2] = {0, 0};  // zero when rule is AVERAGE
  int predicted = 0;
  bool tie_broken = false;
};

// Samples exemplars (per query when resample_per_query, with the draw keyed
// on the query id so processing order is irrelevant; one fixed set
// otherwise), scores by the policy's rule, and decides by argmax. Ties fall
// back from votes to average scores to class 0, recording tie_broken.
ClassificationOutcome classify(const LabeledImage& query, const ConsensusPolicy& policy,
                               const PairScorer& scorer, const DatasetTable& train);

std::vector<ClassificationOutcome> classify_all(const DatasetTable& test,
                                                const ConsensusPolicy& policy,
                                                const PairScorer& scorer,
                                                const DatasetTable& train);

double accuracy_from_outcomes(const std::vector<ClassificationOutcome>& outcomes);

// One outcome-log line: {query_id, rule, k, S_0, S_1, similarities,
// predicted, true, tie_broken} (k is "ALL" in all-exemplars mode; vote runs
// add votes_0/votes_1).
nlohmann::json outcome_json(const ClassificationOutcome& outcome,
                            const ConsensusPolicy& policy);

void write_outcome_log(const std::filesystem::path& path,
                       const std::vector<ClassificationOutcome>& outcomes,
                       const ConsensusPolicy& policy);

}  // namespace pairsim
