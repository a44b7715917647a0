#include "pairsim/consensus.hpp"

#include <fstream>
#include <unordered_map>

#include "pairsim/rng.hpp"

namespace pairsim {

namespace {

void check_policy(const ConsensusPolicy& policy) {
  if (policy.k != kAllExemplars && policy.k < 1) {
    throw DomainError("consensus: k must be positive or ALL, got " +
                      std::to_string(policy.k));
  }
  if (!(policy.vote_threshold > 0.0 && policy.vote_threshold < 1.0)) {
    throw DomainError("consensus: vote_threshold " + std::to_string(policy.vote_threshold) +
                      " outside (0,1)");
  }
}

double checked_similarity(const PairScorer& scorer, const LabeledImage& query,
                          const LabeledImage& exemplar) {
  const double y = scorer(query, exemplar);
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError("consensus: similarity " + std::to_string(y) + " for pair (" +
                      query.id + ", " + exemplar.id + ") outside (0,1)");
  }
  return y;
}

}  // namespace

PairScorer scorer_from_model(const SiameseSimilarity& model) {
  return [&model](const LabeledImage& query, const LabeledImage& exemplar) {
    return static_cast<double>(model.similarity(query.pixels, exemplar.pixels));
  };
}

PairScorer caching_scorer(const SiameseSimilarity& model) {
  auto cache = std::make_shared<std::unordered_map<std::string, Tensor>>();
  return [&model, cache](const LabeledImage& query, const LabeledImage& exemplar) {
    auto embed = [&](const LabeledImage& img) -> const Tensor& {
      auto it = cache->find(img.id);
      if (it == cache->end()) it = cache->emplace(img.id, model.embed(img.pixels)).first;
      return it->second;
    };
    const Tensor& eq = embed(query);
    const Tensor& ee = embed(exemplar);
    return static_cast<double>(model.similarity_from_embeddings(eq, ee));
  };
}

ExemplarSet sample_exemplars(const DatasetTable& train, int k, std::uint64_t seed) {
  if (k != kAllExemplars && k < 1) {
    throw DomainError("sample_exemplars: k must be positive or ALL, got " +
                      std::to_string(k));
  }
  ExemplarSet set;
  for (int label = 0; label < 2; ++label) {
    std::vector<std::size_t> members = train.with_label(label);
    if (members.empty()) {
      throw DomainError("sample_exemplars: class " + std::to_string(label) +
                        " has no training images");
    }
    if (k != kAllExemplars) {
      if (static_cast<std::size_t>(k) > members.size()) {
        throw DomainError("sample_exemplars: k=" + std::to_string(k) + " exceeds class " +
                          std::to_string(label) + " size " + std::to_string(members.size()));
      }
      Rng rng(derive_seed(seed, "exemplars", static_cast<std::uint64_t>(label)));
      rng.shuffle(members);
      members.resize(static_cast<std::size_t>(k));
    }
    for (std::size_t i : members) set.per_class[label].push_back(train.at(i));
  }
  return set;
}

ClassScores score_average(const LabeledImage& query, const ExemplarSet& exemplars,
                          const PairScorer& scorer) {
  ClassScores out;
  for (int label = 0; label < 2; ++label) {
    const auto& reps = exemplars.per_class[label];
    if (reps.empty()) {
      throw ContractError("score_average: exemplar set has no class " +
                          std::to_string(label) + " representatives");
    }
    double acc = 0.0;
    for (const auto& rep : reps) {
      const double y = checked_similarity(scorer, query, rep);
      out.similarities[label].push_back(y);
      acc += y;
    }
    out.s[label] = acc / static_cast<double>(reps.size());
  }
  return out;
}

VoteScores score_vote(const LabeledImage& query, const ExemplarSet& exemplars,
                      const PairScorer& scorer, double threshold) {
  VoteScores out;
  out.scores = score_average(query, exemplars, scorer);
  for (int label = 0; label < 2; ++label) {
    for (double y : out.scores.similarities[label]) {
      if (y > threshold) ++out.votes[label];
    }
  }
  return out;
}

std::string consensus_rule_name(ConsensusRule rule) {
  return rule == ConsensusRule::AVERAGE ? "average" : "vote";
}

ConsensusRule consensus_rule_from_name(const std::string& name) {
  if (name == "average") return ConsensusRule::AVERAGE;
  if (name == "vote") return ConsensusRule::VOTE;
  throw FormatError("unknown consensus rule '" + name + "'");
}

ClassificationOutcome classify(const LabeledImage& query, const ConsensusPolicy& policy,
                               const PairScorer& scorer, const DatasetTable& train) {
  check_policy(policy);
  const std::uint64_t draw_seed =
      policy.resample_per_query ? derive_seed(policy.seed, "query", fnv1a(query.id))
                                : derive_seed(policy.seed, "fixed");
  const ExemplarSet exemplars = sample_exemplars(train, policy.k, draw_seed);

  ClassificationOutcome out;
  out.query_id = query.id;
  out.true_label = query.task_label;

  if (policy.rule == ConsensusRule::AVERAGE) {
    const ClassScores scores = score_average(query, exemplars, scorer);
    out.s[0] = scores.s[0];
    out.s[1] = scores.s[1];
    out.similarities[0] = scores.similarities[0];
    out.similarities[1] = scores.similarities[1];
    if (scores.s[1] > scores.s[0]) {
      out.predicted = 1;
    } else if (scores.s[0] > scores.s[1]) {
      out.predicted = 0;
    } else {
      out.predicted = 0;
      out.tie_broken = true;
    }
    return out;
  }

  const VoteScores votes = score_vote(query, exemplars, scorer, policy.vote_threshold);
  out.s[0] = votes.scores.s[0];
  out.s[1] = votes.scores.s[1];
  out.similarities[0] = votes.scores.similarities[0];
  out.similarities[1] = votes.scores.similarities[1];
  out.votes[0] = votes.votes[0];
  out.votes[1] = votes.votes[1];
  if (votes.votes[1] > votes.votes[0]) {
    out.predicted = 1;
  } else if (votes.votes[0] > votes.votes[1]) {
    out.predicted = 0;
  } else {
    out.tie_broken = true;
    if (votes.scores.s[1] > votes.scores.s[0]) {
      out.predicted = 1;
    } else {
      out.predicted = 0;  // average fallback, then class 0
    }
  }
  return out;
}

std::vector<ClassificationOutcome> classify_all(const DatasetTable& test,
                                                const ConsensusPolicy& policy,
                                                const PairScorer& scorer,
                                                const DatasetTable& train) {
  std::vector<ClassificationOutcome> outcomes;
  outcomes.reserve(test.size());
  for (const auto& img : test.images()) {
    outcomes.push_back(classify(img, policy, scorer, train));
  }
  return outcomes;
}

double accuracy_from_outcomes(const std::vector<ClassificationOutcome>& outcomes) {
  if (outcomes.empty()) throw DomainError("accuracy_from_outcomes: no outcomes");
  std::size_t correct = 0;
  for (const auto& o : outcomes) {
    if (o.predicted == o.true_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

nlohmann::json outcome_json(const ClassificationOutcome& outcome,
                            const ConsensusPolicy& policy) {
  nlohmann::json j;
  j["query_id"] = outcome.query_id;
  j["rule"] = consensus_rule_name(policy.rule);
  if (policy.k == kAllExemplars) {
    j["k"] = "ALL";
  } else {
    j["k"] = policy.k;
  }
  j["S_0"] = outcome.s[0];
  j["S_1"] = outcome.s[1];
  j["similarities"] = {{"0", outcome.similarities[0]}, {"1", outcome.similarities[1]}};
  if (policy.rule == ConsensusRule::VOTE) {
    j["votes_0"] = outcome.votes[0];
    j["votes_1"] = outcome.votes[1];
  }
  j["predicted"] = outcome.predicted;
  j["true"] = outcome.true_label;
  j["tie_broken"] = outcome.tie_broken;
  return j;
}

void write_outcome_log(const std::filesystem::path& path,
                       const std::vector<ClassificationOutcome>& outcomes,
                       const ConsensusPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write outcome log to " + path.string());
  for (const auto& o : outcomes) out << outcome_json(o, policy).dump() << "\n";
}

}  // namespace pairsim
