#pragma once

// Randomized property suites shared by the unit tests and the acceptance
// gate. Each suite runs `cases` independent trials and reports the first
// failure verbatim.

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pairsim/checkpoint.hpp"
#include "pairsim/consensus.hpp"
#include "pairsim/pairs.hpp"
#include "pairsim/rng.hpp"
#include "pairsim/splits.hpp"
#include "pairsim/synth.hpp"

namespace props {

using namespace pairsim;

struct PropertyResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0; }
};

inline void fail(PropertyResult& r, const std::string& message) {
  if (r.failures == 0) r.first_failure = message;
  r.failures++;
}

// Small corpus with randomized geometry so the properties see many shapes.
inline DatasetTable random_corpus(Rng& rng, int* min_group = nullptr) {
  ScriptCorpusConfig config;
  config.chars0 = static_cast<int>(rng.uniform_int(3, 8));
  config.chars1 = static_cast<int>(rng.uniform_int(3, 8));
  config.writers = static_cast<int>(rng.uniform_int(2, 5));
  config.seed = rng.next_u64();
  if (min_group) {
    *min_group = std::min({config.chars0, config.chars1, config.writers});
  }
  return synth_script_corpus(config);
}

// Fraction whose rounded quota lands strictly inside every group of size
// >= min_group, so the drawn split is always feasible.
inline double feasible_fraction(Rng& rng, int min_group) {
  const double lo = 0.5 / min_group + 0.02;
  const double hi = std::max(lo, std::min(0.6, 1.0 - 0.5 / min_group - 0.02));
  return rng.uniform_real(lo, hi);
}

// Deterministic pseudo-similarity in (0,1) keyed on both ids.
inline PairScorer hash_scorer(std::uint64_t salt) {
  return [salt](const LabeledImage& q, const LabeledImage& e) {
    std::uint64_t h = fnv1a(q.id, fnv1a(&salt, sizeof(salt)));
    h = fnv1a(e.id, h);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  };
}

inline std::set<std::string> id_set(const DatasetTable& table) {
  std::set<std::string> ids;
  for (const auto& img : table.images()) ids.insert(img.id);
  return ids;
}

inline PropertyResult prop_split_disjointness(std::size_t cases, std::uint64_t seed) {
  PropertyResult r{"split disjointness"};
  Rng rng(derive_seed(seed, "split-disjoint"));
  for (r.cases = 0; r.cases < cases; ++r.cases) {
    int min_group = 0;
    DatasetTable table = random_corpus(rng, &min_group);
    SplitSpec spec;
    const int kind = static_cast<int>(rng.uniform_int(0, 2));
    spec.kind = kind == 0   ? SplitKind::INST
                : kind == 1 ? SplitKind::SYMB
                            : SplitKind::RANDOM_FRACTION;
    spec.fraction = feasible_fraction(rng, min_group);
    spec.seed = rng.next_u64();
    SplitResult split = make_split(table, spec);

    const auto train_ids = id_set(split.train);
    const auto test_ids = id_set(split.test);
    std::vector<std::string> overlap;
    std::set_intersection(train_ids.begin(), train_ids.end(), test_ids.begin(),
                          test_ids.end(), std::back_inserter(overlap));
    if (!overlap.empty()) {
      fail(r, split_kind_name(spec.kind) + ": id on both sides: " + overlap.front());
      continue;
    }
    if (train_ids.size() + test_ids.size() != table.size()) {
      std::ostringstream os;
      os << split_kind_name(spec.kind) << ": " << train_ids.size() << " train + "
         << test_ids.size() << " test != " << table.size() << " total";
      fail(r, os.str());
    }
  }
  return r;
}

inline PropertyResult prop_symb_exclusivity(std::size_t cases, std::uint64_t seed) {
  PropertyResult r{"SYMB character exclusivity"};
  Rng rng(derive_seed(seed, "symb-exclusive"));
  for (r.cases = 0; r.cases < cases; ++r.cases) {
    int min_group = 0;
    DatasetTable table = random_corpus(rng, &min_group);
    SplitResult split =
        split_symb(table, feasible_fraction(rng, min_group), rng.next_u64());
    std::set<std::string> train_chars;
    for (const auto& img : split.train.images()) {
      train_chars.insert(img.groups.at("character"));
    }
    for (const auto& img : split.test.images()) {
      if (train_chars.count(img.groups.at("character"))) {
        fail(r, "character on both sides: " + img.groups.at("character"));
        break;
      }
    }
  }
  return r;
}

inline PropertyResult prop_pair_soundness(std::size_t cases, std::uint64_t seed) {
  PropertyResult r{"pair-label soundness"};
  Rng rng(derive_seed(seed, "pair-sound"));
  for (r.cases = 0; r.cases < cases; ++r.cases) {
    DatasetTable table = random_corpus(rng);
    const bool by_character = rng.bernoulli(0.3);
    const std::string key = by_character ? "character" : "";
    const double same_fraction = rng.uniform_real(0.0, 1.0);
    auto pairs = sample_pairs(table, 16, same_fraction, rng.next_u64(),
                              rng.bernoulli(0.5), key);
    if (pairs.size() != 16) {
      fail(r, "wrong pair count");
      continue;
    }
    for (const auto& p : pairs) {
      if (p.a.id == p.b.id) {
        fail(r, "pair of one image: " + p.a.id);
        break;
      }
      if (!table.contains(p.a.id) || !table.contains(p.b.id)) {
        fail(r, "pair member outside the table");
        break;
      }
      const bool same_key = by_character
                                ? p.a.groups.at("character") == p.b.groups.at("character")
                                : p.a.task_label == p.b.task_label;
      if ((p.same == 1) != same_key) {
        fail(r, "same flag contradicts the pair key for " + p.a.id + " / " + p.b.id);
        break;
      }
    }
  }
  return r;
}

inline PropertyResult prop_consensus_permutation(std::size_t cases, std::uint64_t seed) {
  PropertyResult r{"consensus permutation invariance"};
  Rng rng(derive_seed(seed, "consensus-perm"));
  for (r.cases = 0; r.cases < cases; ++r.cases) {
    PairScorer scorer = hash_scorer(rng.next_u64());
    DatasetTable table = random_corpus(rng);
    const LabeledImage& query = table.at(
        static_cast<std::size_t>(rng.uniform_below(table.size())));

    ExemplarSet exemplars =
        sample_exemplars(table, static_cast<int>(rng.uniform_int(1, 4)), rng.next_u64());
    ClassScores before = score_average(query, exemplars, scorer);
    VoteScores vote_before = score_vote(query, exemplars, scorer);
    ExemplarSet shuffled = exemplars;
    rng.shuffle(shuffled.per_class[0]);
    rng.shuffle(shuffled.per_class[1]);
    ClassScores after = score_average(query, shuffled, scorer);
    VoteScores vote_after = score_vote(query, shuffled, scorer);
    for (int c = 0; c < 2; ++c) {
      if (std::abs(before.s[c] - after.s[c]) > 1e-9) {
        fail(r, "average score moved under exemplar shuffle");
      }
      if (vote_before.votes[c] != vote_after.votes[c]) {
        fail(r, "vote count moved under exemplar shuffle");
      }
    }

    // Full-set consensus must not care about table order either.
    ConsensusPolicy policy;
    policy.k = kAllExemplars;
    policy.rule = rng.bernoulli(0.5) ? ConsensusRule::AVERAGE : ConsensusRule::VOTE;
    ClassificationOutcome direct = classify(query, policy, scorer, table);
    std::vector<std::size_t> order(table.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    ClassificationOutcome permuted =
        classify(query, policy, scorer, table.subset_by_indices(order));
    if (direct.predicted != permuted.predicted ||
        std::abs(direct.s[0] - permuted.s[0]) > 1e-9 ||
        std::abs(direct.s[1] - permuted.s[1]) > 1e-9 ||
        direct.votes[0] != permuted.votes[0] ||
        direct.votes[1] != permuted.votes[1]) {
      fail(r, "k=ALL outcome moved under table permutation for " + query.id);
    }
  }
  return r;
}

inline PropertyResult prop_tie_determinism(std::size_t cases, std::uint64_t seed) {
  PropertyResult r{"tie determinism"};
  Rng rng(derive_seed(seed, "tie-det"));
  for (r.cases = 0; r.cases < cases; ++r.cases) {
    DatasetTable table = random_corpus(rng);
    const LabeledImage& query = table.at(
        static_cast<std::size_t>(rng.uniform_below(table.size())));
    // Constant similarity: S_0 == S_1 exactly, so every rule lands in its
    // tie path. Values at/below threshold also zero out the votes.
    const double value = rng.bernoulli(0.5) ? 0.5 : rng.uniform_real(0.05, 0.95);
    PairScorer constant = [value](const LabeledImage&, const LabeledImage&) {
      return value;
    };
    ConsensusPolicy policy;
    policy.k = static_cast<int>(rng.uniform_int(1, 3));
    policy.rule = rng.bernoulli(0.5) ? ConsensusRule::AVERAGE : ConsensusRule::VOTE;
    policy.seed = rng.next_u64();

    ClassificationOutcome first = classify(query, policy, constant, table);
    ClassificationOutcome second = classify(query, policy, constant, table);
    if (first.predicted != second.predicted || first.tie_broken != second.tie_broken ||
        first.s[0] != second.s[0] || first.s[1] != second.s[1] ||
        first.votes[0] != second.votes[0] || first.votes[1] != second.votes[1]) {
      fail(r, "repeated classification disagrees for " + query.id);
      continue;
    }
    if (first.predicted != 0 || !first.tie_broken) {
      fail(r, "tie did not resolve to class 0 with tie_broken set for " + query.id);
    }
  }
  return r;
}

inline PropertyResult prop_checkpoint_roundtrip(std::size_t cases, std::uint64_t seed) {
  PropertyResult r{"checkpoint round-trip"};
  Rng rng(derive_seed(seed, "ckpt-roundtrip"));
  const auto path = std::filesystem::temp_directory_path() /
                    ("props_ckpt_" + std::to_string(rng.next_u64()) + ".ckpt");
  for (r.cases = 0; r.cases < cases; ++r.cases) {
    ParameterMap params;
    const int n_params = static_cast<int>(rng.uniform_int(1, 5));
    for (int p = 0; p < n_params; ++p) {
      Shape shape;
      const int ndim = static_cast<int>(rng.uniform_int(1, 3));
      for (int d = 0; d < ndim; ++d) {
        shape.push_back(static_cast<int>(rng.uniform_int(1, 6)));
      }
      Tensor value(shape, true);
      for (auto& x : value.vec()) {
        // Extremes included: round-trip must be bit-exact, not just close.
        switch (rng.uniform_int(0, 4)) {
          case 0: x = 0.0f; break;
          case 1: x = static_cast<float>(rng.normal(0.0, 1e30)); break;
          case 2: x = static_cast<float>(rng.normal(0.0, 1e-30)); break;
          default: x = static_cast<float>(rng.normal()); break;
        }
      }
      params.add("p" + std::to_string(p), value, rng.bernoulli(0.5));
    }

    save_parameters(path, params);
    ParameterMap loaded = params.clone();
    for (auto& entry : loaded.entries()) {
      std::fill(entry.value.vec().begin(), entry.value.vec().end(), 0.0f);
    }
    load_parameters(path, loaded);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& a = params.entries()[i].value.vec();
      const auto& b = loaded.entries()[i].value.vec();
      if (a.size() != b.size() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) {
        fail(r, "parameter " + params.entries()[i].name + " changed across the round-trip");
        break;
      }
    }
  }
  std::filesystem::remove(path);
  return r;
}

inline std::vector<PropertyResult> all_properties(std::size_t cases, std::uint64_t seed) {
  return {prop_split_disjointness(cases, seed), prop_symb_exclusivity(cases, seed),
          prop_pair_soundness(cases, seed),     prop_consensus_permutation(cases, seed),
          prop_tie_determinism(cases, seed),    prop_checkpoint_roundtrip(cases, seed)};
}

}  // namespace props
