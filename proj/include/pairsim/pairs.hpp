#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairsim/dataset.hpp"

namespace pairsim {

struct PairSample {
  LabeledImage a;
  LabeledImage b;
  int same = 0;
};

// Draws `n` pairs with replacement. Each pair is independently declared same
// or different with probability `same_fraction`, then filled by sampling two
// distinct images accordingly; a.id != b.id always holds.
//
// Pairing is keyed on task_label by default: same == 1 iff the two labels
// match. A non-empty `class_key` switches the keying to that group (used for
// pre-training, where "same" means same character rather than same task
// label); the soundness invariant then reads same == (group_a == group_b).
//
// class_balanced=true picks the key class uniformly before picking members,
// so minority classes appear in pairs as often as majority ones;
// class_balanced=false weights classes by their image counts.
//
// Errors: n <= 0, same_fraction outside [0,1], no class with two members when
// same pairs are requested ("insufficient same-class pairs"), fewer than two
// classes when different pairs are requested.
std::vector<PairSample> sample_pairs(const DatasetTable& table, std::int64_t n,
                                     double same_fraction, std::uint64_t seed,
                                     bool class_balanced = true,
                                     const std::string& class_key = "");

}  // namespace pairsim
