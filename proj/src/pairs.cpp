#include "pairsim/pairs.hpp"

#include "pairsim/rng.hpp"

namespace pairsim {

namespace {

// Member-index lists per pairing class, in a deterministic order.
std::vector<std::vector<std::size_t>> pair_classes(const DatasetTable& table,
                                                   const std::string& class_key) {
  std::vector<std::vector<std::size_t>> classes;
  if (class_key.empty()) {
    if (!table.has_both_labels()) {
      throw DomainError("sample_pairs: table must contain both task labels");
    }
    classes.push_back(table.with_label(0));
    classes.push_back(table.with_label(1));
    return classes;
  }
  for (const auto& value : table.group_values(class_key)) {
    classes.push_back(table.with_group(class_key, value));
  }
  std::size_t covered = 0;
  for (const auto& c : classes) covered += c.size();
  if (covered != table.size()) {
    throw DomainError("sample_pairs: some images lack the '" + class_key + "' group");
  }
  return classes;
}

}  // namespace

std::vector<PairSample> sample_pairs(const DatasetTable& table, std::int64_t n,
                                     double same_fraction, std::uint64_t seed,
                                     bool class_balanced, const std::string& class_key) {
  if (n <= 0) throw DomainError("sample_pairs: n must be positive, got " + std::to_string(n));
  if (!(same_fraction >= 0.0 && same_fraction <= 1.0)) {
    throw DomainError("sample_pairs: same_fraction " + std::to_string(same_fraction) +
                      " outside [0,1]");
  }

  const auto classes = pair_classes(table, class_key);

  std::vector<std::size_t> pairable;  // classes with at least two members
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].size() >= 2) pairable.push_back(c);
  }
  if (same_fraction > 0.0 && pairable.empty()) {
    throw DomainError("sample_pairs: insufficient same-class pairs (no class has two images)");
  }
  if (same_fraction < 1.0 && classes.size() < 2) {
    throw DomainError("sample_pairs: insufficient different-class pairs (single class)");
  }

  std::vector<std::size_t> weighted;  // class index repeated per member
  if (!class_balanced) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      weighted.insert(weighted.end(), classes[c].size(), c);
    }
  }
  auto pick_class = [&](Rng& rng) {
    if (class_balanced) return static_cast<std::size_t>(rng.uniform_below(classes.size()));
    return rng.pick(weighted);
  };

  Rng rng(derive_seed(seed, "sample_pairs"));
  std::vector<PairSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const bool want_same = rng.bernoulli(same_fraction);
    PairSample pair;
    pair.same = want_same ? 1 : 0;
    if (want_same) {
      std::size_t c = class_balanced
                          ? rng.pick(pairable)
                          : [&] {
                              std::size_t cand = pick_class(rng);
                              while (classes[cand].size() < 2) cand = pick_class(rng);
                              return cand;
                            }();
      const auto& members = classes[c];
      const std::size_t ai = rng.uniform_below(members.size());
      std::size_t bi = rng.uniform_below(members.size() - 1);
      if (bi >= ai) ++bi;
      pair.a = table.at(members[ai]);
      pair.b = table.at(members[bi]);
    } else {
      const std::size_t ca = pick_class(rng);
      std::size_t cb = pick_class(rng);
      while (cb == ca) cb = pick_class(rng);
      pair.a = table.at(rng.pick(classes[ca]));
      pair.b = table.at(rng.pick(classes[cb]));
    }
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace pairsim
