#include "pairsim/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include "pairsim/rng.hpp"

namespace pairsim {

namespace {

void check_fraction(double fraction, const char* op) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError(std::string(op) + ": fraction " + std::to_string(fraction) +
                      " must lie in (0,1)");
  }
}

void check_both_labels(const DatasetTable& table, const char* op) {
  if (!table.has_both_labels()) {
    throw DomainError(std::string(op) + ": table must contain both task labels");
  }
}

const std::string& character_of(const LabeledImage& img, const char* op) {
  auto it = img.groups.find("character");
  if (it == img.groups.end()) {
    throw DomainError(std::string(op) + ": image '" + img.id +
                      "' lacks a character group");
  }
  return it->second;
}

std::size_t round_count(double x) {
  return static_cast<std::size_t>(std::llround(x));
}

// Train quota for one class under the instance-level rule.
std::size_t inst_quota(const DatasetTable& table, const std::vector<std::size_t>& members,
                       double fraction) {
  std::map<std::string, std::size_t> per_char;
  for (std::size_t i : members) ++per_char[character_of(table.at(i), "split_inst")];
  bool uniform = true;
  const std::size_t m = per_char.begin()->second;
  for (const auto& [ch, count] : per_char) {
    if (count != m) {
      uniform = false;
      break;
    }
  }
  if (uniform) return round_count(fraction * static_cast<double>(per_char.size())) * m;
  return round_count(fraction * static_cast<double>(members.size()));
}

void check_side_sizes(std::size_t quota, std::size_t total, const char* op, int label) {
  if (quota == 0 || quota >= total) {
    throw DomainError(std::string(op) + ": fraction yields an empty side for label " +
                      std::to_string(label) + " (train quota " + std::to_string(quota) +
                      " of " + std::to_string(total) + ")");
  }
}

SplitResult build_result(const DatasetTable& table, std::vector<std::size_t> train_idx,
                         std::vector<std::size_t> test_idx, SplitSpec spec) {
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  SplitResult result;
  result.train = table.subset_by_indices(train_idx);
  result.test = table.subset_by_indices(test_idx);
  result.spec = spec;
  return result;
}

// Shared body of the two instance-level splits; quota_fn maps a class's member
// list to its train quota.
template <typename QuotaFn>
SplitResult instance_split(const DatasetTable& table, double fraction, std::uint64_t seed,
                           SplitKind kind, const char* op, QuotaFn quota_fn) {
  check_fraction(fraction, op);
  check_both_labels(table, op);

  std::vector<std::size_t> train_idx, test_idx;
  for (int label = 0; label < 2; ++label) {
    std::vector<std::size_t> members = table.with_label(label);
    const std::size_t quota = quota_fn(members);
    check_side_sizes(quota, members.size(), op, label);
    Rng rng(derive_seed(seed, op, static_cast<std::uint64_t>(label)));
    rng.shuffle(members);
    train_idx.insert(train_idx.end(), members.begin(), members.begin() + quota);
    test_idx.insert(test_idx.end(), members.begin() + quota, members.end());
  }
  return build_result(table, std::move(train_idx), std::move(test_idx),
                      SplitSpec{kind, fraction, seed});
}

}  // namespace

std::string split_kind_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::INST: return "INST";
    case SplitKind::SYMB: return "SYMB";
    case SplitKind::RANDOM_FRACTION: return "RANDOM_FRACTION";
  }
  throw ContractError("split_kind_name: unhandled kind");
}

SplitKind split_kind_from_name(const std::string& name) {
  if (name == "INST") return SplitKind::INST;
  if (name == "SYMB") return SplitKind::SYMB;
  if (name == "RANDOM_FRACTION") return SplitKind::RANDOM_FRACTION;
  throw FormatError("unknown split kind '" + name + "'");
}

SplitResult split_inst(const DatasetTable& table, double fraction, std::uint64_t seed) {
  return instance_split(table, fraction, seed, SplitKind::INST, "split_inst",
                        [&](const std::vector<std::size_t>& members) {
                          return inst_quota(table, members, fraction);
                        });
}

SplitResult split_random_fraction(const DatasetTable& table, double fraction,
                                  std::uint64_t seed) {
  return instance_split(table, fraction, seed, SplitKind::RANDOM_FRACTION,
                        "split_random_fraction",
                        [&](const std::vector<std::size_t>& members) {
                          return round_count(fraction * static_cast<double>(members.size()));
                        });
}

SplitResult split_symb(const DatasetTable& table, double fraction, std::uint64_t seed) {
  const char* op = "split_symb";
  check_fraction(fraction, op);
  check_both_labels(table, op);

  std::vector<std::size_t> train_idx, test_idx;
  for (int label = 0; label < 2; ++label) {
    const auto& members = table.with_label(label);
    std::map<std::string, std::vector<std::size_t>> by_char;
    for (std::size_t i : members) by_char[character_of(table.at(i), op)].push_back(i);

    std::vector<std::string> chars;
    chars.reserve(by_char.size());
    for (const auto& [ch, idxs] : by_char) chars.push_back(ch);
    const std::size_t n_train = round_count(fraction * static_cast<double>(chars.size()));
    if (n_train == 0 || n_train >= chars.size()) {
      throw DomainError(std::string(op) + ": cannot split label " + std::to_string(label) +
                        " (" + std::to_string(chars.size()) + " characters, train quota " +
                        std::to_string(n_train) + ")");
    }
    Rng rng(derive_seed(seed, op, static_cast<std::uint64_t>(label)));
    rng.shuffle(chars);
    for (std::size_t c = 0; c < chars.size(); ++c) {
      auto& side = c < n_train ? train_idx : test_idx;
      const auto& idxs = by_char[chars[c]];
      side.insert(side.end(), idxs.begin(), idxs.end());
    }
  }
  return build_result(table, std::move(train_idx), std::move(test_idx),
                      SplitSpec{SplitKind::SYMB, fraction, seed});
}

SplitResult make_split(const DatasetTable& table, const SplitSpec& spec) {
  switch (spec.kind) {
    case SplitKind::INST: return split_inst(table, spec.fraction, spec.seed);
    case SplitKind::SYMB: return split_symb(table, spec.fraction, spec.seed);
    case SplitKind::RANDOM_FRACTION:
      return split_random_fraction(table, spec.fraction, spec.seed);
  }
  throw ContractError("make_split: unhandled kind");
}

nlohmann::json split_manifest(const SplitResult& result) {
  nlohmann::json j;
  j["kind"] = split_kind_name(result.spec.kind);
  j["fraction"] = result.spec.fraction;
  j["seed"] = result.spec.seed;
  auto ids = [](const DatasetTable& t) {
    std::vector<std::string> out;
    out.reserve(t.size());
    for (const auto& img : t.images()) out.push_back(img.id);
    return out;
  };
  j["train_ids"] = ids(result.train);
  j["test_ids"] = ids(result.test);
  return j;
}

void write_split_manifest(const std::filesystem::path& path, const SplitResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split manifest to " + path.string());
  out << split_manifest(result).dump(2) << "\n";
}

SplitResult split_from_manifest(const DatasetTable& table, const nlohmann::json& manifest) {
  for (const char* key : {"kind", "fraction", "seed", "train_ids", "test_ids"}) {
    if (!manifest.contains(key)) {
      throw FormatError("split manifest missing key '" + std::string(key) + "'");
    }
  }
  SplitResult result;
  try {
    result.spec.kind = split_kind_from_name(manifest.at("kind").get<std::string>());
    result.spec.fraction = manifest.at("fraction").get<double>();
    result.spec.seed = manifest.at("seed").get<std::uint64_t>();
    const auto train_ids = manifest.at("train_ids").get<std::vector<std::string>>();
    const auto test_ids = manifest.at("test_ids").get<std::vector<std::string>>();

    std::unordered_set<std::string> seen;
    for (const auto& id : train_ids) {
      if (!seen.insert(id).second) throw FormatError("split manifest repeats id '" + id + "'");
    }
    for (const auto& id : test_ids) {
      if (!seen.insert(id).second) {
        throw FormatError("split manifest places id '" + id + "' on both sides");
      }
    }
    if (seen.size() != table.size()) {
      throw FormatError("split manifest covers " + std::to_string(seen.size()) +
                        " ids but the table has " + std::to_string(table.size()));
    }
    result.train = table.subset_by_ids(train_ids);
    result.test = table.subset_by_ids(test_ids);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed split manifest: ") + e.what());
  }
  return result;
}

SplitResult read_split_manifest(const DatasetTable& table,
                                const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read split manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("split manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return split_from_manifest(table, j);
}

}  // namespace pairsim
