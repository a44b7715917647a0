#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairsim/tensor.hpp"

namespace pairsim {

struct LabeledImage {
  std::string id;
  Tensor pixels;  // [D,H,W], values in [0,1]
  int task_label = 0;
  // Expected keys where applicable: "alphabet", "character", "writer".
  std::map<std::string, std::string> groups;
};

// Ordered, immutable-after-build image collection with label and group
// indexes. add() validates every invariant eagerly so downstream code can
// assume a well-formed table.
class DatasetTable {
 public:
  DatasetTable() = default;

  void add(LabeledImage image);

  std::size_t size() const { return images_.size(); }
  bool empty() const { return images_.empty(); }
  const LabeledImage& at(std::size_t i) const;
  const std::vector<LabeledImage>& images() const { return images_; }

  bool contains(const std::string& id) const { return id_index_.count(id) > 0; }
  const LabeledImage& by_id(const std::string& id) const;

  // Indices of images carrying the given task label, in table order.
  const std::vector<std::size_t>& with_label(int label) const;
  bool has_both_labels() const;

  std::vector<std::string> group_keys() const;
  // Sorted distinct values observed under the key; empty if the key is unused.
  std::vector<std::string> group_values(const std::string& key) const;
  // Indices of images with groups[key] == value, in table order; empty list
  // for an unknown key or value.
  const std::vector<std::size_t>& with_group(const std::string& key,
                                             const std::string& value) const;

  DatasetTable subset_by_indices(const std::vector<std::size_t>& indices) const;
  DatasetTable subset_by_ids(const std::vector<std::string>& ids) const;

  // FNV-1a over ids, labels, groups, shapes, and pixel bytes, in table order.
  std::uint64_t content_hash() const;

 private:
  std::vector<LabeledImage> images_;
  std::unordered_map<std::string, std::size_t> id_index_;
  std::vector<std::size_t> label_index_[2];
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> group_index_;
};

}  // namespace pairsim
