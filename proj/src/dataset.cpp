#include "pairsim/dataset.hpp"

#include <cstring>

#include "pairsim/rng.hpp"

namespace pairsim {

void DatasetTable::add(LabeledImage image) {
  if (image.id.empty()) throw DomainError("dataset: image id must be non-empty");
  if (!image.pixels.defined()) {
    throw ContractError("dataset: image '" + image.id + "' has no pixel tensor");
  }
  if (image.pixels.ndim() != 3) {
    throw DimensionError("dataset: image '" + image.id + "' has shape " +
                         shape_str(image.pixels.shape()) + ", expected [D,H,W]");
  }
  if (image.task_label != 0 && image.task_label != 1) {
    throw DomainError("dataset: image '" + image.id + "' has task_label " +
                      std::to_string(image.task_label) + ", expected 0 or 1");
  }
  for (float v : image.pixels.vec()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw DomainError("dataset: image '" + image.id + "' has pixel value " +
                        std::to_string(v) + " outside [0,1]");
    }
  }
  if (id_index_.count(image.id)) {
    throw DomainError("dataset: duplicate image id '" + image.id + "'");
  }

  const std::size_t idx = images_.size();
  id_index_.emplace(image.id, idx);
  label_index_[image.task_label].push_back(idx);
  for (const auto& [key, value] : image.groups) {
    group_index_[key][value].push_back(idx);
  }
  images_.push_back(std::move(image));
}

const LabeledImage& DatasetTable::at(std::size_t i) const {
  if (i >= images_.size()) {
    throw ContractError("dataset: index " + std::to_string(i) + " out of range (size " +
                        std::to_string(images_.size()) + ")");
  }
  return images_[i];
}

const LabeledImage& DatasetTable::by_id(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) throw DomainError("dataset: unknown image id '" + id + "'");
  return images_[it->second];
}

const std::vector<std::size_t>& DatasetTable::with_label(int label) const {
  if (label != 0 && label != 1) {
    throw ContractError("dataset: task label " + std::to_string(label) + " is not 0 or 1");
  }
  return label_index_[label];
}

bool DatasetTable::has_both_labels() const {
  return !label_index_[0].empty() && !label_index_[1].empty();
}

std::vector<std::string> DatasetTable::group_keys() const {
  std::vector<std::string> keys;
  keys.reserve(group_index_.size());
  for (const auto& [key, values] : group_index_) keys.push_back(key);
  return keys;
}

std::vector<std::string> DatasetTable::group_values(const std::string& key) const {
  std::vector<std::string> values;
  auto it = group_index_.find(key);
  if (it == group_index_.end()) return values;
  values.reserve(it->second.size());
  for (const auto& [value, indices] : it->second) values.push_back(value);
  return values;
}

const std::vector<std::size_t>& DatasetTable::with_group(const std::string& key,
                                                         const std::string& value) const {
  static const std::vector<std::size_t> kNone;
  auto it = group_index_.find(key);
  if (it == group_index_.end()) return kNone;
  auto vit = it->second.find(value);
  if (vit == it->second.end()) return kNone;
  return vit->second;
}

DatasetTable DatasetTable::subset_by_indices(const std::vector<std::size_t>& indices) const {
  DatasetTable out;
  for (std::size_t i : indices) out.add(at(i));
  return out;
}

DatasetTable DatasetTable::subset_by_ids(const std::vector<std::string>& ids) const {
  DatasetTable out;
  for (const auto& id : ids) out.add(by_id(id));
  return out;
}

std::uint64_t DatasetTable::content_hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& img : images_) {
    h = fnv1a(img.id, h);
    const unsigned char label = static_cast<unsigned char>(img.task_label);
    h = fnv1a(&label, 1, h);
    for (const auto& [key, value] : img.groups) {
      h = fnv1a(key, h);
      h = fnv1a(value, h);
    }
    for (int d : img.pixels.shape()) {
      std::uint32_t u = static_cast<std::uint32_t>(d);
      h = fnv1a(&u, sizeof(u), h);
    }
    h = fnv1a(img.pixels.data(), img.pixels.numel() * sizeof(float), h);
  }
  return h;
}

}  // namespace pairsim
