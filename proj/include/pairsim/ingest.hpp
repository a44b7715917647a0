#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pairsim/dataset.hpp"

namespace pairsim {

struct IngestConfig {
  // Images are resized to resize x resize, single channel. Near-binary images
  // (ink/background) use nearest-neighbor to preserve stroke topology, others
  // bilinear; override the detection with force_nearest.
  int resize = 32;
  bool force_nearest = false;
  // Images brighter than 0.5 on average are inverted so ink is 1.
  bool auto_invert = true;
};

struct IngestReport {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Loads root/<class>/.../<image> into a table. label_map assigns each class
// directory to task label 0 or 1; class directories absent from the map are
// skipped with a warning. Group inference: class directory -> "alphabet",
// first nested directory -> "character" (prefixed with the alphabet), the
// filename suffix after the last '_' -> "writer". Unreadable files are
// skipped and counted; a class with no readable image is a hard error.
DatasetTable load_image_folder(const std::filesystem::path& root,
                               const std::map<std::string, int>& label_map,
                               const IngestConfig& config = {},
                               IngestReport* report = nullptr);

// Writes a [1,H,W] tensor in [0,1] as an 8-bit grayscale PNG, ink bright.
void write_image_png(const std::filesystem::path& path, const Tensor& pixels);

}  // namespace pairsim
