#include "pairsim/ingest.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace pairsim {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  static const char* kExts[] = {".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".tif", ".tiff"};
  return std::any_of(std::begin(kExts), std::end(kExts),
                     [&](const char* e) { return ext == e; });
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  return entries;
}

void collect_images(const fs::path& dir, std::vector<fs::path>& out) {
  for (const auto& p : sorted_entries(dir)) {
    if (fs::is_directory(p)) {
      collect_images(p, out);
    } else if (has_image_extension(p)) {
      out.push_back(p);
    }
  }
}

// stem "0608_01" -> writer "01"; no underscore -> whole stem.
std::string writer_of(const fs::path& file) {
  const std::string stem = file.stem().string();
  const auto pos = stem.rfind('_');
  return pos == std::string::npos ? stem : stem.substr(pos + 1);
}

Tensor decode(const fs::path& file, const IngestConfig& config) {
  cv::Mat gray = cv::imread(file.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) return Tensor();

  cv::Mat f32;
  gray.convertTo(f32, CV_32F, 1.0 / 255.0);

  const double mean = cv::mean(f32)[0];
  if (config.auto_invert && mean > 0.5) f32 = 1.0 - f32;

  bool nearest = config.force_nearest;
  if (!nearest) {
    // Near-binary detection: most pixels at either extreme.
    int extreme = 0;
    for (int y = 0; y < f32.rows; ++y) {
      const float* row = f32.ptr<float>(y);
      for (int x = 0; x < f32.cols; ++x) {
        if (row[x] < 0.1f || row[x] > 0.9f) ++extreme;
      }
    }
    nearest = extreme >= static_cast<int>(0.9 * f32.rows * f32.cols);
  }

  cv::Mat resized;
  cv::resize(f32, resized, cv::Size(config.resize, config.resize), 0, 0,
             nearest ? cv::INTER_NEAREST : cv::INTER_LINEAR);

  Tensor out({1, config.resize, config.resize});
  for (int y = 0; y < config.resize; ++y) {
    const float* row = resized.ptr<float>(y);
    for (int x = 0; x < config.resize; ++x) {
      out[static_cast<std::size_t>(y) * config.resize + x] =
          std::clamp(row[x], 0.0f, 1.0f);
    }
  }
  return out;
}

}  // namespace

DatasetTable load_image_folder(const fs::path& root,
                               const std::map<std::string, int>& label_map,
                               const IngestConfig& config, IngestReport* report) {
  if (config.resize < 2) {
    throw DomainError("load_image_folder: resize must be at least 2");
  }
  for (const auto& [cls, label] : label_map) {
    if (label != 0 && label != 1) {
      throw DomainError("load_image_folder: class '" + cls + "' mapped to label " +
                        std::to_string(label) + ", expected 0 or 1");
    }
  }
  if (!fs::is_directory(root)) {
    throw IoError("load_image_folder: '" + root.string() + "' is not a directory");
  }

  IngestReport local;
  IngestReport& rep = report ? *report : local;
  DatasetTable table;
  std::size_t classes_found = 0;

  for (const auto& class_dir : sorted_entries(root)) {
    if (!fs::is_directory(class_dir)) continue;
    const std::string class_name = class_dir.filename().string();
    auto it = label_map.find(class_name);
    if (it == label_map.end()) {
      rep.warnings.push_back("unmapped class directory skipped: " + class_name);
      continue;
    }
    ++classes_found;
    const int label = it->second;

    std::vector<fs::path> files;
    collect_images(class_dir, files);
    std::size_t class_loaded = 0;
    for (const auto& file : files) {
      Tensor pixels = decode(file, config);
      if (!pixels.defined()) {
        ++rep.skipped;
        rep.warnings.push_back("unreadable image skipped: " +
                               fs::relative(file, root).generic_string());
        continue;
      }
      LabeledImage img;
      img.id = fs::relative(file, root).generic_string();
      img.pixels = std::move(pixels);
      img.task_label = label;
      const fs::path rel = fs::relative(file.parent_path(), class_dir);
      const std::string nested =
          rel.empty() || rel == "." ? "" : rel.begin()->string();
      img.groups = {{"alphabet", class_name},
                    {"character", nested.empty() ? class_name : class_name + "/" + nested},
                    {"writer", writer_of(file)}};
      table.add(std::move(img));
      ++class_loaded;
      ++rep.loaded;
    }
    if (class_loaded == 0) {
      throw IoError("load_image_folder: class '" + class_name + "' has no readable images");
    }
  }

  if (classes_found == 0) {
    throw IoError("load_image_folder: no classes found under '" + root.string() + "'");
  }
  return table;
}

void write_image_png(const fs::path& path, const Tensor& pixels) {
  if (pixels.shape().size() != 3 || pixels.shape()[0] != 1) {
    throw DimensionError("write_image_png: expected [1,H,W], got " +
                         shape_str(pixels.shape()));
  }
  const int h = static_cast<int>(pixels.shape()[1]);
  const int w = static_cast<int>(pixels.shape()[2]);
  cv::Mat gray(h, w, CV_8U);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = std::clamp(pixels[static_cast<std::size_t>(y) * w + x], 0.0f, 1.0f);
      gray.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  if (!cv::imwrite(path.string(), gray)) {
    throw IoError("write_image_png: cannot write '" + path.string() + "'");
  }
}

}  // namespace pairsim
