#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>

#include "pairsim/config.hpp"
#include "pairsim/ingest.hpp"
#include "pairsim/synth.hpp"

using namespace pairsim;
namespace fs = std::filesystem;

namespace {

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& name) : root(fs::temp_directory_path() / name) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
};

Tensor image_from(int side, const std::function<float(int, int)>& value) {
  Tensor t({1, side, side});
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      t[static_cast<std::size_t>(y) * side + x] = value(y, x);
    }
  }
  return t;
}

void put_png(const fs::path& path, const Tensor& pixels) {
  fs::create_directories(path.parent_path());
  write_image_png(path, pixels);
}

// Dark quantized ramp: every value is a multiple of 1/255 and the mean
// stays below the inversion threshold.
Tensor quantized_ramp(int side) {
  return image_from(side, [side](int y, int x) {
    return static_cast<float>((y * side + x) % 100) / 255.0f;
  });
}

}  // namespace

TEST_CASE("write_image_png round-trips 8-bit values") {
  TempTree tree("pairsim_ingest_roundtrip");
  Tensor source = quantized_ramp(8);
  put_png(tree.root / "cls" / "img_w0.png", source);

  IngestConfig config;
  config.resize = 8;
  DatasetTable table = load_image_folder(tree.root, {{"cls", 0}});
  // Default resize is 32; reload at the native size for the value check.
  table = load_image_folder(tree.root, {{"cls", 0}}, config);
  REQUIRE(table.size() == 1);
  const Tensor& loaded = table.at(0).pixels;
  REQUIRE(loaded.shape() == Shape{1, 8, 8});
  for (std::size_t i = 0; i < source.numel(); ++i) {
    CHECK(loaded[i] == doctest::Approx(source[i]).epsilon(1e-6));
  }
}

TEST_CASE("write_image_png validates shape and destination") {
  TempTree tree("pairsim_ingest_writeval");
  CHECK_THROWS_AS(write_image_png(tree.root / "x.png", Tensor({2, 4, 4})),
                  DimensionError);
  CHECK_THROWS_AS(write_image_png(tree.root / "no" / "such" / "dir" / "x.png",
                                  Tensor::full({1, 4, 4}, 0.5f)),
                  IoError);
}

TEST_CASE("folder layout maps to alphabet, character, and writer groups") {
  TempTree tree("pairsim_ingest_groups");
  Tensor img = quantized_ramp(8);
  put_png(tree.root / "kata" / "a01" / "a01_w0.png", img);
  put_png(tree.root / "kata" / "a01" / "a01_w1.png", img);
  put_png(tree.root / "kata" / "a02" / "a02_w0.png", img);
  put_png(tree.root / "kor" / "b01" / "b01_w0.png", img);
  put_png(tree.root / "kor" / "flat.png", img);  // no nested directory

  DatasetTable table = load_image_folder(tree.root, {{"kata", 0}, {"kor", 1}});
  CHECK(table.size() == 5);
  CHECK(table.with_label(0).size() == 3);
  CHECK(table.with_label(1).size() == 2);

  const LabeledImage& nested = table.by_id("kata/a01/a01_w0.png");
  CHECK(nested.task_label == 0);
  CHECK(nested.groups.at("alphabet") == "kata");
  CHECK(nested.groups.at("character") == "kata/a01");
  CHECK(nested.groups.at("writer") == "w0");

  const LabeledImage& flat = table.by_id("kor/flat.png");
  CHECK(flat.groups.at("alphabet") == "kor");
  CHECK(flat.groups.at("character") == "kor");  // class itself when not nested
  CHECK(flat.groups.at("writer") == "flat");    // stem without underscore

  CHECK(table.group_values("alphabet") == std::vector<std::string>{"kata", "kor"});
}

TEST_CASE("unmapped classes and unreadable files are skipped with warnings") {
  TempTree tree("pairsim_ingest_skips");
  Tensor img = quantized_ramp(8);
  put_png(tree.root / "kata" / "a01" / "a01_w0.png", img);
  put_png(tree.root / "misc" / "x_w0.png", img);
  std::ofstream(tree.root / "kata" / "a01" / "broken.png") << "not a png";

  IngestReport report;
  DatasetTable table = load_image_folder(tree.root, {{"kata", 0}}, {}, &report);
  CHECK(table.size() == 1);
  CHECK(report.loaded == 1);
  CHECK(report.skipped == 1);
  REQUIRE(report.warnings.size() == 2);
  bool saw_unmapped = false;
  bool saw_unreadable = false;
  for (const auto& w : report.warnings) {
    if (w.find("unmapped class") != std::string::npos &&
        w.find("misc") != std::string::npos) {
      saw_unmapped = true;
    }
    if (w.find("unreadable image") != std::string::npos &&
        w.find("broken.png") != std::string::npos) {
      saw_unreadable = true;
    }
  }
  CHECK(saw_unmapped);
  CHECK(saw_unreadable);
}

TEST_CASE("a mapped class without readable images is a hard error") {
  TempTree tree("pairsim_ingest_emptyclass");
  std::ofstream(tree.root / "empty.placeholder") << "";
  fs::create_directories(tree.root / "kata");
  std::ofstream(tree.root / "kata" / "broken.png") << "junk";
  CHECK_THROWS_WITH_AS(load_image_folder(tree.root, {{"kata", 0}}),
                       doctest::Contains("no readable images"), IoError);
}

TEST_CASE("ingest input validation") {
  TempTree tree("pairsim_ingest_validation");
  CHECK_THROWS_AS(load_image_folder(tree.root / "missing", {{"kata", 0}}), IoError);
  CHECK_THROWS_AS(load_image_folder(tree.root, {{"kata", 2}}), DomainError);
  IngestConfig tiny;
  tiny.resize = 1;
  CHECK_THROWS_AS(load_image_folder(tree.root, {{"kata", 0}}, tiny), DomainError);
  // Directory with no mapped class directories at all.
  CHECK_THROWS_WITH_AS(load_image_folder(tree.root, {{"kata", 0}}),
                       doctest::Contains("no classes"), IoError);
}

TEST_CASE("bright images are inverted so ink stays bright") {
  TempTree tree("pairsim_ingest_invert");
  // White page with a dark stroke: mean well above 0.5.
  Tensor page = image_from(8, [](int y, int x) { return y == 4 && x < 4 ? 0.0f : 1.0f; });
  put_png(tree.root / "cls" / "page_w0.png", page);

  IngestConfig config;
  config.resize = 8;
  DatasetTable inverted = load_image_folder(tree.root, {{"cls", 0}}, config);
  const Tensor& inv = inverted.at(0).pixels;
  CHECK(inv[4 * 8 + 0] == doctest::Approx(1.0));
  CHECK(inv[0] == doctest::Approx(0.0));

  config.auto_invert = false;
  DatasetTable kept = load_image_folder(tree.root, {{"cls", 0}}, config);
  const Tensor& raw = kept.at(0).pixels;
  CHECK(raw[4 * 8 + 0] == doctest::Approx(0.0));
  CHECK(raw[0] == doctest::Approx(1.0));
}

TEST_CASE("resize respects the interpolation choice") {
  TempTree tree("pairsim_ingest_resize");
  // Binary checkerboard: near-binary detection picks nearest-neighbor.
  Tensor checker = image_from(16, [](int y, int x) { return (y + x) % 2 ? 1.0f : 0.0f; });
  put_png(tree.root / "cls" / "checker_w0.png", checker);

  IngestConfig config;
  config.resize = 32;
  DatasetTable table = load_image_folder(tree.root, {{"cls", 0}}, config);
  const Tensor& up = table.at(0).pixels;
  REQUIRE(up.shape() == Shape{1, 32, 32});
  for (std::size_t i = 0; i < up.numel(); ++i) {
    CHECK((up[i] == 0.0f || up[i] == 1.0f));
  }

  // Half-tone step image: default path smooths the boundary, force_nearest
  // keeps the original value set.
  TempTree tree2("pairsim_ingest_resize_step");
  Tensor step = image_from(8, [](int, int x) { return x < 4 ? 0.0f : 0.6f; });
  put_png(tree2.root / "cls" / "step_w0.png", step);
  DatasetTable smooth = load_image_folder(tree2.root, {{"cls", 0}}, config);
  bool has_intermediate = false;
  for (std::size_t i = 0; i < smooth.at(0).pixels.numel(); ++i) {
    const float v = smooth.at(0).pixels[i];
    if (v > 0.01f && v < 0.59f) has_intermediate = true;
  }
  CHECK(has_intermediate);

  config.force_nearest = true;
  DatasetTable snapped = load_image_folder(tree2.root, {{"cls", 0}}, config);
  for (std::size_t i = 0; i < snapped.at(0).pixels.numel(); ++i) {
    const float v = snapped.at(0).pixels[i];
    CHECK((v == doctest::Approx(0.0) || v == doctest::Approx(0.6)));
  }
}

TEST_CASE("synthesized corpus survives a write-ingest round trip") {
  TempTree tree("pairsim_ingest_synth_roundtrip");
  ScriptCorpusConfig corpus;
  corpus.chars0 = 3;
  corpus.chars1 = 3;
  corpus.writers = 2;
  corpus.seed = 5;
  DatasetTable source = synth_script_corpus(corpus);

  for (const auto& img : source.images()) {
    const std::string alphabet = img.groups.at("alphabet");
    const std::string character = img.groups.at("character");
    const std::string writer = img.groups.at("writer");
    put_png(tree.root / alphabet / character / (character + "_" + writer + ".png"),
            img.pixels);
  }

  DatasetTable loaded =
      load_image_folder(tree.root, {{"script0", 0}, {"script1", 1}});
  REQUIRE(loaded.size() == source.size());
  CHECK(loaded.with_label(0).size() == source.with_label(0).size());
  CHECK(loaded.with_label(1).size() == source.with_label(1).size());

  for (const auto& img : source.images()) {
    const std::string character = img.groups.at("character");
    const std::string id = img.groups.at("alphabet") + "/" + character + "/" + character +
                           "_" + img.groups.at("writer") + ".png";
    REQUIRE_MESSAGE(loaded.contains(id), "missing " << id);
    const LabeledImage& back = loaded.by_id(id);
    CHECK(back.task_label == img.task_label);
    CHECK(back.groups.at("character") ==
          img.groups.at("alphabet") + "/" + character);
    CHECK(back.groups.at("writer") == img.groups.at("writer"));
    float max_diff = 0.0f;
    for (std::size_t i = 0; i < img.pixels.numel(); ++i) {
      max_diff = std::max(max_diff, std::abs(back.pixels[i] - img.pixels[i]));
    }
    // 8-bit quantization only.
    CHECK(max_diff <= 0.5f / 255.0f + 1e-6f);
  }
}

TEST_CASE("relative dataset paths resolve against PAIRSIM_DATA_ROOT") {
  TempTree tree("pairsim_ingest_dataroot");
  put_png(tree.root / "corpus" / "kata" / "a01" / "a01_w0.png", quantized_ramp(8));
  put_png(tree.root / "corpus" / "kor" / "b01" / "b01_w0.png", quantized_ramp(8));

  setenv("PAIRSIM_DATA_ROOT", tree.root.string().c_str(), 1);
  DatasetSpec spec;
  spec.path = "corpus";
  spec.labels = {{"kata", 0}, {"kor", 1}};
  DatasetTable table = load_dataset(spec);
  unsetenv("PAIRSIM_DATA_ROOT");
  CHECK(table.size() == 2);
  CHECK(table.has_both_labels());
}
