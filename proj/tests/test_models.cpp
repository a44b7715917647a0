#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "pairsim/models.hpp"
#include "pairsim/rng.hpp"

using namespace pairsim;

namespace {

EncoderConfig small_encoder() {
  EncoderConfig config;
  config.conv_blocks = {{4, 3, true}, {8, 3, true}};
  config.embedding_dim = 16;
  config.input_shape = {1, 8, 8};
  return config;
}

Tensor random_image(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (auto& v : t.vec()) v = static_cast<float>(rng.uniform_real(0.0, 1.0));
  return t;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const char* stem)
      : path(std::filesystem::temp_directory_path() / stem) {}
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    std::filesystem::remove(sidecar_path(path), ec);
  }
};

}  // namespace

TEST_CASE("encoder config validation walks the whole shape chain") {
  CHECK(validate_encoder_config(EncoderConfig{}) == 128 * 2 * 2);
  CHECK(validate_encoder_config(small_encoder()) == 8 * 2 * 2);

  EncoderConfig even_kernel = small_encoder();
  even_kernel.conv_blocks[0].kernel_size = 4;
  CHECK_THROWS_AS(validate_encoder_config(even_kernel), DomainError);

  EncoderConfig odd_pool = small_encoder();
  odd_pool.input_shape = {1, 6, 6};  // 6 -> 3, then pool on 3
  CHECK_THROWS_AS(validate_encoder_config(odd_pool), DimensionError);

  EncoderConfig no_embedding = small_encoder();
  no_embedding.embedding_dim = 0;
  CHECK_THROWS_AS(validate_encoder_config(no_embedding), DomainError);

  EncoderConfig no_blocks = small_encoder();
  no_blocks.conv_blocks.clear();  // legal: flatten straight into the embedding
  CHECK(validate_encoder_config(no_blocks) == 1 * 8 * 8);

  EncoderConfig bad_channels = small_encoder();
  bad_channels.conv_blocks[1].out_channels = 0;
  CHECK_THROWS_AS(validate_encoder_config(bad_channels), DomainError);
}

TEST_CASE("encoder config json round-trips") {
  EncoderConfig config = small_encoder();
  EncoderConfig back = encoder_config_from_json(encoder_config_json(config));
  CHECK(back.embedding_dim == config.embedding_dim);
  CHECK(back.input_shape == config.input_shape);
  REQUIRE(back.conv_blocks.size() == config.conv_blocks.size());
  for (std::size_t i = 0; i < back.conv_blocks.size(); ++i) {
    CHECK(back.conv_blocks[i].out_channels == config.conv_blocks[i].out_channels);
    CHECK(back.conv_blocks[i].kernel_size == config.conv_blocks[i].kernel_size);
    CHECK(back.conv_blocks[i].pool == config.conv_blocks[i].pool);
  }
}

TEST_CASE("direct classifier is deterministic under its init seed") {
  Tensor image = random_image({1, 8, 8}, 31);
  DirectClassifier a(small_encoder(), 5);
  DirectClassifier b(small_encoder(), 5);
  DirectClassifier c(small_encoder(), 6);
  const float pa = a.predict(image);
  CHECK(pa > 0.0f);
  CHECK(pa < 1.0f);
  CHECK(pa == b.predict(image));
  CHECK(pa != c.predict(image));
  CHECK(a.forward(image).item() == pa);
  CHECK(predict_class(a, image) == pa);
  CHECK_THROWS_AS(a.predict(random_image({1, 6, 6}, 1)), DimensionError);
}

TEST_CASE("clone detaches parameter storage") {
  Tensor image = random_image({1, 8, 8}, 32);
  DirectClassifier model(small_encoder(), 7);
  DirectClassifier copy = model.clone();
  const float before = model.predict(image);
  CHECK(copy.predict(image) == before);
  for (auto& entry : copy.params().entries()) {
    for (auto& v : entry.value.vec()) v += 0.5f;
  }
  CHECK(model.predict(image) == before);
  CHECK(copy.predict(image) != before);
}

TEST_CASE("direct checkpoint round-trips bit-exactly") {
  TempFile file("models_direct.ckpt");
  Tensor image = random_image({1, 8, 8}, 33);
  DirectClassifier model(small_encoder(), 8);
  model.save(file.path, {{"note", "unit"}});
  DirectClassifier loaded = DirectClassifier::load(file.path);
  CHECK(loaded.predict(image) == model.predict(image));
  CHECK(sidecar_path(file.path).extension() == ".json");
  CHECK(std::filesystem::exists(sidecar_path(file.path)));
}

TEST_CASE("siamese branches are tied and embeddings compose") {
  Tensor a = random_image({1, 8, 8}, 34);
  Tensor b = random_image({1, 8, 8}, 35);
  for (Merge merge : {Merge::CONCAT, Merge::SUBTRACT}) {
    CAPTURE(merge_name(merge));
    SiameseSimilarity model(small_encoder(), merge, 9);
    const float direct = model.similarity(a, b);
    CHECK(direct > 0.0f);
    CHECK(direct < 1.0f);
    CHECK(model.forward(a, b).item() == direct);
    CHECK(similarity(model, a, b) == direct);

    Tensor ea = model.embed(a);
    Tensor eb = model.embed(b);
    CHECK(model.similarity_from_embeddings(ea, eb) == direct);
    CHECK(model.forward_from_embeddings(ea, eb).item() == direct);

    // One parameter set serves both branches.
    for (const auto& entry : model.params().entries()) {
      CHECK(entry.name.find("branch") == std::string::npos);
    }
  }
}

TEST_CASE("subtract merge scores any image as maximally similar to itself") {
  Tensor a = random_image({1, 8, 8}, 36);
  Tensor b = random_image({1, 8, 8}, 37);
  SiameseSimilarity model(small_encoder(), Merge::SUBTRACT, 10);
  // Identical inputs collapse the merged difference to zero, so the score
  // depends only on the head's response at the origin.
  CHECK(model.similarity(a, a) == model.similarity(b, b));
}

TEST_CASE("merge names round-trip") {
  CHECK(merge_name(Merge::CONCAT) == "concat");
  CHECK(merge_name(Merge::SUBTRACT) == "subtract");
  CHECK(merge_from_name("concat") == Merge::CONCAT);
  CHECK(merge_from_name("subtract") == Merge::SUBTRACT);
  CHECK_THROWS_AS(merge_from_name("mean"), FormatError);
}

TEST_CASE("siamese checkpoint keeps weights and merge mode") {
  TempFile file("models_siamese.ckpt");
  Tensor a = random_image({1, 8, 8}, 38);
  Tensor b = random_image({1, 8, 8}, 39);
  SiameseSimilarity model(small_encoder(), Merge::SUBTRACT, 11);
  model.save(file.path);
  SiameseSimilarity loaded = SiameseSimilarity::load(file.path);
  CHECK(loaded.merge() == Merge::SUBTRACT);
  CHECK(loaded.similarity(a, b) == model.similarity(a, b));

  // A direct-model loader must refuse a siamese checkpoint.
  CHECK_THROWS_AS(DirectClassifier::load(file.path), FormatError);
}
