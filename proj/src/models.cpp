#include "pairsim/models.hpp"

#include <cmath>
#include <fstream>

#include "pairsim/checkpoint.hpp"
#include "pairsim/rng.hpp"

namespace pairsim {

namespace {

constexpr int kFormatVersion = 1;

// Fan-in-scaled uniform with relu gain: U(-b, b), b = sqrt(6/fan_in). The
// gain keeps activation variance roughly constant through the conv stack, so
// embeddings stay input-dependent at init; pair training cannot leave the
// ln 2 plateau without that.
Tensor init_weight(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.numel(); ++i) {
    t[i] = static_cast<float>(rng.uniform_real(-bound, bound));
  }
  return t;
}

// Hidden widths of the three-layer Siamese head (the third layer is the
// single output unit).
constexpr int kHeadWidths[2] = {256, 128};

void copy_values(const ParameterMap& src, ParameterMap& dst) {
  for (const auto& p : src.entries()) dst.at(p.name).value.vec() = p.value.vec();
}

nlohmann::json read_sidecar(const std::filesystem::path& path, const char* expect_kind) {
  const auto side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw IoError("cannot read model sidecar " + side.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model sidecar " + side.string() + " is not valid JSON: " + e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion) {
    throw FormatError("model sidecar " + side.string() + " has unsupported format version");
  }
  if (!j.contains("kind") || j["kind"].get<std::string>() != expect_kind) {
    throw FormatError("model sidecar " + side.string() + " is not a " +
                      std::string(expect_kind) + " checkpoint");
  }
  return j;
}

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& j) {
  const auto side = sidecar_path(path);
  std::ofstream out(side);
  if (!out) throw IoError("cannot write model sidecar " + side.string());
  out << j.dump(2) << "\n";
}

void check_image_shape(const Tensor& image, const Shape& expected, const char* op) {
  if (!image.defined() || image.shape() != expected) {
    throw DimensionError(std::string(op) + ": input shape " +
                         (image.defined() ? shape_str(image.shape()) : "<undefined>") +
                         " does not match configured " + shape_str(expected));
  }
}

}  // namespace

std::size_t validate_encoder_config(const EncoderConfig& config) {
  if (config.embedding_dim < 1) {
    throw DomainError("encoder config: embedding_dim must be at least 1");
  }
  if (config.input_shape.size() != 3) {
    throw DimensionError("encoder config: input_shape must be [D,H,W], got " +
                         shape_str(config.input_shape));
  }
  int d = config.input_shape[0], h = config.input_shape[1], w = config.input_shape[2];
  if (d < 1 || h < 1 || w < 1) {
    throw DimensionError("encoder config: input dimensions must be positive, got " +
                         shape_str(config.input_shape));
  }
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const auto& block = config.conv_blocks[i];
    const std::string where = "encoder config block " + std::to_string(i);
    if (block.out_channels < 1) {
      throw DomainError(where + ": out_channels must be positive");
    }
    if (block.kernel_size < 1 || block.kernel_size % 2 == 0) {
      throw DomainError(where + ": kernel_size must be odd and positive, got " +
                        std::to_string(block.kernel_size));
    }
    d = block.out_channels;  // same padding keeps h and w
    if (block.pool) {
      if (h % 2 != 0 || w % 2 != 0) {
        throw DimensionError(where + ": pool on odd feature map " + std::to_string(h) +
                             "x" + std::to_string(w));
      }
      h /= 2;
      w /= 2;
    }
  }
  return static_cast<std::size_t>(d) * h * w;
}

nlohmann::json encoder_config_json(const EncoderConfig& config) {
  nlohmann::json j;
  j["conv_blocks"] = nlohmann::json::array();
  for (const auto& b : config.conv_blocks) {
    j["conv_blocks"].push_back(
        {{"out_channels", b.out_channels}, {"kernel_size", b.kernel_size}, {"pool", b.pool}});
  }
  j["embedding_dim"] = config.embedding_dim;
  j["input_shape"] = config.input_shape;
  return j;
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig config;
  try {
    config.conv_blocks.clear();
    for (const auto& b : j.at("conv_blocks")) {
      config.conv_blocks.push_back({b.at("out_channels").get<int>(),
                                    b.at("kernel_size").get<int>(),
                                    b.at("pool").get<bool>()});
    }
    config.embedding_dim = j.at("embedding_dim").get<int>();
    config.input_shape = j.at("input_shape").get<Shape>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed encoder config: ") + e.what());
  }
  validate_encoder_config(config);
  return config;
}

Encoder::Encoder(const EncoderConfig& config, ParameterMap& params, std::uint64_t init_seed)
    : config_(config) {
  const std::size_t flat = validate_encoder_config(config);
  Rng rng(derive_seed(init_seed, "init/encoder"));
  int c_in = config.input_shape[0];
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const auto& block = config.conv_blocks[i];
    const std::string stem = "encoder.conv" + std::to_string(i);
    const std::size_t fan_in =
        static_cast<std::size_t>(c_in) * block.kernel_size * block.kernel_size;
    conv_w_.push_back(params.add(
        stem + ".weight",
        init_weight({block.out_channels, c_in, block.kernel_size, block.kernel_size},
                    fan_in, rng),
        true));
    conv_b_.push_back(params.add(stem + ".bias", Tensor({block.out_channels}), false));
    c_in = block.out_channels;
  }
  fc_w_ = params.add(
      "encoder.embed.weight",
      init_weight({config.embedding_dim, static_cast<int>(flat)}, flat, rng), true);
  fc_b_ = params.add("encoder.embed.bias", Tensor({config.embedding_dim}), false);
}

Tensor Encoder::forward(const Tensor& image) const {
  check_image_shape(image, config_.input_shape, "encoder");
  Tensor x = image;
  for (std::size_t i = 0; i < config_.conv_blocks.size(); ++i) {
    const auto& block = config_.conv_blocks[i];
    x = relu(conv2d(x, conv_w_[i], conv_b_[i], 1, block.kernel_size / 2));
    if (block.pool) x = maxpool2(x);
  }
  return relu(fully_connected(flatten(x), fc_w_, fc_b_));
}

DirectClassifier::DirectClassifier(const EncoderConfig& config, std::uint64_t init_seed)
    : encoder_(config, params_, init_seed) {
  Rng rng(derive_seed(init_seed, "init/head"));
  const int emb = config.embedding_dim;
  head_w_ = params_.add("head.weight",
                        init_weight({1, emb}, static_cast<std::size_t>(emb), rng), true);
  head_b_ = params_.add("head.bias", Tensor({1}), false);
}

Tensor DirectClassifier::forward(const Tensor& image) const {
  return sigmoid(fully_connected(encoder_.forward(image), head_w_, head_b_));
}

float DirectClassifier::predict(const Tensor& image) const { return forward(image).item(); }

DirectClassifier DirectClassifier::clone() const {
  DirectClassifier out(config(), 0);
  copy_values(params_, out.params_);
  return out;
}

void DirectClassifier::save(const std::filesystem::path& path,
                            const nlohmann::json& provenance) const {
  save_parameters(path, params_);
  write_sidecar(path, {{"format_version", kFormatVersion},
                       {"kind", "direct"},
                       {"encoder", encoder_config_json(config())},
                       {"provenance", provenance}});
}

DirectClassifier DirectClassifier::load(const std::filesystem::path& path) {
  const nlohmann::json j = read_sidecar(path, "direct");
  DirectClassifier model(encoder_config_from_json(j.at("encoder")), 0);
  load_parameters(path, model.params_);
  return model;
}

std::string merge_name(Merge merge) {
  return merge == Merge::CONCAT ? "concat" : "subtract";
}

Merge merge_from_name(const std::string& name) {
  if (name == "concat") return Merge::CONCAT;
  if (name == "subtract") return Merge::SUBTRACT;
  throw FormatError("unknown merge mode '" + name + "'");
}

SiameseSimilarity::SiameseSimilarity(const EncoderConfig& config, Merge merge,
                                     std::uint64_t init_seed)
    : encoder_(config, params_, init_seed), merge_(merge) {
  Rng rng(derive_seed(init_seed, "init/head"));
  int in = merge == Merge::CONCAT ? 2 * config.embedding_dim : config.embedding_dim;
  const int widths[3] = {kHeadWidths[0], kHeadWidths[1], 1};
  for (int i = 0; i < 3; ++i) {
    const std::string stem = "head.fc" + std::to_string(i);
    head_w_.push_back(params_.add(
        stem + ".weight", init_weight({widths[i], in}, static_cast<std::size_t>(in), rng),
        true));
    head_b_.push_back(params_.add(stem + ".bias", Tensor({widths[i]}), false));
    in = widths[i];
  }
}

Tensor SiameseSimilarity::embed(const Tensor& image) const {
  return encoder_.forward(image);
}

Tensor SiameseSimilarity::forward_from_embeddings(const Tensor& ea, const Tensor& eb) const {
  Tensor x = merge_ == Merge::CONCAT ? concat(ea, eb) : subtract(ea, eb);
  x = relu(fully_connected(x, head_w_[0], head_b_[0]));
  x = relu(fully_connected(x, head_w_[1], head_b_[1]));
  return sigmoid(fully_connected(x, head_w_[2], head_b_[2]));
}

Tensor SiameseSimilarity::forward(const Tensor& a, const Tensor& b) const {
  return forward_from_embeddings(embed(a), embed(b));
}

float SiameseSimilarity::similarity(const Tensor& a, const Tensor& b) const {
  return forward(a, b).item();
}

float SiameseSimilarity::similarity_from_embeddings(const Tensor& ea,
                                                    const Tensor& eb) const {
  return forward_from_embeddings(ea, eb).item();
}

SiameseSimilarity SiameseSimilarity::clone() const {
  SiameseSimilarity out(config(), merge_, 0);
  copy_values(params_, out.params_);
  return out;
}

void SiameseSimilarity::save(const std::filesystem::path& path,
                             const nlohmann::json& provenance) const {
  save_parameters(path, params_);
  write_sidecar(path, {{"format_version", kFormatVersion},
                       {"kind", "siamese"},
                       {"encoder", encoder_config_json(config())},
                       {"merge", merge_name(merge_)},
                       {"provenance", provenance}});
}

SiameseSimilarity SiameseSimilarity::load(const std::filesystem::path& path) {
  const nlohmann::json j = read_sidecar(path, "siamese");
  Merge merge;
  try {
    merge = merge_from_name(j.at("merge").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model sidecar: ") + e.what());
  }
  SiameseSimilarity model(encoder_config_from_json(j.at("encoder")), merge, 0);
  load_parameters(path, model.params_);
  return model;
}

float predict_class(const DirectClassifier& model, const Tensor& image) {
  return model.predict(image);
}

float similarity(const SiameseSimilarity& model, const Tensor& a, const Tensor& b) {
  return model.similarity(a, b);
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p.replace_extension(".json");
  return p;
}

}  // namespace pairsim
