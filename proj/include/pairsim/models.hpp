#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "pairsim/ops.hpp"
#include "pairsim/params.hpp"

namespace pairsim {

struct ConvBlockSpec {
  int out_channels = 32;
  int kernel_size = 3;   // odd; convolutions pad to keep H and W ("same")
  bool pool = true;      // 2x2 max pool after the activation
};

struct EncoderConfig {
  std::vector<ConvBlockSpec> conv_blocks = {{32, 3, true}, {64, 3, true},
                                            {128, 3, true}, {128, 3, true}};
  int embedding_dim = 256;
  Shape input_shape = {1, 32, 32};  // D, H, W
};

// Validates the whole shape chain (kernel oddness, pooling on even dims,
// positive sizes) and returns the flattened feature count feeding the
// embedding layer. Throws DimensionError / DomainError with the offending
// block named.
std::size_t validate_encoder_config(const EncoderConfig& config);

nlohmann::json encoder_config_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

// Conv-relu(-pool) stack plus a fully connected projection to the embedding,
// relu-activated. Parameters are registered into the owning model's map; the
// encoder itself only holds aliasing handles, which is what makes Siamese
// weight tying structural.
class Encoder {
 public:
  Encoder(const EncoderConfig& config, ParameterMap& params, std::uint64_t init_seed);

  Tensor forward(const Tensor& image) const;
  const EncoderConfig& config() const { return config_; }

 private:
  EncoderConfig config_;
  std::vector<Tensor> conv_w_, conv_b_;
  Tensor fc_w_, fc_b_;
};

// Single-branch baseline: encoder -> one fully connected unit -> sigmoid.
class DirectClassifier {
 public:
  explicit DirectClassifier(const EncoderConfig& config, std::uint64_t init_seed = 0);

  // Scalar tensor in (0,1); records on the active tape.
  Tensor forward(const Tensor& image) const;
  // Tape-free probability.
  float predict(const Tensor& image) const;

  ParameterMap& params() { return params_; }
  const ParameterMap& params() const { return params_; }
  const EncoderConfig& config() const { return encoder_.config(); }

  DirectClassifier clone() const;
  void save(const std::filesystem::path& path,
            const nlohmann::json& provenance = nlohmann::json::object()) const;
  static DirectClassifier load(const std::filesystem::path& path);

 private:
  ParameterMap params_;
  Encoder encoder_;
  Tensor head_w_, head_b_;
};

enum class Merge { CONCAT, SUBTRACT };

std::string merge_name(Merge merge);
Merge merge_from_name(const std::string& name);

// Tied-branch pair network: one encoder parameter set applied to both
// inputs, merged, then a three-layer head ending in a sigmoid. The output is
// the probability that the two inputs share a class.
class SiameseSimilarity {
 public:
  SiameseSimilarity(const EncoderConfig& config, Merge merge = Merge::CONCAT,
                    std::uint64_t init_seed = 0);

  Tensor forward(const Tensor& a, const Tensor& b) const;
  // Tape-free probability.
  float similarity(const Tensor& a, const Tensor& b) const;

  // Branch output for one image; lets callers cache embeddings and finish
  // many pairs through the head alone.
  Tensor embed(const Tensor& image) const;
  Tensor forward_from_embeddings(const Tensor& ea, const Tensor& eb) const;
  float similarity_from_embeddings(const Tensor& ea, const Tensor& eb) const;

  ParameterMap& params() { return params_; }
  const ParameterMap& params() const { return params_; }
  const EncoderConfig& config() const { return encoder_.config(); }
  Merge merge() const { return merge_; }

  SiameseSimilarity clone() const;
  void save(const std::filesystem::path& path,
            const nlohmann::json& provenance = nlohmann::json::object()) const;
  static SiameseSimilarity load(const std::filesystem::path& path);

 private:
  ParameterMap params_;
  Encoder encoder_;
  Merge merge_;
  std::vector<Tensor> head_w_, head_b_;
};

// Spec-facing wrappers over the member functions.
float predict_class(const DirectClassifier& model, const Tensor& image);
float similarity(const SiameseSimilarity& model, const Tensor& a, const Tensor& b);

// Sidecar path for a checkpoint: same stem with a .json extension.
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

}  // namespace pairsim
