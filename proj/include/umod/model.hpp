// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Dual encoders, shared projection head, patch machinery, visual tokenizer and
// the masked-image-modeling decoder.

#pragma once

#include "umod/autograd.hpp"
#include "umod/image.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace umod::model {

struct ModelConfig {
  int image_height = 32;
  int image_width = 32;
  int patch_size = 16;
  int d_h = 64;  // hidden width of every transformer
  int d_e = 32;  // shared embedding width
  int n_layers_img = 2;
  int n_layers_txt = 2;
  int n_layers_mim = 1;
  int n_heads = 4;
  int mlp_ratio = 2;
  int vocab_text = 0;  // 0 resolves to the template vocabulary size
  int max_text_len = 40;
  int visual_vocab = 64;  // |V|
  double tau_init = 0.07;
  bool tau_learnable = false;
  double mask_ratio = 0.4;

  int d_image_input() const { return patch_size * patch_size * 3; }
  int d_text_input() const { return d_h; }
  int num_patches() const { return (image_height / patch_size) * (image_width / patch_size); }

  /// Throws ErrorKind::Config on any violated invariant.
  void validate() const;
  /// Copy with vocab_text resolved against the default text tokenizer.
  ModelConfig resolved() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Linear {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out
};

struct LayerNormParams {
  Parameter gain;
  Parameter bias;
};

struct Block {
  LayerNormParams ln1;
  Linear qkv;
  Linear out;
  LayerNormParams ln2;
  Linear fc1;
  Linear fc2;
};

struct ImageEncoder {
  Linear patch_embed;
  Parameter cls_token;
  Parameter mask_token;
  Parameter pos_embed;  // (N + 1) x d_h
  std::vector<Block> blocks;
  LayerNormParams ln_final;
};

struct TextEncoder {
  Parameter token_embed;  // vocab_text x d_h
  Parameter eos_token;
  Parameter pos_embed;  // (max_text_len + 1) x d_h
  std::vector<Block> blocks;
  LayerNormParams ln_final;
};

struct MimDecoder {
  std::vector<Block> blocks;
  LayerNormParams ln_final;
  Linear head;  // d_h x |V|
};

struct ModelParams {
  ModelConfig config;
  ImageEncoder image;
  TextEncoder text;
  Parameter projection;  // d_h x d_e, no bias
  MimDecoder mim;
  Parameter log_tau;     // 1 x 1

  double tau() const { return std::exp(log_tau.value(0, 0)); }

  /// Every parameter in a fixed order (the checkpoint order).
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
};

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

bool same_values(const ModelParams& a, const ModelParams& b);

/// Trainable parameter values concatenated in parameters() order.
std::vector<double> flatten(const ModelParams& params);
void unflatten(ModelParams& params, std::span<const double> values);
std::vector<double> flatten_grads(const ModelParams& params);

// ---------------------------------------------------------------------------
// Patches

/// N x (p*p*3) matrix, patches in row-major grid order, pixels row-major and
/// channels interleaved within each patch.
Matrix patchify(const Image& image, int patch_size);
Image unpatchify(const Matrix& patches, int height, int width, int patch_size);

struct MaskedPatches {
  Matrix patches;         // masked rows zeroed
  std::vector<int> mask;  // sorted indices of the masked patches
};

/// round(ratio * N) patches (at least one) chosen uniformly without replacement.
MaskedPatches mask_patches(const Matrix& patches, double mask_ratio, std::mt19937_64& rng);
int masked_count(int num_patches, double mask_ratio);

/// Discrete visual tokenizer: nearest codebook row, lowest index on ties.
struct PatchTokenizer {
  Matrix codebook;  // |V| x (p*p*3)

  std::vector<int> tokenize(const Matrix& patches) const;
  int vocab_size() const { return static_cast<int>(codebook.rows()); }
};

/// Fixed colour-grid quantizer: entry j is a constant patch whose RGB is cell j of
/// a uniform levels^3 grid (levels = cbrt(|V|)) with cell-centre intensities.
PatchTokenizer color_grid_tokenizer(int patch_size, int visual_vocab);

/// Optional learned codebook: Lloyd iterations seeded from distinct patches.
PatchTokenizer fit_codebook(const Matrix& patches, int visual_vocab, int iterations,
                            std::uint64_t seed);

std::vector<int> tokenize_patches(const PatchTokenizer& tokenizer, const Image& image,
                                  int patch_size);

// ---------------------------------------------------------------------------
// Text

/// Word-level tokenizer over a closed vocabulary: words split on spaces, with
/// ',' and '.' emitted as separate tokens.
class TextTokenizer {
 public:
  explicit TextTokenizer(std::vector<std::string> vocabulary);

  /// Throws ErrorKind::Data on a word outside the vocabulary.
  std::vector<int> encode(const std::string& text) const;
  int vocab_size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

/// Tokenizer over every word the synthetic profile template can emit.
const TextTokenizer& default_text_tokenizer();

// ---------------------------------------------------------------------------
// Forward passes. All take const parameters; gradients flow when the graph
// was created with gradients enabled.

/// (N + 1) x d_h features, cls first. Pixels are mapped from [0, 1] to [-1, 1]
/// before patch embedding. Rows listed in `mask` are replaced by the learned
/// mask token after patch embedding.
ag::Var encode_image(ag::Graph& g, const ModelParams& params, const Matrix& patches,
                     std::span<const int> mask = {});

/// (M + 1) x d_h features with the eos feature last. Causal self-attention.
ag::Var encode_text(ag::Graph& g, const ModelParams& params, std::span<const int> token_ids);

/// Unit-norm rows of global_features * P. A zero row falls back to e_0 with a warning.
ag::Var project(ag::Graph& g, const ModelParams& params, ag::Var global_features);

/// N x |V| logits for the patch positions of an encoded (masked) image.
ag::Var mim_decode(ag::Graph& g, const ModelParams& params, ag::Var image_features);

/// Global rows of encoder outputs.
ag::Var cls_feature(ag::Var image_features);
ag::Var eos_feature(ag::Var text_features);

// Inference conveniences (no gradient tape).
Eigen::RowVectorXd embed_image(const ModelParams& params, const Matrix& patches);
Eigen::RowVectorXd embed_text(const ModelParams& params, std::span<const int> token_ids);

}  // namespace umod::model
