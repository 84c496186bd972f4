// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/model.hpp"

#include "umod/error.hpp"
#include "umod/log.hpp"
#include "umod/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace umod::model {

// ---------------------------------------------------------------------------
// Config

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Config, "model config: " + what);
  };
  require(patch_size > 0 && image_height > 0 && image_width > 0, "dimensions must be positive");
  require(image_height % patch_size == 0 && image_width % patch_size == 0,
          "image size must be divisible by patch_size");
  require(d_h > 0 && d_e > 0 && n_heads > 0 && mlp_ratio > 0, "dims must be positive");
  require(d_h % n_heads == 0, "d_h must be divisible by n_heads");
  require(n_layers_img >= 0 && n_layers_txt >= 0 && n_layers_mim >= 0,
          "layer counts must be non-negative");
  require(vocab_text >= 0 && max_text_len > 0, "text vocabulary and length must be positive");
  require(visual_vocab > 0, "visual_vocab must be positive");
  require(tau_init > 0.0 && std::isfinite(tau_init), "tau_init must be positive");
  require(mask_ratio > 0.0 && mask_ratio < 1.0, "mask_ratio must lie in (0, 1)");
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.vocab_text == 0) c.vocab_text = default_text_tokenizer().vocab_size();
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"image_height", c.image_height}, {"image_width", c.image_width},
          {"patch_size", c.patch_size},     {"d_h", c.d_h},
          {"d_e", c.d_e},                   {"n_layers_img", c.n_layers_img},
          {"n_layers_txt", c.n_layers_txt}, {"n_layers_mim", c.n_layers_mim},
          {"n_heads", c.n_heads},           {"mlp_ratio", c.mlp_ratio},
          {"vocab_text", c.vocab_text},     {"max_text_len", c.max_text_len},
          {"visual_vocab", c.visual_vocab}, {"tau_init", c.tau_init},
          {"tau_learnable", c.tau_learnable}, {"mask_ratio", c.mask_ratio}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorKind::Config, "model config must be a JSON object");
  const std::set<std::string> known{"image_height", "image_width",  "patch_size",   "d_h",
                                    "d_e",          "n_layers_img", "n_layers_txt", "n_layers_mim",
                                    "n_heads",      "mlp_ratio",    "vocab_text",   "max_text_len",
                                    "visual_vocab", "tau_init",     "tau_learnable", "mask_ratio"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) fail(ErrorKind::Config, "unknown model config key '" + k + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("image_height", c.image_height);
    get("image_width", c.image_width);
    get("patch_size", c.patch_size);
    get("d_h", c.d_h);
    get("d_e", c.d_e);
    get("n_layers_img", c.n_layers_img);
    get("n_layers_txt", c.n_layers_txt);
    get("n_layers_mim", c.n_layers_mim);
    get("n_heads", c.n_heads);
    get("mlp_ratio", c.mlp_ratio);
    get("vocab_text", c.vocab_text);
    get("max_text_len", c.max_text_len);
    get("visual_vocab", c.visual_vocab);
    get("tau_init", c.tau_init);
    get("tau_learnable", c.tau_learnable);
    get("mask_ratio", c.mask_ratio);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, "model config: " + std::string(e.what()));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Parameter normal(std::string name, Index rows, Index cols, double stddev, bool decay) {
    Parameter p;
    p.name = std::move(name);
    p.value.resize(rows, cols);
    std::normal_distribution<double> dist(0.0, stddev);
    for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng_);
    p.decay = decay;
    p.zero_grad();
    return p;
  }

  static Parameter filled(std::string name, Index rows, Index cols, double v) {
    Parameter p;
    p.name = std::move(name);
    p.value = Matrix::Constant(rows, cols, v);
    p.decay = false;
    p.zero_grad();
    return p;
  }

  Linear linear(const std::string& name, int in, int out, double gain = 1.0) {
    return {normal(name + ".weight", in, out, gain / std::sqrt(static_cast<double>(in)), true),
            filled(name + ".bias", 1, out, 0.0)};
  }

  static LayerNormParams layer_norm(const std::string& name, int d) {
    return {filled(name + ".gain", 1, d, 1.0), filled(name + ".bias", 1, d, 0.0)};
  }

  Block block(const std::string& name, const ModelConfig& c) {
    const int hidden = c.d_h * c.mlp_ratio;
    Block b;
    b.ln1 = layer_norm(name + ".ln1", c.d_h);
    b.qkv = linear(name + ".qkv", c.d_h, 3 * c.d_h);
    b.out = linear(name + ".out", c.d_h, c.d_h, 0.5);
    b.ln2 = layer_norm(name + ".ln2", c.d_h);
    b.fc1 = linear(name + ".fc1", c.d_h, hidden);
    b.fc2 = linear(name + ".fc2", hidden, c.d_h, 0.5);
    return b;
  }

 private:
  std::mt19937_64 rng_;
};

void collect(Linear& l, std::vector<Parameter*>& out) {
  out.push_back(&l.weight);
  out.push_back(&l.bias);
}
void collect(LayerNormParams& l, std::vector<Parameter*>& out) {
  out.push_back(&l.gain);
  out.push_back(&l.bias);
}
void collect(Block& b, std::vector<Parameter*>& out) {
  collect(b.ln1, out);
  collect(b.qkv, out);
  collect(b.out, out);
  collect(b.ln2, out);
  collect(b.fc1, out);
  collect(b.fc2, out);
}

}  // namespace

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  collect(image.patch_embed, out);
  out.push_back(&image.cls_token);
  out.push_back(&image.mask_token);
  out.push_back(&image.pos_embed);
  for (Block& b : image.blocks) collect(b, out);
  collect(image.ln_final, out);
  out.push_back(&text.token_embed);
  out.push_back(&text.eos_token);
  out.push_back(&text.pos_embed);
  for (Block& b : text.blocks) collect(b, out);
  collect(text.ln_final, out);
  out.push_back(&projection);
  for (Block& b : mim.blocks) collect(b, out);
  collect(mim.ln_final, out);
  collect(mim.head, out);
  out.push_back(&log_tau);
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  auto mutable_view = const_cast<ModelParams*>(this)->parameters();
  return {mutable_view.begin(), mutable_view.end()};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams m;
  m.config = config.resolved();
  m.config.validate();
  const ModelConfig& c = m.config;
  Initializer init(seed);

  m.image.patch_embed = init.linear("image.patch_embed", c.d_image_input(), c.d_h);
  m.image.cls_token = init.normal("image.cls_token", 1, c.d_h, 0.02, false);
  m.image.mask_token = init.normal("image.mask_token", 1, c.d_h, 0.02, false);
  m.image.pos_embed = init.normal("image.pos_embed", c.num_patches() + 1, c.d_h, 0.02, false);
  for (int i = 0; i < c.n_layers_img; ++i)
    m.image.blocks.push_back(init.block("image.blocks." + std::to_string(i), c));
  m.image.ln_final = Initializer::layer_norm("image.ln_final", c.d_h);

  m.text.token_embed = init.normal("text.token_embed", c.vocab_text, c.d_h, 0.02, false);
  m.text.eos_token = init.normal("text.eos_token", 1, c.d_h, 0.02, false);
  m.text.pos_embed = init.normal("text.pos_embed", c.max_text_len + 1, c.d_h, 0.02, false);
  for (int i = 0; i < c.n_layers_txt; ++i)
    m.text.blocks.push_back(init.block("text.blocks." + std::to_string(i), c));
  m.text.ln_final = Initializer::layer_norm("text.ln_final", c.d_h);

  m.projection = init.normal("projection", c.d_h, c.d_e, 1.0 / std::sqrt(c.d_h), true);

  for (int i = 0; i < c.n_layers_mim; ++i)
    m.mim.blocks.push_back(init.block("mim.blocks." + std::to_string(i), c));
  m.mim.ln_final = Initializer::layer_norm("mim.ln_final", c.d_h);
  m.mim.head = init.linear("mim.head", c.d_h, c.visual_vocab);

  m.log_tau = Initializer::filled("log_tau", 1, 1, std::log(c.tau_init));
  m.log_tau.trainable = c.tau_learnable;
  return m;
}

bool same_values(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config)) return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name != pb[i]->name || pa[i]->trainable != pb[i]->trainable) return false;
    if (pa[i]->value.rows() != pb[i]->value.rows() || pa[i]->value.cols() != pb[i]->value.cols())
      return false;
    if (pa[i]->value != pb[i]->value) return false;
  }
  return true;
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> out;
  for (const Parameter* p : params.parameters())
    if (p->trainable) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

std::vector<double> flatten_grads(const ModelParams& params) {
  std::vector<double> out;
  for (const Parameter* p : params.parameters()) {
    if (!p->trainable) continue;
    if (p->grad.size() == p->value.size())
      out.insert(out.end(), p->grad.data(), p->grad.data() + p->grad.size());
    else
      out.insert(out.end(), static_cast<std::size_t>(p->value.size()), 0.0);
  }
  return out;
}

void unflatten(ModelParams& params, std::span<const double> values) {
  std::size_t at = 0;
  for (Parameter* p : params.parameters()) {
    if (!p->trainable) continue;
    const auto n = static_cast<std::size_t>(p->value.size());
    if (at + n > values.size()) fail(ErrorKind::Config, "unflatten: too few values");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), n, p->value.data());
    at += n;
  }
  if (at != values.size()) fail(ErrorKind::Config, "unflatten: too many values");
}

// ---------------------------------------------------------------------------
// Patches

Matrix patchify(const Image& image, int patch_size) {
  if (patch_size <= 0 || image.height % patch_size != 0 || image.width % patch_size != 0)
    fail(ErrorKind::Config, "patchify: image " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " not divisible by patch size " +
                                std::to_string(patch_size));
  const int gh = image.height / patch_size, gw = image.width / patch_size;
  const int dim = patch_size * patch_size * 3;
  Matrix out(gh * gw, dim);
  for (int py = 0; py < gh; ++py)
    for (int px = 0; px < gw; ++px) {
      const Index row = py * gw + px;
      Index col = 0;
      for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
          for (int c = 0; c < 3; ++c)
            out(row, col++) = image.at(py * patch_size + y, px * patch_size + x, c);
    }
  return out;
}

Image unpatchify(const Matrix& patches, int height, int width, int patch_size) {
  if (patch_size <= 0 || height % patch_size != 0 || width % patch_size != 0)
    fail(ErrorKind::Config, "unpatchify: dimensions not divisible by patch size");
  const int gh = height / patch_size, gw = width / patch_size;
  if (patches.rows() != gh * gw || patches.cols() != patch_size * patch_size * 3)
    fail(ErrorKind::Data, "unpatchify: patch matrix has the wrong shape");
  Image image(height, width);
  for (int py = 0; py < gh; ++py)
    for (int px = 0; px < gw; ++px) {
      const Index row = py * gw + px;
      Index col = 0;
      for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
          for (int c = 0; c < 3; ++c)
            image.at(py * patch_size + y, px * patch_size + x, c) = patches(row, col++);
    }
  return image;
}

int masked_count(int num_patches, double mask_ratio) {
  const int k = static_cast<int>(std::lround(mask_ratio * num_patches));
  return std::clamp(k, 1, std::max(1, num_patches));
}

MaskedPatches mask_patches(const Matrix& patches, double mask_ratio, std::mt19937_64& rng) {
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0))
    fail(ErrorKind::Config, "mask_patches: mask_ratio must lie in (0, 1)");
  const int n = static_cast<int>(patches.rows());
  if (n == 0) fail(ErrorKind::Data, "mask_patches: no patches");
  const int k = masked_count(n, mask_ratio);
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  MaskedPatches out;
  out.mask.assign(order.begin(), order.begin() + k);
  std::sort(out.mask.begin(), out.mask.end());
  out.patches = patches;
  for (int r : out.mask) out.patches.row(r).setZero();
  return out;
}

std::vector<int> PatchTokenizer::tokenize(const Matrix& patches) const {
  if (codebook.rows() == 0) fail(ErrorKind::Config, "tokenize_patches: empty codebook");
  if (patches.cols() != codebook.cols())
    fail(ErrorKind::Data, "tokenize_patches: patch dimension " + std::to_string(patches.cols()) +
                              " does not match codebook dimension " +
                              std::to_string(codebook.cols()));
  std::vector<int> out(static_cast<std::size_t>(patches.rows()));
  for (Index r = 0; r < patches.rows(); ++r) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < codebook.rows(); ++j) {
      const double d = (patches.row(r) - codebook.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

PatchTokenizer color_grid_tokenizer(int patch_size, int visual_vocab) {
  const int levels = static_cast<int>(std::lround(std::cbrt(static_cast<double>(visual_vocab))));
  if (visual_vocab <= 0 || levels * levels * levels != visual_vocab)
    fail(ErrorKind::Config, "color grid tokenizer needs a cubic vocabulary size, got " +
                                std::to_string(visual_vocab));
  const int pixels = patch_size * patch_size;
  PatchTokenizer t;
  t.codebook.resize(visual_vocab, pixels * 3);
  for (int j = 0; j < visual_vocab; ++j) {
    const int rgb[3] = {j / (levels * levels), (j / levels) % levels, j % levels};
    for (int p = 0; p < pixels; ++p)
      for (int c = 0; c < 3; ++c) t.codebook(j, p * 3 + c) = (rgb[c] + 0.5) / levels;
  }
  return t;
}

PatchTokenizer fit_codebook(const Matrix& patches, int visual_vocab, int iterations,
                            std::uint64_t seed) {
  if (patches.rows() == 0 || visual_vocab <= 0)
    fail(ErrorKind::Config, "fit_codebook: need patches and a positive vocabulary size");
  std::mt19937_64 rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(patches.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  PatchTokenizer t;
  t.codebook.resize(visual_vocab, patches.cols());
  for (int j = 0; j < visual_vocab; ++j)
    t.codebook.row(j) = patches.row(order[static_cast<std::size_t>(j) % order.size()]);
  for (int it = 0; it < iterations; ++it) {
    const std::vector<int> assign = t.tokenize(patches);
    Matrix sums = Matrix::Zero(visual_vocab, patches.cols());
    std::vector<int> counts(static_cast<std::size_t>(visual_vocab), 0);
    for (Index r = 0; r < patches.rows(); ++r) {
      sums.row(assign[static_cast<std::size_t>(r)]) += patches.row(r);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(r)])];
    }
    for (int j = 0; j < visual_vocab; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0)
        t.codebook.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
  }
  return t;
}

std::vector<int> tokenize_patches(const PatchTokenizer& tokenizer, const Image& image,
                                  int patch_size) {
  return tokenizer.tokenize(patchify(image, patch_size));
}

// ---------------------------------------------------------------------------
// Text

TextTokenizer::TextTokenizer(std::vector<std::string> vocabulary) : words_(std::move(vocabulary)) {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (!ids_.emplace(words_[i], static_cast<int>(i)).second)
      fail(ErrorKind::Config, "duplicate vocabulary word '" + words_[i] + "'");
}

std::vector<int> TextTokenizer::encode(const std::string& text) const {
  std::vector<int> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    auto it = ids_.find(cur);
    if (it == ids_.end()) fail(ErrorKind::Data, "word '" + cur + "' is not in the vocabulary");
    out.push_back(it->second);
    cur.clear();
  };
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n') {
      flush();
    } else if (ch == ',' || ch == '.') {
      flush();
      cur = std::string(1, ch);
      flush();
    } else {
      cur += ch;
    }
  }
  flush();
  return out;
}

const TextTokenizer& default_text_tokenizer() {
  static const TextTokenizer tokenizer(synth::template_vocabulary());
  return tokenizer;
}

// ---------------------------------------------------------------------------
// Forward passes

namespace {

ag::Var linear(ag::Graph& g, ag::Var x, const Linear& l) {
  return ag::add_row(ag::matmul(x, g.param(l.weight)), g.param(l.bias));
}

ag::Var norm(ag::Graph& g, ag::Var x, const LayerNormParams& ln) {
  return ag::layer_norm(x, g.param(ln.gain), g.param(ln.bias));
}

ag::Var block_forward(ag::Graph& g, ag::Var x, const Block& b, int heads, bool causal) {
  const Index d = x.cols();
  const Index dk = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  ag::Var qkv = linear(g, norm(g, x, b.ln1), b.qkv);
  std::vector<ag::Var> head_out;
  head_out.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    ag::Var q = ag::slice_cols(qkv, h * dk, dk);
    ag::Var k = ag::slice_cols(qkv, d + h * dk, dk);
    ag::Var v = ag::slice_cols(qkv, 2 * d + h * dk, dk);
    ag::Var att = ag::softmax_rows(ag::scale(ag::matmul_nt(q, k), inv_sqrt), causal);
    head_out.push_back(ag::matmul(att, v));
  }
  x = ag::add(x, linear(g, ag::concat_cols(head_out), b.out));
  ag::Var hidden = ag::gelu(linear(g, norm(g, x, b.ln2), b.fc1));
  return ag::add(x, linear(g, hidden, b.fc2));
}

}  // namespace

ag::Var encode_image(ag::Graph& g, const ModelParams& params, const Matrix& patches,
                     std::span<const int> mask) {
  const ModelConfig& c = params.config;
  if (patches.rows() != c.num_patches() || patches.cols() != c.d_image_input())
    fail(ErrorKind::Data, "encode_image: expected " + std::to_string(c.num_patches()) + "x" +
                              std::to_string(c.d_image_input()) + " patches, got " +
                              std::to_string(patches.rows()) + "x" +
                              std::to_string(patches.cols()));
  const Matrix centered = (2.0 * patches.array() - 1.0).matrix();
  ag::Var x = linear(g, g.constant(centered), params.image.patch_embed);
  if (!mask.empty()) x = ag::replace_rows(x, mask, g.param(params.image.mask_token));
  const std::array<ag::Var, 2> parts{g.param(params.image.cls_token), x};
  x = ag::add(ag::concat_rows(parts), g.param(params.image.pos_embed));
  for (const Block& b : params.image.blocks) x = block_forward(g, x, b, c.n_heads, false);
  return norm(g, x, params.image.ln_final);
}

ag::Var encode_text(ag::Graph& g, const ModelParams& params, std::span<const int> token_ids) {
  const ModelConfig& c = params.config;
  if (static_cast<int>(token_ids.size()) > c.max_text_len)
    fail(ErrorKind::Data, "encode_text: " + std::to_string(token_ids.size()) +
                              " tokens exceeds max_text_len " + std::to_string(c.max_text_len));
  for (int id : token_ids)
    if (id < 0 || id >= c.vocab_text)
      fail(ErrorKind::Data, "encode_text: token id " + std::to_string(id) + " out of vocabulary");
  const Index m = static_cast<Index>(token_ids.size());
  ag::Var eos = g.param(params.text.eos_token);
  ag::Var x = eos;
  if (m > 0) {
    const std::array<ag::Var, 2> parts{ag::gather_rows(g.param(params.text.token_embed), token_ids),
                                       eos};
    x = ag::concat_rows(parts);
  }
  x = ag::add(x, ag::slice_rows(g.param(params.text.pos_embed), 0, m + 1));
  for (const Block& b : params.text.blocks) x = block_forward(g, x, b, c.n_heads, true);
  return norm(g, x, params.text.ln_final);
}

ag::Var project(ag::Graph& g, const ModelParams& params, ag::Var global_features) {
  if (global_features.cols() != params.config.d_h)
    fail(ErrorKind::Data, "project: feature width does not match d_h");
  ag::Var z = ag::matmul(global_features, g.param(params.projection));
  for (Index r = 0; r < z.rows(); ++r)
    if (z.value().row(r).squaredNorm() == 0.0)
      log_warning("project: zero pre-normalization vector; using the first basis vector");
  return ag::l2_normalize_rows(z);
}

ag::Var mim_decode(ag::Graph& g, const ModelParams& params, ag::Var image_features) {
  const ModelConfig& c = params.config;
  if (image_features.rows() != c.num_patches() + 1 || image_features.cols() != c.d_h)
    fail(ErrorKind::Data, "mim_decode: expected encode_image output of shape (N+1, d_h)");
  ag::Var x = image_features;
  for (const Block& b : params.mim.blocks) x = block_forward(g, x, b, c.n_heads, false);
  x = norm(g, x, params.mim.ln_final);
  return linear(g, ag::slice_rows(x, 1, c.num_patches()), params.mim.head);
}

ag::Var cls_feature(ag::Var image_features) { return ag::slice_rows(image_features, 0, 1); }

ag::Var eos_feature(ag::Var text_features) {
  return ag::slice_rows(text_features, text_features.rows() - 1, 1);
}

Eigen::RowVectorXd embed_image(const ModelParams& params, const Matrix& patches) {
  ag::Graph g(false);
  return project(g, params, cls_feature(encode_image(g, params, patches))).value().row(0);
}

Eigen::RowVectorXd embed_text(const ModelParams& params, std::span<const int> token_ids) {
  ag::Graph g(false);
  return project(g, params, eos_feature(encode_text(g, params, token_ids))).value().row(0);
}

}  // namespace umod::model
