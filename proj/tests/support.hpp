// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include "umod/losses.hpp"
#include "umod/model.hpp"
#include "umod/retrieval.hpp"
#include "umod/synthgen.hpp"
#include "umod/trainer.hpp"

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

namespace umod::testing {

/// d_h 16, 16x16 images in four 8x8 patches, one block per tower.
inline model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.image_height = 16;
  c.image_width = 16;
  c.patch_size = 8;
  c.d_h = 16;
  c.d_e = 8;
  c.n_layers_img = 1;
  c.n_layers_txt = 1;
  c.n_layers_mim = 1;
  c.n_heads = 2;
  c.visual_vocab = 8;
  c.mask_ratio = 0.5;
  return c.resolved();
}

/// Rendered, tokenized pairs without touching the disk.
inline std::vector<retrieval::PreparedSample> tiny_samples(std::int64_t n, std::uint64_t seed,
                                                           const model::ModelConfig& config) {
  const synth::ImageSpec spec{config.image_height, config.image_width, config.patch_size};
  const auto manifest = synth::plan_pairs(n, seed, spec);
  return retrieval::prepare_split(manifest, synth::Split::Train, config);
}

/// Loss and gradient of the batch objective as functions of the flattened
/// trainable parameters.
inline losses::LossEvaluator objective_evaluator(const model::ModelParams& base,
                                                 const std::vector<retrieval::PreparedSample>& samples,
                                                 const std::vector<std::vector<int>>& masks,
                                                 const train::ObjectiveOptions& options) {
  auto run = [=](std::span<const double> flat, bool with_grad) {
    model::ModelParams p = base;
    model::unflatten(p, flat);
    std::vector<const retrieval::PreparedSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    ag::Graph g(with_grad);
    ag::Var loss = train::batch_objective(g, p, batch, masks, options);
    std::vector<double> grad;
    if (with_grad) {
      for (Parameter* q : p.parameters()) q->zero_grad();
      g.backward(loss);
      const auto ps = p.parameters();
      g.accumulate_grads(ps);
      grad = model::flatten_grads(p);
    }
    return std::pair{loss.scalar(), grad};
  };
  return {[run](std::span<const double> x) { return run(x, false).first; },
          [run](std::span<const double> x) { return run(x, true).second; }};
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("umod_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace umod::testing
