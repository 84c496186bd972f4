// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Contrastive fine-tuning with an optional masked-image-modeling term,
// validation-loss early stopping and multi-seed orchestration.

#pragma once

#include "umod/checkpoint.hpp"
#include "umod/model.hpp"
#include "umod/retrieval.hpp"
#include "umod/synthgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace umod::train {

enum class Objective { ContrastiveOnly, ContrastivePlusMim };
std::string_view label(Objective o);
Objective parse_objective(std::string_view s);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  int eval_batch_size = 0;  // 0 uses batch_size
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 3;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  Objective objective = Objective::ContrastivePlusMim;
  int eval_every = 0;  // optimizer steps between evaluations; 0 evaluates once per epoch
  bool normalize_mim = false;  // divide each image's masked-token sum by |M|
  double lambda_mim = 1.0;
  retrieval::ClassAttribute class_attribute = retrieval::ClassAttribute::Ethnicity;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Objective

struct LossBreakdown {
  double total = 0.0;
  double contrastive = 0.0;
  double mim = 0.0;  // already scaled by lambda_mim; 0 when the term is absent
};

struct ObjectiveOptions {
  Objective objective = Objective::ContrastivePlusMim;
  bool normalize_mim = false;
  double lambda_mim = 1.0;
};

/// Builds the batch objective on `g`: L_c over the batch's in-batch similarity
/// matrix plus, when enabled, lambda * mean over images of the per-image masked
/// token loss. `masks` holds one mask per sample and is ignored for
/// contrastive-only training, where the MIM branch is never built.
ag::Var batch_objective(ag::Graph& g, const model::ModelParams& params,
                        std::span<const retrieval::PreparedSample* const> batch,
                        std::span<const std::vector<int>> masks, const ObjectiveOptions& options,
                        LossBreakdown* breakdown = nullptr);

/// Deterministic loss over a split: batches of `batch_size` in sample order with
/// fixed per-sample masks, weighted by batch size.
LossBreakdown evaluate_loss(const model::ModelParams& params,
                            const std::vector<retrieval::PreparedSample>& samples,
                            const ObjectiveOptions& options, int batch_size);

/// Mask used for sample `id` in deterministic evaluation passes.
std::vector<int> evaluation_mask(std::int64_t id, int num_patches, double mask_ratio);

// ---------------------------------------------------------------------------
// Optimizer

/// Adam with decoupled weight decay, applied only to parameters marked `decay`.
class AdamW {
 public:
  AdamW(const model::ModelParams& params, double lr, double beta1, double beta2, double eps,
        double weight_decay);

  void step(model::ModelParams& params);
  const OptimizerState& state() const { return state_; }
  void set_state(OptimizerState s) { state_ = std::move(s); }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  OptimizerState state_;
};

// ---------------------------------------------------------------------------
// Fine-tuning

/// True iff the last `patience` values all fail to strictly improve on the
/// best value recorded before them.
bool early_stop_check(std::span<const double> val_history, int patience);

struct HistoryRow {
  int epoch = 0;  // evaluation index; 0 is the pre-training baseline
  std::int64_t step = 0;
  double train_loss = 0.0;
  double train_contrastive = 0.0;
  double train_mim = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const HistoryRow&) const = default;
};

struct TrainResult {
  model::ModelParams best_params;
  std::filesystem::path best_checkpoint;  // empty when not checkpointing
  std::vector<HistoryRow> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  int stop_epoch = 0;
  std::uint64_t seed = 0;
  bool aborted = false;      // non-finite loss; best_params is the last good checkpoint
  bool interrupted = false;  // halted by stop_after_epochs or the epoch callback
  std::string message;
};

struct FinetuneOptions {
  std::filesystem::path checkpoint_dir;  // best.ckpt and last.ckpt; empty disables
  bool resume = false;                   // continue from checkpoint_dir/last.ckpt when present
  int stop_after_epochs = 0;             // simulate an interruption after this many epochs
  std::function<bool(const HistoryRow&, const model::ModelParams&)> on_epoch;  // false stops
};

TrainResult finetune(const model::ModelParams& initial, const std::vector<retrieval::PreparedSample>& train,
                     const std::vector<retrieval::PreparedSample>& val, const TrainConfig& config,
                     std::uint64_t seed, const FinetuneOptions& options = {});

/// Writes epoch,train_loss,[train_contrastive,train_mim,]val_loss,val_acc. The two
/// MIM columns only appear for the joint objective.
std::string history_csv(const std::vector<HistoryRow>& history, Objective objective);

// ---------------------------------------------------------------------------
// Multi-seed runs

struct MetricSummary {
  double accuracy = 0.0, recall = 0.0, precision = 0.0, f1 = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrainResult result;
  retrieval::RetrievalReport test_report;
  retrieval::RetrievalReport init_report;  // same split, untrained parameters
  double test_recall_at_5 = 0.0;
};

struct SeedsReport {
  std::vector<SeedRun> runs;
  MetricSummary mean, stddev;            // fine-tuned, over successful runs
  MetricSummary init_mean, init_stddev;  // random initialization
};

struct RunSeedsOptions {
  std::filesystem::path out_dir;  // per-seed reports, histories, checkpoints; empty disables
  bool resume = false;
  int stop_after_epochs = 0;
  int jobs = 1;
};

/// Fine-tunes once per seed (independent initialization and data order) on the
/// train/val splits of `data` and scores the test split of `test_data`.
SeedsReport run_seeds(const model::ModelConfig& model_config, const TrainConfig& config,
                      const synth::DatasetManifest& data, const synth::DatasetManifest& test_data,
                      const RunSeedsOptions& options = {});

/// Seed-specific parameter initialization.
model::ModelParams init_for_seed(const model::ModelConfig& model_config, std::uint64_t seed);

nlohmann::ordered_json seed_run_json(const SeedRun& run, const TrainConfig& config);
nlohmann::ordered_json aggregate_json(const SeedsReport& report, const TrainConfig& config);

}  // namespace umod::train
