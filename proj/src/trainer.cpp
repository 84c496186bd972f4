// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/trainer.hpp"

#include "umod/error.hpp"
#include "umod/losses.hpp"
#include "umod/seed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace umod::train {

namespace fs = std::filesystem;
using retrieval::PreparedSample;

std::string_view label(Objective o) {
  return o == Objective::ContrastiveOnly ? "contrastive_only" : "contrastive_plus_mim";
}

Objective parse_objective(std::string_view s) {
  if (s == "contrastive_only") return Objective::ContrastiveOnly;
  if (s == "contrastive_plus_mim") return Objective::ContrastivePlusMim;
  fail(ErrorKind::Config, "invalid objective '" + std::string(s) +
                              "' (expected contrastive_only or contrastive_plus_mim)");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Config, "train config: " + what);
  };
  require(epochs >= 1, "epochs must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(eval_batch_size >= 0, "eval_batch_size must be >= 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must lie in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
  require(!seeds.empty(), "at least one seed is required");
  require(eval_every >= 0, "eval_every must be >= 0");
  require(lambda_mim >= 0.0, "lambda_mim must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"eval_batch_size", c.eval_batch_size},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"patience", c.patience},
          {"seeds", c.seeds},
          {"objective", label(c.objective)},
          {"eval_every", c.eval_every},
          {"normalize_mim", c.normalize_mim},
          {"lambda_mim", c.lambda_mim},
          {"class_attribute", retrieval::label(c.class_attribute)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorKind::Config, "train config must be a JSON object");
  const std::set<std::string> known{"epochs",     "batch_size",   "eval_batch_size", "learning_rate",
                                    "weight_decay", "beta1",      "beta2",           "adam_eps",
                                    "patience",   "seeds",        "objective",       "eval_every",
                                    "normalize_mim", "lambda_mim", "class_attribute"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) fail(ErrorKind::Config, "unknown train config key '" + k + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("eval_batch_size", c.eval_batch_size);
    get("learning_rate", c.learning_rate);
    get("weight_decay", c.weight_decay);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("adam_eps", c.adam_eps);
    get("patience", c.patience);
    get("seeds", c.seeds);
    get("eval_every", c.eval_every);
    get("normalize_mim", c.normalize_mim);
    get("lambda_mim", c.lambda_mim);
    if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
    if (j.contains("class_attribute"))
      c.class_attribute = retrieval::parse_class_attribute(j.at("class_attribute").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, "train config: " + std::string(e.what()));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Objective

ag::Var batch_objective(ag::Graph& g, const model::ModelParams& params,
                        std::span<const PreparedSample* const> batch,
                        std::span<const std::vector<int>> masks, const ObjectiveOptions& options,
                        LossBreakdown* breakdown) {
  if (batch.empty()) fail(ErrorKind::Data, "batch_objective: empty batch");
  const bool with_mim = options.objective == Objective::ContrastivePlusMim;
  if (with_mim && masks.size() != batch.size())
    fail(ErrorKind::Config, "batch_objective: one mask per sample is required");

  std::vector<ag::Var> image_global, text_global, mim_terms;
  image_global.reserve(batch.size());
  text_global.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PreparedSample& s = *batch[i];
    image_global.push_back(model::cls_feature(model::encode_image(g, params, s.patches)));
    text_global.push_back(model::eos_feature(model::encode_text(g, params, s.text_tokens)));
    if (with_mim) {
      ag::Var masked = model::encode_image(g, params, s.patches, masks[i]);
      ag::Var logits = model::mim_decode(g, params, masked);
      ag::Var term = losses::mim(logits, s.visual_tokens, masks[i]);
      if (options.normalize_mim) term = ag::scale(term, 1.0 / static_cast<double>(masks[i].size()));
      mim_terms.push_back(term);
    }
  }
  ag::Var img = model::project(g, params, ag::concat_rows(image_global));
  ag::Var txt = model::project(g, params, ag::concat_rows(text_global));
  ag::Var lc = losses::contrastive(ag::matmul_nt(img, txt), g.param(params.log_tau));
  ag::Var total = lc;
  double mim_value = 0.0;
  if (with_mim) {
    ag::Var mim = ag::scale(ag::sum(ag::concat_rows(mim_terms)),
                            options.lambda_mim / static_cast<double>(batch.size()));
    mim_value = mim.scalar();
    total = ag::add(lc, mim);
  }
  if (breakdown) {
    breakdown->contrastive = lc.scalar();
    breakdown->mim = mim_value;
    breakdown->total = total.scalar();
  }
  return total;
}

std::vector<int> evaluation_mask(std::int64_t id, int num_patches, double mask_ratio) {
  std::mt19937_64 rng(derive_seed({0xE7A1ULL, static_cast<std::uint64_t>(id)}));
  return model::mask_patches(Matrix::Zero(num_patches, 1), mask_ratio, rng).mask;
}

LossBreakdown evaluate_loss(const model::ModelParams& params, const std::vector<PreparedSample>& samples,
                            const ObjectiveOptions& options, int batch_size) {
  if (samples.empty()) fail(ErrorKind::Data, "evaluate_loss: no samples");
  const bool with_mim = options.objective == Objective::ContrastivePlusMim;
  LossBreakdown acc;
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < samples.size(); start += bs) {
    const std::size_t end = std::min(samples.size(), start + bs);
    std::vector<const PreparedSample*> batch;
    std::vector<std::vector<int>> masks;
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(&samples[i]);
      if (with_mim)
        masks.push_back(evaluation_mask(samples[i].id, params.config.num_patches(),
                                        params.config.mask_ratio));
    }
    ag::Graph g(false);
    LossBreakdown b;
    batch_objective(g, params, batch, masks, options, &b);
    const double w = static_cast<double>(batch.size());
    acc.total += w * b.total;
    acc.contrastive += w * b.contrastive;
    acc.mim += w * b.mim;
  }
  const double n = static_cast<double>(samples.size());
  acc.total /= n;
  acc.contrastive /= n;
  acc.mim /= n;
  return acc;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamW::AdamW(const model::ModelParams& params, double lr, double beta1, double beta2, double eps,
             double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  for (const Parameter* p : params.parameters()) {
    state_.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state_.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::step(model::ModelParams& params) {
  const auto ps = params.parameters();
  if (ps.size() != state_.first_moment.size())
    fail(ErrorKind::Config, "AdamW: parameter list does not match optimizer state");
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Parameter& p = *ps[i];
    if (!p.trainable) continue;
    if (p.grad.size() != p.value.size()) p.zero_grad();
    Matrix& m = state_.first_moment[i];
    Matrix& v = state_.second_moment[i];
    m = beta1_ * m + (1.0 - beta1_) * p.grad;
    v = beta2_ * v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    Matrix update = (m / c1).array() / ((v / c2).array().sqrt() + eps_);
    if (p.decay) update += weight_decay_ * p.value;
    p.value -= lr_ * update;
  }
}

// ---------------------------------------------------------------------------
// Fine-tuning

bool early_stop_check(std::span<const double> val_history, int patience) {
  if (patience < 1) fail(ErrorKind::Config, "early_stop_check: patience must be >= 1");
  const auto n = val_history.size();
  const auto p = static_cast<std::size_t>(patience);
  if (n <= p) return false;
  const double best_before = *std::min_element(val_history.begin(), val_history.end() - patience);
  return std::all_of(val_history.end() - patience, val_history.end(),
                     [&](double v) { return !(v < best_before); });
}

namespace {

nlohmann::json history_json(const std::vector<HistoryRow>& history) {
  nlohmann::json a = nlohmann::json::array();
  for (const HistoryRow& r : history)
    a.push_back({r.epoch, r.step, r.train_loss, r.train_contrastive, r.train_mim, r.val_loss,
                 r.val_accuracy});
  return a;
}

std::vector<HistoryRow> history_from_json(const nlohmann::json& a) {
  std::vector<HistoryRow> out;
  for (const auto& e : a) {
    HistoryRow r;
    r.epoch = e.at(0).get<int>();
    r.step = e.at(1).get<std::int64_t>();
    r.train_loss = e.at(2).get<double>();
    r.train_contrastive = e.at(3).get<double>();
    r.train_mim = e.at(4).get<double>();
    r.val_loss = e.at(5).get<double>();
    r.val_accuracy = e.at(6).get<double>();
    out.push_back(r);
  }
  return out;
}

double val_accuracy(const model::ModelParams& params, const std::vector<PreparedSample>& val,
                    retrieval::ClassAttribute attribute) {
  std::map<std::int64_t, int> classes;
  for (const PreparedSample& s : val) classes[s.id] = retrieval::class_of(s.profile, attribute);
  return retrieval::evaluate(retrieval::embed_samples(params, val), classes).accuracy;
}

bool all_finite(const model::ModelParams& params) {
  for (const Parameter* p : params.parameters())
    if (p->trainable && !p->grad.allFinite()) return false;
  return true;
}

}  // namespace

TrainResult finetune(const model::ModelParams& initial, const std::vector<PreparedSample>& train,
                     const std::vector<PreparedSample>& val, const TrainConfig& config,
                     std::uint64_t seed, const FinetuneOptions& options) {
  config.validate();
  if (train.empty() || val.empty())
    fail(ErrorKind::Data, "finetune: train and val splits must be nonempty");

  const ObjectiveOptions objective{config.objective, config.normalize_mim, config.lambda_mim};
  const bool with_mim = config.objective == Objective::ContrastivePlusMim;
  const int eval_bs = config.eval_batch_size > 0 ? config.eval_batch_size : config.batch_size;
  const fs::path last_path = options.checkpoint_dir.empty() ? fs::path() : options.checkpoint_dir / "last.ckpt";
  const fs::path best_path = options.checkpoint_dir.empty() ? fs::path() : options.checkpoint_dir / "best.ckpt";

  model::ModelParams params = initial;
  AdamW optimizer(params, config.learning_rate, config.beta1, config.beta2, config.adam_eps,
                  config.weight_decay);
  TrainResult result;
  result.seed = seed;
  result.best_checkpoint = best_path;
  int epochs_done = 0;
  int evaluations = 0;

  auto state_json = [&](bool finished) {
    return nlohmann::json{{"seed", seed},
                          {"epochs_completed", epochs_done},
                          {"evaluations", evaluations},
                          {"history", history_json(result.history)},
                          {"best_epoch", result.best_epoch},
                          {"best_val_loss", result.best_val_loss},
                          {"stopped_early", result.stopped_early},
                          {"finished", finished},
                          {"objective", label(config.objective)},
                          {"rng", {{"scheme", "derived"}, {"seed", seed}, {"next_epoch", epochs_done + 1}}}};
  };
  auto save_last = [&](bool finished) {
    if (last_path.empty()) return;
    Checkpoint ck{params, optimizer.state(), state_json(finished)};
    save_checkpoint(last_path, ck);
  };

  // Evaluates, records, checkpoints; returns true when training should halt.
  auto record = [&](std::int64_t step) {
    HistoryRow row;
    row.epoch = evaluations++;
    row.step = step;
    const LossBreakdown tr = evaluate_loss(params, train, objective, eval_bs);
    row.train_loss = tr.total;
    row.train_contrastive = tr.contrastive;
    row.train_mim = tr.mim;
    row.val_loss = evaluate_loss(params, val, objective, eval_bs).total;
    row.val_accuracy = val_accuracy(params, val, config.class_attribute);
    result.history.push_back(row);
    if (result.history.size() == 1 || row.val_loss < result.best_val_loss) {
      result.best_val_loss = row.val_loss;
      result.best_epoch = row.epoch;
      result.best_params = params;
      if (!best_path.empty()) save_checkpoint(best_path, Checkpoint{params, std::nullopt, state_json(false)});
    }
    result.stop_epoch = row.epoch;
    std::vector<double> vals;
    for (const HistoryRow& r : result.history) vals.push_back(r.val_loss);
    if (early_stop_check(vals, config.patience)) {
      result.stopped_early = true;
      return true;
    }
    if (options.on_epoch && !options.on_epoch(row, params)) {
      result.interrupted = true;
      return true;
    }
    return false;
  };

  bool resumed = false;
  if (options.resume && !last_path.empty() && fs::exists(last_path)) {
    Checkpoint ck = load_checkpoint(last_path);
    if (ck.state.value("seed", std::uint64_t{0}) != seed)
      fail(ErrorKind::Config, "resume: checkpoint " + last_path.string() + " belongs to another seed");
    params = std::move(ck.params);
    if (ck.optimizer) optimizer.set_state(*ck.optimizer);
    epochs_done = ck.state.at("epochs_completed").get<int>();
    evaluations = ck.state.at("evaluations").get<int>();
    result.history = history_from_json(ck.state.at("history"));
    result.best_epoch = ck.state.at("best_epoch").get<int>();
    result.best_val_loss = ck.state.at("best_val_loss").get<double>();
    result.stopped_early = ck.state.at("stopped_early").get<bool>();
    result.stop_epoch = result.history.empty() ? 0 : result.history.back().epoch;
    result.best_params = fs::exists(best_path) ? load_checkpoint(best_path).params : params;
    resumed = true;
    if (ck.state.value("finished", false)) return result;
  }

  if (!resumed && record(0)) {
    save_last(true);
    return result;
  }
  if (!resumed) save_last(false);

  std::int64_t step = optimizer.state().step;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  bool halt = false;
  int epochs_this_run = 0;
  for (int epoch = epochs_done + 1; epoch <= config.epochs && !halt; ++epoch) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 order_rng(derive_seed({seed, 0x0DE5ULL, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), order_rng);

    for (std::size_t start = 0; start < order.size() && !halt; start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      // A trailing single-sample batch has no in-batch negatives.
      if (end - start < 2 && order.size() >= 2) continue;
      std::vector<const PreparedSample*> batch;
      std::vector<std::vector<int>> masks;
      for (std::size_t i = start; i < end; ++i) {
        const PreparedSample& s = train[order[i]];
        batch.push_back(&s);
        if (with_mim) {
          std::mt19937_64 mask_rng(derive_seed({seed, 0x3A5CULL, static_cast<std::uint64_t>(epoch),
                                                static_cast<std::uint64_t>(s.id)}));
          masks.push_back(model::mask_patches(s.patches, params.config.mask_ratio, mask_rng).mask);
        }
      }
      for (Parameter* p : params.parameters()) p->zero_grad();
      ag::Graph g;
      ag::Var loss = batch_objective(g, params, batch, masks, objective);
      if (!std::isfinite(loss.scalar())) {
        result.aborted = true;
        result.message = "non-finite loss at epoch " + std::to_string(epoch);
        return result;
      }
      g.backward(loss);
      const auto ps = params.parameters();
      g.accumulate_grads(ps);
      if (!all_finite(params)) {
        result.aborted = true;
        result.message = "non-finite gradient at epoch " + std::to_string(epoch);
        return result;
      }
      optimizer.step(params);
      ++step;
      if (config.eval_every > 0 && step % config.eval_every == 0) halt = record(step);
    }
    if (config.eval_every == 0 && !halt) halt = record(step);
    epochs_done = epoch;
    ++epochs_this_run;
    const bool finished = result.stopped_early || epoch == config.epochs;
    save_last(finished);
    if (!halt && options.stop_after_epochs > 0 && epochs_this_run >= options.stop_after_epochs &&
        !finished) {
      result.interrupted = true;
      break;
    }
  }
  return result;
}

std::string history_csv(const std::vector<HistoryRow>& history, Objective objective) {
  const bool with_mim = objective == Objective::ContrastivePlusMim;
  std::ostringstream os;
  os.precision(17);
  os << (with_mim ? "epoch,train_loss,train_contrastive,train_mim,val_loss,val_acc\n"
                  : "epoch,train_loss,val_loss,val_acc\n");
  for (const HistoryRow& r : history) {
    os << r.epoch << ',' << r.train_loss << ',';
    if (with_mim) os << r.train_contrastive << ',' << r.train_mim << ',';
    os << r.val_loss << ',' << r.val_accuracy << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Multi-seed runs

model::ModelParams init_for_seed(const model::ModelConfig& model_config, std::uint64_t seed) {
  return model::init_params(model_config, derive_seed({seed, 0x1417ULL}));
}

namespace {

MetricSummary summary(const retrieval::RetrievalReport& r) {
  return {r.accuracy, r.recall, r.precision, r.f1};
}

void aggregate(const std::vector<MetricSummary>& xs, MetricSummary& mean, MetricSummary& sd) {
  mean = {};
  sd = {};
  if (xs.empty()) return;
  const double n = static_cast<double>(xs.size());
  for (const MetricSummary& x : xs) {
    mean.accuracy += x.accuracy / n;
    mean.recall += x.recall / n;
    mean.precision += x.precision / n;
    mean.f1 += x.f1 / n;
  }
  for (const MetricSummary& x : xs) {
    sd.accuracy += (x.accuracy - mean.accuracy) * (x.accuracy - mean.accuracy) / n;
    sd.recall += (x.recall - mean.recall) * (x.recall - mean.recall) / n;
    sd.precision += (x.precision - mean.precision) * (x.precision - mean.precision) / n;
    sd.f1 += (x.f1 - mean.f1) * (x.f1 - mean.f1) / n;
  }
  sd.accuracy = std::sqrt(sd.accuracy);
  sd.recall = std::sqrt(sd.recall);
  sd.precision = std::sqrt(sd.precision);
  sd.f1 = std::sqrt(sd.f1);
}

nlohmann::ordered_json metrics_json(const MetricSummary& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["recall"] = m.recall;
  j["precision"] = m.precision;
  j["f1"] = m.f1;
  return j;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << content;
}

std::string run_name(std::size_t index, std::uint64_t seed) {
  return std::to_string(index) + "_seed" + std::to_string(seed);
}

}  // namespace

SeedsReport run_seeds(const model::ModelConfig& model_config, const TrainConfig& config,
                      const synth::DatasetManifest& data, const synth::DatasetManifest& test_data,
                      const RunSeedsOptions& options) {
  config.validate();
  const model::ModelConfig mc = model_config.resolved();
  mc.validate();
  for (const synth::DatasetManifest* m : {&data, &test_data}) {
    const synth::ImageSpec& s = m->config.image;
    if (s.height != mc.image_height || s.width != mc.image_width || s.patch_size != mc.patch_size)
      fail(ErrorKind::Config, "dataset images are " + std::to_string(s.height) + "x" +
                                  std::to_string(s.width) + "/" + std::to_string(s.patch_size) +
                                  " but the model expects " + std::to_string(mc.image_height) + "x" +
                                  std::to_string(mc.image_width) + "/" + std::to_string(mc.patch_size));
  }
  const auto train = retrieval::prepare_split(data, synth::Split::Train, mc);
  const auto val = retrieval::prepare_split(data, synth::Split::Val, mc);
  const auto test = retrieval::prepare_split(test_data, synth::Split::Test, mc);
  if (train.empty() || val.empty()) fail(ErrorKind::Data, "dataset needs nonempty train and val splits");
  if (test.empty()) fail(ErrorKind::Data, "dataset needs a nonempty test split");
  std::map<std::int64_t, int> test_classes;
  for (const PreparedSample& s : test) test_classes[s.id] = retrieval::class_of(s.profile, config.class_attribute);

  if (!options.out_dir.empty()) fs::create_directories(options.out_dir);

  SeedsReport report;
  report.runs.resize(config.seeds.size());
  auto run_one = [&](std::size_t i) {
    SeedRun& run = report.runs[i];
    run.seed = config.seeds[i];
    try {
      const model::ModelParams init = init_for_seed(mc, run.seed);
      run.init_report = retrieval::evaluate(retrieval::embed_samples(init, test), test_classes);
      FinetuneOptions fo;
      if (!options.out_dir.empty()) fo.checkpoint_dir = options.out_dir / "checkpoints" / run_name(i, run.seed);
      fo.resume = options.resume;
      fo.stop_after_epochs = options.stop_after_epochs;
      run.result = finetune(init, train, val, config, run.seed, fo);
      const auto emb = retrieval::embed_samples(run.result.best_params, test);
      run.test_report = retrieval::evaluate(emb, test_classes);
      run.test_recall_at_5 = retrieval::recall_at_k(emb, 5);
      run.ok = !run.result.aborted;
      if (run.result.aborted) run.error = run.result.message;
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
    }
    if (!options.out_dir.empty()) {
      write_file(options.out_dir / ("report_" + run_name(i, run.seed) + ".json"),
                 seed_run_json(run, config).dump(2) + "\n");
      write_file(options.out_dir / ("history_" + run_name(i, run.seed) + ".csv"),
                 history_csv(run.result.history, config.objective));
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1 || config.seeds.size() == 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < config.seeds.size(); i = next++) run_one(i);
      });
    for (std::thread& t : workers) t.join();
  }

  std::vector<MetricSummary> tuned, init;
  for (const SeedRun& r : report.runs) {
    if (!r.ok) continue;
    tuned.push_back(summary(r.test_report));
    init.push_back(summary(r.init_report));
  }
  aggregate(tuned, report.mean, report.stddev);
  aggregate(init, report.init_mean, report.init_stddev);
  if (!options.out_dir.empty())
    write_file(options.out_dir / "aggregate.json", aggregate_json(report, config).dump(2) + "\n");
  return report;
}

nlohmann::ordered_json seed_run_json(const SeedRun& run, const TrainConfig& config) {
  const bool with_mim = config.objective == Objective::ContrastivePlusMim;
  nlohmann::ordered_json j;
  j["seed"] = run.seed;
  j["status"] = run.ok ? "ok" : "failed";
  if (!run.ok) j["error"] = run.error;
  j["objective"] = label(config.objective);
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const HistoryRow& r : run.result.history) {
    nlohmann::ordered_json h;
    h["epoch"] = r.epoch;
    h["step"] = r.step;
    h["train_loss"] = r.train_loss;
    if (with_mim) {
      h["train_contrastive"] = r.train_contrastive;
      h["train_mim"] = r.train_mim;
    }
    h["val_loss"] = r.val_loss;
    h["val_acc"] = r.val_accuracy;
    hist.push_back(h);
  }
  j["history"] = hist;
  j["stop_epoch"] = run.result.stop_epoch;
  j["stopped_early"] = run.result.stopped_early;
  j["best_epoch"] = run.result.best_epoch;
  j["best_val_loss"] = run.result.best_val_loss;
  nlohmann::ordered_json metrics = metrics_json(summary(run.test_report));
  metrics["recall_at_5"] = run.test_recall_at_5;
  metrics["n_queries"] = run.test_report.n_queries;
  j["metrics"] = metrics;
  j["init_metrics"] = metrics_json(summary(run.init_report));
  return j;
}

nlohmann::ordered_json aggregate_json(const SeedsReport& report, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["objective"] = label(config.objective);
  j["class_attribute"] = retrieval::label(config.class_attribute);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  std::size_t ok = 0;
  for (const SeedRun& r : report.runs) {
    nlohmann::ordered_json e;
    e["seed"] = r.seed;
    e["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) e["error"] = r.error;
    e["stop_epoch"] = r.result.stop_epoch;
    e["metrics"] = metrics_json(summary(r.test_report));
    e["init_metrics"] = metrics_json(summary(r.init_report));
    runs.push_back(e);
    ok += r.ok ? 1 : 0;
  }
  j["runs"] = runs;
  j["n_ok"] = ok;
  j["mean"] = metrics_json(report.mean);
  j["std"] = metrics_json(report.stddev);
  j["init_mean"] = metrics_json(report.init_mean);
  j["init_std"] = metrics_json(report.init_stddev);
  return j;
}

}  // namespace umod::train
