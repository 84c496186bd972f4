// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "umod/error.hpp"
#include "umod/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace umod;
using namespace umod::train;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.patience = 10;
  c.seeds = {0};
  return c;
}

}  // namespace

TEST_CASE("early stopping rule") {
  const std::vector<double> improving{3, 2, 1}, stalled{3, 2, 2.5, 2.6, 2.7}, reset{3, 2, 2.5, 1.9};
  CHECK_FALSE(early_stop_check(improving, 3));
  CHECK(early_stop_check(stalled, 3));
  CHECK_FALSE(early_stop_check(reset, 3));
  const std::vector<double> ties{2, 2, 2, 2};
  CHECK(early_stop_check(ties, 3));
  CHECK_FALSE(early_stop_check(std::vector<double>{2, 2, 2}, 3));
  CHECK_THROWS_AS(early_stop_check(improving, 0), Error);
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  c.validate();
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);

  TrainConfig d;
  d.objective = Objective::ContrastiveOnly;
  d.seeds = {4, 9};
  const TrainConfig back = train_config_from_json(to_json(d));
  CHECK(back.objective == Objective::ContrastiveOnly);
  CHECK(back.seeds == d.seeds);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"epochz", 1}}), Error);
  CHECK_THROWS_AS(parse_objective("mim_only"), Error);
}

TEST_CASE("contrastive-only objective reports total equal to L_c") {
  const auto cfg = testing::tiny_config();
  const auto params = model::init_params(cfg, 1);
  const auto samples = testing::tiny_samples(4, 2, cfg);
  const auto l1 = evaluate_loss(params, samples, {Objective::ContrastiveOnly, false, 1.0}, 4);
  CHECK(l1.total == l1.contrastive);
  CHECK(l1.mim == 0.0);
  const auto l2 = evaluate_loss(params, samples, {Objective::ContrastivePlusMim, false, 1.0}, 4);
  CHECK(l2.contrastive == doctest::Approx(l1.contrastive).epsilon(1e-12));
  CHECK(l2.total == doctest::Approx(l2.contrastive + l2.mim).epsilon(1e-12));
  CHECK(l2.mim > 0.0);
  const auto l3 = evaluate_loss(params, samples, {Objective::ContrastivePlusMim, true, 1.0}, 4);
  CHECK(l3.mim == doctest::Approx(l2.mim / model::masked_count(cfg.num_patches(), cfg.mask_ratio)).epsilon(1e-12));
}

TEST_CASE("full-model gradient matches finite differences on a sampled subset") {
  const auto cfg = testing::tiny_config();
  const auto params = model::init_params(cfg, 3);
  const auto samples = testing::tiny_samples(2, 5, cfg);
  const std::vector<std::vector<int>> masks{{0, 2}, {1, 3}};
  const auto ev = testing::objective_evaluator(params, samples, masks,
                                               {Objective::ContrastivePlusMim, false, 1.0});
  const auto flat = model::flatten(params);
  losses::GradCheckOptions opts;
  opts.max_coordinates = 600;
  opts.seed = 4;
  opts.denominator_floor = 1e-5;
  const auto fine = losses::grad_check(ev, flat, 1e-5, 1e-4, opts);
  CHECK(fine.passed);
  // Shrinking the step from 1e-3 to 1e-4 reduces the truncation error.
  opts.denominator_floor = 1e-6;
  const auto coarse = losses::grad_check(ev, flat, 1e-3, 1e-4, opts);
  const auto finer = losses::grad_check(ev, flat, 1e-4, 1e-4, opts);
  CHECK((finer.max_relative_error < coarse.max_relative_error || finer.passed));
}

TEST_CASE("AdamW decays only decay-marked parameters") {
  const auto cfg = testing::tiny_config();
  model::ModelParams params = model::init_params(cfg, 1);
  const model::ModelParams before = params;
  for (Parameter* p : params.parameters()) p->zero_grad();
  AdamW opt(params, 0.1, 0.9, 0.999, 1e-8, 0.5);
  opt.step(params);
  CHECK(opt.state().step == 1);
  const auto now = params.parameters();
  const auto then = before.parameters();
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (!now[i]->trainable) {
      CHECK(now[i]->value == then[i]->value);
    } else if (now[i]->decay) {
      CHECK(now[i]->value.isApprox(then[i]->value * (1.0 - 0.1 * 0.5)));
    } else {
      CHECK(now[i]->value == then[i]->value);
    }
  }
}

TEST_CASE("zero learning rate keeps parameters and halts at best epoch plus patience") {
  const auto cfg = testing::tiny_config();
  const auto init = model::init_params(cfg, 2);
  const auto train = testing::tiny_samples(8, 1, cfg), val = testing::tiny_samples(4, 2, cfg);
  TrainConfig c = small_config();
  c.learning_rate = 0.0;
  c.weight_decay = 0.0;
  c.epochs = 10;
  c.patience = 3;
  const auto r = finetune(init, train, val, c, 0);
  CHECK(model::same_values(r.best_params, init));
  CHECK(r.stopped_early);
  CHECK(r.best_epoch == 0);
  CHECK(r.stop_epoch == r.best_epoch + c.patience);
  REQUIRE(r.history.size() == 4);
  for (const auto& row : r.history) {
    CHECK(row.val_loss == doctest::Approx(r.history[0].val_loss).epsilon(1e-12));
    CHECK(row.train_loss == doctest::Approx(r.history[0].train_loss).epsilon(1e-12));
  }
}

TEST_CASE("one epoch on a memorizable batch reduces the training loss") {
  const auto cfg = testing::tiny_config();
  const auto init = model::init_params(cfg, 5);
  const auto train = testing::tiny_samples(4, 6, cfg);
  TrainConfig c = small_config();
  c.epochs = 1;
  const auto r = finetune(init, train, train, c, 1);
  REQUIRE(r.history.size() == 2);
  CHECK(r.history[1].train_loss < r.history[0].train_loss);
  CHECK(r.best_epoch == 1);
}

TEST_CASE("training is deterministic and resumes exactly") {
  const auto cfg = testing::tiny_config();
  const auto init = model::init_params(cfg, 7);
  const auto train = testing::tiny_samples(10, 3, cfg), val = testing::tiny_samples(4, 4, cfg);
  TrainConfig c = small_config();
  c.epochs = 4;

  const auto full_dir = testing::scratch_dir("resume_full"), part_dir = testing::scratch_dir("resume_part");
  FinetuneOptions full_opts;
  full_opts.checkpoint_dir = full_dir;
  const auto full = finetune(init, train, val, c, 3, full_opts);
  const auto again = finetune(init, train, val, c, 3);
  CHECK(full.history == again.history);

  FinetuneOptions part;
  part.checkpoint_dir = part_dir;
  part.stop_after_epochs = 2;
  const auto first = finetune(init, train, val, c, 3, part);
  CHECK(first.interrupted);
  CHECK(first.history.size() == 3);
  part.stop_after_epochs = 0;
  part.resume = true;
  const auto resumed = finetune(init, train, val, c, 3, part);
  CHECK(resumed.history == full.history);
  CHECK(model::same_values(resumed.best_params, full.best_params));
  CHECK(resumed.best_epoch == full.best_epoch);

  // Resuming a finished run returns its record unchanged.
  const auto done = finetune(init, train, val, c, 3, part);
  CHECK(done.history == full.history);
}

TEST_CASE("best parameters track the minimum validation loss") {
  const auto cfg = testing::tiny_config();
  const auto init = model::init_params(cfg, 8);
  const auto train = testing::tiny_samples(8, 5, cfg), val = testing::tiny_samples(4, 6, cfg);
  TrainConfig c = small_config();
  c.epochs = 4;
  const auto dir = testing::scratch_dir("best");
  FinetuneOptions o;
  o.checkpoint_dir = dir;
  const auto r = finetune(init, train, val, c, 2, o);
  double best = r.history[0].val_loss;
  int best_epoch = 0;
  for (const auto& row : r.history)
    if (row.val_loss < best) {
      best = row.val_loss;
      best_epoch = row.epoch;
    }
  CHECK(r.best_epoch == best_epoch);
  CHECK(r.best_val_loss == best);
  CHECK(model::same_values(load_checkpoint(dir / "best.ckpt").params, r.best_params));
  const auto val_loss = evaluate_loss(r.best_params, val, {c.objective, c.normalize_mim, c.lambda_mim}, c.batch_size);
  CHECK(val_loss.total == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("mid-epoch evaluation and callbacks") {
  const auto cfg = testing::tiny_config();
  const auto init = model::init_params(cfg, 9);
  const auto train = testing::tiny_samples(8, 7, cfg), val = testing::tiny_samples(4, 8, cfg);
  TrainConfig c = small_config();
  c.epochs = 2;
  c.eval_every = 1;
  const auto r = finetune(init, train, val, c, 4);
  CHECK(r.history.size() == 5);
  CHECK(r.history.back().step == 4);

  FinetuneOptions o;
  int calls = 0;
  o.on_epoch = [&](const HistoryRow&, const model::ModelParams&) { return ++calls < 2; };
  const auto stopped = finetune(init, train, val, small_config(), 4, o);
  CHECK(stopped.interrupted);
  CHECK(stopped.history.size() == 2);
}

TEST_CASE("a non-finite loss aborts with the last good parameters") {
  const auto cfg = testing::tiny_config();
  auto init = model::init_params(cfg, 10);
  init.image.patch_embed.weight.value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto train = testing::tiny_samples(4, 1, cfg);
  const auto r = finetune(init, train, train, small_config(), 0);
  CHECK(r.aborted);
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("history CSV columns follow the objective") {
  const std::vector<HistoryRow> h{{0, 0, 2.0, 1.0, 1.0, 2.5, 0.1}};
  const auto joint = history_csv(h, Objective::ContrastivePlusMim);
  const auto only = history_csv(h, Objective::ContrastiveOnly);
  CHECK(joint.rfind("epoch,train_loss,train_contrastive,train_mim,val_loss,val_acc\n", 0) == 0);
  CHECK(only.rfind("epoch,train_loss,val_loss,val_acc\n", 0) == 0);
  CHECK(only.find("mim") == std::string::npos);
}

TEST_CASE("multi-seed runs aggregate over seeds") {
  auto cfg = testing::tiny_config();
  synth::GenConfig g;
  g.n = 140;
  g.seed = 2;
  g.image = {cfg.image_height, cfg.image_width, cfg.patch_size};
  const auto data = synth::plan_dataset(g);
  TrainConfig c = small_config();
  c.epochs = 1;
  c.batch_size = 16;

  c.seeds = {3};
  const auto one = run_seeds(cfg, c, data, data);
  REQUIRE(one.runs.size() == 1);
  CHECK(one.runs[0].ok);
  CHECK(one.mean.accuracy == one.runs[0].test_report.accuracy);
  CHECK(one.stddev.accuracy == 0.0);
  CHECK(one.stddev.f1 == 0.0);

  c.seeds = {3, 3};
  const auto dir = testing::scratch_dir("seeds");
  RunSeedsOptions o;
  o.out_dir = dir;
  const auto twice = run_seeds(cfg, c, data, data, o);
  CHECK(twice.runs[0].test_report.accuracy == twice.runs[1].test_report.accuracy);
  CHECK(twice.runs[0].result.history == twice.runs[1].result.history);
  CHECK(twice.runs[0].result.history == one.runs[0].result.history);
  CHECK(std::filesystem::exists(dir / "aggregate.json"));
  CHECK(std::filesystem::exists(dir / "report_0_seed3.json"));
  CHECK(std::filesystem::exists(dir / "report_1_seed3.json"));
  const auto agg = aggregate_json(twice, c);
  CHECK(agg.at("runs").size() == 2);

  model::ModelConfig wrong = cfg;
  wrong.image_height = 32;
  wrong.image_width = 32;
  CHECK_THROWS_AS(run_seeds(wrong, c, data, data), Error);
}
