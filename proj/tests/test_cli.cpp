// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end checks of the umod executable: exit codes, determinism from lock
// files, resume, and report equivalence across embedding sources.

#include "support.hpp"

#include "umod/checkpoint.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace umod;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run umod_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(UMOD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

const std::string kTinyModelJson =
    R"({"model": {"d_h": 16, "d_e": 8, "n_layers_img": 1, "n_layers_txt": 1, "n_layers_mim": 1,)"
    R"( "n_heads": 2, "visual_vocab": 8}})";

struct Workspace {
  fs::path root = testing::scratch_dir("cli");
  fs::path log = root / "log.txt";
  fs::path data = root / "data";
  fs::path model_cfg = root / "tiny.json";

  Workspace() {
    std::ofstream(model_cfg) << kTinyModelJson;
    const Run r = umod_cli("gen-data --n 140 --seed 5 --image-size 16 --patch 8 --out " + data.string(), log);
    REQUIRE(r.code == 0);
  }
  Run operator()(const std::string& args) const { return umod_cli(args, log); }
};

const Workspace& workspace() {
  static const Workspace w;
  return w;
}

}  // namespace

TEST_CASE("gen-data") {
  const auto& w = workspace();
  const fs::path a = w.root / "g1", b = w.root / "g2";
  const Run r = w("gen-data --n 1000 --seed 7 --out " + a.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("train=800 val=100 test=100") != std::string::npos);
  CHECK(count_lines(slurp(a / "manifest.jsonl")) == 1000);
  REQUIRE(w("gen-data --n 1000 --seed 7 --out " + b.string()).code == 0);
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK(slurp(a / "images" / "999.png") == slurp(b / "images" / "999.png"));
  CHECK(fs::exists(a / "config.lock.json"));

  const Run small = w("gen-data --n 5 --out " + (w.root / "g3").string());
  CHECK(small.code == 2);
  CHECK(small.output.find("140") != std::string::npos);
  CHECK(w("gen-data --n 200 --out " + (w.root / "g4").string() + " --palette C").code == 2);
  CHECK(w("gen-data --n many --out x").code == 2);
  CHECK(w("frobnicate").code == 2);
}

TEST_CASE("train") {
  const auto& w = workspace();
  const std::string base = "train --config " + w.model_cfg.string() + " --data " + w.data.string();

  SUBCASE("one seed gives one report without MIM columns for contrastive-only") {
    const fs::path out = w.root / "t1";
    const Run r = w(base + " --seeds 1 --epochs 1 --objective contrastive_only --out " + out.string());
    REQUIRE(r.code == 0);
    int reports = 0;
    for (const auto& e : fs::directory_iterator(out))
      reports += e.path().filename().string().rfind("report_", 0) == 0 ? 1 : 0;
    CHECK(reports == 1);
    CHECK(slurp(out / "history_0_seed0.csv").find("mim") == std::string::npos);
    CHECK(slurp(out / "report_0_seed0.json").find("mim") == std::string::npos);
    CHECK(fs::exists(out / "aggregate.json"));
  }
  SUBCASE("joint objective records MIM columns") {
    const fs::path out = w.root / "t2";
    REQUIRE(w(base + " --seeds 1 --epochs 1 --out " + out.string()).code == 0);
    CHECK(slurp(out / "history_0_seed0.csv").find("train_mim") != std::string::npos);
  }
  SUBCASE("interrupt and resume reproduce the uninterrupted history") {
    const fs::path full = w.root / "t3", part = w.root / "t4";
    REQUIRE(w(base + " --seed-list 2 --epochs 4 --patience 10 --out " + full.string()).code == 0);
    REQUIRE(w(base + " --seed-list 2 --epochs 4 --patience 10 --stop-after 2 --out " + part.string()).code == 0);
    CHECK(count_lines(slurp(part / "history_0_seed2.csv")) == 4);
    REQUIRE(w(base + " --seed-list 2 --epochs 4 --patience 10 --resume --out " + part.string()).code == 0);
    CHECK(slurp(part / "history_0_seed2.csv") == slurp(full / "history_0_seed2.csv"));
    CHECK(slurp(part / "report_0_seed2.json") == slurp(full / "report_0_seed2.json"));
  }
  SUBCASE("the lock file reproduces the run") {
    const fs::path a = w.root / "t5", b = w.root / "t6";
    REQUIRE(w(base + " --seeds 1 --epochs 2 --out " + a.string()).code == 0);
    REQUIRE(w("train --config " + (a / "config.lock.json").string() + " --out " + b.string()).code == 0);
    CHECK(slurp(a / "history_0_seed0.csv") == slurp(b / "history_0_seed0.csv"));
    CHECK(slurp(a / "report_0_seed0.json") == slurp(b / "report_0_seed0.json"));
    CHECK(slurp(a / "checkpoints" / "0_seed0" / "best.ckpt") == slurp(b / "checkpoints" / "0_seed0" / "best.ckpt"));
  }
  SUBCASE("usage errors") {
    CHECK(w(base + " --objective mim_only --out " + (w.root / "t7").string()).code == 2);
    CHECK(w("train --data " + (w.root / "nope").string() + " --out " + (w.root / "t8").string()).code == 2);
    CHECK(w(base + " --seeds 2 --seed-list 1,2 --out " + (w.root / "t9").string()).code == 2);
    CHECK(w("train --config " + (w.data / "config.lock.json").string() + " --out x").code == 2);
  }
}

TEST_CASE("eval and export-embeddings") {
  const auto& w = workspace();
  // A checkpoint that has memorized the test split.
  const auto manifest = synth::load_dataset(w.data);
  const auto cfg = testing::tiny_config();
  const auto test = retrieval::prepare_split(manifest, synth::Split::Test, cfg);
  train::TrainConfig tc;
  tc.epochs = 300;
  tc.patience = 1000;
  tc.batch_size = static_cast<int>(test.size());
  tc.learning_rate = 3e-3;
  tc.objective = train::Objective::ContrastiveOnly;
  train::FinetuneOptions fo;
  std::optional<model::ModelParams> memorized;
  fo.on_epoch = [&](const train::HistoryRow& row, const model::ModelParams& p) {
    if (row.val_accuracy == 1.0) memorized = p;
    return !memorized;
  };
  train::finetune(model::init_params(cfg, 1), test, test, tc, 1, fo);
  REQUIRE(memorized.has_value());
  const fs::path ckpt = w.root / "memorized.ckpt";
  save_checkpoint(ckpt, Checkpoint{*memorized, std::nullopt, {}});

  const std::string data = " --data " + w.data.string();
  const Run perfect = w("eval --checkpoint " + ckpt.string() + data + " --split test --report " + (w.root / "e1" / "r.json").string());
  REQUIRE(perfect.code == 0);
  CHECK(perfect.output.find("accuracy  1.000000") != std::string::npos);

  SUBCASE("exported embeddings reproduce the checkpoint report") {
    const fs::path emb = w.root / "emb" / "test.jsonl";
    REQUIRE(w("export-embeddings --checkpoint " + ckpt.string() + data + " --split test --out " + emb.string()).code == 0);
    REQUIRE(w("eval --embeddings " + emb.string() + data + " --split test --report " + (w.root / "e2" / "r.json").string()).code == 0);
    CHECK(slurp(w.root / "e1" / "r.json") == slurp(w.root / "e2" / "r.json"));
  }
  SUBCASE("usage errors exit with 2") {
    const std::string report = " --report " + (w.root / "e3" / "r.json").string();
    CHECK(w("eval" + data + report).code == 2);
    CHECK(w("eval --checkpoint " + ckpt.string() + " --embeddings x.jsonl" + data + report).code == 2);
    CHECK(w("eval --checkpoint " + ckpt.string() + data + " --split holdout" + report).code == 2);
    CHECK(w("eval --checkpoint " + (w.root / "none.ckpt").string() + data + report).code == 2);
  }
  SUBCASE("the lock file reproduces the report") {
    REQUIRE(w("eval --config " + (w.root / "e1" / "config.lock.json").string() + " --report " + (w.root / "e4" / "r.json").string()).code == 0);
    CHECK(slurp(w.root / "e1" / "r.json") == slurp(w.root / "e4" / "r.json"));
  }
}

TEST_CASE("plot-loss") {
  const auto& w = workspace();
  const fs::path run = w.root / "p_run";
  REQUIRE(w("train --config " + w.model_cfg.string() + " --data " + w.data.string() +
            " --seeds 1 --epochs 10 --patience 100 --out " + run.string()).code == 0);
  CHECK(count_lines(slurp(run / "history_0_seed0.csv")) == 12);
  REQUIRE(w("plot-loss --run-dir " + run.string() + " --out " + (w.root / "p1").string()).code == 0);
  REQUIRE(w("plot-loss --run-dir " + run.string() + " --out " + (w.root / "p2").string()).code == 0);
  CHECK(slurp(w.root / "p1" / "loss_0_seed0.png") == slurp(w.root / "p2" / "loss_0_seed0.png"));
  CHECK(w("plot-loss --run-dir " + (w.root / "p1").string() + " --out " + (w.root / "p3").string()).code == 2);
}
