// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/app.hpp"

#include "umod/checkpoint.hpp"
#include "umod/error.hpp"
#include "umod/plot.hpp"
#include "umod/retrieval.hpp"
#include "umod/synthgen.hpp"
#include "umod/trainer.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace umod::app {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

void check_keys(std::string_view command, const json& config, const std::set<std::string>& known) {
  if (!config.is_object()) fail(ErrorKind::Config, std::string(command) + ": config must be a JSON object");
  for (const auto& [k, v] : config.items())
    if (!known.contains(k))
      fail(ErrorKind::Config, std::string(command) + ": unknown config key '" + k + "'");
}

template <typename T>
T get_or(const json& config, const char* key, T fallback) {
  if (!config.contains(key) || config.at(key).is_null()) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
  }
}

std::string require_path(std::string_view command, const json& config, const char* key) {
  const std::string v = get_or<std::string>(config, key, "");
  if (v.empty()) fail(ErrorKind::Config, std::string(command) + ": --" + key + " is required");
  return v;
}

fs::path parent_or_cwd(const fs::path& p) {
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << content;
}

synth::DatasetManifest load_data_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Config, "data directory not found: " + dir);
  return synth::load_dataset(dir);
}

// ---------------------------------------------------------------------------
// Resolution

ojson resolve_gen_data(const json& c) {
  check_keys("gen-data", c, {"n", "seed", "out", "image_size", "patch", "palette"});
  ojson r;
  r["n"] = get_or<std::int64_t>(c, "n", 1000);
  r["seed"] = get_or<std::uint64_t>(c, "seed", 0);
  r["out"] = require_path("gen-data", c, "out");
  r["image_size"] = get_or<int>(c, "image_size", 32);
  r["patch"] = get_or<int>(c, "patch", 16);
  r["palette"] = synth::label(synth::parse_palette(get_or<std::string>(c, "palette", "A")));
  if (r["image_size"].get<int>() < 1 || r["patch"].get<int>() < 1)
    fail(ErrorKind::Config, "gen-data: image_size and patch must be positive");
  if (r["image_size"].get<int>() % r["patch"].get<int>() != 0)
    fail(ErrorKind::Config, "gen-data: image_size must be divisible by patch");
  return r;
}

// Model defaults take their image geometry from the dataset.
ojson resolve_model(const json& user, const synth::ImageSpec& spec) {
  json m = model::to_json(model::ModelConfig{});
  m["image_height"] = spec.height;
  m["image_width"] = spec.width;
  m["patch_size"] = spec.patch_size;
  if (!user.is_null()) {
    if (!user.is_object()) fail(ErrorKind::Config, "model config must be a JSON object");
    for (const auto& [k, v] : user.items()) m[k] = v;
  }
  const model::ModelConfig mc = model::model_config_from_json(m).resolved();
  mc.validate();
  return ojson(model::to_json(mc));
}

ojson resolve_train(const json& c) {
  check_keys("train", c,
             {"data", "test_data", "out", "model", "train", "resume", "stop_after", "jobs"});
  ojson r;
  r["data"] = require_path("train", c, "data");
  r["test_data"] = get_or<std::string>(c, "test_data", "");
  r["out"] = require_path("train", c, "out");
  const auto data = load_data_dir(r["data"].get<std::string>());
  r["model"] = resolve_model(c.value("model", json()), data.config.image);
  const train::TrainConfig tc = train::train_config_from_json(c.value("train", json()));
  tc.validate();
  r["train"] = ojson(train::to_json(tc));
  r["resume"] = get_or<bool>(c, "resume", false);
  r["stop_after"] = get_or<int>(c, "stop_after", 0);
  r["jobs"] = get_or<int>(c, "jobs", 1);
  if (r["stop_after"].get<int>() < 0 || r["jobs"].get<int>() < 1)
    fail(ErrorKind::Config, "train: stop_after must be >= 0 and jobs >= 1");
  return r;
}

ojson resolve_eval(std::string_view command, const json& c, bool exporting) {
  if (exporting)
    check_keys(command, c, {"checkpoint", "data", "split", "out"});
  else
    check_keys(command, c, {"checkpoint", "embeddings", "data", "split", "report", "class_attribute"});
  ojson r;
  const std::string ckpt = get_or<std::string>(c, "checkpoint", "");
  const std::string emb = exporting ? "" : get_or<std::string>(c, "embeddings", "");
  if (exporting && ckpt.empty()) fail(ErrorKind::Config, std::string(command) + ": --checkpoint is required");
  if (!exporting && ckpt.empty() == emb.empty())
    fail(ErrorKind::Config, std::string(command) + ": exactly one of --checkpoint and --embeddings is required");
  r["checkpoint"] = ckpt;
  if (!exporting) r["embeddings"] = emb;
  r["data"] = require_path(command, c, "data");
  r["split"] = synth::label(synth::parse_split(get_or<std::string>(c, "split", "test")));
  if (exporting) {
    r["out"] = require_path(command, c, "out");
  } else {
    r["report"] = require_path(command, c, "report");
    r["class_attribute"] = retrieval::label(
        retrieval::parse_class_attribute(get_or<std::string>(c, "class_attribute", "ethnicity")));
  }
  return r;
}

ojson resolve_plot(const json& c) {
  check_keys("plot-loss", c, {"run_dir", "out"});
  ojson r;
  r["run_dir"] = require_path("plot-loss", c, "run_dir");
  r["out"] = require_path("plot-loss", c, "out");
  return r;
}

ojson resolve_shift(const json& c) {
  check_keys("shift", c, {"n", "seed", "out", "image_size", "patch", "model", "train", "jobs"});
  ojson r;
  r["n"] = get_or<std::int64_t>(c, "n", 1000);
  r["seed"] = get_or<std::uint64_t>(c, "seed", 0);
  r["out"] = require_path("shift", c, "out");
  r["image_size"] = get_or<int>(c, "image_size", 32);
  r["patch"] = get_or<int>(c, "patch", 16);
  const synth::ImageSpec spec{r["image_size"].get<int>(), r["image_size"].get<int>(), r["patch"].get<int>()};
  r["model"] = resolve_model(c.value("model", json()), spec);
  train::TrainConfig tc = train::train_config_from_json(c.value("train", json()));
  tc.validate();
  json tj = train::to_json(tc);
  tj.erase("objective");  // both objectives run
  r["train"] = ojson(tj);
  r["jobs"] = get_or<int>(c, "jobs", 1);
  if (r["jobs"].get<int>() < 1) fail(ErrorKind::Config, "shift: jobs must be >= 1");
  return r;
}

// ---------------------------------------------------------------------------
// Execution

ojson dataset_summary(const synth::DatasetManifest& m) {
  ojson j;
  j["n"] = m.config.n;
  j["seed"] = m.config.seed;
  j["palette"] = synth::label(m.config.palette);
  j["split_counts"] = {{"train", m.split_counts.train}, {"val", m.split_counts.val}, {"test", m.split_counts.test}};
  return j;
}

synth::GenConfig gen_config_of(const ojson& r) {
  synth::GenConfig g;
  g.n = r["n"].get<std::int64_t>();
  g.seed = r["seed"].get<std::uint64_t>();
  g.image = {r["image_size"].get<int>(), r["image_size"].get<int>(), r["patch"].get<int>()};
  g.palette = synth::parse_palette(r["palette"].get<std::string>());
  return g;
}

ojson run_gen_data(const ojson& r) {
  const fs::path out = r["out"].get<std::string>();
  const synth::GenConfig g = gen_config_of(r);
  synth::plan_dataset(g);  // validates before anything touches the disk
  const auto m = synth::build_dataset(g, out);
  write_lock(out, "gen-data", r);
  ojson j = dataset_summary(m);
  j["out"] = out.string();
  return j;
}

ojson seeds_summary(const train::SeedsReport& report, const train::TrainConfig& tc) {
  ojson j = train::aggregate_json(report, tc);
  return j;
}

ojson run_train(const ojson& r) {
  const fs::path out = r["out"].get<std::string>();
  const auto data = load_data_dir(r["data"].get<std::string>());
  const std::string test_dir = r["test_data"].get<std::string>();
  const auto test = test_dir.empty() ? data : load_data_dir(test_dir);
  const model::ModelConfig mc = model::model_config_from_json(json(r["model"]));
  const train::TrainConfig tc = train::train_config_from_json(json(r["train"]));
  fs::create_directories(out);
  write_lock(out, "train", r);
  train::RunSeedsOptions opts;
  opts.out_dir = out;
  opts.resume = r["resume"].get<bool>();
  opts.stop_after_epochs = r["stop_after"].get<int>();
  opts.jobs = r["jobs"].get<int>();
  const auto report = train::run_seeds(mc, tc, data, test, opts);
  ojson j = seeds_summary(report, tc);
  j["out"] = out.string();
  bool any_ok = false;
  for (const auto& run : report.runs) any_ok = any_ok || run.ok;
  if (!any_ok) {
    std::string why = report.runs.empty() ? "no runs" : report.runs.front().error;
    fail(ErrorKind::Numeric, "every seed failed: " + why);
  }
  return j;
}

std::map<std::int64_t, int> split_classes(const synth::DatasetManifest& m, synth::Split split,
                                          retrieval::ClassAttribute attribute) {
  auto classes = retrieval::class_map(m, split, attribute);
  if (classes.empty())
    fail(ErrorKind::Config, "split '" + std::string(synth::label(split)) + "' is empty");
  return classes;
}

ojson run_eval(const ojson& r) {
  const fs::path report_path = r["report"].get<std::string>();
  const auto data = load_data_dir(r["data"].get<std::string>());
  const synth::Split split = synth::parse_split(r["split"].get<std::string>());
  const auto attribute = retrieval::parse_class_attribute(r["class_attribute"].get<std::string>());
  const auto classes = split_classes(data, split, attribute);

  retrieval::EmbeddingPair pair;
  const std::string ckpt = r["checkpoint"].get<std::string>();
  if (!ckpt.empty()) {
    if (!fs::exists(ckpt)) fail(ErrorKind::Config, "checkpoint not found: " + ckpt);
    pair = retrieval::embed_corpus(load_checkpoint(ckpt).params, data, split);
  } else {
    const std::string emb = r["embeddings"].get<std::string>();
    if (!fs::exists(emb)) fail(ErrorKind::Config, "embeddings file not found: " + emb);
    pair = retrieval::import_embeddings(emb);
    for (const auto* b : {&pair.images, &pair.texts})
      for (std::int64_t id : b->ids)
        if (!classes.contains(id))
          fail(ErrorKind::Data, "embedding id " + std::to_string(id) + " is not in split '" +
                                    std::string(synth::label(split)) + "'");
  }
  const auto report = retrieval::evaluate(pair, classes);
  ojson j;
  j["split"] = r["split"];
  j["class_attribute"] = r["class_attribute"];
  const auto metrics = retrieval::to_json(report);
  for (const auto& [k, v] : metrics.items()) j[k] = v;
  j["recall_at_5"] = retrieval::recall_at_k(pair, 5);
  write_text(report_path, j.dump(2) + "\n");
  write_lock(parent_or_cwd(report_path), "eval", r);
  return j;
}

ojson run_export(const ojson& r) {
  const fs::path out = r["out"].get<std::string>();
  const auto data = load_data_dir(r["data"].get<std::string>());
  const synth::Split split = synth::parse_split(r["split"].get<std::string>());
  const std::string ckpt = r["checkpoint"].get<std::string>();
  if (!fs::exists(ckpt)) fail(ErrorKind::Config, "checkpoint not found: " + ckpt);
  const auto pair = retrieval::embed_corpus(load_checkpoint(ckpt).params, data, split);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  retrieval::export_embeddings(out, pair);
  write_lock(parent_or_cwd(out), "export-embeddings", r);
  ojson j;
  j["out"] = out.string();
  j["n_images"] = pair.images.size();
  j["n_texts"] = pair.texts.size();
  return j;
}

ojson run_plot(const ojson& r) {
  const fs::path out = r["out"].get<std::string>();
  const auto files = plot::plot_run_dir(r["run_dir"].get<std::string>(), out);
  write_lock(out, "plot-loss", r);
  ojson j;
  j["plots"] = ojson::array();
  for (const auto& f : files) j["plots"].push_back(f.string());
  return j;
}

ojson run_shift(const ojson& r) {
  const fs::path out = r["out"].get<std::string>();
  fs::create_directories(out);
  write_lock(out, "shift", r);
  ojson gen = r;
  gen.erase("model");
  gen.erase("train");
  gen.erase("jobs");
  gen["palette"] = "A";
  const auto source = synth::build_dataset(gen_config_of(gen), out / "data_a");
  gen["palette"] = "B";
  const auto target = synth::build_dataset(gen_config_of(gen), out / "data_b");

  const model::ModelConfig mc = model::model_config_from_json(json(r["model"]));
  ojson j;
  j["train_palette"] = "A";
  j["test_palette"] = "B";
  for (train::Objective obj : {train::Objective::ContrastiveOnly, train::Objective::ContrastivePlusMim}) {
    json tj(r["train"]);
    tj["objective"] = train::label(obj);
    const train::TrainConfig tc = train::train_config_from_json(tj);
    train::RunSeedsOptions opts;
    opts.out_dir = out / std::string(train::label(obj));
    opts.jobs = r["jobs"].get<int>();
    const auto report = train::run_seeds(mc, tc, source, target, opts);
    ojson o;
    o["mean_accuracy"] = report.mean.accuracy;
    o["std_accuracy"] = report.stddev.accuracy;
    o["mean_f1"] = report.mean.f1;
    o["init_mean_accuracy"] = report.init_mean.accuracy;
    o["per_seed_accuracy"] = ojson::array();
    for (const auto& run : report.runs) o["per_seed_accuracy"].push_back(run.test_report.accuracy);
    j[std::string(train::label(obj))] = o;
  }
  const double gap = j["contrastive_plus_mim"]["mean_accuracy"].get<double>() -
                     j["contrastive_only"]["mean_accuracy"].get<double>();
  j["accuracy_gap"] = gap;
  j["direction"] = gap > 0 ? "contrastive_plus_mim higher" : gap < 0 ? "contrastive_only higher" : "equal";
  write_text(out / "shift_report.json", j.dump(2) + "\n");
  return j;
}

}  // namespace

const std::vector<std::string_view>& commands() {
  static const std::vector<std::string_view> names{"gen-data", "train", "eval", "export-embeddings",
                                                   "plot-loss", "shift"};
  return names;
}

ojson resolve_config(std::string_view command, const json& config) {
  const json c = config.is_null() ? json::object() : config;
  if (command == "gen-data") return resolve_gen_data(c);
  if (command == "train") return resolve_train(c);
  if (command == "eval") return resolve_eval(command, c, false);
  if (command == "export-embeddings") return resolve_eval(command, c, true);
  if (command == "plot-loss") return resolve_plot(c);
  if (command == "shift") return resolve_shift(c);
  fail(ErrorKind::Config, "unknown command '" + std::string(command) + "'");
}

ojson run_command(std::string_view command, const json& config) {
  const ojson r = resolve_config(command, config);
  if (command == "gen-data") return run_gen_data(r);
  if (command == "train") return run_train(r);
  if (command == "eval") return run_eval(r);
  if (command == "export-embeddings") return run_export(r);
  if (command == "plot-loss") return run_plot(r);
  return run_shift(r);
}

void write_lock(const fs::path& dir, std::string_view command, const ojson& resolved) {
  ojson lock;
  lock["command"] = command;
  lock["config"] = resolved;
  fs::create_directories(dir);
  write_text(dir / "config.lock.json", lock.dump(2) + "\n");
}

std::pair<std::string, json> read_lock(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Config, path.string() + ": expected a JSON object");
  if (j.contains("command") && j.contains("config"))
    return {j.at("command").get<std::string>(), j.at("config")};
  return {"", j};
}

}  // namespace umod::app
