// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// umod: dataset generation, training, evaluation and plotting.
//
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.

#include "umod/umod.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Owned {
  char* p = nullptr;
  ~Owned() { umod_string_free(p); }
};

int exit_code(umod_status s) {
  if (s == UMOD_OK) return 0;
  return s == UMOD_ERR_CONFIG ? kExitUsage : kExitRuntime;
}

int report_failure(const std::string& command, umod_status s) {
  std::cerr << "umod " << command << ": " << umod_status_name(s) << " error: " << umod_last_error()
            << "\n";
  return exit_code(s);
}

// A flag that lands at `path` in the command config when given on the command line.
struct Override {
  std::vector<std::string> path;
  std::function<json()> value;
  CLI::Option* option = nullptr;
};

class Command {
 public:
  Command(CLI::App& app, std::string name, std::string description)
      : name_(std::move(name)), sub_(app.add_subcommand(name_, std::move(description))) {
    sub_->add_option("--config", config_path_, "JSON config or config.lock.json; flags win");
  }

  template <typename T>
  CLI::Option* flag(const std::string& spec, std::vector<std::string> path, const std::string& help) {
    auto storage = std::make_shared<T>();
    CLI::Option* opt = sub_->add_option(spec, *storage, help);
    overrides_.push_back({std::move(path), [storage] { return json(*storage); }, opt});
    return opt;
  }

  CLI::Option* boolean(const std::string& spec, std::vector<std::string> path, const std::string& help) {
    auto storage = std::make_shared<bool>(false);
    CLI::Option* opt = sub_->add_flag(spec, *storage, help);
    overrides_.push_back({std::move(path), [storage] { return json(*storage); }, opt});
    return opt;
  }

  CLI::App* app() { return sub_; }
  const std::string& name() const { return name_; }

  // Config file first, then every flag given on the command line.
  std::optional<json> build(int& code) const {
    json config = json::object();
    if (!config_path_.empty()) {
      Owned cmd, cfg;
      const umod_status s = umod_read_config_file(config_path_.c_str(), &cmd.p, &cfg.p);
      if (s != UMOD_OK) {
        code = report_failure(name_, s);
        return std::nullopt;
      }
      if (*cmd.p && name_ != cmd.p) {
        std::cerr << "umod " << name_ << ": " << config_path_ << " locks command '" << cmd.p << "'\n";
        code = kExitUsage;
        return std::nullopt;
      }
      config = json::parse(cfg.p);
    }
    for (const Override& o : overrides_) {
      if (o.option->count() == 0) continue;
      json* node = &config;
      for (std::size_t i = 0; i + 1 < o.path.size(); ++i) {
        if (!node->contains(o.path[i]) || !(*node)[o.path[i]].is_object()) (*node)[o.path[i]] = json::object();
        node = &(*node)[o.path[i]];
      }
      (*node)[o.path.back()] = o.value();
    }
    return config;
  }

 private:
  std::string name_;
  CLI::App* sub_;
  std::string config_path_;
  std::vector<Override> overrides_;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--seed-list", "not an integer: " + item);
    seeds.push_back(v);
  }
  if (seeds.empty()) throw CLI::ValidationError("--seed-list", "no seeds given");
  return seeds;
}

void print_metrics(const json& m, const std::string& indent = "") {
  for (const char* k : {"accuracy", "recall", "precision", "f1"})
    if (m.contains(k)) std::printf("%s%-9s %.6f\n", indent.c_str(), k, m.at(k).get<double>());
}

void print_summary(const std::string& command, const json& r) {
  if (command == "gen-data") {
    const auto& c = r.at("split_counts");
    std::printf("wrote %s: n=%lld train=%lld val=%lld test=%lld palette=%s\n",
                r.at("out").get<std::string>().c_str(), r.at("n").get<long long>(),
                c.at("train").get<long long>(), c.at("val").get<long long>(),
                c.at("test").get<long long>(), r.at("palette").get<std::string>().c_str());
  } else if (command == "train") {
    for (const auto& run : r.at("runs")) {
      std::printf("seed %llu: %s, stopped at epoch %d, test accuracy %.6f\n",
                  run.at("seed").get<unsigned long long>(), run.at("status").get<std::string>().c_str(),
                  run.at("stop_epoch").get<int>(), run.at("metrics").at("accuracy").get<double>());
    }
    std::printf("mean over %d run(s):\n", r.at("n_ok").get<int>());
    print_metrics(r.at("mean"), "  ");
  } else if (command == "eval") {
    print_metrics(r);
  } else if (command == "export-embeddings") {
    std::printf("wrote %s: %llu images, %llu texts\n", r.at("out").get<std::string>().c_str(),
                r.at("n_images").get<unsigned long long>(), r.at("n_texts").get<unsigned long long>());
  } else if (command == "plot-loss") {
    for (const auto& p : r.at("plots")) std::printf("wrote %s\n", p.get<std::string>().c_str());
  } else if (command == "shift") {
    for (const char* obj : {"contrastive_only", "contrastive_plus_mim"})
      std::printf("%-21s mean test accuracy %.6f (std %.6f)\n", obj,
                  r.at(obj).at("mean_accuracy").get<double>(), r.at(obj).at("std_accuracy").get<double>());
    std::printf("gap %.6f: %s\n", r.at("accuracy_gap").get<double>(),
                r.at("direction").get<std::string>().c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"umod: synthetic avatar data, dual-encoder fine-tuning and user retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(umod_version()));
  std::vector<std::unique_ptr<Command>> commands;

  auto& gen = *commands.emplace_back(std::make_unique<Command>(app, "gen-data", "Generate a synthetic dataset"));
  gen.flag<long long>("--n", {"n"}, "Number of samples");
  gen.flag<unsigned long long>("--seed", {"seed"}, "Generation seed");
  gen.flag<std::string>("--out", {"out"}, "Output directory");
  gen.flag<int>("--image-size", {"image_size"}, "Square image side in pixels");
  gen.flag<int>("--patch", {"patch"}, "Patch size in pixels");
  gen.flag<std::string>("--palette", {"palette"}, "Colour palette: A or B");

  auto& train = *commands.emplace_back(std::make_unique<Command>(app, "train", "Fine-tune over one or more seeds"));
  train.flag<std::string>("--data", {"data"}, "Dataset directory");
  train.flag<std::string>("--test-data", {"test_data"}, "Dataset scored on its test split (default: --data)");
  train.flag<std::string>("--out", {"out"}, "Run directory");
  train.flag<std::string>("--objective", {"train", "objective"}, "contrastive_only | contrastive_plus_mim");
  train.flag<int>("--epochs", {"train", "epochs"}, "Maximum epochs");
  train.flag<int>("--batch-size", {"train", "batch_size"}, "Batch size");
  train.flag<double>("--lr", {"train", "learning_rate"}, "Learning rate");
  train.flag<int>("--patience", {"train", "patience"}, "Early-stopping patience");
  train.flag<int>("--eval-every", {"train", "eval_every"}, "Steps between evaluations (0: per epoch)");
  train.flag<double>("--lambda-mim", {"train", "lambda_mim"}, "Weight of the MIM term");
  train.boolean("--normalize-mim", {"train", "normalize_mim"}, "Divide each image's MIM sum by the mask size");
  train.boolean("--resume", {"resume"}, "Continue from the last checkpoints in --out");
  train.flag<int>("--stop-after", {"stop_after"}, "Stop after this many epochs (resumable)");
  train.flag<int>("--jobs", {"jobs"}, "Seeds trained in parallel");
  auto seeds_count = std::make_shared<int>(0);
  auto seed_list = std::make_shared<std::string>();
  CLI::Option* seeds_opt = train.app()->add_option("--seeds", *seeds_count, "Run seeds 0..N-1")->check(CLI::PositiveNumber);
  CLI::Option* seed_list_opt = train.app()->add_option("--seed-list", *seed_list, "Comma-separated seeds");
  seeds_opt->excludes(seed_list_opt);

  auto& eval = *commands.emplace_back(std::make_unique<Command>(app, "eval", "Score top-1 user retrieval"));
  eval.flag<std::string>("--checkpoint", {"checkpoint"}, "Model checkpoint");
  eval.flag<std::string>("--embeddings", {"embeddings"}, "Exported embedding JSONL");
  eval.flag<std::string>("--data", {"data"}, "Dataset directory");
  eval.flag<std::string>("--split", {"split"}, "train | val | test");
  eval.flag<std::string>("--report", {"report"}, "Report JSON path");
  eval.flag<std::string>("--class-attribute", {"class_attribute"}, "Attribute for macro metrics");

  auto& exp = *commands.emplace_back(std::make_unique<Command>(app, "export-embeddings", "Write split embeddings as JSONL"));
  exp.flag<std::string>("--checkpoint", {"checkpoint"}, "Model checkpoint");
  exp.flag<std::string>("--data", {"data"}, "Dataset directory");
  exp.flag<std::string>("--split", {"split"}, "train | val | test");
  exp.flag<std::string>("--out", {"out"}, "Output JSONL path");

  auto& plot = *commands.emplace_back(std::make_unique<Command>(app, "plot-loss", "Plot train/val loss curves"));
  plot.flag<std::string>("--run-dir", {"run_dir"}, "Run directory with history CSVs");
  plot.flag<std::string>("--out", {"out"}, "Output directory for PNG plots");

  auto& shift = *commands.emplace_back(std::make_unique<Command>(app, "shift", "Palette-shift comparison of both objectives"));
  shift.flag<long long>("--n", {"n"}, "Samples per dataset");
  shift.flag<unsigned long long>("--seed", {"seed"}, "Generation seed");
  shift.flag<std::string>("--out", {"out"}, "Output directory");
  shift.flag<int>("--image-size", {"image_size"}, "Square image side in pixels");
  shift.flag<int>("--patch", {"patch"}, "Patch size in pixels");
  shift.flag<int>("--epochs", {"train", "epochs"}, "Maximum epochs");
  shift.flag<int>("--batch-size", {"train", "batch_size"}, "Batch size");
  shift.flag<double>("--lr", {"train", "learning_rate"}, "Learning rate");
  shift.flag<int>("--patience", {"train", "patience"}, "Early-stopping patience");
  shift.flag<int>("--jobs", {"jobs"}, "Seeds trained in parallel");
  auto shift_seeds = std::make_shared<int>(0);
  CLI::Option* shift_seeds_opt =
      shift.app()->add_option("--seeds", *shift_seeds, "Run seeds 0..N-1")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (const auto& cmd : commands) {
    if (!cmd->app()->parsed()) continue;
    int code = 0;
    std::optional<json> config;
    try {
      config = cmd->build(code);
      if (!config) return code;
      auto set_seeds = [&](std::vector<std::uint64_t> seeds) {
        if (!config->contains("train") || !(*config)["train"].is_object()) (*config)["train"] = json::object();
        (*config)["train"]["seeds"] = seeds;
      };
      auto range = [](int n) {
        std::vector<std::uint64_t> s;
        for (int i = 0; i < n; ++i) s.push_back(static_cast<std::uint64_t>(i));
        return s;
      };
      if (cmd->name() == "train") {
        if (seeds_opt->count()) set_seeds(range(*seeds_count));
        if (seed_list_opt->count()) set_seeds(parse_seed_list(*seed_list));
      }
      if (cmd->name() == "shift" && shift_seeds_opt->count()) set_seeds(range(*shift_seeds));
    } catch (const std::exception& e) {
      std::cerr << "umod " << cmd->name() << ": " << e.what() << "\n";
      return kExitUsage;
    }
    Owned result;
    const umod_status s = umod_run_command(cmd->name().c_str(), config->dump().c_str(), &result.p);
    if (s != UMOD_OK) return report_failure(cmd->name(), s);
    print_summary(cmd->name(), json::parse(result.p));
    return 0;
  }
  return kExitUsage;
}
