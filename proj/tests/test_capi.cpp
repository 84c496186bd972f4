// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/umod.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  umod_string_free(s);
  return out;
}

std::filesystem::path fresh(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("umod_capi_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

const char* kTinyModel =
    R"({"image_height": 16, "image_width": 16, "patch_size": 8, "d_h": 16, "d_e": 8,
        "n_layers_img": 1, "n_layers_txt": 1, "n_layers_mim": 1, "n_heads": 2, "visual_vocab": 8})";

}  // namespace

TEST_CASE("loss entry points") {
  const double s[4] = {1, 0, 0, 1};
  double loss = 0.0;
  REQUIRE(umod_contrastive_loss(s, 2, 1.0, &loss) == UMOD_OK);
  CHECK(std::abs(loss - 0.313262) < 1e-6);
  CHECK(umod_contrastive_loss(s, 2, 0.0, &loss) == UMOD_ERR_CONFIG);
  CHECK(std::string(umod_last_error()).find("tau") != std::string::npos);

  const double logits[3] = {2, 0, 0};
  const int targets[1] = {0}, mask[1] = {0};
  REQUIRE(umod_mim_loss(logits, 1, 3, targets, mask, 1, &loss) == UMOD_OK);
  CHECK(std::abs(loss - std::log(1.0 + 2.0 * std::exp(-2.0))) < 1e-6);
  const int bad_mask[1] = {3};
  CHECK(umod_mim_loss(logits, 1, 3, targets, bad_mask, 1, &loss) == UMOD_ERR_DATA);
  CHECK(umod_contrastive_loss(nullptr, 2, 1.0, &loss) == UMOD_ERR_CONFIG);
}

TEST_CASE("dataset and model handles") {
  const auto dir = fresh("handles");
  umod_dataset* data = nullptr;
  REQUIRE(umod_dataset_generate(140, 3, 16, 8, "A", dir.string().c_str(), &data) == UMOD_OK);
  CHECK(umod_dataset_size(data) == 140);
  int64_t count = 0;
  REQUIRE(umod_dataset_split_size(data, "test", &count) == UMOD_OK);
  CHECK(count == 14);
  CHECK(umod_dataset_split_size(data, "dev", &count) == UMOD_ERR_CONFIG);
  char* text = nullptr;
  REQUIRE(umod_dataset_text(data, 0, &text) == UMOD_OK);
  CHECK(take(text).rfind("The person appears to be", 0) == 0);

  umod_dataset* loaded = nullptr;
  REQUIRE(umod_dataset_load(dir.string().c_str(), &loaded) == UMOD_OK);
  CHECK(umod_dataset_size(loaded) == 140);

  umod_model* model = nullptr;
  REQUIRE(umod_model_init(kTinyModel, 1, &model) == UMOD_OK);
  CHECK(umod_model_parameter_count(model) > 0);
  char* report = nullptr;
  REQUIRE(umod_evaluate(model, loaded, "test", "ethnicity", &report) == UMOD_OK);
  CHECK(take(report).find("\"accuracy\"") != std::string::npos);

  const auto ckpt = dir / "m.ckpt";
  REQUIRE(umod_model_save(model, ckpt.string().c_str()) == UMOD_OK);
  umod_model* back = nullptr;
  REQUIRE(umod_model_load(ckpt.string().c_str(), &back) == UMOD_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(umod_model_config(model, &a) == UMOD_OK);
  REQUIRE(umod_model_config(back, &b) == UMOD_OK);
  CHECK(take(a) == take(b));
  REQUIRE(umod_export_embeddings(back, loaded, "val", (dir / "e.jsonl").string().c_str()) == UMOD_OK);
  CHECK(std::filesystem::exists(dir / "e.jsonl"));

  umod_model_free(back);
  umod_model_free(model);
  umod_dataset_free(loaded);
  umod_dataset_free(data);
}

TEST_CASE("errors map to status codes") {
  umod_dataset* data = nullptr;
  CHECK(umod_dataset_generate(5, 0, 32, 16, "A", nullptr, &data) == UMOD_ERR_CONFIG);
  CHECK(data == nullptr);
  CHECK(std::string(umod_last_error()).find("140") != std::string::npos);
  CHECK(umod_dataset_load("/nonexistent/umod", &data) != UMOD_OK);
  umod_model* model = nullptr;
  CHECK(umod_model_init("{not json", 0, &model) == UMOD_ERR_CONFIG);
  CHECK(umod_model_init(R"({"n_heads": 5})", 0, &model) == UMOD_ERR_CONFIG);
  CHECK(umod_model_load("/nonexistent/m.ckpt", &model) == UMOD_ERR_IO);
  CHECK(umod_run_command("fly", "{}", nullptr) == UMOD_ERR_CONFIG);
  CHECK(std::string(umod_status_name(UMOD_ERR_NUMERIC)) == "numeric");
  umod_dataset_free(nullptr);
  umod_model_free(nullptr);
}

TEST_CASE("commands through the C interface") {
  const auto dir = fresh("cmd");
  const std::string cfg = R"({"n": 140, "seed": 2, "image_size": 16, "patch": 8, "out": ")" + dir.string() + R"("})";
  char* result = nullptr;
  REQUIRE(umod_run_command("gen-data", cfg.c_str(), &result) == UMOD_OK);
  CHECK(take(result).find("\"split_counts\"") != std::string::npos);

  char* command = nullptr;
  char* locked = nullptr;
  REQUIRE(umod_read_config_file((dir / "config.lock.json").string().c_str(), &command, &locked) == UMOD_OK);
  CHECK(take(command) == "gen-data");
  CHECK(take(locked).find("\"palette\"") != std::string::npos);

  char* resolved = nullptr;
  REQUIRE(umod_resolve_config("plot-loss", R"({"run_dir": "r", "out": "p"})", &resolved) == UMOD_OK);
  CHECK(take(resolved).find("run_dir") != std::string::npos);
}
