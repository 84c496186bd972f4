// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/umod.h"

#include "umod/app.hpp"
#include "umod/checkpoint.hpp"
#include "umod/error.hpp"
#include "umod/losses.hpp"
#include "umod/model.hpp"
#include "umod/retrieval.hpp"
#include "umod/synthgen.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct umod_dataset {
  umod::synth::DatasetManifest manifest;
};

struct umod_model {
  umod::model::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

umod_status status_of(umod::ErrorKind kind) {
  switch (kind) {
    case umod::ErrorKind::Config: return UMOD_ERR_CONFIG;
    case umod::ErrorKind::Io: return UMOD_ERR_IO;
    case umod::ErrorKind::Data: return UMOD_ERR_DATA;
    case umod::ErrorKind::Numeric: return UMOD_ERR_NUMERIC;
  }
  return UMOD_ERR_INTERNAL;
}

template <typename F>
umod_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return UMOD_OK;
  } catch (const umod::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return UMOD_ERR_CONFIG;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return UMOD_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UMOD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return UMOD_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) umod::fail(umod::ErrorKind::Config, what);
}

nlohmann::json parse_object(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    umod::fail(umod::ErrorKind::Config, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

extern "C" {

const char* umod_version(void) { return "0.1.0"; }

const char* umod_last_error(void) { return g_last_error.c_str(); }

const char* umod_status_name(umod_status status) {
  switch (status) {
    case UMOD_OK: return "ok";
    case UMOD_ERR_CONFIG: return "config";
    case UMOD_ERR_IO: return "io";
    case UMOD_ERR_DATA: return "data";
    case UMOD_ERR_NUMERIC: return "numeric";
    case UMOD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void umod_string_free(char* s) { std::free(s); }

umod_status umod_run_command(const char* command, const char* config_json, char** result_json) {
  return guarded([&] {
    require(command != nullptr, "command is null");
    const auto result = umod::app::run_command(command, parse_object(config_json));
    if (result_json) *result_json = dup_string(result.dump(2));
  });
}

umod_status umod_resolve_config(const char* command, const char* config_json, char** resolved_json) {
  return guarded([&] {
    require(command != nullptr && resolved_json != nullptr, "null argument");
    *resolved_json = dup_string(umod::app::resolve_config(command, parse_object(config_json)).dump(2));
  });
}

umod_status umod_read_config_file(const char* path, char** command, char** config_json) {
  return guarded([&] {
    require(path && command && config_json, "null argument");
    auto [cmd, cfg] = umod::app::read_lock(path);
    *command = dup_string(cmd);
    *config_json = dup_string(cfg.dump());
  });
}

umod_status umod_dataset_generate(int64_t n, uint64_t seed, int image_size, int patch_size,
                                  const char* palette, const char* out_dir, umod_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    umod::synth::GenConfig config;
    config.n = n;
    config.seed = seed;
    config.image = {image_size, image_size, patch_size};
    config.palette = umod::synth::parse_palette(palette ? palette : "A");
    auto* d = new umod_dataset;
    try {
      d->manifest = (out_dir && *out_dir) ? umod::synth::build_dataset(config, out_dir)
                                          : umod::synth::plan_dataset(config);
    } catch (...) {
      delete d;
      throw;
    }
    *out = d;
  });
}

umod_status umod_dataset_load(const char* dir, umod_dataset** out) {
  return guarded([&] {
    require(dir && out, "null argument");
    auto* d = new umod_dataset;
    try {
      d->manifest = umod::synth::load_dataset(dir);
    } catch (...) {
      delete d;
      throw;
    }
    *out = d;
  });
}

int64_t umod_dataset_size(const umod_dataset* dataset) {
  return dataset ? static_cast<int64_t>(dataset->manifest.samples.size()) : 0;
}

umod_status umod_dataset_split_size(const umod_dataset* dataset, const char* split, int64_t* count) {
  return guarded([&] {
    require(dataset && split && count, "null argument");
    *count = static_cast<int64_t>(dataset->manifest.split(umod::synth::parse_split(split)).size());
  });
}

umod_status umod_dataset_text(const umod_dataset* dataset, int64_t sample_id, char** text) {
  return guarded([&] {
    require(dataset && text, "null argument");
    for (const auto& s : dataset->manifest.samples)
      if (s.sample_id == sample_id) {
        *text = dup_string(s.text);
        return;
      }
    umod::fail(umod::ErrorKind::Data, "no sample with id " + std::to_string(sample_id));
  });
}

void umod_dataset_free(umod_dataset* dataset) { delete dataset; }

umod_status umod_model_init(const char* model_config_json, uint64_t seed, umod_model** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    const auto config = umod::model::model_config_from_json(parse_object(model_config_json)).resolved();
    config.validate();
    *out = new umod_model{umod::model::init_params(config, seed)};
  });
}

umod_status umod_model_load(const char* checkpoint_path, umod_model** out) {
  return guarded([&] {
    require(checkpoint_path && out, "null argument");
    *out = new umod_model{umod::load_checkpoint(checkpoint_path).params};
  });
}

umod_status umod_model_save(const umod_model* model, const char* checkpoint_path) {
  return guarded([&] {
    require(model && checkpoint_path, "null argument");
    umod::save_checkpoint(checkpoint_path,
                          umod::Checkpoint{model->params, std::nullopt, nlohmann::json::object()});
  });
}

umod_status umod_model_config(const umod_model* model, char** config_json) {
  return guarded([&] {
    require(model && config_json, "null argument");
    *config_json = dup_string(umod::model::to_json(model->params.config).dump());
  });
}

size_t umod_model_parameter_count(const umod_model* model) {
  return model ? model->params.parameter_count() : 0;
}

void umod_model_free(umod_model* model) { delete model; }

umod_status umod_evaluate(const umod_model* model, const umod_dataset* dataset, const char* split,
                          const char* class_attribute, char** report_json) {
  return guarded([&] {
    require(model && dataset && split && report_json, "null argument");
    const auto s = umod::synth::parse_split(split);
    const auto attribute =
        umod::retrieval::parse_class_attribute(class_attribute ? class_attribute : "ethnicity");
    const auto pair = umod::retrieval::embed_corpus(model->params, dataset->manifest, s);
    const auto report =
        umod::retrieval::evaluate(pair, umod::retrieval::class_map(dataset->manifest, s, attribute));
    *report_json = dup_string(umod::retrieval::to_json(report).dump(2));
  });
}

umod_status umod_export_embeddings(const umod_model* model, const umod_dataset* dataset,
                                   const char* split, const char* path) {
  return guarded([&] {
    require(model && dataset && split && path, "null argument");
    const auto pair =
        umod::retrieval::embed_corpus(model->params, dataset->manifest, umod::synth::parse_split(split));
    umod::retrieval::export_embeddings(path, pair);
  });
}

umod_status umod_contrastive_loss(const double* similarity, size_t n, double tau, double* loss) {
  return guarded([&] {
    require(similarity && loss && n > 0, "invalid argument");
    const auto rows = static_cast<Eigen::Index>(n);
    const umod::Matrix s = Eigen::Map<const umod::Matrix>(similarity, rows, rows);
    *loss = umod::losses::contrastive_loss(s, tau);
  });
}

umod_status umod_mim_loss(const double* logits, size_t num_patches, size_t vocab, const int* targets,
                          const int* mask, size_t mask_len, double* loss) {
  return guarded([&] {
    require(logits && targets && mask && loss && num_patches > 0 && vocab > 0, "invalid argument");
    const umod::Matrix l = Eigen::Map<const umod::Matrix>(logits, static_cast<Eigen::Index>(num_patches),
                                                          static_cast<Eigen::Index>(vocab));
    *loss = umod::losses::mim_loss(l, {targets, num_patches}, {mask, mask_len});
  });
}

}  // extern "C"
