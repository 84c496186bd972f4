// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "umod/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace umod {

/// First and second moment estimates, one pair per parameter in parameters() order.
struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  bool operator==(const OptimizerState&) const = default;
};

struct Checkpoint {
  model::ModelParams params;
  std::optional<OptimizerState> optimizer;
  nlohmann::json state = nlohmann::json::object();  // trainer bookkeeping (epoch, history, rng)
};

/// Binary layout: "UMODCKPT", u32 version, u64 header length, JSON header
/// (config, state, parameter table), then raw little-endian float64 tensors in
/// header order, then optimizer moments when present. Written via a temporary
/// file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace umod
