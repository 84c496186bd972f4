// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Loss-curve plots rendered from history CSV files.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace umod::plot {

struct LossCurve {
  std::vector<int> epochs;
  std::vector<double> train;
  std::vector<double> val;
};

/// Reads the epoch, train_loss and val_loss columns of a history CSV.
/// Throws ErrorKind::Config when the file is missing and ErrorKind::Data when it
/// has no rows or lacks a required column.
LossCurve read_history_csv(const std::filesystem::path& path);

/// Train (blue) and validation (orange) curves over a shared loss axis with one
/// x tick per epoch. Output bytes depend only on the curve values.
void render_loss_plot(const LossCurve& curve, const std::filesystem::path& out, int width = 480,
                      int height = 320);

/// One loss_<run>.png per history_<run>.csv in `run_dir`. Throws ErrorKind::Config
/// when the directory holds no history CSV.
std::vector<std::filesystem::path> plot_run_dir(const std::filesystem::path& run_dir,
                                                const std::filesystem::path& out_dir);

}  // namespace umod::plot
