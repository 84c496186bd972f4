// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/plot.hpp"

#include "umod/error.hpp"
#include "umod/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace umod::plot {

namespace fs = std::filesystem;

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kTrain{31, 119, 180};
constexpr Rgb kVal{255, 127, 14};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), rgb_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const auto i = (static_cast<std::size_t>(y) * w_ + x) * 3;
    rgb_[i] = c[0];
    rgb_[i + 1] = c[1];
    rgb_[i + 2] = c[2];
  }

  // Bresenham, thickened by one pixel vertically.
  void line(int x0, int y0, int x1, int y1, const Rgb& c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      set(x0, y0, c);
      set(x0, y0 + 1, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void square(int cx, int cy, int r, const Rgb& c) {
    for (int y = cy - r; y <= cy + r; ++y)
      for (int x = cx - r; x <= cx + r; ++x) set(x, y, c);
  }

  void save(const fs::path& path) const { write_png_rgb8(path, h_, w_, rgb_); }

 private:
  int w_, h_;
  std::vector<std::uint8_t> rgb_;
};

}  // namespace

LossCurve read_history_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "history CSV not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Data, "history CSV is empty: " + path.string());
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::Data, path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ce = column("epoch"), ct = column("train_loss"), cv = column("val_loss");
  LossCurve curve;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(lineno) + ": wrong number of cells");
    try {
      curve.epochs.push_back(std::stoi(cells[ce]));
      curve.train.push_back(std::stod(cells[ct]));
      curve.val.push_back(std::stod(cells[cv]));
    } catch (const std::logic_error&) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  if (curve.epochs.empty()) fail(ErrorKind::Data, "history CSV has no rows: " + path.string());
  return curve;
}

void render_loss_plot(const LossCurve& curve, const fs::path& out, int width, int height) {
  if (curve.epochs.empty()) fail(ErrorKind::Data, "cannot plot an empty history");
  if (width < 64 || height < 64) fail(ErrorKind::Config, "plot canvas is too small");
  Canvas canvas(width, height);
  const int left = 40, right = width - 16, top = 16, bottom = height - 32;

  double lo = curve.train.front(), hi = lo;
  for (const auto* series : {&curve.train, &curve.val})
    for (double v : *series)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(hi > lo)) {
    hi = lo + 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const int e0 = *std::min_element(curve.epochs.begin(), curve.epochs.end());
  const int e1 = std::max(e0 + 1, *std::max_element(curve.epochs.begin(), curve.epochs.end()));

  auto px = [&](double epoch) {
    return left + static_cast<int>(std::lround((epoch - e0) / (e1 - e0) * (right - left)));
  };
  auto py = [&](double v) {
    return bottom - static_cast<int>(std::lround((v - lo) / (hi - lo) * (bottom - top)));
  };

  for (int k = 1; k <= 4; ++k) {
    const int y = bottom - k * (bottom - top) / 4;
    canvas.line(left, y, right, y, kGrid);
  }
  canvas.line(left, bottom, right, bottom, kAxis);
  canvas.line(left, top, left, bottom, kAxis);
  for (int e = e0; e <= e1; ++e) canvas.line(px(e), bottom, px(e), bottom + 5, kAxis);
  for (int k = 0; k <= 4; ++k) {
    const int y = bottom - k * (bottom - top) / 4;
    canvas.line(left - 5, y, left, y, kAxis);
  }

  for (const auto& [series, colour] : {std::pair{&curve.train, kTrain}, std::pair{&curve.val, kVal}}) {
    for (std::size_t i = 0; i < series->size(); ++i) {
      if (!std::isfinite((*series)[i])) continue;
      const int x = px(curve.epochs[i]), y = py((*series)[i]);
      if (i > 0 && std::isfinite((*series)[i - 1]))
        canvas.line(px(curve.epochs[i - 1]), py((*series)[i - 1]), x, y, colour);
      canvas.square(x, y, 2, colour);
    }
  }
  // Legend swatches: train then validation.
  canvas.square(right - 40, top + 6, 4, kTrain);
  canvas.square(right - 20, top + 6, 4, kVal);
  canvas.save(out);
}

std::vector<fs::path> plot_run_dir(const fs::path& run_dir, const fs::path& out_dir) {
  if (!fs::is_directory(run_dir)) fail(ErrorKind::Config, "run directory not found: " + run_dir.string());
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("history_") && name.ends_with(".csv"))
      csvs.push_back(entry.path());
  }
  if (csvs.empty()) fail(ErrorKind::Config, "no history_*.csv in " + run_dir.string());
  std::sort(csvs.begin(), csvs.end());
  fs::create_directories(out_dir);
  std::vector<fs::path> outputs;
  for (const fs::path& csv : csvs) {
    const std::string stem = csv.stem().string().substr(std::string("history_").size());
    const fs::path out = out_dir / ("loss_" + stem + ".png");
    render_loss_plot(read_history_csv(csv), out);
    outputs.push_back(out);
  }
  return outputs;
}

}  // namespace umod::plot
