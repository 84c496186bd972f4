// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "umod/error.hpp"
#include "umod/image.hpp"
#include "umod/plot.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace umod;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_history(const std::filesystem::path& p, int epochs) {
  std::ofstream os(p);
  os << "epoch,train_loss,train_contrastive,train_mim,val_loss,val_acc\n";
  for (int e = 0; e <= epochs; ++e)
    os << e << ',' << 5.0 / (e + 1) << ",1,1," << 5.5 / (e + 1) + 0.05 * e << ",0.1\n";
}

}  // namespace

TEST_CASE("history CSV parsing") {
  const auto dir = testing::scratch_dir("plot_csv");
  write_history(dir / "history_0_seed0.csv", 10);
  const auto curve = plot::read_history_csv(dir / "history_0_seed0.csv");
  CHECK(curve.epochs.size() == 11);
  CHECK(curve.epochs.back() == 10);
  CHECK(curve.train[1] == doctest::Approx(2.5));

  std::ofstream(dir / "empty.csv") << "epoch,train_loss,val_loss,val_acc\n";
  CHECK_THROWS_AS(plot::read_history_csv(dir / "empty.csv"), Error);
  try {
    plot::read_history_csv(dir / "missing.csv");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("plots are deterministic and carry both curves") {
  const auto dir = testing::scratch_dir("plot_run");
  write_history(dir / "history_0_seed0.csv", 10);
  write_history(dir / "history_1_seed1.csv", 4);
  const auto a = plot::plot_run_dir(dir, dir / "a");
  const auto b = plot::plot_run_dir(dir, dir / "b");
  REQUIRE(a.size() == 2);
  CHECK(a[0].filename() == "loss_0_seed0.png");
  CHECK(slurp(a[0]) == slurp(b[0]));

  const Image img = read_png(a[0]);
  int blue = 0, orange = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double r = img.at(y, x, 0), g = img.at(y, x, 1), bl = img.at(y, x, 2);
      blue += (bl > 0.6 && r < 0.2) ? 1 : 0;
      orange += (r > 0.9 && g > 0.4 && g < 0.6 && bl < 0.1) ? 1 : 0;
    }
  CHECK(blue > 50);
  CHECK(orange > 50);

  const auto empty = testing::scratch_dir("plot_empty");
  try {
    plot::plot_run_dir(empty, empty / "out");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}
