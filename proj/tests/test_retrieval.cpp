// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "umod/error.hpp"
#include "umod/log.hpp"
#include "umod/retrieval.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace umod;
using namespace umod::retrieval;

namespace {

EmbeddingBatch random_batch(Modality m, std::size_t n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  EmbeddingBatch b;
  b.modality = m;
  b.vectors.resize(static_cast<Index>(n), d);
  for (Index i = 0; i < b.vectors.size(); ++i) b.vectors.data()[i] = g(rng);
  b.vectors.rowwise().normalize();
  for (std::size_t i = 0; i < n; ++i) b.ids.push_back(static_cast<std::int64_t>(i));
  return b;
}

std::int64_t brute_top1(const Eigen::RowVectorXd& q, const EmbeddingBatch& images) {
  std::int64_t best = -1;
  double best_s = -1e300;
  for (std::size_t i = 0; i < images.size(); ++i) {
    double s = 0.0;
    for (Index k = 0; k < q.size(); ++k) s += q(k) * images.vectors(static_cast<Index>(i), k);
    if (s > best_s || (s == best_s && images.ids[i] < best)) {
      best_s = s;
      best = images.ids[i];
    }
  }
  return best;
}

}  // namespace

TEST_CASE("top-1 retrieval") {
  SUBCASE("exact match among orthogonal vectors") {
    EmbeddingBatch b;
    b.vectors = Matrix::Identity(3, 3);
    b.ids = {10, 11, 12};
    CHECK(retrieve_top1(Eigen::RowVector3d(0, 1, 0), b) == 11);
  }
  SUBCASE("ties go to the lowest id") {
    EmbeddingBatch b;
    b.vectors = Matrix::Zero(3, 2);
    b.vectors.row(0) << 0, 1;
    b.vectors.row(1) << 1, 0;
    b.vectors.row(2) << 1, 0;
    b.ids = {5, 9, 7};
    CHECK(retrieve_top1(Eigen::RowVector2d(1, 0), b) == 7);
  }
  SUBCASE("random batches match a linear scan") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 30; ++t) {
      const auto images = random_batch(Modality::Image, 1 + static_cast<std::size_t>(t) * 7, 6, rng);
      const auto queries = random_batch(Modality::Text, 5, 6, rng);
      for (Index q = 0; q < 5; ++q)
        CHECK(retrieve_top1(queries.vectors.row(q), images) == brute_top1(queries.vectors.row(q), images));
    }
  }
  EmbeddingBatch empty;
  empty.vectors.resize(0, 3);
  CHECK_THROWS_AS(retrieve_top1(Eigen::RowVector3d(1, 0, 0), empty), Error);
}

TEST_CASE("metric oracles") {
  const std::map<std::int64_t, std::int64_t> truth{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  const std::map<std::int64_t, int> cls{{0, 0}, {1, 0}, {2, 1}, {3, 1}};

  SUBCASE("perfect assignments") {
    const auto r = compute_metrics({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, truth, cls);
    CHECK(r.accuracy == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.f1 == 1.0);
  }
  SUBCASE("total miss") {
    const std::map<std::int64_t, std::int64_t> t2{{0, 0}, {2, 2}};
    const auto r = compute_metrics({{0, 2}, {2, 0}}, t2, cls);
    CHECK(r.accuracy == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.f1 == 0.0);
  }
  SUBCASE("one wrong image of the right class") {
    const auto r = compute_metrics({{0, 1}, {1, 1}, {2, 2}, {3, 3}}, truth, cls);
    CHECK(r.accuracy == doctest::Approx(0.75));
    CHECK(r.recall == doctest::Approx(1.0));
    CHECK(r.precision == doctest::Approx(1.0));
  }
  SUBCASE("hand-computed confusion counts") {
    // Class 0 queries: 0 -> class 1, 1 -> class 0. Class 1 queries: 2 -> class 1, 3 -> class 1.
    const auto r = compute_metrics({{0, 2}, {1, 1}, {2, 2}, {3, 2}}, truth, cls);
    CHECK(r.accuracy == doctest::Approx(0.5));
    CHECK(r.recall == doctest::Approx((0.5 + 1.0) / 2));
    CHECK(r.precision == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
    const double p = (1.0 + 2.0 / 3.0) / 2, rc = 0.75;
    CHECK(r.f1 == doctest::Approx(2 * p * rc / (p + rc)));
  }
}

TEST_CASE("random embeddings retrieve near chance") {
  std::mt19937_64 rng(64);
  double acc = 0.0;
  for (int t = 0; t < 20; ++t) {
    EmbeddingPair pair{random_batch(Modality::Image, 64, 16, rng), random_batch(Modality::Text, 64, 16, rng)};
    std::map<std::int64_t, int> cls;
    for (std::int64_t i = 0; i < 64; ++i) cls[i] = static_cast<int>(i % 7);
    acc += evaluate(pair, cls).accuracy / 20.0;
  }
  CHECK(acc < 3.0 / 64.0);
}

TEST_CASE("recall at k") {
  EmbeddingPair pair;
  pair.images.vectors = Matrix::Identity(3, 3);
  pair.images.ids = {0, 1, 2};
  pair.texts.modality = Modality::Text;
  pair.texts.vectors = Matrix::Identity(3, 3);
  pair.texts.vectors.row(2) << 1, 0, 0;
  pair.texts.ids = {0, 1, 2};
  CHECK(recall_at_k(pair, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(recall_at_k(pair, 3) == doctest::Approx(1.0));
}

TEST_CASE("embedding files") {
  const auto dir = testing::scratch_dir("emb");
  std::mt19937_64 rng(5);
  EmbeddingPair pair{random_batch(Modality::Image, 6, 4, rng), random_batch(Modality::Text, 6, 4, rng)};
  export_embeddings(dir / "e.jsonl", pair);
  const auto back = import_embeddings(dir / "e.jsonl");
  CHECK(back.images.ids == pair.images.ids);
  CHECK(back.texts.ids == pair.texts.ids);
  CHECK(back.images.vectors == pair.images.vectors);
  CHECK(back.texts.vectors == pair.texts.vectors);

  SUBCASE("norm-2 rows are renormalized with a warning") {
    std::vector<std::string> warnings;
    set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
    std::ofstream(dir / "n.jsonl") << R"({"id": 0, "modality": "image", "vec": [2.0, 0.0]})" "\n"
                                   << R"({"id": 0, "modality": "text", "vec": [0.0, 1.0]})" "\n";
    const auto r = import_embeddings(dir / "n.jsonl");
    set_warning_sink(nullptr);
    CHECK(warnings.size() == 1);
    CHECK(r.images.vectors.row(0).norm() == doctest::Approx(1.0));
  }
  SUBCASE("duplicate ids name the id") {
    std::ofstream(dir / "d.jsonl") << R"({"id": 42, "modality": "image", "vec": [1.0, 0.0]})" "\n"
                                   << R"({"id": 42, "modality": "image", "vec": [0.0, 1.0]})" "\n";
    try {
      import_embeddings(dir / "d.jsonl");
      FAIL("expected a data error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.what()).find("42") != std::string::npos);
    }
  }
  SUBCASE("malformed lines and dimension mismatches") {
    std::ofstream(dir / "m.jsonl") << "{not json\n";
    CHECK_THROWS_AS(import_embeddings(dir / "m.jsonl"), Error);
    std::ofstream(dir / "x.jsonl") << R"({"id": 1, "modality": "image", "vec": [1.0, 0.0]})" "\n"
                                   << R"({"id": 2, "modality": "image", "vec": [1.0, 0.0, 0.0]})" "\n";
    CHECK_THROWS_AS(import_embeddings(dir / "x.jsonl"), Error);
  }
}

TEST_CASE("corpus embedding over a prepared split") {
  const auto cfg = testing::tiny_config();
  const auto params = model::init_params(cfg, 2);
  const auto samples = testing::tiny_samples(6, 3, cfg);
  const auto a = embed_samples(params, samples), b = embed_samples(params, samples);
  CHECK(a.images.size() == 6);
  CHECK(a.texts.size() == 6);
  CHECK(a.images.vectors == b.images.vectors);
  a.images.validate();
  a.texts.validate();
  CHECK(class_of(samples[0].profile, ClassAttribute::SkinTone) == samples[0].profile.skin_tone_index);
  CHECK(parse_class_attribute("hair_color") == ClassAttribute::HairColor);
  CHECK_THROWS_AS(parse_class_attribute("height"), Error);
}
