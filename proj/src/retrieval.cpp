// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/retrieval.hpp"

#include "umod/error.hpp"
#include "umod/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace umod::retrieval {

namespace fs = std::filesystem;

std::vector<PreparedSample> prepare_split(const synth::DatasetManifest& manifest, synth::Split split,
                                          const model::ModelConfig& config) {
  const model::ModelConfig c = config.resolved();
  const model::PatchTokenizer visual = model::color_grid_tokenizer(c.patch_size, c.visual_vocab);
  const model::TextTokenizer& text = model::default_text_tokenizer();
  std::vector<PreparedSample> out;
  for (const synth::SampleRecord* r : manifest.split(split)) {
    Image image;
    if (manifest.root.empty()) {
      image = synth::render_sample(*r, manifest.config);
    } else {
      const fs::path path = manifest.root / r->image_path;
      if (!fs::exists(path)) fail(ErrorKind::Io, "missing image file " + path.string());
      image = read_png(path);
    }
    if (image.height != c.image_height || image.width != c.image_width)
      fail(ErrorKind::Data, "sample " + std::to_string(r->sample_id) + " is " +
                                std::to_string(image.height) + "x" + std::to_string(image.width) +
                                " but the model expects " + std::to_string(c.image_height) + "x" +
                                std::to_string(c.image_width));
    PreparedSample s;
    s.id = r->sample_id;
    s.profile = r->profile;
    s.patches = model::patchify(image, c.patch_size);
    s.text_tokens = text.encode(r->text);
    s.visual_tokens = visual.tokenize(s.patches);
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view label(Modality m) { return m == Modality::Image ? "image" : "text"; }

void EmbeddingBatch::validate() const {
  if (static_cast<Index>(ids.size()) != vectors.rows())
    fail(ErrorKind::Data, "embedding batch: id count does not match row count");
  std::set<std::int64_t> seen;
  for (std::int64_t id : ids)
    if (!seen.insert(id).second) fail(ErrorKind::Data, "embedding batch: duplicate id " + std::to_string(id));
  for (Index r = 0; r < vectors.rows(); ++r)
    if (std::abs(vectors.row(r).norm() - 1.0) > 1e-4)
      fail(ErrorKind::Data, "embedding batch: row for id " + std::to_string(ids[static_cast<std::size_t>(r)]) +
                                " is not unit norm");
}

EmbeddingPair embed_samples(const model::ModelParams& params,
                            const std::vector<PreparedSample>& samples) {
  EmbeddingPair out;
  out.images.modality = Modality::Image;
  out.texts.modality = Modality::Text;
  const Index n = static_cast<Index>(samples.size());
  out.images.vectors.resize(n, params.config.d_e);
  out.texts.vectors.resize(n, params.config.d_e);
  for (Index i = 0; i < n; ++i) {
    const PreparedSample& s = samples[static_cast<std::size_t>(i)];
    out.images.ids.push_back(s.id);
    out.texts.ids.push_back(s.id);
    out.images.vectors.row(i) = model::embed_image(params, s.patches);
    out.texts.vectors.row(i) = model::embed_text(params, s.text_tokens);
  }
  return out;
}

EmbeddingPair embed_corpus(const model::ModelParams& params, const synth::DatasetManifest& manifest,
                           synth::Split split) {
  const auto samples = prepare_split(manifest, split, params.config);
  if (samples.empty())
    fail(ErrorKind::Config, "split '" + std::string(synth::label(split)) + "' is empty");
  return embed_samples(params, samples);
}

std::int64_t retrieve_top1(const Eigen::RowVectorXd& query, const EmbeddingBatch& images) {
  if (images.size() == 0) fail(ErrorKind::Data, "retrieve_top1: empty image batch");
  if (query.size() != images.vectors.cols())
    fail(ErrorKind::Data, "retrieve_top1: query dimension does not match the batch");
  const Eigen::VectorXd scores = images.vectors * query.transpose();
  std::size_t best = 0;
  for (std::size_t i = 1; i < images.size(); ++i) {
    const double s = scores(static_cast<Index>(i));
    const double b = scores(static_cast<Index>(best));
    if (s > b || (s == b && images.ids[i] < images.ids[best])) best = i;
  }
  return images.ids[best];
}

namespace {
constexpr std::array<std::string_view, 7> kAttributeLabels{
    "age", "gender", "ethnicity", "skin_tone_index", "hair_style", "hair_color", "expression"};
}

ClassAttribute parse_class_attribute(std::string_view s) {
  for (std::size_t i = 0; i < kAttributeLabels.size(); ++i)
    if (kAttributeLabels[i] == s) return static_cast<ClassAttribute>(i);
  fail(ErrorKind::Config, "unknown class attribute '" + std::string(s) + "'");
}

std::string_view label(ClassAttribute a) { return kAttributeLabels[static_cast<std::size_t>(a)]; }

int class_of(const synth::DemographicProfile& p, ClassAttribute a) {
  switch (a) {
    case ClassAttribute::Age: return static_cast<int>(p.age);
    case ClassAttribute::Gender: return static_cast<int>(p.gender);
    case ClassAttribute::Ethnicity: return static_cast<int>(p.ethnicity);
    case ClassAttribute::SkinTone: return p.skin_tone_index;
    case ClassAttribute::HairStyle: return static_cast<int>(p.hair_style);
    case ClassAttribute::HairColor: return static_cast<int>(p.hair_color);
    case ClassAttribute::Expression: return static_cast<int>(p.expression);
  }
  return 0;
}

RetrievalReport compute_metrics(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& assignments,
    const std::map<std::int64_t, std::int64_t>& ground_truth,
    const std::map<std::int64_t, int>& class_of_id) {
  auto class_lookup = [&](std::int64_t id) {
    auto it = class_of_id.find(id);
    if (it == class_of_id.end()) fail(ErrorKind::Data, "no class known for sample " + std::to_string(id));
    return it->second;
  };

  RetrievalReport report;
  report.assignments = assignments;
  std::sort(report.assignments.begin(), report.assignments.end());
  report.n_queries = static_cast<std::int64_t>(assignments.size());
  if (assignments.empty()) return report;

  std::map<int, std::int64_t> relevant, retrieved, hits;
  std::int64_t exact = 0;
  for (const auto& [query, got] : report.assignments) {
    auto gt = ground_truth.find(query);
    if (gt == ground_truth.end())
      fail(ErrorKind::Data, "query " + std::to_string(query) + " has no ground-truth image");
    if (got == gt->second) ++exact;
    const int truth_class = class_lookup(gt->second);
    const int got_class = class_lookup(got);
    ++relevant[truth_class];
    ++retrieved[got_class];
    if (truth_class == got_class) ++hits[truth_class];
  }

  std::set<int> classes;
  for (const auto& [c, n] : relevant) classes.insert(c);
  for (const auto& [c, n] : retrieved) classes.insert(c);
  double recall_sum = 0.0, precision_sum = 0.0;
  for (int c : classes) {
    const double tp = hits.contains(c) ? static_cast<double>(hits[c]) : 0.0;
    if (relevant.contains(c)) recall_sum += tp / static_cast<double>(relevant[c]);
    if (retrieved.contains(c)) precision_sum += tp / static_cast<double>(retrieved[c]);
  }
  const double k = static_cast<double>(classes.size());
  report.accuracy = static_cast<double>(exact) / static_cast<double>(report.n_queries);
  report.recall = recall_sum / k;
  report.precision = precision_sum / k;
  report.f1 = (report.recall > 0.0 && report.precision > 0.0)
                  ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                  : 0.0;
  return report;
}

RetrievalReport evaluate(const EmbeddingPair& embeddings,
                         const std::map<std::int64_t, int>& class_of_id) {
  std::vector<std::pair<std::int64_t, std::int64_t>> assignments;
  std::map<std::int64_t, std::int64_t> truth;
  const std::set<std::int64_t> image_ids(embeddings.images.ids.begin(), embeddings.images.ids.end());
  for (std::size_t i = 0; i < embeddings.texts.size(); ++i) {
    const std::int64_t q = embeddings.texts.ids[i];
    if (!image_ids.contains(q))
      fail(ErrorKind::Data, "text query " + std::to_string(q) + " has no paired image embedding");
    truth[q] = q;
    assignments.emplace_back(
        q, retrieve_top1(embeddings.texts.vectors.row(static_cast<Index>(i)), embeddings.images));
  }
  return compute_metrics(assignments, truth, class_of_id);
}

double recall_at_k(const EmbeddingPair& embeddings, int k) {
  const auto& images = embeddings.images;
  const auto& texts = embeddings.texts;
  if (texts.size() == 0) return 0.0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const Eigen::VectorXd scores = images.vectors * texts.vectors.row(static_cast<Index>(i)).transpose();
    const auto it = std::find(images.ids.begin(), images.ids.end(), texts.ids[i]);
    if (it == images.ids.end()) continue;
    const auto target = static_cast<Index>(it - images.ids.begin());
    // Rank under the same ordering as retrieve_top1: score desc, then id asc.
    int better = 0;
    for (Index j = 0; j < scores.size(); ++j) {
      if (j == target) continue;
      if (scores(j) > scores(target) ||
          (scores(j) == scores(target) && images.ids[static_cast<std::size_t>(j)] < texts.ids[i]))
        ++better;
    }
    if (better < k) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(texts.size());
}

std::map<std::int64_t, int> class_map(const synth::DatasetManifest& manifest, synth::Split split,
                                      ClassAttribute attribute) {
  std::map<std::int64_t, int> out;
  for (const synth::SampleRecord* r : manifest.split(split))
    out[r->sample_id] = class_of(r->profile, attribute);
  return out;
}

nlohmann::ordered_json to_json(const RetrievalReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["recall"] = report.recall;
  j["precision"] = report.precision;
  j["f1"] = report.f1;
  j["n_queries"] = report.n_queries;
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& [q, r] : report.assignments) a.push_back({q, r});
  j["assignments"] = a;
  return j;
}

void export_embeddings(const fs::path& path, const EmbeddingPair& embeddings) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  for (const EmbeddingBatch* b : {&embeddings.images, &embeddings.texts}) {
    for (std::size_t i = 0; i < b->size(); ++i) {
      nlohmann::ordered_json j;
      j["id"] = b->ids[i];
      j["modality"] = label(b->modality);
      const auto row = b->vectors.row(static_cast<Index>(i));
      j["vec"] = std::vector<double>(row.data(), row.data() + row.size());
      os << j.dump() << '\n';
    }
  }
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

EmbeddingPair import_embeddings(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open embeddings file " + path.string());
  struct Row {
    std::int64_t id;
    std::vector<double> vec;
  };
  std::vector<Row> rows[2];
  std::set<std::int64_t> seen[2];
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Row row;
    std::string modality;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      row.id = j.at("id").get<std::int64_t>();
      modality = j.at("modality").get<std::string>();
      row.vec = j.at("vec").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": malformed line (" +
                                e.what() + ")");
    }
    if (modality != "image" && modality != "text")
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": unknown modality '" +
                                modality + "'");
    if (row.vec.empty())
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": empty vector");
    if (dim == 0) dim = row.vec.size();
    if (row.vec.size() != dim)
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": dimension " +
                                std::to_string(row.vec.size()) + " differs from " + std::to_string(dim));
    const int m = modality == "image" ? 0 : 1;
    if (!seen[m].insert(row.id).second)
      fail(ErrorKind::Data, "duplicate " + modality + " id " + std::to_string(row.id) + " in " +
                                path.string());
    rows[m].push_back(std::move(row));
  }

  EmbeddingPair out;
  out.images.modality = Modality::Image;
  out.texts.modality = Modality::Text;
  EmbeddingBatch* batches[2] = {&out.images, &out.texts};
  for (int m = 0; m < 2; ++m) {
    EmbeddingBatch& b = *batches[m];
    b.vectors.resize(static_cast<Index>(rows[m].size()), static_cast<Index>(dim));
    for (std::size_t i = 0; i < rows[m].size(); ++i) {
      b.ids.push_back(rows[m][i].id);
      auto dst = b.vectors.row(static_cast<Index>(i));
      for (std::size_t k = 0; k < dim; ++k) dst(static_cast<Index>(k)) = rows[m][i].vec[k];
      const double n = dst.norm();
      if (n == 0.0)
        fail(ErrorKind::Data, "zero vector for " + std::string(label(b.modality)) + " id " +
                                  std::to_string(rows[m][i].id));
      if (std::abs(n - 1.0) > 1e-3) {
        log_warning("renormalizing " + std::string(label(b.modality)) + " embedding " +
                    std::to_string(rows[m][i].id) + " (norm " + std::to_string(n) + ")");
        dst /= n;
      }
    }
  }
  return out;
}

}  // namespace umod::retrieval
