// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Top-1 text-to-image user retrieval and its metrics.

#pragma once

#include "umod/model.hpp"
#include "umod/synthgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace umod::retrieval {

/// A manifest sample with everything the model consumes, computed once.
struct PreparedSample {
  std::int64_t id = 0;
  synth::DemographicProfile profile;
  Matrix patches;
  std::vector<int> text_tokens;
  std::vector<int> visual_tokens;
};

/// Loads (or, for in-memory manifests, renders) one split. Throws ErrorKind::Io on a
/// missing image and ErrorKind::Data when image dimensions disagree with the model.
std::vector<PreparedSample> prepare_split(const synth::DatasetManifest& manifest, synth::Split split,
                                          const model::ModelConfig& config);

enum class Modality { Image, Text };
std::string_view label(Modality m);

struct EmbeddingBatch {
  Modality modality = Modality::Image;
  std::vector<std::int64_t> ids;
  Matrix vectors;  // one unit row per id

  std::size_t size() const { return ids.size(); }
  /// Unique ids, matching row count, rows unit norm within 1e-4.
  void validate() const;
};

struct EmbeddingPair {
  EmbeddingBatch images;
  EmbeddingBatch texts;
};

EmbeddingPair embed_samples(const model::ModelParams& params,
                            const std::vector<PreparedSample>& samples);
EmbeddingPair embed_corpus(const model::ModelParams& params, const synth::DatasetManifest& manifest,
                           synth::Split split);

/// Id of the image row with the largest dot product; ties go to the lowest id.
std::int64_t retrieve_top1(const Eigen::RowVectorXd& query, const EmbeddingBatch& images);

/// Demographic attribute used for the class-level (macro) metrics.
enum class ClassAttribute { Age, Gender, Ethnicity, SkinTone, HairStyle, HairColor, Expression };
ClassAttribute parse_class_attribute(std::string_view s);
std::string_view label(ClassAttribute a);
int class_of(const synth::DemographicProfile& p, ClassAttribute a);

struct RetrievalReport {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::int64_t n_queries = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> assignments;  // (query id, retrieved id)
};

/// accuracy: exact pair matches / queries. Precision and recall are per class of
/// the ground-truth sample (a retrieval is correct for class c when the retrieved
/// sample is in class c), macro-averaged over every class seen among ground
/// truths or retrievals; a class never retrieved has precision 0. F1 is the
/// harmonic mean of macro precision and macro recall, or 0 when either is 0.
RetrievalReport compute_metrics(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& assignments,
    const std::map<std::int64_t, std::int64_t>& ground_truth,
    const std::map<std::int64_t, int>& class_of_id);

/// Every text query against every image; the ground truth of query i is image i.
RetrievalReport evaluate(const EmbeddingPair& embeddings,
                         const std::map<std::int64_t, int>& class_of_id);

/// Fraction of text queries whose paired image ranks in the top k. Reported
/// alongside the top-1 metrics, never in place of them.
double recall_at_k(const EmbeddingPair& embeddings, int k);

std::map<std::int64_t, int> class_map(const synth::DatasetManifest& manifest, synth::Split split,
                                      ClassAttribute attribute);

nlohmann::ordered_json to_json(const RetrievalReport& report);

/// One JSON object per row: {"id": int, "modality": "image"|"text", "vec": [floats]}.
void export_embeddings(const std::filesystem::path& path, const EmbeddingPair& embeddings);

/// Parses an embedding JSONL file into its image and text batches. Rows whose norm
/// is more than 1e-3 away from 1 are renormalized with a warning. Throws
/// ErrorKind::Data on malformed lines, duplicate ids or inconsistent dimensions.
EmbeddingPair import_embeddings(const std::filesystem::path& path);

}  // namespace umod::retrieval
