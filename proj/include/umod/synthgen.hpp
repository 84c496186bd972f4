// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Procedural avatar/profile pairs with exact demographic ground truth.

#pragma once

#include "umod/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace umod::synth {

enum class AgeClass : std::uint8_t { Teens, Twenties, Thirties, Forties, Sixties };
enum class Gender : std::uint8_t { Male, Female };
enum class Ethnicity : std::uint8_t {
  White,
  EastAsian,
  MiddleEastern,
  LatinoHispanic,
  SoutheastAsian,
  Indian,
  Black,
};
enum class HairStyle : std::uint8_t { Short, Long, Curly, Bun };
enum class HairColor : std::uint8_t { Black, Brown, Blonde, Auburn, Gray };
enum class Expression : std::uint8_t { Neutral, Smiling, Frowning };

inline constexpr int kAgeClasses = 5;
inline constexpr int kGenderClasses = 2;
inline constexpr int kEthnicityClasses = 7;
inline constexpr int kHairStyles = 4;
inline constexpr int kHairColors = 5;
inline constexpr int kExpressions = 3;
inline constexpr int kTonesPerEthnicity = 2;
inline constexpr int kSkinTones = kEthnicityClasses * kTonesPerEthnicity;

/// Largest attribute domain; the stratification floor is ten samples per class of it.
inline constexpr int kMaxAttributeClasses = kSkinTones;

/// The seven generated attributes. Skin tone is tied to ethnicity: ethnicity e owns
/// palette indices {2e, 2e+1}, and the palette darkens monotonically with the index.
struct DemographicProfile {
  AgeClass age = AgeClass::Teens;
  Gender gender = Gender::Male;
  Ethnicity ethnicity = Ethnicity::White;
  HairStyle hair_style = HairStyle::Short;
  HairColor hair_color = HairColor::Black;
  Expression expression = Expression::Neutral;
  int skin_tone_index = 0;

  bool operator==(const DemographicProfile&) const = default;
};

bool is_valid(const DemographicProfile& p);

std::string_view label(AgeClass v);
std::string_view label(Gender v);
std::string_view label(Ethnicity v);
std::string_view label(HairStyle v);
std::string_view label(HairColor v);
std::string_view label(Expression v);

/// Every valid profile, in a fixed order. Used for injectivity checks and for
/// deriving the closed text vocabulary.
std::vector<DemographicProfile> enumerate_profiles();

/// Stratified profile source. Each attribute is drawn from consecutive blocks that
/// are random permutations of its classes, so after n draws every class count is
/// within one of n / classes. Skin tone is stratified within each ethnicity.
class ProfileSampler {
 public:
  explicit ProfileSampler(std::uint64_t seed);
  DemographicProfile next();

 private:
  struct Stratum {
    int classes = 0;
    std::vector<int> block;
    std::size_t pos = 0;
  };
  int draw(Stratum& s);

  std::mt19937_64 rng_;
  Stratum age_, gender_, ethnicity_, style_, color_, expression_;
  std::array<Stratum, kEthnicityClasses> tone_;
};

DemographicProfile sample_profile(ProfileSampler& state);

/// Fills the fixed template, then appends the complexion, hair and expression
/// clauses in that order. Injective over the profile domain.
std::string render_text(const DemographicProfile& p);

/// Word-level tokens of every string render_text can produce, sorted.
std::vector<std::string> template_vocabulary();

struct ImageSpec {
  int height = 32;
  int width = 32;
  int patch_size = 16;

  bool operator==(const ImageSpec&) const = default;
};

/// Colour scheme for skin, hair, clothing and background. Palette B is a shifted
/// rendering of the same attributes, used for distribution-shift evaluation.
enum class Palette : std::uint8_t { A, B };
std::string_view label(Palette p);
Palette parse_palette(std::string_view s);

/// Per-pixel provenance of a rendered avatar.
enum class Region : std::uint8_t { Background, Skin, Hair, Clothing, Feature };

struct Avatar {
  Image image;
  std::vector<Region> regions;  // height * width

  /// Pixels whose colour depends on the skin palette: skin plus facial features.
  std::vector<bool> face_mask() const;
};

/// Deterministic in (profile, spec, jitter_seed, palette). Output is quantized to
/// 8-bit levels. Throws ErrorKind::Config when H or W is not a multiple of the patch.
Avatar render_avatar_regions(const DemographicProfile& p, const ImageSpec& spec,
                             std::uint64_t jitter_seed, Palette palette = Palette::A);
Image render_avatar(const DemographicProfile& p, const ImageSpec& spec, std::uint64_t jitter_seed,
                    Palette palette = Palette::A);

// ---------------------------------------------------------------------------
// Datasets

enum class Split : std::uint8_t { Train, Val, Test };
std::string_view label(Split s);
Split parse_split(std::string_view s);

struct GenConfig {
  std::int64_t n = 1000;
  std::uint64_t seed = 0;
  ImageSpec image;
  Palette palette = Palette::A;
};

struct SampleRecord {
  std::int64_t sample_id = 0;
  Split split = Split::Train;
  std::string text;
  DemographicProfile profile;
  std::uint64_t jitter_seed = 0;
  std::string image_path;  // relative to the dataset root
};

struct SplitCounts {
  std::int64_t train = 0, val = 0, test = 0;
  bool operator==(const SplitCounts&) const = default;
};

/// 8:1:1 with the rounding remainder assigned to train.
SplitCounts split_counts_for(std::int64_t n);

using AttributeHistogram = std::map<std::string, std::vector<std::int64_t>>;

struct DatasetManifest {
  GenConfig config;
  std::vector<SampleRecord> samples;
  SplitCounts split_counts;
  AttributeHistogram attribute_histogram;  // whole dataset
  std::map<std::string, AttributeHistogram> split_histograms;
  std::filesystem::path root;  // empty for in-memory manifests

  std::vector<const SampleRecord*> split(Split s) const;
};

AttributeHistogram histogram(const std::vector<const SampleRecord*>& samples);

/// Profiles, texts, ids and jitter seeds for a dataset, without rendering.
/// Throws ErrorKind::Config when n is below the stratification floor.
DatasetManifest plan_dataset(const GenConfig& config);

/// n unsplit training pairs with no size floor, for toy experiments.
DatasetManifest plan_pairs(std::int64_t n, std::uint64_t seed, const ImageSpec& spec,
                           Palette palette = Palette::A);

Image render_sample(const SampleRecord& record, const GenConfig& config);

/// Writes <out>/images/<id>.png, <out>/manifest.jsonl and <out>/meta.json.
DatasetManifest build_dataset(const GenConfig& config, const std::filesystem::path& out);

/// Reads a directory written by build_dataset, re-validating pair integrity.
DatasetManifest load_dataset(const std::filesystem::path& dir);

/// The manifest.jsonl payload, exactly as build_dataset writes it.
std::string manifest_jsonl(const DatasetManifest& manifest);

/// Derives a per-sample jitter seed from the dataset seed and sample id.
std::uint64_t jitter_seed_for(std::uint64_t dataset_seed, std::int64_t sample_id);

}  // namespace umod::synth
