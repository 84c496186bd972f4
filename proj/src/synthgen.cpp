// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/synthgen.hpp"

#include "umod/error.hpp"
#include "umod/seed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace umod::synth {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Labels

namespace {

constexpr std::array<std::string_view, kAgeClasses> kAgeLabels{"10-19", "20-29", "30-39",
                                                               "40-49", "60-69"};
constexpr std::array<std::string_view, kGenderClasses> kGenderLabels{"male", "female"};
constexpr std::array<std::string_view, kEthnicityClasses> kEthnicityLabels{
    "White", "East Asian", "Middle Eastern", "Latino Hispanic", "Southeast Asian", "Indian",
    "Black"};
constexpr std::array<std::string_view, kHairStyles> kHairStyleLabels{"short", "long", "curly",
                                                                     "bun"};
constexpr std::array<std::string_view, kHairColors> kHairColorLabels{"black", "brown", "blonde",
                                                                     "auburn", "gray"};
constexpr std::array<std::string_view, kExpressions> kExpressionLabels{"neutral", "smiling",
                                                                       "frowning"};
constexpr std::array<std::string_view, kTonesPerEthnicity> kComplexionLabels{"lighter", "deeper"};

template <typename E, std::size_t N>
E parse_label(const std::array<std::string_view, N>& labels, std::string_view s, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (labels[i] == s) return static_cast<E>(i);
  fail(ErrorKind::Data, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E>
int idx(E e) {
  return static_cast<int>(e);
}

}  // namespace

std::string_view label(AgeClass v) { return kAgeLabels[idx(v)]; }
std::string_view label(Gender v) { return kGenderLabels[idx(v)]; }
std::string_view label(Ethnicity v) { return kEthnicityLabels[idx(v)]; }
std::string_view label(HairStyle v) { return kHairStyleLabels[idx(v)]; }
std::string_view label(HairColor v) { return kHairColorLabels[idx(v)]; }
std::string_view label(Expression v) { return kExpressionLabels[idx(v)]; }
std::string_view label(Palette p) { return p == Palette::A ? "A" : "B"; }

Palette parse_palette(std::string_view s) {
  if (s == "A") return Palette::A;
  if (s == "B") return Palette::B;
  fail(ErrorKind::Config, "invalid palette '" + std::string(s) + "' (expected A or B)");
}

std::string_view label(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  fail(ErrorKind::Config, "unknown split '" + std::string(s) + "' (expected train, val or test)");
}

bool is_valid(const DemographicProfile& p) {
  auto in = [](auto e, int n) { return idx(e) >= 0 && idx(e) < n; };
  return in(p.age, kAgeClasses) && in(p.gender, kGenderClasses) &&
         in(p.ethnicity, kEthnicityClasses) && in(p.hair_style, kHairStyles) &&
         in(p.hair_color, kHairColors) && in(p.expression, kExpressions) &&
         p.skin_tone_index / kTonesPerEthnicity == idx(p.ethnicity) && p.skin_tone_index >= 0 &&
         p.skin_tone_index < kSkinTones;
}

std::vector<DemographicProfile> enumerate_profiles() {
  std::vector<DemographicProfile> out;
  for (int a = 0; a < kAgeClasses; ++a)
    for (int g = 0; g < kGenderClasses; ++g)
      for (int t = 0; t < kSkinTones; ++t)
        for (int s = 0; s < kHairStyles; ++s)
          for (int c = 0; c < kHairColors; ++c)
            for (int e = 0; e < kExpressions; ++e) {
              DemographicProfile p;
              p.age = static_cast<AgeClass>(a);
              p.gender = static_cast<Gender>(g);
              p.ethnicity = static_cast<Ethnicity>(t / kTonesPerEthnicity);
              p.skin_tone_index = t;
              p.hair_style = static_cast<HairStyle>(s);
              p.hair_color = static_cast<HairColor>(c);
              p.expression = static_cast<Expression>(e);
              out.push_back(p);
            }
  return out;
}

// ---------------------------------------------------------------------------
// Stratified sampling

ProfileSampler::ProfileSampler(std::uint64_t seed) : rng_(seed) {
  age_.classes = kAgeClasses;
  gender_.classes = kGenderClasses;
  ethnicity_.classes = kEthnicityClasses;
  style_.classes = kHairStyles;
  color_.classes = kHairColors;
  expression_.classes = kExpressions;
  for (Stratum& s : tone_) s.classes = kTonesPerEthnicity;
}

int ProfileSampler::draw(Stratum& s) {
  if (s.pos == s.block.size()) {
    s.block.resize(static_cast<std::size_t>(s.classes));
    std::iota(s.block.begin(), s.block.end(), 0);
    std::shuffle(s.block.begin(), s.block.end(), rng_);
    s.pos = 0;
  }
  return s.block[s.pos++];
}

DemographicProfile ProfileSampler::next() {
  DemographicProfile p;
  p.age = static_cast<AgeClass>(draw(age_));
  p.gender = static_cast<Gender>(draw(gender_));
  const int eth = draw(ethnicity_);
  p.ethnicity = static_cast<Ethnicity>(eth);
  p.skin_tone_index = eth * kTonesPerEthnicity + draw(tone_[static_cast<std::size_t>(eth)]);
  p.hair_style = static_cast<HairStyle>(draw(style_));
  p.hair_color = static_cast<HairColor>(draw(color_));
  p.expression = static_cast<Expression>(draw(expression_));
  return p;
}

DemographicProfile sample_profile(ProfileSampler& state) { return state.next(); }

// ---------------------------------------------------------------------------
// Text

std::string render_text(const DemographicProfile& p) {
  std::string s = "The person appears to be ";
  s += label(p.ethnicity);
  s += ' ';
  s += label(p.gender);
  s += ", approximately ";
  s += label(p.age);
  s += " years old, with a ";
  s += kComplexionLabels[static_cast<std::size_t>(p.skin_tone_index % kTonesPerEthnicity)];
  s += " complexion, ";
  if (p.hair_style == HairStyle::Bun) {
    s += label(p.hair_color);
    s += " hair in a bun";
  } else {
    s += label(p.hair_style);
    s += ' ';
    s += label(p.hair_color);
    s += " hair";
  }
  s += ", and a ";
  s += label(p.expression);
  s += " expression.";
  return s;
}

std::vector<std::string> template_vocabulary() {
  // Every word slot is exercised by varying one attribute at a time, so this
  // covers the full vocabulary without rendering all profiles.
  std::set<std::string> words;
  auto add_words = [&](const std::string& text) {
    std::string cur;
    for (char ch : text) {
      if (ch == ' ' || ch == ',' || ch == '.') {
        if (!cur.empty()) words.insert(cur);
        cur.clear();
        if (ch != ' ') words.insert(std::string(1, ch));
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) words.insert(cur);
  };
  for (const DemographicProfile& p : enumerate_profiles()) add_words(render_text(p));
  return {words.begin(), words.end()};
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

struct Rgb {
  double r, g, b;
};

Rgb lerp(Rgb a, Rgb b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Rgb skin_color(int tone, Palette palette) {
  const Rgb light{0.96, 0.84, 0.74};
  const Rgb dark{0.28, 0.18, 0.12};
  Rgb c = lerp(light, dark, tone / static_cast<double>(kSkinTones - 1));
  if (palette == Palette::B) c = {c.r * 0.90, c.g * 0.96, std::min(1.0, c.b * 1.08 + 0.02)};
  return c;
}

Rgb hair_color(HairColor h, Palette palette) {
  static constexpr std::array<Rgb, kHairColors> a{
      Rgb{0.08, 0.07, 0.07}, Rgb{0.40, 0.25, 0.13}, Rgb{0.90, 0.78, 0.45}, Rgb{0.62, 0.22, 0.10},
      Rgb{0.66, 0.66, 0.68}};
  static constexpr std::array<Rgb, kHairColors> b{
      Rgb{0.16, 0.12, 0.22}, Rgb{0.48, 0.30, 0.22}, Rgb{0.95, 0.86, 0.58}, Rgb{0.70, 0.30, 0.22},
      Rgb{0.74, 0.72, 0.78}};
  return (palette == Palette::A ? a : b)[static_cast<std::size_t>(idx(h))];
}

Rgb background_color(Palette p) { return p == Palette::A ? Rgb{0.84, 0.88, 0.93} : Rgb{0.72, 0.82, 0.74}; }
Rgb clothing_color(Palette p) { return p == Palette::A ? Rgb{0.24, 0.34, 0.56} : Rgb{0.56, 0.26, 0.32}; }
constexpr Rgb kEyeColor{0.10, 0.10, 0.14};
constexpr Rgb kMouthColor{0.55, 0.16, 0.18};

// Geometry in normalized coordinates (u right, v down), before translation.
struct Geometry {
  double cx = 0.5, cy = 0.46;
  double rx = 0.2, ry = 0.25;
  double hairline = 0.0;  // hair cap covers v below this value (towards the top)
  double shoulder = 0.4;
  double mouth_v = 0.0, mouth_curve = 0.0;
  int wrinkles = 0;
};

Geometry layout(const DemographicProfile& p) {
  Geometry g;
  const int a = idx(p.age);
  g.rx = 0.205 - (p.gender == Gender::Female ? 0.02 : 0.0) + (a == 0 ? 0.01 : 0.0);
  g.ry = 0.21 + 0.022 * a;
  g.hairline = g.cy - 0.45 * g.ry;
  g.shoulder = p.gender == Gender::Male ? 0.44 : 0.31;
  g.mouth_v = g.cy + 0.55 * g.ry;
  switch (p.expression) {
    case Expression::Neutral: g.mouth_curve = 0.0; break;
    case Expression::Smiling: g.mouth_curve = -0.045; break;
    case Expression::Frowning: g.mouth_curve = 0.045; break;
  }
  g.wrinkles = a < 2 ? 0 : (a < 4 ? 1 : 2);
  return g;
}

bool in_ellipse(double u, double v, double cx, double cy, double rx, double ry) {
  const double du = (u - cx) / rx, dv = (v - cy) / ry;
  return du * du + dv * dv <= 1.0;
}

bool hair_front(const Geometry& g, HairStyle style, double u, double v) {
  switch (style) {
    case HairStyle::Short:
    case HairStyle::Long:
      return v < g.hairline && in_ellipse(u, v, g.cx, g.cy, g.rx + 0.035, g.ry + 0.04);
    case HairStyle::Curly: {
      if (v >= g.cy - 0.25 * g.ry) return false;
      const double theta = std::atan2(v - g.cy, u - g.cx);
      const double wobble = 1.0 + 0.09 * std::sin(7.0 * theta);
      return in_ellipse(u, v, g.cx, g.cy, (g.rx + 0.06) * wobble, (g.ry + 0.06) * wobble);
    }
    case HairStyle::Bun:
      return (v < g.hairline && in_ellipse(u, v, g.cx, g.cy, g.rx + 0.03, g.ry + 0.035)) ||
             in_ellipse(u, v, g.cx, g.cy - g.ry - 0.06, 0.075, 0.075);
  }
  return false;
}

bool hair_back(const Geometry& g, HairStyle style, double u, double v) {
  return style == HairStyle::Long && std::abs(u - g.cx) < g.rx + 0.05 &&
         v > g.cy - 0.5 * g.ry && v < g.cy + g.ry + 0.12;
}

}  // namespace

std::vector<bool> Avatar::face_mask() const {
  std::vector<bool> m(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i)
    m[i] = regions[i] == Region::Skin || regions[i] == Region::Feature;
  return m;
}

Avatar render_avatar_regions(const DemographicProfile& p, const ImageSpec& spec,
                             std::uint64_t jitter_seed, Palette palette) {
  if (spec.patch_size <= 0 || spec.height <= 0 || spec.width <= 0)
    fail(ErrorKind::Config, "image dimensions and patch size must be positive");
  if (spec.height % spec.patch_size != 0 || spec.width % spec.patch_size != 0)
    fail(ErrorKind::Config, "image size " + std::to_string(spec.height) + "x" +
                                std::to_string(spec.width) + " is not divisible by patch size " +
                                std::to_string(spec.patch_size));
  if (!is_valid(p)) fail(ErrorKind::Data, "render_avatar: invalid profile");

  const int h = spec.height, w = spec.width;
  std::mt19937_64 rng(jitter_seed);
  const int unit = std::max(1, w / 32);
  std::uniform_int_distribution<int> shift(-1, 1);
  const int tx = shift(rng) * unit, ty = shift(rng) * unit;
  std::uniform_real_distribution<double> noise(-0.04, 0.04);

  const Geometry g = layout(p);
  const Rgb skin = skin_color(p.skin_tone_index, palette);
  const Rgb hair = hair_color(p.hair_color, palette);
  const Rgb wrinkle{skin.r * 0.82, skin.g * 0.82, skin.b * 0.82};
  const Rgb bg = background_color(palette);
  const Rgb cloth = clothing_color(palette);

  // Forehead line rows, in untranslated pixel coordinates.
  const int first_wrinkle_row = static_cast<int>(std::ceil(g.hairline * h)) + 1;
  const double eye_v = g.cy - 0.05;
  const double eye_r = std::max(0.03, 0.55 / h);
  const double half_px = 0.5 / h;

  Avatar out;
  out.image = Image(h, w);
  out.regions.assign(static_cast<std::size_t>(h) * w, Region::Background);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = x - tx, sy = y - ty;
      const double u = (sx + 0.5) / w, v = (sy + 0.5) / h;

      Region region = Region::Background;
      Rgb c = bg;
      if (hair_back(g, p.hair_style, u, v)) region = Region::Hair, c = hair;
      if (in_ellipse(u, v, g.cx, 1.08, g.shoulder, 0.26)) region = Region::Clothing, c = cloth;
      if (std::abs(u - g.cx) < 0.06 && v > g.cy + 0.8 * g.ry && v < 0.9)
        region = Region::Skin, c = skin;
      const bool in_face = in_ellipse(u, v, g.cx, g.cy, g.rx, g.ry);
      if (in_face) region = Region::Skin, c = skin;
      if (hair_front(g, p.hair_style, u, v)) region = Region::Hair, c = hair;

      if (in_face && region == Region::Skin) {
        for (int i = 0; i < g.wrinkles; ++i)
          if (sy == first_wrinkle_row + 2 * i && std::abs(u - g.cx) < 0.6 * g.rx)
            region = Region::Feature, c = wrinkle;
        const double ex = 0.42 * g.rx;
        if (in_ellipse(u, v, g.cx - ex, eye_v, eye_r, eye_r) ||
            in_ellipse(u, v, g.cx + ex, eye_v, eye_r, eye_r))
          region = Region::Feature, c = kEyeColor;
        const double du = (u - g.cx) / 0.1;
        if (std::abs(du) <= 1.0) {
          const double curve = g.mouth_v + g.mouth_curve * (du * du - 0.5);
          if (std::abs(v - curve) <= half_px + 1e-9) region = Region::Feature, c = kMouthColor;
        }
      }

      // Noise is drawn for every pixel so the stream does not depend on the layout.
      const double n0 = noise(rng), n1 = noise(rng), n2 = noise(rng);
      if (region == Region::Background) c = {c.r + n0, c.g + n1, c.b + n2};

      out.regions[static_cast<std::size_t>(y) * w + x] = region;
      out.image.at(y, x, 0) = c.r;
      out.image.at(y, x, 1) = c.g;
      out.image.at(y, x, 2) = c.b;
    }
  }
  quantize_8bit(out.image);
  return out;
}

Image render_avatar(const DemographicProfile& p, const ImageSpec& spec, std::uint64_t jitter_seed,
                    Palette palette) {
  return render_avatar_regions(p, spec, jitter_seed, palette).image;
}

// ---------------------------------------------------------------------------
// Datasets

SplitCounts split_counts_for(std::int64_t n) {
  SplitCounts c;
  c.val = n / 10;
  c.test = n / 10;
  c.train = n - c.val - c.test;
  return c;
}

std::uint64_t jitter_seed_for(std::uint64_t dataset_seed, std::int64_t sample_id) {
  return derive_seed({dataset_seed, 0x4A17ULL, static_cast<std::uint64_t>(sample_id)});
}

std::vector<const SampleRecord*> DatasetManifest::split(Split s) const {
  std::vector<const SampleRecord*> out;
  for (const SampleRecord& r : samples)
    if (r.split == s) out.push_back(&r);
  return out;
}

AttributeHistogram histogram(const std::vector<const SampleRecord*>& samples) {
  AttributeHistogram h{
      {"age", std::vector<std::int64_t>(kAgeClasses)},
      {"gender", std::vector<std::int64_t>(kGenderClasses)},
      {"ethnicity", std::vector<std::int64_t>(kEthnicityClasses)},
      {"skin_tone_index", std::vector<std::int64_t>(kSkinTones)},
      {"hair_style", std::vector<std::int64_t>(kHairStyles)},
      {"hair_color", std::vector<std::int64_t>(kHairColors)},
      {"expression", std::vector<std::int64_t>(kExpressions)},
  };
  for (const SampleRecord* r : samples) {
    const DemographicProfile& p = r->profile;
    ++h["age"][idx(p.age)];
    ++h["gender"][idx(p.gender)];
    ++h["ethnicity"][idx(p.ethnicity)];
    ++h["skin_tone_index"][static_cast<std::size_t>(p.skin_tone_index)];
    ++h["hair_style"][idx(p.hair_style)];
    ++h["hair_color"][idx(p.hair_color)];
    ++h["expression"][idx(p.expression)];
  }
  return h;
}

namespace {

void fill_histograms(DatasetManifest& m) {
  std::vector<const SampleRecord*> all;
  for (const SampleRecord& r : m.samples) all.push_back(&r);
  m.attribute_histogram = histogram(all);
  m.split_histograms.clear();
  for (Split s : {Split::Train, Split::Val, Split::Test})
    m.split_histograms[std::string(label(s))] = histogram(m.split(s));
}

std::string image_path_for(std::int64_t id) { return "images/" + std::to_string(id) + ".png"; }

}  // namespace

DatasetManifest plan_dataset(const GenConfig& config) {
  const std::int64_t floor = 10LL * kMaxAttributeClasses;
  if (config.n < floor)
    fail(ErrorKind::Config, "dataset size " + std::to_string(config.n) + " is below the minimum of " +
                                std::to_string(floor) + " (10 x " +
                                std::to_string(kMaxAttributeClasses) +
                                " classes) required for stratified 8:1:1 splits");
  const ImageSpec& spec = config.image;
  if (spec.patch_size <= 0 || spec.height % spec.patch_size != 0 ||
      spec.width % spec.patch_size != 0)
    fail(ErrorKind::Config, "image size must be divisible by the patch size");

  DatasetManifest m;
  m.config = config;
  m.split_counts = split_counts_for(config.n);
  std::int64_t next_id = 0;
  const std::array<std::pair<Split, std::int64_t>, 3> plan{{{Split::Train, m.split_counts.train},
                                                            {Split::Val, m.split_counts.val},
                                                            {Split::Test, m.split_counts.test}}};
  for (const auto& [split, count] : plan) {
    ProfileSampler sampler(derive_seed({config.seed, 0x5A3CULL, static_cast<std::uint64_t>(split)}));
    for (std::int64_t i = 0; i < count; ++i) {
      SampleRecord r;
      r.sample_id = next_id++;
      r.split = split;
      r.profile = sample_profile(sampler);
      r.text = render_text(r.profile);
      r.jitter_seed = jitter_seed_for(config.seed, r.sample_id);
      r.image_path = image_path_for(r.sample_id);
      m.samples.push_back(std::move(r));
    }
  }
  fill_histograms(m);
  return m;
}

DatasetManifest plan_pairs(std::int64_t n, std::uint64_t seed, const ImageSpec& spec,
                           Palette palette) {
  if (n <= 0) fail(ErrorKind::Config, "plan_pairs: n must be positive");
  DatasetManifest m;
  m.config.n = n;
  m.config.seed = seed;
  m.config.image = spec;
  m.config.palette = palette;
  m.split_counts.train = n;
  ProfileSampler sampler(derive_seed({seed, 0x5A3CULL, 0}));
  for (std::int64_t i = 0; i < n; ++i) {
    SampleRecord r;
    r.sample_id = i;
    r.profile = sample_profile(sampler);
    r.text = render_text(r.profile);
    r.jitter_seed = jitter_seed_for(seed, i);
    r.image_path = image_path_for(i);
    m.samples.push_back(std::move(r));
  }
  fill_histograms(m);
  return m;
}

Image render_sample(const SampleRecord& record, const GenConfig& config) {
  return render_avatar(record.profile, config.image, record.jitter_seed, config.palette);
}

namespace {

ordered_json record_json(const SampleRecord& r) {
  const DemographicProfile& p = r.profile;
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["split"] = label(r.split);
  j["text"] = r.text;
  j["age"] = label(p.age);
  j["gender"] = label(p.gender);
  j["ethnicity"] = label(p.ethnicity);
  j["skin_tone_index"] = p.skin_tone_index;
  j["hair_style"] = label(p.hair_style);
  j["hair_color"] = label(p.hair_color);
  j["expression"] = label(p.expression);
  j["image"] = r.image_path;
  return j;
}

ordered_json histogram_json(const AttributeHistogram& h) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : h) j[k] = v;
  return j;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
  f << content;
  if (!f) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

std::string manifest_jsonl(const DatasetManifest& manifest) {
  std::string out;
  for (const SampleRecord& r : manifest.samples) {
    out += record_json(r).dump();
    out += '\n';
  }
  return out;
}

DatasetManifest build_dataset(const GenConfig& config, const fs::path& out) {
  DatasetManifest m = plan_dataset(config);
  std::error_code ec;
  fs::create_directories(out / "images", ec);
  if (ec || !fs::is_directory(out / "images"))
    fail(ErrorKind::Io, "cannot create output directory " + out.string() +
                            (ec ? ": " + ec.message() : std::string()));

  for (const SampleRecord& r : m.samples) write_png(out / r.image_path, render_sample(r, config));
  write_text_file(out / "manifest.jsonl", manifest_jsonl(m));

  ordered_json meta;
  meta["seed"] = config.seed;
  meta["n"] = config.n;
  meta["image"] = {{"height", config.image.height},
                   {"width", config.image.width},
                   {"patch_size", config.image.patch_size}};
  meta["palette"] = label(config.palette);
  meta["split_counts"] = {{"train", m.split_counts.train},
                          {"val", m.split_counts.val},
                          {"test", m.split_counts.test}};
  meta["attribute_histogram"] = histogram_json(m.attribute_histogram);
  ordered_json per_split = ordered_json::object();
  for (const auto& [name, h] : m.split_histograms) per_split[name] = histogram_json(h);
  meta["split_histograms"] = per_split;
  write_text_file(out / "meta.json", meta.dump(2) + "\n");
  m.root = out;
  return m;
}

DatasetManifest load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "dataset directory not found: " + dir.string());
  std::ifstream meta_file(dir / "meta.json");
  if (!meta_file) fail(ErrorKind::Io, "missing meta.json in " + dir.string());
  DatasetManifest m;
  try {
    const nlohmann::json meta = nlohmann::json::parse(meta_file);
    m.config.seed = meta.at("seed").get<std::uint64_t>();
    m.config.n = meta.at("n").get<std::int64_t>();
    m.config.image.height = meta.at("image").at("height").get<int>();
    m.config.image.width = meta.at("image").at("width").get<int>();
    m.config.image.patch_size = meta.at("image").at("patch_size").get<int>();
    m.config.palette = parse_palette(meta.value("palette", std::string("A")));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, "malformed meta.json: " + std::string(e.what()));
  }

  std::ifstream jsonl(dir / "manifest.jsonl");
  if (!jsonl) fail(ErrorKind::Io, "missing manifest.jsonl in " + dir.string());
  std::string line;
  std::size_t line_no = 0;
  std::set<std::int64_t> ids;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.empty()) continue;
    SampleRecord r;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      r.sample_id = j.at("sample_id").get<std::int64_t>();
      r.split = parse_split(j.at("split").get<std::string>());
      r.text = j.at("text").get<std::string>();
      DemographicProfile& p = r.profile;
      p.age = parse_label<AgeClass>(kAgeLabels, j.at("age").get<std::string>(), "age");
      p.gender = parse_label<Gender>(kGenderLabels, j.at("gender").get<std::string>(), "gender");
      p.ethnicity =
          parse_label<Ethnicity>(kEthnicityLabels, j.at("ethnicity").get<std::string>(), "ethnicity");
      p.skin_tone_index = j.at("skin_tone_index").get<int>();
      p.hair_style =
          parse_label<HairStyle>(kHairStyleLabels, j.at("hair_style").get<std::string>(), "hair style");
      p.hair_color =
          parse_label<HairColor>(kHairColorLabels, j.at("hair_color").get<std::string>(), "hair color");
      p.expression = parse_label<Expression>(kExpressionLabels, j.at("expression").get<std::string>(),
                                             "expression");
      r.image_path = j.at("image").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Data,
           "manifest.jsonl line " + std::to_string(line_no) + ": " + std::string(e.what()));
    }
    if (!is_valid(r.profile))
      fail(ErrorKind::Data, "manifest.jsonl line " + std::to_string(line_no) + ": invalid profile");
    if (render_text(r.profile) != r.text)
      fail(ErrorKind::Data, "manifest.jsonl line " + std::to_string(line_no) +
                                ": text does not match its profile");
    if (!ids.insert(r.sample_id).second)
      fail(ErrorKind::Data, "duplicate sample_id " + std::to_string(r.sample_id));
    r.jitter_seed = jitter_seed_for(m.config.seed, r.sample_id);
    m.samples.push_back(std::move(r));
  }
  m.split_counts = {};
  for (const SampleRecord& r : m.samples) {
    if (r.split == Split::Train) ++m.split_counts.train;
    if (r.split == Split::Val) ++m.split_counts.val;
    if (r.split == Split::Test) ++m.split_counts.test;
  }
  fill_histograms(m);
  m.root = dir;
  return m;
}

}  // namespace umod::synth
