// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "umod/error.hpp"
#include "umod/synthgen.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace umod;
using namespace umod::synth;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double face_mean(const Avatar& a) {
  const auto mask = a.face_mask();
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y < a.image.height; ++y)
    for (int x = 0; x < a.image.width; ++x)
      if (mask[static_cast<std::size_t>(y * a.image.width + x)]) {
        for (int c = 0; c < 3; ++c) sum += a.image.at(y, x, c);
        count += 3;
      }
  return sum / count;
}

}  // namespace

TEST_CASE("profile sampling is deterministic and valid") {
  ProfileSampler a(0), b(0);
  for (int i = 0; i < 50; ++i) {
    const DemographicProfile p = sample_profile(a);
    CHECK(is_valid(p));
    CHECK(p == sample_profile(b));
    CHECK(p.skin_tone_index / kTonesPerEthnicity == static_cast<int>(p.ethnicity));
  }
}

TEST_CASE("stratified draws stay within one of the uniform count") {
  ProfileSampler s(9);
  std::vector<int> age(kAgeClasses), eth(kEthnicityClasses), tone(kSkinTones);
  const int n = 70;
  for (int i = 0; i < n; ++i) {
    const auto p = s.next();
    ++age[static_cast<std::size_t>(p.age)];
    ++eth[static_cast<std::size_t>(p.ethnicity)];
    ++tone[static_cast<std::size_t>(p.skin_tone_index)];
  }
  for (int c : age) CHECK(std::abs(c - n / kAgeClasses) <= 1);
  for (int c : eth) CHECK(std::abs(c - n / kEthnicityClasses) <= 1);
  for (int c : tone) CHECK(std::abs(c - n / kSkinTones) <= 1);
}

TEST_CASE("gender counts pass a chi-square uniformity test") {
  ProfileSampler s(21);
  std::array<double, kGenderClasses> counts{};
  for (int i = 0; i < 1000; ++i) counts[static_cast<std::size_t>(s.next().gender)] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 500.0) * (c - 500.0) / 500.0;
  CHECK(chi2 < 6.635);  // 99% critical value, one degree of freedom
}

TEST_CASE("profile text follows the template and is injective") {
  DemographicProfile p;
  p.ethnicity = Ethnicity::EastAsian;
  p.skin_tone_index = 2;
  p.gender = Gender::Female;
  p.age = AgeClass::Thirties;
  const std::string t = render_text(p);
  CHECK(t.rfind("The person appears to be East Asian female, approximately 30-39 years old", 0) == 0);
  CHECK(render_text(p) == t);

  const auto all = enumerate_profiles();
  CHECK(all.size() == 8400);
  std::set<std::string> texts;
  for (const auto& q : all) texts.insert(render_text(q));
  CHECK(texts.size() == all.size());

  const auto vocab = template_vocabulary();
  const std::set<std::string> words(vocab.begin(), vocab.end());
  CHECK(words.contains("appears"));
  CHECK(words.contains(","));
  CHECK(words.contains("."));
}

TEST_CASE("avatar rendering") {
  const ImageSpec spec;
  DemographicProfile p;
  p.ethnicity = Ethnicity::Indian;
  p.skin_tone_index = 10;

  SUBCASE("deterministic in profile and jitter seed") {
    CHECK(render_avatar(p, spec, 5) == render_avatar(p, spec, 5));
    CHECK_FALSE(render_avatar(p, spec, 5) == render_avatar(p, spec, 6));
  }
  SUBCASE("skin tone only changes the face region") {
    DemographicProfile q = p;
    q.skin_tone_index = 11;
    const Avatar a = render_avatar_regions(p, spec, 3), b = render_avatar_regions(q, spec, 3);
    const auto mask = a.face_mask();
    CHECK(mask == b.face_mask());
    bool any_inside = false;
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        const bool inside = mask[static_cast<std::size_t>(y * spec.width + x)];
        for (int c = 0; c < 3; ++c) {
          const bool differs = a.image.at(y, x, c) != b.image.at(y, x, c);
          if (!inside) CHECK_FALSE(differs);
          any_inside = any_inside || differs;
        }
      }
    CHECK(any_inside);
  }
  SUBCASE("face brightness decreases strictly with the tone index") {
    double previous = 2.0;
    for (int tone = 0; tone < kSkinTones; ++tone) {
      DemographicProfile q = p;
      q.skin_tone_index = tone;
      q.ethnicity = static_cast<Ethnicity>(tone / kTonesPerEthnicity);
      const double m = face_mean(render_avatar_regions(q, spec, 1));
      CHECK(m < previous);
      previous = m;
    }
  }
  SUBCASE("palettes differ") {
    CHECK_FALSE(render_avatar(p, spec, 1, Palette::A) == render_avatar(p, spec, 1, Palette::B));
  }
  SUBCASE("geometry must tile into patches") {
    CHECK_THROWS_AS(render_avatar(p, ImageSpec{30, 32, 16}, 1), Error);
  }
}

TEST_CASE("dataset plans split 8:1:1 with balanced splits") {
  CHECK(split_counts_for(1000) == SplitCounts{800, 100, 100});
  CHECK(split_counts_for(145) == SplitCounts{117, 14, 14});

  GenConfig cfg;
  cfg.n = 1000;
  cfg.seed = 7;
  const auto m = plan_dataset(cfg);
  CHECK(m.split_counts == SplitCounts{800, 100, 100});
  CHECK(m.split(Split::Train).size() == 800);

  std::set<std::int64_t> ids;
  for (const auto& s : m.samples) {
    CHECK(ids.insert(s.sample_id).second);
    CHECK(s.text == render_text(s.profile));
  }
  std::array<int, kGenderClasses> gender{};
  for (const auto& s : m.samples) ++gender[static_cast<std::size_t>(s.profile.gender)];
  for (int c : gender) CHECK((c >= 499 && c <= 501));

  for (Split sp : {Split::Train, Split::Val, Split::Test}) {
    std::set<int> tones, ages, styles;
    for (const auto* s : m.split(sp)) {
      tones.insert(s->profile.skin_tone_index);
      ages.insert(static_cast<int>(s->profile.age));
      styles.insert(static_cast<int>(s->profile.hair_style));
    }
    CHECK(tones.size() == kSkinTones);
    CHECK(ages.size() == kAgeClasses);
    CHECK(styles.size() == kHairStyles);
  }
}

TEST_CASE("dataset size floor names the constraint") {
  GenConfig cfg;
  cfg.n = 5;
  try {
    plan_dataset(cfg);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("140") != std::string::npos);
  }
}

TEST_CASE("built datasets are byte-identical and reload") {
  GenConfig cfg;
  cfg.n = 150;
  cfg.seed = 3;
  const auto d1 = testing::scratch_dir("synth_a"), d2 = testing::scratch_dir("synth_b");
  const auto m = build_dataset(cfg, d1);
  build_dataset(cfg, d2);
  CHECK(slurp(d1 / "manifest.jsonl") == slurp(d2 / "manifest.jsonl"));
  CHECK(slurp(d1 / "meta.json") == slurp(d2 / "meta.json"));
  CHECK(slurp(d1 / "images/0.png") == slurp(d2 / "images/0.png"));
  CHECK(slurp(d1 / "manifest.jsonl") == manifest_jsonl(m));

  const auto loaded = load_dataset(d1);
  CHECK(loaded.samples.size() == 150);
  CHECK(loaded.split_counts == m.split_counts);
  CHECK(loaded.samples[17].profile == m.samples[17].profile);
  CHECK(read_png(d1 / loaded.samples[17].image_path) == render_sample(m.samples[17], cfg));

  // A tampered text no longer matches its profile.
  std::string text = slurp(d1 / "manifest.jsonl");
  const auto at = text.find("smiling");
  if (at != std::string::npos) {
    text.replace(at, 7, "frowning");
    std::ofstream(d1 / "manifest.jsonl", std::ios::binary | std::ios::trunc) << text;
    CHECK_THROWS_AS(load_dataset(d1), Error);
  }
  CHECK_THROWS_AS(load_dataset(d1 / "missing"), Error);
}

TEST_CASE("toy pair sets have no floor") {
  const auto m = plan_pairs(4, 1, ImageSpec{16, 16, 8});
  CHECK(m.samples.size() == 4);
  CHECK(m.split(Split::Train).size() == 4);
}
