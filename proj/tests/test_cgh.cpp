#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pohlab/cgh.hpp"
#include "pohlab/scenes.hpp"

using namespace pohlab;

namespace {

class Cgh : public ::testing::Test {
 protected:
  void SetUp() override { set_warning_handler([](const std::string&) {}); }
  void TearDown() override { set_warning_handler({}); }
};

GrayImage gray(int w, int h, std::uint16_t fill, int max_value = 255) {
  return {Plane<std::uint16_t>(w, h, fill), max_value};
}

}  // namespace

TEST(Scene, ImageIsCenteredAndNormalized) {
  auto img = gray(4, 2, 0);
  img.pixels.at(1, 1) = 255;
  const auto s = scene_from_image(img, 0.75, 0.05, SlmParams::desk(16));
  ASSERT_EQ(s.layers.size(), 1u);
  EXPECT_EQ(s.layers[0].amplitude.at(6 + 1, 7 + 1), 1.0);
  EXPECT_EQ(count_true(s.support()), 1u);
}

TEST(Scene, SixteenBitMaximumMapsToOne) {
  auto img = gray(8, 8, 0, 65535);
  img.pixels[10] = 65535;
  const auto s = scene_from_image(img, 1.0, 0.05, SlmParams::desk(8));
  EXPECT_EQ(s.layers[0].amplitude[10], 1.0);
}

TEST(Scene, BlackImageHasEmptySupport) {
  const auto s = scene_from_image(gray(8, 8, 0), 1.0, 0.05, SlmParams::desk(8));
  EXPECT_EQ(count_true(s.support()), 0u);
}

TEST(Scene, RejectsOutOfRangeInputs) {
  const auto slm = SlmParams::desk(8);
  EXPECT_THROW(scene_from_image(gray(8, 8, 0), 0.1, 0.05, slm), UsageError);
  EXPECT_THROW(scene_from_image(gray(8, 8, 0), 6.0, 0.05, slm), UsageError);
  EXPECT_THROW(scene_from_image(gray(9, 8, 0), 1.0, 0.05, slm), UsageError);
  EXPECT_THROW(scene_from_image(gray(8, 8, 0), 1.0, 1.5, slm), UsageError);
}

TEST(Scene, DepthMapBuckets) {
  auto img = gray(4, 1, 200);
  GrayImage depth{Plane<std::uint16_t>(4, 1, std::vector<std::uint16_t>{0, 63, 64, 255}), 255};
  const auto s =
      layered_scene_from_images(img, depth, {0.25, 5.0, 4}, 0.05, SlmParams::desk(8));
  // 0 and 63 share the first bucket; the third bucket is empty and dropped.
  ASSERT_EQ(s.layers.size(), 3u);
  const double step = (5.0 - 0.25) / 4;
  EXPECT_NEAR(s.layers[0].depth, 0.25 + 0.5 * step, 1e-12);
  EXPECT_NEAR(s.layers[1].depth, 0.25 + 1.5 * step, 1e-12);
  EXPECT_NEAR(s.layers[2].depth, 0.25 + 3.5 * step, 1e-12);
  EXPECT_EQ(count_true(s.support()), 4u);
}

TEST(Scene, DominantLayerAndFocusAmplitude) {
  TargetScene s;
  s.layers.push_back({Plane<double>(8, 8, 0.1), 1.0});
  s.layers.push_back({Plane<double>(8, 8, 0.5), 2.0});
  s.layers.push_back({Plane<double>(8, 8, 0.2), 2.0});
  EXPECT_EQ(s.dominant_layer(), 1u);
  EXPECT_EQ(s.focus_depth(), 2.0);
  EXPECT_NEAR(s.focus_amplitude()[0], 0.7, 1e-15);
}

TEST(Scene, BuiltinsCoverTheirRoles) {
  const auto slm = SlmParams::desk(512);
  for (const auto& name : builtin_scene_names()) {
    const auto s = builtin_scene(name, slm, 1.0);
    EXPECT_GT(count_true(s.support()), 0u) << name;
  }
  const auto full = builtin_scene("full-frame", slm, 1.0);
  EXPECT_EQ(count_true(full.support()), std::size_t(512 - 64) * (512 - 64));
  EXPECT_THROW(builtin_scene("nope", slm, 1.0), UsageError);
  EXPECT_NO_THROW(resolve_scene("builtin:square", slm, 1.0));
}

TEST(RandomPhase, DeterministicAndInRange) {
  const auto a = random_phase_map(4096, 42);
  EXPECT_EQ(a, random_phase_map(4096, 42));
  EXPECT_NE(a, random_phase_map(4096, 43));
  double mean = 0;
  for (double p : a) {
    EXPECT_GE(p, 0.0);
    EXPECT_LT(p, 2 * M_PI);
    mean += p / a.size();
  }
  EXPECT_NEAR(mean, M_PI, 0.1);
}

TEST_F(Cgh, EmptySceneGivesZeroField) {
  const auto slm = SlmParams::desk(32);
  TargetScene s;
  s.layers.push_back({Plane<double>(32, 32), 0.5});
  EXPECT_EQ(generate_complex_hologram(s, slm, 1).energy(), 0.0);
}

TEST_F(Cgh, PointBackPropagatesToItsPixel) {
  const auto slm = SlmParams::desk(64);
  TargetScene s;
  s.layers.push_back({Plane<double>(64, 64), 0.5});
  s.layers[0].amplitude.at(20, 37) = 1.0;
  const auto field = generate_complex_hologram(s, slm, 3);
  const auto I = intensity(propagate(field, 0.5));
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < I.size(); ++i)
    if (I[i] > I[argmax]) argmax = i;
  EXPECT_EQ(argmax, 37u * 64u + 20u);
}

TEST_F(Cgh, IdenticalLayersDoubleTheField) {
  const auto slm = SlmParams::desk(96);
  TargetScene one;
  one.layers.push_back({square_amplitude(96, 96, 8), 0.5});
  TargetScene two = one;
  two.layers.push_back(one.layers[0]);
  const auto a = generate_complex_hologram(one, slm, 9);
  const auto b = generate_complex_hologram(two, slm, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(b[i] - 2.0 * a[i]), 0.0, 1e-12);
}

TEST_F(Cgh, ReconstructionCorrelatesWithTarget) {
  const auto slm = SlmParams::desk(128);
  const auto s = builtin_scene("sparse-cards", slm, 0.75);
  const auto I = intensity(propagate(generate_complex_hologram(s, slm, 5), 0.75));
  const auto& A = s.layers[0].amplitude;
  const auto support = s.support();
  double ii = 0, tt = 0, it = 0;
  for (std::size_t i = 0; i < I.size(); ++i) {
    if (!support[i]) continue;
    const double t = A[i] * A[i];
    ii += I[i] * I[i];
    tt += t * t;
    it += I[i] * t;
  }
  EXPECT_GE(it / std::sqrt(ii * tt), 0.99);
}
