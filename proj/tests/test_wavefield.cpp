#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pohlab/wavefield.hpp"

using namespace pohlab;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexField random_field(const SlmParams& sp, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexField f(sp);
  for (auto& v : f.data()) v = Complex(g(rng), g(rng));
  return f;
}

// Direct O(N^4) evaluation of the band-limited Fresnel transfer.
ComplexField naive_propagate(const ComplexField& in, double z, double cutoff = 0.0) {
  const auto& sp = in.params();
  const int w = sp.width, h = sp.height;
  const double dx = sp.pixel_pitch, lambda = sp.wavelength;
  auto freq = [&](int i, int n) {
    const int k = i < (n + 1) / 2 ? i : i - n;
    return k / (n * dx);
  };
  std::vector<Complex> spectrum(in.size());
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      Complex acc;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          acc += in.at(x, y) * std::polar(1.0, -2 * kPi * (double(u) * x / w + double(v) * y / h));
        }
      }
      const double fx = freq(u, w), fy = freq(v, h);
      const bool pass = cutoff <= 0.0 || fx * fx + fy * fy <= cutoff * cutoff;
      const double phase = 2 * kPi / lambda * z - kPi * lambda * z * (fx * fx + fy * fy);
      spectrum[v * w + u] = pass ? acc * std::polar(1.0, phase) : Complex{};
    }
  }
  ComplexField out(sp);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Complex acc;
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          acc += spectrum[v * w + u] *
                 std::polar(1.0, 2 * kPi * (double(u) * x / w + double(v) * y / h));
        }
      }
      out.at(x, y) = acc / double(w * h);
    }
  }
  return out;
}

class QuietWarnings : public ::testing::Test {
 protected:
  void SetUp() override {
    set_warning_handler([this](const std::string& m) { warnings.push_back(m); });
  }
  void TearDown() override { set_warning_handler({}); }
  std::vector<std::string> warnings;
};

using Propagate = QuietWarnings;

}  // namespace

TEST(SlmParams, ValidateRejectsBadGrids) {
  SlmParams sp;
  sp.width = 4;
  EXPECT_THROW(sp.validate(), UsageError);
  sp = SlmParams{};
  sp.pixel_pitch = 0;
  EXPECT_THROW(sp.validate(), UsageError);
  sp = SlmParams{};
  sp.phase_bits = 10;
  EXPECT_THROW(sp.validate(), UsageError);
  EXPECT_NO_THROW(SlmParams::full_hd().validate());
}

TEST_F(Propagate, ZeroDistanceIsIdentity) {
  const auto f = random_field(SlmParams::desk(32), 1);
  const auto g = propagate(f, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i], g[i]);
}

TEST_F(Propagate, MatchesDirectTransferEvaluation) {
  SlmParams sp = SlmParams::desk(8);
  sp.height = 10;
  const auto f = random_field(sp, 7);
  for (double z : {0.0003, -0.0002, 0.25}) {
    const auto fast = propagate(f, z);
    const auto slow = naive_propagate(f, z);
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_NEAR(std::abs(fast[i] - slow[i]), 0.0, 1e-9 * f.max_abs()) << "z=" << z;
    }
  }
}

TEST_F(Propagate, ApertureMatchesDirectEvaluation) {
  const SlmParams sp = SlmParams::desk(8);
  const auto f = random_field(sp, 8);
  const double cutoff = 0.3 / (2 * sp.pixel_pitch);
  const auto fast = propagate(f, 0.001, {cutoff, 1});
  const auto slow = naive_propagate(f, 0.001, cutoff);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(std::abs(fast[i] - slow[i]), 0.0, 1e-9 * f.max_abs());
  }
}

TEST_F(Propagate, EnergyConservedOnRandomFields) {
  for (std::uint32_t s = 0; s < 10; ++s) {
    const auto f = random_field(SlmParams::desk(64), s);
    for (double z : {0.01, 0.25, -3.0, 10.0}) {
      const double e0 = f.energy();
      EXPECT_LE(std::abs(propagate(f, z).energy() - e0), 1e-6 * e0);
    }
  }
}

TEST_F(Propagate, InverseDistanceUndoesPropagation) {
  const auto f = random_field(SlmParams::desk(64), 3);
  const auto back = propagate(propagate(f, 0.75), -0.75);
  double err = 0;
  for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(back[i] - f[i]));
  EXPECT_LE(err, 1e-6 * f.max_abs());
}

TEST_F(Propagate, IsLinear) {
  const auto a = random_field(SlmParams::desk(32), 4);
  const auto b = random_field(SlmParams::desk(32), 5);
  ComplexField sum(a.params());
  const Complex c(0.3, -1.7);
  for (std::size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + c * b[i];
  const auto pa = propagate(a, 0.5), pb = propagate(b, 0.5), ps = propagate(sum, 0.5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(std::abs(ps[i] - (pa[i] + c * pb[i])), 0.0, 1e-10);
  }
}

TEST_F(Propagate, PlaneWaveKeepsUnitAmplitude) {
  ComplexField f(SlmParams::desk(128));
  for (auto& v : f.data()) v = 1.0;
  const auto g = propagate(f, 0.25);
  EXPECT_NEAR(std::abs(g.at(64, 64)), 1.0, 0.01);
}

TEST_F(Propagate, PaddingKeepsGridAndWarnsBeyondAliasFreeDistance) {
  const SlmParams sp = SlmParams::desk(32);
  const auto f = random_field(sp, 9);
  const auto g = propagate(f, 0.001, {0.0, 2});
  EXPECT_EQ(g.width(), 32);
  EXPECT_TRUE(g.all_finite());
  EXPECT_TRUE(warnings.empty());
  propagate(f, 1.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("alias"), std::string::npos);
}

TEST_F(Propagate, RejectsBadArguments) {
  const auto f = random_field(SlmParams::desk(16), 1);
  EXPECT_THROW(propagate(f, 11.0), UsageError);
  EXPECT_THROW(propagate(f, std::nan("")), UsageError);
  EXPECT_THROW(propagate(f, 0.1, {0.0, 0}), UsageError);
  EXPECT_THROW(propagate(f, 0.1, {-1.0, 1}), UsageError);
  ComplexField bad = f;
  bad[3] = Complex(INFINITY, 0);
  EXPECT_THROW(propagate(bad, 0.1), UsageError);
}

TEST(PhaseConversion, KnownCodes) {
  PhaseHologram poh(SlmParams::desk(8));
  poh[0] = 128;
  poh[1] = 64;
  const auto f = phase_to_field(poh);
  EXPECT_NEAR(std::abs(f[0] - Complex(-1, 0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(f[1] - Complex(0, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(f[2] - Complex(1, 0)), 0.0, 1e-12);

  ComplexField g(SlmParams::desk(8));
  for (auto& v : g.data()) v = std::polar(1.0, kPi);
  g[5] = Complex(1, 1);
  const auto q = field_to_phase(g);
  EXPECT_EQ(q[0], 128);
  EXPECT_EQ(q[5], 32);
}

TEST(PhaseConversion, RoundTripsEveryCode) {
  PhaseHologram poh(SlmParams::desk(16));
  for (std::size_t i = 0; i < poh.size(); ++i) poh[i] = static_cast<std::uint8_t>(i * 37 + 11);
  EXPECT_EQ(field_to_phase(phase_to_field(poh)), poh);
}

TEST(Intensity, SquaredMagnitude) {
  ComplexField f(SlmParams::desk(8));
  f[0] = Complex(3, 4);
  f[1] = 1.0;
  const auto I = intensity(f);
  EXPECT_DOUBLE_EQ(I[0], 25.0);
  EXPECT_DOUBLE_EQ(I[1], 1.0);
  double total = 0;
  for (double v : I.values()) total += v;
  EXPECT_DOUBLE_EQ(total, f.energy());
}

TEST(Cfld, RoundTripAndCorruption) {
  const auto f = random_field(SlmParams::desk(16), 2);
  auto bytes = encode_cfld(f);
  EXPECT_EQ(bytes.size(), 16 + 16 * f.size());
  const auto g = decode_cfld(bytes);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i], g[i]);
  bytes.pop_back();
  EXPECT_THROW(decode_cfld(bytes), CodecError);
  bytes = encode_cfld(f);
  bytes[0] = 'X';
  EXPECT_THROW(decode_cfld(bytes), Error);
}
