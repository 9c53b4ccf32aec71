#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <thread>

#include "pohlab/rate_control.hpp"

using namespace pohlab;

namespace {

PhaseHologram ramp_poh(int n) {
  PhaseHologram p(SlmParams::desk(n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) p[y * n + x] = static_cast<std::uint8_t>(x * x + 3 * y);
  return p;
}

RoiMask centre_roi(int n, int half) {
  RoiMask r(n, n);
  for (int y = n / 2 - half; y < n / 2 + half; ++y)
    for (int x = n / 2 - half; x < n / 2 + half; ++x) r.set(x, y, true);
  return r;
}

class Session : public ::testing::Test {
 protected:
  void SetUp() override { set_warning_handler([](const std::string&) {}); }
  void TearDown() override { set_warning_handler({}); }
};

}  // namespace

TEST(SelectCodingParams, FormulaExamples) {
  SessionConfig cfg;
  // fps * eyes * rho * pixels = 60 * 2 * 0.35 * 2073600
  EXPECT_EQ(select_coding_params(200, 0.35, cfg).bits,
            static_cast<int>(std::floor(200e6 / 87091200.0)));
  EXPECT_EQ(select_coding_params(200, 0.35, cfg).bits, 2);
  cfg.eyes = 1;
  EXPECT_EQ(select_coding_params(200, 0.35, cfg).bits, 4);
  cfg.eyes = 2;
  EXPECT_EQ(select_coding_params(1e6, 0.35, cfg).bits, 4);
  cfg.slm_effective_bits = 8;
  EXPECT_EQ(select_coding_params(1e6, 0.35, cfg).bits, 8);
}

TEST(SelectCodingParams, OverheadLowersTheFloorWhenItWouldOverflow) {
  SessionConfig cfg;
  cfg.slm_effective_bits = 8;
  // Quotient 3.01 -> 3 bits would need 3 * 1.02 = 3.06 units.
  const double unit = 60 * 2 * 0.5 * 2073600 / 1e6;
  const auto d = select_coding_params(3.01 * unit, 0.5, cfg);
  EXPECT_EQ(d.bits, 2);
  EXPECT_FALSE(d.rate_infeasible);
  EXPECT_LE(d.predicted_mbps, 3.01 * unit);
}

TEST(SelectCodingParams, FeasibilityProperty) {
  SessionConfig cfg;
  for (double rate = 1; rate < 3000; rate *= 1.07) {
    for (double rho : {0.05, 0.2, 0.35, 0.7, 1.0}) {
      const auto d = select_coding_params(rate, rho, cfg);
      EXPECT_GE(d.bits, 1);
      EXPECT_LE(d.bits, cfg.slm_effective_bits);
      EXPECT_EQ(d.layers_sent, d.bits);
      EXPECT_TRUE(d.predicted_mbps <= rate || d.rate_infeasible);
      EXPECT_EQ(d.rate_infeasible, d.predicted_mbps > rate);
    }
  }
}

TEST(SelectCodingParams, RejectsBadInputs) {
  SessionConfig cfg;
  EXPECT_THROW(select_coding_params(0, 0.3, cfg), UsageError);
  EXPECT_THROW(select_coding_params(100, 0, cfg), UsageError);
  EXPECT_THROW(select_coding_params(100, 1.5, cfg), UsageError);
  cfg.fps = 0;
  EXPECT_THROW(select_coding_params(100, 0.3, cfg), UsageError);
}

TEST(InfeasibleHelpers, DropFrameRateAndShrinkRoi) {
  SessionConfig cfg;
  // One bit per coded pixel at 60 fps needs 87.1 * 1.02 Mbit/s at rho = 0.35.
  const auto d = drop_frame_rate(60, 0.35, cfg);
  ASSERT_TRUE(d.has_value());
  EXPECT_DOUBLE_EQ(d->fps, 30.0);
  EXPECT_FALSE(d->rate_infeasible);
  EXPECT_FALSE(drop_frame_rate(1e-3, 1.0, cfg, 2).has_value());
  const double rho = max_feasible_roi_fraction(60, cfg);
  EXPECT_NEAR(predicted_rate_mbps(1, rho, cfg), 60, 1e-9);
  EXPECT_EQ(max_feasible_roi_fraction(1e6, cfg), 1.0);
}

TEST(CompressionSummary, Ratios) {
  SessionConfig cfg;
  CodingDecision d;
  d.bits = 3;
  d.roi_fraction = 0.30;
  const auto s = compression_summary(d, cfg);
  EXPECT_NEAR(s.ratio, 8.0 / 0.9, 1e-12);
  EXPECT_NEAR(s.uncompressed_mbps, 8.0 * 60 * 2 * 2073600 / 1e6, 1e-9);
  d.bits = 8;
  d.roi_fraction = 1.0;
  EXPECT_DOUBLE_EQ(compression_summary(d, cfg).ratio, 1.0);
}

TEST(Channel, BoundsDeterminismAndHold) {
  ChannelModel m;
  m.step_mbps = 50;
  const auto a = simulate_channel(m, 30);
  EXPECT_EQ(a.size(), 300u);
  for (const auto& s : a) {
    EXPECT_GE(s.mbps, 60.0);
    EXPECT_LE(s.mbps, 200.0);
  }
  const auto b = simulate_channel(m, 30);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].mbps, b[i].mbps);
  m.seed = 2;
  EXPECT_NE(simulate_channel(m, 30)[5].mbps, a[5].mbps);
  EXPECT_EQ(rate_at(a, 0.25), a[2].mbps);
  EXPECT_EQ(rate_at(a, 100), a.back().mbps);
  EXPECT_EQ(rate_at(a, -1), a.front().mbps);
}

TEST(Channel, ZeroStepIsConstant) {
  ChannelModel m;
  m.step_mbps = 0;
  for (const auto& s : simulate_channel(m, 5)) EXPECT_EQ(s.mbps, 130.0);
}

TEST(Users, AllocationCapacity) {
  EXPECT_TRUE(allocate_users(0).empty());
  const auto slots = allocate_users(40);
  std::set<std::pair<int, int>> seen;
  for (const auto& s : slots) {
    EXPECT_GE(s.channel, 0);
    EXPECT_LT(s.channel, 5);
    EXPECT_GE(s.stream, 0);
    EXPECT_LT(s.stream, 8);
    seen.emplace(s.channel, s.stream);
  }
  EXPECT_EQ(seen.size(), 40u);
  EXPECT_THROW(allocate_users(41), CapacityError);
  EXPECT_THROW(allocate_users(-1), UsageError);
}

TEST(Users, RegistryIsThreadSafe) {
  UserRegistry reg;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&reg, t] {
      for (int i = 0; i < 10; ++i) reg.join("u" + std::to_string(t * 10 + i));
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(reg.size(), 40u);
  EXPECT_THROW(reg.join("late"), CapacityError);
  const auto slot = *reg.slot_of("u7");
  reg.leave("u7");
  EXPECT_FALSE(reg.slot_of("u7").has_value());
  EXPECT_EQ(reg.join("late"), slot);
  EXPECT_EQ(reg.join("late"), slot);
}

TEST_F(Session, ConstantChannelGivesConstantDecisions) {
  const auto poh = ramp_poh(64);
  const auto roi = centre_roi(64, 16);
  SessionConfig cfg;
  ChannelModel ch;
  ch.initial_mbps = 200;
  ch.step_mbps = 0;
  SessionOptions opt;
  opt.duration = 1;
  const auto frames = run_session(poh, roi, 0.5, cfg, ch, opt);
  ASSERT_EQ(frames.size(), 60u);
  for (const auto& f : frames) {
    EXPECT_EQ(f.decision.bits, frames[0].decision.bits);
    EXPECT_EQ(f.psnr_db, frames[0].psnr_db);
  }
}

TEST_F(Session, DecisionsStayFeasibleAndMonotoneInRate) {
  const auto poh = ramp_poh(64);
  const auto roi = centre_roi(64, 20);
  SessionConfig cfg;
  ChannelModel ch;
  ch.step_mbps = 25;
  ch.seed = 3;
  SessionOptions opt;
  opt.duration = 5;
  const auto frames = run_session(poh, roi, 0.5, cfg, ch, opt);
  for (const auto& f : frames) {
    EXPECT_GE(f.decision.bits, 1);
    EXPECT_LE(f.decision.bits, 4);
    EXPECT_LE(f.decision.predicted_mbps, f.rate_mbps);
    for (const auto& g : frames) {
      if (g.decision.roi_fraction == f.decision.roi_fraction && g.rate_mbps > f.rate_mbps) {
        EXPECT_GE(g.decision.bits, f.decision.bits);
      }
    }
  }
}

TEST_F(Session, ShrinkPolicyKeepsRoiInsideBudget) {
  const auto poh = ramp_poh(64);
  const auto roi = RoiMask::full(64, 64);
  SessionConfig cfg;
  ChannelModel ch;
  ch.min_mbps = 60;
  ch.max_mbps = 80;
  ch.initial_mbps = 70;
  ch.step_mbps = 0;
  SessionOptions opt;
  opt.duration = 0.5;
  opt.policy = InfeasiblePolicy::kShrinkRoi;
  const auto frames = run_session(poh, roi, 0.5, cfg, ch, opt);
  for (const auto& f : frames) {
    EXPECT_FALSE(f.decision.rate_infeasible);
    EXPECT_LT(f.decision.roi_fraction, 1.0);
    EXPECT_LE(f.decision.predicted_mbps, 70.0);
  }
}

TEST(SessionCsv, Columns) {
  SessionFrame f;
  f.decision.bits = 3;
  const auto csv = session_csv({f});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "frame_index,t_seconds,rate_mbps,roi_fraction,bits,bpp_total,psnr_db,predicted_mbps,fps");
}
