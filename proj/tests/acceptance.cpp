// Acceptance checks. One line per criterion: "criterion N: PASS|FAIL  title  (details)".
// Usage: pohlab_acceptance [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pohlab/baselines.hpp"
#include "pohlab/eval.hpp"
#include "pohlab/pohcodec.hpp"
#include "pohlab/rate_control.hpp"
#include "pohlab/scenes.hpp"
#include "pohlab/subhologram.hpp"

using namespace pohlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 -------------------------------------------------------------------------

Outcome pcm_threshold() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto slm = SlmParams::desk(512);
  Outcome out{true, ""};
  double worst = kPsnrCap;
  for (double z : {0.25, 0.75, 2.0, 5.0}) {
    const auto scene = builtin_scene("sparse-cards", slm, z);
    const auto poh = make_cell_poh(scene, slm, 1);
    const auto coded = decode(encode_levels(poh, RoiMask::full(512, 512), 8));
    const double psnr = reconstruction_psnr(poh, coded, z);
    worst = std::min(worst, psnr);
    out.pass = out.pass && psnr > 25.0;
    out.detail += fmt("z=%.2f:", z) + fmt("%.2fdB ", psnr);
  }
  const double took = seconds_since(t0);
  out.pass = out.pass && took < 120.0;
  out.detail += fmt("worst=%.2fdB ", worst) + fmt("runtime=%.1fs", took);
  return out;
}

// --- 2 -------------------------------------------------------------------------

Outcome level_example() {
  const auto levels = quantizer_levels(5);
  const std::vector<std::uint8_t> want = {0, 64, 128, 191, 255};
  const double rate = nominal_level_rate(5);
  const bool rate_ok = fmt("%.3f", rate) == "2.322";
  std::string got;
  for (auto v : levels) got += std::to_string(v) + " ";
  // Every sample must land on one of the levels.
  bool onto = true;
  PhaseHologram ramp(SlmParams::desk(16));
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<std::uint8_t>(i);
  const auto quantized = quantize_levels(ramp, 5);
  for (auto v : quantized.samples()) {
    onto = onto && std::find(want.begin(), want.end(), v) != want.end();
  }
  return {levels == want && rate_ok && onto,
          "levels={" + got + "} rate=" + fmt("%.6f", rate) + " bpp"};
}

// --- 3 -------------------------------------------------------------------------

Outcome progressive_bound() {
  bool bound_ok = true;
  bool worst_monotone = true;
  int per_sample_increases = 0;
  double prev_worst = 2.0 * kPi;
  std::string worst_list;
  for (int b = 1; b <= 8; ++b) {
    const double bound = b == 8 ? 0.0 : kPi / std::ldexp(1.0, b);
    double worst = 0.0;
    for (int s = 0; s < 256; ++s) {
      const auto q = quantize_bitplanes(static_cast<std::uint8_t>(s), b);
      const double err = 2.0 * kPi * std::abs(s - q) / 256.0;
      bound_ok = bound_ok && err <= bound + 1e-12;
      worst = std::max(worst, err);
      if (b > 1) {
        const auto prev = quantize_bitplanes(static_cast<std::uint8_t>(s), b - 1);
        if (std::abs(s - q) > std::abs(s - prev)) ++per_sample_increases;
      }
    }
    worst_monotone = worst_monotone && worst <= prev_worst;
    prev_worst = worst;
    worst_list += fmt("%.4f ", worst);
  }
  // Progressive decoding of a stream must agree with the quantizer layer by layer.
  PhaseHologram all(SlmParams::desk(16));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint8_t>(i);
  const auto stream = encode(all, RoiMask::full(16, 16), 8);
  bool stream_ok = true;
  for (int k = 1; k <= 8; ++k) {
    const auto d = decode(stream.truncated(k));
    for (std::size_t i = 0; i < d.size(); ++i) stream_ok = stream_ok && d[i] == quantize_bitplanes(all[i], k);
  }
  // A bound-respecting reconstruction cannot be monotone for every sample
  // (sample 63: |63-64| at one layer, >= 31 at two), so monotonicity is
  // checked on the worst-case error; the per-sample count is informational.
  return {bound_ok && worst_monotone && stream_ok,
          "max_err_rad[b=1..8]=" + worst_list + "per_sample_increases=" +
              std::to_string(per_sample_increases)};
}

// --- 4 -------------------------------------------------------------------------

Outcome rate_arithmetic() {
  SessionConfig cfg;
  CodingDecision d;
  d.bits = 3;
  d.roi_fraction = 0.30;
  d.predicted_mbps = predicted_rate_mbps(3, 0.30, cfg);
  const auto s = compression_summary(d, cfg);
  const bool ratio_ok = s.ratio >= 8.8 && s.ratio <= 9.0;
  const double at35 = predicted_rate_mbps(3, 0.35, cfg);
  const bool rate_ok = at35 <= 220.0;
  return {ratio_ok && rate_ok,
          fmt("ratio(rho=0.30,b=3)=%.3f ", s.ratio) + fmt("uncompressed=%.1f Mbit/s ", s.uncompressed_mbps) +
              fmt("rate(rho=0.35,b=3)=%.1f Mbit/s (limit 220)", at35)};
}

// --- 5, 6 ----------------------------------------------------------------------

struct Coded {
  double bpp = 0.0;
  PhaseHologram poh;
};

Coded dct_roundtrip(const PhaseHologram& poh, const DctCodecConfig& cfg) {
  const auto stream = dct_encode(poh_samples(poh), cfg);
  return {8.0 * static_cast<double>(stream.size()) / static_cast<double>(poh.size()),
          samples_to_poh(dct_decode(stream), poh.params())};
}

// Flat step whose rate is closest to `target`; bpp falls as the step grows.
Coded flat_at_rate(const PhaseHologram& poh, double target) {
  double lo = 0.05, hi = 4096.0;
  Coded best = dct_roundtrip(poh, DctCodecConfig::flat(lo));
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo * hi);
    auto c = dct_roundtrip(poh, DctCodecConfig::flat(mid));
    if (std::abs(c.bpp - target) < std::abs(best.bpp - target)) best = c;
    if (c.bpp > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (std::abs(best.bpp - target) < 0.005) break;
  }
  return best;
}

PhaseHologram seeded_poh(std::uint64_t seed, double depth, int size = 256) {
  const auto slm = SlmParams::desk(size);
  return make_cell_poh(builtin_scene("sparse-cards", slm, depth), slm, seed);
}

Outcome flat_beats_default() {
  const auto t0 = std::chrono::steady_clock::now();
  const double depth = 0.75;
  Outcome out{true, ""};
  int cases = 0;
  double min_margin = 1e9;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto poh = seeded_poh(seed, depth);
    for (int quality : {20, 40, 60, 80}) {
      const auto def = dct_roundtrip(poh, DctCodecConfig::standard(quality));
      const auto flat = flat_at_rate(poh, def.bpp);
      const double pd = reconstruction_psnr(poh, def.poh, depth);
      const double pf = reconstruction_psnr(poh, flat.poh, depth);
      const bool matched = std::abs(flat.bpp - def.bpp) <= 0.05;
      out.pass = out.pass && matched && pf >= pd;
      min_margin = std::min(min_margin, pf - pd);
      ++cases;
      if (!matched || pf < pd) {
        out.detail += "seed=" + std::to_string(seed) + " q=" + std::to_string(quality) +
                      fmt(" default %.3fbpp/", def.bpp) + fmt("%.2fdB", pd) +
                      fmt(" flat %.3fbpp/", flat.bpp) + fmt("%.2fdB; ", pf);
      }
    }
  }
  const double took = seconds_since(t0);
  out.pass = out.pass && took < 300.0;
  out.detail += std::to_string(cases) + " rungs, min(flat-default)=" + fmt("%.2fdB", min_margin) +
                fmt(" runtime=%.1fs", took);
  return out;
}

Outcome unwrap_does_not_help() {
  Outcome out{true, ""};
  double min_gap = 1e9;
  int cases = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const double depth = seed == 1 ? 0.5 : seed == 2 ? 1.0 : 2.0;
    const auto poh = seeded_poh(seed, depth);
    for (double step : {12.0, 48.0}) {
      UnwrapPipelineConfig ucfg;
      ucfg.unwrap = UnwrapMode::kBlock;
      ucfg.block = 8;
      ucfg.container_bits = 10;
      ucfg.codec = DctCodecConfig::flat(step, 10);
      const auto unwrapped = unwrap_pipeline_roundtrip(poh, ucfg);
      const auto direct = flat_at_rate(poh, unwrapped.bpp);
      const double pu = reconstruction_psnr(poh, unwrapped.poh, depth);
      const double pd = reconstruction_psnr(poh, direct.poh, depth);
      const bool matched = std::abs(direct.bpp - unwrapped.bpp) <= 0.05;
      out.pass = out.pass && matched && pu < pd;
      min_gap = std::min(min_gap, pd - pu);
      ++cases;
      out.detail += "seed=" + std::to_string(seed) + fmt(" unwrap %.2fbpp/", unwrapped.bpp) +
                    fmt("%.2fdB", pu) + fmt(" direct %.2fbpp/", direct.bpp) + fmt("%.2fdB; ", pd);
    }
  }
  out.detail += std::to_string(cases) + " cases, min(direct-unwrap)=" + fmt("%.2fdB", min_gap);
  return out;
}

// --- 7 -------------------------------------------------------------------------

Outcome bit_depth_rule() {
  const int a = bits_for_span(8 * kPi);
  const int b = bits_for_span(512 * kPi);
  const int c = bits_for_span(1024 * kPi);
  return {a == 10 && b == 16 && c == 17, "bits(8pi)=" + std::to_string(a) + " bits(512pi)=" +
                                             std::to_string(b) + " bits(1024pi)=" + std::to_string(c)};
}

// --- 8 -------------------------------------------------------------------------

Outcome roi_near_lossless() {
  const auto slm = SlmParams::desk(512);
  const double z = 0.25;
  const SubhologramParams sub{1.25e-3, 0.02, false};
  const double cutoff = eyebox_cutoff(sub, z, slm);

  const auto scene = builtin_scene("info-cards", slm, z);
  const auto amp = scene.focus_amplitude();
  IntensityImage target(amp.width(), amp.height());
  for (std::size_t i = 0; i < amp.size(); ++i) target[i] = amp[i] * amp[i];
  const auto region = default_signal_mask(scene);

  const auto cgh = generate_complex_hologram(scene, slm, 1, CghOptions{cutoff});
  FidocConfig fcfg;
  fcfg.aperture_cutoff = cutoff;
  const auto poh = fidoc(cgh, scene, fcfg).poh;
  const auto roi = roi_from_scene(scene, slm, sub);
  const PropagationOptions view{cutoff, 1};

  const auto full = decode(encode(poh, RoiMask::full(512, 512), 8));
  const auto skip = decode(encode(poh, roi, 8));
  const double pf = content_psnr(reconstruct(full, z, view), target, region);
  const double ps = content_psnr(reconstruct(skip, z, view), target, region);
  const double rho = roi.coded_fraction();
  const bool rho_ok = std::abs(rho - 0.35) <= 0.02;
  return {rho_ok && pf - ps <= 1.0,
          fmt("rho=%.3f ", rho) + fmt("full=%.2fdB ", pf) + fmt("roi=%.2fdB ", ps) +
              fmt("loss=%.3fdB (limit 1)", pf - ps)};
}

// --- 9 -------------------------------------------------------------------------

PhaseHologram golden_poh() {
  SlmParams sp = SlmParams::desk(24);
  sp.height = 16;
  PhaseHologram p(sp);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x)
      p[y * 24 + x] = static_cast<std::uint8_t>((x * 11 + y * 29 + ((x * y) ^ (x + 3 * y))) & 0xFF);
  return p;
}

RoiMask golden_roi() {
  RoiMask r(24, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x) r.set(x, y, (x - 12) * (x - 12) + (y - 8) * (y - 8) <= 40);
  return r;
}

bool matches_file(const std::string& name, const std::vector<std::uint8_t>& bytes) {
  std::ifstream in(std::string(POHLAB_GOLDEN_DIR) + "/" + name, std::ios::binary);
  if (!in) return false;
  const std::vector<std::uint8_t> expected((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
  return bytes == expected;
}

Outcome codec_roundtrip() {
  std::mt19937 rng(2024);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    SlmParams sp = SlmParams::desk(8);
    sp.width = 8 + static_cast<int>(rng() % 96);
    sp.height = 8 + static_cast<int>(rng() % 96);
    PhaseHologram p(sp);
    for (auto& v : p.samples()) v = static_cast<std::uint8_t>(rng());
    const auto bytes = encode(p, RoiMask::full(sp.width, sp.height), 8).serialize();
    if (decode(bytes, 8) == p) ++exact;
  }
  const auto p = golden_poh();
  int golden = 0;
  golden += matches_file("full_b8.poh", encode(p, RoiMask::full(24, 16), 8).serialize());
  golden += matches_file("disk_b3_seeded.poh", encode(p, golden_roi(), 3, FillSpec::seeded(7)).serialize());
  golden += matches_file("disk_b5_const.poh",
                         encode(p, golden_roi(), 5, FillSpec::constant(128)).serialize());
  golden += matches_file("disk_l5.poh", encode_levels(p, golden_roi(), 5).serialize());
  golden += matches_file("full_l12_wrap.poh",
                         encode_levels(p, RoiMask::full(24, 16), 12, {}, true).serialize());
  return {exact == 100 && golden == 5,
          std::to_string(exact) + "/100 exact round trips, " + std::to_string(golden) +
              "/5 golden streams byte-identical"};
}

// --- 10 ------------------------------------------------------------------------

Outcome wavefield_properties() {
  set_warning_handler([](const std::string&) {});
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> depth(0.01, 5.0);
  double worst_energy = 0.0;
  double worst_inverse = 0.0;
  for (int t = 0; t < 50; ++t) {
    SlmParams sp = SlmParams::desk(64);
    sp.width = 32 + 16 * static_cast<int>(rng() % 5);
    sp.height = 32 + 16 * static_cast<int>(rng() % 5);
    ComplexField f(sp);
    for (auto& c : f.data()) c = {g(rng), g(rng)};
    const double z = depth(rng) * (t % 2 ? 1.0 : -1.0);
    const auto fwd = propagate(f, z);
    const auto back = propagate(fwd, -z);
    worst_energy = std::max(worst_energy, std::abs(fwd.energy() - f.energy()) / f.energy());
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(back[i] - f[i]));
    worst_inverse = std::max(worst_inverse, err / f.max_abs());
  }
  set_warning_handler({});

  int monotone = 0;
  const auto slm = SlmParams::desk(128);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double z = 0.25 + 0.45 * static_cast<double>(seed);
    const auto scene = builtin_scene("sparse-cards", slm, z);
    FidocConfig cfg;
    cfg.feedback = 0.0;
    const auto trace = fidoc(generate_complex_hologram(scene, slm, seed), scene, cfg).trace;
    bool ok = true;
    for (std::size_t k = 1; k < trace.rmse.size(); ++k) {
      ok = ok && trace.rmse[k] <= trace.rmse[k - 1] * (1.0 + 1e-12);
    }
    monotone += ok;
  }
  return {worst_energy <= 1e-6 && worst_inverse <= 1e-6 && monotone == 10,
          fmt("max energy rel err=%.2e ", worst_energy) + fmt("max inverse err/max|U|=%.2e ", worst_inverse) +
              std::to_string(monotone) + "/10 GS traces non-increasing"};
}

// --- 11 ------------------------------------------------------------------------

Outcome user_allocation() {
  const auto slots = allocate_users(40);
  std::set<std::pair<int, int>> unique;
  bool in_range = true;
  for (const auto& s : slots) {
    unique.insert({s.channel, s.stream});
    in_range = in_range && s.channel >= 0 && s.channel < kChannels && s.stream >= 0 &&
               s.stream < kSpatialStreams;
  }
  bool refused = false;
  try {
    allocate_users(41);
  } catch (const CapacityError&) {
    refused = true;
  }
  return {slots.size() == 40 && unique.size() == 40 && in_range && refused,
          std::to_string(unique.size()) + " unique slots for 40 users, 41 users " +
              (refused ? "refused" : "accepted")};
}

// --- 12 ------------------------------------------------------------------------

Outcome session_adaptation() {
  const auto slm = SlmParams::desk(128);
  const auto poh = make_cell_poh(builtin_scene("sparse-cards", slm, 0.5), slm, 1, 10);
  RoiMask roi(128, 128);
  for (int y = 42; y < 86; ++y)
    for (int x = 42; x < 86; ++x) roi.set(x, y, true);

  SessionConfig cfg;  // Full HD budget, two eyes, 60 fps, 4-bit ceiling
  ChannelModel channel;
  channel.min_mbps = 60.0;
  channel.max_mbps = 200.0;
  channel.step_mbps = 20.0;
  channel.seed = 3;
  SessionOptions opt;
  opt.duration = 40.0;
  opt.policy = InfeasiblePolicy::kDropFrameRate;
  const auto frames = run_session(poh, roi, 0.5, cfg, channel, opt);

  bool ceiling_ok = true;
  bool budget_ok = true;
  double lo = 1e9, hi = 0.0;
  for (const auto& f : frames) {
    ceiling_ok = ceiling_ok && f.decision.bits <= cfg.slm_effective_bits;
    budget_ok = budget_ok && f.decision.predicted_mbps <= f.rate_mbps;
    lo = std::min(lo, f.rate_mbps);
    hi = std::max(hi, f.rate_mbps);
  }
  // Bits must be non-decreasing in rate among frames sharing the same RoI fraction.
  auto sorted = frames;
  std::sort(sorted.begin(), sorted.end(), [](const SessionFrame& a, const SessionFrame& b) {
    return a.decision.roi_fraction != b.decision.roi_fraction
               ? a.decision.roi_fraction < b.decision.roi_fraction
               : a.rate_mbps < b.rate_mbps;
  });
  bool monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].decision.roi_fraction == sorted[i - 1].decision.roi_fraction) {
      monotone = monotone && sorted[i].decision.bits >= sorted[i - 1].decision.bits;
    }
  }
  std::set<int> used;
  for (const auto& f : frames) used.insert(f.decision.bits);
  std::string bits;
  for (int b : used) bits += std::to_string(b) + " ";
  const bool spans = lo <= 70.0 && hi >= 190.0;
  return {ceiling_ok && budget_ok && monotone && spans && !frames.empty(),
          std::to_string(frames.size()) + fmt(" frames, rate %.0f", lo) + fmt("..%.0f Mbit/s", hi) +
              fmt(", rho=%.3f", roi.coded_fraction()) + ", bits used {" + bits + "}" +
              (budget_ok ? "" : ", over budget") + (monotone ? "" : ", non-monotone")};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "PCM L=8 above 25 dB at every depth", pcm_threshold},
      {2, "five-level quantizer example", level_example},
      {3, "progressive bit-plane error bound", progressive_bound},
      {4, "rate arithmetic", rate_arithmetic},
      {5, "flat beats default-matrix DCT at matched rate", flat_beats_default},
      {6, "block unwrapping does not help DCT coding", unwrap_does_not_help},
      {7, "container bit-depth rule", bit_depth_rule},
      {8, "RoI skip coding near-lossless", roi_near_lossless},
      {9, "codec round trip and golden streams", codec_roundtrip},
      {10, "wavefield and error-reduction properties", wavefield_properties},
      {11, "multi-user allocation", user_allocation},
      {12, "session rate adaptation", session_adaptation},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s  (%s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
