#include "pohlab/rate_control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "bytes.hpp"
#include "pohlab/eval.hpp"
#include "pohlab/morphology.hpp"

namespace pohlab {
namespace {

double pixel_rate(const SessionConfig& cfg, double roi_fraction) {
  return cfg.fps * cfg.eyes * roi_fraction * static_cast<double>(cfg.pixels_per_eye);
}

double next_uniform(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

// Keeps the `keep` RoI pixels deepest inside the RoI (largest distance to an
// uncoded pixel); ties resolved in raster order.
RoiMask shrink_roi(const RoiMask& roi, std::size_t keep) {
  if (keep >= roi.coded_count()) return roi;
  Mask outside(roi.width(), roi.height());
  for (std::size_t i = 0; i < outside.size(); ++i) outside[i] = !roi[i];
  const auto depth = squared_distance_transform(outside);
  std::vector<std::size_t> order;
  order.reserve(roi.coded_count());
  for (std::size_t i = 0; i < roi.size(); ++i) {
    if (roi[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });
  RoiMask out(roi.width(), roi.height());
  for (std::size_t k = 0; k < keep; ++k) out.set(order[k], true);
  return out;
}

}  // namespace

void SessionConfig::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw UsageError("fps must be positive");
  if (eyes != 1 && eyes != 2) throw UsageError("eyes must be 1 or 2");
  if (pixels_per_eye <= 0) throw UsageError("pixels per eye must be positive");
  if (slm_effective_bits < 1 || slm_effective_bits > 8) {
    throw UsageError("SLM effective bits must be in 1..8");
  }
  if (container_bits < 1 || container_bits > 16) throw UsageError("container bits out of range");
  if (!(overhead_factor >= 0.0)) throw UsageError("overhead factor must be non-negative");
}

double predicted_rate_mbps(int bits, double roi_fraction, const SessionConfig& cfg) {
  return bits * pixel_rate(cfg, roi_fraction) * (1.0 + cfg.overhead_factor) / 1e6;
}

CodingDecision select_coding_params(double available_mbps, double roi_fraction,
                                    const SessionConfig& cfg) {
  cfg.validate();
  if (!(available_mbps > 0.0) || !std::isfinite(available_mbps)) {
    throw UsageError("available rate must be positive");
  }
  if (!(roi_fraction > 0.0 && roi_fraction <= 1.0)) {
    throw UsageError("RoI fraction must be in (0, 1]");
  }
  const int ceiling = cfg.enforce_ceiling ? std::min(8, cfg.slm_effective_bits) : 8;
  const double quotient = available_mbps * 1e6 / pixel_rate(cfg, roi_fraction);
  int bits = static_cast<int>(std::clamp(std::floor(quotient), 1.0, static_cast<double>(ceiling)));
  // The overhead is not part of the quotient, so the floor can land one step high.
  while (bits > 1 && predicted_rate_mbps(bits, roi_fraction, cfg) > available_mbps) --bits;

  CodingDecision d;
  d.bits = bits;
  d.layers_sent = bits;
  d.roi_fraction = roi_fraction;
  d.predicted_mbps = predicted_rate_mbps(bits, roi_fraction, cfg);
  d.rate_infeasible = d.predicted_mbps > available_mbps;
  d.fps = cfg.fps;
  return d;
}

std::optional<CodingDecision> drop_frame_rate(double available_mbps, double roi_fraction,
                                              const SessionConfig& cfg, int max_divisor) {
  if (max_divisor < 1) throw UsageError("frame rate divisor must be positive");
  for (int k = 1; k <= max_divisor; ++k) {
    SessionConfig reduced = cfg;
    reduced.fps = cfg.fps / k;
    auto d = select_coding_params(available_mbps, roi_fraction, reduced);
    if (!d.rate_infeasible) return d;
  }
  return std::nullopt;
}

double max_feasible_roi_fraction(double available_mbps, const SessionConfig& cfg) {
  cfg.validate();
  if (!(available_mbps > 0.0)) throw UsageError("available rate must be positive");
  const double full = predicted_rate_mbps(1, 1.0, cfg);
  return std::min(1.0, available_mbps / full);
}

CompressionSummary compression_summary(const CodingDecision& decision, const SessionConfig& cfg) {
  cfg.validate();
  if (decision.bits < 1 || decision.bits > 8) throw UsageError("decision bits out of range");
  if (!(decision.roi_fraction > 0.0 && decision.roi_fraction <= 1.0)) {
    throw UsageError("decision RoI fraction must be in (0, 1]");
  }
  CompressionSummary s;
  s.uncompressed_mbps = cfg.container_bits * pixel_rate(cfg, 1.0) / 1e6;
  s.compressed_mbps = decision.bits * pixel_rate(cfg, decision.roi_fraction) / 1e6;
  s.ratio = s.uncompressed_mbps / s.compressed_mbps;
  return s;
}

void ChannelModel::validate() const {
  if (!(min_mbps >= 0.0) || !(min_mbps <= max_mbps) || !std::isfinite(max_mbps)) {
    throw UsageError("channel bounds must satisfy 0 <= min <= max");
  }
  if (!(update_interval > 0.0)) throw UsageError("channel update interval must be positive");
  if (!(step_mbps >= 0.0)) throw UsageError("channel step must be non-negative");
  if (!std::isfinite(initial_mbps)) throw UsageError("channel initial rate must be finite");
}

std::vector<RateSample> simulate_channel(const ChannelModel& model, double duration) {
  model.validate();
  if (!(duration > 0.0) || !std::isfinite(duration)) throw UsageError("duration must be positive");
  const auto count = static_cast<std::size_t>(std::ceil(duration / model.update_interval - 1e-9));
  std::vector<RateSample> trace;
  trace.reserve(std::max<std::size_t>(count, 1));
  std::uint64_t state = model.seed;
  double rate = std::clamp(model.initial_mbps, model.min_mbps, model.max_mbps);
  const double width = model.max_mbps - model.min_mbps;
  for (std::size_t i = 0; i < std::max<std::size_t>(count, 1); ++i) {
    if (i > 0 && model.step_mbps > 0.0) {
      rate += model.step_mbps * (2.0 * next_uniform(state) - 1.0);
      // Reflect at the bounds; a step can exceed the range width, hence the loop.
      while (width > 0.0 && (rate < model.min_mbps || rate > model.max_mbps)) {
        if (rate > model.max_mbps) rate = 2.0 * model.max_mbps - rate;
        if (rate < model.min_mbps) rate = 2.0 * model.min_mbps - rate;
      }
      if (width == 0.0) rate = model.min_mbps;
    }
    trace.push_back({static_cast<double>(i) * model.update_interval, rate});
  }
  return trace;
}

double rate_at(const std::vector<RateSample>& trace, double t) {
  if (trace.empty()) throw UsageError("empty rate trace");
  auto it = std::upper_bound(trace.begin(), trace.end(), t,
                             [](double v, const RateSample& s) { return v < s.t; });
  if (it == trace.begin()) return trace.front().mbps;
  return std::prev(it)->mbps;
}

std::vector<UserSlot> allocate_users(int n) {
  if (n < 0) throw UsageError("user count must be non-negative");
  if (n > kMaxUsers) {
    throw CapacityError(std::to_string(n) + " users exceed the capacity of " +
                        std::to_string(kMaxUsers) + " (5 channels x 8 spatial streams)");
  }
  std::vector<UserSlot> slots;
  slots.reserve(n);
  for (int i = 0; i < n; ++i) slots.push_back({i % kChannels, i / kChannels});
  return slots;
}

UserSlot UserRegistry::join(const std::string& user) {
  std::lock_guard lock(mutex_);
  for (const auto& [name, slot] : users_) {
    if (name == user) return slot;
  }
  // First free slot in allocation order.
  const auto all = allocate_users(kMaxUsers);
  for (const auto& candidate : all) {
    const bool taken = std::any_of(users_.begin(), users_.end(),
                                   [&](const auto& u) { return u.second == candidate; });
    if (!taken) {
      users_.emplace_back(user, candidate);
      return candidate;
    }
  }
  throw CapacityError("all " + std::to_string(kMaxUsers) + " user slots are taken");
}

void UserRegistry::leave(const std::string& user) {
  std::lock_guard lock(mutex_);
  std::erase_if(users_, [&](const auto& u) { return u.first == user; });
}

std::optional<UserSlot> UserRegistry::slot_of(const std::string& user) const {
  std::lock_guard lock(mutex_);
  for (const auto& [name, slot] : users_) {
    if (name == user) return slot;
  }
  return std::nullopt;
}

std::size_t UserRegistry::size() const {
  std::lock_guard lock(mutex_);
  return users_.size();
}

std::vector<SessionFrame> run_session(const PhaseHologram& poh, const RoiMask& roi, double depth,
                                      const SessionConfig& cfg, const ChannelModel& channel,
                                      const SessionOptions& options) {
  cfg.validate();
  if (roi.width() != poh.width() || roi.height() != poh.height()) {
    throw UsageError("RoI mask does not match the hologram grid");
  }
  if (roi.coded_count() == 0) throw UsageError("session RoI is empty");
  const auto trace = simulate_channel(channel, options.duration);
  const auto frames = static_cast<int>(std::floor(options.duration * cfg.fps + 1e-9));

  // Coding and scoring depend only on (RoI size, depth), so cache them.
  struct Outcome {
    double bpp_total;
    double psnr;
  };
  std::map<std::pair<std::size_t, int>, Outcome> cache;
  auto outcome = [&](const RoiMask& mask, int bits) {
    const auto key = std::make_pair(mask.coded_count(), bits);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const auto stream = encode(poh, mask, bits, options.fill);
    const auto decoded = decode(stream, bits);
    const Outcome o{stream.bpp_total(),
                    reconstruction_psnr(poh, decoded, depth, options.reconstruction)};
    cache.emplace(key, o);
    return o;
  };

  std::map<std::size_t, RoiMask> shrunk;
  std::vector<SessionFrame> log;
  log.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    SessionFrame f;
    f.frame_index = i;
    f.t = i / cfg.fps;
    f.rate_mbps = rate_at(trace, f.t);
    const RoiMask* mask = &roi;
    auto d = select_coding_params(f.rate_mbps, roi.coded_fraction(), cfg);
    if (d.rate_infeasible) {
      if (options.policy == InfeasiblePolicy::kDropFrameRate) {
        if (auto reduced = drop_frame_rate(f.rate_mbps, roi.coded_fraction(), cfg)) d = *reduced;
      } else {
        // Round the pixel budget down to a 1% grid so nearby rates share a mask.
        const double rho = max_feasible_roi_fraction(f.rate_mbps, cfg);
        const double grid = std::floor(rho * 100.0) / 100.0;
        const auto keep = static_cast<std::size_t>(grid * static_cast<double>(roi.size()));
        if (keep > 0) {
          auto it = shrunk.find(keep);
          if (it == shrunk.end()) it = shrunk.emplace(keep, shrink_roi(roi, keep)).first;
          mask = &it->second;
          d = select_coding_params(f.rate_mbps, mask->coded_fraction(), cfg);
        }
      }
    }
    f.decision = d;
    const auto o = outcome(*mask, d.bits);
    f.bpp_total = o.bpp_total;
    f.psnr_db = o.psnr;
    log.push_back(f);
  }
  return log;
}

std::string session_csv(const std::vector<SessionFrame>& frames) {
  std::ostringstream out;
  out << "frame_index,t_seconds,rate_mbps,roi_fraction,bits,bpp_total,psnr_db,predicted_mbps,fps\n";
  char buf[256];
  for (const auto& f : frames) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%d,%.9f,%.6f,%.6f,%.6f\n", f.frame_index,
                  f.t, f.rate_mbps, f.decision.roi_fraction, f.decision.bits, f.bpp_total,
                  f.psnr_db, f.decision.predicted_mbps, f.decision.fps);
    out << buf;
  }
  return out.str();
}

void write_session_csv(const std::filesystem::path& path, const std::vector<SessionFrame>& frames) {
  const std::string text = session_csv(frames);
  detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                     text.size()));
}

}  // namespace pohlab
