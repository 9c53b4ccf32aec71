#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pohlab/pohcodec.hpp"
#include "pohlab/wavefield.hpp"

namespace pohlab {

inline constexpr std::int64_t kFullHdPixels = 1920LL * 1080LL;

struct SessionConfig {
  double fps = 60.0;
  int eyes = 2;
  std::int64_t pixels_per_eye = kFullHdPixels;
  int slm_effective_bits = 4;
  int container_bits = 8;
  double overhead_factor = 0.02;  // header + RoI runs, as a fraction of payload
  bool enforce_ceiling = true;

  void validate() const;
};

struct CodingDecision {
  int bits = 1;
  double roi_fraction = 1.0;
  int layers_sent = 1;
  double predicted_mbps = 0.0;
  bool rate_infeasible = false;
  double fps = 60.0;  // frame rate the decision was budgeted for
};

/// Picks the bit depth for the available rate (Mbit/s):
/// floor(available / (fps * eyes * rho * pixels)), clamped to
/// [1, min(8, slm ceiling)], then lowered while the prediction including the
/// overhead exceeds the available rate.
CodingDecision select_coding_params(double available_mbps, double roi_fraction,
                                    const SessionConfig& cfg);

/// Predicted rate in Mbit/s for a given depth.
double predicted_rate_mbps(int bits, double roi_fraction, const SessionConfig& cfg);

/// Infeasible helper: the largest fps / k (k = 1, 2, ...) at which one bit per
/// coded pixel fits. Returns nullopt if even fps / max_divisor does not fit.
std::optional<CodingDecision> drop_frame_rate(double available_mbps, double roi_fraction,
                                              const SessionConfig& cfg, int max_divisor = 60);

/// Infeasible helper: the largest RoI fraction at which one bit per coded pixel fits.
double max_feasible_roi_fraction(double available_mbps, const SessionConfig& cfg);

struct CompressionSummary {
  double uncompressed_mbps = 0.0;
  double compressed_mbps = 0.0;
  double ratio = 0.0;
};

CompressionSummary compression_summary(const CodingDecision& decision, const SessionConfig& cfg);

struct ChannelModel {
  double min_mbps = 60.0;
  double max_mbps = 200.0;
  double initial_mbps = 130.0;
  double update_interval = 0.1;  // seconds between rate changes
  double step_mbps = 10.0;       // maximum change per update
  std::uint64_t seed = 1;

  void validate() const;
};

struct RateSample {
  double t = 0.0;
  double mbps = 0.0;
};

/// Reflected random walk, one sample per update interval, starting at t = 0.
std::vector<RateSample> simulate_channel(const ChannelModel& model, double duration);

/// Rate in effect at time t of a trace (sample-and-hold).
double rate_at(const std::vector<RateSample>& trace, double t);

inline constexpr int kChannels = 5;
inline constexpr int kSpatialStreams = 8;
inline constexpr int kMaxUsers = kChannels * kSpatialStreams;

struct UserSlot {
  int channel = 0;
  int stream = 0;
  friend bool operator==(const UserSlot&, const UserSlot&) = default;
};

/// Slot i goes to channel i % 5, stream i / 5. Throws CapacityError above 40.
std::vector<UserSlot> allocate_users(int n);

/// Serialized registry handing out slots to named users.
class UserRegistry {
 public:
  UserSlot join(const std::string& user);
  void leave(const std::string& user);
  std::optional<UserSlot> slot_of(const std::string& user) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::pair<std::string, UserSlot>> users_;
};

enum class InfeasiblePolicy { kDropFrameRate, kShrinkRoi };

struct SessionFrame {
  int frame_index = 0;
  double t = 0.0;
  double rate_mbps = 0.0;
  CodingDecision decision;
  double bpp_total = 0.0;
  double psnr_db = 0.0;
};

struct SessionOptions {
  double duration = 10.0;
  InfeasiblePolicy policy = InfeasiblePolicy::kDropFrameRate;
  FillSpec fill = FillSpec{};
  PropagationOptions reconstruction;  // e.g. eye-box pupil
};

/// Per frame interval: sample the channel, choose the depth, code the POH,
/// decode and reconstruct at `depth`, score against the uncoded POH.
std::vector<SessionFrame> run_session(const PhaseHologram& poh, const RoiMask& roi, double depth,
                                      const SessionConfig& cfg, const ChannelModel& channel,
                                      const SessionOptions& options = {});

/// frame_index,t_seconds,rate_mbps,roi_fraction,bits,bpp_total,psnr_db,
/// predicted_mbps,fps
std::string session_csv(const std::vector<SessionFrame>& frames);
void write_session_csv(const std::filesystem::path& path, const std::vector<SessionFrame>& frames);

}  // namespace pohlab
