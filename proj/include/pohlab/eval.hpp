#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pohlab/baselines.hpp"
#include "pohlab/cgh.hpp"
#include "pohlab/phase_retrieval.hpp"
#include "pohlab/pohcodec.hpp"
#include "pohlab/wavefield.hpp"

namespace pohlab {

/// Stand-in for infinite PSNR.
inline constexpr double kPsnrCap = 99.0;

/// Intensity of the POH's reconstruction at depth.
IntensityImage reconstruct(const PhaseHologram& poh, double depth,
                           const PropagationOptions& options = {});

/// PSNR between two intensity images, both scaled by 1 / max(reference).
double intensity_psnr(const IntensityImage& reference, const IntensityImage& test);

/// Reconstructs both POHs at the same depth and compares intensities.
double reconstruction_psnr(const PhaseHologram& reference, const PhaseHologram& test, double depth,
                           const PropagationOptions& options = {});

/// PSNR of a reconstruction against a target intensity over a region, after
/// the least-squares gain that best maps the reconstruction onto the target.
/// The peak is max(target) over the region.
double content_psnr(const IntensityImage& reconstruction, const IntensityImage& target,
                    const Mask& region);

struct RdPoint {
  std::string method;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double depth_m = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const RdPoint&, const RdPoint&) = default;
};

struct RdSummary {
  std::string method;
  double mean_bpp = 0.0;
  double mean_psnr = 0.0;
  double std_psnr = 0.0;  // population standard deviation over depth and seed
  std::size_t count = 0;
};

enum class MethodKind { kIdentity, kPcm, kBitPlane, kDctFlat, kDctDefault, kUnwrapDct, kExternal };

/// One coding method and its rate ladder.
struct MethodSpec {
  MethodKind kind = MethodKind::kPcm;
  std::vector<double> ladder;  // levels, bits, steps or qualities
  std::string name;            // external methods only
  /// External command templates. {in} is the raw PGM, {coded} the encoder
  /// output, {out} the decoded PGM. Run through the shell.
  std::string encode_command;
  std::string decode_command;
};

/// Label of one rung, e.g. "pcm-L8", "bitplane-b3", "dct-flat-s12".
std::string rung_label(const MethodSpec& method, double rung);

struct SweepConfig {
  std::vector<double> depths;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<MethodSpec> methods;
  std::string scene = "builtin:sparse-cards";
  double threshold = 0.05;
  int size = 512;
  int iterations = 30;
  double feedback = 0.5;
  int dilation = 8;
  int threads = 0;  // 0 = POHLAB_THREADS or hardware concurrency

  void validate() const;
};

/// n depths log-spaced over [lo, hi].
std::vector<double> log_spaced_depths(int n = 12, double lo = 0.25, double hi = 5.0);

/// Method-by-method RD points for one coded POH (shared by the sweep and the
/// CLI). Points carry the given depth and seed.
std::vector<RdPoint> evaluate_methods(const PhaseHologram& poh, double depth, std::uint64_t seed,
                                      const std::vector<MethodSpec>& methods);

/// Regenerates CGH + POH for every (depth, seed) cell, codes it with every
/// method and rung. Points come out in a fixed order regardless of thread
/// count: rung (config order), then depth, then seed.
std::vector<RdPoint> rd_sweep(const SweepConfig& sweep);

/// Same, with an already loaded scene (its depth is replaced per cell).
std::vector<RdPoint> rd_sweep(const TargetScene& scene, const SweepConfig& sweep);

std::vector<RdSummary> summarize(const std::vector<RdPoint>& points);

/// Worker count: explicit > POHLAB_THREADS > hardware concurrency.
int resolve_thread_count(int requested);

std::string rd_csv(const std::vector<RdPoint>& points);
std::vector<RdPoint> parse_rd_csv(const std::string& text);
void emit_rd_csv(const std::filesystem::path& path, const std::vector<RdPoint>& points);
std::vector<RdPoint> read_rd_csv(const std::filesystem::path& path);

/// 8-bit intensity, linearly scaled to its maximum.
Plane<std::uint8_t> tone_map(const IntensityImage& intensity);
void emit_reconstruction_png(const std::filesystem::path& path, const PhaseHologram& poh,
                             double depth, const PropagationOptions& options = {});

/// Key-value sweep description; see the README for the keys.
SweepConfig parse_sweep_config(const std::string& text);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// The POH the sweep uses for one cell: CGH with `seed`, then FIDOC with the
/// default signal mask.
PhaseHologram make_cell_poh(const TargetScene& scene, const SlmParams& slm, std::uint64_t seed,
                            int iterations = 30, double feedback = 0.5, int dilation = 8);

}  // namespace pohlab
