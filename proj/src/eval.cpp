#include "pohlab/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "bytes.hpp"
#include "pohlab/image_io.hpp"
#include "pohlab/scenes.hpp"

namespace pohlab {
namespace {

std::string format_rung(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos)) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

// Runs an external PGM codec and returns (bpp, decoded POH).
std::pair<double, PhaseHologram> run_external(const PhaseHologram& poh, const MethodSpec& method,
                                              double rung) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("pohlab-ext-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{dir};

  const fs::path in = dir / "in.pgm";
  const fs::path coded = dir / "coded.bin";
  const fs::path out = dir / "out.pgm";
  write_pgm(in, Plane<std::uint8_t>(poh.width(), poh.height(),
                                    std::vector<std::uint8_t>(poh.samples().begin(),
                                                              poh.samples().end())));
  auto expand = [&](std::string cmd) {
    replace_all(cmd, "{in}", shell_quote(in.string()));
    replace_all(cmd, "{coded}", shell_quote(coded.string()));
    replace_all(cmd, "{out}", shell_quote(out.string()));
    replace_all(cmd, "{rate}", format_rung(rung));
    return cmd;
  };
  if (std::system(expand(method.encode_command).c_str()) != 0) {
    throw IoError("external encoder '" + method.name + "' failed");
  }
  if (std::system(expand(method.decode_command).c_str()) != 0) {
    throw IoError("external decoder '" + method.name + "' failed");
  }
  const double bpp = 8.0 * static_cast<double>(fs::file_size(coded)) / static_cast<double>(poh.size());
  const auto img = read_gray_image(out);
  if (img.pixels.width() != poh.width() || img.pixels.height() != poh.height()) {
    throw IoError("external decoder '" + method.name + "' changed the frame size");
  }
  PhaseHologram decoded(poh.params());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    const long v = std::lround(255.0 * img.pixels[i] / img.max_value);
    decoded[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
  }
  return {bpp, decoded};
}

}  // namespace

IntensityImage reconstruct(const PhaseHologram& poh, double depth,
                           const PropagationOptions& options) {
  return intensity(propagate(phase_to_field(poh), depth, options));
}

double intensity_psnr(const IntensityImage& reference, const IntensityImage& test) {
  if (!reference.same_shape(test)) throw UsageError("intensity images differ in size");
  if (reference.empty()) throw UsageError("empty intensity image");
  const double peak = *std::max_element(reference.values().begin(), reference.values().end());
  if (!(peak > 0.0)) throw UsageError("reference intensity is zero everywhere");
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = (reference[i] - test[i]) / peak;
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(reference.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double reconstruction_psnr(const PhaseHologram& reference, const PhaseHologram& test, double depth,
                           const PropagationOptions& options) {
  if (reference.width() != test.width() || reference.height() != test.height()) {
    throw UsageError("holograms differ in size");
  }
  if (reference == test) return kPsnrCap;
  return intensity_psnr(reconstruct(reference, depth, options), reconstruct(test, depth, options));
}

double content_psnr(const IntensityImage& reconstruction, const IntensityImage& target,
                    const Mask& region) {
  if (!reconstruction.same_shape(target) || !region.same_shape(target)) {
    throw UsageError("content PSNR inputs differ in size");
  }
  double rt = 0.0, rr = 0.0, peak = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!region[i]) continue;
    rt += reconstruction[i] * target[i];
    rr += reconstruction[i] * reconstruction[i];
    peak = std::max(peak, target[i]);
    ++n;
  }
  if (n == 0 || !(peak > 0.0)) throw UsageError("content PSNR region holds no target");
  const double gain = rr > 0.0 ? rt / rr : 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!region[i]) continue;
    const double d = (target[i] - gain * reconstruction[i]) / peak;
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(n);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

std::string rung_label(const MethodSpec& method, double rung) {
  const std::string r = format_rung(rung);
  switch (method.kind) {
    case MethodKind::kIdentity: return "identity";
    case MethodKind::kPcm: return "pcm-L" + r;
    case MethodKind::kBitPlane: return "bitplane-b" + r;
    case MethodKind::kDctFlat: return "dct-flat-s" + r;
    case MethodKind::kDctDefault: return "dct-default-q" + r;
    case MethodKind::kUnwrapDct: return "unwrap-dct-s" + r;
    case MethodKind::kExternal: return method.name + "-" + r;
  }
  return "unknown";
}

void SweepConfig::validate() const {
  if (depths.empty()) throw UsageError("sweep needs at least one depth");
  for (double z : depths) {
    if (!(z >= kMinSceneDepth && z <= kMaxSceneDepth)) {
      throw UsageError("sweep depth outside [0.25, 5.0] m");
    }
  }
  if (seeds.empty()) throw UsageError("sweep needs at least one seed");
  if (methods.empty()) throw UsageError("sweep needs at least one method");
  for (const auto& m : methods) {
    if (m.kind != MethodKind::kIdentity && m.ladder.empty()) {
      throw UsageError("method '" + rung_label(m, 0) + "' has an empty ladder");
    }
    if (m.kind == MethodKind::kExternal &&
        (m.name.empty() || m.encode_command.empty() || m.decode_command.empty())) {
      throw UsageError("external methods need a name and encode/decode commands");
    }
  }
  if (size < 2 * kGuardBand + 8) throw UsageError("sweep grid too small");
  if (iterations < 1) throw UsageError("iterations must be positive");
  if (!(feedback >= 0.0 && feedback <= 1.0)) throw UsageError("feedback must be in [0, 1]");
  if (dilation < 0) throw UsageError("dilation must be non-negative");
}

std::vector<double> log_spaced_depths(int n, double lo, double hi) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw UsageError("bad depth range");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i) {
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<RdPoint> evaluate_methods(const PhaseHologram& poh, double depth, std::uint64_t seed,
                                      const std::vector<MethodSpec>& methods) {
  const RoiMask full = RoiMask::full(poh.width(), poh.height());
  // Reconstruction of the reference is shared by every rung.
  const IntensityImage reference = reconstruct(poh, depth);
  auto score = [&](const PhaseHologram& test) {
    return test == poh ? kPsnrCap : intensity_psnr(reference, reconstruct(test, depth));
  };

  std::vector<RdPoint> points;
  for (const auto& m : methods) {
    const std::vector<double> ladder =
        m.kind == MethodKind::kIdentity ? std::vector<double>{8.0} : m.ladder;
    for (double rung : ladder) {
      RdPoint p;
      p.method = rung_label(m, rung);
      p.depth_m = depth;
      p.seed = seed;
      switch (m.kind) {
        case MethodKind::kIdentity:
          p.bpp = 8.0;
          p.psnr_db = kPsnrCap;
          break;
        case MethodKind::kPcm: {
          const auto stream = encode_levels(poh, full, static_cast<int>(rung));
          p.bpp = stream.bpp_total();
          p.psnr_db = score(decode(stream));
          break;
        }
        case MethodKind::kBitPlane: {
          const auto stream = encode(poh, full, static_cast<int>(rung));
          p.bpp = stream.bpp_total();
          p.psnr_db = score(decode(stream));
          break;
        }
        case MethodKind::kDctFlat:
        case MethodKind::kDctDefault: {
          const auto cfg = m.kind == MethodKind::kDctFlat
                               ? DctCodecConfig::flat(rung)
                               : DctCodecConfig::standard(static_cast<int>(rung));
          const auto stream = dct_encode(poh_samples(poh), cfg);
          p.bpp = 8.0 * static_cast<double>(stream.size()) / static_cast<double>(poh.size());
          p.psnr_db = score(samples_to_poh(dct_decode(stream), poh.params()));
          break;
        }
        case MethodKind::kUnwrapDct: {
          UnwrapPipelineConfig cfg;
          cfg.codec = DctCodecConfig::flat(rung, 10);
          const auto r = unwrap_pipeline_roundtrip(poh, cfg);
          p.bpp = r.bpp;
          p.psnr_db = score(r.poh);
          break;
        }
        case MethodKind::kExternal: {
          const auto [bpp, decoded] = run_external(poh, m, rung);
          p.bpp = bpp;
          p.psnr_db = score(decoded);
          break;
        }
      }
      points.push_back(std::move(p));
    }
  }
  return points;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("POHLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0 && n <= 1024) return static_cast<int>(n);
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

PhaseHologram make_cell_poh(const TargetScene& scene, const SlmParams& slm, std::uint64_t seed,
                            int iterations, double feedback, int dilation) {
  const auto hologram = generate_complex_hologram(scene, slm, seed);
  FidocConfig cfg;
  cfg.iterations = iterations;
  cfg.feedback = feedback;
  cfg.signal_mask = default_signal_mask(scene, dilation);
  return fidoc(hologram, scene, cfg).poh;
}

std::vector<RdPoint> rd_sweep(const TargetScene& scene, const SweepConfig& sweep) {
  sweep.validate();
  scene.validate();
  SlmParams slm;
  slm.width = scene.width();
  slm.height = scene.height();

  struct Cell {
    std::size_t depth_index;
    std::size_t seed_index;
  };
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < sweep.depths.size(); ++d) {
    for (std::size_t s = 0; s < sweep.seeds.size(); ++s) cells.push_back({d, s});
  }
  std::vector<std::vector<RdPoint>> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      try {
        const double z = sweep.depths[cells[i].depth_index];
        const std::uint64_t seed = sweep.seeds[cells[i].seed_index];
        TargetScene at_depth = scene;
        for (auto& layer : at_depth.layers) layer.depth = z;
        const auto poh = make_cell_poh(at_depth, slm, seed, sweep.iterations, sweep.feedback,
                                       sweep.dilation);
        results[i] = evaluate_methods(poh, z, seed, sweep.methods);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(resolve_thread_count(sweep.threads),
                                    static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Merge in a fixed order: method rung (config order), then depth, then seed.
  std::vector<RdPoint> points;
  const std::size_t per_cell = results.empty() ? 0 : results.front().size();
  for (std::size_t r = 0; r < per_cell; ++r) {
    for (std::size_t c = 0; c < cells.size(); ++c) points.push_back(results[c][r]);
  }
  return points;
}

std::vector<RdPoint> rd_sweep(const SweepConfig& sweep) {
  sweep.validate();
  SlmParams slm = SlmParams::desk(sweep.size);
  return rd_sweep(resolve_scene(sweep.scene, slm, sweep.depths.front(), sweep.threshold), sweep);
}

std::vector<RdSummary> summarize(const std::vector<RdPoint>& points) {
  std::vector<RdSummary> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const RdPoint*>> groups;
  for (const auto& p : points) {
    auto [it, inserted] = index.emplace(p.method, groups.size());
    if (inserted) {
      groups.emplace_back();
      out.push_back({p.method, 0, 0, 0, 0});
    }
    groups[it->second].push_back(&p);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& s = out[g];
    s.count = groups[g].size();
    for (const auto* p : groups[g]) {
      s.mean_bpp += p->bpp;
      s.mean_psnr += p->psnr_db;
    }
    s.mean_bpp /= static_cast<double>(s.count);
    s.mean_psnr /= static_cast<double>(s.count);
    double var = 0.0;
    for (const auto* p : groups[g]) var += (p->psnr_db - s.mean_psnr) * (p->psnr_db - s.mean_psnr);
    s.std_psnr = std::sqrt(var / static_cast<double>(s.count));
  }
  return out;
}

std::string rd_csv(const std::vector<RdPoint>& points) {
  std::ostringstream out;
  out << "method,bpp,psnr_db,depth_m,seed\n";
  char buf[160];
  for (const auto& p : points) {
    if (p.method.find_first_of(",\"\n") != std::string::npos) {
      throw UsageError("method id '" + p.method + "' cannot be written to CSV");
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%llu\n", p.bpp, p.psnr_db, p.depth_m,
                  static_cast<unsigned long long>(p.seed));
    out << p.method << buf;
  }
  return out.str();
}

std::vector<RdPoint> parse_rd_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "method,bpp,psnr_db,depth_m,seed") {
    throw IoError("RD CSV header missing");
  }
  std::vector<RdPoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 5) throw IoError("RD CSV row has " + std::to_string(fields.size()) + " fields");
    RdPoint p;
    try {
      p.method = fields[0];
      p.bpp = std::stod(fields[1]);
      p.psnr_db = std::stod(fields[2]);
      p.depth_m = std::stod(fields[3]);
      p.seed = std::stoull(fields[4]);
    } catch (const std::exception&) {
      throw IoError("malformed RD CSV row: " + line);
    }
    points.push_back(std::move(p));
  }
  return points;
}

void emit_rd_csv(const std::filesystem::path& path, const std::vector<RdPoint>& points) {
  const std::string text = rd_csv(points);
  detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                     text.size()));
}

std::vector<RdPoint> read_rd_csv(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_rd_csv(std::string(bytes.begin(), bytes.end()));
}

Plane<std::uint8_t> tone_map(const IntensityImage& intensity) {
  Plane<std::uint8_t> out(intensity.width(), intensity.height());
  if (intensity.empty()) return out;
  const double peak = *std::max_element(intensity.values().begin(), intensity.values().end());
  if (!(peak > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(intensity[i] / peak, 0.0, 1.0) * 255));
  }
  return out;
}

void emit_reconstruction_png(const std::filesystem::path& path, const PhaseHologram& poh,
                             double depth, const PropagationOptions& options) {
  write_png(path, tone_map(reconstruct(poh, depth, options)));
}

}  // namespace pohlab
