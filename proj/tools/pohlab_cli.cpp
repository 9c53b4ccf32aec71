#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pohlab/eval.hpp"
#include "pohlab/image_io.hpp"
#include "pohlab/phase_retrieval.hpp"
#include "pohlab/pohcodec.hpp"
#include "pohlab/rate_control.hpp"
#include "pohlab/scenes.hpp"
#include "pohlab/subhologram.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pohlab;

namespace {

struct Optics {
  int size = 512;
  double pitch = 8e-6;
  double wavelength = 638e-9;
  double eyebox_mm = 0.0;  // 0 = full band
  double eye_relief = 0.02;

  SlmParams slm(int width, int height) const {
    SlmParams p;
    p.width = width;
    p.height = height;
    p.pixel_pitch = pitch;
    p.wavelength = wavelength;
    p.validate();
    return p;
  }
  SlmParams slm() const { return slm(size, size); }
  SubhologramParams subhologram() const {
    SubhologramParams s;
    if (eyebox_mm > 0.0) s.eyebox_diameter = eyebox_mm * 1e-3;
    s.eye_relief = eye_relief;
    return s;
  }
  double cutoff(double depth, const SlmParams& p) const {
    return eyebox_mm > 0.0 ? eyebox_cutoff(subhologram(), depth, p) : 0.0;
  }
  json to_json() const {
    return {{"pixel_pitch_m", pitch},
            {"wavelength_m", wavelength},
            {"eyebox_mm", eyebox_mm},
            {"eye_relief_m", eye_relief}};
  }
};

void add_optics(CLI::App* cmd, Optics& o, bool with_size) {
  if (with_size) cmd->add_option("--size", o.size, "grid size for built-in scenes")->capture_default_str();
  cmd->add_option("--pitch", o.pitch, "SLM pixel pitch, m")->capture_default_str();
  cmd->add_option("--wavelength", o.wavelength, "m")->capture_default_str();
  cmd->add_option("--eyebox", o.eyebox_mm, "eye-box diameter, mm; 0 keeps the full band")
      ->capture_default_str();
  cmd->add_option("--eye-relief", o.eye_relief, "m")->capture_default_str();
}

void write_manifest(const fs::path& out, const std::string& command, json config, json inputs,
                    json outputs, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["tool_version"] = POHLAB_VERSION;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  m["seed"] = seed;
  const fs::path path = out.string() + ".manifest.json";
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << m.dump(2) << '\n';
}

PhaseHologram read_poh_image(const fs::path& path, const Optics& o) {
  // Either a coded stream or a raw 8-bit PGM/PNG.
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  probe.read(magic, 4);
  if (probe.gcount() == 4 && std::string(magic, 4) == "POH1") {
    const auto d = decode(read_poh(path));
    return PhaseHologram(o.slm(d.width(), d.height()),
                         std::vector<std::uint8_t>(d.samples().begin(), d.samples().end()));
  }
  const auto img = read_gray_image(path);
  if (img.max_value != 255) throw UsageError("phase hologram images must be 8-bit");
  PhaseHologram poh(o.slm(img.pixels.width(), img.pixels.height()));
  for (std::size_t i = 0; i < poh.size(); ++i) poh[i] = static_cast<std::uint8_t>(img.pixels[i]);
  return poh;
}

Plane<std::uint8_t> as_plane(const PhaseHologram& poh) {
  return Plane<std::uint8_t>(poh.width(), poh.height(),
                             std::vector<std::uint8_t>(poh.samples().begin(), poh.samples().end()));
}

struct SceneArgs {
  std::string source = "builtin:sparse-cards";
  std::string depth_map;
  double depth = 0.5;
  double threshold = 0.05;
  double z_min = 0.25;
  double z_max = 5.0;
  int layers = 4;

  TargetScene load(const SlmParams& slm) const {
    if (depth_map.empty()) return resolve_scene(source, slm, depth, threshold);
    DepthMapConfig cfg{z_min, z_max, layers};
    return load_layered_scene(source, depth_map, cfg, threshold, slm);
  }
  json to_json() const {
    json j = {{"scene", source}, {"depth_m", depth}, {"threshold", threshold}};
    if (!depth_map.empty()) {
      j["depth_map"] = depth_map;
      j["z_min_m"] = z_min;
      j["z_max_m"] = z_max;
      j["depth_layers"] = layers;
    }
    return j;
  }
};

void add_scene(CLI::App* cmd, SceneArgs& s, bool required) {
  auto* opt = cmd->add_option("--scene", s.source, "image path or builtin:<name>");
  if (required) {
    opt->required();
  } else {
    opt->capture_default_str();
  }
  cmd->add_option("--depth", s.depth, "m")->capture_default_str();
  cmd->add_option("--threshold", s.threshold, "support threshold")->capture_default_str();
  cmd->add_option("--depth-map", s.depth_map, "8-bit depth map splitting the image into layers");
  cmd->add_option("--z-min", s.z_min)->capture_default_str();
  cmd->add_option("--z-max", s.z_max)->capture_default_str();
  cmd->add_option("--depth-layers", s.layers)->capture_default_str();
}

RoiMask resolve_roi(const std::string& roi, const PhaseHologram& poh, const SceneArgs& scene,
                    const Optics& o) {
  if (roi == "full") return RoiMask::full(poh.width(), poh.height());
  if (roi == "auto") {
    const auto& slm = poh.params();
    return roi_from_scene(scene.load(slm), slm, o.subhologram());
  }
  RoiMask mask(read_pbm(roi));
  if (mask.width() != poh.width() || mask.height() != poh.height()) {
    throw UsageError("RoI mask size does not match the hologram");
  }
  return mask;
}

FillSpec fill_spec(const std::string& mode, std::uint32_t value) {
  if (mode == "seeded") return FillSpec::seeded(value);
  if (mode == "constant") {
    if (value > 255) throw UsageError("constant fill must be 0..255");
    return FillSpec::constant(static_cast<std::uint8_t>(value));
  }
  throw UsageError("fill must be 'seeded' or 'constant'");
}

// Expands "simulate-session --config FILE" into flags placed before the
// explicit ones, so later flags win. Lines are "key = value"; '#' comments.
std::vector<std::string> expand_session_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2 || args[1] != "simulate-session") return args;
  std::vector<std::string> rest;
  std::vector<std::string> from_file;
  for (std::size_t i = 2; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream f(path);
    if (!f) throw IoError("cannot open session config " + path);
    std::string line;
    int n = 0;
    while (std::getline(f, line)) {
      ++n;
      line = line.substr(0, line.find('#'));
      const auto eq = line.find('=');
      auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return t.substr(b, t.find_last_not_of(" \t\r") - b + 1);
      };
      if (trim(line).empty()) continue;
      if (eq == std::string::npos) {
        throw UsageError("session config line " + std::to_string(n) + ": expected key = value");
      }
      from_file.push_back("--" + trim(line.substr(0, eq)));
      from_file.push_back(trim(line.substr(eq + 1)));
    }
  }
  std::vector<std::string> out = {args[0], args[1]};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-only hologram coding lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", POHLAB_VERSION);

  Optics optics;
  SceneArgs scene;
  std::string in, out, roi = "full", mode = "bitplane", fill = "seeded", trace_out, mask_in;
  std::string config_path, policy = "drop-fps";
  std::uint64_t seed = 1, channel_seed = 1;
  int bits = 3, levels = 0, layers = 0, iterations = 30, dilation = 8, threads = 0;
  std::uint32_t fill_value = 0x5EED;
  double beta = 0.5, duration = 10.0;
  bool wrap_aware = false, quantize_each = false;
  SessionConfig session;
  ChannelModel channel;

  auto* gen = app.add_subcommand("gen-cgh", "scene -> complex hologram (CFLD)");
  add_scene(gen, scene, true);
  add_optics(gen, optics, true);
  gen->add_option("--seed", seed, "diffuser seed")->capture_default_str();
  gen->add_option("--out", out)->required();

  auto* make = app.add_subcommand("make-poh", "complex hologram -> 8-bit POH (PGM) + trace CSV");
  make->add_option("--in", in, "CFLD file")->required();
  add_scene(make, scene, true);
  add_optics(make, optics, false);
  make->add_option("--iterations,-K", iterations)->capture_default_str();
  make->add_option("--beta", beta, "feedback; 0 = plain error reduction")->capture_default_str();
  make->add_option("--dilation", dilation, "signal mask dilation, px")->capture_default_str();
  make->add_option("--mask", mask_in, "PBM signal mask (overrides the default mask)");
  make->add_flag("--quantize-each-iter", quantize_each);
  make->add_option("--trace", trace_out, "trace CSV (default: <out>.trace.csv)");
  make->add_option("--out", out)->required();

  auto* enc = app.add_subcommand("encode", "POH -> .poh stream");
  enc->add_option("--in", in, "PGM or PNG")->required();
  enc->add_option("--roi", roi, "auto | full | mask.pbm")->capture_default_str();
  add_scene(enc, scene, false);
  add_optics(enc, optics, false);
  enc->add_option("--mode", mode, "bitplane | level")->capture_default_str();
  enc->add_option("--bits", bits, "bit planes")->capture_default_str();
  enc->add_option("--levels", levels, "level count (implies --mode level)");
  enc->add_flag("--wrap-aware", wrap_aware, "level mode: nearest level around the phase circle");
  enc->add_option("--fill", fill, "seeded | constant")->capture_default_str();
  enc->add_option("--fill-value", fill_value, "seed or constant sample")->capture_default_str();
  enc->add_option("--out", out)->required();

  auto* dec = app.add_subcommand("decode", ".poh stream -> POH (PGM)");
  dec->add_option("--in", in)->required();
  dec->add_option("--layers", layers, "layers to use; 0 = all present")->capture_default_str();
  dec->add_option("--out", out)->required();

  auto* rec = app.add_subcommand("reconstruct", "POH or .poh -> reconstructed intensity (PNG)");
  rec->add_option("--in", in)->required();
  rec->add_option("--depth", scene.depth, "m")->required();
  add_optics(rec, optics, false);
  rec->add_option("--out", out)->required();

  auto* rd = app.add_subcommand("eval-rd", "rate-distortion sweep -> CSV");
  rd->add_option("--config", config_path, "sweep description")->required();
  rd->add_option("--threads", threads, "0 = POHLAB_THREADS or all cores")->capture_default_str();
  rd->add_option("--out", out)->required();

  auto* sim = app.add_subcommand("simulate-session", "adaptive streaming over a simulated channel");
  sim->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string session_file;
  sim->add_option("--config", session_file, "key = value session file; explicit flags override it");
  add_scene(sim, scene, false);
  add_optics(sim, optics, true);
  sim->add_option("--seed", seed, "diffuser seed")->capture_default_str();
  sim->add_option("--iterations,-K", iterations)->capture_default_str();
  sim->add_option("--roi", roi, "auto | full | mask.pbm")->capture_default_str();
  sim->add_option("--fps", session.fps)->capture_default_str();
  sim->add_option("--eyes", session.eyes)->capture_default_str();
  sim->add_option("--pixels-per-eye", session.pixels_per_eye, "budgeted pixels per eye")
      ->capture_default_str();
  sim->add_option("--slm-bits", session.slm_effective_bits)->capture_default_str();
  sim->add_option("--overhead", session.overhead_factor)->capture_default_str();
  sim->add_option("--channel-min", channel.min_mbps)->capture_default_str();
  sim->add_option("--channel-max", channel.max_mbps)->capture_default_str();
  sim->add_option("--channel-initial", channel.initial_mbps)->capture_default_str();
  sim->add_option("--channel-step", channel.step_mbps, "max change per update, Mbit/s")
      ->capture_default_str();
  sim->add_option("--channel-interval", channel.update_interval, "s")->capture_default_str();
  sim->add_option("--channel-seed", channel_seed)->capture_default_str();
  sim->add_option("--duration", duration, "s")->capture_default_str();
  sim->add_option("--policy", policy, "drop-fps | shrink-roi")->capture_default_str();
  sim->add_option("--fill", fill, "seeded | constant")->capture_default_str();
  sim->add_option("--fill-value", fill_value)->capture_default_str();
  sim->add_option("--out", out)->required();

  try {
    std::vector<std::string> args;
    try {
      args = expand_session_config(argc, argv);
    } catch (const Error& e) {
      std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
      return static_cast<int>(e.code());
    }
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "E_USAGE: " << e.what() << '\n';
    return static_cast<int>(ErrorCode::kUsage);
  }

  try {
    if (*gen) {
      const auto slm = optics.slm();
      const auto target = scene.load(slm);
      CghOptions opts;
      opts.diffuser_cutoff = optics.cutoff(target.focus_depth(), slm);
      write_cfld(out, generate_complex_hologram(target, slm, seed, opts));
      json cfg = scene.to_json();
      cfg["size"] = optics.size;
      cfg["optics"] = optics.to_json();
      write_manifest(out, "gen-cgh", cfg, {{"scene", scene.source}}, {{"cfld", out}}, seed);
    } else if (*make) {
      const auto field = read_cfld(in, optics.pitch, optics.wavelength);
      const auto target = scene.load(field.params());
      FidocConfig cfg;
      cfg.iterations = iterations;
      cfg.feedback = beta;
      cfg.quantize_each_iter = quantize_each;
      cfg.aperture_cutoff = optics.cutoff(target.focus_depth(), field.params());
      cfg.signal_mask = mask_in.empty() ? default_signal_mask(target, dilation) : read_pbm(mask_in);
      const auto result = fidoc(field, target, cfg);
      write_pgm(out, as_plane(result.poh));
      if (trace_out.empty()) trace_out = out + ".trace.csv";
      write_trace_csv(trace_out, result.trace);
      json c = scene.to_json();
      c["iterations"] = iterations;
      c["beta"] = beta;
      c["dilation"] = dilation;
      c["quantize_each_iter"] = quantize_each;
      c["optics"] = optics.to_json();
      json inputs = {{"cfld", in}, {"scene", scene.source}};
      if (!mask_in.empty()) inputs["signal_mask"] = mask_in;
      write_manifest(out, "make-poh", c, inputs, {{"poh", out}, {"trace", trace_out}}, 0);
    } else if (*enc) {
      const auto poh = read_poh_image(in, optics);
      const auto mask = resolve_roi(roi, poh, scene, optics);
      const auto spec = fill_spec(fill, fill_value);
      if (levels > 0) mode = "level";
      PohBitstream stream;
      if (mode == "bitplane") {
        stream = encode(poh, mask, bits, spec);
      } else if (mode == "level") {
        if (levels == 0) throw UsageError("level mode needs --levels");
        stream = encode_levels(poh, mask, levels, spec, wrap_aware);
      } else {
        throw UsageError("mode must be 'bitplane' or 'level'");
      }
      write_poh(out, stream);
      json c = {{"roi", roi},
                {"mode", mode},
                {"fill", fill},
                {"fill_value", fill_value},
                {"roi_fraction", mask.coded_fraction()},
                {"bpp_total", stream.bpp_total()}};
      if (mode == "bitplane") {
        c["bits"] = bits;
      } else {
        c["levels"] = levels;
        c["wrap_aware"] = wrap_aware;
      }
      if (roi == "auto") {
        c["scene"] = scene.to_json();
        c["optics"] = optics.to_json();
      }
      write_manifest(out, "encode", c, {{"poh", in}}, {{"stream", out}}, fill_value);
    } else if (*dec) {
      const auto stream = read_poh(in);
      write_pgm(out, as_plane(decode(stream, layers)));
      write_manifest(out, "decode", {{"layers", layers}, {"layers_present", stream.layers_present()}},
                     {{"stream", in}}, {{"poh", out}}, 0);
    } else if (*rec) {
      const auto poh = read_poh_image(in, optics);
      PropagationOptions opts;
      opts.aperture_cutoff = optics.cutoff(scene.depth, poh.params());
      emit_reconstruction_png(out, poh, scene.depth, opts);
      write_manifest(out, "reconstruct", {{"depth_m", scene.depth}, {"optics", optics.to_json()}},
                     {{"poh", in}}, {{"png", out}}, 0);
    } else if (*rd) {
      auto cfg = load_sweep_config(config_path);
      if (threads != 0) cfg.threads = threads;
      const auto points = rd_sweep(cfg);
      emit_rd_csv(out, points);
      json seeds = json::array();
      for (auto s : cfg.seeds) seeds.push_back(s);
      write_manifest(out, "eval-rd",
                     {{"scene", cfg.scene},
                      {"size", cfg.size},
                      {"depths_m", cfg.depths},
                      {"seeds", seeds},
                      {"iterations", cfg.iterations},
                      {"feedback", cfg.feedback},
                      {"dilation", cfg.dilation},
                      {"threads", resolve_thread_count(cfg.threads)},
                      {"points", points.size()}},
                     {{"config", config_path}}, {{"csv", out}}, cfg.seeds.empty() ? 0 : cfg.seeds[0]);
    } else if (*sim) {
      session.validate();
      channel.seed = channel_seed;
      const auto slm = optics.slm();
      const auto target = scene.load(slm);
      const double depth = target.focus_depth();
      const auto poh = make_cell_poh(target, slm, seed, iterations);
      const auto mask = resolve_roi(roi, poh, scene, optics);
      SessionOptions opts;
      opts.duration = duration;
      if (policy == "drop-fps") {
        opts.policy = InfeasiblePolicy::kDropFrameRate;
      } else if (policy == "shrink-roi") {
        opts.policy = InfeasiblePolicy::kShrinkRoi;
      } else {
        throw UsageError("policy must be 'drop-fps' or 'shrink-roi'");
      }
      opts.fill = fill_spec(fill, fill_value);
      opts.reconstruction.aperture_cutoff = optics.cutoff(depth, slm);
      const auto frames = run_session(poh, mask, depth, session, channel, opts);
      write_session_csv(out, frames);
      json c = scene.to_json();
      c["size"] = optics.size;
      c["iterations"] = iterations;
      c["roi"] = roi;
      c["roi_fraction"] = mask.coded_fraction();
      c["fps"] = session.fps;
      c["eyes"] = session.eyes;
      c["pixels_per_eye"] = session.pixels_per_eye;
      c["slm_bits"] = session.slm_effective_bits;
      c["overhead"] = session.overhead_factor;
      c["channel"] = {{"min_mbps", channel.min_mbps},     {"max_mbps", channel.max_mbps},
                      {"initial_mbps", channel.initial_mbps}, {"step_mbps", channel.step_mbps},
                      {"interval_s", channel.update_interval}, {"seed", channel_seed}};
      c["duration_s"] = duration;
      c["policy"] = policy;
      c["optics"] = optics.to_json();
      write_manifest(out, "simulate-session", c, {{"scene", scene.source}}, {{"csv", out}}, seed);
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "E_IO: " << e.what() << '\n';
    return static_cast<int>(ErrorCode::kIo);
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
