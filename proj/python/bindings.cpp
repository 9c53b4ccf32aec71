#include <pybind11/complex.h>
#include <pybind11/gil_safe_call_once.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "pohlab/baselines.hpp"
#include "pohlab/eval.hpp"
#include "pohlab/phase_retrieval.hpp"
#include "pohlab/pohcodec.hpp"
#include "pohlab/rate_control.hpp"
#include "pohlab/scenes.hpp"
#include "pohlab/subhologram.hpp"

namespace py = pybind11;
using namespace pohlab;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

SlmParams grid(int width, int height, double pitch, double wavelength) {
  SlmParams p;
  p.width = width;
  p.height = height;
  p.pixel_pitch = pitch;
  p.wavelength = wavelength;
  p.validate();
  return p;
}

template <typename T>
std::pair<int, int> shape_of(const Array<T>& a) {
  if (a.ndim() != 2) throw UsageError("expected a 2-D array");
  return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
}

template <typename T>
Array<T> to_array(std::span<const T> values, int width, int height) {
  Array<T> out({height, width});
  std::memcpy(out.mutable_data(), values.data(), values.size() * sizeof(T));
  return out;
}

PhaseHologram to_poh(const Array<std::uint8_t>& a, double pitch, double wavelength) {
  const auto [w, h] = shape_of(a);
  return PhaseHologram(grid(w, h, pitch, wavelength),
                       std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

Array<std::uint8_t> from_poh(const PhaseHologram& p) {
  return to_array<std::uint8_t>(p.samples(), p.width(), p.height());
}

ComplexField to_field(const Array<Complex>& a, double pitch, double wavelength) {
  const auto [w, h] = shape_of(a);
  return ComplexField(grid(w, h, pitch, wavelength),
                      std::vector<Complex>(a.data(), a.data() + a.size()));
}

Array<Complex> from_field(const ComplexField& f) {
  return to_array<Complex>(f.data(), f.width(), f.height());
}

Array<double> from_plane(const Plane<double>& p) {
  return to_array<double>(p.values(), p.width(), p.height());
}

Plane<double> to_plane(const Array<double>& a) {
  const auto [w, h] = shape_of(a);
  return Plane<double>(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

RoiMask to_roi(const py::object& roi, int width, int height) {
  if (roi.is_none()) return RoiMask::full(width, height);
  const auto a = roi.cast<Array<bool>>();
  const auto [w, h] = shape_of(a);
  if (w != width || h != height) throw UsageError("RoI mask does not match the hologram");
  Mask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.data()[i] ? 1 : 0;
  return RoiMask(std::move(m));
}

FillSpec fill_of(const std::string& mode, std::uint32_t value) {
  if (mode == "seeded") return FillSpec::seeded(value);
  if (mode == "constant") return FillSpec::constant(static_cast<std::uint8_t>(value));
  throw UsageError("fill must be 'seeded' or 'constant'");
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

py::dict point_dict(const RdPoint& p) {
  py::dict d;
  d["method"] = p.method;
  d["bpp"] = p.bpp;
  d["psnr_db"] = p.psnr_db;
  d["depth_m"] = p.depth_m;
  d["seed"] = p.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pohlab, m) {
  m.doc() = "Phase-only hologram generation, coding and evaluation";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> base;
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> codec;
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> capacity;
  base.call_once_and_store_result(
      [&] { return py::exception<Error>(m, "PohlabError", PyExc_RuntimeError); });
  codec.call_once_and_store_result(
      [&] { return py::exception<CodecError>(m, "CodecError", base.get_stored().ptr()); });
  capacity.call_once_and_store_result(
      [&] { return py::exception<CapacityError>(m, "CapacityError", base.get_stored().ptr()); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const UsageError& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      py::set_error(PyExc_OSError, e.what());
    } catch (const CodecError& e) {
      py::set_error(codec.get_stored(), e.what());
    } catch (const CapacityError& e) {
      py::set_error(capacity.get_stored(), e.what());
    } catch (const Error& e) {
      py::set_error(base.get_stored(), e.what());
    }
  });

  m.attr("PSNR_CAP") = kPsnrCap;
  m.attr("MAX_USERS") = kMaxUsers;

  // wavefield
  m.def("propagate",
        [](const Array<Complex>& field, double z, double pitch, double wavelength, double aperture,
           int padding) {
          PropagationOptions o{aperture, padding};
          return from_field(propagate(to_field(field, pitch, wavelength), z, o));
        },
        py::arg("field"), py::arg("z"), py::arg("pitch") = 8e-6, py::arg("wavelength") = 638e-9,
        py::arg("aperture_cutoff") = 0.0, py::arg("padding") = 1);
  m.def("aliasing_free_distance",
        [](int size, double pitch, double wavelength) {
          return aliasing_free_distance(grid(size, size, pitch, wavelength));
        },
        py::arg("size") = 512, py::arg("pitch") = 8e-6, py::arg("wavelength") = 638e-9);
  m.def("phase_to_field", [](const Array<std::uint8_t>& poh) {
    return from_field(phase_to_field(to_poh(poh, 8e-6, 638e-9)));
  });
  m.def("field_to_phase",
        [](const Array<Complex>& f) { return from_poh(field_to_phase(to_field(f, 8e-6, 638e-9))); });

  // scenes, CGH, phase retrieval
  m.def("builtin_scene_names", &builtin_scene_names);
  m.def("scene_amplitude",
        [](const std::string& source, int size, double depth, double threshold) {
          return from_plane(resolve_scene(source, SlmParams::desk(size), depth, threshold)
                                .focus_amplitude());
        },
        py::arg("scene") = "builtin:sparse-cards", py::arg("size") = 512, py::arg("depth") = 0.5,
        py::arg("threshold") = 0.05);
  m.def("generate_complex_hologram",
        [](const std::string& source, int size, double depth, std::uint64_t seed,
           double diffuser_cutoff) {
          const auto slm = SlmParams::desk(size);
          return from_field(generate_complex_hologram(resolve_scene(source, slm, depth), slm, seed,
                                                      CghOptions{diffuser_cutoff}));
        },
        py::arg("scene") = "builtin:sparse-cards", py::arg("size") = 512, py::arg("depth") = 0.5,
        py::arg("seed") = 1, py::arg("diffuser_cutoff") = 0.0);
  m.def("fidoc",
        [](const Array<Complex>& hologram, const std::string& source, double depth, int iterations,
           double feedback, int dilation, double aperture_cutoff) {
          const auto field = to_field(hologram, 8e-6, 638e-9);
          const auto scene = resolve_scene(source, field.params(), depth);
          FidocConfig cfg;
          cfg.iterations = iterations;
          cfg.feedback = feedback;
          cfg.aperture_cutoff = aperture_cutoff;
          cfg.signal_mask = default_signal_mask(scene, dilation);
          const auto r = fidoc(field, scene, cfg);
          return py::make_tuple(from_poh(r.poh), r.trace.rmse);
        },
        py::arg("hologram"), py::arg("scene") = "builtin:sparse-cards", py::arg("depth") = 0.5,
        py::arg("iterations") = 30, py::arg("feedback") = 0.5, py::arg("dilation") = 8,
        py::arg("aperture_cutoff") = 0.0,
        "Returns (poh, rmse trace).");
  m.def("make_poh",
        [](const std::string& source, int size, double depth, std::uint64_t seed, int iterations,
           double feedback, int dilation) {
          const auto slm = SlmParams::desk(size);
          return from_poh(make_cell_poh(resolve_scene(source, slm, depth), slm, seed, iterations,
                                        feedback, dilation));
        },
        py::arg("scene") = "builtin:sparse-cards", py::arg("size") = 512, py::arg("depth") = 0.5,
        py::arg("seed") = 1, py::arg("iterations") = 30, py::arg("feedback") = 0.5,
        py::arg("dilation") = 8);
  m.def("eyebox_cutoff",
        [](double diameter, double eye_relief, double z, int size) {
          return eyebox_cutoff(SubhologramParams{diameter, eye_relief, false}, z, SlmParams::desk(size));
        },
        py::arg("eyebox_diameter"), py::arg("eye_relief"), py::arg("z"), py::arg("size") = 512);
  m.def("roi_from_scene",
        [](const std::string& source, int size, double depth, double diameter, double eye_relief) {
          const auto slm = SlmParams::desk(size);
          const auto roi = roi_from_scene(resolve_scene(source, slm, depth), slm,
                                          SubhologramParams{diameter, eye_relief, false});
          Array<bool> out({size, size});
          for (std::size_t i = 0; i < roi.size(); ++i) out.mutable_data()[i] = roi[i];
          return out;
        },
        py::arg("scene") = "builtin:sparse-cards", py::arg("size") = 512, py::arg("depth") = 0.5,
        py::arg("eyebox_diameter") = 4e-3, py::arg("eye_relief") = 0.02);

  // quantizers and the POH codec
  m.def("quantizer_levels", &quantizer_levels);
  m.def("nominal_level_rate", &nominal_level_rate);
  m.def("quantize_levels",
        [](const Array<std::uint8_t>& poh, int levels, bool wrap_aware) {
          return from_poh(quantize_levels(to_poh(poh, 8e-6, 638e-9), levels, wrap_aware));
        },
        py::arg("poh"), py::arg("levels"), py::arg("wrap_aware") = false);
  m.def("quantize_bitplanes",
        [](const Array<std::uint8_t>& poh, int bits) {
          return from_poh(quantize_bitplanes(to_poh(poh, 8e-6, 638e-9), bits));
        },
        py::arg("poh"), py::arg("bits"));
  m.def("encode",
        [](const Array<std::uint8_t>& poh, int bits, const py::object& roi, const std::string& fill,
           std::uint32_t fill_value) {
          const auto p = to_poh(poh, 8e-6, 638e-9);
          return to_bytes(encode(p, to_roi(roi, p.width(), p.height()), bits, fill_of(fill, fill_value))
                              .serialize());
        },
        py::arg("poh"), py::arg("bits"), py::arg("roi") = py::none(), py::arg("fill") = "seeded",
        py::arg("fill_value") = 0x5EED, "Bit-plane stream; roi=None codes every pixel.");
  m.def("encode_levels",
        [](const Array<std::uint8_t>& poh, int levels, const py::object& roi, const std::string& fill,
           std::uint32_t fill_value, bool wrap_aware) {
          const auto p = to_poh(poh, 8e-6, 638e-9);
          return to_bytes(encode_levels(p, to_roi(roi, p.width(), p.height()), levels,
                                        fill_of(fill, fill_value), wrap_aware)
                              .serialize());
        },
        py::arg("poh"), py::arg("levels"), py::arg("roi") = py::none(), py::arg("fill") = "seeded",
        py::arg("fill_value") = 0x5EED, py::arg("wrap_aware") = false);
  m.def("decode",
        [](const py::bytes& stream, int layers) {
          const auto bytes = from_bytes(stream);
          return from_poh(decode(std::span<const std::uint8_t>(bytes), layers));
        },
        py::arg("stream"), py::arg("layers") = 0, "layers=0 uses every layer present.");
  m.def("stream_info", [](const py::bytes& stream) {
    const auto bytes = from_bytes(stream);
    const auto s = PohBitstream::parse_prefix(bytes);
    py::dict d;
    d["width"] = s.header().width;
    d["height"] = s.header().height;
    d["mode"] = s.header().mode == CodingMode::kBitPlane ? "bitplane" : "level";
    d["layers"] = s.header().layer_count;
    d["layers_present"] = s.layers_present();
    d["coded_pixels"] = s.coded_pixels();
    d["bpp_total"] = s.bpp_total();
    d["bpp_payload"] = s.bpp_payload();
    return d;
  });

  // baselines
  m.def("bits_for_span", &bits_for_span);
  m.def("dct_roundtrip",
        [](const Array<std::uint8_t>& poh, const std::string& scheme, double step, int quality) {
          const auto p = to_poh(poh, 8e-6, 638e-9);
          DctCodecConfig cfg;
          if (scheme == "flat") {
            cfg = DctCodecConfig::flat(step);
          } else if (scheme == "default") {
            cfg = DctCodecConfig::standard(quality);
          } else {
            throw UsageError("scheme must be 'flat' or 'default'");
          }
          const auto stream = dct_encode(poh_samples(p), cfg);
          const double bpp = 8.0 * static_cast<double>(stream.size()) / static_cast<double>(p.size());
          return py::make_tuple(from_poh(samples_to_poh(dct_decode(stream), p.params())), bpp);
        },
        py::arg("poh"), py::arg("scheme") = "flat", py::arg("step") = 8.0, py::arg("quality") = 50,
        "Returns (decoded poh, bpp).");

  // evaluation
  m.def("reconstruct",
        [](const Array<std::uint8_t>& poh, double depth, double aperture_cutoff) {
          return from_plane(reconstruct(to_poh(poh, 8e-6, 638e-9), depth, {aperture_cutoff, 1}));
        },
        py::arg("poh"), py::arg("depth"), py::arg("aperture_cutoff") = 0.0);
  m.def("reconstruction_psnr",
        [](const Array<std::uint8_t>& ref, const Array<std::uint8_t>& test, double depth,
           double aperture_cutoff) {
          return reconstruction_psnr(to_poh(ref, 8e-6, 638e-9), to_poh(test, 8e-6, 638e-9), depth,
                                     {aperture_cutoff, 1});
        },
        py::arg("reference"), py::arg("test"), py::arg("depth"), py::arg("aperture_cutoff") = 0.0);
  m.def("intensity_psnr", [](const Array<double>& ref, const Array<double>& test) {
    return intensity_psnr(to_plane(ref), to_plane(test));
  });
  m.def("rd_sweep",
        [](const std::string& config_text) {
          const auto cfg = parse_sweep_config(config_text);
          std::vector<RdPoint> pts;
          {
            py::gil_scoped_release release;
            pts = rd_sweep(cfg);
          }
          py::list out;
          for (const auto& p : pts) out.append(point_dict(p));
          return out;
        },
        py::arg("config"), "Runs a sweep described in the key = value config format.");
  m.def("log_spaced_depths", &log_spaced_depths, py::arg("n") = 12, py::arg("lo") = 0.25,
        py::arg("hi") = 5.0);

  // rate control
  m.def("select_coding_params",
        [](double available_mbps, double roi_fraction, double fps, int eyes, std::int64_t pixels,
           int slm_bits) {
          SessionConfig cfg;
          cfg.fps = fps;
          cfg.eyes = eyes;
          cfg.pixels_per_eye = pixels;
          cfg.slm_effective_bits = slm_bits;
          const auto d = select_coding_params(available_mbps, roi_fraction, cfg);
          const auto s = compression_summary(d, cfg);
          py::dict r;
          r["bits"] = d.bits;
          r["predicted_mbps"] = d.predicted_mbps;
          r["rate_infeasible"] = d.rate_infeasible;
          r["uncompressed_mbps"] = s.uncompressed_mbps;
          r["ratio"] = s.ratio;
          return r;
        },
        py::arg("available_mbps"), py::arg("roi_fraction"), py::arg("fps") = 60.0,
        py::arg("eyes") = 2, py::arg("pixels_per_eye") = kFullHdPixels, py::arg("slm_bits") = 4);
  m.def("predicted_rate_mbps",
        [](int bits, double roi_fraction) { return predicted_rate_mbps(bits, roi_fraction, {}); },
        py::arg("bits"), py::arg("roi_fraction"), "Full HD, 60 fps, two eyes, 2% overhead.");
  m.def("allocate_users", [](int n) {
    std::vector<std::pair<int, int>> out;
    for (const auto& s : allocate_users(n)) out.emplace_back(s.channel, s.stream);
    return out;
  });
}
