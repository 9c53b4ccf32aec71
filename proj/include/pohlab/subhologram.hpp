#pragma once

#include "pohlab/wavefield.hpp"

namespace pohlab {

/// Eye-box geometry that bounds the SLM footprint of a single object point.
struct SubhologramParams {
  double eyebox_diameter = 4e-3;  // meters
  double eye_relief = 0.02;       // meters, eye to SLM
  bool diffraction_cap = false;   // also bound by the SLM diffraction angle

  void validate() const;
};

/// Footprint radius on the SLM, in meters, of a point at depth z:
/// (D/2) * z / (z + z_e), optionally capped at z * tan(asin(lambda / (2 pitch))).
double subhologram_radius(const SubhologramParams& sub, double z, const SlmParams& slm);

/// Fourier-plane pupil radius, in cycles/m, whose geometric footprint at
/// depth z equals subhologram_radius: (D/2) / (lambda * (z + z_e)). With the
/// diffraction cap it never exceeds the SLM Nyquist frequency.
double eyebox_cutoff(const SubhologramParams& sub, double z, const SlmParams& slm);

}  // namespace pohlab
