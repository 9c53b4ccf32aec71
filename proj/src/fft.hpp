#pragma once

#include <complex>
#include <span>

namespace pohlab::detail {

/// In-place 2D DFT of a row-major width x height array. The forward transform
/// is unnormalized; the inverse divides by width*height.
void fft2d(std::span<std::complex<double>> data, int width, int height, bool inverse);

}  // namespace pohlab::detail
