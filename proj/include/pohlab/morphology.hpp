#pragma once

#include "pohlab/plane.hpp"

namespace pohlab {

/// Dilation by a (2r+1)x(2r+1) square structuring element.
Mask dilate_square(const Mask& mask, int radius);

/// Marks every pixel whose Euclidean distance to a set pixel is <= radius.
Mask dilate_disk(const Mask& mask, double radius);

/// Exact squared Euclidean distance to the nearest set pixel (infinity if none).
Plane<double> squared_distance_transform(const Mask& mask);

/// True everywhere except a border of `guard` pixels.
Mask interior_mask(int width, int height, int guard);

Mask mask_and(const Mask& a, const Mask& b);

}  // namespace pohlab
