#include "pohlab/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pohlab {
namespace {

// One pass of a box max over a line via prefix counts.
void dilate_line(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t stride,
                 int radius, std::vector<int>& prefix) {
  prefix.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (in[i * stride] != 0);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - radius);
    const int hi = std::min(n, i + radius + 1);
    out[i * stride] = prefix[hi] - prefix[lo] > 0;
  }
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + q * static_cast<double>(q)) - (f[p] + p * static_cast<double>(p))) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates the whole range.
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d, d + n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

Mask dilate_square(const Mask& mask, int radius) {
  if (radius < 0) throw UsageError("dilation radius must be non-negative");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  Mask rows(w, h), out(w, h);
  std::vector<int> prefix;
  for (int y = 0; y < h; ++y) {
    dilate_line(&mask.values()[static_cast<std::size_t>(y) * w],
                &rows.values()[static_cast<std::size_t>(y) * w], w, 1, radius, prefix);
  }
  for (int x = 0; x < w; ++x) {
    dilate_line(&rows.values()[x], &out.values()[x], h, w, radius, prefix);
  }
  return out;
}

Plane<double> squared_distance_transform(const Mask& mask) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int w = mask.width();
  const int h = mask.height();
  Plane<double> grid(w, h, inf);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) grid[i] = 0.0;
  }
  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> col_in(h), col_out(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col_in[y] = grid.at(x, y);
    edt_1d(col_in.data(), col_out.data(), h, v, z);
    for (int y = 0; y < h; ++y) grid.at(x, y) = col_out[y];
  }
  std::vector<double> row_out(w);
  for (int y = 0; y < h; ++y) {
    double* row = &grid.values()[static_cast<std::size_t>(y) * w];
    edt_1d(row, row_out.data(), w, v, z);
    std::copy(row_out.begin(), row_out.end(), row);
  }
  return grid;
}

Mask dilate_disk(const Mask& mask, double radius) {
  if (!(radius >= 0.0)) throw UsageError("dilation radius must be non-negative");
  const auto d2 = squared_distance_transform(mask);
  const double r2 = radius * radius;
  Mask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d2[i] <= r2;
  return out;
}

Mask interior_mask(int width, int height, int guard) {
  Mask m(width, height);
  for (int y = guard; y < height - guard; ++y) {
    for (int x = guard; x < width - guard; ++x) m.at(x, y) = 1;
  }
  return m;
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw UsageError("mask shapes differ");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

}  // namespace pohlab
