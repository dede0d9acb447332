#pragma once

// Bilinear and trilinear point sampling with implicit zero padding, plus the
// analytic derivatives of a sample with respect to its continuous sampling
// coordinates.
//
// Coordinate conventions:
//   - y in [0, H-1], x in [0, W-1]: storage indices of the first two axes.
//   - t is centered: the reference (middle) frame of a [H,W,T] volume is
//     t == 0, so valid frames span [-(T-1)/2, +(T-1)/2]. T must be odd.
//     Bilinear sampling is the T == 1, t == 0 degenerate case.
//   - Points farther than 1 from every grid node in any dimension blend with
//     zeros, which acts as zero padding at image and sequence borders.

#include "defkern/tensor.hpp"

namespace defkern {

// Derivative factor of the hat weight max(0, 1-|d|) with respect to the
// continuous coordinate, where d = coord - corner:
//   0 when |d| >= 1 (corner out of support),
//   +1 when -1 < d < 0 (coordinate left of the corner),
//   -1 otherwise (0 <= d < 1, including exactly d == 0).
inline real hat_slope(real d) {
    if (d >= 1.0 || d <= -1.0) return 0.0;
    return d < 0.0 ? 1.0 : -1.0;
}

inline real hat_weight(real d) {
    const real a = d < 0 ? -d : d;
    return a < 1.0 ? 1.0 - a : 0.0;
}

// Value of volume [H,W,T] at continuous coordinates (y, x, t), t centered.
real sample_trilinear(const Tensor& volume, real y, real x, real t);

// Gradient of a scalar objective through one trilinear sample. `g` is
// dL/d(sample). Accumulates dL/dX into grad_volume (same shape as volume,
// at most 8 entries touched) and writes (dL/dy, dL/dx, dL/dt).
void sample_trilinear_backward(const Tensor& volume, real y, real x, real t, real g,
                               Tensor& grad_volume, real& gy, real& gx, real& gt);

// Single-frame counterparts on [H,W] images.
real sample_bilinear(const Tensor& frame, real y, real x);
void sample_bilinear_backward(const Tensor& frame, real y, real x, real g, Tensor& grad_frame,
                              real& gy, real& gx);

}  // namespace defkern
