#include "defkern/resample.hpp"

#include <cmath>

namespace defkern {

namespace {

struct Corners {
    // Up to two integer corners per axis within the support of a coordinate.
    int idx[2];
    real w[2];
    real slope[2];
    int n = 0;
};

// Enumerate the integer corners along one axis that fall inside [0, extent)
// and lie within the support of coordinate c. A corner at distance exactly 1
// carries zero weight and zero slope, so keeping it is harmless.
Corners axis_corners(real c, int extent) {
    Corners out;
    const int lo = static_cast<int>(std::floor(c));
    for (int i = lo; i <= lo + 1; ++i) {
        if (i < 0 || i >= extent) continue;
        const real d = c - static_cast<real>(i);
        out.idx[out.n] = i;
        out.w[out.n] = hat_weight(d);
        out.slope[out.n] = hat_slope(d);
        ++out.n;
    }
    return out;
}

int temporal_center(const Tensor& volume) {
    check_shape(volume.rank() == 3, "sample_trilinear: volume must be [H,W,T]");
    check_shape(volume.dim(2) % 2 == 1, "sample_trilinear: frame count must be odd");
    return (volume.dim(2) - 1) / 2;
}

}  // namespace

real sample_trilinear(const Tensor& volume, real y, real x, real t) {
    const int tau = temporal_center(volume);
    const Corners cy = axis_corners(y, volume.dim(0));
    const Corners cx = axis_corners(x, volume.dim(1));
    const Corners ct = axis_corners(t + tau, volume.dim(2));
    real acc = 0.0;
    for (int a = 0; a < cy.n; ++a)
        for (int b = 0; b < cx.n; ++b)
            for (int c = 0; c < ct.n; ++c)
                acc += volume.at(cy.idx[a], cx.idx[b], ct.idx[c]) * cy.w[a] * cx.w[b] * ct.w[c];
    return acc;
}

void sample_trilinear_backward(const Tensor& volume, real y, real x, real t, real g,
                               Tensor& grad_volume, real& gy, real& gx, real& gt) {
    const int tau = temporal_center(volume);
    check_shape(grad_volume.same_shape(volume),
                "sample_trilinear_backward: grad_volume shape mismatch");
    const Corners cy = axis_corners(y, volume.dim(0));
    const Corners cx = axis_corners(x, volume.dim(1));
    const Corners ct = axis_corners(t + tau, volume.dim(2));
    gy = gx = gt = 0.0;
    for (int a = 0; a < cy.n; ++a)
        for (int b = 0; b < cx.n; ++b)
            for (int c = 0; c < ct.n; ++c) {
                const real xv = volume.at(cy.idx[a], cx.idx[b], ct.idx[c]);
                const real wy = cy.w[a], wx = cx.w[b], wt = ct.w[c];
                grad_volume.at(cy.idx[a], cx.idx[b], ct.idx[c]) += g * wy * wx * wt;
                gy += g * xv * cy.slope[a] * wx * wt;
                gx += g * xv * wy * cx.slope[b] * wt;
                gt += g * xv * wy * wx * ct.slope[c];
            }
}

real sample_bilinear(const Tensor& frame, real y, real x) {
    check_shape(frame.rank() == 2, "sample_bilinear: frame must be [H,W]");
    const Corners cy = axis_corners(y, frame.dim(0));
    const Corners cx = axis_corners(x, frame.dim(1));
    real acc = 0.0;
    for (int a = 0; a < cy.n; ++a)
        for (int b = 0; b < cx.n; ++b) acc += frame.at(cy.idx[a], cx.idx[b]) * cy.w[a] * cx.w[b];
    return acc;
}

void sample_bilinear_backward(const Tensor& frame, real y, real x, real g, Tensor& grad_frame,
                              real& gy, real& gx) {
    check_shape(frame.rank() == 2, "sample_bilinear_backward: frame must be [H,W]");
    check_shape(grad_frame.same_shape(frame), "sample_bilinear_backward: grad shape mismatch");
    const Corners cy = axis_corners(y, frame.dim(0));
    const Corners cx = axis_corners(x, frame.dim(1));
    gy = gx = 0.0;
    for (int a = 0; a < cy.n; ++a)
        for (int b = 0; b < cx.n; ++b) {
            const real xv = frame.at(cy.idx[a], cx.idx[b]);
            grad_frame.at(cy.idx[a], cx.idx[b]) += g * cy.w[a] * cx.w[b];
            gy += g * xv * cy.slope[a] * cx.w[b];
            gx += g * xv * cy.w[a] * cx.slope[b];
        }
}

}  // namespace defkern
