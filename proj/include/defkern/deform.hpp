#pragma once

// Rigid sampling grids and the deformable filtering operators. A deformable
// kernel samples the input at per-pixel displaced positions and combines the
// samples with per-pixel weights.
//
// Offset-field layout: V is [H,W,N,2] or [H,W,N,3] with component order
//   comp 0 = dx (horizontal), comp 1 = dy (vertical), comp 2 = dt (temporal),
// matching the (x, y, t) component convention of the offset definition.
// Weights F are [H,W,N] and carry unconstrained sign.
//
// Tap order is row-major over the (dy, dx[, dt]) lattice with dt innermost,
// so contiguous tap blocks (the grouping used by the annealed regularizer)
// mix all temporal planes.

#include <vector>

#include "defkern/autodiff.hpp"
#include "defkern/tensor.hpp"

namespace defkern {

struct Tap {
    int dy = 0;
    int dx = 0;
    int dt = 0;
};

struct RigidGrid {
    std::vector<Tap> taps;
    bool temporal = false;  // true when built with an explicit kt

    int size() const { return static_cast<int>(taps.size()); }
};

// Integer lattice of an odd-sized kernel centered at the origin.
RigidGrid rigid_grid(int kh, int kw);
RigidGrid rigid_grid(int kh, int kw, int kt);

// --- Pure (non-differentiable) filtering, used for inference and as the
// --- reference the taped path is tested against.

// Y(y,x) = sum_n F(y,x,n) * bilinear(X, y + dy_n + V(y,x,n,1),
//                                       x + dx_n + V(y,x,n,0))
Tensor filter2d_deformable(const Tensor& x_img, const RigidGrid& grid, const Tensor& v,
                           const Tensor& f);

// Eq-by-frame variant: an independent 2D deformable kernel per frame, whose
// results are summed. v_t/f_t hold one [H,W,N,2] / [H,W,N] pair per frame.
Tensor filter2d_per_frame(const Tensor& x_seq, const RigidGrid& grid,
                          const std::vector<Tensor>& v_t, const std::vector<Tensor>& f_t);

// Y(y,x) = sum_n F(y,x,n) * trilinear(X, y + dy_n + V(y,x,n,1),
//                                        x + dx_n + V(y,x,n,0),
//                                        dt_n + V(y,x,n,2))
Tensor filter3d_deformable(const Tensor& x_seq, const RigidGrid& grid, const Tensor& v,
                           const Tensor& f);

// Partial filter over the group_index-th (1-based) contiguous block of
// taps, scaled by s: Y_i = s * sum_{j in block i} F_j * sample_j.
Tensor filter_group(const Tensor& x_seq, const RigidGrid& grid, const Tensor& v, const Tensor& f,
                    int group_index, int s);

// --- Tap plans: the unified engine behind all three filtering modes.
// image2d:  single frame, 2D offsets (comps == 2, all dt == 0).
// video2d:  one 2D kernel per frame; taps carry a fixed integer dt and only
//           spatial offsets (comps == 2), frame-major tap order.
// video3d:  full 3D kernel with 3-component offsets (comps == 3).

struct TapPlan {
    std::vector<Tap> taps;
    int comps = 2;  // offset components per tap: 2 (dx,dy) or 3 (dx,dy,dt)

    int size() const { return static_cast<int>(taps.size()); }
};

TapPlan plan_image2d(int kh, int kw);
TapPlan plan_video2d(int kh, int kw, int tau);
TapPlan plan_video3d(int kh, int kw, int kt);

// Sampled pixel values S[H,W,N]: S(y,x,n) = trilinear(X, tap n displaced by
// V(y,x,n,:)). Differentiable w.r.t. both the volume and the offsets.
Tensor sample_taps_forward(const Tensor& x_seq, const TapPlan& plan, const Tensor& v);
Var sample_taps(Tape& tape, const Var& x_seq, const TapPlan& plan, const Var& v);

// Y(y,x) = sum_n S(y,x,n) * F(y,x,n).
Var tap_dot(Tape& tape, const Var& s, const Var& f);

// Y_i(y,x) = scale * sum over taps [n0, n1) of S * F.
Var tap_dot_range(Tape& tape, const Var& s, const Var& f, int n0, int n1, real scale);

}  // namespace defkern
