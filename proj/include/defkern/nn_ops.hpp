#pragma once

#include <vector>

#include "defkern/autodiff.hpp"
#include "defkern/tensor.hpp"

namespace defkern {

enum class Activation { relu, tanh };
enum class ResampleDir { down, up };

// Pure kernels. Feature maps are [C,H,W row-major].

/// Zero-padded cross-correlation plus bias. weights [C_out,C_in,kh,kw] with
/// odd kh,kw; output spatial size equals input.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

void conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                     Tensor& grad_input, Tensor& grad_weights, Tensor& grad_bias);

Tensor activation_forward(const Tensor& input, Activation kind);

/// down: 2x2 average pooling (even extents required); up: nearest-neighbor 2x.
Tensor resample2x_forward(const Tensor& input, ResampleDir dir);

// Taped ops. Each registers its exact backward on the tape.

Var conv2d(Tape& tape, const Var& input, const Var& weights, const Var& bias);

/// Elementwise relu or tanh. relu backward uses 0 at exactly 0.
Var activation(Tape& tape, const Var& input, Activation kind);

Var resample2x(Tape& tape, const Var& input, ResampleDir dir);

/// Elementwise sum of two same-shape tensors (skip connections).
Var vadd(Tape& tape, const Var& a, const Var& b);

/// Multiply by a scalar constant.
Var vscale(Tape& tape, const Var& a, real c);

/// Elementwise multiply by a constant tensor of the same shape.
Var cmul(Tape& tape, const Var& a, const Tensor& factor);

/// Weighted sum reduction to a scalar: sum(a * weights).
Var vdot(Tape& tape, const Var& a, const Tensor& weights);

/// Concatenate [C_i,H,W] maps along the channel axis.
Var concat_ch(Tape& tape, const std::vector<Var>& parts);

/// Reflect-pad the spatial axes of a [C,H,W] map (edge sample not repeated).
/// Top/bottom/left/right pads may differ.
Var pad_reflect(Tape& tape, const Var& input, int top, int bottom, int left, int right);

/// Crop a spatial window from a [C,H,W] map.
Var crop_hw(Tape& tape, const Var& input, int y0, int x0, int h, int w);

// Layout bridges between the sequence domain [H,W,T] / field domain
// [H,W,N(,c)] and the network domain [C,H,W]. Pure index permutations.

Var seq_to_chw(Tape& tape, const Var& seq);                         // [H,W,T] -> [T,H,W]
Var chw_to_taps(Tape& tape, const Var& maps, int n_taps, int comps); // [N*c,H,W] -> [H,W,N,c]
Var chw_to_hwn(Tape& tape, const Var& maps);                        // [N,H,W] -> [H,W,N]
Var hwn_to_chw(Tape& tape, const Var& field);                       // [H,W,N] -> [N,H,W]

}  // namespace defkern
