#pragma once

// The offset-predicting U-Net and kernel-weight head, width-scalable from
// desk scale up to the full 27-convolution reference depth, plus the
// end-to-end denoising forward pass that ties prediction, sampling, and
// weighting together.

#include <cstdint>
#include <string>
#include <vector>

#include "defkern/autodiff.hpp"
#include "defkern/deform.hpp"
#include "defkern/tensor.hpp"

namespace defkern {

enum class FilterMode { image2d, video2d, video3d };

std::string to_string(FilterMode mode);
FilterMode filter_mode_from_string(const std::string& s);

struct NetConfig {
    FilterMode mode = FilterMode::video3d;
    int tau = 2;  // frames each side of the reference (video modes)
    int kh = 3, kw = 3, kt = 3;
    real width_scale = 0.25;  // multiplies the reference channel counts
    int levels = 3;           // resolution levels; 5 = full reference depth
    real max_disp = 16.0;     // spatial offset bound in pixels
    bool blind = false;
    bool fixed_grid = false;       // ablation: offsets frozen at the rigid grid
    bool dynamic_weights = true;   // ablation off: F frozen to uniform 1/N

    int frames() const { return mode == FilterMode::image2d ? 1 : 2 * tau + 1; }
    int comps() const { return mode == FilterMode::video3d ? 3 : 2; }
    int n_taps() const;
    TapPlan tap_plan() const;
    int in_channels() const { return frames() + 1; }  // + noise-level channel
    int down_factor() const { return 1 << (levels - 1); }
    // Channel widths per resolution level, scaled from {64,128,256,512,512}.
    std::vector<int> widths() const;
    int refine_width() const;  // full-resolution refinement block width
    int weight_head_width() const;

    void validate() const;  // throws std::invalid_argument on bad settings
};

ParamStore build_network(const NetConfig& config, std::uint64_t seed);

struct OffsetsResult {
    Var v;         // [H,W,N,comps], tanh-bounded and scaled per component
    Var features;  // last pre-output activations, [C_feat,H,W]
};

// x_in_chw: [frames+1, H, W] (sequence frames then the noise-level channel).
// Extents not divisible by the downsampling factor are reflect-padded
// internally and the results cropped back.
OffsetsResult predict_offsets(Tape& tape, ParamStore& params, const NetConfig& config,
                              const Var& x_in_chw);

// sampled: [H,W,N] pixel values gathered at the deformed taps.
Var predict_weights(Tape& tape, ParamStore& params, const NetConfig& config, const Var& sampled,
                    const Var& x_in_chw, const Var& features);

struct DenoiseResult {
    Var y;                    // denoised reference frame [H,W]
    std::vector<Var> groups;  // partial outputs for the group regularizer
    Var v;                    // offsets [H,W,N,comps]
    Var f;                    // kernel weights [H,W,N]
    Var taps;                 // sampled pixels [H,W,N]
    Var x_seq;                // the input leaf [H,W,T] (for gradient checks)
};

// noise_map: [H,W] noise-level channel; ignored (zeros fed) in blind mode.
// n_groups > 0 additionally emits that many contiguous-tap partial outputs.
DenoiseResult forward_denoise(Tape& tape, ParamStore& params, const NetConfig& config,
                              const Tensor& noisy_seq, const Tensor& noise_map, int n_groups);

}  // namespace defkern
