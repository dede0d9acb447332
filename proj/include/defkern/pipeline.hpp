#pragma once

// Inference and evaluation plumbing shared by the command-line tools and
// the test suites: single-window denoising, sliding-window sequence
// processing, and noisy-vs-denoised scoring in gamma space.

#include <cstdint>
#include <string>
#include <vector>

#include "defkern/color_noise.hpp"
#include "defkern/metrics.hpp"
#include "defkern/network.hpp"

namespace defkern {

// Denoise one [H,W,2tau+1] window (linear space). Builds the noise-level
// channel from the noisy reference frame in non-blind mode.
Tensor denoise_window(ParamStore& params, const NetConfig& config, const Tensor& noisy_seq,
                      const NoiseParams& np);

// Every valid center of a longer sequence, in order. Returns one denoised
// reference frame per center (same H,W as the input).
std::vector<Tensor> denoise_sequence(ParamStore& params, const NetConfig& config,
                                     const Tensor& noisy_seq, const NoiseParams& np);

struct SceneScore {
    std::string id;
    real psnr_noisy = 0.0;
    real psnr_denoised = 0.0;
    real ssim_noisy = 0.0;
    real ssim_denoised = 0.0;
};

// Adds synthetic noise to each clean scene (seed derived per scene index),
// denoises the central window, and scores both the noisy reference frame
// and the output against the clean reference, in gamma space.
std::vector<SceneScore> score_scenes(const std::vector<Tensor>& clean_sequences,
                                     const std::vector<std::string>& ids, ParamStore& params,
                                     const NetConfig& config, const NoiseParams& np,
                                     std::uint64_t seed);

real mean_psnr_gain(const std::vector<SceneScore>& scores);

}  // namespace defkern
