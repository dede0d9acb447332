#pragma once

// PSNR and SSIM quality scores. Scoring happens in gamma-corrected space at
// the call sites so errors in dark regions carry their display-referred
// weight.

#include <string>
#include <vector>

#include "defkern/tensor.hpp"

namespace defkern {

// 10*log10(peak^2 / MSE); identical inputs report the 100 dB cap.
real psnr(const Tensor& a, const Tensor& b, real peak = 1.0);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// dynamic range 1, valid-mode windowing. Throws if either extent < 11.
real ssim(const Tensor& a, const Tensor& b);

struct FrameQuality {
    std::string id;
    real psnr_db = 0.0;
    real ssim = 0.0;
};

struct QualityReport {
    real psnr_db = 0.0;  // mean over frames
    real ssim = 0.0;     // mean over frames
    std::vector<FrameQuality> frames;

    void add(const std::string& id, real p, real s);
};

}  // namespace defkern
