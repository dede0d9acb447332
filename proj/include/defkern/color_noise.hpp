#pragma once

// sRGB gamma transfer, signal-dependent Gaussian noise synthesis, and the
// per-pixel noise-level map fed to the network in non-blind mode.

#include <cmath>
#include <cstdint>

#include "defkern/tensor.hpp"

namespace defkern {

struct NoiseParams {
    real sigma_s = 0.0;  // shot-noise coefficient, linear-intensity units
    real sigma_r = 0.0;  // read-noise standard deviation, linear units
    bool blind = false;
};

struct GammaParams {
    static constexpr real alpha = 0.055;
    static constexpr real threshold = 0.0031308;
    static constexpr real linear_slope = 12.92;
    static constexpr real exponent = 1.0 / 2.4;
};

// Scalar transfer. Values below the threshold (including negatives) take the
// linear branch so the function stays defined and differentiable for slightly
// negative inputs; display paths clamp to [0,1] before calling.
inline real gamma_scalar(real y) {
    if (y <= GammaParams::threshold) return GammaParams::linear_slope * y;
    return (1.0 + GammaParams::alpha) * std::pow(y, GammaParams::exponent) - GammaParams::alpha;
}

inline real gamma_scalar_deriv(real y) {
    if (y <= GammaParams::threshold) return GammaParams::linear_slope;
    return (1.0 + GammaParams::alpha) * GammaParams::exponent *
           std::pow(y, GammaParams::exponent - 1.0);
}

inline real gamma_inv_scalar(real v) {
    if (v <= GammaParams::linear_slope * GammaParams::threshold)
        return v / GammaParams::linear_slope;
    return std::pow((v + GammaParams::alpha) / (1.0 + GammaParams::alpha), 2.4);
}

Tensor gamma_forward(const Tensor& y_linear);
Tensor gamma_inverse(const Tensor& i_srgb);

// Clamp to [0,1] then apply the forward transfer (display path).
Tensor gamma_display(const Tensor& y_linear);

// Adds per-pixel independent N(0, sigma_s*q + sigma_r^2) where q is the clean
// pixel intensity. Deterministic given seed (flat iteration order).
Tensor synthesize_noise(const Tensor& clean_linear, const NoiseParams& params, std::uint64_t seed);

// Per-pixel sqrt(sigma_r^2 + sigma_s * q_ref); the inner expression is
// clamped at zero so noisy (possibly negative) reference intensities stay
// valid. Throws std::logic_error in blind mode.
Tensor noise_level_map(const Tensor& q_ref, const NoiseParams& params);

// Log-uniform draw of (sigma_s, sigma_r) from [1e-4,1e-2] x [1e-3,10^-1.5].
NoiseParams sample_noise_params(std::uint64_t seed);

}  // namespace defkern
