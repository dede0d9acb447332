#include "defkern/color_noise.hpp"

#include <algorithm>

#include "defkern/rng.hpp"

namespace defkern {

Tensor gamma_forward(const Tensor& y_linear) {
    Tensor out(y_linear.shape());
    for (long i = 0; i < out.size(); ++i) out[i] = gamma_scalar(y_linear[i]);
    return out;
}

Tensor gamma_inverse(const Tensor& i_srgb) {
    Tensor out(i_srgb.shape());
    for (long i = 0; i < out.size(); ++i) out[i] = gamma_inv_scalar(i_srgb[i]);
    return out;
}

Tensor gamma_display(const Tensor& y_linear) {
    Tensor out(y_linear.shape());
    for (long i = 0; i < out.size(); ++i)
        out[i] = gamma_scalar(std::clamp(y_linear[i], 0.0, 1.0));
    return out;
}

Tensor synthesize_noise(const Tensor& clean_linear, const NoiseParams& params,
                        std::uint64_t seed) {
    check_shape(params.sigma_s >= 0 && params.sigma_r >= 0,
                "synthesize_noise: noise coefficients must be non-negative");
    auto rng = make_rng(seed);
    GaussianSampler gauss(rng);
    Tensor out(clean_linear.shape());
    const real var_floor = params.sigma_r * params.sigma_r;
    for (long i = 0; i < out.size(); ++i) {
        const real q = clean_linear[i];
        const real var = std::max(0.0, params.sigma_s * q) + var_floor;
        out[i] = q + std::sqrt(var) * gauss.next();
    }
    return out;
}

Tensor noise_level_map(const Tensor& q_ref, const NoiseParams& params) {
    if (params.blind) throw std::logic_error("noise_level_map: unavailable in blind mode");
    Tensor out(q_ref.shape());
    const real var_floor = params.sigma_r * params.sigma_r;
    for (long i = 0; i < out.size(); ++i)
        out[i] = std::sqrt(std::max(0.0, var_floor + params.sigma_s * q_ref[i]));
    return out;
}

NoiseParams sample_noise_params(std::uint64_t seed) {
    auto rng = make_rng(seed);
    NoiseParams p;
    p.sigma_s = std::pow(10.0, uniform_range(rng, -4.0, -2.0));
    p.sigma_r = std::pow(10.0, uniform_range(rng, -3.0, -1.5));
    return p;
}

}  // namespace defkern
