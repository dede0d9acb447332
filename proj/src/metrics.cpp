#include "defkern/metrics.hpp"

#include <cmath>

namespace defkern {

real psnr(const Tensor& a, const Tensor& b, real peak) {
    check_shape(a.same_shape(b), "psnr: shape mismatch");
    check_shape(peak > 0, "psnr: peak must be positive");
    real mse = 0.0;
    for (long i = 0; i < a.size(); ++i) {
        const real d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<real>(a.size());
    if (mse == 0.0) return 100.0;
    const real v = 10.0 * std::log10(peak * peak / mse);
    return v > 100.0 ? 100.0 : v;
}

namespace {

constexpr int kWin = 11;

const std::vector<real>& gaussian_window() {
    static const std::vector<real> win = [] {
        std::vector<real> w(kWin * kWin);
        const real sigma = 1.5;
        real total = 0.0;
        for (int y = 0; y < kWin; ++y)
            for (int x = 0; x < kWin; ++x) {
                const real dy = y - (kWin - 1) / 2.0, dx = x - (kWin - 1) / 2.0;
                const real v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
                w[static_cast<size_t>(y * kWin + x)] = v;
                total += v;
            }
        for (auto& v : w) v /= total;
        return w;
    }();
    return win;
}

}  // namespace

real ssim(const Tensor& a, const Tensor& b) {
    check_shape(a.same_shape(b) && a.rank() == 2, "ssim: inputs must be same-shape [H,W]");
    const int h = a.dim(0), w = a.dim(1);
    check_shape(h >= kWin && w >= kWin, "ssim: image smaller than the 11x11 window");
    const auto& win = gaussian_window();
    constexpr real c1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
    constexpr real c2 = 0.03 * 0.03;  // (K2*L)^2

    real acc = 0.0;
    long count = 0;
    for (int y = 0; y + kWin <= h; ++y)
        for (int x = 0; x + kWin <= w; ++x) {
            real mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    const real wv = win[static_cast<size_t>(i * kWin + j)];
                    const real va = a.at(y + i, x + j), vb = b.at(y + i, x + j);
                    mu_a += wv * va;
                    mu_b += wv * vb;
                    aa += wv * va * va;
                    bb += wv * vb * vb;
                    ab += wv * va * vb;
                }
            const real var_a = aa - mu_a * mu_a;
            const real var_b = bb - mu_b * mu_b;
            const real cov = ab - mu_a * mu_b;
            const real num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const real den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            acc += num / den;
            ++count;
        }
    return acc / static_cast<real>(count);
}

void QualityReport::add(const std::string& id, real p, real s) {
    frames.push_back({id, p, s});
    real sp = 0, ss = 0;
    for (const auto& f : frames) {
        sp += f.psnr_db;
        ss += f.ssim;
    }
    psnr_db = sp / static_cast<real>(frames.size());
    ssim = ss / static_cast<real>(frames.size());
}

}  // namespace defkern
