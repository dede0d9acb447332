#include "defkern/pipeline.hpp"

#include "defkern/rng.hpp"

namespace defkern {

namespace {

Tensor center_frame(const Tensor& seq) {
    const int tau = (seq.dim(2) - 1) / 2;
    Tensor out({seq.dim(0), seq.dim(1)});
    for (int y = 0; y < seq.dim(0); ++y)
        for (int x = 0; x < seq.dim(1); ++x) out.at(y, x) = seq.at(y, x, tau);
    return out;
}

Tensor window_at(const Tensor& seq, int t0, int frames) {
    Tensor out({seq.dim(0), seq.dim(1), frames});
    for (int y = 0; y < seq.dim(0); ++y)
        for (int x = 0; x < seq.dim(1); ++x)
            for (int t = 0; t < frames; ++t) out.at(y, x, t) = seq.at(y, x, t0 + t);
    return out;
}

}  // namespace

Tensor denoise_window(ParamStore& params, const NetConfig& config, const Tensor& noisy_seq,
                      const NoiseParams& np) {
    Tensor nmap;
    if (!config.blind) {
        NoiseParams level = np;
        level.blind = false;
        nmap = noise_level_map(center_frame(noisy_seq), level);
    }
    Tape tape;
    DenoiseResult out = forward_denoise(tape, params, config, noisy_seq, nmap, /*n_groups=*/0);
    return out.y->value;
}

std::vector<Tensor> denoise_sequence(ParamStore& params, const NetConfig& config,
                                     const Tensor& noisy_seq, const NoiseParams& np) {
    const int frames = config.frames();
    check_shape(noisy_seq.rank() == 3 && noisy_seq.dim(2) >= frames,
                "denoise_sequence: sequence shorter than the model's window");
    std::vector<Tensor> outputs;
    for (int t0 = 0; t0 + frames <= noisy_seq.dim(2); ++t0)
        outputs.push_back(denoise_window(params, config, window_at(noisy_seq, t0, frames), np));
    return outputs;
}

std::vector<SceneScore> score_scenes(const std::vector<Tensor>& clean_sequences,
                                     const std::vector<std::string>& ids, ParamStore& params,
                                     const NetConfig& config, const NoiseParams& np,
                                     std::uint64_t seed) {
    check_shape(clean_sequences.size() == ids.size(), "score_scenes: ids/sequences mismatch");
    const int frames = config.frames();
    std::vector<SceneScore> scores;
    for (size_t i = 0; i < clean_sequences.size(); ++i) {
        const Tensor& full = clean_sequences[i];
        check_shape(full.dim(2) >= frames, "score_scenes: sequence shorter than window");
        const int t0 = (full.dim(2) - frames) / 2;
        const Tensor clean = window_at(full, t0, frames);
        const Tensor noisy =
            synthesize_noise(clean, np, derive_seed(seed, /*stream=*/900, i));
        const Tensor y = denoise_window(params, config, noisy, np);

        const Tensor ref_gamma = gamma_display(center_frame(clean));
        const Tensor noisy_gamma = gamma_display(center_frame(noisy));
        const Tensor y_gamma = gamma_display(y);

        SceneScore s;
        s.id = ids[i];
        s.psnr_noisy = psnr(noisy_gamma, ref_gamma);
        s.psnr_denoised = psnr(y_gamma, ref_gamma);
        s.ssim_noisy = ssim(noisy_gamma, ref_gamma);
        s.ssim_denoised = ssim(y_gamma, ref_gamma);
        scores.push_back(std::move(s));
    }
    return scores;
}

real mean_psnr_gain(const std::vector<SceneScore>& scores) {
    check_shape(!scores.empty(), "mean_psnr_gain: no scores");
    real g = 0;
    for (const auto& s : scores) g += s.psnr_denoised - s.psnr_noisy;
    return g / static_cast<real>(scores.size());
}

}  // namespace defkern
