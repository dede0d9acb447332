#include "defkern/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "defkern/color_noise.hpp"
#include "defkern/nn_ops.hpp"
#include "defkern/rng.hpp"

namespace defkern {

namespace {

// Independent derived-seed streams; a sample's randomness depends only on
// (run seed, stream, global sample index), so training is resumable without
// serializing generator state.
enum Stream : std::uint64_t {
    kStreamScene = 1,
    kStreamWindow = 2,
    kStreamCrop = 3,
    kStreamNoiseParams = 4,
    kStreamNoise = 5,
};

Tensor temporal_window(const Tensor& seq, int frames, std::uint64_t seed) {
    const int t_total = seq.dim(2);
    check_shape(t_total >= frames, "train: sequence shorter than the frame count");
    if (t_total == frames) return seq;
    auto rng = make_rng(seed);
    const int t0 = static_cast<int>(rng() % static_cast<std::uint64_t>(t_total - frames + 1));
    Tensor out({seq.dim(0), seq.dim(1), frames});
    for (int y = 0; y < seq.dim(0); ++y)
        for (int x = 0; x < seq.dim(1); ++x)
            for (int t = 0; t < frames; ++t) out.at(y, x, t) = seq.at(y, x, t0 + t);
    return out;
}

Tensor reference_frame(const Tensor& seq) {
    const int tau = (seq.dim(2) - 1) / 2;
    Tensor out({seq.dim(0), seq.dim(1)});
    for (int y = 0; y < seq.dim(0); ++y)
        for (int x = 0; x < seq.dim(1); ++x) out.at(y, x) = seq.at(y, x, tau);
    return out;
}

void dump_diagnostics(const std::string& out_dir, long iter, real lr, real loss,
                      const ParamStore& params) {
    if (out_dir.empty()) return;
    std::ofstream os(std::filesystem::path(out_dir) / "diagnostic.txt");
    os << "non-finite loss at iteration " << iter << "\nlr " << lr << "\nloss " << loss << '\n';
    for (const auto& [name, var] : params.items()) {
        real vmax = 0, gmax = 0;
        for (long i = 0; i < var->value.size(); ++i) {
            vmax = std::max(vmax, std::abs(var->value[i]));
            gmax = std::max(gmax, std::abs(var->grad[i]));
        }
        os << name << " |value|max " << vmax << " |grad|max " << gmax << '\n';
    }
}

TrainResult run_loop(const std::vector<Tensor>& sequences, const TrainConfig& tcfg,
                     Checkpoint ckpt) {
    check_shape(!sequences.empty(), "train: empty dataset");
    check_shape(tcfg.batch_size >= 1 && tcfg.patch >= 1 && tcfg.max_iters >= 0,
                "train: bad configuration");
    const NetConfig& ncfg = ckpt.config;
    ncfg.validate();
    const int frames = ncfg.frames();
    const int tau = (frames - 1) / 2;

    namespace fs = std::filesystem;
    std::ofstream log;
    if (!tcfg.out_dir.empty()) {
        fs::create_directories(tcfg.out_dir);
        log.open(fs::path(tcfg.out_dir) / "train_log.tsv",
                 ckpt.iteration > 0 ? std::ios::app : std::ios::trunc);
        if (ckpt.iteration == 0) log << "iteration\tlr\tloss\treg_weight\tseconds\n";
    }

    const bool use_groups = tcfg.anneal && ncfg.mode == FilterMode::video3d;
    TrainResult result;

    for (long p = ckpt.iteration; p < tcfg.max_iters; ++p) {
        const auto t0 = std::chrono::steady_clock::now();
        const real reg_w = use_groups ? anneal_weight(tcfg.schedule, p) : 0.0;
        const int n_groups = use_groups ? tcfg.schedule.s : 0;
        const real lr = lr_at(tcfg.lr, p);

        Tape tape;
        Var batch_loss;
        for (int b = 0; b < tcfg.batch_size; ++b) {
            const std::uint64_t g =
                static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(tcfg.batch_size) +
                static_cast<std::uint64_t>(b);
            const size_t scene =
                derive_seed(tcfg.seed, kStreamScene, g) % sequences.size();
            Tensor seq = temporal_window(sequences[scene], frames,
                                         derive_seed(tcfg.seed, kStreamWindow, g));
            Tensor clean = crop_patch(seq, tcfg.patch, derive_seed(tcfg.seed, kStreamCrop, g));

            NoiseParams np;
            if (tcfg.sample_noise) {
                np = sample_noise_params(derive_seed(tcfg.seed, kStreamNoiseParams, g));
            } else {
                np.sigma_s = tcfg.sigma_s;
                np.sigma_r = tcfg.sigma_r;
            }
            np.blind = ncfg.blind;

            Tensor noisy = synthesize_noise(clean, np, derive_seed(tcfg.seed, kStreamNoise, g));
            Tensor nmap;
            if (!ncfg.blind) {
                Tensor q_ref({tcfg.patch, tcfg.patch});
                for (int y = 0; y < tcfg.patch; ++y)
                    for (int x = 0; x < tcfg.patch; ++x) q_ref.at(y, x) = noisy.at(y, x, tau);
                nmap = noise_level_map(q_ref, np);
            }

            DenoiseResult out = forward_denoise(tape, ckpt.params, ncfg, noisy, nmap, n_groups);
            Var y_gt = leaf(reference_frame(clean));
            Var item = total_loss_weighted(tape, out.y, out.groups, y_gt, reg_w);
            batch_loss = batch_loss ? vadd(tape, batch_loss, item) : item;
        }
        if (tcfg.batch_size > 1)
            batch_loss = vscale(tape, batch_loss, 1.0 / static_cast<real>(tcfg.batch_size));

        const real loss_value = batch_loss->value[0];
        if (!std::isfinite(loss_value)) {
            dump_diagnostics(tcfg.out_dir, p, lr, loss_value, ckpt.params);
            throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(p));
        }

        tape.backward(batch_loss);
        adam_step(ckpt.params, ckpt.opt, lr);
        ckpt.iteration = p + 1;
        result.losses.push_back(loss_value);

        const real seconds =
            std::chrono::duration<real>(std::chrono::steady_clock::now() - t0).count();
        if (log.is_open() && (p % tcfg.log_every == 0 || p + 1 == tcfg.max_iters)) {
            char line[160];
            std::snprintf(line, sizeof(line), "%ld\t%.10g\t%.10g\t%.10g\t%.3f\n", p, lr,
                          loss_value, reg_w, seconds);
            log << line;
            log.flush();
        }
        if (!tcfg.out_dir.empty() && tcfg.checkpoint_every > 0 &&
            (p + 1) % tcfg.checkpoint_every == 0 && p + 1 < tcfg.max_iters) {
            save_checkpoint((fs::path(tcfg.out_dir) / "model.ckpt").string(), ckpt);
        }
    }

    if (!tcfg.out_dir.empty())
        save_checkpoint((fs::path(tcfg.out_dir) / "model.ckpt").string(), ckpt);
    result.checkpoint = std::move(ckpt);
    return result;
}

}  // namespace

Tensor crop_patch(const Tensor& sequence, int patch, std::uint64_t seed) {
    check_shape(sequence.rank() == 3, "crop_patch: sequence must be [H,W,T]");
    const int h = sequence.dim(0), w = sequence.dim(1), t_n = sequence.dim(2);
    check_shape(patch >= 1 && patch <= h && patch <= w,
                "crop_patch: patch larger than the frame");
    auto rng = make_rng(seed);
    const int oy = static_cast<int>(rng() % static_cast<std::uint64_t>(h - patch + 1));
    const int ox = static_cast<int>(rng() % static_cast<std::uint64_t>(w - patch + 1));
    Tensor out({patch, patch, t_n});
    for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x)
            for (int t = 0; t < t_n; ++t) out.at(y, x, t) = sequence.at(oy + y, ox + x, t);
    return out;
}

TrainResult train(const std::vector<Tensor>& clean_sequences, const TrainConfig& tcfg,
                  const NetConfig& ncfg) {
    Checkpoint ckpt;
    ckpt.config = ncfg;
    ckpt.iteration = 0;
    ckpt.params = build_network(ncfg, tcfg.seed);
    return run_loop(clean_sequences, tcfg, std::move(ckpt));
}

TrainResult train_resume(const std::vector<Tensor>& clean_sequences, const TrainConfig& tcfg,
                         Checkpoint start) {
    check_shape(start.iteration == start.opt.step,
                "train_resume: checkpoint iteration and optimizer step disagree");
    return run_loop(clean_sequences, tcfg, std::move(start));
}

}  // namespace defkern
