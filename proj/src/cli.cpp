#include "defkern/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "defkern/checkpoint.hpp"
#include "defkern/color_noise.hpp"
#include "defkern/dataset.hpp"
#include "defkern/gradcheck.hpp"
#include "defkern/image_io.hpp"
#include "defkern/metrics.hpp"
#include "defkern/network.hpp"
#include "defkern/pipeline.hpp"
#include "defkern/rng.hpp"
#include "defkern/trainer.hpp"

namespace defkern {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitIncompatible = 4;
constexpr int kExitGradcheck = 5;

// Noise presets: the two benchmark settings (sigma_s, sigma_r).
constexpr real kPresetLowSigmaS = 2.5e-3, kPresetLowSigmaR = 1e-2;
constexpr real kPresetHighSigmaS = 6.4e-3, kPresetHighSigmaR = 2e-2;

struct MissingFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IncompatibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw MissingFileError(std::string(what) + " not found: " + path);
}

// --- flat key=value config files ---------------------------------------------

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    require_file(path, "config file");
    std::ifstream is(path);
    if (!is) throw MissingFileError("config file not readable: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw UsageError(path + ":" + std::to_string(line_no) + ": duplicate key " + key);
    }
    return kv;
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + ": not an integer: " + v);
    }
}

real to_real(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const real out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + ": not a number: " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw UsageError("config key " + key + ": not a boolean (use 0/1/true/false): " + v);
}

// --- train settings: defaults <- config file <- explicit CLI flags ------------

// Network settings kept as optionals so a resumed run can verify that every
// explicitly requested value matches the checkpoint it continues.
struct NetOverrides {
    std::optional<std::string> mode;
    std::optional<int> tau, kh, kw, kt, levels;
    std::optional<real> width_scale, max_disp;
    std::optional<bool> blind, fixed_grid, dynamic_weights;

    void apply(NetConfig& c) const {
        if (mode) c.mode = filter_mode_from_string(*mode);
        if (tau) c.tau = *tau;
        if (kh) c.kh = *kh;
        if (kw) c.kw = *kw;
        if (kt) c.kt = *kt;
        if (levels) c.levels = *levels;
        if (width_scale) c.width_scale = *width_scale;
        if (max_disp) c.max_disp = *max_disp;
        if (blind) c.blind = *blind;
        if (fixed_grid) c.fixed_grid = *fixed_grid;
        if (dynamic_weights) c.dynamic_weights = *dynamic_weights;
    }

    void check_against(const NetConfig& c) const {
        NetConfig merged = c;
        apply(merged);
        if (net_config_to_text(merged) != net_config_to_text(c))
            throw IncompatibleError(
                "requested network settings disagree with the checkpoint being resumed");
    }
};

struct TrainSettings {
    NetOverrides net;
    TrainConfig train;
    std::string manifest;
    std::string out_dir;
    std::string resume;
};

void apply_config_file(TrainSettings& s, const std::string& path) {
    for (const auto& [key, v] : parse_kv_file(path)) {
        if (key == "mode") s.net.mode = v;
        else if (key == "tau") s.net.tau = int(to_long(key, v));
        else if (key == "kh") s.net.kh = int(to_long(key, v));
        else if (key == "kw") s.net.kw = int(to_long(key, v));
        else if (key == "kt") s.net.kt = int(to_long(key, v));
        else if (key == "levels") s.net.levels = int(to_long(key, v));
        else if (key == "width_scale") s.net.width_scale = to_real(key, v);
        else if (key == "max_disp") s.net.max_disp = to_real(key, v);
        else if (key == "blind") s.net.blind = to_bool(key, v);
        else if (key == "fixed_grid") s.net.fixed_grid = to_bool(key, v);
        else if (key == "dynamic_weights") s.net.dynamic_weights = to_bool(key, v);
        else if (key == "iters") s.train.max_iters = to_long(key, v);
        else if (key == "batch") s.train.batch_size = int(to_long(key, v));
        else if (key == "patch") s.train.patch = int(to_long(key, v));
        else if (key == "seed") s.train.seed = std::uint64_t(to_long(key, v));
        else if (key == "lr_init") s.train.lr.init = to_real(key, v);
        else if (key == "lr_decay") s.train.lr.decay = to_real(key, v);
        else if (key == "lr_floor") s.train.lr.floor = to_real(key, v);
        else if (key == "sample_noise") s.train.sample_noise = to_bool(key, v);
        else if (key == "sigma_s") s.train.sigma_s = to_real(key, v);
        else if (key == "sigma_r") s.train.sigma_r = to_real(key, v);
        else if (key == "anneal") s.train.anneal = to_bool(key, v);
        else if (key == "eta") s.train.schedule.eta = to_real(key, v);
        else if (key == "gamma_decay") s.train.schedule.gamma_decay = to_real(key, v);
        else if (key == "groups") s.train.schedule.s = int(to_long(key, v));
        else if (key == "checkpoint_every") s.train.checkpoint_every = to_long(key, v);
        else if (key == "log_every") s.train.log_every = to_long(key, v);
        else if (key == "manifest") s.manifest = v;
        else if (key == "out") s.out_dir = v;
        else throw UsageError("unknown config key: " + key);
    }
}

// --- shared data loading -------------------------------------------------------

// Files store display-referred values; training and inference run in linear
// intensity, so loads pass through the inverse transfer.
std::vector<Tensor> load_linear_sequences(const SequenceManifest& scenes) {
    std::vector<Tensor> out;
    out.reserve(scenes.size());
    for (const auto& scene : scenes) {
        for (const auto& p : scene.frame_paths) require_file(p, "frame");
        out.push_back(gamma_inverse(load_sequence(scene)));
    }
    return out;
}

SequenceManifest open_manifest(const std::string& path) {
    require_file(path, "manifest");
    return load_manifest(path);
}

// --- subcommand option blocks ---------------------------------------------------

struct GenDataOpts {
    std::string out;
    ToyDatasetConfig cfg;
};

struct SynthNoiseOpts {
    std::string manifest, out, preset;
    real sigma_s = -1.0, sigma_r = -1.0;
    std::uint64_t seed = 1;
};

struct TrainOpts {
    std::string config_file;
    TrainSettings s;
    // CLI-side staging for explicit-flag detection
    std::string manifest, out_dir, resume;
    std::string mode;
    int tau = 0, kh = 0, kw = 0, kt = 0, levels = 0, batch = 0, patch = 0;
    real width_scale = 0, max_disp = 0, sigma_s = 0, sigma_r = 0;
    real lr_init = 0, lr_decay = 0, lr_floor = 0, eta = 0, gamma_decay = 0;
    int groups = 0;
    long iters = 0, checkpoint_every = 0, log_every = 0;
    std::uint64_t seed = 0;
    bool blind = false, fixed_grid = false, no_anneal = false, no_dynamic_weights = false;
    bool sample_noise = false;
};

struct DenoiseOpts {
    std::string checkpoint, manifest, out, noise_json, preset;
    real sigma_s = -1.0, sigma_r = -1.0;
    bool color = false;
};

struct EvalOpts {
    std::string clean, outputs, report, json_path;
};

struct GradcheckOpts {
    std::uint64_t seed = 7;
    bool quick = false;
};

// --- gen-data -------------------------------------------------------------------

int run_gen_data(const GenDataOpts& o) {
    const SequenceManifest scenes = make_toy_dataset(o.cfg, o.out);
    std::cout << "wrote " << scenes.size() << " scenes under " << o.out << "\n"
              << (fs::path(o.out) / "manifest.tsv").string() << "\n";
    return kExitOk;
}

// --- synth-noise ----------------------------------------------------------------

NoiseParams resolve_noise(const std::string& preset, real sigma_s, real sigma_r,
                          bool required) {
    NoiseParams np;
    if (!preset.empty()) {
        if (preset == "low") {
            np.sigma_s = kPresetLowSigmaS;
            np.sigma_r = kPresetLowSigmaR;
        } else if (preset == "high") {
            np.sigma_s = kPresetHighSigmaS;
            np.sigma_r = kPresetHighSigmaR;
        } else {
            throw UsageError("unknown preset (use low or high): " + preset);
        }
    }
    if (sigma_s >= 0.0) np.sigma_s = sigma_s;
    if (sigma_r >= 0.0) np.sigma_r = sigma_r;
    if ((sigma_s >= 0.0) != (sigma_r >= 0.0))
        throw UsageError("--sigma-s and --sigma-r must be given together");
    if (required && preset.empty() && sigma_s < 0.0)
        throw UsageError("noise level required: give --preset or --sigma-s/--sigma-r");
    return np;
}

int run_synth_noise(const SynthNoiseOpts& o) {
    const NoiseParams np = resolve_noise(o.preset, o.sigma_s, o.sigma_r, /*required=*/true);
    const SequenceManifest scenes = open_manifest(o.manifest);

    fs::create_directories(o.out);
    SequenceManifest noisy_scenes;
    for (size_t i = 0; i < scenes.size(); ++i) {
        const Tensor clean = gamma_inverse(load_sequence(scenes[i]));
        const Tensor noisy =
            synthesize_noise(clean, np, derive_seed(o.seed, 800, std::uint64_t(i)));
        const fs::path scene_dir = fs::path(o.out) / scenes[i].id;
        fs::create_directories(scene_dir);

        Scene rec;
        rec.id = scenes[i].id;
        const int h = noisy.dim(0), w = noisy.dim(1), t_n = noisy.dim(2);
        for (int t = 0; t < t_n; ++t) {
            Tensor frame({h, w});
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) frame.at(y, x) = noisy.at(y, x, t);
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%d.png", t);
            const std::string path = (scene_dir / name).string();
            save_image_16(path, gamma_display(frame));
            rec.frame_paths.push_back(path);
        }
        noisy_scenes.push_back(std::move(rec));
    }
    const std::string manifest_path = (fs::path(o.out) / "manifest.tsv").string();
    save_manifest(manifest_path, noisy_scenes);

    json sidecar = {{"sigma_s", np.sigma_s}, {"sigma_r", np.sigma_r}, {"seed", o.seed}};
    std::ofstream(fs::path(o.out) / "noise.json") << sidecar.dump(2) << "\n";

    std::cout << "wrote " << noisy_scenes.size() << " noisy scenes under " << o.out << "\n"
              << manifest_path << "\n";
    return kExitOk;
}

// --- train ----------------------------------------------------------------------

int run_train(const CLI::App* cmd, TrainOpts& o) {
    TrainSettings& s = o.s;
    if (!o.config_file.empty()) apply_config_file(s, o.config_file);

    auto given = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (given("--mode")) s.net.mode = o.mode;
    if (given("--tau")) s.net.tau = o.tau;
    if (given("--kh")) s.net.kh = o.kh;
    if (given("--kw")) s.net.kw = o.kw;
    if (given("--kt")) s.net.kt = o.kt;
    if (given("--levels")) s.net.levels = o.levels;
    if (given("--width-scale")) s.net.width_scale = o.width_scale;
    if (given("--max-disp")) s.net.max_disp = o.max_disp;
    if (given("--blind")) s.net.blind = true;
    if (given("--fixed-grid")) s.net.fixed_grid = true;
    if (given("--no-dynamic-weights")) s.net.dynamic_weights = false;
    if (given("--no-anneal")) s.train.anneal = false;
    if (given("--iters")) s.train.max_iters = o.iters;
    if (given("--batch")) s.train.batch_size = o.batch;
    if (given("--patch")) s.train.patch = o.patch;
    if (given("--seed")) s.train.seed = o.seed;
    if (given("--lr-init")) s.train.lr.init = o.lr_init;
    if (given("--lr-decay")) s.train.lr.decay = o.lr_decay;
    if (given("--lr-floor")) s.train.lr.floor = o.lr_floor;
    if (given("--sample-noise")) s.train.sample_noise = true;
    if (given("--sigma-s")) s.train.sigma_s = o.sigma_s;
    if (given("--sigma-r")) s.train.sigma_r = o.sigma_r;
    if (given("--eta")) s.train.schedule.eta = o.eta;
    if (given("--gamma-decay")) s.train.schedule.gamma_decay = o.gamma_decay;
    if (given("--groups")) s.train.schedule.s = o.groups;
    if (given("--checkpoint-every")) s.train.checkpoint_every = o.checkpoint_every;
    if (given("--log-every")) s.train.log_every = o.log_every;
    if (given("--manifest")) s.manifest = o.manifest;
    if (given("--out")) s.out_dir = o.out_dir;
    if (given("--resume")) s.resume = o.resume;

    if (s.manifest.empty()) throw UsageError("train: --manifest (or config key) required");
    if (s.out_dir.empty()) throw UsageError("train: --out (or config key) required");
    s.train.out_dir = s.out_dir;

    const std::vector<Tensor> sequences = load_linear_sequences(open_manifest(s.manifest));

    TrainResult result;
    if (!s.resume.empty()) {
        require_file(s.resume, "checkpoint");
        Checkpoint start = load_checkpoint(s.resume);
        s.net.check_against(start.config);
        const int frames = start.config.frames();
        for (const auto& seq : sequences)
            if (seq.dim(2) < frames)
                throw IncompatibleError("sequence shorter than the checkpoint's frame count");
        result = train_resume(sequences, s.train, std::move(start));
    } else {
        NetConfig ncfg;
        s.net.apply(ncfg);
        ncfg.validate();
        for (const auto& seq : sequences)
            if (seq.dim(2) < ncfg.frames())
                throw IncompatibleError("sequence shorter than the configured frame count");
        result = train(sequences, s.train, ncfg);
    }

    const std::string ckpt_path = (fs::path(s.out_dir) / "model.ckpt").string();
    std::cout << "trained to iteration " << result.checkpoint.iteration << "; checkpoint at "
              << ckpt_path << "\n";
    if (!result.losses.empty())
        std::cout << "final loss " << result.losses.back() << "\n";
    return kExitOk;
}

// --- denoise --------------------------------------------------------------------

Tensor channel_sequence(const std::vector<Tensor>& frames_chw, int channel) {
    const int h = frames_chw[0].dim(1), w = frames_chw[0].dim(2);
    Tensor seq({h, w, int(frames_chw.size())});
    for (size_t t = 0; t < frames_chw.size(); ++t)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) seq.at(y, x, int(t)) = frames_chw[t].at(channel, y, x);
    return seq;
}

int run_denoise(const DenoiseOpts& o) {
    require_file(o.checkpoint, "checkpoint");
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    NetConfig ncfg = ckpt.config;
    ParamStore params = ckpt.params;

    NoiseParams np;
    np.blind = ncfg.blind;
    if (!ncfg.blind) {
        if (!o.noise_json.empty()) {
            require_file(o.noise_json, "noise sidecar");
            std::ifstream is(o.noise_json);
            json j;
            is >> j;
            np.sigma_s = j.at("sigma_s").get<real>();
            np.sigma_r = j.at("sigma_r").get<real>();
            if (o.sigma_s >= 0.0) np.sigma_s = o.sigma_s;
            if (o.sigma_r >= 0.0) np.sigma_r = o.sigma_r;
        } else {
            np = resolve_noise(o.preset, o.sigma_s, o.sigma_r, /*required=*/true);
        }
        np.blind = false;
    }

    const SequenceManifest scenes = open_manifest(o.manifest);
    fs::create_directories(o.out);
    const int tau = (ncfg.frames() - 1) / 2;

    std::ofstream listing(fs::path(o.out) / "outputs.tsv");
    listing << "scene\tframe\tpath\n";

    for (const auto& scene : scenes) {
        for (const auto& p : scene.frame_paths) require_file(p, "frame");
        if (int(scene.frame_paths.size()) < ncfg.frames())
            throw IncompatibleError("scene " + scene.id +
                                    " has fewer frames than the checkpoint expects");

        std::vector<Tensor> outputs_gray;   // grayscale path
        std::vector<Tensor> outputs_rgb;    // color path, [3,H,W] per center
        if (o.color) {
            std::vector<Tensor> frames_chw;
            for (const auto& p : scene.frame_paths) frames_chw.push_back(load_image_any(p));
            const int c_n = frames_chw[0].dim(0);
            for (const auto& f : frames_chw)
                if (f.dim(0) != c_n || !f.same_shape(frames_chw[0]))
                    throw IncompatibleError("scene " + scene.id + ": frame shapes differ");
            std::vector<std::vector<Tensor>> per_channel;
            for (int c = 0; c < c_n; ++c) {
                const Tensor seq = gamma_inverse(channel_sequence(frames_chw, c));
                per_channel.push_back(denoise_sequence(params, ncfg, seq, np));
            }
            const size_t centers = per_channel[0].size();
            const int h = frames_chw[0].dim(1), w = frames_chw[0].dim(2);
            for (size_t i = 0; i < centers; ++i) {
                Tensor rgb({3, h, w});
                for (int c = 0; c < 3; ++c) {
                    const Tensor ch = gamma_display(per_channel[c_n == 3 ? c : 0][i]);
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x) rgb.at(c, y, x) = ch.at(y, x);
                }
                outputs_rgb.push_back(std::move(rgb));
            }
        } else {
            const Tensor seq = gamma_inverse(load_sequence(scene));
            for (Tensor& y : denoise_sequence(params, ncfg, seq, np))
                outputs_gray.push_back(gamma_display(y));
        }

        const size_t centers = o.color ? outputs_rgb.size() : outputs_gray.size();
        for (size_t i = 0; i < centers; ++i) {
            const int frame_index = tau + int(i);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_f%03d.png", scene.id.c_str(), frame_index);
            const std::string path = (fs::path(o.out) / name).string();
            if (o.color)
                save_image_rgb(path, outputs_rgb[i]);
            else
                save_image_16(path, outputs_gray[i]);
            listing << scene.id << '\t' << frame_index << '\t' << path << '\n';
        }
    }
    std::cout << "denoised " << scenes.size() << " scenes into " << o.out << "\n";
    return kExitOk;
}

// --- eval -----------------------------------------------------------------------

int run_eval(const EvalOpts& o) {
    const SequenceManifest clean_scenes = open_manifest(o.clean);
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : clean_scenes) by_id[s.id] = &s;

    require_file(o.outputs, "outputs listing");
    std::ifstream is(o.outputs);
    std::string line;
    QualityReport report;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {  // "scene\tframe\tpath"
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, frame_str, path;
        if (!std::getline(ls, id, '\t') || !std::getline(ls, frame_str, '\t') ||
            !std::getline(ls, path))
            throw UsageError("outputs listing: expected scene<TAB>frame<TAB>path: " + line);
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw IncompatibleError("outputs reference scene missing from clean manifest: " + id);
        const long frame = to_long("frame", frame_str);
        if (frame < 0 || frame >= long(it->second->frame_paths.size()))
            throw IncompatibleError("outputs reference frame out of range for scene " + id);

        require_file(path, "output image");
        const std::string& clean_path = it->second->frame_paths[size_t(frame)];
        require_file(clean_path, "clean frame");
        const Tensor out_img = load_image(path);
        const Tensor clean_img = load_image(clean_path);
        if (!out_img.same_shape(clean_img))
            throw IncompatibleError("output and clean frame sizes differ for scene " + id);

        report.add(id + "#f" + frame_str, psnr(out_img, clean_img), ssim(out_img, clean_img));
    }
    if (report.frames.empty()) throw UsageError("outputs listing contains no records");

    std::ostringstream tsv;
    tsv << "frame\tpsnr_db\tssim\n";
    char row[160];
    for (const auto& f : report.frames) {
        std::snprintf(row, sizeof(row), "%s\t%.6f\t%.6f\n", f.id.c_str(), f.psnr_db, f.ssim);
        tsv << row;
    }
    std::snprintf(row, sizeof(row), "mean\t%.6f\t%.6f\n", report.psnr_db, report.ssim);
    tsv << row;

    if (o.report.empty() || o.report == "-") {
        std::cout << tsv.str();
    } else {
        std::ofstream(o.report) << tsv.str();
        std::cout << "wrote " << o.report << "\n";
    }
    if (!o.json_path.empty()) {
        json j;
        j["psnr_db"] = report.psnr_db;
        j["ssim"] = report.ssim;
        j["frames"] = json::array();
        for (const auto& f : report.frames)
            j["frames"].push_back({{"id", f.id}, {"psnr_db", f.psnr_db}, {"ssim", f.ssim}});
        std::ofstream(o.json_path) << j.dump(2) << "\n";
        std::cout << "wrote " << o.json_path << "\n";
    }
    std::printf("mean psnr %.4f dB, mean ssim %.4f over %zu frames\n", report.psnr_db,
                report.ssim, report.frames.size());
    return kExitOk;
}

// --- gradcheck ------------------------------------------------------------------

int run_gradcheck_cmd(const GradcheckOpts& o) {
    const std::vector<GradCheckEntry> entries = run_gradcheck(o.quick, o.seed);
    std::printf("%-40s %12s %10s %8s  %s\n", "operator", "worst_err", "tol", "probes", "status");
    for (const auto& e : entries)
        std::printf("%-40s %12.3e %10.0e %8ld  %s\n", e.op.c_str(), e.worst, e.tol, e.probes,
                    e.passed() ? "pass" : "FAIL");
    if (!all_passed(entries)) {
        std::fprintf(stderr, "gradcheck: at least one operator exceeded its threshold\n");
        return kExitGradcheck;
    }
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"learned deformable-kernel denoising for images and video"};
    app.require_subcommand(1);

    GenDataOpts gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "write a synthetic toy dataset");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();
    cmd_gen->add_option("--scenes", gen.cfg.num_scenes, "number of scenes");
    cmd_gen->add_option("--size", gen.cfg.size, "square frame extent");
    cmd_gen->add_option("--frames", gen.cfg.frames, "frames per scene");
    cmd_gen->add_option("--motion", gen.cfg.motion, "max per-frame translation, pixels");
    cmd_gen->add_option("--seed", gen.cfg.seed, "generation seed");

    SynthNoiseOpts synth;
    auto* cmd_synth =
        app.add_subcommand("synth-noise", "add signal-dependent noise to clean sequences");
    cmd_synth->add_option("--manifest", synth.manifest, "clean sequence manifest")->required();
    cmd_synth->add_option("--out", synth.out, "output directory")->required();
    cmd_synth->add_option("--preset", synth.preset, "noise preset: low or high");
    cmd_synth->add_option("--sigma-s", synth.sigma_s, "shot-noise coefficient");
    cmd_synth->add_option("--sigma-r", synth.sigma_r, "read-noise standard deviation");
    cmd_synth->add_option("--seed", synth.seed, "noise seed");

    TrainOpts tr;
    auto* cmd_train = app.add_subcommand("train", "train a denoising model");
    cmd_train->add_option("--config", tr.config_file, "key=value config file");
    cmd_train->add_option("--manifest", tr.manifest, "clean sequence manifest");
    cmd_train->add_option("--out", tr.out_dir, "run directory (checkpoint + log)");
    cmd_train->add_option("--resume", tr.resume, "checkpoint to continue");
    cmd_train->add_option("--mode", tr.mode, "filter mode: image2d, video2d, video3d");
    cmd_train->add_option("--tau", tr.tau, "frames on each side of the reference");
    cmd_train->add_option("--kh", tr.kh, "kernel height");
    cmd_train->add_option("--kw", tr.kw, "kernel width");
    cmd_train->add_option("--kt", tr.kt, "kernel temporal extent (video3d)");
    cmd_train->add_option("--levels", tr.levels, "network resolution levels");
    cmd_train->add_option("--width-scale", tr.width_scale, "channel width multiplier");
    cmd_train->add_option("--max-disp", tr.max_disp, "spatial offset bound, pixels");
    cmd_train->add_flag("--blind", tr.blind, "no noise-level input channel");
    cmd_train->add_flag("--fixed-grid", tr.fixed_grid, "ablation: rigid sampling grid");
    cmd_train->add_flag("--no-anneal", tr.no_anneal, "ablation: no group regularizer");
    cmd_train->add_flag("--no-dynamic-weights", tr.no_dynamic_weights,
                        "ablation: uniform kernel weights");
    cmd_train->add_option("--iters", tr.iters, "total iterations to reach");
    cmd_train->add_option("--batch", tr.batch, "patches per iteration");
    cmd_train->add_option("--patch", tr.patch, "training crop size");
    cmd_train->add_option("--seed", tr.seed, "training seed");
    cmd_train->add_option("--lr-init", tr.lr_init, "initial learning rate");
    cmd_train->add_option("--lr-decay", tr.lr_decay, "per-iteration lr decay factor");
    cmd_train->add_option("--lr-floor", tr.lr_floor, "learning-rate floor");
    cmd_train->add_flag("--sample-noise", tr.sample_noise,
                        "draw (sigma_s, sigma_r) per sample from the training ranges");
    cmd_train->add_option("--sigma-s", tr.sigma_s, "fixed shot-noise coefficient");
    cmd_train->add_option("--sigma-r", tr.sigma_r, "fixed read-noise std");
    cmd_train->add_option("--eta", tr.eta, "regularizer initial weight");
    cmd_train->add_option("--gamma-decay", tr.gamma_decay, "regularizer decay factor");
    cmd_train->add_option("--groups", tr.groups, "regularizer group count");
    cmd_train->add_option("--checkpoint-every", tr.checkpoint_every, "iterations per checkpoint");
    cmd_train->add_option("--log-every", tr.log_every, "iterations per log line");

    DenoiseOpts dn;
    auto* cmd_dn = app.add_subcommand("denoise", "run a trained model over sequences");
    cmd_dn->add_option("--checkpoint", dn.checkpoint, "model checkpoint")->required();
    cmd_dn->add_option("--manifest", dn.manifest, "noisy sequence manifest")->required();
    cmd_dn->add_option("--out", dn.out, "output directory")->required();
    cmd_dn->add_option("--preset", dn.preset, "noise preset: low or high");
    cmd_dn->add_option("--sigma-s", dn.sigma_s, "shot-noise coefficient");
    cmd_dn->add_option("--sigma-r", dn.sigma_r, "read-noise standard deviation");
    cmd_dn->add_option("--noise-json", dn.noise_json, "noise sidecar written by synth-noise");
    cmd_dn->add_flag("--color", dn.color, "process R, G, B channels independently");

    EvalOpts ev;
    auto* cmd_ev = app.add_subcommand("eval", "score outputs against clean ground truth");
    cmd_ev->add_option("--clean", ev.clean, "clean sequence manifest")->required();
    cmd_ev->add_option("--outputs", ev.outputs, "outputs.tsv written by denoise")->required();
    cmd_ev->add_option("--report", ev.report, "report TSV path ('-' for stdout)");
    cmd_ev->add_option("--json", ev.json_path, "also write a JSON report here");

    GradcheckOpts gc;
    auto* cmd_gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    cmd_gc->add_option("--seed", gc.seed, "probe seed");
    cmd_gc->add_flag("--quick", gc.quick, "reduced probe counts");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, returns 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return kExitUsage;
    }

    try {
        if (cmd_gen->parsed()) return run_gen_data(gen);
        if (cmd_synth->parsed()) return run_synth_noise(synth);
        if (cmd_train->parsed()) return run_train(cmd_train, tr);
        if (cmd_dn->parsed()) return run_denoise(dn);
        if (cmd_ev->parsed()) return run_eval(ev);
        if (cmd_gc->parsed()) return run_gradcheck_cmd(gc);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const MissingFileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingFile;
    } catch (const IncompatibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIncompatible;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace defkern
