#include "defkern/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "defkern/image_io.hpp"
#include "defkern/rng.hpp"

namespace defkern {

SequenceManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("manifest: cannot open: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    SequenceManifest scenes;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("manifest: line missing TAB separator: " + line);
        Scene s;
        s.id = line.substr(0, tab);
        std::stringstream rest(line.substr(tab + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            if (item.empty()) continue;
            // Relative paths resolve against the manifest's directory.
            std::filesystem::path p(item);
            s.frame_paths.push_back(p.is_absolute() ? item : (base / p).string());
        }
        if (s.frame_paths.empty())
            throw std::runtime_error("manifest: scene has no frames: " + s.id);
        scenes.push_back(std::move(s));
    }
    return scenes;
}

void save_manifest(const std::string& path, const SequenceManifest& scenes) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("manifest: cannot open for writing: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    for (const Scene& s : scenes) {
        os << s.id << '\t';
        for (size_t i = 0; i < s.frame_paths.size(); ++i) {
            std::filesystem::path p(s.frame_paths[i]);
            std::error_code ec;
            const auto rel = std::filesystem::relative(p, base, ec);
            os << (ec || rel.empty() ? p.string() : rel.string());
            if (i + 1 < s.frame_paths.size()) os << ',';
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("manifest: write failed: " + path);
}

Tensor load_sequence(const Scene& scene) {
    check_shape(!scene.frame_paths.empty(), "load_sequence: empty scene");
    std::vector<Tensor> frames;
    frames.reserve(scene.frame_paths.size());
    for (const auto& p : scene.frame_paths) frames.push_back(load_image(p));
    const int h = frames[0].dim(0), w = frames[0].dim(1);
    for (const auto& f : frames)
        check_shape(f.dim(0) == h && f.dim(1) == w,
                    "load_sequence: frames of a scene must share dimensions");
    const int t_n = static_cast<int>(frames.size());
    Tensor seq({h, w, t_n});
    for (int t = 0; t < t_n; ++t)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) seq.at(y, x, t) = frames[static_cast<size_t>(t)].at(y, x);
    return seq;
}

namespace {

real clamp01(real v) { return std::clamp(v, 0.0, 1.0); }

Tensor pattern_gradients(int size, std::mt19937_64& rng) {
    Tensor img({size, size});
    const real gy = uniform_range(rng, -1.0, 1.0) / size;
    const real gx = uniform_range(rng, -1.0, 1.0) / size;
    const real phase = uniform_range(rng, 0.0, 6.28318);
    const real freq = uniform_range(rng, 1.0, 4.0) * 6.28318 / size;
    const real ripple = uniform_range(rng, 0.05, 0.25);
    const real base = uniform_range(rng, 0.3, 0.7);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img.at(y, x) = clamp01(base + gy * (y - size / 2) + gx * (x - size / 2) +
                                   ripple * std::sin(freq * (y + x) + phase));
    return img;
}

Tensor pattern_checkers(int size, std::mt19937_64& rng) {
    Tensor img({size, size});
    const int cell = 4 + static_cast<int>(rng() % 13);  // 4..16
    const int oy = static_cast<int>(rng() % static_cast<std::uint64_t>(cell));
    const int ox = static_cast<int>(rng() % static_cast<std::uint64_t>(cell));
    const real lo = uniform_range(rng, 0.05, 0.35), hi = uniform_range(rng, 0.6, 0.95);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const int par = ((y + oy) / cell + (x + ox) / cell) & 1;
            img.at(y, x) = par ? hi : lo;
        }
    return img;
}

Tensor pattern_blobs(int size, std::mt19937_64& rng) {
    Tensor img = Tensor::full({size, size}, uniform_range(rng, 0.1, 0.3));
    const int k = 4 + static_cast<int>(rng() % 5);
    for (int b = 0; b < k; ++b) {
        const real cy = uniform_range(rng, 0.0, size);
        const real cx = uniform_range(rng, 0.0, size);
        const real sigma = uniform_range(rng, 2.0, size / 5.0);
        const real amp = uniform_range(rng, 0.2, 0.7);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const real d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                img.at(y, x) += amp * std::exp(-d2 / (2.0 * sigma * sigma));
            }
    }
    for (long i = 0; i < img.size(); ++i) img[i] = clamp01(img[i]);
    return img;
}

Tensor pattern_strokes(int size, std::mt19937_64& rng) {
    Tensor img = Tensor::full({size, size}, uniform_range(rng, 0.75, 0.95));
    const int k = 6 + static_cast<int>(rng() % 7);
    for (int s = 0; s < k; ++s) {
        const int thick = 1 + static_cast<int>(rng() % 3);
        const real shade = uniform_range(rng, 0.02, 0.3);
        const int kind = static_cast<int>(rng() % 3);
        const int pos = static_cast<int>(rng() % static_cast<std::uint64_t>(size));
        const int lo = static_cast<int>(rng() % static_cast<std::uint64_t>(size));
        const int len = size / 4 + static_cast<int>(rng() % static_cast<std::uint64_t>(size / 2));
        for (int i = 0; i < len; ++i)
            for (int t = 0; t < thick; ++t) {
                int y, x;
                if (kind == 0) {  // horizontal
                    y = pos + t;
                    x = lo + i;
                } else if (kind == 1) {  // vertical
                    y = lo + i;
                    x = pos + t;
                } else {  // diagonal
                    y = lo + i;
                    x = (pos + i) % size + t;
                }
                if (y >= 0 && y < size && x >= 0 && x < size) img.at(y, x) = shade;
            }
    }
    return img;
}

}  // namespace

Tensor toy_pattern(int family, int size, std::uint64_t seed) {
    check_shape(size > 0, "toy_pattern: size must be positive");
    auto rng = make_rng(seed);
    switch (family % 4) {
        case 0: return pattern_gradients(size, rng);
        case 1: return pattern_checkers(size, rng);
        case 2: return pattern_blobs(size, rng);
        default: return pattern_strokes(size, rng);
    }
}

SequenceManifest make_toy_dataset(const ToyDatasetConfig& config, const std::string& out_dir) {
    check_shape(config.num_scenes > 0 && config.size > 0 && config.frames >= 1 &&
                    config.motion >= 0,
                "make_toy_dataset: bad configuration");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // Canvas large enough that every shifted window stays inside.
    const int margin = config.motion * config.frames + 1;
    const int canvas = config.size + 2 * margin;

    SequenceManifest scenes;
    for (int sc = 0; sc < config.num_scenes; ++sc) {
        const std::uint64_t scene_seed = derive_seed(config.seed, 100, static_cast<std::uint64_t>(sc));
        const Tensor bg = toy_pattern(sc % 4, canvas, scene_seed);
        auto rng = make_rng(derive_seed(config.seed, 101, static_cast<std::uint64_t>(sc)));

        // Cumulative integer translations; each per-frame step is bounded by
        // the configured motion in both axes.
        std::vector<std::pair<int, int>> origins;
        int oy = margin, ox = margin;
        origins.emplace_back(oy, ox);
        for (int t = 1; t < config.frames; ++t) {
            const int span = 2 * config.motion + 1;
            int sy = config.motion == 0 ? 0 : static_cast<int>(rng() % static_cast<std::uint64_t>(span)) - config.motion;
            int sx = config.motion == 0 ? 0 : static_cast<int>(rng() % static_cast<std::uint64_t>(span)) - config.motion;
            oy = std::clamp(oy + sy, 0, canvas - config.size);
            ox = std::clamp(ox + sx, 0, canvas - config.size);
            origins.emplace_back(oy, ox);
        }

        char sid[32];
        std::snprintf(sid, sizeof(sid), "scene_%03d", sc);
        const fs::path scene_dir = fs::path(out_dir) / sid;
        fs::create_directories(scene_dir);

        Scene scene;
        scene.id = sid;
        for (int t = 0; t < config.frames; ++t) {
            Tensor frame({config.size, config.size});
            const auto [fy, fx] = origins[static_cast<size_t>(t)];
            for (int y = 0; y < config.size; ++y)
                for (int x = 0; x < config.size; ++x) frame.at(y, x) = bg.at(fy + y, fx + x);
            const fs::path fp = scene_dir / ("frame_" + std::to_string(t) + ".pgm");
            save_image(fp.string(), frame);
            scene.frame_paths.push_back(fp.string());
        }
        scenes.push_back(std::move(scene));
    }
    save_manifest((std::filesystem::path(out_dir) / "manifest.tsv").string(), scenes);
    return scenes;
}

}  // namespace defkern
