#include "defkern/network.hpp"

#include <cmath>

#include "defkern/nn_ops.hpp"
#include "defkern/rng.hpp"

namespace defkern {

namespace {

constexpr int kBaseWidths[5] = {64, 128, 256, 512, 512};
constexpr int kBaseWeightHeadWidth = 64;

int scaled(int base, real scale) {
    const long w = std::lround(static_cast<real>(base) * scale);
    return w < 1 ? 1 : static_cast<int>(w);
}

}  // namespace

std::string to_string(FilterMode mode) {
    switch (mode) {
        case FilterMode::image2d: return "image2d";
        case FilterMode::video2d: return "video2d";
        default: return "video3d";
    }
}

FilterMode filter_mode_from_string(const std::string& s) {
    if (s == "image2d") return FilterMode::image2d;
    if (s == "video2d") return FilterMode::video2d;
    if (s == "video3d") return FilterMode::video3d;
    throw std::invalid_argument("unknown filter mode: " + s);
}

int NetConfig::n_taps() const {
    switch (mode) {
        case FilterMode::image2d: return kh * kw;
        case FilterMode::video2d: return frames() * kh * kw;
        default: return kh * kw * kt;
    }
}

TapPlan NetConfig::tap_plan() const {
    switch (mode) {
        case FilterMode::image2d: return plan_image2d(kh, kw);
        case FilterMode::video2d: return plan_video2d(kh, kw, tau);
        default: return plan_video3d(kh, kw, kt);
    }
}

std::vector<int> NetConfig::widths() const {
    std::vector<int> w(static_cast<size_t>(levels));
    for (int l = 0; l < levels; ++l) w[static_cast<size_t>(l)] = scaled(kBaseWidths[l], width_scale);
    return w;
}

int NetConfig::refine_width() const {
    const int r = levels >= 2 ? 1 : 0;
    return scaled(kBaseWidths[r], width_scale);
}

int NetConfig::weight_head_width() const { return scaled(kBaseWeightHeadWidth, width_scale); }

void NetConfig::validate() const {
    check_shape(tau >= 0, "NetConfig: tau must be non-negative");
    check_shape(mode != FilterMode::image2d || tau == 0, "NetConfig: image2d requires tau == 0");
    check_shape(mode == FilterMode::image2d || tau >= 1,
                "NetConfig: video modes require tau >= 1");
    check_shape(kh > 0 && kh % 2 == 1 && kw > 0 && kw % 2 == 1,
                "NetConfig: spatial kernel extents must be odd");
    check_shape(mode != FilterMode::video3d || (kt > 0 && kt % 2 == 1),
                "NetConfig: temporal kernel extent must be odd");
    check_shape(width_scale > 0.0 && width_scale <= 1.0,
                "NetConfig: width_scale must be in (0,1]");
    check_shape(levels >= 1 && levels <= 5, "NetConfig: levels must be in [1,5]");
    check_shape(max_disp > 0.0, "NetConfig: max_disp must be positive");
}

namespace {

struct ConvSpec {
    std::string name;
    int cin;
    int cout;
};

// Every convolution in creation order; creation order fixes the
// initialization stream, so it must never depend on runtime state.
std::vector<ConvSpec> conv_specs(const NetConfig& cfg) {
    std::vector<ConvSpec> specs;
    const auto w = cfg.widths();
    const int levels = cfg.levels;
    int prev = cfg.in_channels();
    for (int l = 0; l < levels; ++l) {
        const std::string base = "enc" + std::to_string(l) + ".c";
        specs.push_back({base + "0", prev, w[static_cast<size_t>(l)]});
        specs.push_back({base + "1", w[static_cast<size_t>(l)], w[static_cast<size_t>(l)]});
        specs.push_back({base + "2", w[static_cast<size_t>(l)], w[static_cast<size_t>(l)]});
        prev = w[static_cast<size_t>(l)];
    }
    for (int l = levels - 2; l >= 1; --l) {
        const std::string base = "dec" + std::to_string(l) + ".c";
        specs.push_back({base + "0", w[static_cast<size_t>(l + 1)], w[static_cast<size_t>(l)]});
        specs.push_back({base + "1", w[static_cast<size_t>(l)], w[static_cast<size_t>(l)]});
        specs.push_back({base + "2", w[static_cast<size_t>(l)], w[static_cast<size_t>(l)]});
        prev = w[static_cast<size_t>(l)];
    }
    const int rw = cfg.refine_width();
    specs.push_back({"ref.c0", prev, rw});
    specs.push_back({"ref.c1", rw, rw});
    if (!cfg.fixed_grid) specs.push_back({"off", rw, cfg.n_taps() * cfg.comps()});
    if (cfg.dynamic_weights) {
        const int hw = cfg.weight_head_width();
        specs.push_back({"wh.c0", cfg.n_taps() + cfg.in_channels() + rw, hw});
        specs.push_back({"wh.c1", hw, hw});
        specs.push_back({"wh.c2", hw, cfg.n_taps()});
    }
    return specs;
}

}  // namespace

ParamStore build_network(const NetConfig& config, std::uint64_t seed) {
    config.validate();
    ParamStore params;
    auto rng = make_rng(derive_seed(seed, /*stream=*/0));
    for (const ConvSpec& s : conv_specs(config)) {
        Tensor w({s.cout, s.cin, 3, 3});
        const real bound = 1.0 / std::sqrt(static_cast<real>(s.cin) * 9.0);
        for (long i = 0; i < w.size(); ++i) w[i] = uniform_range(rng, -bound, bound);
        params.add(s.name + ".w", std::move(w));
        params.add(s.name + ".b", Tensor({s.cout}));
    }
    return params;
}

namespace {

Var conv_relu(Tape& tape, ParamStore& ps, const std::string& name, const Var& x) {
    return activation(tape, conv2d(tape, x, ps.get(name + ".w"), ps.get(name + ".b")),
                      Activation::relu);
}

Var conv_linear(Tape& tape, ParamStore& ps, const std::string& name, const Var& x) {
    return conv2d(tape, x, ps.get(name + ".w"), ps.get(name + ".b"));
}

}  // namespace

OffsetsResult predict_offsets(Tape& tape, ParamStore& params, const NetConfig& config,
                              const Var& x_in_chw) {
    config.validate();
    check_shape(x_in_chw->value.rank() == 3 && x_in_chw->value.dim(0) == config.in_channels(),
                "predict_offsets: input must be [frames+1,H,W]");
    const int h = x_in_chw->value.dim(1), w = x_in_chw->value.dim(2);
    const int factor = config.down_factor();
    const int hp = (h + factor - 1) / factor * factor;
    const int wp = (w + factor - 1) / factor * factor;

    Var x = x_in_chw;
    if (hp != h || wp != w) {
        const int py = hp - h, px = wp - w;
        x = pad_reflect(tape, x, py / 2, py - py / 2, px / 2, px - px / 2);
    }

    std::vector<Var> skips;
    for (int l = 0; l < config.levels; ++l) {
        if (l > 0) x = resample2x(tape, x, ResampleDir::down);
        const std::string base = "enc" + std::to_string(l) + ".c";
        x = conv_relu(tape, params, base + "0", x);
        x = conv_relu(tape, params, base + "1", x);
        x = conv_relu(tape, params, base + "2", x);
        skips.push_back(x);
    }
    for (int l = config.levels - 2; l >= 1; --l) {
        const std::string base = "dec" + std::to_string(l) + ".c";
        x = resample2x(tape, x, ResampleDir::up);
        // First conv matches this level's width; the congruent encoder
        // activation is summed in before the nonlinearity.
        x = conv_linear(tape, params, base + "0", x);
        x = vadd(tape, x, skips[static_cast<size_t>(l)]);
        x = activation(tape, x, Activation::relu);
        x = conv_relu(tape, params, base + "1", x);
        x = conv_relu(tape, params, base + "2", x);
    }
    if (config.levels >= 2) x = resample2x(tape, x, ResampleDir::up);
    x = conv_relu(tape, params, "ref.c0", x);
    x = conv_relu(tape, params, "ref.c1", x);

    Var features = x;
    if (hp != h || wp != w) {
        const int py = hp - h, px = wp - w;
        features = crop_hw(tape, features, py / 2, px / 2, h, w);
    }

    const int n_taps = config.n_taps(), comps = config.comps();
    Var v;
    if (config.fixed_grid) {
        v = leaf(Tensor({h, w, n_taps, comps}));
    } else {
        Var o = conv_linear(tape, params, "off", x);
        if (hp != h || wp != w) {
            const int py = hp - h, px = wp - w;
            o = crop_hw(tape, o, py / 2, px / 2, h, w);
        }
        o = activation(tape, o, Activation::tanh);
        // Per-component bounds: spatial offsets scale by max_disp, temporal
        // offsets by tau (so |t| can reach the outermost frames).
        Tensor scale({n_taps * comps, h, w});
        for (int n = 0; n < n_taps; ++n)
            for (int c = 0; c < comps; ++c) {
                const real s = (c == 2) ? static_cast<real>(config.tau) : config.max_disp;
                const long base = (static_cast<long>(n) * comps + c) * h * w;
                for (long i = 0; i < static_cast<long>(h) * w; ++i) scale[base + i] = s;
            }
        o = cmul(tape, o, scale);
        v = chw_to_taps(tape, o, n_taps, comps);
    }
    return {v, features};
}

Var predict_weights(Tape& tape, ParamStore& params, const NetConfig& config, const Var& sampled,
                    const Var& x_in_chw, const Var& features) {
    check_shape(config.dynamic_weights, "predict_weights: weight head disabled by config");
    check_shape(sampled->value.rank() == 3 && sampled->value.dim(2) == config.n_taps(),
                "predict_weights: sampled pixels must be [H,W,N]");
    Var cat = concat_ch(tape, {hwn_to_chw(tape, sampled), x_in_chw, features});
    Var x = conv_relu(tape, params, "wh.c0", cat);
    x = conv_relu(tape, params, "wh.c1", x);
    x = conv_linear(tape, params, "wh.c2", x);
    return chw_to_hwn(tape, x);
}

DenoiseResult forward_denoise(Tape& tape, ParamStore& params, const NetConfig& config,
                              const Tensor& noisy_seq, const Tensor& noise_map, int n_groups) {
    config.validate();
    check_shape(noisy_seq.rank() == 3 && noisy_seq.dim(2) == config.frames(),
                "forward_denoise: sequence must be [H,W,2tau+1]");
    const int h = noisy_seq.dim(0), w = noisy_seq.dim(1);

    Tensor noise_ch({1, h, w});
    if (!config.blind) {
        check_shape(noise_map.rank() == 2 && noise_map.dim(0) == h && noise_map.dim(1) == w,
                    "forward_denoise: noise map must be [H,W] in non-blind mode");
        for (long i = 0; i < noise_map.size(); ++i) noise_ch[i] = noise_map[i];
    }

    DenoiseResult r;
    r.x_seq = leaf(noisy_seq);
    Var x_in = concat_ch(tape, {seq_to_chw(tape, r.x_seq), leaf(std::move(noise_ch))});

    OffsetsResult off = predict_offsets(tape, params, config, x_in);
    r.v = off.v;

    const TapPlan plan = config.tap_plan();
    r.taps = sample_taps(tape, r.x_seq, plan, r.v);

    if (config.dynamic_weights) {
        r.f = predict_weights(tape, params, config, r.taps, x_in, off.features);
    } else {
        r.f = leaf(Tensor::full({h, w, plan.size()}, 1.0 / static_cast<real>(plan.size())));
    }

    r.y = tap_dot(tape, r.taps, r.f);

    if (n_groups > 0) {
        const int n_taps = plan.size();
        check_shape(n_taps % n_groups == 0, "forward_denoise: tap count not divisible by groups");
        const int block = n_taps / n_groups;
        for (int i = 0; i < n_groups; ++i)
            r.groups.push_back(tap_dot_range(tape, r.taps, r.f, i * block, (i + 1) * block,
                                             static_cast<real>(n_groups)));
    }
    return r;
}

}  // namespace defkern
