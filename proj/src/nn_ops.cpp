#include "defkern/nn_ops.hpp"

#include <algorithm>
#include <cmath>

namespace defkern {

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check_shape(input.rank() == 3, "conv2d: input must be [C_in,H,W]");
    check_shape(weights.rank() == 4, "conv2d: weights must be [C_out,C_in,kh,kw]");
    check_shape(bias.rank() == 1 && bias.dim(0) == weights.dim(0),
                "conv2d: bias length must equal C_out");
    check_shape(weights.dim(1) == input.dim(0),
                "conv2d: weights C_in does not match input channels");
    check_shape(weights.dim(2) % 2 == 1 && weights.dim(3) % 2 == 1,
                "conv2d: kernel extents must be odd");
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check_conv_shapes(input, weights, bias);
    const int ci_n = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int co_n = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const long plane = static_cast<long>(h) * w;

    Tensor out({co_n, h, w});
    for (int co = 0; co < co_n; ++co) {
        real* op = out.data() + co * plane;
        const real b = bias[co];
        for (long i = 0; i < plane; ++i) op[i] = b;
        for (int ci = 0; ci < ci_n; ++ci) {
            const real* ip = input.data() + ci * plane;
            const real* wp = weights.data() + (static_cast<long>(co) * ci_n + ci) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
                const int dy = ky - ph;
                for (int kx = 0; kx < kw; ++kx) {
                    const int dx = kx - pw;
                    const real wv = wp[ky * kw + kx];
                    const int y0 = std::max(0, -dy), y1 = h - std::max(0, dy);
                    const int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);
                    for (int y = y0; y < y1; ++y) {
                        real* orow = op + static_cast<long>(y) * w;
                        const real* irow = ip + static_cast<long>(y + dy) * w + dx;
                        for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                     Tensor& grad_input, Tensor& grad_weights, Tensor& grad_bias) {
    const int ci_n = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int co_n = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const long plane = static_cast<long>(h) * w;

    for (int co = 0; co < co_n; ++co) {
        const real* gp = grad_out.data() + co * plane;
        real gb = 0;
        for (long i = 0; i < plane; ++i) gb += gp[i];
        grad_bias[co] += gb;
        for (int ci = 0; ci < ci_n; ++ci) {
            const real* ip = input.data() + ci * plane;
            real* gip = grad_input.data() + ci * plane;
            const long wbase = (static_cast<long>(co) * ci_n + ci) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
                const int dy = ky - ph;
                for (int kx = 0; kx < kw; ++kx) {
                    const int dx = kx - pw;
                    const real wv = weights[wbase + ky * kw + kx];
                    const int y0 = std::max(0, -dy), y1 = h - std::max(0, dy);
                    const int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);
                    real gw = 0;
                    for (int y = y0; y < y1; ++y) {
                        const real* grow = gp + static_cast<long>(y) * w;
                        const real* irow = ip + static_cast<long>(y + dy) * w + dx;
                        real* girow = gip + static_cast<long>(y + dy) * w + dx;
                        for (int x = x0; x < x1; ++x) {
                            gw += grow[x] * irow[x];
                            girow[x] += wv * grow[x];
                        }
                    }
                    grad_weights[wbase + ky * kw + kx] += gw;
                }
            }
        }
    }
}

Var conv2d(Tape& tape, const Var& input, const Var& weights, const Var& bias) {
    Var out = tape.make(conv2d_forward(input->value, weights->value, bias->value));
    tape.record([input, weights, bias, out] {
        conv2d_backward(input->value, weights->value, out->grad, input->grad, weights->grad,
                        bias->grad);
    });
    return out;
}

Tensor activation_forward(const Tensor& input, Activation kind) {
    Tensor out(input.shape());
    const long n = input.size();
    if (kind == Activation::relu) {
        for (long i = 0; i < n; ++i) out[i] = input[i] > 0 ? input[i] : 0.0;
    } else {
        for (long i = 0; i < n; ++i) out[i] = std::tanh(input[i]);
    }
    return out;
}

Var activation(Tape& tape, const Var& input, Activation kind) {
    Var out = tape.make(activation_forward(input->value, kind));
    if (kind == Activation::relu) {
        tape.record([input, out] {
            const long n = input->value.size();
            for (long i = 0; i < n; ++i)
                if (input->value[i] > 0) input->grad[i] += out->grad[i];
        });
    } else {
        tape.record([input, out] {
            const long n = input->value.size();
            for (long i = 0; i < n; ++i) {
                const real t = out->value[i];
                input->grad[i] += (1.0 - t * t) * out->grad[i];
            }
        });
    }
    return out;
}

Tensor resample2x_forward(const Tensor& input, ResampleDir dir) {
    check_shape(input.rank() == 3, "resample2x: input must be [C,H,W]");
    const int c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (dir == ResampleDir::down) {
        check_shape(h % 2 == 0 && w % 2 == 0, "resample2x: down requires even extents");
        Tensor out({c_n, h / 2, w / 2});
        for (int c = 0; c < c_n; ++c)
            for (int y = 0; y < h / 2; ++y)
                for (int x = 0; x < w / 2; ++x) {
                    // Pairwise sums keep down(up(X)) == X bit-exact.
                    const real a = input.at(c, 2 * y, 2 * x) + input.at(c, 2 * y, 2 * x + 1);
                    const real b = input.at(c, 2 * y + 1, 2 * x) + input.at(c, 2 * y + 1, 2 * x + 1);
                    out.at(c, y, x) = (a + b) * 0.25;
                }
        return out;
    }
    Tensor out({c_n, h * 2, w * 2});
    for (int c = 0; c < c_n; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const real v = input.at(c, y, x);
                out.at(c, 2 * y, 2 * x) = v;
                out.at(c, 2 * y, 2 * x + 1) = v;
                out.at(c, 2 * y + 1, 2 * x) = v;
                out.at(c, 2 * y + 1, 2 * x + 1) = v;
            }
    return out;
}

Var resample2x(Tape& tape, const Var& input, ResampleDir dir) {
    Var out = tape.make(resample2x_forward(input->value, dir));
    const int c_n = input->value.dim(0);
    if (dir == ResampleDir::down) {
        tape.record([input, out, c_n] {
            const int oh = out->value.dim(1), ow = out->value.dim(2);
            for (int c = 0; c < c_n; ++c)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        const real g = out->grad.at(c, y, x) * 0.25;
                        input->grad.at(c, 2 * y, 2 * x) += g;
                        input->grad.at(c, 2 * y, 2 * x + 1) += g;
                        input->grad.at(c, 2 * y + 1, 2 * x) += g;
                        input->grad.at(c, 2 * y + 1, 2 * x + 1) += g;
                    }
        });
    } else {
        tape.record([input, out, c_n] {
            const int ih = input->value.dim(1), iw = input->value.dim(2);
            for (int c = 0; c < c_n; ++c)
                for (int y = 0; y < ih; ++y)
                    for (int x = 0; x < iw; ++x) {
                        input->grad.at(c, y, x) +=
                            (out->grad.at(c, 2 * y, 2 * x) + out->grad.at(c, 2 * y, 2 * x + 1)) +
                            (out->grad.at(c, 2 * y + 1, 2 * x) +
                             out->grad.at(c, 2 * y + 1, 2 * x + 1));
                    }
        });
    }
    return out;
}

Var vadd(Tape& tape, const Var& a, const Var& b) {
    check_shape(a->value.same_shape(b->value), "vadd: shape mismatch");
    Tensor out = a->value;
    out.axpy(1.0, b->value);
    Var o = tape.make(std::move(out));
    tape.record([a, b, o] {
        a->grad.axpy(1.0, o->grad);
        b->grad.axpy(1.0, o->grad);
    });
    return o;
}

Var vscale(Tape& tape, const Var& a, real c) {
    Tensor out = a->value;
    out.scale(c);
    Var o = tape.make(std::move(out));
    tape.record([a, o, c] { a->grad.axpy(c, o->grad); });
    return o;
}

Var cmul(Tape& tape, const Var& a, const Tensor& factor) {
    check_shape(a->value.same_shape(factor), "cmul: shape mismatch");
    Tensor out(a->value.shape());
    for (long i = 0; i < out.size(); ++i) out[i] = a->value[i] * factor[i];
    Var o = tape.make(std::move(out));
    tape.record([a, o, factor] {
        for (long i = 0; i < factor.size(); ++i) a->grad[i] += factor[i] * o->grad[i];
    });
    return o;
}

Var vdot(Tape& tape, const Var& a, const Tensor& weights) {
    check_shape(a->value.same_shape(weights), "vdot: shape mismatch");
    real acc = 0.0;
    for (long i = 0; i < weights.size(); ++i) acc += a->value[i] * weights[i];
    Var o = tape.make(Tensor::scalar(acc));
    tape.record([a, o, weights] {
        const real g = o->grad[0];
        for (long i = 0; i < weights.size(); ++i) a->grad[i] += g * weights[i];
    });
    return o;
}

Var concat_ch(Tape& tape, const std::vector<Var>& parts) {
    check_shape(!parts.empty(), "concat_ch: no inputs");
    const int h = parts[0]->value.dim(1), w = parts[0]->value.dim(2);
    int c_total = 0;
    for (const auto& p : parts) {
        check_shape(p->value.rank() == 3 && p->value.dim(1) == h && p->value.dim(2) == w,
                    "concat_ch: spatial shape mismatch");
        c_total += p->value.dim(0);
    }
    const long plane = static_cast<long>(h) * w;
    Tensor out({c_total, h, w});
    long off = 0;
    for (const auto& p : parts) {
        const long n = p->value.size();
        std::copy(p->value.data(), p->value.data() + n, out.data() + off);
        off += n;
    }
    Var o = tape.make(std::move(out));
    tape.record([parts, o, plane] {
        long off2 = 0;
        for (const auto& p : parts) {
            const long n = p->value.size();
            for (long i = 0; i < n; ++i) p->grad[i] += o->grad[off2 + i];
            off2 += n;
        }
    });
    return o;
}

namespace {
// Mirror an index into [0,n) without repeating the edge sample.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}
}  // namespace

Var pad_reflect(Tape& tape, const Var& input, int top, int bottom, int left, int right) {
    check_shape(input->value.rank() == 3, "pad_reflect: input must be [C,H,W]");
    const int c_n = input->value.dim(0), h = input->value.dim(1), w = input->value.dim(2);
    const int max_y = h - 1 + (h == 1), max_x = w - 1 + (w == 1);
    check_shape(top >= 0 && bottom >= 0 && left >= 0 && right >= 0 && top <= max_y &&
                    bottom <= max_y && left <= max_x && right <= max_x,
                "pad_reflect: pad exceeds extent");
    std::vector<int> ymap(static_cast<size_t>(h + top + bottom));
    std::vector<int> xmap(static_cast<size_t>(w + left + right));
    for (int y = 0; y < h + top + bottom; ++y)
        ymap[static_cast<size_t>(y)] = reflect_index(y - top, h);
    for (int x = 0; x < w + left + right; ++x)
        xmap[static_cast<size_t>(x)] = reflect_index(x - left, w);

    Tensor out({c_n, h + top + bottom, w + left + right});
    for (int c = 0; c < c_n; ++c)
        for (int y = 0; y < out.dim(1); ++y)
            for (int x = 0; x < out.dim(2); ++x)
                out.at(c, y, x) = input->value.at(c, ymap[static_cast<size_t>(y)],
                                                  xmap[static_cast<size_t>(x)]);
    Var o = tape.make(std::move(out));
    tape.record([input, o, ymap, xmap, c_n] {
        for (int c = 0; c < c_n; ++c)
            for (int y = 0; y < o->value.dim(1); ++y)
                for (int x = 0; x < o->value.dim(2); ++x)
                    input->grad.at(c, ymap[static_cast<size_t>(y)], xmap[static_cast<size_t>(x)]) +=
                        o->grad.at(c, y, x);
    });
    return o;
}

Var crop_hw(Tape& tape, const Var& input, int y0, int x0, int h, int w) {
    check_shape(input->value.rank() == 3, "crop_hw: input must be [C,H,W]");
    check_shape(y0 >= 0 && x0 >= 0 && y0 + h <= input->value.dim(1) &&
                    x0 + w <= input->value.dim(2),
                "crop_hw: window out of range");
    const int c_n = input->value.dim(0);
    Tensor out({c_n, h, w});
    for (int c = 0; c < c_n; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = input->value.at(c, y0 + y, x0 + x);
    Var o = tape.make(std::move(out));
    tape.record([input, o, y0, x0, h, w, c_n] {
        for (int c = 0; c < c_n; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    input->grad.at(c, y0 + y, x0 + x) += o->grad.at(c, y, x);
    });
    return o;
}

Var seq_to_chw(Tape& tape, const Var& seq) {
    check_shape(seq->value.rank() == 3, "seq_to_chw: input must be [H,W,T]");
    const int h = seq->value.dim(0), w = seq->value.dim(1), t_n = seq->value.dim(2);
    Tensor out({t_n, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int t = 0; t < t_n; ++t) out.at(t, y, x) = seq->value.at(y, x, t);
    Var o = tape.make(std::move(out));
    tape.record([seq, o, h, w, t_n] {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int t = 0; t < t_n; ++t) seq->grad.at(y, x, t) += o->grad.at(t, y, x);
    });
    return o;
}

Var chw_to_taps(Tape& tape, const Var& maps, int n_taps, int comps) {
    check_shape(maps->value.rank() == 3 && maps->value.dim(0) == n_taps * comps,
                "chw_to_taps: channel count must be n_taps*comps");
    const int h = maps->value.dim(1), w = maps->value.dim(2);
    Tensor out({h, w, n_taps, comps});
    for (int n = 0; n < n_taps; ++n)
        for (int c = 0; c < comps; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out.at(y, x, n, c) = maps->value.at(n * comps + c, y, x);
    Var o = tape.make(std::move(out));
    tape.record([maps, o, n_taps, comps, h, w] {
        for (int n = 0; n < n_taps; ++n)
            for (int c = 0; c < comps; ++c)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        maps->grad.at(n * comps + c, y, x) += o->grad.at(y, x, n, c);
    });
    return o;
}

Var chw_to_hwn(Tape& tape, const Var& maps) {
    check_shape(maps->value.rank() == 3, "chw_to_hwn: input must be [N,H,W]");
    const int n_taps = maps->value.dim(0), h = maps->value.dim(1), w = maps->value.dim(2);
    Tensor out({h, w, n_taps});
    for (int n = 0; n < n_taps; ++n)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(y, x, n) = maps->value.at(n, y, x);
    Var o = tape.make(std::move(out));
    tape.record([maps, o, n_taps, h, w] {
        for (int n = 0; n < n_taps; ++n)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) maps->grad.at(n, y, x) += o->grad.at(y, x, n);
    });
    return o;
}

Var hwn_to_chw(Tape& tape, const Var& field) {
    check_shape(field->value.rank() == 3, "hwn_to_chw: input must be [H,W,N]");
    const int h = field->value.dim(0), w = field->value.dim(1), n_taps = field->value.dim(2);
    Tensor out({n_taps, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int n = 0; n < n_taps; ++n) out.at(n, y, x) = field->value.at(y, x, n);
    Var o = tape.make(std::move(out));
    tape.record([field, o, n_taps, h, w] {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int n = 0; n < n_taps; ++n) field->grad.at(y, x, n) += o->grad.at(n, y, x);
    });
    return o;
}

}  // namespace defkern
