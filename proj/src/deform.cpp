#include "defkern/deform.hpp"

#include "defkern/resample.hpp"

namespace defkern {

namespace {

void check_odd(int k, const char* what) {
    check_shape(k > 0 && k % 2 == 1, what);
}

void check_vf_2d(const Tensor& x, const Tensor& v, const Tensor& f, int n_taps) {
    check_shape(x.rank() == 2, "filter2d: image must be [H,W]");
    check_shape(v.rank() == 4 && v.dim(0) == x.dim(0) && v.dim(1) == x.dim(1) &&
                    v.dim(2) == n_taps && v.dim(3) == 2,
                "filter2d: offsets must be [H,W,N,2]");
    check_shape(f.rank() == 3 && f.dim(0) == x.dim(0) && f.dim(1) == x.dim(1) &&
                    f.dim(2) == n_taps,
                "filter2d: weights must be [H,W,N]");
}

void check_vf_3d(const Tensor& x, const Tensor& v, const Tensor& f, int n_taps) {
    check_shape(x.rank() == 3, "filter3d: sequence must be [H,W,T]");
    check_shape(v.rank() == 4 && v.dim(0) == x.dim(0) && v.dim(1) == x.dim(1) &&
                    v.dim(2) == n_taps && v.dim(3) == 3,
                "filter3d: offsets must be [H,W,N,3]");
    check_shape(f.rank() == 3 && f.dim(0) == x.dim(0) && f.dim(1) == x.dim(1) &&
                    f.dim(2) == n_taps,
                "filter3d: weights must be [H,W,N]");
}

}  // namespace

RigidGrid rigid_grid(int kh, int kw) {
    check_odd(kh, "rigid_grid: kh must be odd");
    check_odd(kw, "rigid_grid: kw must be odd");
    RigidGrid g;
    for (int dy = -(kh - 1) / 2; dy <= (kh - 1) / 2; ++dy)
        for (int dx = -(kw - 1) / 2; dx <= (kw - 1) / 2; ++dx) g.taps.push_back({dy, dx, 0});
    return g;
}

RigidGrid rigid_grid(int kh, int kw, int kt) {
    check_odd(kh, "rigid_grid: kh must be odd");
    check_odd(kw, "rigid_grid: kw must be odd");
    check_odd(kt, "rigid_grid: kt must be odd");
    RigidGrid g;
    g.temporal = true;
    for (int dy = -(kh - 1) / 2; dy <= (kh - 1) / 2; ++dy)
        for (int dx = -(kw - 1) / 2; dx <= (kw - 1) / 2; ++dx)
            for (int dt = -(kt - 1) / 2; dt <= (kt - 1) / 2; ++dt) g.taps.push_back({dy, dx, dt});
    return g;
}

Tensor filter2d_deformable(const Tensor& x_img, const RigidGrid& grid, const Tensor& v,
                           const Tensor& f) {
    const int n_taps = grid.size();
    check_vf_2d(x_img, v, f, n_taps);
    const int h = x_img.dim(0), w = x_img.dim(1);
    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real acc = 0.0;
            for (int n = 0; n < n_taps; ++n) {
                const real yy = y + grid.taps[static_cast<size_t>(n)].dy + v.at(y, x, n, 1);
                const real xx = x + grid.taps[static_cast<size_t>(n)].dx + v.at(y, x, n, 0);
                acc += f.at(y, x, n) * sample_bilinear(x_img, yy, xx);
            }
            out.at(y, x) = acc;
        }
    return out;
}

Tensor filter2d_per_frame(const Tensor& x_seq, const RigidGrid& grid,
                          const std::vector<Tensor>& v_t, const std::vector<Tensor>& f_t) {
    check_shape(x_seq.rank() == 3, "filter2d_per_frame: sequence must be [H,W,T]");
    const int t_n = x_seq.dim(2);
    check_shape(static_cast<int>(v_t.size()) == t_n && static_cast<int>(f_t.size()) == t_n,
                "filter2d_per_frame: need one offset/weight pair per frame");
    const int h = x_seq.dim(0), w = x_seq.dim(1);
    Tensor out({h, w});
    for (int t = 0; t < t_n; ++t) {
        Tensor frame({h, w});
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) frame.at(y, x) = x_seq.at(y, x, t);
        out.axpy(1.0, filter2d_deformable(frame, grid, v_t[static_cast<size_t>(t)],
                                          f_t[static_cast<size_t>(t)]));
    }
    return out;
}

Tensor filter3d_deformable(const Tensor& x_seq, const RigidGrid& grid, const Tensor& v,
                           const Tensor& f) {
    check_shape(grid.temporal, "filter3d: grid must be three-dimensional");
    return filter_group(x_seq, grid, v, f, 1, 1);
}

Tensor filter_group(const Tensor& x_seq, const RigidGrid& grid, const Tensor& v, const Tensor& f,
                    int group_index, int s) {
    const int n_taps = grid.size();
    check_vf_3d(x_seq, v, f, n_taps);
    check_shape(s >= 1 && n_taps % s == 0, "filter_group: tap count not divisible by s");
    check_shape(group_index >= 1 && group_index <= s, "filter_group: group index out of range");
    const int block = n_taps / s;
    const int n0 = (group_index - 1) * block, n1 = group_index * block;
    const int h = x_seq.dim(0), w = x_seq.dim(1);
    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real acc = 0.0;
            for (int n = n0; n < n1; ++n) {
                const Tap& tap = grid.taps[static_cast<size_t>(n)];
                const real yy = y + tap.dy + v.at(y, x, n, 1);
                const real xx = x + tap.dx + v.at(y, x, n, 0);
                const real tt = tap.dt + v.at(y, x, n, 2);
                acc += f.at(y, x, n) * sample_trilinear(x_seq, yy, xx, tt);
            }
            out.at(y, x) = static_cast<real>(s) * acc;
        }
    return out;
}

TapPlan plan_image2d(int kh, int kw) {
    TapPlan p;
    p.taps = rigid_grid(kh, kw).taps;
    p.comps = 2;
    return p;
}

TapPlan plan_video2d(int kh, int kw, int tau) {
    check_shape(tau >= 0, "plan_video2d: tau must be non-negative");
    TapPlan p;
    p.comps = 2;
    const RigidGrid spatial = rigid_grid(kh, kw);
    for (int t = -tau; t <= tau; ++t)
        for (const Tap& tap : spatial.taps) p.taps.push_back({tap.dy, tap.dx, t});
    return p;
}

TapPlan plan_video3d(int kh, int kw, int kt) {
    TapPlan p;
    p.taps = rigid_grid(kh, kw, kt).taps;
    p.comps = 3;
    return p;
}

Tensor sample_taps_forward(const Tensor& x_seq, const TapPlan& plan, const Tensor& v) {
    check_shape(x_seq.rank() == 3, "sample_taps: sequence must be [H,W,T]");
    const int n_taps = plan.size();
    check_shape(v.rank() == 4 && v.dim(0) == x_seq.dim(0) && v.dim(1) == x_seq.dim(1) &&
                    v.dim(2) == n_taps && v.dim(3) == plan.comps,
                "sample_taps: offsets must be [H,W,N,comps]");
    const int h = x_seq.dim(0), w = x_seq.dim(1);
    Tensor s({h, w, n_taps});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int n = 0; n < n_taps; ++n) {
                const Tap& tap = plan.taps[static_cast<size_t>(n)];
                const real yy = y + tap.dy + v.at(y, x, n, 1);
                const real xx = x + tap.dx + v.at(y, x, n, 0);
                const real tt = tap.dt + (plan.comps == 3 ? v.at(y, x, n, 2) : 0.0);
                s.at(y, x, n) = sample_trilinear(x_seq, yy, xx, tt);
            }
    return s;
}

Var sample_taps(Tape& tape, const Var& x_seq, const TapPlan& plan, const Var& v) {
    Var s = tape.make(sample_taps_forward(x_seq->value, plan, v->value));
    tape.record([x_seq, v, s, plan] {
        const int h = x_seq->value.dim(0), w = x_seq->value.dim(1);
        const int n_taps = plan.size();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int n = 0; n < n_taps; ++n) {
                    const real g = s->grad.at(y, x, n);
                    if (g == 0.0) continue;
                    const Tap& tap = plan.taps[static_cast<size_t>(n)];
                    const real yy = y + tap.dy + v->value.at(y, x, n, 1);
                    const real xx = x + tap.dx + v->value.at(y, x, n, 0);
                    const real tt = tap.dt + (plan.comps == 3 ? v->value.at(y, x, n, 2) : 0.0);
                    real gy = 0, gx = 0, gt = 0;
                    sample_trilinear_backward(x_seq->value, yy, xx, tt, g, x_seq->grad, gy, gx,
                                              gt);
                    v->grad.at(y, x, n, 0) += gx;
                    v->grad.at(y, x, n, 1) += gy;
                    if (plan.comps == 3) v->grad.at(y, x, n, 2) += gt;
                }
    });
    return s;
}

Var tap_dot(Tape& tape, const Var& s, const Var& f) {
    check_shape(s->value.same_shape(f->value) && s->value.rank() == 3,
                "tap_dot: samples and weights must both be [H,W,N]");
    return tap_dot_range(tape, s, f, 0, s->value.dim(2), 1.0);
}

Var tap_dot_range(Tape& tape, const Var& s, const Var& f, int n0, int n1, real scale) {
    check_shape(s->value.same_shape(f->value) && s->value.rank() == 3,
                "tap_dot_range: samples and weights must both be [H,W,N]");
    check_shape(0 <= n0 && n0 < n1 && n1 <= s->value.dim(2), "tap_dot_range: bad tap range");
    const int h = s->value.dim(0), w = s->value.dim(1);
    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real acc = 0.0;
            for (int n = n0; n < n1; ++n) acc += s->value.at(y, x, n) * f->value.at(y, x, n);
            out.at(y, x) = scale * acc;
        }
    Var o = tape.make(std::move(out));
    tape.record([s, f, o, n0, n1, scale, h, w] {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const real g = scale * o->grad.at(y, x);
                if (g == 0.0) continue;
                for (int n = n0; n < n1; ++n) {
                    s->grad.at(y, x, n) += g * f->value.at(y, x, n);
                    f->grad.at(y, x, n) += g * s->value.at(y, x, n);
                }
            }
    });
    return o;
}

}  // namespace defkern
