#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "defkern/color_noise.hpp"
#include "defkern/loss.hpp"
#include "defkern/rng.hpp"
#include "testutil.hpp"

using namespace defkern;
using testutil::random_tensor;

TEST_CASE("matching tensors have zero loss and zero gradient") {
    auto rng = make_rng(71);
    const Tensor y = random_tensor(rng, {4, 5}, 0.05, 0.95);
    Tape tape;
    const Var a = leaf(y), b = leaf(y);
    const Var loss = l1_gamma_loss(tape, a, b);
    CHECK(loss->value[0] == 0.0);
    tape.backward(loss);
    for (long k = 0; k < y.size(); ++k) {
        CHECK(a->grad[k] == 0.0);
        CHECK(b->grad[k] == 0.0);
    }
}

TEST_CASE("loss equals the mean absolute gamma-space difference") {
    auto rng = make_rng(72);
    const Tensor y = random_tensor(rng, {3, 4}, 0.0, 1.0);
    const Tensor ygt = random_tensor(rng, {3, 4}, 0.0, 1.0);
    real want = 0.0;
    for (long k = 0; k < y.size(); ++k) want += std::abs(gamma_scalar(y[k]) - gamma_scalar(ygt[k]));
    want /= real(y.size());

    Tape tape;
    const Var loss = l1_gamma_loss(tape, leaf(y), leaf(ygt));
    CHECK(loss->value[0] == doctest::Approx(want).epsilon(1e-14));

    // Symmetry in the two arguments.
    Tape tape2;
    const Var loss2 = l1_gamma_loss(tape2, leaf(ygt), leaf(y));
    CHECK(loss2->value[0] == doctest::Approx(loss->value[0]).epsilon(1e-15));
}

TEST_CASE("single-pixel oracle values") {
    // |phi(0.5) - phi(0.25)| with phi the display transfer.
    Tensor y({1}, {0.5});
    Tensor ygt({1}, {0.25});
    Tape tape;
    const Var loss = l1_gamma_loss(tape, leaf(y), leaf(ygt));
    const real want = 0.7353569830524495 - gamma_scalar(0.25);
    CHECK(loss->value[0] == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("loss gradient matches finite differences away from kinks") {
    auto rng = make_rng(73);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor y = random_tensor(rng, {3, 3}, 0.01, 1.0);
        Tensor ygt = random_tensor(rng, {3, 3}, 0.01, 1.0);
        for (long k = 0; k < y.size(); ++k) {
            // Stay clear of the transfer knee and the |.| kink.
            if (std::abs(y[k] - GammaParams::threshold) < 1e-3) y[k] += 2e-3;
            if (std::abs(ygt[k] - GammaParams::threshold) < 1e-3) ygt[k] += 2e-3;
            if (std::abs(y[k] - ygt[k]) < 1e-3) y[k] += 2e-3;
        }
        Tape tape;
        const Var a = leaf(y), b = leaf(ygt);
        const Var loss = l1_gamma_loss(tape, a, b);
        tape.backward(loss);

        Tensor yc = y, gc = ygt;
        auto eval = [&] {
            real acc = 0.0;
            for (long k = 0; k < yc.size(); ++k)
                acc += std::abs(gamma_scalar(yc[k]) - gamma_scalar(gc[k]));
            return acc / real(yc.size());
        };
        for (long k = 0; k < y.size(); ++k) {
            CHECK(std::abs(a->grad[k] - testutil::fd_slot(eval, &yc[k], 1e-6)) <= 1e-6);
            CHECK(std::abs(b->grad[k] - testutil::fd_slot(eval, &gc[k], 1e-6)) <= 1e-6);
        }
    }
}

TEST_CASE("annealing weight starts at eta and decays geometrically") {
    const AnnealSchedule sched;
    CHECK(anneal_weight(sched, 0) == 100.0);
    CHECK(anneal_weight(sched, 1) == doctest::Approx(100.0 * 0.9998).epsilon(1e-15));
    CHECK(anneal_weight(sched, 1000) ==
          doctest::Approx(100.0 * std::pow(0.9998, 1000)).epsilon(1e-12));
    // Monotone decreasing, crossing 1.0 between iterations 23023 and 23024.
    CHECK(anneal_weight(sched, 23023) > 1.0);
    CHECK(anneal_weight(sched, 23024) < 1.0);
    for (long p : {0L, 10L, 100L, 5000L})
        CHECK(anneal_weight(sched, p) > anneal_weight(sched, p + 1));
}

TEST_CASE("total loss composes the data term and the group penalty") {
    auto rng = make_rng(74);
    const Tensor y = random_tensor(rng, {4, 4}, 0.0, 1.0);
    const Tensor ygt = random_tensor(rng, {4, 4}, 0.0, 1.0);
    std::vector<Tensor> groups;
    for (int i = 0; i < 3; ++i) groups.push_back(random_tensor(rng, {4, 4}, 0.0, 1.0));

    auto scalar_l1 = [](const Tensor& a, const Tensor& b) {
        real acc = 0.0;
        for (long k = 0; k < a.size(); ++k)
            acc += std::abs(gamma_scalar(a[k]) - gamma_scalar(b[k]));
        return acc / real(a.size());
    };
    const real l1_main = scalar_l1(y, ygt);
    const real l1_groups = (scalar_l1(groups[0], ygt) + scalar_l1(groups[1], ygt) +
                            scalar_l1(groups[2], ygt)) / 3.0;

    const AnnealSchedule sched;
    for (long p : {0L, 500L}) {
        Tape tape;
        std::vector<Var> gv;
        for (const Tensor& g : groups) gv.push_back(leaf(g));
        const Var total = total_loss(tape, leaf(y), gv, leaf(ygt), p, sched);
        const real w = anneal_weight(sched, p);
        CHECK(total->value[0] == doctest::Approx(l1_main + w * l1_groups).epsilon(1e-12));
        CHECK(total->value[0] >= l1_main);
    }

    // Explicit zero weight reduces to the plain data term.
    Tape tape;
    std::vector<Var> gv;
    for (const Tensor& g : groups) gv.push_back(leaf(g));
    const Var plain = total_loss_weighted(tape, leaf(y), gv, leaf(ygt), 0.0);
    CHECK(plain->value[0] == doctest::Approx(l1_main).epsilon(1e-14));

    // No groups reduces to the data term even under a positive weight.
    Tape tape2;
    const Var bare = total_loss_weighted(tape2, leaf(y), {}, leaf(ygt), 10.0);
    CHECK(bare->value[0] == doctest::Approx(l1_main).epsilon(1e-14));

    // The group count must match the schedule.
    Tape tape3;
    std::vector<Var> two = {leaf(groups[0]), leaf(groups[1])};
    CHECK_THROWS_AS(total_loss(tape3, leaf(y), two, leaf(ygt), 0, sched), std::invalid_argument);
}

TEST_CASE("total loss gradients flow into main and group predictions") {
    auto rng = make_rng(75);
    Tensor y = random_tensor(rng, {3, 3}, 0.1, 0.9);
    Tensor ygt = random_tensor(rng, {3, 3}, 0.1, 0.9);
    std::vector<Tensor> groups = {random_tensor(rng, {3, 3}, 0.1, 0.9),
                                  random_tensor(rng, {3, 3}, 0.1, 0.9)};
    for (long k = 0; k < y.size(); ++k) {
        if (std::abs(y[k] - ygt[k]) < 1e-3) y[k] += 2e-3;
        for (Tensor& g : groups)
            if (std::abs(g[k] - ygt[k]) < 1e-3) g[k] += 2e-3;
    }
    AnnealSchedule sched;
    sched.s = 2;
    const long p = 100;

    Tape tape;
    const Var yv = leaf(y), gtv = leaf(ygt);
    std::vector<Var> gv = {leaf(groups[0]), leaf(groups[1])};
    const Var total = total_loss(tape, yv, gv, gtv, p, sched);
    tape.backward(total);

    Tensor yc = y, gt_c = ygt;
    std::vector<Tensor> gc = groups;
    auto scalar_l1 = [](const Tensor& a, const Tensor& b) {
        real acc = 0.0;
        for (long k = 0; k < a.size(); ++k)
            acc += std::abs(gamma_scalar(a[k]) - gamma_scalar(b[k]));
        return acc / real(a.size());
    };
    auto eval = [&] {
        return scalar_l1(yc, gt_c) +
               anneal_weight(sched, p) * 0.5 * (scalar_l1(gc[0], gt_c) + scalar_l1(gc[1], gt_c));
    };
    for (long k = 0; k < y.size(); ++k) {
        CHECK(std::abs(yv->grad[k] - testutil::fd_slot(eval, &yc[k], 1e-6)) <= 1e-5);
        CHECK(std::abs(gv[0]->grad[k] - testutil::fd_slot(eval, &gc[0][k], 1e-6)) <= 1e-5);
        CHECK(std::abs(gv[1]->grad[k] - testutil::fd_slot(eval, &gc[1][k], 1e-6)) <= 1e-5);
    }
}
