#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "defkern/optimizer.hpp"
#include "defkern/rng.hpp"
#include "testutil.hpp"

using namespace defkern;
using testutil::random_tensor;

namespace {

ParamStore two_param_store(std::mt19937_64& rng) {
    ParamStore store;
    store.add("a", random_tensor(rng, {3, 2}));
    store.add("b", random_tensor(rng, {4}));
    return store;
}

}  // namespace

TEST_CASE("zero gradients leave parameters untouched") {
    auto rng = make_rng(91);
    ParamStore store = two_param_store(rng);
    const Tensor a0 = store.get("a")->value;
    AdamState state;
    adam_step(store, state, 1e-3);
    for (long k = 0; k < a0.size(); ++k) CHECK(store.get("a")->value[k] == a0[k]);
    CHECK(state.step == 1);
}

TEST_CASE("first step moves each weight by about -lr times the gradient sign") {
    auto rng = make_rng(92);
    ParamStore store = two_param_store(rng);
    const Tensor a0 = store.get("a")->value;
    Tensor g = random_tensor(rng, {3, 2}, -2.0, 2.0);
    g[0] = 1.5;
    g[1] = -0.3;
    store.get("a")->grad = g;
    AdamState state;
    const real lr = 1e-3;
    adam_step(store, state, lr);
    // Bias-corrected Adam at step 1: update = lr * g / (|g| + eps') ~= lr * sign(g).
    for (long k = 0; k < a0.size(); ++k) {
        const real delta = store.get("a")->value[k] - a0[k];
        CHECK(std::abs(delta + lr * (g[k] > 0 ? 1.0 : -1.0)) < 1e-6);
    }
    // Gradients are cleared after the step.
    for (long k = 0; k < g.size(); ++k) CHECK(store.get("a")->grad[k] == 0.0);
}

TEST_CASE("constant gradient produces a stable descent direction") {
    ParamStore store;
    store.add("w", Tensor({1}, {5.0}));
    AdamState state;
    for (int i = 0; i < 50; ++i) {
        store.get("w")->grad[0] = 2.0;  // constant positive gradient
        adam_step(store, state, 1e-2);
    }
    // 50 steps of magnitude ~1e-2 downhill.
    CHECK(store.get("w")->value[0] == doctest::Approx(5.0 - 50 * 1e-2).epsilon(1e-3));
    CHECK(state.step == 50);
}

TEST_CASE("optimization trajectory is deterministic") {
    auto rng1 = make_rng(93), rng2 = make_rng(93);
    ParamStore s1 = two_param_store(rng1);
    ParamStore s2 = two_param_store(rng2);
    AdamState a1, a2;
    auto rngg = make_rng(94);
    for (int i = 0; i < 10; ++i) {
        const Tensor g1 = random_tensor(rngg, {3, 2});
        s1.get("a")->grad = g1;
        s2.get("a")->grad = g1;
        adam_step(s1, a1, 3e-3);
        adam_step(s2, a2, 3e-3);
    }
    for (long k = 0; k < s1.get("a")->value.size(); ++k)
        CHECK(s1.get("a")->value[k] == s2.get("a")->value[k]);
}

TEST_CASE("adam converges on a quadratic bowl") {
    ParamStore store;
    store.add("w", Tensor({2}, {4.0, -3.0}));
    AdamState state;
    const LrSchedule sched{1e-1, 1.0, 1e-3};
    for (int i = 0; i < 400; ++i) {
        const Var& w = store.get("w");
        w->grad[0] = 2.0 * w->value[0];
        w->grad[1] = 2.0 * w->value[1];
        adam_step(store, state, lr_at(sched, i));
    }
    CHECK(std::abs(store.get("w")->value[0]) < 1e-2);
    CHECK(std::abs(store.get("w")->value[1]) < 1e-2);
}

TEST_CASE("learning-rate schedule values and floor") {
    const LrSchedule sched;
    CHECK(lr_at(sched, 0) == 2e-4);
    CHECK(lr_at(sched, 1) == doctest::Approx(2e-4 * 0.999991).epsilon(1e-15));
    CHECK(lr_at(sched, 1000) == doctest::Approx(2e-4 * std::pow(0.999991, 1000)).epsilon(1e-12));
    // The decayed value crosses the floor between iterations 77016 and 77017.
    CHECK(lr_at(sched, 77016) > 1e-4);
    CHECK(lr_at(sched, 77016) == doctest::Approx(1.0000000614e-4).epsilon(1e-9));
    CHECK(lr_at(sched, 77017) == 1e-4);
    CHECK(lr_at(sched, 500000) == 1e-4);  // never undershoots
    for (long i : {0L, 100L, 10000L, 77016L, 77017L, 200000L}) CHECK(lr_at(sched, i) >= 1e-4);
    // Monotone non-increasing.
    real prev = lr_at(sched, 0);
    for (long i = 1; i < 2000; i += 37) {
        const real cur = lr_at(sched, i);
        CHECK(cur <= prev);
        prev = cur;
    }
}
