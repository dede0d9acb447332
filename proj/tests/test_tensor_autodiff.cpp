#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "defkern/autodiff.hpp"
#include "defkern/tensor.hpp"

using namespace defkern;

TEST_CASE("tensor shape bookkeeping and accessors") {
    Tensor t({2, 3, 4});
    CHECK(t.rank() == 3);
    CHECK(t.size() == 24);
    CHECK(t.dim(1) == 3);
    for (long i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);

    t.at(1, 2, 3) = 5.5;
    CHECK(t[23] == 5.5);  // row-major: last axis fastest
    t.at(0, 1, 0) = -1.0;
    CHECK(t[4] == -1.0);

    Tensor q({2, 2}, {1, 2, 3, 4});
    CHECK(q.at(1, 0) == 3.0);
    CHECK(q.sum() == 10.0);
    CHECK(q.min() == 1.0);
    CHECK(q.max() == 4.0);
}

TEST_CASE("tensor constructors validate") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({-1}), std::invalid_argument);
    CHECK(Tensor::scalar(3.0).size() == 1);
    CHECK(Tensor::full({2, 2}, 7.0).sum() == 28.0);
}

TEST_CASE("tensor arithmetic helpers") {
    Tensor a = Tensor::full({3}, 2.0);
    Tensor b({3}, {1, 2, 3});
    a.axpy(10.0, b);
    CHECK(a[0] == 12.0);
    CHECK(a[2] == 32.0);
    a.scale(0.5);
    CHECK(a[1] == 11.0);
    CHECK(a.all_finite());
    a[0] = std::numeric_limits<real>::quiet_NaN();
    CHECK_FALSE(a.all_finite());
}

TEST_CASE("check_shape throws invalid_argument with the message") {
    CHECK_THROWS_WITH_AS(check_shape(false, "bad thing"), "bad thing", std::invalid_argument);
    CHECK_NOTHROW(check_shape(true, "unused"));
}

TEST_CASE("tape backward seeds the loss gradient and replays in reverse") {
    Tape tape;
    Var x = leaf(Tensor::scalar(3.0));

    // y = 2x recorded first, z = y + x recorded second; reverse replay must
    // finish y's backward after z's so x sees dz/dx = 2 + 1.
    Var y = tape.make(Tensor::scalar(2.0 * x->value[0]));
    tape.record([x, y] { x->grad[0] += 2.0 * y->grad[0]; });
    Var z = tape.make(Tensor::scalar(y->value[0] + x->value[0]));
    tape.record([x, y, z] {
        y->grad[0] += z->grad[0];
        x->grad[0] += z->grad[0];
    });

    tape.backward(z);
    CHECK(z->grad[0] == 1.0);
    CHECK(y->grad[0] == 1.0);
    CHECK(x->grad[0] == 3.0);
}

TEST_CASE("tape backward rejects foreign and non-scalar nodes") {
    Tape tape, other;
    Var a = leaf(Tensor::scalar(1.0));
    CHECK_THROWS_AS(tape.backward(a), std::logic_error);  // leaf: no tape

    Var b = other.make(Tensor::scalar(1.0));
    CHECK_THROWS_AS(tape.backward(b), std::logic_error);  // wrong tape

    Var c = tape.make(Tensor({2}));
    CHECK_THROWS_AS(tape.backward(c), std::invalid_argument);  // not scalar
}

TEST_CASE("gradients accumulate across fan-out") {
    Tape tape;
    Var x = leaf(Tensor::scalar(1.5));
    // Two consumers of x: L = 3x + 4x.
    Var u = tape.make(Tensor::scalar(3.0 * x->value[0]));
    tape.record([x, u] { x->grad[0] += 3.0 * u->grad[0]; });
    Var v = tape.make(Tensor::scalar(4.0 * x->value[0]));
    tape.record([x, v] { x->grad[0] += 4.0 * v->grad[0]; });
    Var l = tape.make(Tensor::scalar(u->value[0] + v->value[0]));
    tape.record([u, v, l] {
        u->grad[0] += l->grad[0];
        v->grad[0] += l->grad[0];
    });
    tape.backward(l);
    CHECK(x->grad[0] == 7.0);
}

TEST_CASE("param store is ordered, unique, and zeroable") {
    ParamStore store;
    store.add("b.second", Tensor::full({2}, 1.0));
    store.add("a.first", Tensor::full({3}, 2.0));
    store.add("c.third", Tensor::scalar(3.0));

    CHECK(store.size() == 3);
    CHECK(store.num_values() == 6);
    CHECK_THROWS_AS(store.add("a.first", Tensor::scalar(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(store.get("missing"), std::invalid_argument);
    CHECK(store.has("b.second"));

    // Lexicographic iteration order is the determinism contract the
    // optimizer and checkpoint format rely on.
    std::vector<std::string> names;
    for (const auto& [name, var] : store.items()) names.push_back(name);
    CHECK(names == std::vector<std::string>{"a.first", "b.second", "c.third"});

    store.get("a.first")->grad.fill(5.0);
    store.zero_grad();
    CHECK(store.get("a.first")->grad.sum() == 0.0);

    store.get("b.second")->grad.fill(2.0);
    store.scale_grad(0.25);
    CHECK(store.get("b.second")->grad[0] == 0.5);
}
