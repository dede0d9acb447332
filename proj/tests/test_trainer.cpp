#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "defkern/rng.hpp"
#include "defkern/trainer.hpp"
#include "testutil.hpp"

using namespace defkern;
using testutil::random_tensor;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<Tensor> tiny_scenes(int count, int size, int frames, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<Tensor> scenes;
    for (int i = 0; i < count; ++i) {
        Tensor bg = random_tensor(rng, {size, size}, 0.1, 0.9);
        Tensor seq({size, size, frames});
        for (int t = 0; t < frames; ++t)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) seq.at(y, x, t) = bg.at(y, x);
        scenes.push_back(std::move(seq));
    }
    return scenes;
}

NetConfig tiny_net() {
    NetConfig n;
    n.mode = FilterMode::video3d;
    n.tau = 1;
    n.kt = 3;
    n.levels = 2;
    n.width_scale = 0.05;
    n.max_disp = 3.0;
    return n;
}

struct LogRow {
    long iter;
    real lr, loss, reg;
};

std::vector<LogRow> read_log(const std::string& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    std::string line;
    std::getline(is, line);  // header
    std::vector<LogRow> rows;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        LogRow r;
        real seconds;
        ls >> r.iter >> r.lr >> r.loss >> r.reg >> seconds;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("crop_patch takes aligned in-bounds windows") {
    auto rng = make_rng(121);
    Tensor seq({12, 10, 3});
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 10; ++x)
            for (int t = 0; t < 3; ++t) seq.at(y, x, t) = y * 1000 + x * 10 + t;

    for (int i = 0; i < 50; ++i) {
        const Tensor crop = crop_patch(seq, 5, derive_seed(3, 0, i));
        REQUIRE(crop.dim(0) == 5);
        REQUIRE(crop.dim(1) == 5);
        REQUIRE(crop.dim(2) == 3);
        // Decode the origin from the encoding; all frames share it.
        const int oy = int(crop.at(0, 0, 0)) / 1000;
        const int ox = (int(crop.at(0, 0, 0)) / 10) % 100;
        CHECK(oy >= 0);
        CHECK(oy + 5 <= 12);
        CHECK(ox >= 0);
        CHECK(ox + 5 <= 10);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x)
                for (int t = 0; t < 3; ++t)
                    CHECK(crop.at(y, x, t) == real((oy + y) * 1000 + (ox + x) * 10 + t));
    }

    // Identity when the patch covers the whole frame.
    const Tensor full = crop_patch(seq, 10, 7);
    CHECK(full.dim(1) == 10);
    const Tensor whole = crop_patch(Tensor::full({5, 5, 1}, 0.3), 5, 7);
    CHECK(whole.dim(0) == 5);

    CHECK_THROWS_AS(crop_patch(seq, 11, 1), std::invalid_argument);
    CHECK_THROWS_AS(crop_patch(seq, 0, 1), std::invalid_argument);
}

TEST_CASE("crop origins cover the frame roughly uniformly") {
    Tensor seq({8, 8, 1});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) seq.at(y, x, 0) = y * 10 + x;
    // Patch 4 from an 8x8 frame: 5x5 possible origins.
    std::vector<int> counts(25, 0);
    const int draws = 5000;
    for (int i = 0; i < draws; ++i) {
        const Tensor c = crop_patch(seq, 4, derive_seed(11, 0, i));
        const int oy = int(c.at(0, 0, 0)) / 10, ox = int(c.at(0, 0, 0)) % 10;
        ++counts[oy * 5 + ox];
    }
    for (int k = 0; k < 25; ++k) {
        CHECK(counts[k] > draws / 25 / 2);
        CHECK(counts[k] < draws / 25 * 2);
    }
}

TEST_CASE("a short run decreases the loss and fills the result") {
    const auto scenes = tiny_scenes(2, 16, 3, 5);
    TrainConfig t;
    t.batch_size = 2;
    t.patch = 12;
    t.max_iters = 30;
    t.seed = 3;
    t.schedule.gamma_decay = 0.9;  // fast anneal keeps the smoke test short
    TrainResult r = train(scenes, t, tiny_net());
    REQUIRE(long(r.losses.size()) == 30);
    CHECK(r.checkpoint.iteration == 30);
    CHECK(r.checkpoint.opt.step == 30);
    real first5 = 0, last5 = 0;
    for (int i = 0; i < 5; ++i) {
        first5 += r.losses[size_t(i)] / 5.0;
        last5 += r.losses[r.losses.size() - 1 - size_t(i)] / 5.0;
    }
    CHECK(last5 < first5);
    for (const real l : r.losses) CHECK(std::isfinite(l));
}

TEST_CASE("training trajectories are seed-deterministic") {
    const auto scenes = tiny_scenes(2, 14, 3, 6);
    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 8;
    t.seed = 9;
    const TrainResult a = train(scenes, t, tiny_net());
    const TrainResult b = train(scenes, t, tiny_net());
    t.seed = 10;
    const TrainResult c = train(scenes, t, tiny_net());
    REQUIRE(a.losses.size() == b.losses.size());
    for (size_t i = 0; i < a.losses.size(); ++i) CHECK(a.losses[i] == b.losses[i]);
    bool any_diff = false;
    for (size_t i = 0; i < c.losses.size(); ++i)
        if (a.losses[i] != c.losses[i]) any_diff = true;
    CHECK(any_diff);
    // Final parameters agree bit-for-bit across same-seed runs.
    for (const auto& [name, var] : a.checkpoint.params.items()) {
        const Tensor& other = b.checkpoint.params.get(name)->value;
        for (long k = 0; k < other.size(); ++k) CHECK(var->value[k] == other[k]);
    }
}

TEST_CASE("resume reproduces the uninterrupted trajectory bit for bit") {
    const auto scenes = tiny_scenes(2, 14, 3, 8);
    const auto dir = fresh_dir("trainer_resume");

    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 12;
    t.seed = 4;
    t.out_dir = (dir / "full").string();
    const TrainResult full = train(scenes, t, tiny_net());

    TrainConfig t1 = t;
    t1.max_iters = 5;
    t1.out_dir = (dir / "part").string();
    const TrainResult part1 = train(scenes, t1, tiny_net());
    const Checkpoint mid = load_checkpoint((dir / "part" / "model.ckpt").string());
    CHECK(mid.iteration == 5);

    TrainConfig t2 = t;
    t2.max_iters = 12;  // total, not additional
    t2.out_dir = (dir / "part").string();
    const TrainResult part2 = train_resume(scenes, t2, mid);
    CHECK(part2.checkpoint.iteration == 12);
    REQUIRE(part2.losses.size() == 7);

    // Loss tail matches the uninterrupted run exactly.
    for (size_t i = 0; i < 7; ++i) CHECK(part2.losses[i] == full.losses[5 + i]);
    // And so do the final parameters and optimizer moments.
    for (const auto& [name, var] : full.checkpoint.params.items()) {
        const Tensor& other = part2.checkpoint.params.get(name)->value;
        for (long k = 0; k < other.size(); ++k) CHECK(var->value[k] == other[k]);
    }
    for (const auto& [name, mom] : full.checkpoint.opt.m) {
        const Tensor& other = part2.checkpoint.opt.m.at(name);
        for (long k = 0; k < other.size(); ++k) CHECK(mom[k] == other[k]);
    }

    // The resumed run appended to the same log.
    const auto rows = read_log((dir / "part" / "train_log.tsv").string());
    REQUIRE(rows.size() == 12);
    for (size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].iter == long(i));
}

TEST_CASE("resume rejects a checkpoint whose counters disagree") {
    const auto scenes = tiny_scenes(1, 14, 3, 8);
    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 3;
    const TrainResult r = train(scenes, t, tiny_net());
    Checkpoint broken = std::move(const_cast<TrainResult&>(r).checkpoint);
    broken.iteration = 99;  // now out of step with opt.step == 3
    TrainConfig t2 = t;
    t2.max_iters = 120;
    CHECK_THROWS_AS(train_resume(scenes, t2, std::move(broken)), std::logic_error);
}

TEST_CASE("log rows carry the schedule values") {
    const auto scenes = tiny_scenes(1, 14, 3, 2);
    const auto dir = fresh_dir("trainer_log");
    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 6;
    t.out_dir = (dir / "run").string();
    const TrainResult r = train(scenes, t, tiny_net());
    const auto rows = read_log((dir / "run" / "train_log.tsv").string());
    REQUIRE(rows.size() == 6);
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].lr == doctest::Approx(2e-4 * std::pow(0.999991, real(i))).epsilon(1e-9));
        CHECK(rows[i].reg ==
              doctest::Approx(100.0 * std::pow(0.9998, real(i))).epsilon(1e-9));
        CHECK(rows[i].loss == doctest::Approx(r.losses[i]).epsilon(1e-9));
    }
}

TEST_CASE("annealing is inactive outside the 3D mode and when disabled") {
    const auto scenes = tiny_scenes(1, 14, 3, 2);
    const auto dir = fresh_dir("trainer_noanneal");

    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 3;
    t.anneal = false;
    t.out_dir = (dir / "off").string();
    train(scenes, t, tiny_net());
    for (const auto& row : read_log((dir / "off" / "train_log.tsv").string()))
        CHECK(row.reg == 0.0);

    // video2d mode: the group regularizer does not apply.
    NetConfig n2 = tiny_net();
    n2.mode = FilterMode::video2d;
    TrainConfig t2;
    t2.batch_size = 1;
    t2.patch = 10;
    t2.max_iters = 3;
    t2.anneal = true;
    t2.out_dir = (dir / "v2").string();
    train(scenes, t2, n2);
    for (const auto& row : read_log((dir / "v2" / "train_log.tsv").string()))
        CHECK(row.reg == 0.0);
}

TEST_CASE("sampled-noise mode draws per-sample parameters deterministically") {
    const auto scenes = tiny_scenes(1, 14, 3, 2);
    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 4;
    t.sample_noise = true;
    const TrainResult a = train(scenes, t, tiny_net());
    const TrainResult b = train(scenes, t, tiny_net());
    for (size_t i = 0; i < a.losses.size(); ++i) CHECK(a.losses[i] == b.losses[i]);
}

TEST_CASE("training rejects scenes shorter than the frame window") {
    const auto scenes = tiny_scenes(1, 14, 1, 2);  // one frame only
    TrainConfig t;
    t.batch_size = 1;
    t.patch = 10;
    t.max_iters = 2;
    CHECK_THROWS_AS(train(scenes, t, tiny_net()), std::invalid_argument);
    CHECK_THROWS_AS(train({}, t, tiny_net()), std::invalid_argument);
}
