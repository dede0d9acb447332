#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "defkern/checkpoint.hpp"
#include "defkern/cli.hpp"
#include "defkern/dataset.hpp"
#include "defkern/image_io.hpp"
#include "testutil.hpp"

using namespace defkern;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::vector<std::string>& args) { return cli_main(args); }

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run({}) == 2);                          // no subcommand
    CHECK(run({"frobnicate"}) == 2);              // unknown subcommand
    CHECK(run({"gen-data"}) == 2);                // missing required --out
    CHECK(run({"gen-data", "--out"}) == 2);       // dangling value
    CHECK(run({"train", "--bogus-flag", "x"}) == 2);
    CHECK(run({"train", "--iters", "notanumber", "--manifest", "m", "--out", "o"}) == 2);
}

TEST_CASE("missing input files exit with code 3") {
    const auto dir = fresh_dir("cli_missing");
    CHECK(run({"synth-noise", "--manifest", (dir / "none.tsv").string(), "--out",
               (dir / "o").string(), "--preset", "low"}) == 3);
    CHECK(run({"denoise", "--checkpoint", (dir / "none.ckpt").string(), "--manifest",
               (dir / "none.tsv").string(), "--out", (dir / "o").string()}) == 3);
    CHECK(run({"eval", "--clean", (dir / "none.tsv").string(), "--outputs",
               (dir / "none2.tsv").string()}) == 3);
    CHECK(run({"train", "--manifest", (dir / "none.tsv").string(), "--out",
               (dir / "o").string(), "--iters", "1"}) == 3);
}

TEST_CASE("the full pipeline closes: generate, corrupt, train, denoise, evaluate") {
    const auto dir = fresh_dir("cli_pipeline");
    const std::string data = (dir / "data").string();
    const std::string noisy = (dir / "noisy").string();
    const std::string rundir = (dir / "run").string();
    const std::string outputs = (dir / "outse").string();

    REQUIRE(run({"gen-data", "--out", data, "--scenes", "3", "--size", "24", "--frames", "3",
                 "--motion", "1", "--seed", "5"}) == 0);
    REQUIRE(fs::exists(data + "/manifest.tsv"));

    REQUIRE(run({"synth-noise", "--manifest", data + "/manifest.tsv", "--out", noisy,
                 "--preset", "low", "--seed", "9"}) == 0);
    REQUIRE(fs::exists(noisy + "/manifest.tsv"));
    REQUIRE(fs::exists(noisy + "/noise.json"));

    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rundir, "--mode",
                 "video3d", "--tau", "1", "--levels", "2", "--width-scale", "0.05",
                 "--max-disp", "2", "--iters", "4", "--batch", "1", "--patch", "16",
                 "--seed", "3"}) == 0);
    REQUIRE(fs::exists(rundir + "/model.ckpt"));
    REQUIRE(fs::exists(rundir + "/train_log.tsv"));

    REQUIRE(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
                 noisy + "/manifest.tsv", "--out", outputs, "--noise-json",
                 noisy + "/noise.json"}) == 0);
    REQUIRE(fs::exists(outputs + "/outputs.tsv"));
    // 3 scenes x 1 valid center (3 frames, tau 1) = 3 outputs + header.
    CHECK(count_lines(slurp(outputs + "/outputs.tsv")) == 4);

    const std::string report = (dir / "report.tsv").string();
    const std::string js = (dir / "report.json").string();
    REQUIRE(run({"eval", "--clean", data + "/manifest.tsv", "--outputs",
                 outputs + "/outputs.tsv", "--report", report, "--json", js}) == 0);
    const std::string rep = slurp(report);
    CHECK(rep.find("psnr_db") != std::string::npos);
    CHECK(rep.find("mean") != std::string::npos);
    CHECK(count_lines(rep) == 5);  // header + 3 frames + mean
    CHECK(slurp(js).find("\"psnr_db\"") != std::string::npos);

    // Denoising is idempotent: a second run writes identical bytes.
    const std::string outputs2 = (dir / "outs2").string();
    REQUIRE(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
                 noisy + "/manifest.tsv", "--out", outputs2, "--noise-json",
                 noisy + "/noise.json"}) == 0);
    const SequenceManifest nm = load_manifest(noisy + "/manifest.tsv");
    for (const auto& entry : fs::directory_iterator(outputs)) {
        if (entry.path().extension() != ".png") continue;
        const auto rel = entry.path().lexically_relative(outputs);
        CHECK(slurp(entry.path().string()) == slurp((fs::path(outputs2) / rel).string()));
    }
}

TEST_CASE("training resume and config compatibility checks") {
    const auto dir = fresh_dir("cli_resume");
    const std::string data = (dir / "data").string();
    const std::string rundir = (dir / "run").string();
    REQUIRE(run({"gen-data", "--out", data, "--scenes", "2", "--size", "20", "--frames", "3",
                 "--motion", "1"}) == 0);
    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rundir, "--tau", "1",
                 "--levels", "2", "--width-scale", "0.05", "--iters", "3", "--batch", "1",
                 "--patch", "16"}) == 0);
    const Checkpoint after3 = load_checkpoint(rundir + "/model.ckpt");
    CHECK(after3.iteration == 3);

    // Resume to a higher total.
    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rundir, "--resume",
                 rundir + "/model.ckpt", "--iters", "5", "--batch", "1", "--patch", "16"}) == 0);
    const Checkpoint after5 = load_checkpoint(rundir + "/model.ckpt");
    CHECK(after5.iteration == 5);

    // Conflicting architecture on resume: incompatible, exit 4.
    CHECK(run({"train", "--manifest", data + "/manifest.tsv", "--out", rundir, "--resume",
               rundir + "/model.ckpt", "--levels", "3", "--iters", "7", "--batch", "1",
               "--patch", "16"}) == 4);

    // Frame count below the model's window: incompatible, exit 4.
    CHECK(run({"train", "--manifest", data + "/manifest.tsv", "--out", (dir / "r2").string(),
               "--tau", "4", "--levels", "2", "--width-scale", "0.05", "--iters", "1",
               "--batch", "1", "--patch", "16"}) == 4);
}

TEST_CASE("config files feed defaults that explicit flags override") {
    const auto dir = fresh_dir("cli_config");
    const std::string data = (dir / "data").string();
    REQUIRE(run({"gen-data", "--out", data, "--scenes", "2", "--size", "20", "--frames", "3",
                 "--motion", "1"}) == 0);

    const std::string cfg = (dir / "train.cfg").string();
    {
        std::ofstream os(cfg);
        os << "# desk-scale training settings\n";
        os << "mode = video3d\n";
        os << "tau = 1\n";
        os << "levels = 2\n";
        os << "width_scale = 0.05\n";
        os << "iters = 2\n";
        os << "batch = 1\n";
        os << "patch = 16\n";
        os << "manifest = " << data << "/manifest.tsv\n";
        os << "out = " << (dir / "runA").string() << "\n";
    }
    REQUIRE(run({"train", "--config", cfg}) == 0);
    const Checkpoint a = load_checkpoint((dir / "runA" / "model.ckpt").string());
    CHECK(a.iteration == 2);
    CHECK(a.config.levels == 2);

    // Explicit flags win over config-file values.
    REQUIRE(run({"train", "--config", cfg, "--out", (dir / "runB").string(), "--iters", "3",
                 "--tau", "1"}) == 0);
    const Checkpoint b = load_checkpoint((dir / "runB" / "model.ckpt").string());
    CHECK(b.iteration == 3);

    // Unknown keys are a usage error.
    const std::string bad = (dir / "bad.cfg").string();
    {
        std::ofstream os(bad);
        os << "walrus = 7\n";
    }
    CHECK(run({"train", "--config", bad}) == 2);
    // Missing required settings (no manifest/out anywhere) likewise.
    const std::string sparse = (dir / "sparse.cfg").string();
    {
        std::ofstream os(sparse);
        os << "iters = 1\n";
    }
    CHECK(run({"train", "--config", sparse}) == 2);
}

TEST_CASE("ablation flags land in the checkpoint config and log") {
    const auto dir = fresh_dir("cli_ablate");
    const std::string data = (dir / "data").string();
    REQUIRE(run({"gen-data", "--out", data, "--scenes", "2", "--size", "20", "--frames", "3",
                 "--motion", "1"}) == 0);

    const std::string rfix = (dir / "rfix").string();
    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rfix, "--tau", "1",
                 "--levels", "2", "--width-scale", "0.05", "--iters", "2", "--batch", "1",
                 "--patch", "16", "--fixed-grid", "--no-dynamic-weights"}) == 0);
    const Checkpoint cfix = load_checkpoint(rfix + "/model.ckpt");
    CHECK(cfix.config.fixed_grid);
    CHECK_FALSE(cfix.config.dynamic_weights);

    const std::string rna = (dir / "rna").string();
    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rna, "--tau", "1",
                 "--levels", "2", "--width-scale", "0.05", "--iters", "2", "--batch", "1",
                 "--patch", "16", "--no-anneal"}) == 0);
    // Third log column (regularizer weight) is zero throughout.
    std::istringstream log(slurp(rna + "/train_log.tsv"));
    std::string line;
    std::getline(log, line);  // header
    while (std::getline(log, line)) {
        std::istringstream ls(line);
        long it;
        double lr, loss, reg;
        ls >> it >> lr >> loss >> reg;
        CHECK(reg == 0.0);
    }
}

TEST_CASE("denoise requires noise parameters unless blind or sidecar-fed") {
    const auto dir = fresh_dir("cli_noiseargs");
    const std::string data = (dir / "data").string();
    REQUIRE(run({"gen-data", "--out", data, "--scenes", "1", "--size", "20", "--frames", "3",
                 "--motion", "0"}) == 0);
    const std::string rundir = (dir / "run").string();
    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rundir, "--tau", "1",
                 "--levels", "2", "--width-scale", "0.05", "--iters", "1", "--batch", "1",
                 "--patch", "16"}) == 0);
    // No preset, no sigmas, no sidecar: a usage error.
    CHECK(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
               data + "/manifest.tsv", "--out", (dir / "o").string()}) == 2);
    // Explicit sigmas work.
    CHECK(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
               data + "/manifest.tsv", "--out", (dir / "o2").string(), "--sigma-s", "2.5e-3",
               "--sigma-r", "1e-2"}) == 0);
    // One sigma without the other: usage error.
    CHECK(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
               data + "/manifest.tsv", "--out", (dir / "o3").string(), "--sigma-s",
               "2.5e-3"}) == 2);
    // Unknown preset name: usage error.
    CHECK(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
               data + "/manifest.tsv", "--out", (dir / "o4").string(), "--preset",
               "medium"}) == 2);
}

TEST_CASE("color denoising emits RGB outputs") {
    const auto dir = fresh_dir("cli_color");
    // Build a tiny RGB scene by hand: three frames of a 20x20 color image.
    const std::string scenes = (dir / "scenes").string();
    fs::create_directories(scenes + "/c0");
    auto rng = make_rng(61);
    SequenceManifest manifest;
    Scene sc;
    sc.id = "c0";
    for (int t = 0; t < 3; ++t) {
        const Tensor rgb = testutil::random_tensor(rng, {3, 20, 20}, 0.2, 0.8);
        const std::string p = scenes + "/c0/frame_" + std::to_string(t) + ".png";
        save_image_rgb(p, rgb);
        sc.frame_paths.push_back(p);
    }
    manifest.push_back(sc);
    save_manifest(scenes + "/manifest.tsv", manifest);

    // Train a throwaway gray model.
    const std::string data = (dir / "data").string();
    REQUIRE(run({"gen-data", "--out", data, "--scenes", "1", "--size", "20", "--frames", "3",
                 "--motion", "0"}) == 0);
    const std::string rundir = (dir / "run").string();
    REQUIRE(run({"train", "--manifest", data + "/manifest.tsv", "--out", rundir, "--tau", "1",
                 "--levels", "2", "--width-scale", "0.05", "--iters", "1", "--batch", "1",
                 "--patch", "16"}) == 0);

    const std::string outs = (dir / "outs").string();
    REQUIRE(run({"denoise", "--checkpoint", rundir + "/model.ckpt", "--manifest",
                 scenes + "/manifest.tsv", "--out", outs, "--preset", "low", "--color"}) == 0);
    bool found_rgb = false;
    for (const auto& entry : fs::recursive_directory_iterator(outs)) {
        if (entry.path().extension() != ".png") continue;
        const Tensor img = load_image_any(entry.path().string());
        CHECK(img.dim(0) == 3);
        found_rgb = true;
    }
    CHECK(found_rgb);
}

TEST_CASE("quick gradient verification passes and reports") {
    CHECK(run({"gradcheck", "--quick", "--seed", "3"}) == 0);
}
