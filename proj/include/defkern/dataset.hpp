#pragma once

// Sequence manifests (line-oriented: scene id, TAB, comma-separated frame
// paths) and the synthetic toy dataset: textured patterns under rigid
// integer translation, the desk-scale stand-in for natural video.

#include <cstdint>
#include <string>
#include <vector>

#include "defkern/tensor.hpp"

namespace defkern {

struct Scene {
    std::string id;
    std::vector<std::string> frame_paths;
};

using SequenceManifest = std::vector<Scene>;

SequenceManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const SequenceManifest& scenes);

// Frames of one scene stacked as [H,W,T], values straight from the files
// (display-referred). All frames must share dimensions.
Tensor load_sequence(const Scene& scene);

struct ToyDatasetConfig {
    int num_scenes = 12;
    int size = 64;       // square frame extent
    int frames = 5;      // 2*tau + 1
    int motion = 3;      // max per-frame translation magnitude, pixels
    std::uint64_t seed = 1;
};

// Writes <out_dir>/scene_XXX/frame_X.pgm files plus <out_dir>/manifest.tsv
// and returns the manifest. Deterministic given the seed.
SequenceManifest make_toy_dataset(const ToyDatasetConfig& config, const std::string& out_dir);

// Pattern synthesis at canvas scale, exposed for tests: family selects
// {0: gradients, 1: checkers, 2: blobs, 3: strokes}.
Tensor toy_pattern(int family, int size, std::uint64_t seed);

}  // namespace defkern
