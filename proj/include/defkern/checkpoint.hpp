#pragma once

// Self-describing binary model checkpoints: config header, iteration
// counter, named little-endian float64 parameter blocks, and optimizer
// moments. Loading then saving reproduces the file byte for byte.

#include <cstdint>
#include <string>

#include "defkern/autodiff.hpp"
#include "defkern/network.hpp"
#include "defkern/optimizer.hpp"

namespace defkern {

struct Checkpoint {
    NetConfig config;
    long iteration = 0;
    ParamStore params;
    AdamState opt;
};

std::string net_config_to_text(const NetConfig& config);
NetConfig net_config_from_text(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws std::runtime_error on I/O or malformed content.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace defkern
