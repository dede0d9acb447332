#pragma once

// Bias-corrected Adam and the decayed-to-a-floor learning-rate schedule.

#include <map>
#include <string>

#include "defkern/autodiff.hpp"
#include "defkern/tensor.hpp"

namespace defkern {

struct AdamState {
    real beta1 = 0.9;
    real beta2 = 0.999;
    real eps = 1e-8;
    long step = 0;
    std::map<std::string, Tensor> m;  // first moments, keyed like the params
    std::map<std::string, Tensor> v;  // second moments
};

// One optimizer step over every parameter in the store (moments created on
// first use), then gradients are zeroed. Throws std::logic_error if a
// gradient is missing its parameter's shape.
void adam_step(ParamStore& params, AdamState& state, real lr);

struct LrSchedule {
    real init = 2e-4;
    real decay = 0.999991;  // per-iteration multiplicative factor
    real floor = 1e-4;
};

real lr_at(const LrSchedule& schedule, long iter);

}  // namespace defkern
