#include "defkern/optimizer.hpp"

#include <cmath>

namespace defkern {

void adam_step(ParamStore& params, AdamState& state, real lr) {
    state.step += 1;
    const real bc1 = 1.0 - std::pow(state.beta1, static_cast<real>(state.step));
    const real bc2 = 1.0 - std::pow(state.beta2, static_cast<real>(state.step));
    for (auto& [name, var] : params.items()) {
        if (!var->grad.same_shape(var->value))
            throw std::logic_error("adam_step: gradient missing for " + name);
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor(var->value.shape())).first;
            state.v.emplace(name, Tensor(var->value.shape()));
        }
        Tensor& m = mit->second;
        Tensor& v = state.v.at(name);
        const long n = var->value.size();
        for (long i = 0; i < n; ++i) {
            const real g = var->grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const real mhat = m[i] / bc1;
            const real vhat = v[i] / bc2;
            var->value[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        var->grad.fill(0.0);
    }
}

real lr_at(const LrSchedule& schedule, long iter) {
    check_shape(iter >= 0, "lr_at: iteration must be non-negative");
    const real lr = schedule.init * std::pow(schedule.decay, static_cast<real>(iter));
    return lr < schedule.floor ? schedule.floor : lr;
}

}  // namespace defkern
