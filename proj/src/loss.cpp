#include "defkern/loss.hpp"

#include <cmath>

#include "defkern/color_noise.hpp"
#include "defkern/nn_ops.hpp"

namespace defkern {

real anneal_weight(const AnnealSchedule& schedule, long p) {
    check_shape(p >= 0, "anneal_weight: iteration must be non-negative");
    return schedule.eta * std::pow(schedule.gamma_decay, static_cast<real>(p));
}

Var l1_gamma_loss(Tape& tape, const Var& y, const Var& y_gt) {
    check_shape(y->value.same_shape(y_gt->value), "l1_gamma_loss: shape mismatch");
    const long n = y->value.size();
    real acc = 0.0;
    for (long i = 0; i < n; ++i)
        acc += std::abs(gamma_scalar(y->value[i]) - gamma_scalar(y_gt->value[i]));
    Var out = tape.make(Tensor::scalar(acc / static_cast<real>(n)));
    tape.record([y, y_gt, out, n] {
        const real g = out->grad[0] / static_cast<real>(n);
        for (long i = 0; i < n; ++i) {
            const real d = gamma_scalar(y->value[i]) - gamma_scalar(y_gt->value[i]);
            if (d == 0.0) continue;
            const real sgn = d > 0 ? 1.0 : -1.0;
            y->grad[i] += g * sgn * gamma_scalar_deriv(y->value[i]);
            y_gt->grad[i] -= g * sgn * gamma_scalar_deriv(y_gt->value[i]);
        }
    });
    return out;
}

Var total_loss_weighted(Tape& tape, const Var& y, const std::vector<Var>& y_groups,
                        const Var& y_gt, real reg_weight) {
    Var loss = l1_gamma_loss(tape, y, y_gt);
    if (reg_weight <= 0.0 || y_groups.empty()) return loss;
    Var reg;
    for (const Var& yi : y_groups) {
        Var li = l1_gamma_loss(tape, yi, y_gt);
        reg = reg ? vadd(tape, reg, li) : li;
    }
    reg = vscale(tape, reg, reg_weight / static_cast<real>(y_groups.size()));
    return vadd(tape, loss, reg);
}

Var total_loss(Tape& tape, const Var& y, const std::vector<Var>& y_groups, const Var& y_gt,
               long p, const AnnealSchedule& schedule) {
    check_shape(static_cast<int>(y_groups.size()) == schedule.s,
                "total_loss: group count does not match schedule");
    return total_loss_weighted(tape, y, y_groups, y_gt, anneal_weight(schedule, p));
}

}  // namespace defkern
