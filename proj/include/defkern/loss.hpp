#pragma once

// Gamma-space L1 training loss and the annealed group-regularization
// objective: total = l1(Y, Ygt) + eta*decay^p * mean_i l1(Y_i, Ygt).

#include <cstdint>
#include <vector>

#include "defkern/autodiff.hpp"
#include "defkern/tensor.hpp"

namespace defkern {

struct AnnealSchedule {
    real eta = 100.0;
    real gamma_decay = 0.9998;
    int s = 3;  // group count
};

real anneal_weight(const AnnealSchedule& schedule, long p);

// Mean absolute difference of gamma-corrected tensors. One fused op: the
// transfer (with its linear extension below zero) and the L1 reduction
// backpropagate together.
Var l1_gamma_loss(Tape& tape, const Var& y, const Var& y_gt);

// Regularizer coefficient supplied explicitly; ablations pass 0.
Var total_loss_weighted(Tape& tape, const Var& y, const std::vector<Var>& y_groups,
                        const Var& y_gt, real reg_weight);

Var total_loss(Tape& tape, const Var& y, const std::vector<Var>& y_groups, const Var& y_gt,
               long p, const AnnealSchedule& schedule);

}  // namespace defkern
