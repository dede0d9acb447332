#pragma once

// Central finite-difference verification of every analytic gradient path:
// the samplers, the deformable filters, the network building blocks, the
// loss, and the full end-to-end parameter gradient at toy scale.

#include <cstdint>
#include <string>
#include <vector>

#include "defkern/tensor.hpp"

namespace defkern {

struct GradCheckEntry {
    std::string op;
    real worst = 0.0;    // worst error over all probed coordinates
    real tol = 0.0;
    long probes = 0;     // number of coordinates compared
    bool passed() const { return worst < tol; }
};

// Error metric: |analytic - numeric| / max(1, |analytic|, |numeric|) — a
// relative error that degrades to absolute below unit magnitude, so noise
// in near-zero gradients is judged at the scale of the surrounding values.
real grad_err(real analytic, real numeric);

// quick = reduced instance counts (CLI default); full counts match the
// stated budgets of the verification suite.
std::vector<GradCheckEntry> run_gradcheck(bool quick, std::uint64_t seed);

bool all_passed(const std::vector<GradCheckEntry>& entries);

}  // namespace defkern
