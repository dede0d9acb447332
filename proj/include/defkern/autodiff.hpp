#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "defkern/tensor.hpp"

namespace defkern {

class Tape;

/// A value in the computation graph together with its gradient buffer.
struct VarNode {
    Tensor value;
    Tensor grad;                // same shape as value, accumulated by backward()
    const Tape* tape = nullptr; // tape that produced this node; null for leaves

    explicit VarNode(Tensor v) : value(std::move(v)), grad(value.shape()) {}
};

using Var = std::shared_ptr<VarNode>;

/// Leaf variable: not produced by any op. Ops still accumulate into its grad.
inline Var leaf(Tensor v) { return std::make_shared<VarNode>(std::move(v)); }

/// Ordered record of executed differentiable operations.
///
/// One tape is owned by exactly one training step; distinct tapes may run on
/// distinct threads. backward() replays the recorded ops in exact reverse
/// execution order, accumulating gradients into every input node reachable
/// from the loss (leaves included).
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Create a node stamped as produced under this tape.
    Var make(Tensor value) {
        Var v = std::make_shared<VarNode>(std::move(value));
        v->tape = this;
        return v;
    }

    void record(std::function<void()> backward_fn) {
        ops_.push_back(std::move(backward_fn));
    }

    size_t size() const { return ops_.size(); }

    /// Seed d(loss)/d(loss) = 1 and replay the tape backward.
    /// loss must be a scalar produced under this tape.
    void backward(const Var& loss) {
        if (!loss || loss->tape != this)
            throw std::logic_error("backward: tensor was not produced under this tape");
        if (loss->value.size() != 1)
            throw std::invalid_argument("backward: loss must be a scalar");
        loss->grad[0] += 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

    void clear() { ops_.clear(); }

private:
    std::vector<std::function<void()>> ops_;
};

/// Named map from parameter identifier to (value, gradient) pairs.
/// Iteration order is the lexicographic parameter name order, which makes
/// optimizer updates and serialization deterministic.
class ParamStore {
public:
    Var add(const std::string& name, Tensor init) {
        if (params_.count(name))
            throw std::invalid_argument("ParamStore: duplicate parameter " + name);
        Var v = leaf(std::move(init));
        params_.emplace(name, v);
        return v;
    }

    const Var& get(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end())
            throw std::invalid_argument("ParamStore: unknown parameter " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return params_.count(name) != 0; }
    size_t size() const { return params_.size(); }

    void zero_grad() {
        for (auto& [name, v] : params_) v->grad.fill(0.0);
    }

    void scale_grad(real a) {
        for (auto& [name, v] : params_) v->grad.scale(a);
    }

    long num_values() const {
        long n = 0;
        for (const auto& [name, v] : params_) n += v->value.size();
        return n;
    }

    const std::map<std::string, Var>& items() const { return params_; }
    std::map<std::string, Var>& items() { return params_; }

private:
    std::map<std::string, Var> params_;
};

}  // namespace defkern
