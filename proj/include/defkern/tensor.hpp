#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace defkern {

// All numerics run in double precision; gradient checks depend on it.
using real = double;

/// Dense N-dimensional array, row-major (last axis fastest).
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), 0.0);
    }

    Tensor(std::vector<int> shape, std::vector<real> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != static_cast<long>(data_.size()))
            throw std::invalid_argument("Tensor: shape does not match data length");
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, real v) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    static Tensor ones(std::vector<int> shape) { return full(std::move(shape), 1.0); }

    static Tensor scalar(real v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    long size() const { return static_cast<long>(data_.size()); }
    bool empty() const { return data_.empty(); }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }

    real& operator[](long i) { return data_[static_cast<size_t>(i)]; }
    real operator[](long i) const { return data_[static_cast<size_t>(i)]; }

    real& at(int i) { return data_[static_cast<size_t>(i)]; }
    real at(int i) const { return data_[static_cast<size_t>(i)]; }

    real& at(int i, int j) {
        return data_[static_cast<size_t>(static_cast<long>(i) * shape_[1] + j)];
    }
    real at(int i, int j) const {
        return data_[static_cast<size_t>(static_cast<long>(i) * shape_[1] + j)];
    }

    real& at(int i, int j, int k) {
        return data_[static_cast<size_t>((static_cast<long>(i) * shape_[1] + j) * shape_[2] + k)];
    }
    real at(int i, int j, int k) const {
        return data_[static_cast<size_t>((static_cast<long>(i) * shape_[1] + j) * shape_[2] + k)];
    }

    real& at(int i, int j, int k, int l) {
        return data_[static_cast<size_t>(
            ((static_cast<long>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
    }
    real at(int i, int j, int k, int l) const {
        return data_[static_cast<size_t>(
            ((static_cast<long>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (real v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(real v) {
        for (auto& x : data_) x = v;
    }

    /// In-place y += a*x.
    void axpy(real a, const Tensor& x) {
        assert(same_shape(x));
        for (long i = 0; i < size(); ++i) data_[static_cast<size_t>(i)] += a * x[i];
    }

    void scale(real a) {
        for (auto& x : data_) x *= a;
    }

    real sum() const {
        real s = 0;
        for (real v : data_) s += v;
        return s;
    }

    real min() const;
    real max() const;

    static long count(const std::vector<int>& shape) {
        long n = 1;
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("Tensor: extents must be positive");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

    static std::string shape_str(const std::vector<int>& shape);

private:
    std::vector<int> shape_;
    std::vector<real> data_;
};

inline void check_shape(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace defkern
