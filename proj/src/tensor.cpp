#include "defkern/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace defkern {

real Tensor::min() const {
    return *std::min_element(data_.begin(), data_.end());
}

real Tensor::max() const {
    return *std::max_element(data_.begin(), data_.end());
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

}  // namespace defkern
