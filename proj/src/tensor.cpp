#include "ksamp/tensor.hpp"

#include <cmath>

namespace ksamp {

bool all_finite(const Tensor4& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace ksamp
