#pragma once

#include <vector>

#include "ksamp/errors.hpp"

namespace ksamp {

// Dense NCHW tensor, double precision.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(std::size_t(n_) * std::size_t(c_) * std::size_t(h_) * std::size_t(w_), 0.0) {
        require(n_ >= 1 && c_ >= 1 && h_ >= 1 && w_ >= 1, ErrorKind::InvalidArgument,
                "Tensor4: dimensions must be >= 1");
    }

    double& at(int i, int j, int y, int x) {
        return data[((std::size_t(i) * c + j) * h + y) * w + x];
    }
    const double& at(int i, int j, int y, int x) const {
        return data[((std::size_t(i) * c + j) * h + y) * w + x];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

bool all_finite(const Tensor4& t);

}  // namespace ksamp
