#pragma once

#include <cmath>
#include <vector>

#include "ssd/random.hpp"
#include "ssd/tensor.hpp"

namespace testing {

inline std::vector<double> unit_draws(ssd::Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Dense product by triple loop, independent of the contraction engine.
inline ssd::Tensor naive_matmul(const ssd::Tensor& a, const ssd::Tensor& b) {
    ssd::Tensor c({a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.dim(1); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

// Direct recurrence h_t = a_t h_{t-1} + b_t with h_{-1} = h0.
inline std::vector<double> recurrence(const std::vector<double>& a, const std::vector<double>& b, double h0 = 0.0) {
    std::vector<double> h(b.size());
    double prev = h0;
    for (std::size_t t = 0; t < b.size(); ++t) {
        prev = a[t] * prev + b[t];
        h[t] = prev;
    }
    return h;
}

}  // namespace testing
