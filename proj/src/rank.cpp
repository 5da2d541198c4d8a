#include "ssd/rank.hpp"

#include <cmath>
#include <utility>

namespace ssd {

std::size_t numerical_rank(const Tensor& m, double rel_tol, double abs_floor) {
    if (m.rank() != 2) throw DimensionError("numerical_rank expects a rank-2 tensor");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("rel_tol must lie in (0, 1)");
    const std::size_t rows = m.dim(0);
    const std::size_t cols = m.dim(1);
    if (rows == 0 || cols == 0) return 0;

    std::vector<double> a(m.data().begin(), m.data().end());
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * cols + j]; };

    const std::size_t steps = std::min(rows, cols);
    double threshold = -1.0;
    std::size_t rank = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        std::size_t pr = k, pc = k;
        double best = 0.0;
        for (std::size_t i = k; i < rows; ++i)
            for (std::size_t j = k; j < cols; ++j)
                if (std::abs(at(i, j)) > best) {
                    best = std::abs(at(i, j));
                    pr = i;
                    pc = j;
                }
        if (threshold < 0.0) {
            threshold = std::max(rel_tol * best, abs_floor);
            if (best == 0.0 || best <= threshold) return 0;
        }
        if (best <= threshold) break;
        ++rank;
        if (pr != k)
            for (std::size_t j = 0; j < cols; ++j) std::swap(at(k, j), at(pr, j));
        if (pc != k)
            for (std::size_t i = 0; i < rows; ++i) std::swap(at(i, k), at(i, pc));
        const double pivot = at(k, k);
        for (std::size_t i = k + 1; i < rows; ++i) {
            const double f = at(i, k) / pivot;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < cols; ++j) at(i, j) -= f * at(k, j);
            at(i, k) = 0.0;
        }
    }
    return rank;
}

}  // namespace ssd
