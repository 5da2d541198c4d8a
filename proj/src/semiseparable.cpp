#include "ssd/semiseparable.hpp"

#include <cmath>
#include <stdexcept>

#include "ssd/contract.hpp"
#include "ssd/random.hpp"
#include "ssd/rank.hpp"

namespace ssd {

namespace {

constexpr double kFlushThreshold = 1e-300;

Tensor dense_step_matrix(const SSSRep& rep, std::size_t t) {
    const std::size_t n = rep.order();
    Tensor m({n, n});
    switch (rep.form) {
        case StateForm::scalar:
            for (std::size_t i = 0; i < n; ++i) m(i, i) = rep.A(t);
            break;
        case StateForm::diagonal:
            for (std::size_t i = 0; i < n; ++i) m(i, i) = rep.A(t, i);
            break;
        case StateForm::dense:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) m(i, j) = rep.A(t, i, j);
            break;
    }
    return m;
}

// v <- A_t v for the representation's state form.
void apply_step(const SSSRep& rep, std::size_t t, std::vector<double>& v, std::vector<double>& scratch,
                OpCounter* ops) {
    const std::size_t n = v.size();
    switch (rep.form) {
        case StateForm::scalar: {
            const double a = rep.A(t);
            for (double& x : v) x *= a;
            count_mul_adds(ops, 1);
            break;
        }
        case StateForm::diagonal:
            for (std::size_t i = 0; i < n; ++i) v[i] *= rep.A(t, i);
            count_mul_adds(ops, n);
            break;
        case StateForm::dense:
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += rep.A(t, i, j) * v[j];
                scratch[i] = acc;
            }
            v.swap(scratch);
            count_mul_adds(ops, n * n);
            break;
    }
}

}  // namespace

OneSSCoeffs::OneSSCoeffs(std::vector<double> values, Regime r) : a(std::move(values)), regime(r) {
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (!std::isfinite(a[t])) throw std::invalid_argument("1-SS coefficient is not finite");
        // a_0 is only read as an initial-state multiplier, but keep it in range too
        if (regime == Regime::unit_interval && (a[t] < 0.0 || a[t] > 1.0)) {
            throw std::invalid_argument("1-SS coefficient a_" + std::to_string(t) +
                                        " outside [0, 1] in unit-interval regime");
        }
    }
}

void SSSRep::validate() const {
    if (B.rank() != 2 || C.rank() != 2) throw DimensionError("SSS B and C must be (T,N)");
    if (B.shape() != C.shape()) {
        throw DimensionError("SSS B " + shape_string(B.shape()) + " and C " + shape_string(C.shape()) +
                             " disagree");
    }
    const std::size_t t = B.dim(0);
    const std::size_t n = B.dim(1);
    Shape expected;
    switch (form) {
        case StateForm::scalar: expected = {t}; break;
        case StateForm::diagonal: expected = {t, n}; break;
        case StateForm::dense: expected = {t, n, n}; break;
    }
    if (A.shape() != expected) {
        throw DimensionError("SSS A has shape " + shape_string(A.shape()) + ", expected " +
                             shape_string(expected) + " for order N=" + std::to_string(n));
    }
}

Tensor materialize_1ss(const OneSSCoeffs& coeffs, bool* underflowed) {
    const std::size_t t_len = coeffs.length();
    Tensor m({t_len, t_len});
    bool flushed = false;
    for (std::size_t j = 0; j < t_len; ++j) {
        double running = 1.0;
        m(j, j) = 1.0;
        for (std::size_t i = j; i-- > 0;) {
            running *= coeffs.a[i + 1];
            if (running != 0.0 && std::abs(running) < kFlushThreshold) {
                running = 0.0;
                flushed = true;
            }
            m(j, i) = running;
        }
    }
    if (underflowed) *underflowed = flushed;
    return m;
}

Tensor materialize_sss(const SSSRep& rep, OpCounter* ops) {
    rep.validate();
    const std::size_t t_len = rep.length();
    const std::size_t n = rep.order();
    Tensor m({t_len, t_len});
    std::vector<double> v(n), scratch(n);
    for (std::size_t i = 0; i < t_len; ++i) {
        for (std::size_t k = 0; k < n; ++k) v[k] = rep.B(i, k);
        for (std::size_t j = i; j < t_len; ++j) {
            if (j > i) apply_step(rep, j, v, scratch, ops);
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += rep.C(j, k) * v[k];
            m(j, i) = acc;
        }
        count_mul_adds(ops, (t_len - i) * n);
    }
    return m;
}

std::pair<Tensor, Tensor> sss_block_factors(const SSSRep& rep, std::size_t r0, std::size_t r1,
                                            std::size_t c0, std::size_t c1) {
    rep.validate();
    if (!(r0 < r1 && r1 <= rep.length() && c0 < c1 && c1 - 1 <= r0)) {
        throw std::invalid_argument("block must lie on or below the diagonal");
    }
    const std::size_t n = rep.order();
    const std::size_t pivot = c1 - 1;

    // left row j: C_j^T A_j ... A_{pivot+1}
    Tensor left({r1 - r0, n});
    Tensor prod({n, n});
    for (std::size_t k = 0; k < n; ++k) prod(k, k) = 1.0;
    for (std::size_t j = pivot + 1; j < r0; ++j) prod = matmul(dense_step_matrix(rep, j), prod);
    for (std::size_t j = r0; j < r1; ++j) {
        if (j > pivot) prod = matmul(dense_step_matrix(rep, j), prod);
        for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t l = 0; l < n; ++l) acc += rep.C(j, l) * prod(l, k);
            left(j - r0, k) = acc;
        }
    }

    // right column i: A_pivot ... A_{i+1} B_i
    Tensor right({n, c1 - c0});
    for (std::size_t i = c0; i < c1; ++i) {
        std::vector<double> v(n), scratch(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = rep.B(i, k);
        for (std::size_t s = i + 1; s <= pivot; ++s) apply_step(rep, s, v, scratch, nullptr);
        for (std::size_t k = 0; k < n; ++k) right(k, i - c0) = v[k];
    }
    return {std::move(left), std::move(right)};
}

namespace {

std::size_t submatrix_rank(const Tensor& m, std::size_t r0, std::size_t r1, std::size_t c0,
                           std::size_t c1, double tol, double floor) {
    Tensor sub({r1 - r0, c1 - c0});
    for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = c0; j < c1; ++j) sub(i - r0, j - c0) = m(i, j);
    return numerical_rank(sub, tol, floor);
}

}  // namespace

std::size_t lower_rank_profile(const Tensor& m, std::size_t samples, double tol, std::uint64_t seed) {
    if (m.rank() != 2 || m.dim(0) != m.dim(1)) throw DimensionError("rank profile expects a square matrix");
    const std::size_t t_len = m.dim(0);
    double scale = 0.0;
    for (double v : m.data()) scale = std::max(scale, std::abs(v));
    // pivots below tol * max|M| are roundoff relative to the whole matrix
    const double floor = tol * scale;
    std::size_t best = 0;
    if (t_len <= kExhaustiveProfileLimit) {
        for (std::size_t r0 = 0; r0 < t_len; ++r0)
            for (std::size_t r1 = r0 + 1; r1 <= t_len; ++r1)
                for (std::size_t c1 = 1; c1 <= r0 + 1; ++c1)
                    for (std::size_t c0 = 0; c0 < c1; ++c0)
                        best = std::max(best, submatrix_rank(m, r0, r1, c0, c1, tol, floor));
        return best;
    }
    Rng rng(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t r0 = rng.index(t_len);
        const std::size_t r1 = r0 + 1 + rng.index(t_len - r0);
        const std::size_t c1 = 1 + rng.index(r0 + 1);
        const std::size_t c0 = rng.index(c1);
        best = std::max(best, submatrix_rank(m, r0, r1, c0, c1, tol, floor));
    }
    return best;
}

Tensor invert_lower_triangular(const Tensor& m) {
    if (m.rank() != 2 || m.dim(0) != m.dim(1)) throw DimensionError("inverse expects a square matrix");
    const std::size_t n = m.dim(0);
    double scale = 0.0;
    for (double v : m.data()) scale = std::max(scale, std::abs(v));
    Tensor inv({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(m(i, i)) <= 1e-14 * scale || m(i, i) == 0.0) {
            throw SingularMatrixError("lower-triangular matrix is singular at diagonal " + std::to_string(i));
        }
    }
    // Solve m * inv = I one column at a time.
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t i = col; i < n; ++i) {
            double acc = (i == col) ? 1.0 : 0.0;
            for (std::size_t k = col; k < i; ++k) acc -= m(i, k) * inv(k, col);
            inv(i, col) = acc / m(i, i);
        }
    }
    return inv;
}

double max_outside_band(const Tensor& m, std::size_t bandwidth) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.dim(0); ++i)
        for (std::size_t j = 0; j < m.dim(1); ++j) {
            const bool in_band = j <= i && i - j <= bandwidth;
            if (!in_band) worst = std::max(worst, std::abs(m(i, j)));
        }
    return worst;
}

std::size_t closure_check(ClosureOp op, const SSSRep& lhs, const SSSRep* rhs, double tol) {
    const Tensor a = materialize_sss(lhs);
    Tensor result;
    switch (op) {
        case ClosureOp::sum:
        case ClosureOp::product: {
            if (!rhs) throw std::invalid_argument("closure_check needs a right operand for sum/product");
            const Tensor b = materialize_sss(*rhs);
            if (a.shape() != b.shape()) throw DimensionError("closure operands differ in length");
            if (op == ClosureOp::sum) {
                result = a;
                for (std::size_t i = 0; i < result.size(); ++i) result.data()[i] += b.data()[i];
            } else {
                result = matmul(a, b);
            }
            break;
        }
        case ClosureOp::inverse:
            result = invert_lower_triangular(a);
            break;
    }
    return lower_rank_profile(result, 512, tol);
}

void BandedLower::validate() const {
    const std::size_t t_len = mu.size();
    if (bandwidth == 0) {
        if (!(coeffs.empty() || (coeffs.rank() == 2 && coeffs.dim(0) == t_len && coeffs.dim(1) == 0))) {
            throw DimensionError("bandwidth 0 takes no coefficients");
        }
        return;
    }
    if (coeffs.rank() != 2 || coeffs.dim(0) != t_len || coeffs.dim(1) != bandwidth) {
        throw DimensionError("banded coefficients must be (T, k) = (" + std::to_string(t_len) + ", " +
                             std::to_string(bandwidth) + "), got " + shape_string(coeffs.shape()));
    }
}

Tensor banded_matrix(const BandedLower& band) {
    band.validate();
    const std::size_t t_len = band.length();
    Tensor d({t_len, t_len});
    for (std::size_t t = 0; t < t_len; ++t) {
        d(t, t) = 1.0;
        for (std::size_t i = 1; i <= band.bandwidth && i <= t; ++i) d(t, t - i) = -band.coeffs(t, i - 1);
    }
    return d;
}

ArCertificate ar_to_ssm(const BandedLower& band, double tol) {
    band.validate();
    if (band.bandwidth + 1 > band.length()) throw std::invalid_argument("ar_to_ssm needs k + 1 <= T");
    Tensor l = invert_lower_triangular(banded_matrix(band));
    const std::size_t t_len = band.length();
    for (std::size_t i = 0; i < t_len; ++i)
        for (std::size_t j = 0; j < t_len; ++j) l(i, j) *= band.mu[j];
    const std::size_t observed = lower_rank_profile(l, 512, tol);
    return {std::move(l), observed, band.bandwidth + 1};
}

}  // namespace ssd
