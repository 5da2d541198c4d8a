#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "ssd/op_counter.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

/// Per-step multipliers a_0..a_{T-1} of a 1-semiseparable matrix / scalar
/// recurrence. a_0 is stored but never read by materialization (the product
/// a_j * ... * a_{i+1} never reaches index 0); the scan module uses it only to
/// inject a nonzero initial state.
struct OneSSCoeffs {
    enum class Regime {
        unit_interval,  ///< every a_t in [0, 1], as produced by SSD layers
        arbitrary,      ///< any finite reals (closure / inverse experiments)
    };

    std::vector<double> a;
    Regime regime = Regime::unit_interval;

    OneSSCoeffs() = default;
    explicit OneSSCoeffs(std::vector<double> values, Regime r = Regime::unit_interval);

    std::size_t length() const noexcept { return a.size(); }
};

enum class StateForm { scalar, diagonal, dense };

/// Sequentially semiseparable representation M_ji = C_j^T A_j ... A_{i+1} B_i.
///
/// A is (T) for scalar, (T,N) for diagonal and (T,N,N) for dense per-step
/// state matrices. B and C are (T,N).
struct SSSRep {
    StateForm form = StateForm::scalar;
    Tensor A;
    Tensor B;
    Tensor C;

    std::size_t order() const noexcept { return B.rank() == 2 ? B.dim(1) : 0; }
    std::size_t length() const noexcept { return B.rank() == 2 ? B.dim(0) : 0; }

    /// Throws DimensionError when A, B, C disagree on T or N.
    void validate() const;
};

/// Dense T x T 1-SS matrix: M[j][i] = a_j * ... * a_{i+1} for j >= i.
///
/// Built from running products along each row. Entries whose magnitude drops
/// below 1e-300 are flushed to zero and `underflowed` (when given) is set.
Tensor materialize_1ss(const OneSSCoeffs& coeffs, bool* underflowed = nullptr);

/// Dense lower-triangular materialization of an SSS representation.
/// Counts N mul_adds per entry for the C.B contraction plus the state
/// propagation cost (1, N or N*N per step for scalar, diagonal, dense A).
Tensor materialize_sss(const SSSRep& rep, OpCounter* ops = nullptr);

/// Explicit rank-N factorization of the block M[r0:r1, c0:c1] of an SSS
/// matrix, valid when the block lies on or below the diagonal (c1 - 1 <= r0).
/// Returns (left, right) with left (r1-r0, N) and right (N, c1-c0) so that
/// left * right reproduces the block.
std::pair<Tensor, Tensor> sss_block_factors(const SSSRep& rep, std::size_t r0, std::size_t r1,
                                            std::size_t c0, std::size_t c1);

/// Maximum numerical rank over contiguous submatrices lying on or below the
/// diagonal (rows [r0, r1), columns [c0, c1) with c1 - 1 <= r0).
///
/// Every such submatrix is enumerated when T <= 16; larger matrices are probed
/// with `samples` seeded random submatrices.
std::size_t lower_rank_profile(const Tensor& m, std::size_t samples = 512, double tol = 1e-8,
                               std::uint64_t seed = 0);

inline constexpr std::size_t kExhaustiveProfileLimit = 16;

/// Dense inverse of a lower-triangular matrix by forward substitution.
/// Throws SingularMatrixError on a zero (or denormal-scale) diagonal entry.
Tensor invert_lower_triangular(const Tensor& m);

/// Largest |m(i,j)| outside the lower band 0 <= i - j <= bandwidth.
double max_outside_band(const Tensor& m, std::size_t bandwidth);

enum class ClosureOp { sum, product, inverse };

/// Applies the dense operation to the materializations and reports the
/// observed semiseparable order (rank profile). `rhs` is required for sum and
/// product and ignored for inverse.
std::size_t closure_check(ClosureOp op, const SSSRep& lhs, const SSSRep* rhs, double tol = 1e-8);

/// Order-k autoregressive transformation
///   y_t = mu_t x_t + l_{t,1} y_{t-1} + ... + l_{t,k} y_{t-k}.
/// `coeffs` is (T, k) with coeffs(t, i-1) = l_{t,i}; terms reaching before
/// t = 0 are ignored.
struct BandedLower {
    std::size_t bandwidth = 0;
    Tensor coeffs;
    std::vector<double> mu;

    std::size_t length() const noexcept { return mu.size(); }
    void validate() const;
};

/// Unit-diagonal banded matrix D with D[t][t-i] = -l_{t,i}, so that D y = mu .* x.
Tensor banded_matrix(const BandedLower& band);

struct ArCertificate {
    Tensor transform;            ///< L = D^{-1} diag(mu), the dense y = L x map
    std::size_t observed_order;  ///< lower_rank_profile(L)
    std::size_t bound;           ///< k + 1

    bool holds() const noexcept { return observed_order <= bound; }
};

/// Builds the dense transformation of an order-k autoregressive process and
/// certifies that it is semiseparable of order at most k + 1.
ArCertificate ar_to_ssm(const BandedLower& band, double tol = 1e-8);

}  // namespace ssd
