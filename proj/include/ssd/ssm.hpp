#pragma once

#include <cstddef>

#include "ssd/op_counter.hpp"
#include "ssd/semiseparable.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

/// Time-varying SSM parameters h_t = A_t h_{t-1} + B_t x_t, y_t = C_t^T h_t.
/// A is (T) for scalar-times-identity or (T,N) for diagonal state matrices.
/// The same (A, B, C) is broadcast over the P channels of the input.
struct SelectiveSSMParams {
    StateForm form = StateForm::scalar;
    Tensor A;
    Tensor B;
    Tensor C;

    std::size_t length() const noexcept { return B.rank() == 2 ? B.dim(0) : 0; }
    std::size_t state_dim() const noexcept { return B.rank() == 2 ? B.dim(1) : 0; }

    /// Throws DimensionError on inconsistent shapes; dense A is rejected.
    void validate() const;
    SSSRep to_sss() const;
    /// Per-step (T,N) diagonals; scalar A is repeated across N.
    Tensor diagonal() const;
};

struct SSMRun {
    Tensor y;                     ///< (T,P)
    Tensor h_final;               ///< (N,P)
    std::size_t state_floats = 0; ///< size of the only live state buffer
};

/// Exact step-by-step recurrence. `h_init` is (N,P) or empty for zeros.
SSMRun ssm_recurrent(const SelectiveSSMParams& params, const Tensor& x, const Tensor& h_init = {},
                     OpCounter* ops = nullptr);

/// Linear mode as three contractions: expand Z = X (x) B (SP,SN->SPN), a 1-SS
/// scan along T for every (n, p) using the n-th diagonal of A, then contract
/// with C (TN,TPN->TP).
Tensor ssm_diagonal_contraction(const SelectiveSSMParams& params, const Tensor& x,
                                OpCounter* ops = nullptr);

/// Quadratic mode: materializes M = SSS(A, B, C) and returns M X.
Tensor ssm_matrix_mode(const SelectiveSSMParams& params, const Tensor& x, OpCounter* ops = nullptr);

/// Scalar A only: L = 1SS(a), M = L o (C B^T), Y = M X.
Tensor scalar_identity_quadratic(const SelectiveSSMParams& params, const Tensor& x,
                                 OpCounter* ops = nullptr);

}  // namespace ssd
