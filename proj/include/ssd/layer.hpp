#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ssd/op_counter.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

/// How X, B and C are shared across the H heads of an SSD layer.
///
///   pattern      X heads  B heads  C heads   attention analogue
///   mhs          H        H        H         multi-head
///   mcs          1        1        H         multi-query
///   mes          1        H        1         multi-key
///   mis          H        1        1         multi-value
///   grouped(G)   H        G        G         grouped-value
struct HeadPattern {
    enum class Kind { mhs, mcs, mes, mis, grouped };

    Kind kind = Kind::mhs;
    std::size_t groups = 1;

    static HeadPattern mhs() { return {Kind::mhs}; }
    static HeadPattern mcs() { return {Kind::mcs}; }
    static HeadPattern mes() { return {Kind::mes}; }
    static HeadPattern mis() { return {Kind::mis}; }
    static HeadPattern grouped(std::size_t g) { return {Kind::grouped, g}; }

    std::size_t x_heads(std::size_t heads) const;
    std::size_t b_heads(std::size_t heads) const;
    std::size_t c_heads(std::size_t heads) const;
    std::string name() const;
};

/// Inputs of one SSD layer. Shapes: X (T, Hx, P), A (T, H), B (T, Hb, N),
/// C (T, Hc, N) with the shared-head counts given by `pattern`. Head h reads
/// index floor(h * K / H) of a tensor holding K heads.
template <std::floating_point T>
struct SSDInputs {
    BasicTensor<T> X;
    BasicTensor<T> A;
    BasicTensor<T> B;
    BasicTensor<T> C;
    HeadPattern pattern;

    std::size_t length() const noexcept { return A.rank() == 2 ? A.dim(0) : 0; }
    std::size_t heads() const noexcept { return A.rank() == 2 ? A.dim(1) : 0; }
    std::size_t head_dim() const noexcept { return X.rank() == 3 ? X.dim(2) : 0; }
    std::size_t state_dim() const noexcept { return B.rank() == 3 ? B.dim(2) : 0; }

    /// Throws DimensionError on shape or sharing inconsistencies and
    /// std::invalid_argument when some a_t lies outside [0, 1].
    void validate() const;
};

template <std::floating_point T>
struct SSDRun {
    BasicTensor<T> y;              ///< (T, H, P)
    BasicTensor<T> h_final;        ///< (H, N, P)
    std::size_t state_floats = 0;  ///< live recurrent state, H * N * P
};

/// Sequential semantics per head: S <- a_t S + B_t (x) X_t, Y_t = C_t^T S.
/// `h_init` is (H, N, P) or empty for zeros.
template <std::floating_point T>
SSDRun<T> ssd_recurrent(const SSDInputs<T>& in, const BasicTensor<T>& h_init = {}, OpCounter* ops = nullptr);

/// Quadratic (attention) form per head: Y = (1SS(a) o C B^T) X, zero initial state.
template <std::floating_point T>
BasicTensor<T> ssd_quadratic(const SSDInputs<T>& in, OpCounter* ops = nullptr);

/// Chunked algorithm with chunk length Q:
///  1. diagonal blocks in quadratic form per chunk,
///  2. right factors: chunk end-states from zero, a (N,Q)x(Q,P) product,
///  3. center factors: scalar scan of the end-states across chunks,
///  4. left factors: contribution of the incoming state, a (Q,N)x(N,P) product.
/// When Q does not divide T the last chunk is shorter. `h_init` enters only
/// through step 3.
template <std::floating_point T>
SSDRun<T> ssd_blocked(const SSDInputs<T>& in, std::size_t chunk, const BasicTensor<T>& h_init = {},
                      OpCounter* ops = nullptr);

inline constexpr std::size_t kDefaultChunk = 64;

/// Copies shared heads out to a multi-head (mhs) layout, (T, H, .) everywhere.
template <std::floating_point T>
SSDInputs<T> expand_heads(const SSDInputs<T>& in);

/// Predicted and measured mul_add counts of ssd_blocked for one random
/// instance with zero initial state. Predicted terms per head, nc = ceil(T/Q):
///   diagonal  nc * (Q*Q*N + Q*Q + Q*Q*P)
///   right     nc * N*P*Q
///   center    2 * (nc - 1) * N*P
///   left      nc * Q*P*N
/// (exact when Q divides T).
struct SSDCost {
    std::uint64_t diagonal = 0;
    std::uint64_t right = 0;
    std::uint64_t center = 0;
    std::uint64_t left = 0;
    std::uint64_t predicted = 0;
    OpCounter measured;
};

SSDCost ssd_cost(std::size_t length, std::size_t chunk, std::size_t state_dim, std::size_t head_dim,
                 std::size_t heads, std::uint64_t seed = 0);

/// Seeded random inputs: a in [a_lo, 1], X/B/C standard normal.
SSDInputs<double> random_ssd_inputs(std::size_t length, std::size_t heads, std::size_t head_dim,
                                    std::size_t state_dim, HeadPattern pattern, std::uint64_t seed,
                                    double a_lo = 0.0);

}  // namespace ssd
