#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ssd/op_counter.hpp"
#include "ssd/semiseparable.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

// Structured masks for masked kernel attention. Each has a fast
// matrix-vector product used by the linear evaluation order.

/// Lower-triangular ones; fast multiply is a cumulative sum.
struct CausalMask {};

/// L[i][j] = gamma^(i-j) for i >= j, gamma in [0, 1].
struct DecayMask {
    double gamma = 1.0;
};

/// L[i][j] = alpha[i-j] for i >= j. Coefficients past alpha.size() are zero.
///
/// The fast multiply is a direct banded product costing O(T * support) where
/// support is one past the last nonzero coefficient. With full support this
/// degrades to the dense O(T^2) product; no FFT path is provided.
struct ToeplitzMask {
    std::vector<double> alpha;
};

/// L = 1SS(a); fast multiply is the scalar scan.
struct OneSSMask {
    OneSSCoeffs a;
};

using MaskSpec = std::variant<CausalMask, DecayMask, ToeplitzMask, OneSSMask>;

/// Dense T x T lower-triangular mask.
Tensor mask_materialize(const MaskSpec& spec, std::size_t length);

/// y = (L o (Q K^T)) V evaluated as G = QK^T, M = G o L, Y = MV.
/// Q:(T,N), K:(S,N), V:(S,P) with S == T.
Tensor attention_quadratic(const Tensor& q, const Tensor& k, const Tensor& v, const MaskSpec& spec,
                           OpCounter* ops = nullptr);

/// Same function through the other contraction order: Z = V (x) K,
/// H = L Z using the mask's fast multiply along S, Y = Q . H.
Tensor attention_linear(const Tensor& q, const Tensor& k, const Tensor& v, const MaskSpec& spec,
                        OpCounter* ops = nullptr);

/// Kernel feature maps psi applied row-wise to (T, n) inputs.
struct FeatureMap {
    enum class Kind {
        identity,
        swish,            ///< x * sigmoid(x), beta = 1
        relu,
        elu1p,            ///< 1 + elu(x)
        exp,
        cosformer,        ///< (x cos(pi t / 2T'), x sin(pi t / 2T'))
        random_fourier,   ///< random projection then (cos, sin)
        positive_random,  ///< random projection then 2^-1/2 (exp, exp(-.))
        taylor,           ///< (1, x, x (x) x / sqrt 2)
    };

    Kind kind = Kind::identity;
    std::size_t features = 0;  ///< m, number of random projections
    std::uint64_t seed = 0;
    std::size_t horizon = 0;   ///< cosFormer T'; 0 means the input length

    static FeatureMap of(Kind kind) { return {kind}; }
    static FeatureMap cosformer(std::size_t horizon = 0) { return {Kind::cosformer, 0, 0, horizon}; }
    static FeatureMap random_fourier(std::size_t m, std::uint64_t seed) { return {Kind::random_fourier, m, seed}; }
    static FeatureMap positive_random(std::size_t m, std::uint64_t seed) {
        return {Kind::positive_random, m, seed};
    }

    std::size_t output_dim(std::size_t input_dim) const;
};

/// Applies the feature map to every row of x:(T, n). Random projections draw
/// w_1..w_m ~ N(0, I_n) in order from the map's seed, so a larger m extends a
/// smaller one. Both random maps are scaled so that E[psi(q) . psi(k)] =
/// exp(q . k): random Fourier features carry exp(|x|^2 / 2) / sqrt(m),
/// positive random features carry exp(-|x|^2 / 2) / sqrt(m).
Tensor feature_map_apply(const FeatureMap& fm, const Tensor& x);

/// Kernel attention normalized so that the implied attention matrix is row
/// stochastic. Computed in linear order with V augmented by a ones column;
/// throws DegenerateRowError when a denominator is zero.
Tensor normalized_attention(const Tensor& q, const Tensor& k, const Tensor& v, const MaskSpec& spec,
                            const FeatureMap& fm, OpCounter* ops = nullptr);

/// Mean |psi(Q) psi(K)^T - exp(Q K^T)| for each m in `feature_counts`, using
/// the kind and seed of `fm`.
std::vector<double> kernel_approx_error(const FeatureMap& fm, std::span<const std::size_t> feature_counts,
                                        const Tensor& q, const Tensor& k);

}  // namespace ssd
