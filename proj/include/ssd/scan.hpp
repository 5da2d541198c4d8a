#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ssd/op_counter.hpp"
#include "ssd/semiseparable.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

/// Strategy for multiplying by a 1-SS matrix, i.e. evaluating the scalar
/// recurrence h_t = a_t h_{t-1} + b_t.
struct ScanAlgorithm {
    enum class Kind { sequential, associative, dilated, state_passing, block_decomposition };

    Kind kind = Kind::sequential;
    std::size_t chunk = 1;                        ///< state_passing chunk length
    std::shared_ptr<const ScanAlgorithm> inner;   ///< state_passing per-chunk solver
    std::size_t cutoff = 32;                      ///< block_decomposition base size

    static ScanAlgorithm sequential() { return {}; }
    static ScanAlgorithm associative() { return with_kind(Kind::associative); }
    static ScanAlgorithm dilated() { return with_kind(Kind::dilated); }
    static ScanAlgorithm state_passing(std::size_t chunk, ScanAlgorithm inner);
    static ScanAlgorithm block_decomposition(std::size_t cutoff = 32);

    std::string name() const;

private:
    static ScanAlgorithm with_kind(Kind k) {
        ScanAlgorithm alg;
        alg.kind = k;
        return alg;
    }
};

/// Initial state h_{-1}. Empty means zero; one value broadcasts over channels.
/// It enters as a_0 * h_init added to b_0, so a_0 acts as the transition
/// out of the virtual step before t = 0.
struct ScanState {
    std::vector<double> h_init;
};

template <std::floating_point T>
struct ScanResult {
    BasicTensor<T> h;             ///< same shape as b
    std::vector<T> final_state;   ///< h_{T-1} per channel (h_init when T == 0)
};

/// cumprodsum over b of shape (T) or (T, C); the multipliers are shared by
/// all channels. `h_init` is empty, a single value, or one value per channel.
template <std::floating_point T>
ScanResult<T> cumprodsum(std::span<const T> a, const BasicTensor<T>& b, const ScanAlgorithm& alg,
                         std::span<const T> h_init = {}, OpCounter* ops = nullptr);

ScanResult<double> cumprodsum(const OneSSCoeffs& a, const Tensor& b, const ScanAlgorithm& alg,
                              const ScanState& state = {}, OpCounter* ops = nullptr);

/// Element of the scan monoid: the affine map h -> a h + b.
struct ScanPair {
    double a = 1.0;
    double b = 0.0;
    bool operator==(const ScanPair&) const = default;
};

/// (a_t, b_t) (x) (a_s, b_s) = (a_t a_s, a_t b_s + b_t): apply s first, then t.
constexpr ScanPair associative_combine(ScanPair x, ScanPair y) noexcept {
    return {x.a * y.a, x.a * y.b + x.b};
}

/// Dense factors of the dilated (stride 1, 2, 4, ...) decomposition, largest
/// stride first, so that factors[0] * factors[1] * ... equals
/// materialize_1ss(a). T must be a power of two; T == 1 yields the identity.
std::vector<Tensor> dilated_factors(const OneSSCoeffs& a);

/// One level of the pairwise associative-scan factorization for even T:
/// {broadcast (stage 3), half-size 1-SS on odd indices (stage 2),
/// 2x2 diagonal blocks (stage 1)}; their product equals materialize_1ss(a).
std::array<Tensor, 3> associative_scan_factors(const OneSSCoeffs& a);

/// Operation count of one instrumented run on seeded random input of length T.
OpCounter scan_work(const ScanAlgorithm& alg, std::size_t length, std::uint64_t seed = 0);

}  // namespace ssd
