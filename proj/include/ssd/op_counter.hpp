#pragma once

#include <cstdint>

namespace ssd {

/// Scalar operation tally.
///
/// `mul_adds` counts multiply-accumulates from contractions and recurrences;
/// a fused multiply-add is one, a lone add or lone multiply is also one.
/// `elementwise` counts bookkeeping such as building decay masks.
struct OpCounter {
    std::uint64_t mul_adds = 0;
    std::uint64_t elementwise = 0;

    OpCounter& operator+=(const OpCounter& o) noexcept {
        mul_adds += o.mul_adds;
        elementwise += o.elementwise;
        return *this;
    }
    bool operator==(const OpCounter&) const = default;
};

inline void count_mul_adds(OpCounter* ops, std::uint64_t n) noexcept {
    if (ops) ops->mul_adds += n;
}
inline void count_elementwise(OpCounter* ops, std::uint64_t n) noexcept {
    if (ops) ops->elementwise += n;
}

}  // namespace ssd
