#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssd/op_counter.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

/// Pairwise evaluation order for the four-operand masked attention
/// descriptor `TN,SN,SP,TS->TP` (operands Q, K, V, L).
///
/// quadratic: (TN,SN->TS) then (TS,TS->TS) then (TS,SP->TP)
/// linear:    (SP,SN->SPN) then (TS,SPN->TPN) then (TN,TPN->TP)
enum class ContractionOrder { quadratic, linear };

/// The closed set of descriptors accepted by `contract`.
std::span<const std::string_view> supported_contractions();

/// Canonical form of a descriptor: whitespace removed, a unicode arrow
/// accepted in place of "->".
std::string normalize_descriptor(std::string_view descriptor);

/// Sum-of-products contraction named by a descriptor such as "MN,NK->MK".
///
/// Axis letters pair up operand axes; letters absent from the output are
/// summed. Each innermost product of k operands counts k-1 mul_adds, so
/// MN,NK->MK costs exactly M*N*K. Throws DimensionError naming the axis when a
/// shared letter has unequal lengths, UnsupportedContraction for descriptors
/// outside `supported_contractions()`.
template <std::floating_point T>
BasicTensor<T> contract(std::string_view descriptor, std::span<const BasicTensor<T>* const> operands,
                        OpCounter* ops = nullptr,
                        ContractionOrder order = ContractionOrder::quadratic);

template <std::floating_point T>
BasicTensor<T> contract(std::string_view descriptor, const BasicTensor<T>& lhs,
                        const BasicTensor<T>& rhs, OpCounter* ops = nullptr) {
    const BasicTensor<T>* operands[] = {&lhs, &rhs};
    return contract<T>(descriptor, operands, ops);
}

template <std::floating_point T>
BasicTensor<T> contract(std::string_view descriptor, const BasicTensor<T>& q, const BasicTensor<T>& k,
                        const BasicTensor<T>& v, const BasicTensor<T>& mask, OpCounter* ops = nullptr,
                        ContractionOrder order = ContractionOrder::quadratic) {
    const BasicTensor<T>* operands[] = {&q, &k, &v, &mask};
    return contract<T>(descriptor, operands, ops, order);
}

/// Plain (M,K)x(K,N) product through the MN,NK->MK descriptor.
template <std::floating_point T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b, OpCounter* ops = nullptr) {
    return contract<T>("MN,NK->MK", a, b, ops);
}

template <std::floating_point T>
BasicTensor<T> transpose(const BasicTensor<T>& m);

}  // namespace ssd
