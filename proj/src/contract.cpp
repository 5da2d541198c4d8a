#include "ssd/contract.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace ssd {

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

namespace {

constexpr std::array<std::string_view, 10> kSupported = {
    "MN,NK->MK",   "SP,SN->SPN", "TSN,SPN->TPN", "TN,TPN->TP",      "TN,SN->TS",
    "TS,TS->TS",   "TS,SP->TP",  "TS,SPN->TPN",  "TN,SN,SP,TS->TP", "QN,NP->QP",
};

struct Descriptor {
    std::vector<std::string> inputs;
    std::string output;
};

Descriptor parse(const std::string& canonical) {
    Descriptor d;
    const auto arrow = canonical.find("->");
    std::string lhs = canonical.substr(0, arrow);
    d.output = canonical.substr(arrow + 2);
    std::size_t start = 0;
    while (true) {
        const auto comma = lhs.find(',', start);
        d.inputs.push_back(lhs.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return d;
}

template <std::floating_point T>
BasicTensor<T> contract_pairwise(const Descriptor& d, std::span<const BasicTensor<T>* const> operands,
                                 OpCounter* ops) {
    // Axis lengths, checked for consistency across operands.
    std::map<char, std::size_t> extent;
    for (std::size_t k = 0; k < operands.size(); ++k) {
        const auto& axes = d.inputs[k];
        const auto& t = *operands[k];
        if (axes.size() != t.rank()) {
            throw DimensionError("operand " + std::to_string(k) + " has rank " +
                                 std::to_string(t.rank()) + " but descriptor axes '" + axes + "'");
        }
        for (std::size_t i = 0; i < axes.size(); ++i) {
            auto [it, inserted] = extent.emplace(axes[i], t.dim(i));
            if (!inserted && it->second != t.dim(i)) {
                throw DimensionError(std::string("axis ") + axes[i] + " has length " +
                                     std::to_string(it->second) + " and " + std::to_string(t.dim(i)));
            }
        }
    }
    for (char c : d.output) {
        if (!extent.count(c)) {
            throw DimensionError(std::string("output axis ") + c + " appears in no operand");
        }
    }

    std::string summed;
    for (const auto& [c, n] : extent) {
        if (d.output.find(c) == std::string::npos) summed.push_back(c);
    }

    // Per-operand strides for each output axis and each summed axis.
    auto strides_for = [&](const std::string& loop_axes) {
        std::vector<std::vector<std::size_t>> s(operands.size(),
                                                std::vector<std::size_t>(loop_axes.size(), 0));
        for (std::size_t k = 0; k < operands.size(); ++k) {
            const auto& axes = d.inputs[k];
            const auto& shape = operands[k]->shape();
            for (std::size_t a = 0; a < axes.size(); ++a) {
                std::size_t stride = 1;
                for (std::size_t b = a + 1; b < shape.size(); ++b) stride *= shape[b];
                const auto pos = loop_axes.find(axes[a]);
                if (pos != std::string::npos) s[k][pos] += stride;
            }
        }
        return s;
    };
    const auto out_strides = strides_for(d.output);
    const auto sum_strides = strides_for(summed);

    Shape out_shape;
    for (char c : d.output) out_shape.push_back(extent[c]);
    std::vector<std::size_t> sum_shape;
    std::size_t inner_count = 1;
    for (char c : summed) {
        sum_shape.push_back(extent[c]);
        inner_count *= extent[c];
    }

    BasicTensor<T> out(out_shape);
    out.set_axes(d.output);
    const std::size_t n_ops = operands.size();
    const std::size_t out_count = out.size();
    if (out_count == 0) return out;

    std::vector<std::size_t> out_idx(out_shape.size(), 0);
    std::vector<std::size_t> base(n_ops, 0);
    std::vector<std::size_t> sum_idx(sum_shape.size(), 0);
    std::vector<std::size_t> off(n_ops, 0);
    std::vector<const T*> ptr(n_ops);
    for (std::size_t k = 0; k < n_ops; ++k) ptr[k] = operands[k]->data().data();

    for (std::size_t o = 0; o < out_count; ++o) {
        T acc{0};
        std::fill(sum_idx.begin(), sum_idx.end(), 0);
        off = base;
        for (std::size_t s = 0; s < inner_count; ++s) {
            T prod = ptr[0][off[0]];
            for (std::size_t k = 1; k < n_ops; ++k) prod *= ptr[k][off[k]];
            acc += prod;
            // odometer over summed axes, last axis fastest
            for (std::size_t a = sum_shape.size(); a-- > 0;) {
                if (++sum_idx[a] < sum_shape[a]) {
                    for (std::size_t k = 0; k < n_ops; ++k) off[k] += sum_strides[k][a];
                    break;
                }
                for (std::size_t k = 0; k < n_ops; ++k) off[k] -= sum_strides[k][a] * (sum_shape[a] - 1);
                sum_idx[a] = 0;
            }
        }
        out.data()[o] = acc;
        for (std::size_t a = out_shape.size(); a-- > 0;) {
            if (++out_idx[a] < out_shape[a]) {
                for (std::size_t k = 0; k < n_ops; ++k) base[k] += out_strides[k][a];
                break;
            }
            for (std::size_t k = 0; k < n_ops; ++k) base[k] -= out_strides[k][a] * (out_shape[a] - 1);
            out_idx[a] = 0;
        }
    }
    count_mul_adds(ops, static_cast<std::uint64_t>(out_count) * inner_count * (n_ops - 1));
    return out;
}

}  // namespace

std::span<const std::string_view> supported_contractions() { return kSupported; }

std::string normalize_descriptor(std::string_view descriptor) {
    std::string s;
    for (std::size_t i = 0; i < descriptor.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(descriptor[i]);
        // U+2192 RIGHTWARDS ARROW is E2 86 92 in UTF-8
        if (c == 0xE2 && i + 2 < descriptor.size() &&
            static_cast<unsigned char>(descriptor[i + 1]) == 0x86 &&
            static_cast<unsigned char>(descriptor[i + 2]) == 0x92) {
            s += "->";
            i += 2;
        } else if (c != ' ' && c != '\t') {
            s.push_back(static_cast<char>(c));
        }
    }
    return s;
}

template <std::floating_point T>
BasicTensor<T> contract(std::string_view descriptor, std::span<const BasicTensor<T>* const> operands,
                        OpCounter* ops, ContractionOrder order) {
    const std::string canonical = normalize_descriptor(descriptor);
    if (std::find(kSupported.begin(), kSupported.end(), canonical) == kSupported.end()) {
        throw UnsupportedContraction("unsupported contraction descriptor '" + canonical + "'");
    }
    const Descriptor d = parse(canonical);
    if (d.inputs.size() != operands.size()) {
        throw DimensionError("descriptor '" + canonical + "' expects " +
                             std::to_string(d.inputs.size()) + " operands, got " +
                             std::to_string(operands.size()));
    }
    if (operands.size() == 4) {
        const auto& q = *operands[0];
        const auto& k = *operands[1];
        const auto& v = *operands[2];
        const auto& l = *operands[3];
        if (order == ContractionOrder::quadratic) {
            auto g = contract<T>("TN,SN->TS", q, k, ops);
            auto m = contract<T>("TS,TS->TS", g, l, ops);
            return contract<T>("TS,SP->TP", m, v, ops);
        }
        auto z = contract<T>("SP,SN->SPN", v, k, ops);
        auto h = contract<T>("TS,SPN->TPN", l, z, ops);
        return contract<T>("TN,TPN->TP", q, h, ops);
    }
    return contract_pairwise<T>(d, operands, ops);
}

template <std::floating_point T>
BasicTensor<T> transpose(const BasicTensor<T>& m) {
    if (m.rank() != 2) throw DimensionError("transpose expects a rank-2 tensor");
    BasicTensor<T> out({m.dim(1), m.dim(0)});
    for (std::size_t i = 0; i < m.dim(0); ++i)
        for (std::size_t j = 0; j < m.dim(1); ++j) out(j, i) = m(i, j);
    return out;
}

template Tensor contract<double>(std::string_view, std::span<const Tensor* const>, OpCounter*,
                                 ContractionOrder);
template Tensor32 contract<float>(std::string_view, std::span<const Tensor32* const>, OpCounter*,
                                  ContractionOrder);
template Tensor transpose<double>(const Tensor&);
template Tensor32 transpose<float>(const Tensor32&);

}  // namespace ssd
