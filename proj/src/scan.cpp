#include "ssd/scan.hpp"

#include <bit>
#include <stdexcept>

#include "ssd/contract.hpp"
#include "ssd/random.hpp"

namespace ssd {

ScanAlgorithm ScanAlgorithm::state_passing(std::size_t chunk, ScanAlgorithm inner) {
    if (chunk == 0) throw std::invalid_argument("state-passing chunk must be >= 1");
    ScanAlgorithm alg = with_kind(Kind::state_passing);
    alg.chunk = chunk;
    alg.inner = std::make_shared<const ScanAlgorithm>(std::move(inner));
    return alg;
}

ScanAlgorithm ScanAlgorithm::block_decomposition(std::size_t cutoff) {
    if (cutoff == 0) throw std::invalid_argument("block-decomposition cutoff must be >= 1");
    ScanAlgorithm alg = with_kind(Kind::block_decomposition);
    alg.cutoff = cutoff;
    return alg;
}

std::string ScanAlgorithm::name() const {
    switch (kind) {
        case Kind::sequential: return "sequential";
        case Kind::associative: return "associative";
        case Kind::dilated: return "dilated";
        case Kind::state_passing:
            return "state_passing(" + std::to_string(chunk) + "," + (inner ? inner->name() : "sequential") + ")";
        case Kind::block_decomposition: return "block_decomposition(" + std::to_string(cutoff) + ")";
    }
    return "unknown";
}

namespace {

// All kernels work in place: on entry h holds b, on exit h holds the scan.
// a[0] is never read.

template <typename T>
void scan_sequential(std::span<const T> a, std::span<T> h, OpCounter* ops) {
    for (std::size_t t = 1; t < h.size(); ++t) h[t] = a[t] * h[t - 1] + h[t];
    if (h.size() > 1) count_mul_adds(ops, 2 * (h.size() - 1));
}

// Stage 1 combines neighbouring pairs, stage 2 recurses on the odd positions
// with the pair products as multipliers, stage 3 fills the even positions.
template <typename T>
void scan_associative(std::span<const T> a, std::span<T> h, OpCounter* ops) {
    const std::size_t n = h.size();
    if (n <= 1) return;
    const std::size_t pairs = n / 2;
    std::vector<T> sub_a(pairs), sub_h(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        const T hi_a = a[2 * i + 1];
        // (a_{2i+1}, b_{2i+1}) (x) (a_{2i}, b_{2i})
        sub_a[i] = hi_a * a[2 * i];
        sub_h[i] = hi_a * h[2 * i] + h[2 * i + 1];
    }
    count_mul_adds(ops, 3 * pairs);
    scan_associative<T>(sub_a, sub_h, ops);
    for (std::size_t i = 0; i < pairs; ++i) h[2 * i + 1] = sub_h[i];
    std::size_t filled = 0;
    for (std::size_t t = 2; t < n; t += 2) {
        h[t] = a[t] * h[t - 1] + h[t];
        ++filled;
    }
    count_mul_adds(ops, 2 * filled);
}

template <typename T>
void scan_dilated(std::span<const T> a, std::span<T> h, OpCounter* ops) {
    const std::size_t n = h.size();
    if (n <= 1) return;
    const std::size_t padded = std::bit_ceil(n);
    // a = 0, b = 0 padding is absorbing and sits after every real step.
    std::vector<T> window(padded, T{0}), acc(padded, T{0});
    for (std::size_t t = 0; t < n; ++t) {
        window[t] = a[t];
        acc[t] = h[t];
    }
    for (std::size_t stride = 1; stride < padded; stride *= 2) {
        const bool last = stride * 2 >= padded;
        // descending t reads stride-shifted values before they are overwritten
        for (std::size_t t = padded; t-- > stride;) {
            acc[t] = acc[t] + window[t] * acc[t - stride];
            if (!last) window[t] = window[t] * window[t - stride];
        }
        count_mul_adds(ops, (last ? 2 : 3) * (padded - stride));
    }
    for (std::size_t t = 0; t < n; ++t) h[t] = acc[t];
}

template <typename T>
void scan_block(std::span<const T> a, std::span<T> h, std::size_t cutoff, OpCounter* ops) {
    const std::size_t n = h.size();
    if (n <= cutoff) {
        scan_sequential<T>(a, h, ops);
        return;
    }
    const std::size_t k = n / 2;
    scan_block<T>(a.first(k), h.first(k), cutoff, ops);
    scan_block<T>(a.subspan(k), h.subspan(k), cutoff, ops);
    // rank-1 lower-left quadrant: column (a_{k:k}, ..., a_{n-1:k}) times a_k h_{k-1}
    const T carry = h[k - 1];
    T decay = a[k];
    for (std::size_t i = k; i < n; ++i) {
        h[i] += decay * carry;
        if (i + 1 < n) decay *= a[i + 1];
    }
    count_mul_adds(ops, 2 * (n - k) + (n - k - 1));
}

template <typename T>
void run_scan(const ScanAlgorithm& alg, std::span<const T> a, std::span<T> h, OpCounter* ops) {
    switch (alg.kind) {
        case ScanAlgorithm::Kind::sequential: scan_sequential<T>(a, h, ops); return;
        case ScanAlgorithm::Kind::associative: scan_associative<T>(a, h, ops); return;
        case ScanAlgorithm::Kind::dilated: scan_dilated<T>(a, h, ops); return;
        case ScanAlgorithm::Kind::block_decomposition: scan_block<T>(a, h, alg.cutoff, ops); return;
        case ScanAlgorithm::Kind::state_passing: {
            const ScanAlgorithm inner = alg.inner ? *alg.inner : ScanAlgorithm::sequential();
            for (std::size_t start = 0; start < h.size(); start += alg.chunk) {
                const std::size_t len = std::min(alg.chunk, h.size() - start);
                if (start > 0) {
                    h[start] = a[start] * h[start - 1] + h[start];
                    count_mul_adds(ops, 2);
                }
                run_scan<T>(inner, a.subspan(start, len), h.subspan(start, len), ops);
            }
            return;
        }
    }
}

}  // namespace

template <std::floating_point T>
ScanResult<T> cumprodsum(std::span<const T> a, const BasicTensor<T>& b, const ScanAlgorithm& alg,
                         std::span<const T> h_init, OpCounter* ops) {
    if (b.rank() != 1 && b.rank() != 2) throw DimensionError("cumprodsum expects b of shape (T) or (T,C)");
    const std::size_t t_len = b.dim(0);
    const std::size_t channels = b.rank() == 2 ? b.dim(1) : 1;
    if (a.size() != t_len) {
        throw DimensionError("axis T has length " + std::to_string(a.size()) + " in a and " +
                             std::to_string(t_len) + " in b");
    }
    if (!h_init.empty() && h_init.size() != 1 && h_init.size() != channels) {
        throw DimensionError("h_init must have 1 or C=" + std::to_string(channels) + " values");
    }
    auto init = [&](std::size_t c) -> T {
        if (h_init.empty()) return T{0};
        return h_init.size() == 1 ? h_init[0] : h_init[c];
    };

    ScanResult<T> result{b, std::vector<T>(channels)};
    if (t_len == 0) {
        for (std::size_t c = 0; c < channels; ++c) result.final_state[c] = init(c);
        return result;
    }
    std::vector<T> column(t_len);
    auto data = result.h.data();
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < t_len; ++t) column[t] = data[t * channels + c];
        if (!h_init.empty()) {
            column[0] = a[0] * init(c) + column[0];
            count_mul_adds(ops, 2);
        }
        run_scan<T>(alg, a, column, ops);
        for (std::size_t t = 0; t < t_len; ++t) data[t * channels + c] = column[t];
        result.final_state[c] = column[t_len - 1];
    }
    return result;
}

ScanResult<double> cumprodsum(const OneSSCoeffs& a, const Tensor& b, const ScanAlgorithm& alg,
                              const ScanState& state, OpCounter* ops) {
    return cumprodsum<double>(std::span<const double>(a.a), b, alg, std::span<const double>(state.h_init), ops);
}

template ScanResult<double> cumprodsum<double>(std::span<const double>, const Tensor&, const ScanAlgorithm&,
                                               std::span<const double>, OpCounter*);
template ScanResult<float> cumprodsum<float>(std::span<const float>, const Tensor32&, const ScanAlgorithm&,
                                             std::span<const float>, OpCounter*);

std::vector<Tensor> dilated_factors(const OneSSCoeffs& coeffs) {
    const std::size_t n = coeffs.length();
    if (n == 0 || !std::has_single_bit(n)) throw std::invalid_argument("dilated_factors needs T a power of two");
    std::vector<Tensor> factors;
    std::vector<double> window(coeffs.a);
    for (std::size_t stride = 1; stride < n; stride *= 2) {
        Tensor f({n, n});
        for (std::size_t t = 0; t < n; ++t) {
            f(t, t) = 1.0;
            if (t >= stride) f(t, t - stride) = window[t];
        }
        factors.push_back(std::move(f));
        for (std::size_t t = n; t-- > stride;) window[t] *= window[t - stride];
    }
    if (factors.empty()) {
        Tensor id({n, n});
        for (std::size_t t = 0; t < n; ++t) id(t, t) = 1.0;
        factors.push_back(std::move(id));
    }
    std::reverse(factors.begin(), factors.end());
    return factors;
}

std::array<Tensor, 3> associative_scan_factors(const OneSSCoeffs& coeffs) {
    const std::size_t n = coeffs.length();
    if (n == 0 || n % 2 != 0) throw std::invalid_argument("associative_scan_factors needs even T");
    const auto& a = coeffs.a;
    Tensor stage1({n, n}), stage2({n, n}), stage3({n, n});
    for (std::size_t t = 0; t < n; ++t) {
        stage1(t, t) = stage2(t, t) = stage3(t, t) = 1.0;
    }
    for (std::size_t i = 0; i + 1 < n; i += 2) stage1(i + 1, i) = a[i + 1];
    // odd positions 1, 3, 5, ... form a 1-SS system with multipliers a_{2i+1} a_{2i}
    for (std::size_t j = 3; j < n; j += 2) {
        double running = 1.0;
        for (std::size_t i = j; i >= 3; i -= 2) {
            running *= a[i] * a[i - 1];
            stage2(j, i - 2) = running;
        }
    }
    for (std::size_t t = 2; t < n; t += 2) stage3(t, t - 1) = a[t];
    return {stage3, stage2, stage1};
}

OpCounter scan_work(const ScanAlgorithm& alg, std::size_t length, std::uint64_t seed) {
    if (length == 0) throw std::invalid_argument("scan_work needs T >= 1");
    Rng rng(seed);
    std::vector<double> a(length);
    for (double& v : a) v = rng.uniform();
    Tensor b = rng.normal_tensor({length});
    OpCounter ops;
    cumprodsum<double>(std::span<const double>(a), b, alg, {}, &ops);
    return ops;
}

}  // namespace ssd
