#include "ssd/sma.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ssd/contract.hpp"
#include "ssd/random.hpp"
#include "ssd/scan.hpp"

namespace ssd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_mask(const MaskSpec& spec, std::size_t length) {
    std::visit(overloaded{
                   [](const CausalMask&) {},
                   [](const DecayMask& m) {
                       if (!(m.gamma >= 0.0 && m.gamma <= 1.0))
                           throw std::invalid_argument("decay mask gamma must lie in [0, 1]");
                   },
                   [](const ToeplitzMask&) {},
                   [length](const OneSSMask& m) {
                       if (m.a.length() != length) {
                           throw DimensionError("axis T: 1-SS mask has length " + std::to_string(m.a.length()) +
                                                ", sequence has " + std::to_string(length));
                       }
                   },
               },
               spec);
}

void check_qkv(const Tensor& q, const Tensor& k, const Tensor& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw DimensionError("Q, K, V must be rank 2");
    if (q.dim(1) != k.dim(1)) {
        throw DimensionError("axis N has length " + std::to_string(q.dim(1)) + " in Q and " +
                             std::to_string(k.dim(1)) + " in K");
    }
    if (k.dim(0) != v.dim(0)) {
        throw DimensionError("axis S has length " + std::to_string(k.dim(0)) + " in K and " +
                             std::to_string(v.dim(0)) + " in V");
    }
    if (q.dim(0) != k.dim(0)) {
        throw DimensionError("axis S: masked attention needs S == T, got T=" + std::to_string(q.dim(0)) +
                             " and S=" + std::to_string(k.dim(0)));
    }
}

std::size_t toeplitz_support(const ToeplitzMask& m, std::size_t length) {
    std::size_t support = std::min(m.alpha.size(), length);
    while (support > 0 && m.alpha[support - 1] == 0.0) --support;
    return support;
}

// z is (S, C) with the mask applied along S for every column.
Tensor mask_multiply(const MaskSpec& spec, const Tensor& z, OpCounter* ops) {
    const std::size_t s_len = z.dim(0);
    return std::visit(
        overloaded{
            [&](const CausalMask&) {
                Tensor h = z;
                const std::size_t c = z.size() / std::max<std::size_t>(s_len, 1);
                for (std::size_t t = 1; t < s_len; ++t)
                    for (std::size_t j = 0; j < c; ++j) h.data()[t * c + j] += h.data()[(t - 1) * c + j];
                if (s_len > 1) count_mul_adds(ops, (s_len - 1) * c);
                return h;
            },
            [&](const DecayMask& m) {
                std::vector<double> a(s_len, m.gamma);
                return cumprodsum<double>(std::span<const double>(a), z, ScanAlgorithm::sequential(), {}, ops).h;
            },
            [&](const OneSSMask& m) {
                return cumprodsum<double>(std::span<const double>(m.a.a), z, ScanAlgorithm::sequential(), {}, ops).h;
            },
            [&](const ToeplitzMask& m) {
                const std::size_t support = toeplitz_support(m, s_len);
                const std::size_t c = z.size() / std::max<std::size_t>(s_len, 1);
                Tensor h(z.shape());
                std::uint64_t count = 0;
                for (std::size_t t = 0; t < s_len; ++t) {
                    for (std::size_t lag = 0; lag < support && lag <= t; ++lag) {
                        const double w = m.alpha[lag];
                        for (std::size_t j = 0; j < c; ++j) h.data()[t * c + j] += w * z.data()[(t - lag) * c + j];
                        count += c;
                    }
                }
                count_mul_adds(ops, count);
                return h;
            },
        },
        spec);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor projection(std::size_t input_dim, std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    // row j is w_j; drawing row by row keeps smaller m a prefix of larger m
    return rng.normal_tensor({m, input_dim});
}

}  // namespace

Tensor mask_materialize(const MaskSpec& spec, std::size_t length) {
    check_mask(spec, length);
    Tensor l({length, length});
    std::visit(overloaded{
                   [&](const CausalMask&) {
                       for (std::size_t i = 0; i < length; ++i)
                           for (std::size_t j = 0; j <= i; ++j) l(i, j) = 1.0;
                   },
                   [&](const DecayMask& m) {
                       for (std::size_t i = 0; i < length; ++i) {
                           double w = 1.0;
                           for (std::size_t j = i + 1; j-- > 0;) {
                               l(i, j) = w;
                               w *= m.gamma;
                           }
                       }
                   },
                   [&](const ToeplitzMask& m) {
                       for (std::size_t i = 0; i < length; ++i)
                           for (std::size_t j = 0; j <= i; ++j)
                               l(i, j) = (i - j) < m.alpha.size() ? m.alpha[i - j] : 0.0;
                   },
                   [&](const OneSSMask& m) { l = materialize_1ss(m.a); },
               },
               spec);
    return l;
}

Tensor attention_quadratic(const Tensor& q, const Tensor& k, const Tensor& v, const MaskSpec& spec,
                           OpCounter* ops) {
    check_qkv(q, k, v);
    const Tensor l = mask_materialize(spec, q.dim(0));
    count_elementwise(ops, l.size());
    return contract("TN,SN,SP,TS->TP", q, k, v, l, ops, ContractionOrder::quadratic);
}

Tensor attention_linear(const Tensor& q, const Tensor& k, const Tensor& v, const MaskSpec& spec, OpCounter* ops) {
    check_qkv(q, k, v);
    check_mask(spec, q.dim(0));
    const std::size_t s_len = k.dim(0), p = v.dim(1), n = k.dim(1);
    const Tensor z = contract("SP,SN->SPN", v, k, ops);
    const Tensor h = mask_multiply(spec, z.reshaped({s_len, p * n}), ops).reshaped({s_len, p, n});
    return contract("TN,TPN->TP", q, h, ops);
}

std::size_t FeatureMap::output_dim(std::size_t n) const {
    switch (kind) {
        case Kind::cosformer: return 2 * n;
        case Kind::random_fourier:
        case Kind::positive_random: return 2 * features;
        case Kind::taylor: return 1 + n + n * n;
        default: return n;
    }
}

Tensor feature_map_apply(const FeatureMap& fm, const Tensor& x) {
    if (x.rank() != 2) throw DimensionError("feature maps expect (T, n) inputs");
    const std::size_t t_len = x.dim(0), n = x.dim(1);
    Tensor out({t_len, fm.output_dim(n)});
    using Kind = FeatureMap::Kind;
    switch (fm.kind) {
        case Kind::identity: return x;
        case Kind::swish:
        case Kind::relu:
        case Kind::elu1p:
        case Kind::exp:
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double v = x.data()[i];
                double r = v;
                if (fm.kind == Kind::swish) r = v * sigmoid(v);
                if (fm.kind == Kind::relu) r = v > 0.0 ? v : 0.0;
                if (fm.kind == Kind::elu1p) r = v > 0.0 ? 1.0 + v : std::exp(v);
                if (fm.kind == Kind::exp) r = std::exp(v);
                out.data()[i] = r;
            }
            return out;
        case Kind::cosformer: {
            const double horizon = static_cast<double>(fm.horizon ? fm.horizon : t_len);
            for (std::size_t t = 0; t < t_len; ++t) {
                const double angle = std::numbers::pi * static_cast<double>(t) / (2.0 * horizon);
                const double cw = std::cos(angle), sw = std::sin(angle);
                for (std::size_t j = 0; j < n; ++j) {
                    out(t, 2 * j) = x(t, j) * cw;
                    out(t, 2 * j + 1) = x(t, j) * sw;
                }
            }
            return out;
        }
        case Kind::random_fourier:
        case Kind::positive_random: {
            if (fm.features == 0) throw std::invalid_argument("random feature maps need m >= 1");
            const Tensor w = projection(n, fm.features, fm.seed);
            const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(fm.features));
            for (std::size_t t = 0; t < t_len; ++t) {
                double sq = 0.0;
                for (std::size_t j = 0; j < n; ++j) sq += x(t, j) * x(t, j);
                for (std::size_t f = 0; f < fm.features; ++f) {
                    double proj = 0.0;
                    for (std::size_t j = 0; j < n; ++j) proj += w(f, j) * x(t, j);
                    if (fm.kind == Kind::random_fourier) {
                        const double scale = std::exp(0.5 * sq) * inv_sqrt_m;
                        out(t, 2 * f) = scale * std::cos(proj);
                        out(t, 2 * f + 1) = scale * std::sin(proj);
                    } else {
                        const double scale = std::exp(-0.5 * sq) * inv_sqrt_m * std::numbers::sqrt2 / 2.0;
                        out(t, 2 * f) = scale * std::exp(proj);
                        out(t, 2 * f + 1) = scale * std::exp(-proj);
                    }
                }
            }
            return out;
        }
        case Kind::taylor: {
            const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
            for (std::size_t t = 0; t < t_len; ++t) {
                out(t, 0) = 1.0;
                for (std::size_t j = 0; j < n; ++j) out(t, 1 + j) = x(t, j);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) out(t, 1 + n + i * n + j) = x(t, i) * x(t, j) * inv_sqrt2;
            }
            return out;
        }
    }
    return out;
}

Tensor normalized_attention(const Tensor& q, const Tensor& k, const Tensor& v, const MaskSpec& spec,
                            const FeatureMap& fm, OpCounter* ops) {
    check_qkv(q, k, v);
    const Tensor fq = feature_map_apply(fm, q);
    const Tensor fk = feature_map_apply(fm, k);
    const std::size_t t_len = v.dim(0), p = v.dim(1);
    Tensor augmented({t_len, p + 1});
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t c = 0; c < p; ++c) augmented(t, c) = v(t, c);
        augmented(t, p) = 1.0;
    }
    const Tensor y = attention_linear(fq, fk, augmented, spec, ops);
    Tensor out({t_len, p});
    for (std::size_t t = 0; t < t_len; ++t) {
        const double denom = y(t, p);
        if (denom == 0.0 || !std::isfinite(denom)) throw DegenerateRowError(t);
        for (std::size_t c = 0; c < p; ++c) out(t, c) = y(t, c) / denom;
    }
    count_elementwise(ops, t_len * p);
    return out;
}

std::vector<double> kernel_approx_error(const FeatureMap& fm, std::span<const std::size_t> feature_counts,
                                        const Tensor& q, const Tensor& k) {
    if (fm.kind != FeatureMap::Kind::random_fourier && fm.kind != FeatureMap::Kind::positive_random) {
        throw std::invalid_argument("kernel_approx_error needs a random feature map");
    }
    if (q.rank() != 2 || k.rank() != 2 || q.dim(1) != k.dim(1)) throw DimensionError("Q and K must be (T,n), (S,n)");
    Tensor exact = contract("TN,SN->TS", q, k);
    for (double& e : exact.data()) e = std::exp(e);
    std::vector<double> errors;
    for (std::size_t m : feature_counts) {
        FeatureMap sized = fm;
        sized.features = m;
        const Tensor approx = contract("TN,SN->TS", feature_map_apply(sized, q), feature_map_apply(sized, k));
        double total = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) total += std::abs(approx.data()[i] - exact.data()[i]);
        errors.push_back(exact.size() ? total / static_cast<double>(exact.size()) : 0.0);
    }
    return errors;
}

}  // namespace ssd
