#include "ssd/layer.hpp"

#include <cmath>
#include <stdexcept>

#include "ssd/contract.hpp"
#include "ssd/random.hpp"
#include "ssd/scan.hpp"

namespace ssd {

std::size_t HeadPattern::x_heads(std::size_t heads) const {
    return (kind == Kind::mcs || kind == Kind::mes) ? 1 : heads;
}
std::size_t HeadPattern::b_heads(std::size_t heads) const {
    switch (kind) {
        case Kind::mhs:
        case Kind::mes: return heads;
        case Kind::mcs:
        case Kind::mis: return 1;
        case Kind::grouped: return groups;
    }
    return heads;
}
std::size_t HeadPattern::c_heads(std::size_t heads) const {
    switch (kind) {
        case Kind::mhs:
        case Kind::mcs: return heads;
        case Kind::mes:
        case Kind::mis: return 1;
        case Kind::grouped: return groups;
    }
    return heads;
}
std::string HeadPattern::name() const {
    switch (kind) {
        case Kind::mhs: return "mhs";
        case Kind::mcs: return "mcs";
        case Kind::mes: return "mes";
        case Kind::mis: return "mis";
        case Kind::grouped: return "grouped(" + std::to_string(groups) + ")";
    }
    return "unknown";
}

template <std::floating_point T>
void SSDInputs<T>::validate() const {
    if (A.rank() != 2) throw DimensionError("A must be (T, H)");
    if (X.rank() != 3 || B.rank() != 3 || C.rank() != 3) throw DimensionError("X, B, C must be rank 3");
    const std::size_t t = A.dim(0), h = A.dim(1);
    if (X.dim(0) != t || B.dim(0) != t || C.dim(0) != t) throw DimensionError("axis T differs across X, A, B, C");
    if (B.dim(2) != C.dim(2)) throw DimensionError("axis N differs between B and C");
    if (h == 0) throw DimensionError("axis H must be nonzero");
    if (pattern.kind == HeadPattern::Kind::grouped && (pattern.groups == 0 || h % pattern.groups != 0)) {
        throw DimensionError("axis G: " + std::to_string(pattern.groups) + " groups do not divide H=" +
                             std::to_string(h));
    }
    auto check = [&](const char* name, std::size_t got, std::size_t want) {
        if (got != want) {
            throw DimensionError(std::string("axis H: ") + name + " has " + std::to_string(got) +
                                 " heads, pattern " + pattern.name() + " expects " + std::to_string(want));
        }
    };
    check("X", X.dim(1), pattern.x_heads(h));
    check("B", B.dim(1), pattern.b_heads(h));
    check("C", C.dim(1), pattern.c_heads(h));
    for (T a : A.data()) {
        if (!(a >= T{0} && a <= T{1})) throw std::invalid_argument("SSD decay a_t must lie in [0, 1]");
    }
}

namespace {

template <typename T>
struct HeadView {
    std::vector<T> a;     // (T)
    BasicTensor<T> x;     // (T, P)
    BasicTensor<T> b;     // (T, N)
    BasicTensor<T> c;     // (T, N)
};

template <typename T>
BasicTensor<T> head_slice(const BasicTensor<T>& src, std::size_t head, std::size_t heads, std::size_t row0,
                          std::size_t row1) {
    const std::size_t k = src.dim(1);
    const std::size_t idx = head * k / heads;
    const std::size_t w = src.dim(2);
    BasicTensor<T> out({row1 - row0, w});
    for (std::size_t t = row0; t < row1; ++t)
        for (std::size_t j = 0; j < w; ++j) out(t - row0, j) = src(t, idx, j);
    return out;
}

template <typename T>
HeadView<T> head_view(const SSDInputs<T>& in, std::size_t head, std::size_t row0, std::size_t row1) {
    const std::size_t h = in.heads();
    HeadView<T> v;
    v.a.resize(row1 - row0);
    for (std::size_t t = row0; t < row1; ++t) v.a[t - row0] = in.A(t, head);
    v.x = head_slice(in.X, head, h, row0, row1);
    v.b = head_slice(in.B, head, h, row0, row1);
    v.c = head_slice(in.C, head, h, row0, row1);
    return v;
}

// L[i][j] = a_i * ... * a_{j+1} inside one segment.
template <typename T>
BasicTensor<T> segment_decay(const std::vector<T>& a, OpCounter* ops) {
    const std::size_t q = a.size();
    BasicTensor<T> l({q, q});
    for (std::size_t i = 0; i < q; ++i) {
        T running{1};
        l(i, i) = T{1};
        for (std::size_t j = i; j-- > 0;) {
            running *= a[j + 1];
            l(i, j) = running;
        }
    }
    count_elementwise(ops, q * (q + 1) / 2);
    return l;
}

// Below this factor the chunk product is formed as exp(sum log a).
constexpr double kLogSpaceThreshold = 1e-12;

template <typename T>
T chunk_product(const std::vector<T>& a) {
    bool tiny = false;
    for (T v : a) tiny = tiny || static_cast<double>(v) < kLogSpaceThreshold;
    if (!tiny) {
        T p{1};
        for (T v : a) p *= v;
        return p;
    }
    double log_sum = 0.0;
    for (T v : a) log_sum += std::log(static_cast<double>(v));
    return static_cast<T>(std::exp(log_sum));
}

template <typename T>
BasicTensor<T> quadratic_block(const HeadView<T>& v, OpCounter* ops) {
    const BasicTensor<T> l = segment_decay(v.a, ops);
    const BasicTensor<T> g = contract<T>("TN,SN->TS", v.c, v.b, ops);
    const BasicTensor<T> m = contract<T>("TS,TS->TS", g, l, ops);
    return contract<T>("TS,SP->TP", m, v.x, ops);
}

template <typename T>
void check_state(const BasicTensor<T>& h_init, std::size_t h, std::size_t n, std::size_t p) {
    if (!h_init.empty() && h_init.shape() != Shape{h, n, p}) {
        throw DimensionError("initial state must be (H, N, P) = " + shape_string({h, n, p}) + ", got " +
                             shape_string(h_init.shape()));
    }
}

}  // namespace

template <std::floating_point T>
SSDRun<T> ssd_recurrent(const SSDInputs<T>& in, const BasicTensor<T>& h_init, OpCounter* ops) {
    in.validate();
    const std::size_t t_len = in.length(), heads = in.heads(), p = in.head_dim(), n = in.state_dim();
    check_state(h_init, heads, n, p);
    BasicTensor<T> state = h_init.empty() ? BasicTensor<T>({heads, n, p}) : h_init;
    BasicTensor<T> y({t_len, heads, p});
    const std::size_t xh = in.X.dim(1), bh = in.B.dim(1), ch = in.C.dim(1);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t h = 0; h < heads; ++h) {
            const T a = in.A(t, h);
            const std::size_t xi = h * xh / heads, bi = h * bh / heads, ci = h * ch / heads;
            for (std::size_t k = 0; k < n; ++k) {
                const T b = in.B(t, bi, k);
                for (std::size_t c = 0; c < p; ++c) state(h, k, c) = a * state(h, k, c) + b * in.X(t, xi, c);
            }
            for (std::size_t c = 0; c < p; ++c) {
                T acc{0};
                for (std::size_t k = 0; k < n; ++k) acc += in.C(t, ci, k) * state(h, k, c);
                y(t, h, c) = acc;
            }
        }
    }
    count_mul_adds(ops, 3 * t_len * heads * n * p);
    const std::size_t floats = state.size();
    return {std::move(y), std::move(state), floats};
}

template <std::floating_point T>
BasicTensor<T> ssd_quadratic(const SSDInputs<T>& in, OpCounter* ops) {
    in.validate();
    const std::size_t t_len = in.length(), heads = in.heads(), p = in.head_dim();
    BasicTensor<T> y({t_len, heads, p});
    for (std::size_t h = 0; h < heads; ++h) {
        const auto yh = quadratic_block(head_view(in, h, 0, t_len), ops);
        for (std::size_t t = 0; t < t_len; ++t)
            for (std::size_t c = 0; c < p; ++c) y(t, h, c) = yh(t, c);
    }
    return y;
}

template <std::floating_point T>
SSDRun<T> ssd_blocked(const SSDInputs<T>& in, std::size_t chunk, const BasicTensor<T>& h_init, OpCounter* ops) {
    in.validate();
    if (chunk == 0) throw std::invalid_argument("chunk length must be >= 1");
    const std::size_t t_len = in.length(), heads = in.heads(), p = in.head_dim(), n = in.state_dim();
    check_state(h_init, heads, n, p);
    BasicTensor<T> y({t_len, heads, p});
    BasicTensor<T> h_final = h_init.empty() ? BasicTensor<T>({heads, n, p}) : h_init;
    if (t_len == 0) return {std::move(y), std::move(h_final), heads * n * p};

    const std::size_t q = std::min(chunk, t_len);
    const std::size_t n_chunks = (t_len + q - 1) / q;

    for (std::size_t h = 0; h < heads; ++h) {
        std::vector<HeadView<T>> views;
        std::vector<BasicTensor<T>> decay;
        views.reserve(n_chunks);
        // chunk end-states from zero initial state, (nc, N*P)
        BasicTensor<T> states({n_chunks, n * p});
        std::vector<T> chunk_decay(n_chunks);

        for (std::size_t ci = 0; ci < n_chunks; ++ci) {
            const std::size_t s = ci * q, e = std::min(t_len, s + q), len = e - s;
            views.push_back(head_view(in, h, s, e));
            const auto& v = views.back();

            // 1. diagonal block
            const auto yd = quadratic_block(v, ops);
            for (std::size_t t = 0; t < len; ++t)
                for (std::size_t c = 0; c < p; ++c) y(s + t, h, c) = yd(t, c);

            // 2. right factor: B rows weighted by a_{e-1:j}
            BasicTensor<T> l = segment_decay(v.a, nullptr);
            BasicTensor<T> bt({n, len});
            for (std::size_t j = 0; j < len; ++j)
                for (std::size_t k = 0; k < n; ++k) bt(k, j) = v.b(j, k) * l(len - 1, j);
            count_elementwise(ops, n * len);
            const auto st = contract<T>("MN,NK->MK", bt, v.x, ops);
            std::copy(st.data().begin(), st.data().end(), states.data().begin() + ci * n * p);

            chunk_decay[ci] = chunk_product(v.a);
            count_elementwise(ops, len);
            decay.push_back(std::move(l));
        }

        // 3. center factors: true end-state per chunk
        std::vector<T> init;
        if (!h_init.empty()) {
            init.resize(n * p);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t c = 0; c < p; ++c) init[k * p + c] = h_init(h, k, c);
        }
        const auto scanned = cumprodsum<T>(std::span<const T>(chunk_decay), states, ScanAlgorithm::sequential(),
                                           std::span<const T>(init), ops);

        // 4. left factors: incoming state seen through C rows weighted by a_{t:s-1}
        for (std::size_t ci = 0; ci < n_chunks; ++ci) {
            const std::size_t s = ci * q, len = views[ci].a.size();
            BasicTensor<T> incoming({n, p});
            if (ci > 0) {
                std::copy_n(scanned.h.data().begin() + (ci - 1) * n * p, n * p, incoming.data().begin());
            } else if (!init.empty()) {
                std::copy(init.begin(), init.end(), incoming.data().begin());
            }
            BasicTensor<T> cs({len, n});
            const T entry = views[ci].a[0];
            for (std::size_t t = 0; t < len; ++t) {
                const T w = decay[ci](t, 0) * entry;
                for (std::size_t k = 0; k < n; ++k) cs(t, k) = views[ci].c(t, k) * w;
            }
            count_elementwise(ops, len * n + len);
            const auto yo = contract<T>("QN,NP->QP", cs, incoming, ops);
            for (std::size_t t = 0; t < len; ++t)
                for (std::size_t c = 0; c < p; ++c) y(s + t, h, c) += yo(t, c);
            count_elementwise(ops, len * p);
        }

        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t c = 0; c < p; ++c) h_final(h, k, c) = scanned.final_state[k * p + c];
    }
    return {std::move(y), std::move(h_final), heads * n * p};
}

template <std::floating_point T>
SSDInputs<T> expand_heads(const SSDInputs<T>& in) {
    in.validate();
    const std::size_t t_len = in.length(), heads = in.heads();
    auto widen = [&](const BasicTensor<T>& src) {
        const std::size_t k = src.dim(1), w = src.dim(2);
        BasicTensor<T> out({t_len, heads, w});
        for (std::size_t t = 0; t < t_len; ++t)
            for (std::size_t h = 0; h < heads; ++h)
                for (std::size_t j = 0; j < w; ++j) out(t, h, j) = src(t, h * k / heads, j);
        return out;
    };
    return SSDInputs<T>{widen(in.X), in.A, widen(in.B), widen(in.C), HeadPattern::mhs()};
}

SSDCost ssd_cost(std::size_t length, std::size_t chunk, std::size_t state_dim, std::size_t head_dim,
                 std::size_t heads, std::uint64_t seed) {
    if (chunk == 0 || length == 0) throw std::invalid_argument("ssd_cost needs T, Q >= 1");
    const std::uint64_t q = std::min(chunk, length), n = state_dim, p = head_dim;
    const std::uint64_t nc = (length + q - 1) / q;
    SSDCost cost;
    cost.diagonal = heads * nc * (q * q * n + q * q + q * q * p);
    cost.right = heads * nc * n * p * q;
    cost.center = heads * 2 * (nc - 1) * n * p;
    cost.left = heads * nc * q * p * n;
    cost.predicted = cost.diagonal + cost.right + cost.center + cost.left;
    const auto in = random_ssd_inputs(length, heads, head_dim, state_dim, HeadPattern::mhs(), seed);
    ssd_blocked(in, chunk, {}, &cost.measured);
    return cost;
}

SSDInputs<double> random_ssd_inputs(std::size_t length, std::size_t heads, std::size_t head_dim,
                                    std::size_t state_dim, HeadPattern pattern, std::uint64_t seed, double a_lo) {
    Rng rng(seed);
    SSDInputs<double> in;
    in.pattern = pattern;
    in.A = rng.uniform_tensor({length, heads}, a_lo, 1.0);
    in.X = rng.normal_tensor({length, pattern.x_heads(heads), head_dim});
    in.B = rng.normal_tensor({length, pattern.b_heads(heads), state_dim});
    in.C = rng.normal_tensor({length, pattern.c_heads(heads), state_dim});
    return in;
}

template struct SSDInputs<double>;
template struct SSDInputs<float>;
template SSDRun<double> ssd_recurrent<double>(const SSDInputs<double>&, const Tensor&, OpCounter*);
template SSDRun<float> ssd_recurrent<float>(const SSDInputs<float>&, const Tensor32&, OpCounter*);
template Tensor ssd_quadratic<double>(const SSDInputs<double>&, OpCounter*);
template Tensor32 ssd_quadratic<float>(const SSDInputs<float>&, OpCounter*);
template SSDRun<double> ssd_blocked<double>(const SSDInputs<double>&, std::size_t, const Tensor&, OpCounter*);
template SSDRun<float> ssd_blocked<float>(const SSDInputs<float>&, std::size_t, const Tensor32&, OpCounter*);
template SSDInputs<double> expand_heads<double>(const SSDInputs<double>&);
template SSDInputs<float> expand_heads<float>(const SSDInputs<float>&);

}  // namespace ssd
