#include "bench_lib.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "ssd/architecture.hpp"
#include "ssd/contract.hpp"
#include "ssd/layer.hpp"
#include "ssd/random.hpp"
#include "ssd/scan.hpp"
#include "ssd/semiseparable.hpp"
#include "ssd/sma.hpp"
#include "ssd/ssm.hpp"

namespace ssd::bench {

namespace {

std::vector<std::size_t> parse_values(const std::string& key, const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        if (item.empty()) throw std::invalid_argument("grid axis " + key + " has an empty value");
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("grid axis " + key + ": '" + item + "' is not a size");
        }
        if (used != item.size() || v == 0) throw std::invalid_argument("grid axis " + key + ": bad size '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw std::invalid_argument("grid axis " + key + " is empty");
    return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

std::string kv(std::initializer_list<std::pair<const char*, std::string>> items) {
    std::vector<std::string> parts;
    for (const auto& [k, v] : items) parts.push_back(std::string(k) + "=" + v);
    return join(parts, ";");
}

std::string num(std::size_t v) { return std::to_string(v); }

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

class Stopwatch {
public:
    explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
    std::uint64_t ns() const {
        if (!on_) return 0;
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count());
    }

private:
    bool on_;
    std::chrono::steady_clock::time_point start_;
};

// Per-suite state. With fault injection on, the first oracle a suite
// consults is perturbed so that its first case must fail.
class Ctx {
public:
    Ctx(const BenchConfig& cfg, std::string suite) : cfg_(cfg), suite_(std::move(suite)), armed_(cfg.inject_fault) {}

    template <std::floating_point T>
    void taint(BasicTensor<T>& oracle) {
        if (armed_ && !oracle.empty()) {
            oracle.data()[0] += T{1};
            armed_ = false;
        }
    }
    void taint(double& value) {
        if (armed_) {
            value += 1.0;
            armed_ = false;
        }
    }
    void taint(std::size_t& value) {
        if (armed_) {
            value += 1;
            armed_ = false;
        }
    }

    Record& add(std::string case_id, std::string params, double err, double tol, const OpCounter& ops = {},
                std::uint64_t ns = 0) {
        Record r;
        r.case_id = suite_ + "/" + case_id;
        r.suite = suite_;
        r.params = std::move(params);
        r.max_rel_err = err;
        r.mul_adds = ops.mul_adds;
        r.elementwise = ops.elementwise;
        r.wall_ns = ns;
        r.pass = std::isfinite(err) && err <= tol;
        records.push_back(std::move(r));
        return records.back();
    }

    Record& add_check(std::string case_id, std::string params, bool ok, std::string note) {
        Record& r = add(std::move(case_id), std::move(params), ok ? 0.0 : 1.0, 0.0);
        r.note = std::move(note);
        return r;
    }

    const BenchConfig& cfg() const { return cfg_; }
    std::uint64_t seed(std::uint64_t k) const { return cfg_.seed * 1000003u + k; }
    bool f32() const { return cfg_.dtype == Dtype::f32; }

    std::vector<Record> records;

private:
    const BenchConfig& cfg_;
    std::string suite_;
    bool armed_;
};

constexpr double kTol = 1e-12;
constexpr double kSsdTol = 1e-10;
constexpr double kF32Tol = 1e-5;

std::vector<double> unit_draws(Rng& rng, std::size_t n, double lo = 0.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, 1.0);
    return v;
}

// ---- suites ----------------------------------------------------------------

void suite_scan(Ctx& ctx) {
    const std::vector<ScanAlgorithm> algs = {
        ScanAlgorithm::associative(),
        ScanAlgorithm::dilated(),
        ScanAlgorithm::state_passing(7, ScanAlgorithm::associative()),
        ScanAlgorithm::state_passing(16, ScanAlgorithm::dilated()),
        ScanAlgorithm::block_decomposition(),
        ScanAlgorithm::block_decomposition(4),
    };
    std::uint64_t k = 0;
    for (std::size_t t : {1, 2, 3, 7, 64, 1000}) {
        for (int rep = 0; rep < 3; ++rep) {
            Rng rng(ctx.seed(k++));
            const auto a = unit_draws(rng, t);
            const Tensor b = rng.normal_tensor({t, 2});
            const std::vector<double> h0 = {rng.normal(), rng.normal()};
            auto ref = cumprodsum<double>(a, b, ScanAlgorithm::sequential(), h0);
            ctx.taint(ref.h);
            for (const auto& alg : algs) {
                OpCounter ops;
                auto got = cumprodsum<double>(a, b, alg, h0, &ops);
                double err = max_rel_err(got.h, ref.h);
                for (std::size_t c = 0; c < 2; ++c)
                    err = std::max(err, got.final_state[c] == ref.final_state[c] ? 0.0
                                                                                  : std::abs(got.final_state[c] - ref.final_state[c]) /
                                                                                        std::max(1.0, std::abs(ref.final_state[c])));
                ctx.add(alg.name() + "/T" + num(t) + "/r" + std::to_string(rep),
                        kv({{"T", num(t)}, {"C", "2"}, {"alg", alg.name()}}), err, kTol, ops);
            }
        }
    }
}

void suite_ssm(Ctx& ctx) {
    for (std::uint64_t k = 0; k < 8; ++k) {
        Rng rng(ctx.seed(k));
        const std::size_t t = 5 + 9 * k, n = 4, p = 3;
        SelectiveSSMParams params{k % 2 ? StateForm::diagonal : StateForm::scalar,
                                  k % 2 ? rng.uniform_tensor({t, n}, 0.0, 1.0) : rng.uniform_tensor({t}, 0.0, 1.0),
                                  rng.normal_tensor({t, n}), rng.normal_tensor({t, n})};
        const Tensor x = rng.normal_tensor({t, p});
        auto ref = ssm_recurrent(params, x);
        ctx.taint(ref.y);
        const std::string pr = kv({{"T", num(t)}, {"N", num(n)}, {"P", num(p)}, {"A", k % 2 ? "diagonal" : "scalar"}});
        OpCounter lin, mat;
        ctx.add("linear/" + std::to_string(k), pr, max_rel_err(ssm_diagonal_contraction(params, x, &lin), ref.y), kTol, lin);
        ctx.add("matrix/" + std::to_string(k), pr, max_rel_err(ssm_matrix_mode(params, x, &mat), ref.y), kTol, mat);
    }
}

void suite_duality(Ctx& ctx) {
    for (std::uint64_t k = 0; k < 10; ++k) {
        Rng rng(ctx.seed(k));
        const std::size_t t = 8 + 5 * k, n = 3, p = 2;
        const auto a = unit_draws(rng, t);
        SelectiveSSMParams params{StateForm::scalar, Tensor({t}, a), rng.normal_tensor({t, n}), rng.normal_tensor({t, n})};
        const Tensor x = rng.normal_tensor({t, p});
        OpCounter ops;
        Tensor quad = scalar_identity_quadratic(params, x, &ops);
        ctx.taint(quad);
        const Tensor lin = attention_linear(params.C, params.B, x, OneSSMask{OneSSCoeffs(a)});
        ctx.add("ssm-quadratic-vs-sma-linear/" + std::to_string(k), kv({{"T", num(t)}, {"N", num(n)}, {"P", num(p)}}),
                max_rel_err(lin, quad), kTol, ops);
    }
}

void suite_attention_linear(Ctx& ctx) {
    for (std::uint64_t k = 0; k < 5; ++k) {
        Rng rng(ctx.seed(k));
        const std::size_t t = 24, n = 4, p = 3;
        const Tensor q = rng.normal_tensor({t, n}), kk = rng.normal_tensor({t, n}), v = rng.normal_tensor({t, p});
        std::vector<double> alpha(5);
        for (double& x : alpha) x = rng.normal();
        const std::vector<std::pair<std::string, MaskSpec>> masks = {
            {"causal", CausalMask{}},
            {"decay", DecayMask{rng.uniform()}},
            {"toeplitz", ToeplitzMask{alpha}},
            {"1ss", OneSSMask{OneSSCoeffs(unit_draws(rng, t))}},
        };
        for (const auto& [name, mask] : masks) {
            Tensor quad = attention_quadratic(q, kk, v, mask);
            ctx.taint(quad);
            OpCounter ops;
            const Tensor lin = attention_linear(q, kk, v, mask, &ops);
            ctx.add(name + "/" + std::to_string(k), kv({{"T", num(t)}, {"N", num(n)}, {"P", num(p)}, {"mask", name}}),
                    max_rel_err(lin, quad), kTol, ops);
        }
    }
}

template <std::floating_point T>
SSDInputs<T> cast_inputs(const SSDInputs<double>& in) {
    return {in.X.cast<T>(), in.A.cast<T>(), in.B.cast<T>(), in.C.cast<T>(), in.pattern};
}

template <std::floating_point T>
void ssd_equivalence_typed(Ctx& ctx, double tol) {
    const char* dt = std::is_same_v<T, float> ? "f32" : "f64";
    std::uint64_t k = 0;
    for (std::size_t t : {1, 13, 64}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto pattern = rep == 0 ? HeadPattern::mhs() : HeadPattern::grouped(2);
            const auto in64 = random_ssd_inputs(t, 4, 3, 5, pattern, ctx.seed(k++));
            const auto in = cast_inputs<T>(in64);
            Rng rng(ctx.seed(k++));
            const BasicTensor<T> h0 = rng.normal_tensor({4, 5, 3}).cast<T>();
            auto ref = ssd_recurrent(in, h0);
            ctx.taint(ref.y);
            const auto zero_ref = ssd_recurrent(in);
            const std::string base = kv({{"T", num(t)}, {"H", "4"}, {"P", "3"}, {"N", "5"}, {"pattern", pattern.name()}, {"dtype", dt}});
            OpCounter qops;
            ctx.add("quadratic/T" + num(t) + "/r" + std::to_string(rep), base,
                    max_rel_err(ssd_quadratic(in, &qops), zero_ref.y), tol, qops);
            for (std::size_t q : {std::size_t{1}, std::size_t{2}, std::size_t{4}, std::size_t{8}, t}) {
                OpCounter ops;
                const auto got = ssd_blocked(in, q, h0, &ops);
                const double err = std::max(max_rel_err(got.y, ref.y), max_rel_err(got.h_final, ref.h_final));
                ctx.add("blocked/T" + num(t) + "/Q" + num(q) + "/r" + std::to_string(rep), base + ";Q=" + num(q), err, tol, ops);
            }
            if (t >= 2) {
                // split the sequence and chain the final state
                const std::size_t half = t / 2;
                auto slice = [&](std::size_t r0, std::size_t r1) {
                    SSDInputs<T> s = in;
                    auto cut = [&](const BasicTensor<T>& src) {
                        Shape shape = src.shape();
                        shape[0] = r1 - r0;
                        const std::size_t row = src.size() / src.dim(0);
                        return BasicTensor<T>(shape, std::vector<T>(src.data().begin() + r0 * row, src.data().begin() + r1 * row));
                    };
                    s.X = cut(in.X);
                    s.A = cut(in.A);
                    s.B = cut(in.B);
                    s.C = cut(in.C);
                    return s;
                };
                const auto first = ssd_blocked(slice(0, half), 4, h0);
                const auto second = ssd_blocked(slice(half, t), 4, first.h_final);
                ctx.add("chain/T" + num(t) + "/r" + std::to_string(rep), base, max_rel_err(second.h_final, ref.h_final), tol);
            }
        }
    }
}

void suite_ssd_equivalence(Ctx& ctx) {
    if (ctx.f32()) {
        ssd_equivalence_typed<float>(ctx, kF32Tol);
    } else {
        ssd_equivalence_typed<double>(ctx, kSsdTol);
    }
}

void suite_head_patterns(Ctx& ctx) {
    const std::vector<HeadPattern> patterns = {HeadPattern::mhs(), HeadPattern::mcs(), HeadPattern::mes(),
                                               HeadPattern::mis(), HeadPattern::grouped(2)};
    std::uint64_t k = 0;
    for (const auto& pattern : patterns) {
        const auto in = random_ssd_inputs(20, 4, 3, 4, pattern, ctx.seed(k++));
        auto ref = ssd_blocked(expand_heads(in), 8).y;
        ctx.taint(ref);
        OpCounter ops;
        const auto got = ssd_blocked(in, 8, {}, &ops).y;
        Record& r = ctx.add(pattern.name(), kv({{"T", "20"}, {"H", "4"}, {"pattern", pattern.name()}}),
                            max_abs_diff(got, ref), 0.0, ops);
        r.note = "shared views vs materialized copies, bitwise";
    }
}

void suite_rank(Ctx& ctx) {
    std::uint64_t k = 0;
    for (std::size_t n : {1, 2, 4}) {
        for (int rep = 0; rep < 4; ++rep) {
            Rng rng(ctx.seed(k++));
            const std::size_t t = 12;
            const StateForm form = rep % 2 ? StateForm::diagonal : StateForm::dense;
            Tensor a = form == StateForm::diagonal ? rng.uniform_tensor({t, n}, -1.0, 1.0) : rng.normal_tensor({t, n, n}, 0.5);
            const SSSRep rep_{form, std::move(a), rng.normal_tensor({t, n}), rng.normal_tensor({t, n})};
            std::size_t observed = lower_rank_profile(materialize_sss(rep_));
            ctx.taint(observed);
            ctx.add_check("sss/N" + num(n) + "/r" + std::to_string(rep), kv({{"T", num(t)}, {"N", num(n)}}),
                          observed <= n, "observed order " + num(observed) + ", bound " + num(n));
        }
    }
}

SSSRep random_scalar_sss(Rng& rng, std::size_t t, std::size_t n) {
    return {StateForm::scalar, rng.uniform_tensor({t}, 0.0, 1.0), rng.normal_tensor({t, n}), rng.normal_tensor({t, n})};
}

void suite_closure(Ctx& ctx) {
    for (std::uint64_t k = 0; k < 5; ++k) {
        Rng rng(ctx.seed(k));
        const std::size_t t = 8;
        const SSSRep one = random_scalar_sss(rng, t, 1), two = random_scalar_sss(rng, t, 2);
        std::size_t sum = closure_check(ClosureOp::sum, one, &two);
        ctx.taint(sum);
        ctx.add_check("sum/" + std::to_string(k), "T=8;N=1;P=2", sum <= 3, "observed " + num(sum) + ", bound 3");
        const std::size_t prod = closure_check(ClosureOp::product, one, &two);
        ctx.add_check("product/" + std::to_string(k), "T=8;N=1;P=2", prod <= 3, "observed " + num(prod) + ", bound 3");

        const OneSSCoeffs a(unit_draws(rng, t, 0.1));
        const Tensor inv = invert_lower_triangular(materialize_1ss(a));
        ctx.add("inverse-banded/" + std::to_string(k), "T=8", max_outside_band(inv, 1), kTol)
            .note = "max |entry| outside the 2-band";
        const SSSRep unit{StateForm::scalar, Tensor({t}, a.a), Tensor({t, 1}, 1.0), Tensor({t, 1}, 1.0)};
        const std::size_t inv_order = closure_check(ClosureOp::inverse, unit, nullptr);
        ctx.add_check("inverse/" + std::to_string(k), "T=8;N=1", inv_order <= 2,
                      "observed " + num(inv_order) + ", bound 2");
    }
}

void suite_ar(Ctx& ctx) {
    std::uint64_t s = 0;
    for (std::size_t k : {0, 1, 2, 3}) {
        for (int rep = 0; rep < 3; ++rep) {
            Rng rng(ctx.seed(s++));
            const std::size_t t = 10;
            BandedLower band{k, rng.uniform_tensor({t, k}, -0.4, 0.4), {}};
            for (std::size_t i = 0; i < t; ++i) band.mu.push_back(rng.uniform(0.5, 1.5));
            const ArCertificate cert = ar_to_ssm(band);
            std::size_t observed = cert.observed_order;
            ctx.taint(observed);
            ctx.add_check("k" + num(k) + "/r" + std::to_string(rep), kv({{"T", num(t)}, {"k", num(k)}}),
                          observed <= cert.bound, "observed " + num(observed) + ", bound " + num(cert.bound));
        }
    }
}

void suite_cost(Ctx& ctx) {
    struct Cell {
        std::size_t t, q, n, p, h;
    };
    for (const Cell c : {Cell{64, 16, 8, 8, 1}, Cell{128, 16, 8, 8, 1}, Cell{96, 32, 4, 8, 2}, Cell{64, 8, 8, 8, 1}}) {
        const SSDCost cost = ssd_cost(c.t, c.q, c.n, c.p, c.h, ctx.seed(c.t));
        double measured = static_cast<double>(cost.measured.mul_adds);
        ctx.taint(measured);
        const double predicted = static_cast<double>(cost.predicted);
        Record& r = ctx.add("ssd-blocked/T" + num(c.t) + "/Q" + num(c.q),
                            kv({{"T", num(c.t)}, {"Q", num(c.q)}, {"N", num(c.n)}, {"P", num(c.p)}, {"H", num(c.h)}}),
                            std::abs(measured - predicted) / predicted, 0.05, cost.measured);
        r.note = "relative gap between measured and predicted mul_adds";
    }
    const OpCounter seq = scan_work(ScanAlgorithm::sequential(), 1024, ctx.seed(1));
    ctx.add_check("scan-sequential/T1024", "T=1024", seq.mul_adds == 2046,
                  "mul_adds " + std::to_string(seq.mul_adds) + ", expected 2046");
}

template <std::floating_point T>
void parallel_typed(Ctx& ctx, double tol) {
    const char* dt = std::is_same_v<T, float> ? "f32" : "f64";
    BlockConfig cfg;
    cfg.d_model = 16;
    cfg.heads = 4;
    cfg.head_dim = 8;
    cfg.state_dim = 4;
    cfg.groups = 4;
    cfg.norm_groups = 4;
    cfg.chunk = 5;
    for (std::uint64_t k = 0; k < 2; ++k) {
        const auto w = random_block_weights(cfg, ctx.seed(k)).cast<T>();
        Rng rng(ctx.seed(100 + k));
        const BasicTensor<T> u = rng.normal_tensor({24, cfg.d_model}).cast<T>();
        auto ref = mamba2_block_forward(w, u);
        ctx.taint(ref);
        const std::string base = kv({{"T", "24"}, {"d", "16"}, {"H", "4"}, {"G", "4"}, {"dtype", dt}});
        for (std::size_t s : {1, 2, 4}) {
            CommLog log;
            const auto out = tp_forward(w, make_shard_plan(cfg, s), u, &log);
            const double err = max_rel_err(out, ref);
            ctx.add("tp/s" + num(s) + "/r" + std::to_string(k), base + ";s=" + num(s), s == 1 ? (out == ref ? 0.0 : 1.0) : err, tol);
            ctx.add_check("tp-allreduce/s" + num(s) + "/r" + std::to_string(k), base + ";s=" + num(s), log.all_reduces == 1,
                          "all-reduces " + num(log.all_reduces));
        }
        const std::size_t carry = cfg.heads * cfg.state_dim * cfg.head_dim + (cfg.conv_width - 1) * cfg.inner_dim();
        for (std::size_t workers : {1, 2, 4}) {
            CommLog log;
            const auto out = sp_forward(w, workers, u, &log);
            ctx.add("sp/w" + num(workers) + "/r" + std::to_string(k), base + ";workers=" + num(workers),
                    workers == 1 ? (out == ref ? 0.0 : 1.0) : max_rel_err(out, ref), tol);
            ctx.add_check("sp-messages/w" + num(workers) + "/r" + std::to_string(k), base + ";workers=" + num(workers),
                          log.messages == workers - 1 && log.message_floats == (workers - 1) * carry,
                          "messages " + num(log.messages) + ", floats " + num(log.message_floats));
        }
        for (const auto& lengths : std::vector<std::vector<std::size_t>>{{3, 5}, {1, 1, 1}, {7, 2, 9}}) {
            std::vector<BasicTensor<T>> seqs;
            std::string label;
            for (std::size_t len : lengths) {
                seqs.push_back(rng.normal_tensor({len, cfg.d_model}).cast<T>());
                label += (label.empty() ? "" : "+") + num(len);
            }
            const auto outs = varlen_forward(w, seqs);
            double err = 0.0;
            for (std::size_t i = 0; i < seqs.size(); ++i) err = std::max(err, max_rel_err(outs[i], mamba2_block_forward(w, seqs[i])));
            ctx.add("varlen/" + label + "/r" + std::to_string(k), base + ";lengths=" + label, err, tol);
        }
    }
}

void suite_parallel(Ctx& ctx) {
    if (ctx.f32()) {
        parallel_typed<float>(ctx, kF32Tol);
    } else {
        parallel_typed<double>(ctx, kTol);
    }
}

void suite_normalization(Ctx& ctx) {
    const std::vector<std::pair<std::string, FeatureMap>> maps = {
        {"exp", FeatureMap::of(FeatureMap::Kind::exp)},
        {"elu1p", FeatureMap::of(FeatureMap::Kind::elu1p)},
        {"prf16", FeatureMap::positive_random(16, 3)},
    };
    for (std::uint64_t k = 0; k < 5; ++k) {
        Rng rng(ctx.seed(k));
        const std::size_t t = 16, n = 4;
        const Tensor q = rng.normal_tensor({t, n}, 0.5), kk = rng.normal_tensor({t, n}, 0.5);
        Tensor eye({t, t});
        for (std::size_t i = 0; i < t; ++i) eye(i, i) = 1.0;
        for (const auto& [name, fm] : maps) {
            // with V = I the output rows are the implied attention rows
            OpCounter ops;
            Tensor rows = normalized_attention(q, kk, eye, CausalMask{}, fm, &ops);
            ctx.taint(rows);
            double err = 0.0;
            for (std::size_t i = 0; i < t; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < t; ++j) {
                    s += rows(i, j);
                    if (j > i) err = std::max(err, std::abs(rows(i, j)));
                }
                err = std::max(err, std::abs(s - 1.0));
            }
            ctx.add(name + "/" + std::to_string(k), kv({{"T", num(t)}, {"n", num(n)}, {"map", name}}), err, kTol, ops)
                .note = "max |row sum - 1|";
        }
    }
}

void suite_kernel_approx(Ctx& ctx) {
    const std::size_t seeds = 20, grid[] = {1, 64};
    for (auto kind : {FeatureMap::Kind::positive_random, FeatureMap::Kind::random_fourier}) {
        const std::string name = kind == FeatureMap::Kind::positive_random ? "prf" : "rff";
        std::size_t decreased = 0;
        for (std::uint64_t s = 0; s < seeds; ++s) {
            Rng rng(ctx.seed(s));
            const Tensor q = rng.normal_tensor({8, 4}, 0.3), k = rng.normal_tensor({8, 4}, 0.3);
            FeatureMap fm{kind, 1, ctx.seed(1000 + s)};
            auto errs = kernel_approx_error(fm, grid, q, k);
            ctx.taint(errs[1]);
            if (errs[1] < errs[0]) ++decreased;
        }
        const double fraction = static_cast<double>(decreased) / static_cast<double>(seeds);
        Record& r = ctx.add(name + "/m1-to-m64", kv({{"seeds", num(seeds)}, {"T", "8"}, {"n", "4"}}), 1.0 - fraction, 0.1);
        r.note = "fraction of seeds whose error did not decrease";
    }
}

struct SuiteEntry {
    const char* name;
    std::function<void(Ctx&)> run;
};

const std::vector<SuiteEntry>& registry() {
    static const std::vector<SuiteEntry> suites = {
        {"scan", suite_scan},
        {"ssm", suite_ssm},
        {"duality", suite_duality},
        {"attention-linear", suite_attention_linear},
        {"ssd-equivalence", suite_ssd_equivalence},
        {"head-patterns", suite_head_patterns},
        {"rank", suite_rank},
        {"closure", suite_closure},
        {"ar", suite_ar},
        {"cost", suite_cost},
        {"parallel", suite_parallel},
        {"normalization", suite_normalization},
        {"kernel-approx", suite_kernel_approx},
    };
    return suites;
}

// ---- bench -----------------------------------------------------------------

struct Cell {
    std::size_t t, n, p, q, h, g;
};

std::vector<Cell> expand(const Grid& grid) {
    std::vector<Cell> cells;
    const bool tied = !grid.npq.empty();
    const auto& ns = tied ? grid.npq : grid.n;
    for (std::size_t t : grid.t)
        for (std::size_t n : ns)
            for (std::size_t p : tied ? std::vector<std::size_t>{n} : grid.p)
                for (std::size_t q : tied ? std::vector<std::size_t>{n} : grid.q)
                    for (std::size_t h : grid.h)
                        for (std::size_t g : grid.g) cells.push_back({t, n, p, q, h, g});
    return cells;
}

std::string cell_params(const Cell& c) {
    return kv({{"T", num(c.t)}, {"N", num(c.n)}, {"P", num(c.p)}, {"Q", num(c.q)}, {"H", num(c.h)}, {"G", num(c.g)}});
}

struct Measurement {
    OpCounter ops;
    double err = 0.0;
    std::uint64_t ns = 0;
    std::size_t state_floats = 0;
};

template <std::floating_point T>
Measurement measure_ssd(const std::string& alg, const Cell& c, std::uint64_t seed, const BenchConfig& cfg) {
    const auto in64 = random_ssd_inputs(c.t, c.h, c.p, c.n, c.g > 1 ? HeadPattern::grouped(c.g) : HeadPattern::mhs(), seed);
    const auto oracle = ssd_recurrent(in64).y;
    const SSDInputs<T> in = cast_inputs<T>(in64);
    Measurement m;
    m.ns = ~std::uint64_t{0};
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        OpCounter ops;
        Stopwatch sw(cfg.timing);
        BasicTensor<T> y;
        if (alg == "ssd-recurrent") {
            auto run = ssd_recurrent(in, {}, &ops);
            m.state_floats = run.state_floats;
            y = std::move(run.y);
        } else if (alg == "ssd-quadratic") {
            y = ssd_quadratic(in, &ops);
            // the quadratic form keeps every key and value row
            m.state_floats = c.t * c.h * (c.n + c.p);
        } else {
            auto run = ssd_blocked(in, c.q, {}, &ops);
            m.state_floats = run.state_floats;
            y = std::move(run.y);
        }
        m.ns = std::min(m.ns, sw.ns());
        m.ops = ops;
        m.err = max_rel_err(y.template cast<double>(), oracle);
    }
    return m;
}

ScanAlgorithm scan_algorithm(const std::string& alg) {
    if (alg == "scan-sequential") return ScanAlgorithm::sequential();
    if (alg == "scan-associative") return ScanAlgorithm::associative();
    if (alg == "scan-dilated") return ScanAlgorithm::dilated();
    if (alg == "scan-state-passing") return ScanAlgorithm::state_passing(16, ScanAlgorithm::sequential());
    return ScanAlgorithm::block_decomposition();
}

Measurement measure_scan(const std::string& alg, const Cell& c, std::uint64_t seed, const BenchConfig& cfg) {
    Rng rng(seed);
    const auto a = unit_draws(rng, c.t);
    const Tensor b = rng.normal_tensor({c.t});
    const auto oracle = cumprodsum<double>(a, b, ScanAlgorithm::sequential()).h;
    Measurement m;
    m.ns = ~std::uint64_t{0};
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        OpCounter ops;
        Stopwatch sw(cfg.timing);
        const auto got = cumprodsum<double>(a, b, scan_algorithm(alg), {}, &ops);
        m.ns = std::min(m.ns, sw.ns());
        m.ops = ops;
        m.err = max_rel_err(got.h, oracle);
    }
    m.state_floats = 1;
    return m;
}

Measurement measure(const std::string& alg, const Cell& c, std::uint64_t seed, const BenchConfig& cfg) {
    if (alg.rfind("scan-", 0) == 0) return measure_scan(alg, c, seed, cfg);
    return cfg.dtype == Dtype::f32 ? measure_ssd<float>(alg, c, seed, cfg) : measure_ssd<double>(alg, c, seed, cfg);
}

std::optional<double> expected_t_exponent(const std::string& alg) {
    if (alg == "ssd-quadratic") return 2.0;
    if (alg == "scan-dilated" || alg == "scan-block") return std::nullopt;  // T log T
    return 1.0;
}

std::optional<double> expected_n_exponent(const std::string& alg, bool tied) {
    if (!tied || alg.rfind("scan-", 0) == 0) return std::nullopt;
    return alg == "ssd-quadratic" ? 1.0 : 2.0;
}

Fit make_fit(std::string name, std::string axis, std::vector<std::pair<double, double>> points,
             std::optional<double> expected) {
    Fit f;
    f.name = std::move(name);
    f.axis = std::move(axis);
    f.points = std::move(points);
    f.exponent = fit_exponent(f.points);
    f.expected = expected;
    f.pass = !expected || std::abs(f.exponent - *expected) <= f.tolerance;
    return f;
}

void add_fits(Report& report, const std::vector<std::string>& algs, const std::vector<Cell>& cells,
              const std::vector<std::vector<Measurement>>& results, bool tied) {
    for (std::size_t ai = 0; ai < algs.size(); ++ai) {
        const std::string& alg = algs[ai];
        // T axis: group by everything except T
        std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>, std::vector<std::pair<double, double>>> by_t;
        std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::pair<double, double>>> by_n;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const Cell& c = cells[ci];
            const double y = static_cast<double>(results[ai][ci].ops.mul_adds);
            by_t[{c.n, c.p, c.q, c.h, c.g}].emplace_back(static_cast<double>(c.t), y);
            if (tied) {
                by_n[{c.t, c.h, c.g}].emplace_back(static_cast<double>(c.n), y);
            }
        }
        for (auto& [key, pts] : by_t) {
            if (pts.size() < 4) continue;
            const auto& [n, p, q, h, g] = key;
            report.fits.push_back(make_fit(alg + ";" + kv({{"N", num(n)}, {"P", num(p)}, {"Q", num(q)}, {"H", num(h)}, {"G", num(g)}}),
                                           "T", pts, expected_t_exponent(alg)));
        }
        if (alg.rfind("scan-", 0) == 0) continue;
        for (auto& [key, pts] : by_n) {
            if (pts.size() < 4) continue;
            const auto& [t, h, g] = key;
            report.fits.push_back(make_fit(alg + ";" + kv({{"T", num(t)}, {"H", num(h)}, {"G", num(g)}}), "NPQ", pts,
                                           expected_n_exponent(alg, tied)));
        }
    }
}

}  // namespace

Grid parse_grid(const std::string& text) {
    Grid grid;
    std::set<std::string> seen;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("grid entry '" + item + "' lacks '='");
        const std::string key = item.substr(0, eq);
        auto values = parse_values(key, item.substr(eq + 1));
        if (!seen.insert(key).second) throw std::invalid_argument("grid axis " + key + " given twice");
        if (key == "T") grid.t = std::move(values);
        else if (key == "N") grid.n = std::move(values);
        else if (key == "P") grid.p = std::move(values);
        else if (key == "Q") grid.q = std::move(values);
        else if (key == "H") grid.h = std::move(values);
        else if (key == "G") grid.g = std::move(values);
        else if (key == "NPQ") grid.npq = std::move(values);
        else throw std::invalid_argument("unknown grid axis '" + key + "'");
    }
    return grid;
}

void BenchConfig::validate() const {
    if (grid.t.empty()) throw std::invalid_argument("the T grid is empty");
    if (grid.npq.empty() && (grid.n.empty() || grid.p.empty() || grid.q.empty()))
        throw std::invalid_argument("the N, P and Q grids must be nonempty");
    if (grid.h.empty() || grid.g.empty()) throw std::invalid_argument("the H and G grids must be nonempty");
    for (const auto* axis : {&grid.t, &grid.n, &grid.p, &grid.q, &grid.h, &grid.g, &grid.npq})
        for (std::size_t v : *axis)
            if (v == 0) throw std::invalid_argument("grid sizes must be >= 1");
    for (std::size_t h : grid.h)
        for (std::size_t g : grid.g)
            if (h % g != 0) throw std::invalid_argument("G=" + num(g) + " does not divide H=" + num(h));
    if (repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
    const auto known_suites = suite_names();
    for (const auto& s : suites)
        if (std::find(known_suites.begin(), known_suites.end(), s) == known_suites.end())
            throw std::invalid_argument("unknown suite '" + s + "'");
    const auto known_algs = algorithm_names();
    for (const auto& a : algorithms)
        if (std::find(known_algs.begin(), known_algs.end(), a) == known_algs.end())
            throw std::invalid_argument("unknown algorithm '" + a + "'");
}

bool Report::all_pass() const { return failures() == 0; }

std::size_t Report::failures() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.pass ? 0 : 1;
    for (const auto& f : fits) n += f.pass ? 0 : 1;
    for (const auto& row : table) n += row.pass ? 0 : 1;
    return n;
}

std::vector<std::string> suite_names() {
    std::vector<std::string> names;
    for (const auto& s : registry()) names.emplace_back(s.name);
    return names;
}

std::vector<std::string> algorithm_names() {
    return {"ssd-blocked",     "ssd-quadratic",      "ssd-recurrent", "scan-sequential",
            "scan-associative", "scan-dilated", "scan-state-passing", "scan-block"};
}

std::vector<std::string> default_algorithms() {
    return {"ssd-blocked", "ssd-quadratic", "ssd-recurrent", "scan-sequential"};
}

double fit_exponent(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("an exponent fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += std::log(x);
        my += std::log(y);
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : points) {
        sxy += (std::log(x) - mx) * (std::log(y) - my);
        sxx += (std::log(x) - mx) * (std::log(x) - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("an exponent fit needs distinct x values");
    return sxy / sxx;
}

Report cmd_verify(const BenchConfig& config) {
    config.validate();
    Report report;
    report.command = "verify";
    report.seed = config.seed;
    report.dtype = config.dtype == Dtype::f32 ? "f32" : "f64";
    for (const auto& entry : registry()) {
        if (!config.suites.empty() &&
            std::find(config.suites.begin(), config.suites.end(), entry.name) == config.suites.end())
            continue;
        Ctx ctx(config, entry.name);
        entry.run(ctx);
        report.suites.emplace_back(entry.name);
        for (auto& r : ctx.records) report.records.push_back(std::move(r));
    }
    return report;
}

Report cmd_bench(const BenchConfig& config) {
    config.validate();
    Report report;
    report.command = "bench";
    report.seed = config.seed;
    report.dtype = config.dtype == Dtype::f32 ? "f32" : "f64";
    const auto algs = config.algorithms.empty() ? default_algorithms() : config.algorithms;
    const auto cells = expand(config.grid);
    const double tol = config.dtype == Dtype::f32 ? 1e-3 : kSsdTol;
    std::vector<std::vector<Measurement>> results(algs.size());
    for (std::size_t ai = 0; ai < algs.size(); ++ai) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const Cell& c = cells[ci];
            const Measurement m = measure(algs[ai], c, config.seed * 7919u + ci, config);
            results[ai].push_back(m);
            Record r;
            r.case_id = algs[ai] + "/" + cell_params(c);
            r.suite = algs[ai];
            r.params = cell_params(c);
            r.max_rel_err = m.err;
            r.mul_adds = m.ops.mul_adds;
            r.elementwise = m.ops.elementwise;
            r.wall_ns = m.ns;
            r.pass = m.err <= tol;
            r.note = "state_floats=" + num(m.state_floats);
            report.records.push_back(std::move(r));
        }
    }
    add_fits(report, algs, cells, results, !config.grid.npq.empty());
    return report;
}

Report cmd_table(const BenchConfig& config) {
    BenchConfig t_cfg = config;
    t_cfg.algorithms = {"ssd-quadratic", "ssd-recurrent", "ssd-blocked"};
    t_cfg.grid = Grid{};
    t_cfg.grid.t = {64, 128, 256, 512};
    t_cfg.grid.npq = {16};
    BenchConfig n_cfg = t_cfg;
    n_cfg.grid.t = {256};
    n_cfg.grid.npq = {8, 16, 32, 64};
    const Report by_t = cmd_bench(t_cfg);
    const Report by_n = cmd_bench(n_cfg);

    Report report;
    report.command = "table";
    report.seed = config.seed;
    report.dtype = by_t.dtype;
    report.records = by_t.records;
    report.records.insert(report.records.end(), by_n.records.begin(), by_n.records.end());
    report.fits = by_t.fits;
    report.fits.insert(report.fits.end(), by_n.fits.begin(), by_n.fits.end());

    // state floats live in the record note; fit them against T as well
    auto state_fit = [&](const std::string& alg) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : by_t.records) {
            if (r.suite != alg) continue;
            const std::size_t t = std::stoul(r.params.substr(2, r.params.find(';') - 2));
            const double floats = std::stod(r.note.substr(r.note.find('=') + 1));
            pts.emplace_back(static_cast<double>(t), floats);
        }
        return pts;
    };
    auto exponent = [](const std::vector<Fit>& fits, const std::string& alg) {
        for (const auto& f : fits)
            if (f.name.rfind(alg + ";", 0) == 0) return f.exponent;
        return std::nan("");
    };
    struct Spec {
        const char* model;
        const char* alg;
        const char* state;
        const char* flops;
        double et, en, es;
    };
    for (const Spec s : {Spec{"Attention", "ssd-quadratic", "T", "T^2 N", 2.0, 1.0, 1.0},
                         Spec{"SSM-linear", "ssd-recurrent", "N", "T N^2", 1.0, 2.0, 0.0},
                         Spec{"SSD", "ssd-blocked", "N", "T N^2", 1.0, 2.0, 0.0}}) {
        TableRow row;
        row.model = s.model;
        row.state_size = s.state;
        row.training_flops = s.flops;
        row.t_exponent = exponent(by_t.fits, s.alg);
        row.n_exponent = exponent(by_n.fits, s.alg);
        const auto pts = state_fit(s.alg);
        row.state_t_exponent = fit_exponent(pts);
        row.expected_t = s.et;
        row.expected_n = s.en;
        row.expected_state_t = s.es;
        row.pass = std::abs(row.t_exponent - s.et) <= 0.15 && std::abs(row.n_exponent - s.en) <= 0.15 &&
                   std::abs(row.state_t_exponent - s.es) <= 0.15;
        report.table.push_back(row);
    }
    return report;
}

std::string to_json(const Report& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["tool"] = "ssd_bench";
    j["command"] = report.command;
    j["seed"] = report.seed;
    j["dtype"] = report.dtype;
    j["suites"] = report.suites;
    ordered_json records = ordered_json::array();
    for (const auto& r : report.records) {
        ordered_json o;
        o["case"] = r.case_id;
        o["suite"] = r.suite;
        o["params"] = r.params;
        o["max_rel_err"] = r.max_rel_err;
        o["mul_adds"] = r.mul_adds;
        o["elementwise"] = r.elementwise;
        o["wall_ns"] = r.wall_ns;
        o["status"] = r.pass ? "pass" : "fail";
        if (!r.note.empty()) o["note"] = r.note;
        records.push_back(std::move(o));
    }
    j["records"] = std::move(records);
    ordered_json fits = ordered_json::array();
    for (const auto& f : report.fits) {
        ordered_json o;
        o["name"] = f.name;
        o["axis"] = f.axis;
        ordered_json pts = ordered_json::array();
        for (const auto& [x, y] : f.points) pts.push_back({x, y});
        o["points"] = std::move(pts);
        o["exponent"] = f.exponent;
        o["expected"] = f.expected ? ordered_json(*f.expected) : ordered_json(nullptr);
        o["tolerance"] = f.tolerance;
        o["status"] = !f.expected ? "info" : (f.pass ? "pass" : "fail");
        fits.push_back(std::move(o));
    }
    j["fits"] = std::move(fits);
    if (!report.table.empty()) {
        ordered_json rows = ordered_json::array();
        for (const auto& r : report.table) {
            ordered_json o;
            o["model"] = r.model;
            o["state_size"] = r.state_size;
            o["training_flops"] = r.training_flops;
            o["t_exponent"] = r.t_exponent;
            o["expected_t"] = r.expected_t;
            o["n_exponent"] = r.n_exponent;
            o["expected_n"] = r.expected_n;
            o["state_t_exponent"] = r.state_t_exponent;
            o["expected_state_t"] = r.expected_state_t;
            o["status"] = r.pass ? "pass" : "fail";
            rows.push_back(std::move(o));
        }
        j["table"] = std::move(rows);
    }
    ordered_json summary;
    summary["cases"] = report.records.size();
    summary["failures"] = report.failures();
    summary["status"] = report.all_pass() ? "pass" : "fail";
    j["summary"] = std::move(summary);
    return j.dump(2) + "\n";
}

std::string to_csv(const Report& report) {
    std::string out = "case,params,max_rel_err,mul_adds,wall_ns,status\n";
    for (const auto& r : report.records) {
        out += r.case_id + "," + r.params + "," + fmt(r.max_rel_err, "%.6e") + "," + std::to_string(r.mul_adds) + "," +
               std::to_string(r.wall_ns) + "," + (r.pass ? "pass" : "fail") + "\n";
    }
    return out;
}

std::string table_csv(const Report& report) {
    std::string out =
        "model,state_size,training_flops,t_exponent,expected_t,n_exponent,expected_n,state_t_exponent,expected_state_t,"
        "status\n";
    for (const auto& r : report.table) {
        out += r.model + "," + r.state_size + "," + r.training_flops + "," + fmt(r.t_exponent, "%.4f") + "," +
               fmt(r.expected_t, "%.1f") + "," + fmt(r.n_exponent, "%.4f") + "," + fmt(r.expected_n, "%.1f") + "," +
               fmt(r.state_t_exponent, "%.4f") + "," + fmt(r.expected_state_t, "%.1f") + "," +
               (r.pass ? "pass" : "fail") + "\n";
    }
    return out;
}

std::string table_text(const Report& report) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof line, "%-11s %-10s %-15s %-14s %-14s %-14s %s\n", "model", "state", "train flops",
                  "T exp (fit)", "N exp (fit)", "state T exp", "status");
    out += line;
    for (const auto& r : report.table) {
        std::snprintf(line, sizeof line, "%-11s %-10s %-15s %5.2f (%3.1f)    %5.2f (%3.1f)    %5.2f (%3.1f)    %s\n",
                      r.model.c_str(), r.state_size.c_str(), r.training_flops.c_str(), r.t_exponent, r.expected_t,
                      r.n_exponent, r.expected_n, r.state_t_exponent, r.expected_state_t, r.pass ? "pass" : "fail");
        out += line;
    }
    return out;
}

std::string summary_text(const Report& report) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_suite;
    std::vector<std::string> order;
    for (const auto& r : report.records) {
        if (!per_suite.count(r.suite)) order.push_back(r.suite);
        auto& [total, failed] = per_suite[r.suite];
        ++total;
        failed += r.pass ? 0 : 1;
    }
    std::string out;
    for (const auto& s : order) {
        const auto& [total, failed] = per_suite[s];
        out += (failed ? "FAIL " : "ok   ") + s + ": " + num(total - failed) + "/" + num(total) + " cases\n";
    }
    for (const auto& r : report.records)
        if (!r.pass)
            out += "  failed " + r.case_id + " (" + r.params + ") max_rel_err=" + fmt(r.max_rel_err, "%.3e") +
                   (r.note.empty() ? "" : " " + r.note) + "\n";
    for (const auto& f : report.fits) {
        out += std::string(!f.expected ? "info " : (f.pass ? "ok   " : "FAIL ")) + "fit " + f.name + " over " + f.axis +
               ": exponent " + fmt(f.exponent, "%.3f");
        if (f.expected) out += " (expected " + fmt(*f.expected, "%.1f") + " +- " + fmt(f.tolerance, "%.2f") + ")";
        out += "\n";
    }
    out += report.all_pass() ? "all checks passed\n" : num(report.failures()) + " check(s) failed\n";
    return out;
}

}  // namespace ssd::bench
