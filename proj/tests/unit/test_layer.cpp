#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ssd/layer.hpp"
#include "ssd/sma.hpp"
#include "ssd/ssm.hpp"

using namespace ssd;

namespace {

// (T, K, D) -> (T, D) view of head k.
Tensor head(const Tensor& x, std::size_t k) {
    Tensor out({x.dim(0), x.dim(2)});
    for (std::size_t t = 0; t < x.dim(0); ++t)
        for (std::size_t d = 0; d < x.dim(2); ++d) out(t, d) = x(t, k, d);
    return out;
}

std::vector<double> column(const Tensor& a, std::size_t h) {
    std::vector<double> c(a.dim(0));
    for (std::size_t t = 0; t < a.dim(0); ++t) c[t] = a(t, h);
    return c;
}

Tensor rows(const Tensor& m, std::size_t lo, std::size_t hi) {
    Shape s = m.shape();
    s[0] = hi - lo;
    const std::size_t row = m.size() / m.dim(0);
    return Tensor(s, std::vector<double>(m.data().begin() + lo * row, m.data().begin() + hi * row));
}

SSDInputs<double> slice_time(const SSDInputs<double>& in, std::size_t lo, std::size_t hi) {
    return {rows(in.X, lo, hi), rows(in.A, lo, hi), rows(in.B, lo, hi), rows(in.C, lo, hi), in.pattern};
}

}  // namespace

TEST_CASE("ssd: single head with one channel is the scalar SSM") {
    const auto in = random_ssd_inputs(15, 1, 1, 4, HeadPattern::mhs(), 1);
    SelectiveSSMParams p;
    p.A = Tensor({15}, column(in.A, 0));
    p.B = head(in.B, 0);
    p.C = head(in.C, 0);
    const auto expect = ssm_recurrent(p, head(in.X, 0));
    CHECK(max_rel_err(head(ssd_recurrent(in).y, 0), expect.y) < 1e-14);
}

TEST_CASE("ssd: constant parameters reduce to cumulative sums") {
    const std::size_t t = 10, n = 4, pdim = 2;
    Rng rng(2);
    SSDInputs<double> in;
    in.X = rng.normal_tensor({t, 1, pdim});
    in.A = Tensor({t, 1}, std::vector<double>(t, 1.0));
    in.B = Tensor({t, 1, n}, std::vector<double>(t * n, 1.0 / std::sqrt(double(n))));
    in.C = in.B;
    Tensor expect({t, 1, pdim});
    for (std::size_t c = 0; c < pdim; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < t; ++i) expect(i, 0, c) = s += in.X(i, 0, c);
    }
    CHECK(max_rel_err(ssd_recurrent(in).y, expect) < 1e-14);
    CHECK(max_rel_err(ssd_quadratic(in), expect) < 1e-14);
    CHECK(max_rel_err(ssd_blocked(in, 3).y, expect) < 1e-14);
}

TEST_CASE("ssd: recurrent and quadratic forms agree on a small instance") {
    const auto in = random_ssd_inputs(12, 2, 3, 4, HeadPattern::mhs(), 3);
    CHECK(max_rel_err(ssd_quadratic(in), ssd_recurrent(in).y) < 1e-12);
}

TEST_CASE("ssd: length one and zero decay are memoryless") {
    for (std::size_t t : {1, 6}) {
        auto in = random_ssd_inputs(t, 2, 3, 4, HeadPattern::mhs(), 4);
        for (double& a : in.A.data()) a = 0.0;
        Tensor expect({t, 2, 3});
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t h = 0; h < 2; ++h) {
                double cb = 0.0;
                for (std::size_t k = 0; k < 4; ++k) cb += in.C(i, h, k) * in.B(i, h, k);
                for (std::size_t c = 0; c < 3; ++c) expect(i, h, c) = cb * in.X(i, h, c);
            }
        CHECK(max_rel_err(ssd_quadratic(in), expect) < 1e-14);
        CHECK(max_rel_err(ssd_blocked(in, 4).y, expect) < 1e-14);
    }
}

TEST_CASE("ssd: quadratic form per head is 1-SS masked attention") {
    const auto in = random_ssd_inputs(9, 3, 2, 5, HeadPattern::mhs(), 5);
    const Tensor y = ssd_quadratic(in);
    for (std::size_t h = 0; h < 3; ++h) {
        const Tensor expect = attention_quadratic(head(in.C, h), head(in.B, h), head(in.X, h),
                                                  OneSSMask{OneSSCoeffs(column(in.A, h))});
        CHECK(max_rel_err(head(y, h), expect) < 1e-12);
    }
}

TEST_CASE("ssd: blocked with one chunk or unit chunks") {
    const auto in = random_ssd_inputs(20, 2, 3, 4, HeadPattern::mhs(), 6);
    const auto rec = ssd_recurrent(in);
    const auto whole = ssd_blocked(in, 20);
    CHECK(max_rel_err(whole.y, ssd_quadratic(in)) < 1e-12);
    const auto unit = ssd_blocked(in, 1);
    CHECK(max_rel_err(unit.y, rec.y) < 1e-12);
    CHECK(max_rel_err(unit.h_final, rec.h_final) < 1e-12);
    CHECK_THROWS_AS(ssd_blocked(in, 0), std::invalid_argument);
}

TEST_CASE("ssd: blocked matches the recurrence at T=64, Q=16, N=P=8, H=2") {
    const auto in = random_ssd_inputs(64, 2, 8, 8, HeadPattern::mhs(), 7);
    const auto rec = ssd_recurrent(in);
    const auto blk = ssd_blocked(in, 16);
    CHECK(max_rel_err(blk.y, rec.y) < 1e-10);
    CHECK(max_rel_err(blk.h_final, rec.h_final) < 1e-10);
}

TEST_CASE("ssd: three forms agree across chunk sizes") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const std::size_t t = 1 + rng.index(128), h = 1 + rng.index(3);
        const auto in = random_ssd_inputs(t, h, 1 + rng.index(4), 1 + rng.index(4), HeadPattern::mhs(), seed);
        const auto rec = ssd_recurrent(in);
        CHECK(max_rel_err(ssd_quadratic(in), rec.y) < 1e-10);
        for (std::size_t q : {std::size_t{1}, std::size_t{2}, std::size_t{4}, std::size_t{8}, t}) {
            CAPTURE(seed);
            CAPTURE(q);
            const auto blk = ssd_blocked(in, q);
            CHECK(max_rel_err(blk.y, rec.y) < 1e-10);
            CHECK(max_rel_err(blk.h_final, rec.h_final) < 1e-10);
        }
    }
}

TEST_CASE("ssd: a chunk size that does not divide T") {
    const auto in = random_ssd_inputs(50, 2, 3, 4, HeadPattern::grouped(2), 8);
    const auto rec = ssd_recurrent(in);
    for (std::size_t q : {3, 7, 16, 49, 64}) CHECK(max_rel_err(ssd_blocked(in, q).y, rec.y) < 1e-10);
}

TEST_CASE("ssd: final state chains across a split") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto in = random_ssd_inputs(40, 2, 3, 4, HeadPattern::mhs(), 100 + seed);
        const auto full = ssd_blocked(in, 8);
        const auto first = ssd_blocked(slice_time(in, 0, 20), 8);
        const auto second = ssd_blocked(slice_time(in, 20, 40), 8, first.h_final);
        CHECK(max_rel_err(second.y, rows(full.y, 20, 40)) < 1e-10);
        CHECK(max_rel_err(second.h_final, full.h_final) < 1e-10);
        const auto rec2 = ssd_recurrent(slice_time(in, 20, 40), first.h_final);
        CHECK(max_rel_err(rec2.y, second.y) < 1e-10);
    }
    const auto in = random_ssd_inputs(4, 2, 3, 4, HeadPattern::mhs(), 0);
    CHECK_THROWS_AS(ssd_blocked(in, 2, Tensor({2, 3, 4})), DimensionError);
}

TEST_CASE("ssd: tiny decays take the log-space path without losing the state") {
    auto in = random_ssd_inputs(32, 1, 2, 3, HeadPattern::mhs(), 9);
    for (std::size_t t = 0; t < 32; t += 3) in.A(t, 0) = 1e-14;
    const auto rec = ssd_recurrent(in);
    CHECK(max_rel_err(ssd_blocked(in, 8).y, rec.y) < 1e-10);
}

TEST_CASE("head patterns: shared counts and names") {
    CHECK(HeadPattern::mhs().x_heads(4) == 4);
    CHECK(HeadPattern::mcs().x_heads(4) == 1);
    CHECK(HeadPattern::mcs().b_heads(4) == 1);
    CHECK(HeadPattern::mcs().c_heads(4) == 4);
    CHECK(HeadPattern::mes().b_heads(4) == 4);
    CHECK(HeadPattern::mes().c_heads(4) == 1);
    CHECK(HeadPattern::mis().x_heads(4) == 4);
    CHECK(HeadPattern::mis().b_heads(4) == 1);
    CHECK(HeadPattern::grouped(2).b_heads(4) == 2);
    CHECK(HeadPattern::grouped(2).name() == "grouped(2)");
}

TEST_CASE("head patterns: grouped mapping sends heads 0,1 to group 0 and 2,3 to group 1") {
    const auto in = random_ssd_inputs(5, 4, 2, 3, HeadPattern::grouped(2), 10);
    const auto ex = expand_heads(in);
    for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t t = 0; t < 5; ++t)
            for (std::size_t n = 0; n < 3; ++n) {
                CHECK(ex.B(t, h, n) == in.B(t, h / 2, n));
                CHECK(ex.C(t, h, n) == in.C(t, h / 2, n));
            }
    const auto mhs = random_ssd_inputs(5, 4, 2, 3, HeadPattern::mhs(), 10);
    const auto same = expand_heads(mhs);
    CHECK(same.X == mhs.X);
    CHECK(same.B == mhs.B);
}

TEST_CASE("head patterns: broadcast views equal materialized copies bitwise") {
    for (auto pattern : {HeadPattern::mhs(), HeadPattern::mcs(), HeadPattern::mes(), HeadPattern::mis(),
                         HeadPattern::grouped(1), HeadPattern::grouped(2), HeadPattern::grouped(4)}) {
        CAPTURE(pattern.name());
        const auto in = random_ssd_inputs(24, 4, 3, 5, pattern, 11);
        const auto ex = expand_heads(in);
        CHECK(ssd_recurrent(in).y == ssd_recurrent(ex).y);
        CHECK(ssd_quadratic(in) == ssd_quadratic(ex));
        const auto a = ssd_blocked(in, 8), b = ssd_blocked(ex, 8);
        CHECK(a.y == b.y);
        CHECK(a.h_final == b.h_final);
    }
}

TEST_CASE("head patterns: MIS equals independent runs with copied B and C") {
    const auto in = random_ssd_inputs(10, 4, 2, 3, HeadPattern::mis(), 12);
    const auto y = ssd_recurrent(in).y;
    for (std::size_t h = 0; h < 4; ++h) {
        SelectiveSSMParams p;
        p.A = Tensor({10}, column(in.A, h));
        p.B = head(in.B, 0);
        p.C = head(in.C, 0);
        CHECK(max_rel_err(head(y, h), ssm_recurrent(p, head(in.X, h)).y) < 1e-14);
    }
}

TEST_CASE("ssd: validation") {
    auto in = random_ssd_inputs(6, 4, 2, 3, HeadPattern::grouped(2), 13);
    in.pattern = HeadPattern::grouped(3);
    CHECK_THROWS_AS(ssd_recurrent(in), DimensionError);
    in = random_ssd_inputs(6, 4, 2, 3, HeadPattern::mhs(), 13);
    in.pattern = HeadPattern::mis();
    CHECK_THROWS_AS(in.validate(), DimensionError);
    in = random_ssd_inputs(6, 2, 2, 3, HeadPattern::mhs(), 13);
    in.A(2, 1) = 1.5;
    CHECK_THROWS_AS(ssd_blocked(in, 2), std::invalid_argument);
    in.A(2, 1) = -0.1;
    CHECK_THROWS_AS(ssd_quadratic(in), std::invalid_argument);
    in = random_ssd_inputs(6, 2, 2, 3, HeadPattern::mhs(), 13);
    in.C = Tensor({6, 2, 4});
    CHECK_THROWS_AS(in.validate(), DimensionError);
}

TEST_CASE("ssd: state size is H*N*P") {
    const auto in = random_ssd_inputs(16, 3, 5, 7, HeadPattern::mhs(), 14);
    CHECK(ssd_recurrent(in).state_floats == 3 * 5 * 7);
    CHECK(ssd_blocked(in, 4).state_floats == 3 * 5 * 7);
}

TEST_CASE("cost: predicted equals measured when Q divides T") {
    for (auto [t, q, n, p, h] : std::vector<std::array<std::size_t, 5>>{
             {64, 16, 8, 8, 1}, {128, 32, 4, 16, 2}, {96, 8, 8, 4, 3}, {16, 16, 2, 2, 1}}) {
        const auto cost = ssd_cost(t, q, n, p, h);
        CHECK(cost.measured.mul_adds == cost.predicted);
        CHECK(cost.predicted == cost.diagonal + cost.right + cost.center + cost.left);
    }
    CHECK_THROWS_AS(ssd_cost(0, 4, 2, 2, 1), std::invalid_argument);
}

TEST_CASE("cost: tied N=P=Q collapses to a multiple of T N^2") {
    for (std::size_t n : {8, 16, 32}) {
        const auto cost = ssd_cost(256, n, n, n, 1);
        // nc = T/N: diag 2 T N^2 + T N, right T N^2, left T N^2, center 2 (T/N - 1) N^2
        const std::uint64_t t = 256, nc = t / n;
        CHECK(cost.predicted == 4 * t * n * n + t * n + 2 * (nc - 1) * n * n);
    }
}

TEST_CASE("cost: doubling T doubles the blocked count, quadruples the quadratic count") {
    const auto c1 = ssd_cost(256, 16, 8, 8, 1), c2 = ssd_cost(512, 16, 8, 8, 1);
    CHECK(double(c2.measured.mul_adds) / double(c1.measured.mul_adds) == doctest::Approx(2.0).epsilon(0.05));
    OpCounter q1, q2;
    ssd_quadratic(random_ssd_inputs(128, 1, 8, 8, HeadPattern::mhs(), 0), &q1);
    ssd_quadratic(random_ssd_inputs(256, 1, 8, 8, HeadPattern::mhs(), 0), &q2);
    CHECK(double(q2.mul_adds) / double(q1.mul_adds) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("ssd: float instantiation tracks double") {
    const auto in = random_ssd_inputs(40, 2, 4, 4, HeadPattern::grouped(1), 15);
    SSDInputs<float> f{in.X.cast<float>(), in.A.cast<float>(), in.B.cast<float>(), in.C.cast<float>(), in.pattern};
    const auto yf = ssd_blocked(f, 8).y.cast<double>();
    CHECK(max_rel_err(yf, ssd_recurrent(in).y) < 1e-5);
}
