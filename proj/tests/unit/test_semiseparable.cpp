#include <doctest.h>

#include "helpers.hpp"
#include "ssd/semiseparable.hpp"

using namespace ssd;

namespace {

Tensor lower_ones(std::size_t t) {
    Tensor m({t, t});
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j <= i; ++j) m(i, j) = 1.0;
    return m;
}

// M[j][i] = prod a_{i+1..j}, written out independently of the library.
Tensor product_oracle(const std::vector<double>& a) {
    const std::size_t t = a.size();
    Tensor m({t, t});
    for (std::size_t j = 0; j < t; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            double p = 1.0;
            for (std::size_t k = i + 1; k <= j; ++k) p *= a[k];
            m(j, i) = p;
        }
    return m;
}

SSSRep random_rep(Rng& rng, std::size_t t, std::size_t n, StateForm form) {
    Tensor a;
    if (form == StateForm::scalar) a = rng.uniform_tensor({t}, 0.0, 1.0);
    if (form == StateForm::diagonal) a = rng.uniform_tensor({t, n}, -1.0, 1.0);
    if (form == StateForm::dense) a = rng.normal_tensor({t, n, n}, 0.6);
    return {form, a, rng.normal_tensor({t, n}), rng.normal_tensor({t, n})};
}

}  // namespace

TEST_CASE("1-SS: unit multipliers give the lower ones matrix") {
    CHECK(materialize_1ss(OneSSCoeffs({0.3, 1, 1})) == lower_ones(3));
}

TEST_CASE("1-SS: products of multipliers") {
    const OneSSCoeffs a({0.0, 2.0, 3.0}, OneSSCoeffs::Regime::arbitrary);
    CHECK(materialize_1ss(a) == Tensor::matrix({{1, 0, 0}, {2, 1, 0}, {6, 3, 1}}));
}

TEST_CASE("1-SS: zero multipliers give the identity") {
    CHECK(materialize_1ss(OneSSCoeffs({0.7, 0, 0})) == Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
}

TEST_CASE("1-SS: matches the product oracle and flags underflow") {
    Rng rng(4);
    const auto a = testing::unit_draws(rng, 12);
    bool under = true;
    CHECK(max_rel_err(materialize_1ss(OneSSCoeffs(a), &under), product_oracle(a)) < 1e-15);
    CHECK_FALSE(under);

    std::vector<double> tiny(40, 1e-20);
    const Tensor m = materialize_1ss(OneSSCoeffs(tiny), &under);
    CHECK(under);
    CHECK(m(39, 0) == 0.0);
    CHECK(m(1, 0) == 1e-20);
}

TEST_CASE("1-SS: regime validation") {
    CHECK_THROWS_AS(OneSSCoeffs({0.5, 1.5}), std::invalid_argument);
    CHECK_NOTHROW(OneSSCoeffs({0.5, 1.5}, OneSSCoeffs::Regime::arbitrary));
    CHECK_THROWS_AS(OneSSCoeffs({0.5, std::nan("")}, OneSSCoeffs::Regime::arbitrary), std::invalid_argument);
}

TEST_CASE("SSS: scalar order-1 examples") {
    const SSSRep ones{StateForm::scalar, Tensor({3}, 1.0), Tensor({3, 1}, 1.0), Tensor({3, 1}, 1.0)};
    CHECK(materialize_sss(ones) == lower_ones(3));

    const SSSRep scaled{StateForm::scalar, Tensor({3}, 1.0), Tensor({3, 1}, std::vector<double>{1, 2, 3}),
                        Tensor({3, 1}, 1.0)};
    CHECK(materialize_sss(scaled) == Tensor::matrix({{1, 0, 0}, {1, 2, 0}, {1, 2, 3}}));
}

TEST_CASE("SSS: identity state gives C_j . B_i with rank profile 2") {
    Rng rng(7);
    const std::size_t t = 6;
    Tensor a({t, 2, 2});
    for (std::size_t s = 0; s < t; ++s) a(s, 0, 0) = a(s, 1, 1) = 1.0;
    const SSSRep rep{StateForm::dense, a, rng.normal_tensor({t, 2}), rng.normal_tensor({t, 2})};
    const Tensor m = materialize_sss(rep);
    for (std::size_t j = 0; j < t; ++j)
        for (std::size_t i = 0; i <= j; ++i)
            CHECK(m(j, i) == doctest::Approx(rep.C(j, 0) * rep.B(i, 0) + rep.C(j, 1) * rep.B(i, 1)));
    CHECK(lower_rank_profile(m) <= 2);
}

TEST_CASE("SSS: scalar order 1 equals diag(c) 1SS(a) diag(b)") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(seed);
        const std::size_t t = 1 + seed % 11;
        const SSSRep rep = random_rep(rng, t, 1, StateForm::scalar);
        const Tensor one = materialize_1ss(OneSSCoeffs(rep.A.storage()));
        const Tensor m = materialize_sss(rep);
        for (std::size_t j = 0; j < t; ++j)
            for (std::size_t i = 0; i < t; ++i)
                CHECK(std::abs(m(j, i) - rep.C(j, 0) * one(j, i) * rep.B(i, 0)) <= 1e-14 * (1.0 + std::abs(m(j, i))));
    }
}

TEST_CASE("SSS: inconsistent orders are rejected") {
    const SSSRep bad{StateForm::diagonal, Tensor({4, 3}), Tensor({4, 2}), Tensor({4, 2})};
    CHECK_THROWS_AS(materialize_sss(bad), DimensionError);
    const SSSRep bad_c{StateForm::scalar, Tensor({4}), Tensor({4, 2}), Tensor({4, 3})};
    CHECK_THROWS_AS(materialize_sss(bad_c), DimensionError);
}

TEST_CASE("SSS: explicit block factorization reproduces off-diagonal blocks") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const std::size_t t = 10, n = 1 + seed % 3;
        const auto form = static_cast<StateForm>(seed % 3);
        const SSSRep rep = random_rep(rng, t, n, form);
        const Tensor m = materialize_sss(rep);
        const std::size_t c0 = rng.index(5), c1 = c0 + 1 + rng.index(5 - c0);
        const std::size_t r0 = c1 - 1 + rng.index(t - c1 + 1), r1 = r0 + 1 + rng.index(t - r0);
        const auto [left, right] = sss_block_factors(rep, r0, r1, c0, c1);
        CHECK(left.shape() == Shape{r1 - r0, n});
        CHECK(right.shape() == Shape{n, c1 - c0});
        Tensor block({r1 - r0, c1 - c0});
        for (std::size_t i = r0; i < r1; ++i)
            for (std::size_t j = c0; j < c1; ++j) block(i - r0, j - c0) = m(i, j);
        CHECK(max_rel_err(testing::naive_matmul(left, right), block) < 1e-12);
    }
}

TEST_CASE("rank profile: 1-SS is order 1") {
    Rng rng(8);
    CHECK(lower_rank_profile(materialize_1ss(OneSSCoeffs(testing::unit_draws(rng, 8, 0.01)))) == 1);
}

TEST_CASE("rank profile: random order-2 SSS is order 2") {
    Rng rng(9);
    CHECK(lower_rank_profile(materialize_sss(random_rep(rng, 8, 2, StateForm::diagonal))) == 2);
}

TEST_CASE("rank profile: strictly lower random dense matrix is above order 1") {
    Rng rng(10);
    Tensor m({6, 6});
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < i; ++j) m(i, j) = rng.normal();
    CHECK(lower_rank_profile(m) > 1);
}

TEST_CASE("rank profile: sampled mode for long sequences") {
    Rng rng(11);
    const Tensor m = materialize_1ss(OneSSCoeffs(testing::unit_draws(rng, 40, 0.5)));
    CHECK(lower_rank_profile(m, 256, 1e-8, 3) == 1);
    CHECK(lower_rank_profile(materialize_sss(random_rep(rng, 32, 3, StateForm::diagonal)), 256) <= 3);
}

TEST_CASE("rank profile: bounded by the order for all state forms") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        Rng rng(1000 + seed);
        const std::size_t n = 1 + seed % 4, t = 4 + seed % 9;
        const SSSRep rep = random_rep(rng, t, n, static_cast<StateForm>(seed % 3));
        CHECK(lower_rank_profile(materialize_sss(rep)) <= n);
    }
}

TEST_CASE("closure: sum and product bounds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const SSSRep a = random_rep(rng, 8, 1, StateForm::scalar), a2 = random_rep(rng, 8, 1, StateForm::scalar);
        const SSSRep b = random_rep(rng, 8, 2, StateForm::diagonal);
        CHECK(closure_check(ClosureOp::sum, a, &a2) <= 2);
        CHECK(closure_check(ClosureOp::product, a, &b) <= 3);
        CHECK(closure_check(ClosureOp::sum, a, &b) <= 3);
    }
    const SSSRep a{StateForm::scalar, Tensor({4}, 0.5), Tensor({4, 1}, 1.0), Tensor({4, 1}, 1.0)};
    CHECK_THROWS_AS(closure_check(ClosureOp::sum, a, nullptr), std::invalid_argument);
}

TEST_CASE("closure: inverse of a 1-SS matrix is 2-banded") {
    const double a1 = 0.3, a2 = 0.8;
    const Tensor inv = invert_lower_triangular(materialize_1ss(OneSSCoeffs({0.5, a1, a2})));
    CHECK(max_abs_diff(inv, Tensor::matrix({{1, 0, 0}, {-a1, 1, 0}, {0, -a2, 1}})) < 1e-15);

    Rng rng(12);
    const OneSSCoeffs coeffs(testing::unit_draws(rng, 12, 0.1));
    CHECK(max_outside_band(invert_lower_triangular(materialize_1ss(coeffs)), 1) < 1e-12);
    const SSSRep rep{StateForm::scalar, Tensor({12}, coeffs.a), Tensor({12, 1}, 1.0), Tensor({12, 1}, 1.0)};
    CHECK(closure_check(ClosureOp::inverse, rep, nullptr) <= 2);
}

TEST_CASE("closure: singular matrices are reported") {
    CHECK_THROWS_AS(invert_lower_triangular(Tensor::matrix({{1, 0}, {1, 0}})), SingularMatrixError);
    const SSSRep rep{StateForm::scalar, Tensor({3}, 1.0), Tensor({3, 1}, std::vector<double>{1, 0, 1}),
                     Tensor({3, 1}, 1.0)};
    CHECK_THROWS_AS(closure_check(ClosureOp::inverse, rep, nullptr), SingularMatrixError);
}

TEST_CASE("AR to SSM: order 1 reduces to the 1-SS matrix") {
    Rng rng(13);
    const std::size_t t = 7;
    const auto a = testing::unit_draws(rng, t);
    BandedLower band{1, Tensor({t, 1}, a), std::vector<double>(t, 1.0)};
    const ArCertificate cert = ar_to_ssm(band);
    CHECK(max_abs_diff(cert.transform, materialize_1ss(OneSSCoeffs(a))) < 1e-14);
    CHECK(cert.observed_order == 1);
    CHECK(cert.holds());
}

TEST_CASE("AR to SSM: order 2 gives at most order 3") {
    Rng rng(14);
    const std::size_t t = 10;
    BandedLower band{2, rng.uniform_tensor({t, 2}, -0.5, 0.5), testing::unit_draws(rng, t, 0.5, 1.5)};
    const ArCertificate cert = ar_to_ssm(band);
    CHECK(cert.bound == 3);
    CHECK(cert.observed_order <= 3);
}

TEST_CASE("AR to SSM: order 0 is diagonal") {
    const std::size_t t = 5;
    BandedLower band{0, Tensor({t, 0}), {1, 2, 3, 4, 5}};
    const ArCertificate cert = ar_to_ssm(band);
    CHECK(max_outside_band(cert.transform, 0) == 0.0);
    CHECK(cert.transform(3, 3) == 4.0);
    CHECK(cert.observed_order <= 1);
}

TEST_CASE("AR to SSM: the transform solves the recurrence") {
    Rng rng(15);
    const std::size_t t = 9, k = 3;
    BandedLower band{k, rng.uniform_tensor({t, k}, -0.4, 0.4), testing::unit_draws(rng, t, 0.5, 1.5)};
    const Tensor x = rng.normal_tensor({t, 1});
    const Tensor y = testing::naive_matmul(ar_to_ssm(band).transform, x);
    for (std::size_t s = 0; s < t; ++s) {
        double expect = band.mu[s] * x(s, 0);
        for (std::size_t i = 1; i <= k && i <= s; ++i) expect += band.coeffs(s, i - 1) * y(s - i, 0);
        CHECK(y(s, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ar_to_ssm(BandedLower{3, Tensor({2, 3}), {1, 1}}), std::invalid_argument);
}
