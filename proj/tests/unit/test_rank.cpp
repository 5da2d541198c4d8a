#include <doctest.h>

#include "helpers.hpp"
#include "ssd/rank.hpp"
#include "ssd/semiseparable.hpp"

using namespace ssd;

TEST_CASE("rank: identity and outer products") {
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    CHECK(numerical_rank(eye, 1e-8) == 3);

    Rng rng(1);
    Tensor outer({4, 4});
    const auto u = testing::unit_draws(rng, 4, 0.5, 2.0), v = testing::unit_draws(rng, 4, 0.5, 2.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) outer(i, j) = u[i] * v[j];
    CHECK(numerical_rank(outer, 1e-8) == 1);
}

TEST_CASE("rank: lower block of an order-2 semiseparable matrix") {
    Rng rng(2);
    const std::size_t t = 8;
    const SSSRep rep{StateForm::diagonal, rng.uniform_tensor({t, 2}, 0.2, 1.0), rng.normal_tensor({t, 2}),
                     rng.normal_tensor({t, 2})};
    const Tensor m = materialize_sss(rep);
    Tensor block({4, 4});
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) block(i, j) = m(4 + i, j);
    CHECK(numerical_rank(block, 1e-8) == 2);
}

TEST_CASE("rank: empty, zero and invalid tolerances") {
    CHECK(numerical_rank(Tensor({0, 0}), 1e-8) == 0);
    CHECK(numerical_rank(Tensor({3, 2}), 1e-8) == 0);
    CHECK_THROWS_AS(numerical_rank(Tensor({2, 2}, 1.0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(numerical_rank(Tensor({2, 2}, 1.0), 1.0), std::invalid_argument);
}

TEST_CASE("rank: products of random factors have the inner dimension as rank") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const std::size_t r = 1 + seed % 5;
        const Tensor m = testing::naive_matmul(rng.normal_tensor({9, r}), rng.normal_tensor({r, 7}));
        CHECK(numerical_rank(m, 1e-8) == r);
    }
}

TEST_CASE("rank: absolute floor ignores roundoff-sized blocks") {
    Tensor m({2, 2});
    m(0, 0) = 1e-17;
    m(1, 1) = 1e-17;
    CHECK(numerical_rank(m, 1e-8) == 2);
    CHECK(numerical_rank(m, 1e-8, 1e-12) == 0);
}
