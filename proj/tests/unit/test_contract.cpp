#include <doctest.h>

#include "helpers.hpp"
#include "ssd/contract.hpp"

using namespace ssd;

TEST_CASE("contract: identity times matrix") {
    const Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
    const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
    CHECK(contract<double>("MN,NK->MK", eye, m) == m);
}

TEST_CASE("contract: Gram product of two single-column inputs") {
    const Tensor q = Tensor::matrix({{1}, {2}});
    const Tensor k = Tensor::matrix({{3}, {4}});
    CHECK(contract<double>("TN,SN->TS", q, k) == Tensor::matrix({{3, 4}, {6, 8}}));
}

TEST_CASE("contract: lower ones mask applied to a column is a cumulative sum") {
    const Tensor l = Tensor::matrix({{1, 0}, {1, 1}});
    const Tensor v = Tensor::matrix({{1}, {2}});
    CHECK(contract<double>("TS,SP->TP", l, v) == Tensor::matrix({{1}, {3}}));
}

TEST_CASE("contract: matmul counts M*N*K mul_adds and matches a triple loop") {
    Rng rng(3);
    const Tensor a = rng.normal_tensor({5, 7}), b = rng.normal_tensor({7, 4});
    OpCounter ops;
    const Tensor c = matmul(a, b, &ops);
    CHECK(ops.mul_adds == 5u * 7u * 4u);
    CHECK(max_rel_err(c, testing::naive_matmul(a, b)) < 1e-14);
}

TEST_CASE("contract: every supported descriptor is accepted in canonical form") {
    CHECK(supported_contractions().size() == 10);
    CHECK(normalize_descriptor(" MN , NK -> MK ") == "MN,NK->MK");
    CHECK(normalize_descriptor("MN,NK→MK") == "MN,NK->MK");
    const Tensor a = Tensor::matrix({{1, 2}});
    const Tensor b = Tensor::matrix({{3}, {4}});
    CHECK(contract<double>("MN,NK→MK", a, b)(0, 0) == 11.0);
}

TEST_CASE("contract: unsupported descriptors and mismatched axes are rejected") {
    const Tensor a({2, 3}), b({4, 2});
    CHECK_THROWS_AS(contract<double>("MN,KN->MK", a, b), UnsupportedContraction);
    try {
        contract<double>("MN,NK->MK", a, b);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("axis N") != std::string::npos);
    }
}

TEST_CASE("contract: outer product and batched forms") {
    Rng rng(5);
    const Tensor x = rng.normal_tensor({4, 3}), b = rng.normal_tensor({4, 2});
    const Tensor z = contract<double>("SP,SN->SPN", x, b);
    CHECK(z.shape() == Shape{4, 3, 2});
    CHECK(z(2, 1, 0) == doctest::Approx(x(2, 1) * b(2, 0)));

    const Tensor c = rng.normal_tensor({4, 2});
    const Tensor y = contract<double>("TN,TPN->TP", c, z);
    CHECK(y(3, 2) == doctest::Approx(c(3, 0) * z(3, 2, 0) + c(3, 1) * z(3, 2, 1)));

    const Tensor q = rng.normal_tensor({3, 2}), h = rng.normal_tensor({2, 5});
    OpCounter ops;
    const Tensor o = contract<double>("QN,NP->QP", q, h, &ops);
    CHECK(ops.mul_adds == 3u * 2u * 5u);
    CHECK(max_rel_err(o, testing::naive_matmul(q, h)) < 1e-14);
}

TEST_CASE("contract: multilinear in the first operand") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const Tensor x = rng.normal_tensor({6, 4}), x2 = rng.normal_tensor({6, 4}), y = rng.normal_tensor({5, 4});
        const double alpha = rng.normal(), beta = rng.normal();
        Tensor mix({6, 4});
        for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = alpha * x.data()[i] + beta * x2.data()[i];
        const Tensor lhs = contract<double>("TN,SN->TS", mix, y);
        const Tensor gx = contract<double>("TN,SN->TS", x, y), gx2 = contract<double>("TN,SN->TS", x2, y);
        Tensor rhs({6, 5});
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs.data()[i] = alpha * gx.data()[i] + beta * gx2.data()[i];
        CHECK(max_rel_err(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("contract: both evaluation orders of masked attention agree") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(100 + seed);
        const std::size_t t = 9;
        const Tensor q = rng.normal_tensor({t, 3}), k = rng.normal_tensor({t, 3}), v = rng.normal_tensor({t, 2});
        Tensor l = rng.normal_tensor({t, t});
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = i + 1; j < t; ++j) l(i, j) = 0.0;
        OpCounter quad_ops, lin_ops;
        const Tensor quad = contract("TN,SN,SP,TS->TP", q, k, v, l, &quad_ops, ContractionOrder::quadratic);
        const Tensor lin = contract("TN,SN,SP,TS->TP", q, k, v, l, &lin_ops, ContractionOrder::linear);
        CHECK(max_rel_err(lin, quad) < 1e-12);
        CHECK(quad_ops.mul_adds == t * t * 3 + t * t + t * t * 2);
        CHECK(lin_ops.mul_adds == t * 2 * 3 + t * t * 2 * 3 + t * 2 * 3);
    }
}

TEST_CASE("contract: TSN,SPN->TPN sums over S for every N") {
    Rng rng(9);
    const Tensor l = rng.normal_tensor({3, 4, 2}), z = rng.normal_tensor({4, 5, 2});
    const Tensor h = contract<double>("TSN,SPN->TPN", l, z);
    double expect = 0.0;
    for (std::size_t s = 0; s < 4; ++s) expect += l(1, s, 1) * z(s, 3, 1);
    CHECK(h(1, 3, 1) == doctest::Approx(expect));
}

TEST_CASE("contract: float instantiation agrees with double") {
    Rng rng(11);
    const Tensor a = rng.normal_tensor({4, 6}), b = rng.normal_tensor({6, 3});
    const Tensor32 c = matmul(a.cast<float>(), b.cast<float>());
    CHECK(max_rel_err(c.cast<double>(), matmul(a, b)) < 1e-5);
}

TEST_CASE("tensor: shape checks and relative error") {
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
    const Tensor zero({3});
    const Tensor one = Tensor::vector({0, 0, 1e-3});
    CHECK(max_rel_err(one, zero) == doctest::Approx(1e-3));
    CHECK(transpose(Tensor::matrix({{1, 2, 3}})) == Tensor::matrix({{1}, {2}, {3}}));
}
