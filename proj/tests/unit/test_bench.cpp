#include <doctest.h>

#include <cmath>
#include <set>

#include <json.hpp>

#include "bench_lib.hpp"

using namespace ssd::bench;

TEST_CASE("bench: grid parsing") {
    const Grid g = parse_grid("T=64:128,N=4,P=2,Q=8,H=2,G=1");
    CHECK(g.t == std::vector<std::size_t>{64, 128});
    CHECK(g.n == std::vector<std::size_t>{4});
    CHECK(g.h == std::vector<std::size_t>{2});
    const Grid tied = parse_grid("NPQ=8:16:32,T=256");
    CHECK(tied.npq == std::vector<std::size_t>{8, 16, 32});
    CHECK(tied.t == std::vector<std::size_t>{256});
    // unspecified axes keep their defaults
    CHECK(parse_grid("N=4").t == Grid{}.t);
    CHECK_THROWS_AS(parse_grid("T="), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("T=0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("T=12x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("X=4"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("T=4::8"), std::invalid_argument);
}

TEST_CASE("bench: log-log slope") {
    std::vector<std::pair<double, double>> cubic, linear;
    for (double x : {2.0, 4.0, 8.0, 16.0}) {
        cubic.push_back({x, 5.0 * x * x * x});
        linear.push_back({x, 3.0 * x + 0.0});
    }
    CHECK(fit_exponent(cubic) == doctest::Approx(3.0));
    CHECK(fit_exponent(linear) == doctest::Approx(1.0));
}

TEST_CASE("bench: configuration validation") {
    BenchConfig c;
    CHECK_NOTHROW(c.validate());
    c.suites = {"no-such-suite"};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = BenchConfig{};
    c.algorithms = {"no-such-algo"};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = BenchConfig{};
    c.repetitions = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = BenchConfig{};
    c.grid.t.clear();
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(suite_names().size() >= 8);
    for (const auto& a : default_algorithms()) {
        const auto names = algorithm_names();
        CHECK(std::find(names.begin(), names.end(), a) != names.end());
    }
}

TEST_CASE("bench: verify passes clean and fails under fault injection") {
    BenchConfig c;
    c.suites = {"scan", "duality", "cost"};
    const Report clean = cmd_verify(c);
    CHECK(clean.all_pass());
    CHECK(clean.failures() == 0);
    std::set<std::string> seen;
    for (const auto& r : clean.records) seen.insert(r.suite);
    CHECK(seen == std::set<std::string>{"scan", "duality", "cost"});

    c.inject_fault = true;
    const Report bad = cmd_verify(c);
    CHECK_FALSE(bad.all_pass());
    // one perturbed oracle per suite
    CHECK(bad.failures() >= 3);
}

TEST_CASE("bench: reports are deterministic and carry the fixed CSV header") {
    BenchConfig c;
    c.seed = 3;
    c.suites = {"ssm", "head-patterns"};
    const Report a = cmd_verify(c), b = cmd_verify(c);
    CHECK(to_json(a) == to_json(b));
    CHECK(to_csv(a) == to_csv(b));
    CHECK(to_csv(a).rfind("case,params,max_rel_err,mul_adds,wall_ns,status\n", 0) == 0);
    for (const auto& r : a.records) CHECK(r.wall_ns == 0);
    const auto j = nlohmann::json::parse(to_json(a));
    CHECK(j["seed"] == 3);
    CHECK(j["summary"]["status"] == "pass");
}

TEST_CASE("bench: op-count fits on a small grid") {
    BenchConfig c;
    c.grid = parse_grid("T=32:64:128:256,N=4,P=4,Q=8");
    c.algorithms = {"ssd-blocked", "ssd-quadratic", "scan-sequential"};
    const Report r = cmd_bench(c);
    CHECK(r.all_pass());
    bool found = false;
    for (const auto& f : r.fits) {
        if (f.name.find("ssd-quadratic") != std::string::npos && f.axis == "T") {
            found = true;
            CHECK(f.exponent == doctest::Approx(2.0).epsilon(0.15));
        }
    }
    CHECK(found);
}

TEST_CASE("bench: table rows and exponents") {
    const Report r = cmd_table(BenchConfig{});
    REQUIRE(r.table.size() == 3);
    CHECK(r.table[0].model == "Attention");
    CHECK(r.table[2].model == "SSD");
    for (const auto& row : r.table) {
        CAPTURE(row.model);
        CHECK(row.pass);
        CHECK(std::abs(row.t_exponent - row.expected_t) <= 0.15);
    }
    const std::string csv = table_csv(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
