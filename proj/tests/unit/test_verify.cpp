#include <doctest.h>

#include "neyman/errors.hpp"
#include "neyman/verify.hpp"

using namespace neyman;

TEST_CASE("every identity suite passes") {
    for (const auto& s : verify_suites()) {
        auto rep = run_verify(s, 0);
        CAPTURE(s);
        CHECK(rep.passed());
        CHECK_FALSE(rep.checks.empty());
        for (const auto& c : rep.checks) CHECK(c.cases > 0);
    }
}

TEST_CASE("suite all composes the named suites") {
    auto all = run_verify("all", 5);
    std::size_t total = 0;
    for (const auto& s : verify_suites()) total += run_verify(s, 5).checks.size();
    CHECK(all.checks.size() == total);
    CHECK(all.passed());
    auto j = all.to_json();
    CHECK(j.at("passed") == true);
    CHECK(nlohmann::json::parse(j.dump()) == j);
}

TEST_CASE("tight tolerances fail loudly") {
    Tolerances tol;
    tol.estimator = 0.0;
    tol.weight = 0.0;
    auto rep = run_verify("corA1", 0, tol);
    CHECK_FALSE(rep.passed());
    CHECK_THROWS_AS(run_verify("thm9"), ValidationError);
}
