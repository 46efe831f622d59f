#include <doctest.h>

#include "common.hpp"
#include "neyman/errors.hpp"
#include "neyman/estimators.hpp"

using namespace neyman;
using testing::rel;

namespace {
ObservedData obs_of(const char* w, std::vector<double> y) { return {AssignmentVector::from_string(w), std::move(y), {}, {}}; }
}  // namespace

TEST_CASE("Horvitz-Thompson point estimates") {
    CHECK(horvitz_thompson(obs_of("1100", {1, 2, 3, 4}), std::vector<double>(4, 0.5)) == doctest::Approx(-2.0));
    CHECK(horvitz_thompson(obs_of("101000", {7, 7, 7, 7, 7, 7}), std::vector<double>(6, 2.0 / 6)) ==
          doctest::Approx(0.0).epsilon(1e-12));
    Design d = testing::toy();
    PotentialOutcomes po{{1, 2, 3, 4}, {3, 4, 5, 6}};
    double e = 0;
    for (const auto& s : d.support()) e += s.p * horvitz_thompson(reveal(po, s.w), d.propensities());
    CHECK(e == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("HT is unbiased on every enumerable positive design") {
    std::mt19937_64 rng(1);
    std::vector<Design> designs{testing::toy(), testing::skewed(), build_crd(6, 2), build_matched_pair({{0, 3}, {1, 2}})};
    for (const auto& d : designs)
        for (int rep = 0; rep < 20; ++rep) {
            auto t = oracle::random_table(d.n(), rng, false);
            double e = 0;
            for (const auto& s : d.support()) e += s.p * horvitz_thompson(reveal(testing::po(t), s.w), d.propensities());
            CHECK(rel(e, oracle::tau(t.y0, t.y1)) < 1e-10);
        }
}

TEST_CASE("Hajek and difference in means") {
    CHECK(hajek(obs_of("100", {6, 3, 3}), std::vector<double>(3, 1.0 / 3)) == doctest::Approx(3.0));
    // Controls are weighted by 1/(1-pi): (2*2 + 4*4)/6 - (2*2 + 4*4/3)/(10/3) = 10/3 - 14/5.
    CHECK(hajek(obs_of("1010", {2, 2, 4, 4}), std::vector<double>{0.5, 0.5, 0.25, 0.25}) ==
          doctest::Approx(8.0 / 15).epsilon(1e-14));
    CHECK_THROWS_AS(hajek(obs_of("111", {1, 2, 3}), std::vector<double>(3, 0.5)), UndefinedEstimate);
    CHECK(difference_in_means(obs_of("1100", {1, 2, 3, 4})) == doctest::Approx(-2.0));
}

TEST_CASE("c vectors") {
    auto c = c_vector({{1, 2, 3, 4}, {3, 4, 5, 6}}, std::vector<double>(4, 0.5));
    CHECK(c == std::vector<double>{2, 3, 4, 5});
    auto same = c_vector({{1, 7}, {1, 7}}, std::vector<double>{0.2, 0.9});
    CHECK(same[0] == doctest::Approx(1.0));
    CHECK(same[1] == doctest::Approx(7.0));
    CHECK(c_vector({{0}, {1}}, std::vector<double>{0.25})[0] == doctest::Approx(0.75));
}

TEST_CASE("psi on the toy design and against the oracle") {
    Design d = testing::toy();
    std::vector<double> v{2, 3, 4, 5};
    CHECK(psi(d, v) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(PsiForm(d)(v) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(psi(d, std::vector<double>(4, 3.0)) == doctest::Approx(0.0));

    Design crd = build_crd(4, 2);
    double e = 0;
    for (const auto& s : crd.support()) {
        std::vector<double> w;
        for (int i = 0; i < 4; ++i) w.push_back(s.w[i]);
        e += s.p * psi(crd, w);
    }
    CHECK(e == doctest::Approx(1.0 / 3).epsilon(1e-13));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    auto od = oracle::explicit_design(testing::skewed_support(), testing::skewed_probs());
    Design sk = testing::skewed();
    PsiForm form(sk);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> a(6), b(6), mid(6);
        for (int i = 0; i < 6; ++i) a[static_cast<std::size_t>(i)] = u(rng), b[static_cast<std::size_t>(i)] = u(rng);
        for (int i = 0; i < 6; ++i) mid[static_cast<std::size_t>(i)] = (a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)]) / 2;
        CHECK(rel(psi(sk, a), oracle::psi(od, a)) < 1e-12);
        CHECK(rel(form(a), oracle::psi(od, a)) < 1e-10);
        CHECK(psi(sk, a) >= 0.0);
        CHECK(psi(sk, mid) <= (psi(sk, a) + psi(sk, b)) / 2 + 1e-12);
    }
}

TEST_CASE("true variance: psi(c), direct enumeration and the CRD formula agree") {
    Design d = testing::toy();
    CHECK(true_variance(d, {{1, 2, 3, 4}, {3, 4, 5, 6}}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(true_variance(d, {{5, 5, 5, 5}, {5, 5, 5, 5}}) == doctest::Approx(0.0));
    CHECK(true_variance(build_crd(4, 2), {{1, 2, 3, 4}, {1, 2, 3, 4}}) == doctest::Approx(5.0 / 3).epsilon(1e-14));

    std::mt19937_64 rng(3);
    for (int n : {4, 6, 8})
        for (int nt : {n / 2, n / 2 + 1}) {
            Design crd = build_crd(n, nt);
            auto od = oracle::crd(n, nt);
            for (int rep = 0; rep < 10; ++rep) {
                auto t = oracle::random_table(n, rng, false);
                double v = true_variance(crd, testing::po(t));
                CHECK(rel(v, oracle::var_ht(od, t.y0, t.y1)) < 1e-10);
                CHECK(rel(v, true_variance_direct(crd, testing::po(t))) < 1e-10);
                CHECK(rel(v, oracle::crd_variance_formula(t.y0, t.y1, nt)) < 1e-10);
            }
        }
}

TEST_CASE("Neyman variance estimator") {
    CHECK(neyman_variance(obs_of("1100", {1, 2, 3, 4})).value == doctest::Approx(0.5));
    CHECK(neyman_variance(obs_of("1100", {3, 3, 3, 3})).value == doctest::Approx(0.0));
    CHECK_THROWS_AS(neyman_variance(obs_of("1000", {1, 2, 3, 4})), UndefinedEstimate);
    CHECK_THROWS_AS(neyman_variance(obs_of("1100", {1, 2, 3, 4}), 3, 1), ValidationError);
}

TEST_CASE("Neyman bias on CRDs is S2_10/N") {
    std::mt19937_64 rng(4);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        for (bool homog : {true, false})
            for (int rep = 0; rep < 5; ++rep) {
                auto t = oracle::random_table(n, rng, homog);
                auto po = testing::po(t);
                double e = estimator_expectation(d, po, [](const ObservedData& o) { return neyman_variance(o).value; });
                double s2_10 = summarize(po).s2_10;
                double truth = true_variance(d, po);
                CHECK(std::abs((e - truth) - s2_10 / n) < 1e-10 * truth);
                if (homog) CHECK(rel(e, true_variance(d, po)) < 1e-10);
            }
    }
    Design d = build_crd(4, 2);
    CHECK(estimator_expectation(d, {{1, 2, 3, 4}, {2, 2, 2, 2}}, [](const ObservedData&) { return 0.0; }) == 0.0);
}

TEST_CASE("expectation errors carry the failing assignment") {
    Design d = build_crd(3, 1);
    try {
        estimator_expectation(d, {{1, 2, 3}, {1, 2, 3}}, [](const ObservedData& o) { return neyman_variance(o).value; });
        FAIL("expected an undefined estimate");
    } catch (const UndefinedEstimate& e) {
        CHECK(std::string(e.what()).find("[at w=") != std::string::npos);
    }
}

TEST_CASE("Hajek mean squared error") {
    CHECK(true_mse_hajek(build_crd(4, 2), {{3, 3, 3, 3}, {3, 3, 3, 3}}) == doctest::Approx(0.0));
    std::mt19937_64 rng(5);
    Design d = build_crd(6, 2);
    auto od = oracle::crd(6, 2);
    for (int rep = 0; rep < 5; ++rep) {
        auto t = oracle::random_table(6, rng, true);
        double tau = oracle::tau(t.y0, t.y1), direct = 0;
        for (std::size_t k = 0; k < od.w.size(); ++k) {
            double e = oracle::mean_diff(od.w[k], t.y0);
            direct += od.p[k] * e * e;
        }
        (void)tau;
        CHECK(rel(true_mse_hajek(d, testing::po(t)), direct) < 1e-10);
    }
    // Equal groups: the Hajek estimator is the HT estimator.
    Design toy = testing::toy();
    auto t = oracle::random_table(4, rng, false);
    CHECK(rel(true_mse_hajek(toy, testing::po(t)), true_variance(toy, testing::po(t))) < 1e-10);
}

TEST_CASE("variance estimates round-trip through JSON") {
    VarianceEstimate v;
    v.value = 0.1 + 0.2;
    v.kind = EstimatorKind::imputation;
    v.exact = false;
    v.mc_draws = 1000;
    v.std_error = 1.0 / 3;
    v.params = {{"gamma", "tau-hat"}};
    auto j = to_json(v);
    auto back = variance_estimate_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.value == v.value);
    CHECK(back.std_error == v.std_error);
    CHECK(back.mc_draws == v.mc_draws);
    CHECK(to_json(back) == j);
    CHECK(estimator_kind_from_string("contrast") == EstimatorKind::contrast);
    CHECK_THROWS_AS(estimator_kind_from_string("nope"), ValidationError);
}

TEST_CASE("psi by Monte Carlo brackets the exact value") {
    BuildOptions opts;
    opts.enumeration_cap = 1;
    Design sampled = build_crd(8, 4, opts);
    Design exact = build_crd(8, 4);
    std::vector<double> v{1, 4, 2, 8, 5, 7, 3, 6};
    auto est = psi_mc(sampled, v, 200'000, 7);
    CHECK_FALSE(est.exact);
    CHECK(std::abs(est.value - psi(exact, v)) < 4 * est.std_error);
}
