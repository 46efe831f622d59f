#include <doctest.h>

#include "common.hpp"
#include "neyman/errors.hpp"
#include "neyman/estimators.hpp"
#include "neyman/imputation.hpp"
#include "neyman/parallel.hpp"

using namespace neyman;
using testing::rel;

namespace {
AssignmentVector av(const char* s) { return AssignmentVector::from_string(s); }

double loo_difference_in_means(const ObservedData& obs, int i) {
    double st = 0, sc = 0;
    int nt = 0, nc = 0;
    for (int j = 0; j < obs.n(); ++j) {
        if (j == i) continue;
        if (obs.w.treated(j)) st += obs.y[static_cast<std::size_t>(j)], ++nt;
        else sc += obs.y[static_cast<std::size_t>(j)], ++nc;
    }
    return st / nt - sc / nc;
}
}  // namespace

TEST_CASE("imputing potential outcomes") {
    ObservedData obs{av("10"), {5, 3}, {}, {}};
    auto t = impute_potential_outcomes(obs, std::vector<double>{2, 2});
    CHECK(t.y1 == std::vector<double>{5, 5});
    CHECK(t.y0 == std::vector<double>{3, 3});
    auto z = impute_potential_outcomes(obs, std::vector<double>{0, 0});
    CHECK(z.y1 == obs.y);
    CHECK(z.y0 == obs.y);
    PotentialOutcomes truth{{1, 4, 2}, {3, 6, 4}};
    auto back = impute_potential_outcomes(reveal(truth, av("101")), std::vector<double>(3, 2.0));
    CHECK(back.y0 == truth.y0);
    CHECK(back.y1 == truth.y1);
}

TEST_CASE("theta estimates") {
    ObservedData a{av("1100"), {1, 2, 3, 4}, {}, {}};
    std::vector<double> half(4, 0.5);
    CHECK(theta_ht(a, half) == doctest::Approx(horvitz_thompson(a, half)));
    ObservedData b{av("10"), {4, 2}, {}, {}};
    CHECK(theta_ht(b, std::vector<double>{0.25, 0.25}) == doctest::Approx(24.0 - 1.0 / 2.25).epsilon(1e-14));

    Design d = testing::measurable_skewed();
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        auto po = testing::po(oracle::random_table(6, rng, true));
        double theta = 0;
        for (int i = 0; i < 6; ++i) {
            double p = d.propensities()[static_cast<std::size_t>(i)];
            theta += ((1 - p) / p * po.y1[static_cast<std::size_t>(i)] - p / (1 - p) * po.y0[static_cast<std::size_t>(i)]) / 6;
        }
        double e = 0;
        for (const auto& s : d.support()) e += s.p * theta_ht(reveal(po, s.w), d.propensities());
        CHECK(rel(e, theta) < 1e-10);
    }
}

TEST_CASE("gamma specifications") {
    CHECK(GammaSpec::parse("fixed:1.5").values == std::vector<double>{1.5});
    CHECK(GammaSpec::parse("fixed:1,2,3").values.size() == 3);
    CHECK(GammaSpec::parse("tau-hat").kind == GammaSpec::Kind::tau_hat);
    CHECK(GammaSpec::parse("tau-loo").kind == GammaSpec::Kind::tau_loo);
    CHECK(GammaSpec::parse("theta-loo").kind == GammaSpec::Kind::theta_loo);
    for (const char* s : {"fixed:0.25", "tau-hat", "tau-loo", "theta-loo"})
        CHECK(GammaSpec::parse(GammaSpec::parse(s).to_string()).to_string() == GammaSpec::parse(s).to_string());
    CHECK_THROWS_AS(GammaSpec::parse("fixed:"), ValidationError);
    CHECK_THROWS_AS(GammaSpec::parse("fixed:abc"), ValidationError);
    CHECK_THROWS_AS(GammaSpec::parse("median"), ValidationError);

    Design d = build_crd(6, 3);
    ObservedData obs{av("101010"), {4, 1, 6, 2, 5, 3}, {}, {}};
    CHECK(gamma_vector(GammaSpec::fixed(0.0), obs, d) == std::vector<double>(6, 0.0));
    auto tau_hat = gamma_vector(GammaSpec::tau_hat(), obs, d);
    for (double g : tau_hat) CHECK(g == doctest::Approx(horvitz_thompson(obs, d.propensities())));
}

TEST_CASE("jackknife gammas on equal-group CRDs are leave-one-out differences in means") {
    Design d = build_crd(8, 4);
    std::mt19937_64 rng(32);
    auto po = testing::po(oracle::random_table(8, rng, false));
    for (const auto& s : d.support()) {
        auto obs = reveal(po, s.w);
        for (int i = 0; i < 8; ++i) {
            CHECK(rel(theta_loo(d, obs, i), loo_difference_in_means(obs, i)) < 1e-12);
            CHECK(rel(tau_loo(d, obs, i), theta_loo(d, obs, i)) < 1e-12);
        }
    }
}

TEST_CASE("jackknife needs both groups after removing a unit") {
    Design d = build_crd(4, 1);
    ObservedData obs{av("1000"), {1, 2, 3, 4}, {}, {}};
    CHECK_THROWS_AS(theta_loo(d, obs, 0), UndefinedEstimate);
    CHECK_THROWS_AS(tau_loo(d, obs, 0), UndefinedEstimate);
    CHECK_NOTHROW(theta_loo(d, obs, 1));
}

TEST_CASE("direct imputation of c") {
    ObservedData obs{av("10"), {5, 1}, {}, {}};
    auto c = impute_c(obs, std::vector<double>{0.5, 0.5}, std::vector<double>{2, 0});
    CHECK(c[0] == doctest::Approx(4.0));
    ObservedData b{av("10"), {4, 1}, {}, {}};
    CHECK(implicit_beta(b, std::vector<double>{0.25, 0.5}, std::vector<double>{0, 3})[0] == doctest::Approx(-32.0));
    CHECK(implicit_beta(b, std::vector<double>{0.25, 0.5}, std::vector<double>{0, 3})[1] == doctest::Approx(3.0));
}

TEST_CASE("unbiased direct imputation") {
    Design d = testing::measurable_skewed();
    REQUIRE(check_assumptions(d).measurable == Check::yes);
    const auto& pi = d.propensities();
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int rep = 0; rep < 50; ++rep) {
        auto po = testing::po(oracle::random_table(6, rng, false));
        auto c = c_vector(po, pi);
        std::vector<double> fixed(6);
        for (auto& g : fixed) g = u(rng);
        std::vector<double> e_fixed(6), e_theta(6), e_tau(6), e_bent(6);
        for (const auto& s : d.support()) {
            auto obs = reveal(po, s.w);
            auto cf = impute_c(obs, pi, fixed);
            auto ct = impute_c(obs, pi, gamma_vector(GammaSpec::theta_loo(), obs, d));
            auto ca = impute_c(obs, pi, gamma_vector(GammaSpec::tau_loo(), obs, d));
            for (int i = 0; i < 6; ++i) {
                auto k = static_cast<std::size_t>(i);
                e_fixed[k] += s.p * cf[k];
                e_theta[k] += s.p * ct[k];
                e_tau[k] += s.p * ca[k];
                // Negative control: a slope that is off by 10% breaks unbiasedness.
                double p = pi[k];
                e_bent[k] += s.p * (obs.w.treated(i) ? 1.1 * (1 - p) / p * obs.y[k] - (1 - p) * fixed[k]
                                                       : p / (1 - p) * obs.y[k] + p * fixed[k]);
            }
        }
        double worst_bent = 0;
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(rel(e_fixed[k], c[k]) < 1e-9);
            CHECK(rel(e_theta[k], c[k]) < 1e-9);
            CHECK(rel(e_tau[k], c[k]) < 1e-9);
            worst_bent = std::max(worst_bent, rel(e_bent[k], c[k]));
        }
        CHECK(worst_bent > 1e-3);
    }
}

TEST_CASE("jackknife conditional means do not depend on the unit's own arm") {
    Design d = testing::measurable_skewed();
    const auto& pi = d.propensities();
    std::mt19937_64 rng(34);
    for (int rep = 0; rep < 5; ++rep) {
        auto t = oracle::random_table(6, rng, false);
        auto po = testing::po(t);
        for (int i = 0; i < 6; ++i) {
            double theta_target = 0, tau_target = 0;
            for (int j = 0; j < 6; ++j) {
                if (j == i) continue;
                auto k = static_cast<std::size_t>(j);
                theta_target += ((1 - pi[k]) / pi[k] * t.y1[k] - pi[k] / (1 - pi[k]) * t.y0[k]) / 5;
                tau_target += (t.y1[k] - t.y0[k]) / 5;
            }
            for (int w = 0; w < 2; ++w) {
                double mass = 0, th = 0, ta = 0;
                for (const auto& s : d.support()) {
                    if (s.w[i] != w) continue;
                    auto obs = reveal(po, s.w);
                    mass += s.p;
                    th += s.p * theta_loo(d, obs, i);
                    ta += s.p * tau_loo(d, obs, i);
                }
                CHECK(rel(th / mass, theta_target) < 1e-9);
                CHECK(rel(ta / mass, tau_target) < 1e-9);
            }
        }
    }
}

TEST_CASE("imputation variance identities on CRDs") {
    std::mt19937_64 rng(35);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        auto po = testing::po(oracle::random_table(n, rng, false));
        for (const auto& s : d.support()) {
            auto obs = reveal(po, s.w);
            CHECK(rel(v_imputation(d, obs, GammaSpec::tau_hat()).value, neyman_variance(obs).value * (n - 2.0) / (n - 1)) <
                  1e-10);
        }
        auto h = testing::po(oracle::random_table(n, rng, true));
        double e = estimator_expectation(d, h, [&](const ObservedData& o) {
            return v_imputation(d, o, GammaSpec::theta_loo()).value;
        });
        CHECK(rel(e, true_variance(d, h) * (n - 1.0) / (n - 2.0)) < 1e-10);
        double beta = 1.25;
        double eb = estimator_expectation(d, h, [&](const ObservedData& o) {
            return v_imputation(d, o, GammaSpec::fixed(beta)).value;
        });
        double tau = h.tau();
        CHECK(rel(eb - true_variance(d, h), (tau - beta) * (tau - beta) / (n - 1.0)) < 1e-9);
    }
}

TEST_CASE("fixed-beta imputation at propensity one half") {
    std::mt19937_64 rng(36);
    std::vector<Design> designs{testing::toy(), build_matched_pair({{0, 1}, {2, 3}, {4, 5}, {6, 7}}), build_crd(6, 3)};
    for (const auto& d : designs) {
        double epw = 0;
        for (const auto& s : d.support()) {
            std::vector<double> w;
            for (int i = 0; i < d.n(); ++i) w.push_back(s.w[i]);
            epw += s.p * psi(d, w);
        }
        for (int rep = 0; rep < 10; ++rep) {
            double beta = std::uniform_real_distribution<double>(-5, 5)(rng);
            auto het = testing::po(oracle::random_table(d.n(), rng, false));
            auto f = [&](const ObservedData& o) { return v_imputation(d, o, GammaSpec::fixed(beta)).value; };
            double truth = true_variance(d, het);
            CHECK(estimator_expectation(d, het, f) - truth >= -1e-10 * truth);
            auto hom = testing::po(oracle::random_table(d.n(), rng, true));
            double tau = hom.tau();
            CHECK(rel(estimator_expectation(d, hom, f) - true_variance(d, hom), (tau - beta) * (tau - beta) * epw) < 1e-9);
        }
    }
}

TEST_CASE("bias terms on a fixed-total-weight design") {
    Design d = build_crd(6, 4);
    std::mt19937_64 rng(37);
    for (int rep = 0; rep < 5; ++rep) {
        auto po = testing::po(oracle::random_table(6, rng, true));
        double beta = std::uniform_real_distribution<double>(-5, 5)(rng);
        double ea2 = 0, scale = 0, epsi = 0, epw = 0;
        for (const auto& s : d.support()) {
            auto t = imputation_bias_terms(d, po, s.w, beta);
            CHECK(rel(t.psi_c_hat, t.psi_c + t.a1 + t.a2) < 1e-9);
            ea2 += s.p * t.a2;
            scale += s.p * std::abs(t.a2);
            epsi += s.p * t.psi_c_hat;
            std::vector<double> w;
            for (int i = 0; i < 6; ++i) w.push_back(s.w[i]);
            epw += s.p * psi(d, w);
        }
        CHECK(std::abs(ea2) <= 1e-9 * std::max(scale, 1e-12));
        double tau = po.tau();
        CHECK(rel(epsi, true_variance(d, po) + (tau - beta) * (tau - beta) * epw) < 1e-9);
    }
    CHECK_THROWS_AS(imputation_bias_terms(d, {{1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 7}}, d.support()[0].w, 0.0),
                    AssumptionViolation);
}

TEST_CASE("tau-hat imputation bias shrinks with N") {
    // Homogeneous outcomes with bounded spread: |E[psi(c_tau_hat)] - Var| at N = 8, 16 by
    // enumeration, and at N = 32 by averaging exact psi values over sampled assignments.
    std::mt19937_64 rng(38);
    auto table = [&](int n) {
        PotentialOutcomes po;
        std::uniform_real_distribution<double> u(0, 10);
        for (int i = 0; i < n; ++i) po.y0.push_back(u(rng)), po.y1.push_back(po.y0.back() + 2.0);
        return po;
    };
    std::vector<double> bias;
    for (int n : {8, 16}) {
        Design d = build_crd(n, n / 2);
        auto po = table(n);
        PsiForm form(d);
        double e = estimator_expectation(d, po, [&](const ObservedData& o) {
            return v_imputation(d, o, GammaSpec::tau_hat(), form).value;
        });
        bias.push_back(std::abs(e - true_variance(d, po)));
    }
    CHECK(bias[1] < bias[0]);

    BuildOptions opts;
    opts.enumeration_cap = 1;
    Design d32 = build_crd(32, 16, opts);
    auto po = table(32);
    PsiForm form(d32);
    double truth = form(c_vector(po, d32.propensities()));
    const int draws = 4000;
    std::vector<double> vals;
    for (const auto& w : sample_assignments(d32, draws, 99))
        vals.push_back(v_imputation(d32, reveal(po, w), GammaSpec::tau_hat(), form).value);
    double mean = 0;
    for (double v : vals) mean += v / draws;
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean) / (draws - 1);
    double hi = std::abs(mean - truth) + 3 * std::sqrt(var / draws);
    CHECK(hi < bias[1]);
}

TEST_CASE("Monte Carlo imputation") {
    Design d = testing::toy();
    PotentialOutcomes po{{1, 2, 3, 4}, {3, 4, 5, 6}};
    auto obs = reveal(po, av("1001"));
    auto exact = v_imputation(d, obs, GammaSpec::fixed(2.0));
    auto mc = v_imputation_mc(d, obs, GammaSpec::fixed(2.0), 100'000, 17);
    CHECK_FALSE(mc.exact);
    CHECK(mc.mc_draws == 100'000);
    CHECK(std::abs(mc.value - exact.value) < 3 * mc.std_error);
    auto again = v_imputation_mc(d, obs, GammaSpec::fixed(2.0), 100'000, 17);
    CHECK(again.value == mc.value);
    CHECK(again.std_error == mc.std_error);

    int saved = thread_count();
    set_thread_count(4);
    auto threaded = v_imputation_mc(d, obs, GammaSpec::fixed(2.0), 100'000, 17);
    set_thread_count(saved);
    CHECK(threaded.value == mc.value);

    ObservedData flat{av("1001"), {3, 3, 3, 3}, {}, {}};
    CHECK(v_imputation_mc(d, flat, GammaSpec::fixed(0.0), 1000, 1).value == 0.0);
}

TEST_CASE("sample variance and its jackknife standard error") {
    std::vector<double> x{1, 2, 4, 7, 11};
    auto sv = sample_variance_with_jackknife(x);
    CHECK(sv.variance == doctest::Approx(oracle::sample_var(x)));
    // Brute-force jackknife over leave-one-out sample variances.
    std::vector<double> loo;
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> y;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (j != i) y.push_back(x[j]);
        loo.push_back(oracle::sample_var(y));
    }
    double m = 0;
    for (double v : loo) m += v / 5;
    double s = 0;
    for (double v : loo) s += (v - m) * (v - m);
    CHECK(sv.std_error == doctest::Approx(std::sqrt(4.0 / 5 * s)).epsilon(1e-12));
}
