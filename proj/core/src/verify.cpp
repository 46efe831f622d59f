#include "neyman/verify.hpp"

#include <cmath>

#include "neyman/contrast.hpp"
#include "neyman/decomposition.hpp"
#include "neyman/design.hpp"
#include "neyman/errors.hpp"
#include "neyman/estimators.hpp"
#include "neyman/imputation.hpp"

namespace neyman {

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

nlohmann::json VerifyReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name},
                       {"max_residual", c.max_residual},
                       {"tolerance", c.tolerance},
                       {"cases", c.cases},
                       {"passed", c.passed}});
    return {{"suite", suite}, {"passed", passed()}, {"checks", arr}};
}

const std::vector<std::string>& verify_suites() {
    static const std::vector<std::string> names{"thm2", "thm3", "prop3", "prop4", "thm4", "prop2", "corA1"};
    return names;
}

namespace {

class Tracker {
public:
    Tracker(std::string name, double tol) { c_.name = std::move(name), c_.tolerance = tol; }
    void residual(double r) {
        ++c_.cases;
        if (!(r <= c_.max_residual)) c_.max_residual = std::isnan(r) ? INFINITY : r;
    }
    void compare(double a, double b) { residual(relative_residual(a, b)); }
    // For quadratic forms that can cancel to ~0: scale by the size of the summed terms instead.
    void compare(double a, double b, double scale) {
        residual(std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale, 1e-12}));
    }
    // One-sided: records how far `a` falls below `b`.
    void at_least(double a, double b) { residual(std::max(0.0, (b - a) / std::max({std::abs(b), 1e-12}))); }
    VerifyCheck done() {
        c_.passed = c_.max_residual <= c_.tolerance;
        return c_;
    }

private:
    VerifyCheck c_;
};

PotentialOutcomes random_table(int n, Rng& rng, bool homogeneous) {
    PotentialOutcomes po;
    double tau = -5.0 + 10.0 * uniform01(rng);
    for (int i = 0; i < n; ++i) {
        po.y0.push_back(10.0 * uniform01(rng));
        po.y1.push_back(po.y0.back() + (homogeneous ? tau : -5.0 + 10.0 * uniform01(rng)));
    }
    return po;
}

Design toy_design() {
    std::vector<AssignmentVector> s;
    for (const char* b : {"1100", "0011", "1001", "0110"}) s.push_back(AssignmentVector::from_string(b));
    return build_explicit(s, {0.25, 0.25, 0.25, 0.25});
}

Design weighted_toy_design() {
    std::vector<AssignmentVector> s;
    for (const char* b : {"1100", "0011", "1001", "0110"}) s.push_back(AssignmentVector::from_string(b));
    return build_explicit(s, {1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6});
}

Design pair_design(int n) {
    UnitPairs p;
    for (int i = 0; i + 1 < n; i += 2) p.emplace_back(i, i + 1);
    return build_matched_pair(p);
}

void suite_thm2(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    Tracker t("contrast_full_substitutes_equals_neyman_crd", tol.estimator);
    for (int n : {4, 8, 12}) {
        Design d = build_crd(n, n / 2);
        auto g = full_substitute_map(d, SubstituteMode::equal_size);
        for (int rep = 0; rep < 2; ++rep) {
            auto po = random_table(n, rng, false);
            for (const auto& e : d.support()) {
                auto obs = reveal(po, e.w);
                t.compare(v_sub(d, obs, g).value, neyman_variance(obs).value);
            }
        }
    }
    out.push_back(t.done());
}

void suite_thm3(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    Tracker t("contrast_full_substitutes_equals_pair_estimator", tol.estimator);
    for (int n : {4, 8}) {
        Design d = pair_design(n);
        auto g = full_substitute_map(d, SubstituteMode::equal_size);
        for (int rep = 0; rep < 3; ++rep) {
            auto po = random_table(n, rng, false);
            for (const auto& e : d.support()) {
                auto obs = reveal(po, e.w);
                obs.pairs = d.pairs();
                t.compare(v_sub(d, obs, g).value, v_pair(obs).value);
            }
        }
    }
    out.push_back(t.done());
}

void suite_prop3(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    Design d = toy_design();
    auto g = full_substitute_map(d, SubstituteMode::equal_size);
    QMatrix q = q_from_signs({1, -1, 1, -1});
    {
        Tracker t("contrast_equals_sign_pattern_decomposition_toy", tol.estimator);
        for (int rep = 0; rep < 100; ++rep) {
            auto po = random_table(4, rng, false);
            for (const auto& e : d.support()) {
                auto obs = reveal(po, e.w);
                double scale = 0.0;
                for (double y : obs.y) scale += y * y / 16.0;
                t.compare(v_sub(d, obs, g).value, estimate_decomposition(d, obs, q).value, scale);
            }
        }
        out.push_back(t.done());
    }
    {
        Tracker t("sign_pattern_q_is_valid_and_feasible", tol.probability);
        t.residual(validate_q(q).ok() && q_feasible_for_design(d, q).feasible ? 0.0 : 1.0);
        out.push_back(t.done());
    }
    {
        // The Y_1^2 coefficient of the contrast estimator at W=(1,0,0,1) on the 1/3,1/3,1/6,1/6 design
        // is 0.5; every decomposition estimator on a pi = 0.5 design puts 1/(N^2 pi^2) = 0.25 there.
        Design wd = weighted_toy_design();
        auto wg = full_substitute_map(wd, SubstituteMode::equal_size);
        auto w = AssignmentVector::from_string("1001");
        ObservedData obs{w, {1.0, 0.0, 0.0, 0.0}, {}, std::nullopt};
        double coef = v_sub(wd, obs, wg).value;
        Tracker t("weighted_toy_first_unit_square_coefficient", tol.estimator);
        t.compare(coef, 0.5);
        out.push_back(t.done());
        Tracker u("weighted_toy_not_a_decomposition_estimator", tol.estimator);
        double worst = 0.0;
        for (const char* b : {"1100", "1001"}) {
            ObservedData o{AssignmentVector::from_string(b), {1.0, 0.0, 0.0, 0.0}, {}, std::nullopt};
            double c = v_sub(wd, o, wg).value;
            worst = std::max(worst, relative_residual(c, 0.25) > 1e-6 ? 0.0 : 1.0);
        }
        u.residual(worst);
        out.push_back(u.done());
    }
}

void suite_prop4(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    Tracker t("tau_hat_imputation_equals_scaled_neyman", tol.estimator);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        PsiForm form(d);
        for (int rep = 0; rep < 3; ++rep) {
            auto po = random_table(n, rng, false);
            for (const auto& e : d.support()) {
                auto obs = reveal(po, e.w);
                double lhs = v_imputation(d, obs, GammaSpec::tau_hat(), form).value;
                t.compare(lhs, neyman_variance(obs).value * (n - 2.0) / (n - 1.0));
            }
        }
    }
    out.push_back(t.done());
}

void suite_thm4(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    Tracker t("theta_loo_expectation_scaled_true_variance", tol.estimator);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        PsiForm form(d);
        for (int rep = 0; rep < 3; ++rep) {
            auto po = random_table(n, rng, true);
            double e = estimator_expectation(
                d, po, [&](const ObservedData& o) { return v_imputation(d, o, GammaSpec::theta_loo(), form).value; });
            t.compare(e, true_variance(d, po) * (n - 1.0) / (n - 2.0));
        }
    }
    out.push_back(t.done());
}

void suite_prop2(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    {
        Tracker t("fixed_effect_imputation_bias_constant_crd", tol.estimator);
        for (int n : {4, 6, 8}) {
            Design d = build_crd(n, n / 2);
            PsiForm form(d);
            for (int rep = 0; rep < 4; ++rep) {
                auto po = random_table(n, rng, true);
                double beta = -5.0 + 10.0 * uniform01(rng), tau = po.tau();
                double e = estimator_expectation(
                    d, po, [&](const ObservedData& o) { return v_imputation(d, o, GammaSpec::fixed(beta), form).value; });
                double truth = true_variance(d, po);
                t.compare(e, truth + (tau - beta) * (tau - beta) / (n - 1.0));
            }
        }
        out.push_back(t.done());
    }
    std::vector<Design> half{toy_design(), build_crd(6, 3)};
    {
        Tracker t("fixed_effect_bias_equals_assignment_psi", tol.estimator);
        for (const auto& d : half) {
            PsiForm form(d);
            CompensatedSum epw;
            for (const auto& e : d.support()) {
                std::vector<double> w(static_cast<std::size_t>(d.n()));
                for (int i = 0; i < d.n(); ++i) w[static_cast<std::size_t>(i)] = e.w[i];
                epw.add(e.p * form(w));
            }
            for (int rep = 0; rep < 5; ++rep) {
                auto po = random_table(d.n(), rng, true);
                double beta = -5.0 + 10.0 * uniform01(rng), tau = po.tau();
                double e = estimator_expectation(
                    d, po, [&](const ObservedData& o) { return v_imputation(d, o, GammaSpec::fixed(beta), form).value; });
                t.compare(e - true_variance(d, po), (tau - beta) * (tau - beta) * epw.value());
            }
        }
        out.push_back(t.done());
    }
    {
        Tracker t("fixed_effect_imputation_conservative_half_propensity", tol.estimator);
        std::vector<Design> designs{toy_design(), pair_design(8)};
        for (const auto& d : designs) {
            PsiForm form(d);
            for (int rep = 0; rep < 10; ++rep) {
                auto po = random_table(d.n(), rng, false);
                double beta = -5.0 + 10.0 * uniform01(rng);
                double e = estimator_expectation(
                    d, po, [&](const ObservedData& o) { return v_imputation(d, o, GammaSpec::fixed(beta), form).value; });
                t.at_least(e, true_variance(d, po));
            }
        }
        out.push_back(t.done());
    }
}

void suite_cor_a1(std::vector<VerifyCheck>& out, Rng& rng, const Tolerances& tol) {
    Design d = build_crd(6, 4);
    Tracker ident("fixed_total_weight_per_realization_identity", tol.weight);
    Tracker mean("fixed_total_weight_cross_term_mean_zero", tol.weight);
    for (int rep = 0; rep < 10; ++rep) {
        auto po = random_table(6, rng, true);
        double beta = -5.0 + 10.0 * uniform01(rng);
        CompensatedSum a2, scale;
        for (const auto& e : d.support()) {
            auto t = imputation_bias_terms(d, po, e.w, beta);
            ident.compare(t.psi_c_hat, t.psi_c + t.a1 + t.a2);
            a2.add(e.p * t.a2);
            scale.add(e.p * std::abs(t.a2));
        }
        mean.residual(std::abs(a2.value()) / std::max(scale.value(), 1e-12));
    }
    out.push_back(ident.done());
    out.push_back(mean.done());
}

}  // namespace

VerifyReport run_verify(const std::string& suite, std::uint64_t seed, const Tolerances& tol) {
    VerifyReport rep;
    rep.suite = suite;
    auto run_one = [&](const std::string& s) {
        const auto& names = verify_suites();
        auto pos = static_cast<std::uint64_t>(std::find(names.begin(), names.end(), s) - names.begin());
        Rng rng(derive_seed(seed, pos));
        if (s == "thm2") suite_thm2(rep.checks, rng, tol);
        else if (s == "thm3") suite_thm3(rep.checks, rng, tol);
        else if (s == "prop3") suite_prop3(rep.checks, rng, tol);
        else if (s == "prop4") suite_prop4(rep.checks, rng, tol);
        else if (s == "thm4") suite_thm4(rep.checks, rng, tol);
        else if (s == "prop2") suite_prop2(rep.checks, rng, tol);
        else if (s == "corA1") suite_cor_a1(rep.checks, rng, tol);
        else throw ValidationError("unknown verify suite '" + s + "'");
    };
    if (suite == "all") {
        for (const auto& s : verify_suites()) {
            std::size_t before = rep.checks.size();
            run_one(s);
            for (std::size_t i = before; i < rep.checks.size(); ++i) rep.checks[i].name = s + "/" + rep.checks[i].name;
        }
    } else {
        run_one(suite);
    }
    return rep;
}

}  // namespace neyman
