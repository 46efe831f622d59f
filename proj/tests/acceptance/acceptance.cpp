// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Reference values come from the long-double brute-force oracle in tests/unit where practical.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "neyman/contrast.hpp"
#include "neyman/decomposition.hpp"
#include "neyman/errors.hpp"
#include "neyman/estimators.hpp"
#include "neyman/imputation.hpp"
#include "neyman/numeric.hpp"
#include "neyman/simulation.hpp"

using namespace neyman;
using testing::rel;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Tracks the worst residual seen against a bound.
struct Worst {
    double value = 0.0;
    void add(double r) { value = std::max(value, std::isnan(r) ? INFINITY : r); }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Outcome contrast_equals_neyman_crd() {
    auto t0 = Clock::now();
    Worst w;
    std::mt19937_64 rng(101);
    for (int n : {4, 8, 12}) {
        Design d = build_crd(n, n / 2);
        auto g = full_substitute_map(d, SubstituteMode::equal_size);
        auto t = oracle::random_table(n, rng, false);
        for (const auto& s : d.support()) {
            auto obs = reveal(testing::po(t), s.w);
            w.add(rel(v_sub(d, obs, g).value, oracle::neyman(testing::bits(s.w), obs.y)));
        }
    }
    double secs = seconds_since(t0);
    return {w.value < 1e-10 && secs < 60, fmt("max residual %.2e", w.value) + fmt(", %.2f s", secs)};
}

Outcome contrast_equals_pair_estimator() {
    Worst w;
    std::mt19937_64 rng(102);
    for (int n : {4, 8}) {
        UnitPairs pairs;
        for (int k = 0; k < n / 2; ++k) pairs.emplace_back(k, n - 1 - k);
        Design d = build_matched_pair(pairs);
        auto g = full_substitute_map(d, SubstituteMode::equal_size);
        for (int rep = 0; rep < 5; ++rep) {
            auto po = testing::po(oracle::random_table(n, rng, false));
            for (const auto& s : d.support()) {
                auto obs = reveal(po, s.w);
                obs.pairs = pairs;
                w.add(rel(v_sub(d, obs, g).value, v_pair(obs).value));
            }
        }
    }
    return {w.value < 1e-10, fmt("max residual %.2e", w.value)};
}

Outcome toy_contrast_is_a_decomposition() {
    Design d = testing::toy();
    auto g = full_substitute_map(d, SubstituteMode::equal_size);
    // Symmetrized sign-pattern Q for the toy design: units {1,3} against {2,4}.
    QMatrix q = q_from_signs({1, -1, 1, -1});
    Worst w;
    std::mt19937_64 rng(103);
    for (int rep = 0; rep < 100; ++rep) {
        auto po = testing::po(oracle::random_table(4, rng, false));
        for (const auto& s : d.support()) {
            auto obs = reveal(po, s.w);
            double scale = 0;
            for (double y : obs.y) scale += y * y / 16;
            double a = v_sub(d, obs, g).value, b = estimate_decomposition(d, obs, q).value;
            w.add(std::abs(a - b) / std::max(scale, 1e-300));
        }
    }
    // Weighted variant: only the first observed outcome is nonzero, so the estimate is its
    // squared coefficient.
    Design wd = testing::weighted_toy();
    auto wg = full_substitute_map(wd, SubstituteMode::equal_size);
    auto unit = [&](const char* s) {
        return v_sub(wd, ObservedData{AssignmentVector::from_string(s), {1, 0, 0, 0}, {}, {}}, wg).value;
    };
    double c1001 = unit("1001"), c1100 = unit("1100");
    bool coef_ok = std::abs(c1001 - 0.5) < 1e-12 && std::abs(c1100 - 0.25) > 1e-6;
    return {w.value < 1e-10 && coef_ok,
            fmt("max residual %.2e", w.value) + fmt(", weighted coefficient %.4g at 1001", c1001) +
                fmt(", %.4g at 1100", c1100)};
}

Outcome contrast_conservative_and_sharp() {
    double worst_neg = INFINITY;
    Worst sharp;
    std::mt19937_64 rng(104);
    for (const auto& od : {testing::toy_oracle(), oracle::crd(8, 4)}) {
        Design d = od.w.size() == 4 ? testing::toy() : build_crd(8, 4);
        auto g = label_closed_part(full_substitute_map(d, SubstituteMode::equal_size));
        auto f = [&](const ObservedData& o) { return v_sub(d, o, g).value; };
        for (int rep = 0; rep < 200; ++rep) {
            auto t = oracle::random_table(d.n(), rng, false);
            double truth = oracle::var_ht(od, t.y0, t.y1);
            worst_neg = std::min(worst_neg, (estimator_expectation(d, testing::po(t), f) - truth) / truth);
        }
        for (int rep = 0; rep < 20; ++rep) {
            auto t = oracle::random_table(d.n(), rng, true);
            sharp.add(rel(estimator_expectation(d, testing::po(t), f), oracle::var_ht(od, t.y0, t.y1)));
        }
    }
    return {worst_neg >= -1e-10 && sharp.value < 1e-10,
            fmt("min relative bias %.2e", worst_neg) + fmt(", homogeneous residual %.2e", sharp.value)};
}

Outcome fixed_beta_bias_constant() {
    Worst w;
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        auto od = oracle::crd(n, n / 2);
        for (int rep = 0; rep < 20; ++rep) {
            auto t = oracle::random_table(n, rng, true);
            double beta = u(rng);
            double e = estimator_expectation(d, testing::po(t), [&](const ObservedData& o) {
                return v_imputation(d, o, GammaSpec::fixed(beta)).value;
            });
            double tau = oracle::tau(t.y0, t.y1);
            w.add(rel(e - oracle::var_ht(od, t.y0, t.y1), (tau - beta) * (tau - beta) / (n - 1)));
        }
    }
    return {w.value < 1e-10, fmt("max residual %.2e", w.value)};
}

Outcome tau_hat_imputation_scaled_neyman() {
    Worst w;
    std::mt19937_64 rng(106);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        for (int rep = 0; rep < 5; ++rep) {
            auto po = testing::po(oracle::random_table(n, rng, false));
            for (const auto& s : d.support()) {
                auto obs = reveal(po, s.w);
                w.add(rel(v_imputation(d, obs, GammaSpec::tau_hat()).value,
                          oracle::neyman(testing::bits(s.w), obs.y) * (n - 2.0) / (n - 1)));
            }
        }
    }
    return {w.value < 1e-10, fmt("max residual %.2e", w.value)};
}

Outcome theta_loo_scaled_variance() {
    Worst w;
    std::mt19937_64 rng(107);
    for (int n : {4, 6, 8}) {
        Design d = build_crd(n, n / 2);
        auto od = oracle::crd(n, n / 2);
        for (int rep = 0; rep < 10; ++rep) {
            auto t = oracle::random_table(n, rng, true);
            double e = estimator_expectation(d, testing::po(t), [&](const ObservedData& o) {
                return v_imputation(d, o, GammaSpec::theta_loo()).value;
            });
            w.add(rel(e, oracle::var_ht(od, t.y0, t.y1) * (n - 1.0) / (n - 2)));
        }
    }
    return {w.value < 1e-10, fmt("max residual %.2e", w.value)};
}

// All 6-unit vectors with 2 to 4 treated units, unevenly weighted.
Design skewed_measurable_design() {
    std::vector<AssignmentVector> s;
    std::vector<double> p;
    double total = 0;
    for (std::uint64_t b = 0; b < 64; ++b) {
        int k = std::popcount(b);
        if (k < 2 || k > 4) continue;
        s.emplace_back(6, b);
        p.push_back(1.0 + static_cast<double>((b * 31) % 7) + (b & 2 ? 3.0 : 0.0));
        total += p.back();
    }
    for (auto& v : p) v /= total;
    return build_explicit(s, p);
}

Outcome imputed_c_unbiased() {
    Design d = skewed_measurable_design();
    const auto& pi = d.propensities();
    double spread = *std::max_element(pi.begin(), pi.end()) - *std::min_element(pi.begin(), pi.end());
    Worst w;
    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int rep = 0; rep < 50; ++rep) {
        auto po = testing::po(oracle::random_table(6, rng, false));
        auto c = c_vector(po, pi);
        std::vector<double> fixed(6);
        for (auto& g : fixed) g = u(rng);
        std::vector<std::vector<double>> e(3, std::vector<double>(6, 0.0));
        for (const auto& s : d.support()) {
            auto obs = reveal(po, s.w);
            const std::vector<double> gammas[3] = {gamma_vector(GammaSpec::theta_loo(), obs, d),
                                                   gamma_vector(GammaSpec::tau_loo(), obs, d), fixed};
            for (int k = 0; k < 3; ++k) {
                auto ch = impute_c(obs, pi, gammas[k]);
                for (std::size_t i = 0; i < 6; ++i) e[k][i] += s.p * ch[i];
            }
        }
        for (const auto& ek : e)
            for (std::size_t i = 0; i < 6; ++i) w.add(rel(ek[i], c[i]));
    }
    bool measurable = check_assumptions(d).measurable == Check::yes;
    return {w.value < 1e-9 && measurable && spread > 0.01,
            fmt("max residual %.2e", w.value) + fmt(", propensity spread %.3f", spread)};
}

Outcome fixed_total_weight_decomposition() {
    Design d = build_crd(6, 4);
    auto od = oracle::crd(6, 4);
    Worst ident;
    double worst_mean = 0;
    std::mt19937_64 rng(109);
    for (int rep = 0; rep < 10; ++rep) {
        auto t = oracle::random_table(6, rng, true);
        auto po = testing::po(t);
        double beta = std::uniform_real_distribution<double>(-5, 5)(rng);
        double truth = oracle::var_ht(od, t.y0, t.y1);
        double ea2 = 0, scale = 0;
        for (const auto& s : d.support()) {
            auto terms = imputation_bias_terms(d, po, s.w, beta);
            ident.add(rel(terms.psi_c_hat, truth + terms.a1 + terms.a2));
            ea2 += s.p * terms.a2;
            scale += s.p * std::abs(terms.a2);
        }
        worst_mean = std::max(worst_mean, std::abs(ea2) / std::max(scale, 1.0));
    }
    return {ident.value < 1e-9 && worst_mean < 1e-9,
            fmt("identity residual %.2e", ident.value) + fmt(", |E[A2]| %.2e", worst_mean)};
}

Outcome epsem_mse_unbiased() {
    Worst w;
    std::mt19937_64 rng(110);
    for (auto [n, nt] : {std::pair{8, 4}, std::pair{16, 4}}) {
        Design d = build_crd(n, nt);
        auto g = full_substitute_map(d, SubstituteMode::epsem);
        for (int rep = 0; rep < 3; ++rep) {
            auto po = testing::po(oracle::random_table(n, rng, true));
            double e = estimator_expectation(d, po, [&](const ObservedData& o) { return mse_sub_epsem(d, o, g).value; });
            w.add(rel(e, true_mse_hajek(d, po)));
        }
    }
    bool refused = false;
    std::string msg;
    try {
        full_substitute_map(build_crd(8, 2), SubstituteMode::epsem);
    } catch (const SubstitutionUndefined& e) {
        refused = true;
        msg = e.what();
    }
    refused = refused && msg.find("substitution undefined") != std::string::npos;
    return {w.value < 1e-9 && refused,
            fmt("max residual %.2e", w.value) + (refused ? ", N=8 N_t=2 refused" : ", N=8 N_t=2 NOT refused")};
}

Outcome monte_carlo_fidelity() {
    Design d = testing::toy();
    std::mt19937_64 rng(111);
    auto po = testing::po(oracle::random_table(4, rng, false));
    auto obs = reveal(po, AssignmentVector::from_string("1001"));
    auto spec = GammaSpec::tau_hat();
    double exact = v_imputation(d, obs, spec).value;
    int hits = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
        auto mc = v_imputation_mc(d, obs, spec, 100'000, derive_seed(111, run));
        if (std::abs(mc.value - exact) <= 3 * mc.std_error) ++hits;
    }
    return {hits >= 95, std::to_string(hits) + "/100 runs within 3 standard errors"};
}

Outcome small_crd_patterns() {
    auto t0 = Clock::now();
    auto res = run_studies("small_crd", small_crd_scenarios(100, 2024));
    double secs = seconds_since(t0);
    struct Row {
        int n, nt;
        bool homogeneous;
    };
    const Row rows[] = {{6, 3, true}, {6, 3, false}, {6, 4, true}, {8, 4, true}, {8, 4, false}, {8, 5, true}};
    auto row_of = [&](const std::string& scen) { return rows[std::stoi(scen.substr(8)) - 1]; };

    Worst constant;          // (a) equal groups: exactly 1/(N-2)
    Worst flat;              // (a) unequal groups: constant across replications
    bool negative = true;    // (b)
    Worst same;              // (c)
    double lowest = INFINITY;  // (d)
    std::vector<double> first_unequal(7, NAN);
    std::vector<const SimRecord*> theta(res.records.size(), nullptr);
    for (std::size_t k = 0; k < res.records.size(); ++k) {
        const auto& r = res.records[k];
        Row row = row_of(r.scenario);
        int idx = std::stoi(r.scenario.substr(8));
        if (r.estimator == "gamma_theta_loo" && row.homogeneous) {
            if (2 * row.nt == row.n) {
                constant.add(std::abs(r.relative_bias - 1.0 / (row.n - 2)) * (row.n - 2));
            } else {
                if (std::isnan(first_unequal[idx])) first_unequal[idx] = r.relative_bias;
                flat.add(rel(r.relative_bias, first_unequal[idx]));
            }
        }
        if (r.estimator == "gamma_tau_hat" && (idx == 1 || idx == 4) && !(r.relative_bias < 0)) negative = false;
        if (r.estimator != "gamma_tau_hat") lowest = std::min(lowest, r.relative_bias);
    }
    for (const auto& a : res.records) {
        if (a.estimator != "gamma_tau_loo" || 2 * row_of(a.scenario).nt != row_of(a.scenario).n) continue;
        for (const auto& b : res.records)
            if (b.estimator == "gamma_theta_loo" && b.scenario == a.scenario && b.replication == a.replication)
                same.add(rel(a.relative_bias, b.relative_bias));
    }
    bool pass = constant.value < 1e-10 && flat.value < 1e-10 && negative && same.value < 1e-10 && lowest >= -1e-9 &&
                secs < 600 && res.records.size() == 6 * 100 * 4;
    return {pass, fmt("(a) %.1e", constant.value) + fmt("/%.1e", flat.value) + (negative ? " (b) ok" : " (b) FAILED") +
                      fmt(" (c) %.1e", same.value) + fmt(" (d) min %.2e", lowest) + fmt(", %.2f s", secs)};
}

Outcome simulation_studies() {
    auto found = find_study_a_design(7);
    const Design& d = found.design;
    bool nonmeasurable = d.enumerable() && d.pairwise_value(0, 1, 1, 1) == 0.0 && d.support_size() < 924;
    auto a = run_studies("study_a", study_a_scenarios(20, 7));
    double lowest = INFINITY;
    std::size_t checked = 0;
    for (const auto& r : a.records)
        if (r.estimator == "am" || r.estimator == "gamma_theta_loo") lowest = std::min(lowest, r.relative_bias), ++checked;

    auto dir = std::filesystem::temp_directory_path() / "neyman_acceptance_study_b";
    std::filesystem::remove_all(dir);
    auto b = run_studies("study_b", study_b_scenarios(2, 7, 500));
    emit_outputs(b, dir);
    bool files = std::filesystem::file_size(dir / "results.csv") > 0 && std::filesystem::exists(dir / "boxplot.svg") &&
                 std::filesystem::exists(dir / "summary.json");
    std::filesystem::remove_all(dir);
    return {nonmeasurable && checked == 20 * 4 * 2 && lowest >= -1e-9 && files,
            "study A support " + std::to_string(d.support_size()) + " of 924, " +
                (nonmeasurable ? "Pr(W1=1,W2=1)=0" : "measurable") + fmt(", min relative bias %.2e", lowest) +
                (files ? "; study B outputs written" : "; study B outputs MISSING")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"contrast estimator equals the Neyman estimator on CRD(N,N/2), N=4,8,12", contrast_equals_neyman_crd},
        {"contrast estimator equals the matched-pair estimator, N=4,8", contrast_equals_pair_estimator},
        {"toy design: contrast equals the sign-pattern decomposition; weighted toy coefficient", toy_contrast_is_a_decomposition},
        {"label-closed contrast estimator is conservative, sharp under homogeneity", contrast_conservative_and_sharp},
        {"fixed-beta imputation bias is (tau-beta)^2/(N-1) on CRD(N,N/2)", fixed_beta_bias_constant},
        {"tau-hat imputation equals Neyman*(N-2)/(N-1)", tau_hat_imputation_scaled_neyman},
        {"theta-loo imputation expectation is Var*(N-1)/(N-2) under homogeneity", theta_loo_scaled_variance},
        {"imputed c is unbiased for theta-loo, tau-loo and fixed gamma", imputed_c_unbiased},
        {"CRD(6,4): psi(c_hat) = Var + A1 + A2 and E[A2] = 0", fixed_total_weight_decomposition},
        {"epsem contrast estimator is unbiased for the Hajek MSE; k-integrality enforced", epsem_mse_unbiased},
        {"Monte Carlo imputation matches the exact value within 3 SE", monte_carlo_fidelity},
        {"small-CRD simulation sign patterns", small_crd_patterns},
        {"rerandomized studies: nonnegative bias on a non-measurable design; outputs", simulation_studies},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
