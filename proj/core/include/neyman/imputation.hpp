#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neyman/design.hpp"
#include "neyman/estimators.hpp"
#include "neyman/outcomes.hpp"

namespace neyman {

inline constexpr std::uint64_t kDefaultMcDraws = 100'000;

struct GammaSpec {
    enum class Kind { fixed, tau_hat, tau_loo, theta_loo };
    Kind kind = Kind::fixed;
    std::vector<double> values{0.0};  // fixed: one value broadcast, or one per unit

    static GammaSpec fixed(double v) { return {Kind::fixed, {v}}; }
    static GammaSpec fixed(std::vector<double> v) { return {Kind::fixed, std::move(v)}; }
    static GammaSpec tau_hat() { return {Kind::tau_hat, {}}; }
    static GammaSpec tau_loo() { return {Kind::tau_loo, {}}; }
    static GammaSpec theta_loo() { return {Kind::theta_loo, {}}; }

    // "fixed:<v>", "tau-hat", "tau-loo", "theta-loo"
    static GammaSpec parse(const std::string& s);
    std::string to_string() const;
};

// Fills the missing potential outcome as if unit i's effect were beta_i.
PotentialOutcomes impute_potential_outcomes(const ObservedData& obs, std::span<const double> beta);

// (1/N) sum W Y (1-pi)/pi^2 - (1/N) sum (1-W) Y pi/(1-pi)^2
double theta_ht(const ObservedData& obs, std::span<const double> pi);

// Leave-one-out estimates reweighted by Pr(W_j = 1 | W_i). A term whose indicator is
// almost surely zero given W_i contributes nothing.
double theta_loo(const Design& d, const ObservedData& obs, int i);
double tau_loo(const Design& d, const ObservedData& obs, int i);

std::vector<double> gamma_vector(const GammaSpec& spec, const ObservedData& obs, const Design& d);

std::vector<double> impute_c(const ObservedData& obs, std::span<const double> pi, std::span<const double> gamma);

// The beta whose imputed potential outcomes reproduce impute_c's c-hat.
std::vector<double> implicit_beta(const ObservedData& obs, std::span<const double> pi, std::span<const double> gamma);

// psi(c-hat). Uses exact enumeration, or the exact pairwise quadratic form when the
// design is sampler-backed with closed-form pairwise probabilities.
VarianceEstimate v_imputation(const Design& d, const ObservedData& obs, const GammaSpec& spec);
// Same value through a precomputed quadratic form.
VarianceEstimate v_imputation(const Design& d, const ObservedData& obs, const GammaSpec& spec, const PsiForm& form);

// Sample variance (divisor M-1) of tau_hat over M draws from d applied to the imputed
// science table. Standard error is the jackknife SE of that sample variance.
VarianceEstimate v_imputation_mc(const Design& d, const ObservedData& obs, const GammaSpec& spec, std::uint64_t m,
                                 std::uint64_t seed);

struct SampleVariance {
    double variance = 0.0;
    double std_error = 0.0;
};
SampleVariance sample_variance_with_jackknife(std::span<const double> x);

// Terms of psi(c-hat_beta) = Var + A1 + A2 for a homogeneous science table, realized W and
// constant imputed effect beta. A1 and A2 are evaluated from their own displays.
struct ImputationBiasTerms {
    double psi_c = 0.0;
    double psi_c_hat = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
};
ImputationBiasTerms imputation_bias_terms(const Design& d, const PotentialOutcomes& po, const AssignmentVector& w,
                                          double beta);

}  // namespace neyman
