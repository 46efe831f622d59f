#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "neyman/design.hpp"
#include "neyman/outcomes.hpp"

namespace neyman {

enum class EstimatorKind { neyman, decomposition, contrast, pair, mse_epsem, imputation, am };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_kind_from_string(std::string s);  // accepts - or _ separators

struct VarianceEstimate {
    double value = 0.0;
    EstimatorKind kind = EstimatorKind::neyman;
    bool exact = true;
    std::uint64_t mc_draws = 0;  // Monte Carlo only
    double std_error = 0.0;      // Monte Carlo only
    bool negative = false;       // set when an unbiased estimator returned a value below zero
    nlohmann::json params = nlohmann::json::object();
};

nlohmann::json to_json(const VarianceEstimate& v);
VarianceEstimate variance_estimate_from_json(const nlohmann::json& j);

double horvitz_thompson(const ObservedData& obs, std::span<const double> pi);
double hajek(const ObservedData& obs, std::span<const double> pi);
double difference_in_means(const ObservedData& obs);

// c_i = (1 - pi_i) Y_i(1) + pi_i Y_i(0)
std::vector<double> c_vector(const PotentialOutcomes& po, std::span<const double> pi);

// psi(v) = (1/N^2) sum_w p_w (sum_{w_i=1} v_i/pi_i - sum_{w_i=0} v_i/(1-pi_i))^2, by enumeration.
double psi(const Design& d, std::span<const double> v);

// Sampled psi for designs without an enumerable support; returns value and standard error.
ProbabilityEstimate psi_mc(const Design& d, std::span<const double> v, std::uint64_t draws, std::uint64_t seed);

// psi as the quadratic form v' M v with M built from the exact pairwise table. Cheap to
// evaluate repeatedly and usable for sampler-backed CRD and matched-pair designs.
class PsiForm {
public:
    explicit PsiForm(const Design& d);
    double operator()(std::span<const double> v) const;
    const Eigen::MatrixXd& matrix() const { return m_; }

private:
    Eigen::MatrixXd m_;
};

// Var_d(tau_hat) computed as psi(c).
double true_variance(const Design& d, const PotentialOutcomes& po);
// Var_d(tau_hat) computed as sum_w p_w (tau_hat(w) - tau)^2.
double true_variance_direct(const Design& d, const PotentialOutcomes& po);

using VarianceFunctional = std::function<double(const ObservedData&)>;

// sum_w p_w est(reveal(po, w)); failures carry the offending w.
double estimator_expectation(const Design& d, const PotentialOutcomes& po, const VarianceFunctional& est);

VarianceEstimate neyman_variance(const ObservedData& obs);
VarianceEstimate neyman_variance(const ObservedData& obs, int n_t, int n_c);

double true_mse_hajek(const Design& d, const PotentialOutcomes& po);

}  // namespace neyman
