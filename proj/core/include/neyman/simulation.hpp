#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neyman/design.hpp"
#include "neyman/estimators.hpp"
#include "neyman/outcomes.hpp"

namespace neyman {

// (X1,X2,X3) ~ N3(0, [[2,1,-1],[1,1,-0.5],[-1,-0.5,1]]), X4 ~ U(-3,3), X5 ~ chi2_1, X6 ~ Bern(0.5).
Covariates gen_covariates_hainmueller(int n, std::uint64_t seed);

// Units 1 and 2 ~ N(10,1), the rest ~ N(0,1).
std::vector<double> gen_covariate_study_a(int n, std::uint64_t seed);

struct OutcomeModel {
    enum class Kind { no_effect, constant_fixed, constant_random, heterogeneous };
    Kind kind = Kind::no_effect;
    double delta = 5.0;  // constant_fixed
    double lo = -5.0;    // effect range for constant_random and heterogeneous
    double hi = 5.0;

    static OutcomeModel no_effect() { return {Kind::no_effect}; }
    static OutcomeModel constant_fixed(double d) { return {Kind::constant_fixed, d}; }
    static OutcomeModel constant_random(double lo, double hi) { return {Kind::constant_random, 5.0, lo, hi}; }
    static OutcomeModel heterogeneous(double lo, double hi) { return {Kind::heterogeneous, 5.0, lo, hi}; }

    std::string name() const;
    nlohmann::json to_json() const;
    static OutcomeModel from_json(const nlohmann::json& j);
};

// Y(0) iid U(0,10); Y(1) from the model.
PotentialOutcomes gen_outcomes(const OutcomeModel& model, int n, std::uint64_t seed);

// Horvitz-Thompson estimate of the general decomposition with the default CRD Q, where every
// product term whose pairwise cell has probability zero is replaced by its Young bound
// x*y <= (x^2 + y^2)/2 and the squares are estimated from the observed units.
class AmEstimator {
public:
    explicit AmEstimator(const Design& d);
    double operator()(const ObservedData& obs) const;

private:
    int n_ = 0;
    std::vector<double> square_;  // [i*2 + w]: weight on Y_i^2 when W_i = w
    std::vector<double> cross_;   // [(i*n + j)*4 + cell]: weight on Y_i Y_j
};

VarianceEstimate v_am(const Design& d, const ObservedData& obs);

enum class SimEstimator { gamma_zero, gamma_tau_hat, gamma_tau_loo, gamma_theta_loo, am, neyman };

std::string to_string(SimEstimator e);
SimEstimator sim_estimator_from_string(const std::string& s);

struct ScenarioSpec {
    std::string name;
    nlohmann::json design;  // design-file JSON
    OutcomeModel outcome_model;
    int n_replications = 100;
    std::uint64_t n_inner_draws = 20'000;  // used when the design is not enumerable
    std::uint64_t seed = 0;
    std::vector<SimEstimator> estimators;

    nlohmann::json to_json() const;
    static ScenarioSpec from_json(const nlohmann::json& j);
};

struct SimRecord {
    std::string scenario;
    int replication = 0;
    std::string estimator;
    double true_variance = 0.0;
    double expectation = 0.0;
    double relative_bias = 0.0;
    double sd = 0.0;
    double mc_se = 0.0;  // standard error of the relative bias when E_d is a Monte Carlo estimate
};

struct SimResult {
    std::string study;
    std::vector<std::string> scenarios;
    std::vector<std::string> estimators;
    std::vector<SimRecord> records;
    std::map<std::string, int> undefined;  // scenario -> replications with zero true variance
    nlohmann::json meta = nlohmann::json::object();
};

SimResult run_study(const ScenarioSpec& spec);
SimResult run_studies(const std::string& study, const std::vector<ScenarioSpec>& specs);

struct StudyADesign {
    Design design;
    std::vector<double> covariate;
    std::uint64_t covariate_seed = 0;
    int attempt = 0;
};

// First of `attempts` seeded covariate draws whose ASMD < 0.2 rerandomized CRD(12,6) makes
// Pr(W_1 = 1, W_2 = 1) = 0. Throws if none does.
StudyADesign find_study_a_design(std::uint64_t seed, int attempts = 20);

std::vector<ScenarioSpec> study_a_scenarios(int reps, std::uint64_t seed);
std::vector<ScenarioSpec> study_b_scenarios(int reps, std::uint64_t seed, std::uint64_t inner_draws = 20'000);
std::vector<ScenarioSpec> small_crd_scenarios(int reps, std::uint64_t seed);

// results.csv, summary.json and boxplot.svg at the top level and per scenario.
void emit_outputs(const SimResult& res, const std::filesystem::path& dir);

std::string results_csv(const std::vector<SimRecord>& records);
nlohmann::json summary_json(const SimResult& res);

}  // namespace neyman
