#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "neyman/design.hpp"
#include "neyman/estimators.hpp"
#include "neyman/numeric.hpp"
#include "neyman/outcomes.hpp"

namespace neyman {

using QMatrix = Eigen::MatrixXd;

struct QValidationReport {
    bool square = true;
    bool symmetric = true;
    bool psd = true;
    bool diagonal = true;  // q_ii = 1/N^2
    bool row_sums = true;  // every row sums to 0
    double min_eigenvalue = 0.0;
    std::vector<std::string> witnesses;

    bool ok() const { return square && symmetric && psd && diagonal && row_sums; }
};

QValidationReport validate_q(const QMatrix& q, const Tolerances& tol = {});

// (I - J/N) / (N(N-1)).
QMatrix default_q_crd(int n);

// s s' / N^2 for a balanced sign vector s (as many +1 as -1), so every row sums to zero.
QMatrix q_from_signs(const std::vector<int>& signs);

// The population functional: Var_d(tau_hat) + (y1 - y0)' Q (y1 - y0).
double v_tilde(const Design& d, const PotentialOutcomes& po, const QMatrix& q);

struct QCellViolation {
    int i = 0;
    int j = 0;
    int wi = 0;
    int wj = 0;
    double coefficient = 0.0;
};

struct QFeasibilityReport {
    bool feasible = true;
    std::vector<QCellViolation> violations;
};

// Every zero-probability pairwise cell must carry a zero coefficient.
QFeasibilityReport q_feasible_for_design(const Design& d, const QMatrix& q, double tol = 1e-12);

// Horvitz-Thompson-type unbiased estimate of v_tilde. Can be negative; the flag is set then.
VarianceEstimate estimate_decomposition(const Design& d, const ObservedData& obs, const QMatrix& q);

}  // namespace neyman
