#include "neyman/decomposition.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "neyman/errors.hpp"

namespace neyman {

namespace {

// Cell coefficient of y_i(wi) y_j(wj) in v_tilde, before the sign.
double cell_coefficient(double p, double fi, double fj, double q, double n2) {
    return p / (n2 * fi * fj) + q - 1.0 / n2;
}

double arm_prob(double pi, int w) { return w == 1 ? pi : 1.0 - pi; }
double cell_sign(int wi, int wj) { return wi == wj ? 1.0 : -1.0; }

void check_q_shape(const Design& d, const QMatrix& q) {
    if (q.rows() != d.n() || q.cols() != d.n())
        throw ValidationError("Q must be " + std::to_string(d.n()) + "x" + std::to_string(d.n()));
}

}  // namespace

QValidationReport validate_q(const QMatrix& q, const Tolerances& tol) {
    QValidationReport r;
    if (q.rows() != q.cols() || q.rows() == 0) {
        r.square = r.symmetric = r.psd = r.diagonal = r.row_sums = false;
        r.witnesses.push_back("matrix is not square");
        return r;
    }
    const auto n = q.rows();
    const double target = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(q(i, j) - q(j, i)) > tol.probability) {
                if (r.symmetric) r.witnesses.push_back("asymmetric at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
                r.symmetric = false;
            }
        if (std::abs(q(i, i) - target) > tol.probability) {
            if (r.diagonal) r.witnesses.push_back("q_" + std::to_string(i + 1) + std::to_string(i + 1) + " != 1/N^2");
            r.diagonal = false;
        }
        double rs = q.row(i).sum();
        if (std::abs(rs) > tol.probability) {
            std::ostringstream os;
            os << "row " << i + 1 << " sums to " << rs;
            r.witnesses.push_back(os.str());
            r.row_sums = false;
        }
    }
    Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    if (r.min_eigenvalue < -1e-10) {
        std::ostringstream os;
        os << "minimum eigenvalue " << r.min_eigenvalue;
        r.witnesses.push_back(os.str());
        r.psd = false;
    }
    return r;
}

QMatrix default_q_crd(int n) {
    if (n < 2) throw ValidationError("default CRD Q needs N >= 2");
    double N = n;
    QMatrix q = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / N);
    return q / (N * (N - 1));
}

QMatrix q_from_signs(const std::vector<int>& signs) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(signs.size()));
    for (std::size_t i = 0; i < signs.size(); ++i) {
        if (signs[i] != 1 && signs[i] != -1) throw ValidationError("signs must be +1 or -1");
        s(static_cast<Eigen::Index>(i)) = signs[i];
    }
    if (s.sum() != 0.0) throw ValidationError("sign pattern must be balanced so that every row of Q sums to zero");
    double n = static_cast<double>(signs.size());
    return s * s.transpose() / (n * n);
}

double v_tilde(const Design& d, const PotentialOutcomes& po, const QMatrix& q) {
    po.validate();
    check_q_shape(d, q);
    if (po.n() != d.n()) throw ValidationError("science table does not match design size");
    const int n = d.n();
    const double n2 = static_cast<double>(n) * n;
    const auto& pi = d.propensities();
    auto y = [&](int i, int w) { return w == 1 ? po.y1[static_cast<std::size_t>(i)] : po.y0[static_cast<std::size_t>(i)]; };
    CompensatedSum s;
    for (int i = 0; i < n; ++i) {
        double p = pi[static_cast<std::size_t>(i)];
        s.add((y(i, 1) * y(i, 1) / p + y(i, 0) * y(i, 0) / (1.0 - p)) / n2);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int c = 0; c < 4; ++c) {
                int wi = c / 2, wj = c % 2;
                double coef = cell_coefficient(d.pairwise_value(i, j, wi, wj), arm_prob(pi[static_cast<std::size_t>(i)], wi),
                                               arm_prob(pi[static_cast<std::size_t>(j)], wj), q(i, j), n2);
                s.add(2.0 * cell_sign(wi, wj) * coef * y(i, wi) * y(j, wj));
            }
    return s.value();
}

QFeasibilityReport q_feasible_for_design(const Design& d, const QMatrix& q, double tol) {
    check_q_shape(d, q);
    const int n = d.n();
    const double n2 = static_cast<double>(n) * n;
    QFeasibilityReport r;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int c = 0; c < 4; ++c) {
                int wi = c / 2, wj = c % 2;
                if (d.pairwise_value(i, j, wi, wj) > 0.0) continue;
                double coef = q(i, j) - 1.0 / n2;
                if (std::abs(coef) > tol) {
                    r.feasible = false;
                    r.violations.push_back({i, j, wi, wj, coef});
                }
            }
    return r;
}

VarianceEstimate estimate_decomposition(const Design& d, const ObservedData& obs, const QMatrix& q) {
    obs.validate();
    check_q_shape(d, q);
    if (obs.n() != d.n()) throw ValidationError("observed data does not match design size");
    auto feas = q_feasible_for_design(d, q);
    if (!feas.feasible) {
        const auto& v = feas.violations.front();
        std::ostringstream os;
        os << "infeasible Q for this design: Pr(W_" << v.i + 1 << "=" << v.wi << ", W_" << v.j + 1 << "=" << v.wj
           << ") = 0 but its coefficient is " << v.coefficient;
        throw InfeasibleQ(os.str());
    }
    const int n = d.n();
    const double n2 = static_cast<double>(n) * n;
    const auto& pi = d.propensities();
    CompensatedSum s;
    for (int i = 0; i < n; ++i) {
        int wi = obs.w[i];
        double f = arm_prob(pi[static_cast<std::size_t>(i)], wi);
        double yi = obs.y[static_cast<std::size_t>(i)];
        s.add(yi * yi / (f * f) / n2);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            int wi = obs.w[i], wj = obs.w[j];
            double p = d.pairwise_value(i, j, wi, wj);
            double coef = cell_coefficient(p, arm_prob(pi[static_cast<std::size_t>(i)], wi),
                                           arm_prob(pi[static_cast<std::size_t>(j)], wj), q(i, j), n2);
            if (p <= 0.0) throw InfeasibleQ("realized assignment has a zero-probability pairwise cell");
            s.add(2.0 * cell_sign(wi, wj) * coef * obs.y[static_cast<std::size_t>(i)] * obs.y[static_cast<std::size_t>(j)] / p);
        }
    VarianceEstimate out;
    out.kind = EstimatorKind::decomposition;
    out.value = s.value();
    out.negative = out.value < 0.0;
    return out;
}

}  // namespace neyman
