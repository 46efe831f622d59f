#include "neyman/balance.hpp"

#include <cmath>
#include <vector>

#include "neyman/errors.hpp"

namespace neyman {

double asmd(std::span<const double> x, const AssignmentVector& w) {
    const int n = w.size();
    if (static_cast<int>(x.size()) != n) throw ValidationError("covariate length does not match assignment");
    double st = 0, sc = 0;
    int nt = 0, nc = 0;
    for (int i = 0; i < n; ++i) {
        if (w.treated(i)) {
            st += x[static_cast<std::size_t>(i)];
            ++nt;
        } else {
            sc += x[static_cast<std::size_t>(i)];
            ++nc;
        }
    }
    if (nt < 2 || nc < 2) throw UndefinedEstimate("ASMD needs at least two units per group");
    double mt = st / nt, mc = sc / nc;
    double vt = 0, vc = 0;
    for (int i = 0; i < n; ++i) {
        double v = x[static_cast<std::size_t>(i)];
        if (w.treated(i))
            vt += (v - mt) * (v - mt);
        else
            vc += (v - mc) * (v - mc);
    }
    vt /= (nt - 1);
    vc /= (nc - 1);
    double pooled = (vt + vc) / 2.0;
    if (!(pooled > 0.0)) throw UndefinedEstimate("ASMD undefined: zero pooled variance");
    return std::abs(mt - mc) / std::sqrt(pooled);
}

double max_asmd(const Covariates& x, const AssignmentVector& w) {
    double best = 0.0;
    std::vector<double> col(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, k);
        best = std::max(best, asmd(col, w));
    }
    return best;
}

BalanceCriterion asmd_criterion(int column) {
    return [column](const Covariates& x, const AssignmentVector& w) {
        std::vector<double> col(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, column);
        return asmd(col, w);
    };
}

BalanceCriterion max_asmd_criterion() {
    return [](const Covariates& x, const AssignmentVector& w) { return max_asmd(x, w); };
}

}  // namespace neyman
