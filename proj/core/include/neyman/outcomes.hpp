#pragma once

#include <optional>
#include <vector>

#include "neyman/assignment.hpp"
#include "neyman/design.hpp"

namespace neyman {

// Science table: both potential outcomes for every unit.
struct PotentialOutcomes {
    std::vector<double> y0;
    std::vector<double> y1;

    int n() const { return static_cast<int>(y0.size()); }
    double tau() const;
    std::vector<double> effects() const;
    bool homogeneous(double tol = 1e-12) const;
    void validate() const;
};

// S^2_1, S^2_0 and S^2_10 with (N-1) denominators.
struct OutcomeSummaries {
    double s2_1 = 0;
    double s2_0 = 0;
    double s2_10 = 0;
};

OutcomeSummaries summarize(const PotentialOutcomes& po);

struct ObservedData {
    AssignmentVector w;
    std::vector<double> y;
    UnitPairs pairs;  // optional pair labels, 0-based
    std::optional<Covariates> covariates;

    int n() const { return w.size(); }
    void validate() const;
};

// The only place observed data is built from a science table.
ObservedData reveal(const PotentialOutcomes& po, const AssignmentVector& w);

}  // namespace neyman
