#pragma once

#include <span>

#include "neyman/design.hpp"

namespace neyman {

// |mean_t - mean_c| / sqrt((s2_t + s2_c) / 2) with (n-1) group variances.
double asmd(std::span<const double> x, const AssignmentVector& w);

// Largest ASMD over the columns of x.
double max_asmd(const Covariates& x, const AssignmentVector& w);

// Balance criteria for build_rerandomized.
BalanceCriterion asmd_criterion(int column = 0);
BalanceCriterion max_asmd_criterion();

}  // namespace neyman
