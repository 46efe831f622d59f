#pragma once

#include "neyman/assignment.hpp"

namespace neyman {

// equal_size: anchor splits N/2 : N/2 and N is a multiple of four.
// epsem: k = N_t(w)^2 / N must be an integer.
enum class SubstituteMode { equal_size, epsem };

// How many of the anchor's treated units and of its control units a substitute must treat.
struct SubstituteCounts {
    int from_treated = 0;
    int from_control = 0;
};

// Throws SubstitutionUndefined when the mode's divisibility precondition fails at w.
SubstituteCounts substitute_counts(const AssignmentVector& w, SubstituteMode mode);

bool is_substitute(const AssignmentVector& w, const AssignmentVector& cand, SubstituteMode mode);

}  // namespace neyman
