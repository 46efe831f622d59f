#pragma once

#include <bit>
#include <random>
#include <string>
#include <vector>

#include "neyman/design.hpp"
#include "neyman/outcomes.hpp"
#include "oracle.hpp"

namespace testing {

inline neyman::Design toy() {
    using neyman::AssignmentVector;
    return neyman::build_explicit({AssignmentVector::from_string("1100"), AssignmentVector::from_string("0011"),
                                   AssignmentVector::from_string("1001"), AssignmentVector::from_string("0110")},
                                  {0.25, 0.25, 0.25, 0.25});
}

inline neyman::Design weighted_toy() {
    using neyman::AssignmentVector;
    return neyman::build_explicit({AssignmentVector::from_string("1100"), AssignmentVector::from_string("0011"),
                                   AssignmentVector::from_string("1001"), AssignmentVector::from_string("0110")},
                                  {1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6});
}

inline oracle::Design toy_oracle() {
    return oracle::explicit_design({"1100", "0011", "1001", "0110"}, {0.25, 0.25, 0.25, 0.25});
}

// Non-uniform 6-unit design with unequal group sizes and unequal propensities.
inline std::vector<std::string> skewed_support() {
    return {"110000", "101100", "011010", "100011", "010101", "001110", "111001", "000111", "100100"};
}
inline std::vector<double> skewed_probs() { return {0.2, 0.05, 0.1, 0.15, 0.1, 0.08, 0.12, 0.1, 0.1}; }

inline neyman::Design skewed() {
    std::vector<neyman::AssignmentVector> s;
    for (const auto& b : skewed_support()) s.push_back(neyman::AssignmentVector::from_string(b));
    return neyman::build_explicit(s, skewed_probs());
}

// Measurable 6-unit design over every vector with 2, 3 or 4 treated units, with uneven weights
// so that propensities differ across units.
inline neyman::Design measurable_skewed() {
    std::vector<neyman::AssignmentVector> s;
    std::vector<double> p;
    double total = 0;
    for (std::uint64_t b = 0; b < 64; ++b) {
        int k = std::popcount(b);
        if (k < 2 || k > 4) continue;
        s.emplace_back(6, b);
        double wgt = 1.0 + static_cast<double>((b * 7919) % 13) + (b & 1 ? 4.0 : 0.0);
        p.push_back(wgt);
        total += wgt;
    }
    for (auto& v : p) v /= total;
    return neyman::build_explicit(s, p);
}

inline neyman::PotentialOutcomes po(const oracle::Table& t) { return {t.y0, t.y1}; }

inline oracle::Bits bits(const neyman::AssignmentVector& w) {
    oracle::Bits b;
    for (int i = 0; i < w.size(); ++i) b.push_back(w[i]);
    return b;
}

inline double rel(double a, double b) {
    double s = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / s;
}

}  // namespace testing
