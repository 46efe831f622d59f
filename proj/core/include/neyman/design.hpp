#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "neyman/assignment.hpp"

namespace neyman {

using Rng = std::mt19937_64;
using Covariates = Eigen::MatrixXd;  // N rows, one column per covariate
using UnitPairs = std::vector<std::pair<int, int>>;  // 0-based unit indices

inline constexpr std::uint64_t kDefaultEnumerationCap = 5'000'000;

struct SupportEntry {
    AssignmentVector w;
    double p;
};

// A probability that is either exact (std_error == 0) or a Monte Carlo estimate.
struct ProbabilityEstimate {
    double value = 0.0;
    double std_error = 0.0;
    bool exact = true;
};

struct McBudget {
    std::uint64_t draws = 20'000;
    std::uint64_t seed = 0;
};

class Sampler {
public:
    virtual ~Sampler() = default;
    virtual AssignmentVector draw(Rng& rng) const = 0;
};

enum class DesignKind { explicit_support, crd, matched_pair, rerandomized };

std::string to_string(DesignKind k);

// Balance statistic of an assignment given fixed covariates. Smaller is better.
using BalanceCriterion = std::function<double(const Covariates&, const AssignmentVector&)>;

struct BuildOptions {
    std::uint64_t enumeration_cap = kDefaultEnumerationCap;
    bool allow_sampler = true;
};

struct RerandomizeOptions {
    std::uint64_t retry_budget = 1'000'000;  // per draw
    McBudget propensity_budget{};
};

// Immutable randomized design. Copies share state; concurrent reads are safe.
class Design {
public:
    struct Impl;

    int n() const;
    DesignKind kind() const;
    const std::string& description() const;

    bool enumerable() const;
    const std::vector<SupportEntry>& support() const;
    std::size_t support_size() const;
    std::optional<std::size_t> index_of(const AssignmentVector& w) const;
    double probability(const AssignmentVector& w) const;
    bool contains(const AssignmentVector& w) const { return index_of(w).has_value(); }

    const std::vector<double>& propensities() const;
    bool propensities_exact() const;
    ProbabilityEstimate propensity(int i) const;

    bool pairwise_exact() const;
    ProbabilityEstimate pairwise(int i, int j, int wi, int wj) const;
    // Exact value or NotEnumerable.
    double pairwise_value(int i, int j, int wi, int wj) const;
    // Pr(W_j = 1 | W_i = wi), exact or NotEnumerable.
    double conditional_treated(int i, int wi, int j) const;

    AssignmentVector draw(Rng& rng) const;
    std::shared_ptr<const Sampler> sampler() const;

    // Builder metadata.
    std::optional<int> crd_treated() const;
    const UnitPairs& pairs() const;
    const Covariates* covariates() const;

    explicit Design(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    const Impl& impl() const { return *impl_; }

private:
    std::shared_ptr<Impl> impl_;
};

Design build_crd(int n, int n_treated, const BuildOptions& opts = {});
Design build_matched_pair(const UnitPairs& pairs, const BuildOptions& opts = {});
Design build_explicit(const std::vector<AssignmentVector>& support, const std::vector<double>& probs);
Design build_rerandomized(const Design& base, const Covariates& covariates, BalanceCriterion criterion,
                          double threshold, const RerandomizeOptions& opts = {});

// Empirical design: the distinct vectors of a sample weighted by frequency.
Design build_empirical(const std::vector<AssignmentVector>& draws);

AssignmentVector sample_assignment(const Design& d, std::uint64_t seed);
std::vector<AssignmentVector> sample_assignments(const Design& d, std::size_t m, std::uint64_t seed);

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
// Unbiased integer in [0, n).
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

enum class Check { no, yes, unknown };
std::string to_string(Check c);

struct AssumptionReport {
    Check positivity = Check::unknown;
    Check equal_size_constant_propensity = Check::unknown;
    Check epsem = Check::unknown;
    Check measurable = Check::unknown;
    Check closed_under_label_switching = Check::unknown;
    Check substitution = Check::unknown;
    Check fixed_total_weight = Check::unknown;
    std::vector<std::string> details;
};

AssumptionReport check_assumptions(const Design& d);

}  // namespace neyman
