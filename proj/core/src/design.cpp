#include "neyman/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "neyman/errors.hpp"
#include "neyman/numeric.hpp"
#include "neyman/substitutes.hpp"

namespace neyman {

struct Design::Impl {
    int n = 0;
    DesignKind kind = DesignKind::explicit_support;
    std::string description;

    bool enumerable = false;
    std::vector<SupportEntry> support;
    std::unordered_map<std::uint64_t, std::size_t> index;

    std::shared_ptr<const Sampler> sampler;

    // Exact propensities are filled at construction; implicit designs without a closed
    // form fill them lazily from mc_budget draws.
    mutable std::once_flag pi_once;
    mutable std::vector<double> pi;
    mutable std::vector<double> pi_se;
    bool pi_exact = true;

    std::function<double(int, int, int, int)> analytic_pairwise;
    mutable std::once_flag pair_once;
    mutable std::vector<double> pair_cells;  // ((i*n + j)*4 + 2*wi + wj)
    mutable std::vector<double> pair_se;
    bool pair_exact = true;

    McBudget mc_budget;

    std::optional<int> crd_treated;
    UnitPairs pairs;
    std::optional<Covariates> covariates;

    void ensure_pi() const;
    void ensure_pairwise() const;
    std::size_t cell(int i, int j, int wi, int wj) const {
        return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)) * 4) +
               static_cast<std::size_t>(2 * wi + wj);
    }
};

namespace {

class ExplicitSampler final : public Sampler {
public:
    explicit ExplicitSampler(const std::vector<SupportEntry>& support) {
        CompensatedSum acc;
        cumulative_.reserve(support.size());
        vectors_.reserve(support.size());
        for (const auto& e : support) {
            acc.add(e.p);
            cumulative_.push_back(acc.value());
            vectors_.push_back(e.w);
        }
        total_ = cumulative_.empty() ? 1.0 : cumulative_.back();
    }
    AssignmentVector draw(Rng& rng) const override {
        double u = uniform01(rng) * total_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
        if (k >= vectors_.size()) k = vectors_.size() - 1;
        return vectors_[k];
    }

private:
    std::vector<double> cumulative_;
    std::vector<AssignmentVector> vectors_;
    double total_ = 1.0;
};

class CrdSampler final : public Sampler {
public:
    CrdSampler(int n, int nt) : n_(n), nt_(nt) {}
    AssignmentVector draw(Rng& rng) const override {
        std::vector<int> idx(static_cast<std::size_t>(n_));
        std::iota(idx.begin(), idx.end(), 0);
        std::uint64_t bits = 0;
        for (int k = 0; k < nt_; ++k) {
            auto r = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n_ - k)));
            std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(k + r)]);
            bits |= AssignmentVector::unit_bit(n_, idx[static_cast<std::size_t>(k)]);
        }
        return {n_, bits};
    }

private:
    int n_;
    int nt_;
};

class MatchedPairSampler final : public Sampler {
public:
    MatchedPairSampler(int n, UnitPairs pairs) : n_(n), pairs_(std::move(pairs)) {}
    AssignmentVector draw(Rng& rng) const override {
        std::uint64_t bits = 0;
        std::uint64_t coins = 0;
        int left = 0;
        for (const auto& [a, b] : pairs_) {
            if (left == 0) {
                coins = rng();
                left = 64;
            }
            bool first = coins & 1U;
            coins >>= 1;
            --left;
            bits |= AssignmentVector::unit_bit(n_, first ? a : b);
        }
        return {n_, bits};
    }

private:
    int n_;
    UnitPairs pairs_;
};

class RerandomizedSampler final : public Sampler {
public:
    RerandomizedSampler(std::shared_ptr<const Sampler> base, Covariates x, BalanceCriterion criterion,
                        double threshold, std::uint64_t budget)
        : base_(std::move(base)),
          x_(std::move(x)),
          criterion_(std::move(criterion)),
          threshold_(threshold),
          budget_(budget) {}
    AssignmentVector draw(Rng& rng) const override {
        for (std::uint64_t t = 0; t < budget_; ++t) {
            AssignmentVector w = base_->draw(rng);
            if (criterion_(x_, w) < threshold_) return w;
        }
        throw RetryBudgetExceeded(budget_, 0.0 + 1.0 / static_cast<double>(budget_ + 1));
    }

private:
    std::shared_ptr<const Sampler> base_;
    Covariates x_;
    BalanceCriterion criterion_;
    double threshold_;
    std::uint64_t budget_;
};

void check_unit(const Design::Impl& d, int i) {
    if (i < 0 || i >= d.n)
        throw ValidationError("unit index " + std::to_string(i) + " out of range for N=" + std::to_string(d.n));
}

void check_bit(int w) {
    if (w != 0 && w != 1) throw ValidationError("treatment state must be 0 or 1");
}

std::shared_ptr<Design::Impl> make_explicit_impl(int n, std::vector<SupportEntry> entries, DesignKind kind,
                                                 std::string description) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.w < b.w; });
    auto impl = std::make_shared<Design::Impl>();
    impl->n = n;
    impl->kind = kind;
    impl->description = std::move(description);
    impl->enumerable = true;
    impl->index.reserve(entries.size() * 2);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (!impl->index.emplace(entries[k].w.bits(), k).second)
            throw ValidationError("duplicate support vector " + entries[k].w.to_string());
    }
    std::vector<CompensatedSum> pi(static_cast<std::size_t>(n));
    for (const auto& e : entries)
        for (int i = 0; i < n; ++i)
            if (e.w.treated(i)) pi[static_cast<std::size_t>(i)].add(e.p);
    impl->pi.resize(static_cast<std::size_t>(n));
    impl->pi_se.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) impl->pi[static_cast<std::size_t>(i)] = pi[static_cast<std::size_t>(i)].value();
    std::call_once(impl->pi_once, [] {});
    impl->support = std::move(entries);
    impl->sampler = std::make_shared<ExplicitSampler>(impl->support);
    return impl;
}

}  // namespace

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_below requires n > 0");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

void Design::Impl::ensure_pi() const {
    std::call_once(pi_once, [this] {
        Rng rng(mc_budget.seed);
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(n), 0);
        for (std::uint64_t m = 0; m < mc_budget.draws; ++m) {
            AssignmentVector w = sampler->draw(rng);
            for (int i = 0; i < n; ++i)
                if (w.treated(i)) ++counts[static_cast<std::size_t>(i)];
        }
        auto M = static_cast<double>(mc_budget.draws);
        pi.resize(static_cast<std::size_t>(n));
        pi_se.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < pi.size(); ++i) {
            pi[i] = static_cast<double>(counts[i]) / M;
            pi_se[i] = std::sqrt(pi[i] * (1.0 - pi[i]) / M);
        }
    });
}

void Design::Impl::ensure_pairwise() const {
    std::call_once(pair_once, [this] {
        auto N = static_cast<std::size_t>(n);
        pair_cells.assign(N * N * 4, 0.0);
        pair_se.assign(N * N * 4, 0.0);
        if (analytic_pairwise) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j)
                        for (int c = 0; c < 4; ++c) pair_cells[cell(i, j, c / 2, c % 2)] = analytic_pairwise(i, j, c / 2, c % 2);
            return;
        }
        if (enumerable) {
            std::vector<CompensatedSum> acc(N * N * 4);
            for (const auto& e : support) {
                auto ind = e.w.indicators();
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j)
                        acc[cell(i, j, ind[static_cast<std::size_t>(i)], ind[static_cast<std::size_t>(j)])].add(e.p);
            }
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    for (int c = 0; c < 4; ++c) {
                        double v = acc[cell(i, j, c / 2, c % 2)].value();
                        pair_cells[cell(i, j, c / 2, c % 2)] = v;
                        pair_cells[cell(j, i, c % 2, c / 2)] = v;
                    }
            return;
        }
        Rng rng(derive_seed(mc_budget.seed, 1));
        std::vector<std::uint64_t> counts(N * N * 4, 0);
        for (std::uint64_t m = 0; m < mc_budget.draws; ++m) {
            auto ind = sampler->draw(rng).indicators();
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    ++counts[cell(i, j, ind[static_cast<std::size_t>(i)], ind[static_cast<std::size_t>(j)])];
        }
        auto M = static_cast<double>(mc_budget.draws);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int c = 0; c < 4; ++c) {
                    double v = static_cast<double>(counts[cell(i, j, c / 2, c % 2)]) / M;
                    double se = std::sqrt(v * (1.0 - v) / M);
                    pair_cells[cell(i, j, c / 2, c % 2)] = v;
                    pair_cells[cell(j, i, c % 2, c / 2)] = v;
                    pair_se[cell(i, j, c / 2, c % 2)] = se;
                    pair_se[cell(j, i, c % 2, c / 2)] = se;
                }
    });
}

std::string to_string(DesignKind k) {
    switch (k) {
        case DesignKind::explicit_support: return "explicit";
        case DesignKind::crd: return "crd";
        case DesignKind::matched_pair: return "matched_pair";
        case DesignKind::rerandomized: return "rerandomized";
    }
    return "unknown";
}

std::string to_string(Check c) {
    switch (c) {
        case Check::no: return "no";
        case Check::yes: return "yes";
        case Check::unknown: return "unknown";
    }
    return "unknown";
}

int Design::n() const { return impl_->n; }
DesignKind Design::kind() const { return impl_->kind; }
const std::string& Design::description() const { return impl_->description; }
bool Design::enumerable() const { return impl_->enumerable; }

const std::vector<SupportEntry>& Design::support() const {
    if (!impl_->enumerable) throw NotEnumerable("design '" + impl_->description + "' is not enumerable");
    return impl_->support;
}

std::size_t Design::support_size() const { return support().size(); }

std::optional<std::size_t> Design::index_of(const AssignmentVector& w) const {
    if (!impl_->enumerable) throw NotEnumerable("design '" + impl_->description + "' is not enumerable");
    if (w.size() != impl_->n) return std::nullopt;
    auto it = impl_->index.find(w.bits());
    if (it == impl_->index.end()) return std::nullopt;
    return it->second;
}

double Design::probability(const AssignmentVector& w) const {
    auto k = index_of(w);
    return k ? impl_->support[*k].p : 0.0;
}

const std::vector<double>& Design::propensities() const {
    impl_->ensure_pi();
    return impl_->pi;
}

bool Design::propensities_exact() const { return impl_->pi_exact; }

ProbabilityEstimate Design::propensity(int i) const {
    check_unit(*impl_, i);
    impl_->ensure_pi();
    auto k = static_cast<std::size_t>(i);
    return {impl_->pi[k], impl_->pi_se[k], impl_->pi_exact};
}

bool Design::pairwise_exact() const { return impl_->pair_exact; }

ProbabilityEstimate Design::pairwise(int i, int j, int wi, int wj) const {
    check_unit(*impl_, i);
    check_unit(*impl_, j);
    check_bit(wi);
    check_bit(wj);
    if (i == j) throw ValidationError("pairwise probability requires distinct units");
    impl_->ensure_pairwise();
    auto c = impl_->cell(i, j, wi, wj);
    return {impl_->pair_cells[c], impl_->pair_se[c], impl_->pair_exact};
}

double Design::pairwise_value(int i, int j, int wi, int wj) const {
    if (!impl_->pair_exact)
        throw NotEnumerable("design '" + impl_->description + "' has no exact pairwise probabilities");
    return pairwise(i, j, wi, wj).value;
}

double Design::conditional_treated(int i, int wi, int j) const {
    double joint = pairwise_value(i, j, wi, 1);
    double marginal = wi == 1 ? impl_->pi[static_cast<std::size_t>(i)] : 1.0 - impl_->pi[static_cast<std::size_t>(i)];
    if (!impl_->pi_exact) throw NotEnumerable("conditional probabilities need exact propensities");
    if (marginal <= 0.0) throw UndefinedEstimate("conditioning event has probability zero");
    return joint / marginal;
}

AssignmentVector Design::draw(Rng& rng) const { return impl_->sampler->draw(rng); }
std::shared_ptr<const Sampler> Design::sampler() const { return impl_->sampler; }
std::optional<int> Design::crd_treated() const { return impl_->crd_treated; }
const UnitPairs& Design::pairs() const { return impl_->pairs; }
const Covariates* Design::covariates() const { return impl_->covariates ? &*impl_->covariates : nullptr; }

Design build_crd(int n, int n_treated, const BuildOptions& opts) {
    if (n < 2 || n > kMaxUnits) throw ValidationError("CRD requires 2 <= N <= 64");
    if (n_treated <= 0 || n_treated >= n) throw ValidationError("CRD requires 0 < N_t < N");
    std::uint64_t count = binomial(n, n_treated);
    std::string desc = "crd(" + std::to_string(n) + "," + std::to_string(n_treated) + ")";
    std::shared_ptr<Design::Impl> impl;
    if (count <= opts.enumeration_cap) {
        std::vector<SupportEntry> entries;
        entries.reserve(count);
        double p = 1.0 / static_cast<double>(count);
        for_each_combination(n, n_treated, [&](std::uint64_t bits) { entries.push_back({AssignmentVector(n, bits), p}); });
        impl = make_explicit_impl(n, std::move(entries), DesignKind::crd, desc);
        std::fill(impl->pi.begin(), impl->pi.end(), static_cast<double>(n_treated) / n);
    } else {
        if (!opts.allow_sampler) throw SupportTooLarge(count, opts.enumeration_cap);
        impl = std::make_shared<Design::Impl>();
        impl->n = n;
        impl->kind = DesignKind::crd;
        impl->description = desc;
        impl->sampler = std::make_shared<CrdSampler>(n, n_treated);
        impl->pi.assign(static_cast<std::size_t>(n), static_cast<double>(n_treated) / n);
        impl->pi_se.assign(static_cast<std::size_t>(n), 0.0);
        std::call_once(impl->pi_once, [] {});
    }
    double N = n, t = n_treated, c = n - n_treated;
    double denom = N * (N - 1);
    impl->analytic_pairwise = [=](int, int, int wi, int wj) {
        if (wi == 1 && wj == 1) return t * (t - 1) / denom;
        if (wi == 0 && wj == 0) return c * (c - 1) / denom;
        return t * c / denom;
    };
    impl->crd_treated = n_treated;
    return Design(impl);
}

Design build_matched_pair(const UnitPairs& pairs, const BuildOptions& opts) {
    if (pairs.empty()) throw ValidationError("matched-pair design needs at least one pair");
    int n = static_cast<int>(pairs.size() * 2);
    if (n > kMaxUnits) throw ValidationError("matched-pair design exceeds 64 units");
    std::vector<int> partner(static_cast<std::size_t>(n), -1);
    for (const auto& [a, b] : pairs) {
        if (a < 0 || b < 0 || a >= n || b >= n || a == b)
            throw ValidationError("pairs must partition units 1..N");
        if (partner[static_cast<std::size_t>(a)] != -1 || partner[static_cast<std::size_t>(b)] != -1)
            throw ValidationError("overlapping pairs at unit " +
                                  std::to_string((partner[static_cast<std::size_t>(a)] != -1 ? a : b) + 1));
        partner[static_cast<std::size_t>(a)] = b;
        partner[static_cast<std::size_t>(b)] = a;
    }
    std::string desc = "matched_pair(" + std::to_string(pairs.size()) + " pairs)";
    std::uint64_t count = pairs.size() >= 64 ? ~0ULL : (1ULL << pairs.size());
    std::shared_ptr<Design::Impl> impl;
    if (count <= opts.enumeration_cap) {
        std::vector<SupportEntry> entries;
        entries.reserve(count);
        double p = 1.0 / static_cast<double>(count);
        for (std::uint64_t mask = 0; mask < count; ++mask) {
            std::uint64_t bits = 0;
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                int unit = ((mask >> k) & 1U) ? pairs[k].second : pairs[k].first;
                bits |= AssignmentVector::unit_bit(n, unit);
            }
            entries.push_back({AssignmentVector(n, bits), p});
        }
        impl = make_explicit_impl(n, std::move(entries), DesignKind::matched_pair, desc);
        std::fill(impl->pi.begin(), impl->pi.end(), 0.5);
    } else {
        if (!opts.allow_sampler) throw SupportTooLarge(count, opts.enumeration_cap);
        impl = std::make_shared<Design::Impl>();
        impl->n = n;
        impl->kind = DesignKind::matched_pair;
        impl->description = desc;
        impl->sampler = std::make_shared<MatchedPairSampler>(n, pairs);
        impl->pi.assign(static_cast<std::size_t>(n), 0.5);
        impl->pi_se.assign(static_cast<std::size_t>(n), 0.0);
        std::call_once(impl->pi_once, [] {});
    }
    impl->analytic_pairwise = [partner](int i, int j, int wi, int wj) {
        if (partner[static_cast<std::size_t>(i)] == j) return wi != wj ? 0.5 : 0.0;
        return 0.25;
    };
    impl->pairs = pairs;
    return Design(impl);
}

Design build_explicit(const std::vector<AssignmentVector>& support, const std::vector<double>& probs) {
    if (support.empty()) throw ValidationError("explicit design needs a nonempty support");
    if (support.size() != probs.size())
        throw ValidationError("support has " + std::to_string(support.size()) + " vectors but " +
                              std::to_string(probs.size()) + " probabilities");
    int n = support.front().size();
    CompensatedSum total;
    std::vector<SupportEntry> entries;
    entries.reserve(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k].size() != n) throw ValidationError("ragged support: vector " + support[k].to_string());
        if (!(probs[k] > 0.0) || !std::isfinite(probs[k]))
            throw ValidationError("probability of " + support[k].to_string() + " must be positive");
        total.add(probs[k]);
        entries.push_back({support[k], probs[k]});
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << total.value() << ", not 1";
        throw ValidationError(os.str());
    }
    return Design(make_explicit_impl(n, std::move(entries), DesignKind::explicit_support, "explicit"));
}

Design build_empirical(const std::vector<AssignmentVector>& draws) {
    if (draws.empty()) throw ValidationError("empirical design needs draws");
    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    int n = draws.front().size();
    for (const auto& w : draws) {
        if (w.size() != n) throw ValidationError("ragged draws");
        ++counts[w.bits()];
    }
    std::vector<SupportEntry> entries;
    entries.reserve(counts.size());
    auto M = static_cast<double>(draws.size());
    for (const auto& [bits, c] : counts) entries.push_back({AssignmentVector(n, bits), static_cast<double>(c) / M});
    return Design(make_explicit_impl(n, std::move(entries), DesignKind::explicit_support,
                                     "empirical(" + std::to_string(draws.size()) + " draws)"));
}

Design build_rerandomized(const Design& base, const Covariates& covariates, BalanceCriterion criterion,
                          double threshold, const RerandomizeOptions& opts) {
    if (covariates.rows() != base.n())
        throw ValidationError("covariate matrix has " + std::to_string(covariates.rows()) + " rows, design has N=" +
                              std::to_string(base.n()));
    if (std::isinf(threshold) && threshold > 0) return base;
    std::string desc = "rerandomized(" + base.description() + ")";
    std::shared_ptr<Design::Impl> impl;
    if (base.enumerable()) {
        std::vector<SupportEntry> kept;
        CompensatedSum total;
        for (const auto& e : base.support()) {
            if (criterion(covariates, e.w) < threshold) {
                kept.push_back(e);
                total.add(e.p);
            }
        }
        if (kept.empty()) throw InfeasibleThreshold("infeasible threshold: no support vector passes the balance criterion");
        double z = total.value();
        for (auto& e : kept) e.p /= z;
        impl = make_explicit_impl(base.n(), std::move(kept), DesignKind::rerandomized, desc);
    } else {
        impl = std::make_shared<Design::Impl>();
        impl->n = base.n();
        impl->kind = DesignKind::rerandomized;
        impl->description = desc;
        impl->sampler = std::make_shared<RerandomizedSampler>(base.sampler(), covariates, std::move(criterion), threshold,
                                                              opts.retry_budget);
        impl->pi_exact = false;
        impl->pair_exact = false;
        impl->mc_budget = opts.propensity_budget;
    }
    impl->covariates = covariates;
    return Design(impl);
}

AssignmentVector sample_assignment(const Design& d, std::uint64_t seed) {
    Rng rng(seed);
    return d.draw(rng);
}

std::vector<AssignmentVector> sample_assignments(const Design& d, std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<AssignmentVector> out;
    out.reserve(m);
    for (std::size_t k = 0; k < m; ++k) out.push_back(d.draw(rng));
    return out;
}

namespace {

Check from_bool(bool b) { return b ? Check::yes : Check::no; }

}  // namespace

AssumptionReport check_assumptions(const Design& d) {
    AssumptionReport r;
    const int n = d.n();
    constexpr double tol = 1e-12;

    const auto& pi = d.propensities();
    if (d.propensities_exact()) {
        bool pos = true;
        for (int i = 0; i < n; ++i) {
            double p = pi[static_cast<std::size_t>(i)];
            if (!(p > tol && p < 1.0 - tol)) {
                pos = false;
                r.details.push_back("positivity fails at unit " + std::to_string(i + 1) + " (pi=" + std::to_string(p) + ")");
            }
        }
        r.positivity = from_bool(pos);
        bool constant = true;
        for (int i = 1; i < n; ++i)
            if (std::abs(pi[static_cast<std::size_t>(i)] - pi[0]) > tol) {
                constant = false;
                r.details.push_back("propensity differs between unit 1 and unit " + std::to_string(i + 1));
                break;
            }
        r.epsem = from_bool(constant);
    }

    if (d.pairwise_exact()) {
        bool measurable = true;
        for (int i = 0; i < n && measurable; ++i)
            for (int j = i + 1; j < n && measurable; ++j)
                for (int c = 0; c < 4; ++c)
                    if (d.pairwise_value(i, j, c / 2, c % 2) <= 0.0) {
                        measurable = false;
                        r.details.push_back("not measurable: Pr(W_" + std::to_string(i + 1) + "=" + std::to_string(c / 2) +
                                            ", W_" + std::to_string(j + 1) + "=" + std::to_string(c % 2) + ") = 0");
                        break;
                    }
        r.measurable = from_bool(measurable);
    }

    if (!d.enumerable()) {
        r.details.push_back("design is not enumerable; support-level checks are unknown");
        return r;
    }

    const auto& support = d.support();
    bool halves = true;
    for (const auto& e : support)
        if (2 * e.w.n_treated() != n) {
            halves = false;
            r.details.push_back("vector " + e.w.to_string() + " does not split N/2 : N/2");
            break;
        }
    r.equal_size_constant_propensity = from_bool(halves && r.epsem == Check::yes);

    bool closed = true;
    for (const auto& e : support)
        if (!d.contains(e.w.complement())) {
            closed = false;
            r.details.push_back("complement of " + e.w.to_string() + " is not in the support");
            break;
        }
    r.closed_under_label_switching = from_bool(closed);

    std::optional<SubstituteMode> mode;
    if (halves && n % 4 == 0)
        mode = SubstituteMode::equal_size;
    else if (halves)
        r.details.push_back("substitution undefined: N=" + std::to_string(n) + " is not a multiple of 4");
    else if (r.epsem == Check::yes)
        mode = SubstituteMode::epsem;
    else
        r.details.push_back("substitution undefined: design is neither equal-size nor EPSEM");
    bool subst = mode.has_value();
    if (mode) {
        for (const auto& e : support) {
            bool found = false;
            try {
                for (const auto& f : support)
                    if (is_substitute(e.w, f.w, *mode)) {
                        found = true;
                        break;
                    }
            } catch (const SubstitutionUndefined& ex) {
                r.details.push_back(std::string(ex.what()) + " at " + e.w.to_string());
            }
            if (!found) {
                subst = false;
                r.details.push_back("no substitute for " + e.w.to_string());
                break;
            }
        }
    }
    r.substitution = from_bool(subst);

    if (r.positivity == Check::yes) {
        bool fixed = true;
        for (const auto& e : support) {
            CompensatedSum s;
            for (int i = 0; i < n; ++i) {
                double p = pi[static_cast<std::size_t>(i)];
                s.add(e.w.treated(i) ? 1.0 / p : 1.0 / (1.0 - p));
            }
            if (std::abs(s.value() - 2.0 * n) > 1e-9) {
                fixed = false;
                r.details.push_back("total inverse-probability weight of " + e.w.to_string() + " is " +
                                    std::to_string(s.value()) + ", not 2N");
                break;
            }
        }
        r.fixed_total_weight = from_bool(fixed);
    } else {
        r.fixed_total_weight = Check::no;
    }
    return r;
}

}  // namespace neyman
