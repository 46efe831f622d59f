#include "neyman/contrast.hpp"

#include <algorithm>
#include <cmath>

#include "neyman/errors.hpp"
#include "neyman/numeric.hpp"

namespace neyman {

SubstituteCounts substitute_counts(const AssignmentVector& w, SubstituteMode mode) {
    const int n = w.size();
    const int nt = w.n_treated();
    if (mode == SubstituteMode::equal_size) {
        if (n % 4 != 0) throw SubstitutionUndefined("N=" + std::to_string(n) + " is not a multiple of 4");
        if (2 * nt != n)
            throw SubstitutionUndefined("N_t(w)=" + std::to_string(nt) + " is not N/2 for w=" + w.to_string());
        return {n / 4, n / 4};
    }
    if ((nt * nt) % n != 0)
        throw SubstitutionUndefined("k = N_t^2/N = " + std::to_string(nt * nt) + "/" + std::to_string(n) +
                                    " is not an integer");
    int k = nt * nt / n;
    return {k, nt - k};
}

bool is_substitute(const AssignmentVector& w, const AssignmentVector& cand, SubstituteMode mode) {
    if (w.size() != cand.size()) throw ValidationError("substitute length mismatch");
    auto need = substitute_counts(w, mode);
    std::uint64_t mask = AssignmentVector::mask(w.size());
    int from_t = std::popcount(cand.bits() & w.bits());
    int from_c = std::popcount(cand.bits() & ~w.bits() & mask);
    return from_t == need.from_treated && from_c == need.from_control;
}

bool SubstituteSet::contains(const AssignmentVector& w) const {
    return std::binary_search(members.begin(), members.end(), w);
}

bool SubstituteSet::label_closed() const {
    return std::all_of(members.begin(), members.end(), [&](const auto& m) { return contains(m.complement()); });
}

void SubstituteMap::insert(SubstituteSet s) {
    std::sort(s.members.begin(), s.members.end());
    s.members.erase(std::unique(s.members.begin(), s.members.end()), s.members.end());
    auto key = s.anchor.bits();
    sets_.insert_or_assign(key, std::move(s));
}

const SubstituteSet* SubstituteMap::find(const AssignmentVector& w) const {
    auto it = sets_.find(w.bits());
    return it == sets_.end() ? nullptr : &it->second;
}

namespace {

std::vector<int> units_where(const AssignmentVector& w, bool treated) {
    std::vector<int> out;
    for (int i = 0; i < w.size(); ++i)
        if (w.treated(i) == treated) out.push_back(i);
    return out;
}

std::uint64_t scatter(std::uint64_t local, const std::vector<int>& units, int n) {
    std::uint64_t bits = 0;
    int m = static_cast<int>(units.size());
    for (int k = 0; k < m; ++k)
        if ((local >> (m - 1 - k)) & 1U) bits |= AssignmentVector::unit_bit(n, units[static_cast<std::size_t>(k)]);
    return bits;
}

void check_cap(std::uint64_t count, std::size_t cap) {
    if (count > cap)
        throw ValidationError("substitute set of size " + std::to_string(count) + " exceeds cap " + std::to_string(cap));
}

}  // namespace

SubstituteSet full_substitute_set(const Design& d, const AssignmentVector& w, SubstituteMode mode, std::size_t cap) {
    if (!d.contains(w)) throw ValidationError("anchor " + w.to_string() + " is not in the design support");
    auto need = substitute_counts(w, mode);
    const int n = d.n();
    SubstituteSet s{w, {}};
    if (d.kind() == DesignKind::crd) {
        auto t = units_where(w, true), c = units_where(w, false);
        std::uint64_t count = binomial(static_cast<int>(t.size()), need.from_treated) *
                              binomial(static_cast<int>(c.size()), need.from_control);
        check_cap(count, cap);
        s.members.reserve(count);
        for_each_combination(static_cast<int>(t.size()), need.from_treated, [&](std::uint64_t a) {
            std::uint64_t ta = scatter(a, t, n);
            for_each_combination(static_cast<int>(c.size()), need.from_control,
                                 [&](std::uint64_t b) { s.members.emplace_back(n, ta | scatter(b, c, n)); });
        });
    } else if (d.kind() == DesignKind::matched_pair && need.from_treated == need.from_control &&
               2 * need.from_treated == static_cast<int>(d.pairs().size())) {
        const auto& pairs = d.pairs();
        int m = static_cast<int>(pairs.size());
        check_cap(binomial(m, need.from_control), cap);
        for_each_combination(m, need.from_control, [&](std::uint64_t flip) {
            std::uint64_t bits = w.bits();
            for (int k = 0; k < m; ++k)
                if ((flip >> (m - 1 - k)) & 1U) {
                    bits ^= AssignmentVector::unit_bit(n, pairs[static_cast<std::size_t>(k)].first);
                    bits ^= AssignmentVector::unit_bit(n, pairs[static_cast<std::size_t>(k)].second);
                }
            s.members.emplace_back(n, bits);
        });
    } else {
        for (const auto& e : d.support())
            if (is_substitute(w, e.w, mode)) {
                s.members.push_back(e.w);
                check_cap(s.members.size(), cap);
            }
    }
    std::sort(s.members.begin(), s.members.end());
    return s;
}

SubstituteMap full_substitute_map(const Design& d, SubstituteMode mode, std::size_t cap) {
    SubstituteMap g(mode, true);
    for (const auto& e : d.support()) g.insert(full_substitute_set(d, e.w, mode, cap));
    return g;
}

void validate_substitute_map(const Design& d, const SubstituteMap& g) {
    for (const auto& [bits, s] : g.sets()) {
        if (!d.contains(s.anchor)) throw ValidationError("substitute anchor " + s.anchor.to_string() + " is not in the support");
        for (const auto& m : s.members) {
            if (!d.contains(m))
                throw ValidationError("substitute " + m.to_string() + " of " + s.anchor.to_string() + " is not in the support");
            if (!is_substitute(s.anchor, m, g.mode()))
                throw ValidationError(m.to_string() + " is not a substitute of " + s.anchor.to_string());
        }
    }
}

SubstituteMap label_closed_part(const SubstituteMap& g) {
    SubstituteMap out(g.mode(), false);
    for (const auto& [bits, s] : g.sets()) {
        SubstituteSet t{s.anchor, {}};
        for (const auto& m : s.members)
            if (s.contains(m.complement())) t.members.push_back(m);
        out.insert(std::move(t));
    }
    return out;
}

namespace {

void require_coverage(const Design& d, const SubstituteMap& g) {
    for (const auto& e : d.support()) {
        const auto* s = g.find(e.w);
        if (s == nullptr) throw AssumptionViolation("no substitute set supplied for " + e.w.to_string());
        if (s->empty()) throw AssumptionViolation("substitution assumption fails: " + e.w.to_string() + " has no substitute");
    }
}

// Sum over anchors w with W in g(w) of p_w / |g(w)| * f(w)^2.
template <class F>
double anchor_sum(const Design& d, const AssignmentVector& W, const SubstituteMap& g, F&& contrast) {
    CompensatedSum s;
    auto visit = [&](const SubstituteSet& set) {
        double l = contrast(set.anchor);
        s.add(d.probability(set.anchor) / static_cast<double>(set.size()) * l * l);
    };
    if (g.full()) {
        const auto* own = g.find(W);
        for (const auto& w : own->members) visit(*g.find(w));
    } else {
        std::vector<const SubstituteSet*> hits;
        for (const auto& [bits, set] : g.sets())
            if (set.contains(W)) hits.push_back(&set);
        std::sort(hits.begin(), hits.end(), [](auto* a, auto* b) { return a->anchor < b->anchor; });
        for (const auto* set : hits) visit(*set);
    }
    return s.value();
}

}  // namespace

VarianceEstimate v_sub(const Design& d, const ObservedData& obs, const SubstituteMap& g) {
    obs.validate();
    if (obs.n() != d.n()) throw ValidationError("observed data does not match design size");
    const int n = d.n();
    const auto& pi = d.propensities();
    for (double p : pi)
        if (std::abs(p - 0.5) > 1e-12)
            throw AssumptionViolation("contrast estimator needs equal-size groups with propensity 1/2");
    double pW = d.probability(obs.w);
    if (pW <= 0.0) throw ValidationError("realized assignment " + obs.w.to_string() + " is not in the design support");
    require_coverage(d, g);
    double total = anchor_sum(d, obs.w, g, [&](const AssignmentVector& w) {
        CompensatedSum c;
        for (int i = 0; i < n; ++i) c.add(w.treated(i) ? obs.y[static_cast<std::size_t>(i)] : -obs.y[static_cast<std::size_t>(i)]);
        return c.value();
    });
    VarianceEstimate out;
    out.kind = EstimatorKind::contrast;
    out.value = 4.0 / (static_cast<double>(n) * n) * total / pW;
    out.params = {{"substitutes", g.full() ? "full" : "custom"}};
    return out;
}

VarianceEstimate v_pair(const ObservedData& obs) {
    obs.validate();
    const int n = obs.n();
    if (n < 4 || n % 2 != 0) throw ValidationError("matched-pair estimator needs an even N >= 4");
    if (static_cast<int>(obs.pairs.size()) * 2 != n) throw ValidationError("pair labels must cover every unit");
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    std::vector<double> diffs;
    for (const auto& [a, b] : obs.pairs) {
        if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw ValidationError("malformed pair label");
        if (seen[static_cast<std::size_t>(a)]++ || seen[static_cast<std::size_t>(b)]++)
            throw ValidationError("unit appears in two pairs");
        if (obs.w.treated(a) == obs.w.treated(b)) throw ValidationError("each pair must have exactly one treated unit");
        int t = obs.w.treated(a) ? a : b, c = obs.w.treated(a) ? b : a;
        diffs.push_back(obs.y[static_cast<std::size_t>(t)] - obs.y[static_cast<std::size_t>(c)]);
    }
    double mean = compensated_sum(diffs) / static_cast<double>(diffs.size());
    CompensatedSum s;
    for (double x : diffs) s.add((x - mean) * (x - mean));
    VarianceEstimate out;
    out.kind = EstimatorKind::pair;
    out.value = 4.0 / (static_cast<double>(n) * (n - 2)) * s.value();
    return out;
}

VarianceEstimate mse_sub_epsem(const Design& d, const ObservedData& obs, const SubstituteMap& g) {
    obs.validate();
    if (obs.n() != d.n()) throw ValidationError("observed data does not match design size");
    const int n = d.n();
    const auto& pi = d.propensities();
    for (double p : pi)
        if (std::abs(p - pi.front()) > 1e-12) throw AssumptionViolation("EPSEM contrast estimator needs constant propensities");
    for (const auto& e : d.support()) {
        substitute_counts(e.w, SubstituteMode::epsem);
        if (e.w.n_treated() == 0 || e.w.n_control() == 0)
            throw AssumptionViolation("degenerate group at " + e.w.to_string());
    }
    double pW = d.probability(obs.w);
    if (pW <= 0.0) throw ValidationError("realized assignment " + obs.w.to_string() + " is not in the design support");
    require_coverage(d, g);
    double total = anchor_sum(d, obs.w, g, [&](const AssignmentVector& w) {
        double nt = w.n_treated(), nc = w.n_control();
        CompensatedSum c;
        for (int i = 0; i < n; ++i)
            c.add(w.treated(i) ? obs.y[static_cast<std::size_t>(i)] / nt : -obs.y[static_cast<std::size_t>(i)] / nc);
        return c.value();
    });
    VarianceEstimate out;
    out.kind = EstimatorKind::mse_epsem;
    out.value = total / pW;
    return out;
}

}  // namespace neyman
