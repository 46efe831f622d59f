#include "neyman/outcomes.hpp"

#include <cmath>

#include "neyman/errors.hpp"
#include "neyman/numeric.hpp"

namespace neyman {

double PotentialOutcomes::tau() const {
    CompensatedSum s;
    for (std::size_t i = 0; i < y0.size(); ++i) s.add(y1[i] - y0[i]);
    return s.value() / static_cast<double>(y0.size());
}

std::vector<double> PotentialOutcomes::effects() const {
    std::vector<double> d(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) d[i] = y1[i] - y0[i];
    return d;
}

bool PotentialOutcomes::homogeneous(double tol) const {
    for (std::size_t i = 1; i < y0.size(); ++i)
        if (std::abs((y1[i] - y0[i]) - (y1[0] - y0[0])) > tol) return false;
    return true;
}

void PotentialOutcomes::validate() const {
    if (y0.empty()) throw ValidationError("potential outcomes are empty");
    if (y0.size() != y1.size()) throw ValidationError("y0 and y1 differ in length");
    if (y0.size() > static_cast<std::size_t>(kMaxUnits)) throw ValidationError("at most 64 units are supported");
    for (std::size_t i = 0; i < y0.size(); ++i)
        if (!std::isfinite(y0[i]) || !std::isfinite(y1[i]))
            throw ValidationError("non-finite potential outcome at unit " + std::to_string(i + 1));
}

OutcomeSummaries summarize(const PotentialOutcomes& po) {
    const auto n = static_cast<double>(po.n());
    if (po.n() < 2) throw ValidationError("summaries need N >= 2");
    double m1 = 0, m0 = 0;
    for (int i = 0; i < po.n(); ++i) {
        m1 += po.y1[static_cast<std::size_t>(i)];
        m0 += po.y0[static_cast<std::size_t>(i)];
    }
    m1 /= n;
    m0 /= n;
    double tau = m1 - m0;
    OutcomeSummaries s;
    for (int i = 0; i < po.n(); ++i) {
        double a = po.y1[static_cast<std::size_t>(i)] - m1;
        double b = po.y0[static_cast<std::size_t>(i)] - m0;
        double e = po.y1[static_cast<std::size_t>(i)] - po.y0[static_cast<std::size_t>(i)] - tau;
        s.s2_1 += a * a;
        s.s2_0 += b * b;
        s.s2_10 += e * e;
    }
    s.s2_1 /= (n - 1);
    s.s2_0 /= (n - 1);
    s.s2_10 /= (n - 1);
    return s;
}

void ObservedData::validate() const {
    if (static_cast<int>(y.size()) != w.size())
        throw ValidationError("observed outcomes have " + std::to_string(y.size()) + " entries, assignment has " +
                              std::to_string(w.size()));
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i])) throw ValidationError("non-finite observed outcome at unit " + std::to_string(i + 1));
}

ObservedData reveal(const PotentialOutcomes& po, const AssignmentVector& w) {
    if (po.n() != w.size()) throw ValidationError("assignment length does not match the science table");
    ObservedData obs;
    obs.w = w;
    obs.y.resize(po.y0.size());
    for (int i = 0; i < w.size(); ++i)
        obs.y[static_cast<std::size_t>(i)] = w.treated(i) ? po.y1[static_cast<std::size_t>(i)] : po.y0[static_cast<std::size_t>(i)];
    return obs;
}

}  // namespace neyman
