#include "neyman/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "neyman/errors.hpp"
#include "neyman/numeric.hpp"

namespace neyman {

namespace {

void check_pi(std::span<const double> pi, int n) {
    if (static_cast<int>(pi.size()) != n)
        throw ValidationError("propensity vector has " + std::to_string(pi.size()) + " entries, expected " +
                              std::to_string(n));
    for (std::size_t i = 0; i < pi.size(); ++i)
        if (!(pi[i] > 0.0 && pi[i] < 1.0))
            throw AssumptionViolation("propensity of unit " + std::to_string(i + 1) + " is not in (0,1)");
}

double contrast(const AssignmentVector& w, std::span<const double> v, std::span<const double> pi) {
    CompensatedSum s;
    for (int i = 0; i < w.size(); ++i) {
        auto k = static_cast<std::size_t>(i);
        s.add(w.treated(i) ? v[k] / pi[k] : -v[k] / (1.0 - pi[k]));
    }
    return s.value();
}

}  // namespace

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::neyman: return "neyman";
        case EstimatorKind::decomposition: return "decomposition";
        case EstimatorKind::contrast: return "contrast";
        case EstimatorKind::pair: return "pair";
        case EstimatorKind::mse_epsem: return "mse-epsem";
        case EstimatorKind::imputation: return "imputation";
        case EstimatorKind::am: return "am";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    for (auto k : {EstimatorKind::neyman, EstimatorKind::decomposition, EstimatorKind::contrast, EstimatorKind::pair,
                   EstimatorKind::mse_epsem, EstimatorKind::imputation, EstimatorKind::am})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown estimator '" + s + "'");
}

nlohmann::json to_json(const VarianceEstimate& v) {
    nlohmann::json j;
    j["value"] = v.value;
    j["estimator"] = to_string(v.kind);
    if (v.exact) {
        j["exactness"] = {{"kind", "exact"}};
    } else {
        j["exactness"] = {{"kind", "monte_carlo"}, {"draws", v.mc_draws}, {"std_error", v.std_error}};
    }
    j["negative"] = v.negative;
    j["params"] = v.params;
    return j;
}

VarianceEstimate variance_estimate_from_json(const nlohmann::json& j) {
    VarianceEstimate v;
    v.value = j.at("value").get<double>();
    v.kind = estimator_kind_from_string(j.at("estimator").get<std::string>());
    const auto& ex = j.at("exactness");
    v.exact = ex.at("kind").get<std::string>() == "exact";
    if (!v.exact) {
        v.mc_draws = ex.at("draws").get<std::uint64_t>();
        v.std_error = ex.at("std_error").get<double>();
    }
    v.negative = j.value("negative", false);
    v.params = j.value("params", nlohmann::json::object());
    return v;
}

double horvitz_thompson(const ObservedData& obs, std::span<const double> pi) {
    check_pi(pi, obs.n());
    CompensatedSum s;
    for (int i = 0; i < obs.n(); ++i) {
        auto k = static_cast<std::size_t>(i);
        s.add(obs.w.treated(i) ? obs.y[k] / pi[k] : -obs.y[k] / (1.0 - pi[k]));
    }
    return s.value() / obs.n();
}

double hajek(const ObservedData& obs, std::span<const double> pi) {
    check_pi(pi, obs.n());
    CompensatedSum nt, dt, nc, dc;
    for (int i = 0; i < obs.n(); ++i) {
        auto k = static_cast<std::size_t>(i);
        if (obs.w.treated(i)) {
            nt.add(obs.y[k] / pi[k]);
            dt.add(1.0 / pi[k]);
        } else {
            nc.add(obs.y[k] / (1.0 - pi[k]));
            dc.add(1.0 / (1.0 - pi[k]));
        }
    }
    if (obs.w.n_treated() == 0 || obs.w.n_control() == 0)
        throw UndefinedEstimate("Hajek estimator undefined: empty treatment or control group in " + obs.w.to_string());
    return nt.value() / dt.value() - nc.value() / dc.value();
}

double difference_in_means(const ObservedData& obs) {
    int nt = obs.w.n_treated(), nc = obs.w.n_control();
    if (nt == 0 || nc == 0) throw UndefinedEstimate("difference in means undefined: empty group");
    CompensatedSum st, sc;
    for (int i = 0; i < obs.n(); ++i) (obs.w.treated(i) ? st : sc).add(obs.y[static_cast<std::size_t>(i)]);
    return st.value() / nt - sc.value() / nc;
}

std::vector<double> c_vector(const PotentialOutcomes& po, std::span<const double> pi) {
    check_pi(pi, po.n());
    std::vector<double> c(po.y0.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (1.0 - pi[i]) * po.y1[i] + pi[i] * po.y0[i];
    return c;
}

double psi(const Design& d, std::span<const double> v) {
    if (static_cast<int>(v.size()) != d.n()) throw ValidationError("psi argument length does not match design");
    const auto& pi = d.propensities();
    check_pi(pi, d.n());
    CompensatedSum s;
    for (const auto& e : d.support()) {
        double l = contrast(e.w, v, pi);
        s.add(e.p * l * l);
    }
    double n = d.n();
    return s.value() / (n * n);
}

ProbabilityEstimate psi_mc(const Design& d, std::span<const double> v, std::uint64_t draws, std::uint64_t seed) {
    if (draws < 2) throw ValidationError("psi_mc needs at least two draws");
    const auto& pi = d.propensities();
    check_pi(pi, d.n());
    Rng rng(seed);
    double n2 = static_cast<double>(d.n()) * d.n();
    double mean = 0, m2 = 0;
    for (std::uint64_t m = 1; m <= draws; ++m) {
        double l = contrast(d.draw(rng), v, pi);
        double x = l * l / n2;
        double delta = x - mean;
        mean += delta / static_cast<double>(m);
        m2 += delta * (x - mean);
    }
    double var = m2 / static_cast<double>(draws - 1);
    return {mean, std::sqrt(var / static_cast<double>(draws)), false};
}

PsiForm::PsiForm(const Design& d) {
    const int n = d.n();
    const auto& pi = d.propensities();
    check_pi(pi, n);
    if (!d.pairwise_exact()) throw NotEnumerable("psi quadratic form needs exact pairwise probabilities");
    m_.resize(n, n);
    double n2 = static_cast<double>(n) * n;
    for (int i = 0; i < n; ++i) {
        auto ki = static_cast<std::size_t>(i);
        m_(i, i) = (1.0 / pi[ki] + 1.0 / (1.0 - pi[ki])) / n2;
        for (int j = i + 1; j < n; ++j) {
            auto kj = static_cast<std::size_t>(j);
            double a1i = 1.0 / pi[ki], a0i = -1.0 / (1.0 - pi[ki]);
            double a1j = 1.0 / pi[kj], a0j = -1.0 / (1.0 - pi[kj]);
            CompensatedSum s;
            s.add(d.pairwise_value(i, j, 1, 1) * a1i * a1j);
            s.add(d.pairwise_value(i, j, 1, 0) * a1i * a0j);
            s.add(d.pairwise_value(i, j, 0, 1) * a0i * a1j);
            s.add(d.pairwise_value(i, j, 0, 0) * a0i * a0j);
            m_(i, j) = m_(j, i) = s.value() / n2;
        }
    }
}

double PsiForm::operator()(std::span<const double> v) const {
    if (static_cast<Eigen::Index>(v.size()) != m_.rows()) throw ValidationError("psi argument length does not match design");
    Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
    return x.dot(m_ * x);
}

double true_variance(const Design& d, const PotentialOutcomes& po) {
    po.validate();
    auto c = c_vector(po, d.propensities());
    return psi(d, c);
}

double true_variance_direct(const Design& d, const PotentialOutcomes& po) {
    po.validate();
    const auto& pi = d.propensities();
    double tau = po.tau();
    CompensatedSum s;
    for (const auto& e : d.support()) {
        double dev = horvitz_thompson(reveal(po, e.w), pi) - tau;
        s.add(e.p * dev * dev);
    }
    return s.value();
}

double estimator_expectation(const Design& d, const PotentialOutcomes& po, const VarianceFunctional& est) {
    po.validate();
    CompensatedSum s;
    for (const auto& e : d.support()) {
        double v;
        try {
            v = est(reveal(po, e.w));
        } catch (const UndefinedEstimate& ex) {
            throw UndefinedEstimate(std::string(ex.what()) + " [at w=" + e.w.to_string() + "]");
        } catch (const InfeasibleQ& ex) {
            throw InfeasibleQ(std::string(ex.what()) + " [at w=" + e.w.to_string() + "]");
        } catch (const SubstitutionUndefined& ex) {
            std::string msg = ex.what();
            throw SubstitutionUndefined(msg.substr(msg.find(": ") + 2) + " [at w=" + e.w.to_string() + "]");
        } catch (const AssumptionViolation& ex) {
            throw AssumptionViolation(std::string(ex.what()) + " [at w=" + e.w.to_string() + "]");
        } catch (const NotEnumerable& ex) {
            throw NotEnumerable(std::string(ex.what()) + " [at w=" + e.w.to_string() + "]");
        } catch (const ValidationError& ex) {
            throw ValidationError(std::string(ex.what()) + " [at w=" + e.w.to_string() + "]");
        } catch (const Error& ex) {
            throw Error(std::string(ex.what()) + " [at w=" + e.w.to_string() + "]");
        }
        s.add(e.p * v);
    }
    return s.value();
}

VarianceEstimate neyman_variance(const ObservedData& obs) {
    return neyman_variance(obs, obs.w.n_treated(), obs.w.n_control());
}

VarianceEstimate neyman_variance(const ObservedData& obs, int n_t, int n_c) {
    obs.validate();
    if (n_t != obs.w.n_treated() || n_c != obs.w.n_control())
        throw ValidationError("group sizes do not match the realized assignment");
    if (n_t < 2 || n_c < 2) throw UndefinedEstimate("Neyman variance undefined: a group has fewer than two units");
    CompensatedSum st, sc;
    for (int i = 0; i < obs.n(); ++i) (obs.w.treated(i) ? st : sc).add(obs.y[static_cast<std::size_t>(i)]);
    double mt = st.value() / n_t, mc = sc.value() / n_c;
    CompensatedSum vt, vc;
    for (int i = 0; i < obs.n(); ++i) {
        double y = obs.y[static_cast<std::size_t>(i)];
        if (obs.w.treated(i))
            vt.add((y - mt) * (y - mt));
        else
            vc.add((y - mc) * (y - mc));
    }
    VarianceEstimate out;
    out.kind = EstimatorKind::neyman;
    out.value = vt.value() / (n_t - 1) / n_t + vc.value() / (n_c - 1) / n_c;
    out.params = {{"n_t", n_t}, {"n_c", n_c}};
    return out;
}

double true_mse_hajek(const Design& d, const PotentialOutcomes& po) {
    po.validate();
    const auto& pi = d.propensities();
    double tau = po.tau();
    CompensatedSum s;
    for (const auto& e : d.support()) {
        double dev = hajek(reveal(po, e.w), pi) - tau;
        s.add(e.p * dev * dev);
    }
    return s.value();
}

}  // namespace neyman
