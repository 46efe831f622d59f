#include "neyman/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "neyman/errors.hpp"
#include "neyman/numeric.hpp"
#include "neyman/parallel.hpp"

namespace neyman {

namespace {

void check_len(std::size_t got, int n, const char* what) {
    if (static_cast<int>(got) != n)
        throw ValidationError(std::string(what) + " has " + std::to_string(got) + " entries, expected " + std::to_string(n));
}

void check_positivity(std::span<const double> pi) {
    for (std::size_t i = 0; i < pi.size(); ++i)
        if (!(pi[i] > 0.0 && pi[i] < 1.0))
            throw AssumptionViolation("propensity of unit " + std::to_string(i + 1) + " is not in (0,1)");
}

std::vector<double> broadcast(const std::vector<double>& v, int n) {
    if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(n), v.front());
    check_len(v.size(), n, "fixed gamma");
    return v;
}

std::string format_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Conditional treatment probabilities of every j given unit i's realized state.
std::vector<double> conditionals(const Design& d, const ObservedData& obs, int i) {
    std::vector<double> out(static_cast<std::size_t>(d.n()), 0.0);
    for (int j = 0; j < d.n(); ++j)
        if (j != i) out[static_cast<std::size_t>(j)] = d.conditional_treated(i, obs.w[i], j);
    return out;
}

void check_loo_groups(const ObservedData& obs, int i) {
    int nt = obs.w.n_treated() - obs.w[i];
    int nc = obs.w.n_control() - (1 - obs.w[i]);
    if (nt < 1 || nc < 1)
        throw UndefinedEstimate("leave-one-out estimate undefined: removing unit " + std::to_string(i + 1) +
                                " empties a group");
}

// Term y*num/den for a realized indicator; throws when the realized event had zero conditional probability.
double loo_term(double num, double cond, int j) {
    if (!(cond > 0.0))
        throw UndefinedEstimate("conditional probability of the realized state of unit " + std::to_string(j + 1) +
                                " is zero");
    return num / cond;
}

}  // namespace

GammaSpec GammaSpec::parse(const std::string& s) {
    if (s == "tau-hat" || s == "tau_hat") return tau_hat();
    if (s == "tau-loo" || s == "tau_loo") return tau_loo();
    if (s == "theta-loo" || s == "theta_loo") return theta_loo();
    if (s.rfind("fixed:", 0) == 0) {
        std::vector<double> vals;
        std::stringstream ss(s.substr(6));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v))
                throw ValidationError("bad fixed gamma value '" + tok + "'");
            vals.push_back(v);
        }
        if (vals.empty()) throw ValidationError("fixed gamma needs a value");
        return fixed(std::move(vals));
    }
    throw ValidationError("unknown gamma spec '" + s + "' (expected fixed:<v>, tau-hat, tau-loo, theta-loo)");
}

std::string GammaSpec::to_string() const {
    switch (kind) {
        case Kind::tau_hat: return "tau-hat";
        case Kind::tau_loo: return "tau-loo";
        case Kind::theta_loo: return "theta-loo";
        case Kind::fixed: {
            std::string s = "fixed:";
            for (std::size_t k = 0; k < values.size(); ++k) s += (k ? "," : "") + format_double(values[k]);
            return s;
        }
    }
    return "unknown";
}

PotentialOutcomes impute_potential_outcomes(const ObservedData& obs, std::span<const double> beta) {
    obs.validate();
    check_len(beta.size(), obs.n(), "beta");
    PotentialOutcomes po;
    po.y0.resize(obs.y.size());
    po.y1.resize(obs.y.size());
    for (int i = 0; i < obs.n(); ++i) {
        auto k = static_cast<std::size_t>(i);
        if (!std::isfinite(beta[k])) throw ValidationError("beta must be finite");
        if (obs.w.treated(i)) {
            po.y1[k] = obs.y[k];
            po.y0[k] = obs.y[k] - beta[k];
        } else {
            po.y1[k] = obs.y[k] + beta[k];
            po.y0[k] = obs.y[k];
        }
    }
    return po;
}

double theta_ht(const ObservedData& obs, std::span<const double> pi) {
    check_len(pi.size(), obs.n(), "propensities");
    check_positivity(pi);
    CompensatedSum s;
    for (int i = 0; i < obs.n(); ++i) {
        auto k = static_cast<std::size_t>(i);
        double p = pi[k];
        s.add(obs.w.treated(i) ? obs.y[k] * (1.0 - p) / (p * p) : -obs.y[k] * p / ((1.0 - p) * (1.0 - p)));
    }
    return s.value() / obs.n();
}

double theta_loo(const Design& d, const ObservedData& obs, int i) {
    check_loo_groups(obs, i);
    const auto& pi = d.propensities();
    check_positivity(pi);
    auto cond = conditionals(d, obs, i);
    CompensatedSum s;
    for (int j = 0; j < obs.n(); ++j) {
        if (j == i) continue;
        auto k = static_cast<std::size_t>(j);
        double p = pi[k];
        if (obs.w.treated(j))
            s.add(loo_term(obs.y[k] * (1.0 - p) / p, cond[k], j));
        else
            s.add(-loo_term(obs.y[k] * p / (1.0 - p), 1.0 - cond[k], j));
    }
    return s.value() / (obs.n() - 1);
}

double tau_loo(const Design& d, const ObservedData& obs, int i) {
    check_loo_groups(obs, i);
    auto cond = conditionals(d, obs, i);
    CompensatedSum s;
    for (int j = 0; j < obs.n(); ++j) {
        if (j == i) continue;
        auto k = static_cast<std::size_t>(j);
        if (obs.w.treated(j))
            s.add(loo_term(obs.y[k], cond[k], j));
        else
            s.add(-loo_term(obs.y[k], 1.0 - cond[k], j));
    }
    return s.value() / (obs.n() - 1);
}

std::vector<double> gamma_vector(const GammaSpec& spec, const ObservedData& obs, const Design& d) {
    obs.validate();
    if (obs.n() != d.n()) throw ValidationError("observed data does not match design size");
    const int n = obs.n();
    switch (spec.kind) {
        case GammaSpec::Kind::fixed: {
            auto g = broadcast(spec.values, n);
            for (double v : g)
                if (!std::isfinite(v)) throw ValidationError("fixed gamma must be finite");
            return g;
        }
        case GammaSpec::Kind::tau_hat:
            return std::vector<double>(static_cast<std::size_t>(n), horvitz_thompson(obs, d.propensities()));
        case GammaSpec::Kind::tau_loo: {
            std::vector<double> g(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = tau_loo(d, obs, i);
            return g;
        }
        case GammaSpec::Kind::theta_loo: {
            std::vector<double> g(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = theta_loo(d, obs, i);
            return g;
        }
    }
    throw ValidationError("unknown gamma kind");
}

std::vector<double> impute_c(const ObservedData& obs, std::span<const double> pi, std::span<const double> gamma) {
    check_len(pi.size(), obs.n(), "propensities");
    check_len(gamma.size(), obs.n(), "gamma");
    check_positivity(pi);
    std::vector<double> c(obs.y.size());
    for (int i = 0; i < obs.n(); ++i) {
        auto k = static_cast<std::size_t>(i);
        double p = pi[k];
        c[k] = obs.w.treated(i) ? (1.0 - p) / p * obs.y[k] - (1.0 - p) * gamma[k]
                                : p / (1.0 - p) * obs.y[k] + p * gamma[k];
    }
    return c;
}

std::vector<double> implicit_beta(const ObservedData& obs, std::span<const double> pi, std::span<const double> gamma) {
    check_len(pi.size(), obs.n(), "propensities");
    check_len(gamma.size(), obs.n(), "gamma");
    check_positivity(pi);
    std::vector<double> b(obs.y.size());
    for (int i = 0; i < obs.n(); ++i) {
        auto k = static_cast<std::size_t>(i);
        double p = pi[k];
        b[k] = obs.w.treated(i) ? (2.0 * p - 1.0) / (p * p) * obs.y[k] + (1.0 - p) / p * gamma[k]
                                : (2.0 * p - 1.0) / ((1.0 - p) * (1.0 - p)) * obs.y[k] + p / (1.0 - p) * gamma[k];
    }
    return b;
}

namespace {

VarianceEstimate imputation_result(double value, const GammaSpec& spec) {
    VarianceEstimate out;
    out.kind = EstimatorKind::imputation;
    out.value = value;
    out.params = {{"gamma", spec.to_string()}};
    return out;
}

}  // namespace

VarianceEstimate v_imputation(const Design& d, const ObservedData& obs, const GammaSpec& spec) {
    auto gamma = gamma_vector(spec, obs, d);
    auto c = impute_c(obs, d.propensities(), gamma);
    if (d.enumerable()) return imputation_result(psi(d, c), spec);
    if (d.pairwise_exact() && d.propensities_exact()) return imputation_result(PsiForm(d)(c), spec);
    throw NotEnumerable("exact imputation estimate needs an enumerable design; use the Monte Carlo variant");
}

VarianceEstimate v_imputation(const Design& d, const ObservedData& obs, const GammaSpec& spec, const PsiForm& form) {
    auto gamma = gamma_vector(spec, obs, d);
    auto c = impute_c(obs, d.propensities(), gamma);
    return imputation_result(form(c), spec);
}

SampleVariance sample_variance_with_jackknife(std::span<const double> x) {
    const std::size_t m = x.size();
    if (m < 3) throw ValidationError("sample variance with jackknife SE needs at least 3 values");
    double mean = compensated_sum(x) / static_cast<double>(m);
    CompensatedSum ss;
    for (double v : x) ss.add((v - mean) * (v - mean));
    auto M = static_cast<double>(m);
    double s2 = ss.value() / (M - 1);
    // Leave-one-out sample variances in closed form.
    CompensatedSum lsum;
    std::vector<double> loo(m);
    for (std::size_t k = 0; k < m; ++k) {
        double dev = x[k] - mean;
        loo[k] = ((M - 1) * s2 - M / (M - 1) * dev * dev) / (M - 2);
        lsum.add(loo[k]);
    }
    double lmean = lsum.value() / M;
    CompensatedSum jv;
    for (double v : loo) jv.add((v - lmean) * (v - lmean));
    return {s2, std::sqrt((M - 1) / M * jv.value())};
}

VarianceEstimate v_imputation_mc(const Design& d, const ObservedData& obs, const GammaSpec& spec, std::uint64_t m,
                                 std::uint64_t seed) {
    if (m < 3) throw ValidationError("Monte Carlo imputation needs M >= 3");
    const auto& pi = d.propensities();
    auto gamma = gamma_vector(spec, obs, d);
    // Step 1: fix the imputed science table.
    auto beta = implicit_beta(obs, pi, gamma);
    PotentialOutcomes table = impute_potential_outcomes(obs, beta);
    // Steps 2-3: draw assignments in fixed-size blocks with derived seeds; recompute tau_hat.
    constexpr std::uint64_t block = 8192;
    std::uint64_t blocks = (m + block - 1) / block;
    std::vector<double> taus(m);
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::uint64_t lo = b * block, hi = std::min<std::uint64_t>(m, lo + block);
        for (std::uint64_t k = lo; k < hi; ++k) taus[k] = horvitz_thompson(reveal(table, d.draw(rng)), pi);
    });
    // Step 4: sample variance around the mean of the replicates.
    auto sv = sample_variance_with_jackknife(taus);
    VarianceEstimate out = imputation_result(sv.variance, spec);
    out.exact = false;
    out.mc_draws = m;
    out.std_error = sv.std_error;
    out.params["seed"] = seed;
    return out;
}

ImputationBiasTerms imputation_bias_terms(const Design& d, const PotentialOutcomes& po, const AssignmentVector& w,
                                          double beta) {
    po.validate();
    if (!po.homogeneous(1e-9)) throw AssumptionViolation("bias decomposition needs homogeneous effects");
    const int n = d.n();
    const auto& pi = d.propensities();
    check_positivity(pi);
    const double tau = po.tau();
    const double n2 = static_cast<double>(n) * n;

    auto obs = reveal(po, w);
    std::vector<double> b(static_cast<std::size_t>(n), beta);
    auto c_hat = c_vector(impute_potential_outcomes(obs, b), pi);

    ImputationBiasTerms t;
    t.psi_c = psi(d, c_vector(po, pi));
    t.psi_c_hat = psi(d, c_hat);
    CompensatedSum a1, a2;
    for (const auto& e : d.support()) {
        CompensatedSum x, s, k;
        for (int i = 0; i < n; ++i) {
            auto u = static_cast<std::size_t>(i);
            double p = pi[u];
            if (e.w.treated(i)) {
                x.add(po.y0[u] / p);
                s.add(w[i] / p);
                k.add((1.0 - p) / p);
            } else {
                x.add(-po.y0[u] / (1.0 - p));
                s.add(-w[i] / (1.0 - p));
                k.add(-1.0);
            }
        }
        double X = x.value() + tau * k.value();
        double Z = s.value() - k.value();
        a1.add(e.p * Z * Z);
        a2.add(e.p * X * Z);
    }
    t.a1 = (tau - beta) * (tau - beta) / n2 * a1.value();
    t.a2 = 2.0 * (tau - beta) / n2 * a2.value();
    return t;
}

}  // namespace neyman
