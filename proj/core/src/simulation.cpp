#include "neyman/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>

#include <Eigen/Cholesky>

#include "neyman/balance.hpp"
#include "neyman/errors.hpp"
#include "neyman/imputation.hpp"
#include "neyman/io.hpp"
#include "neyman/numeric.hpp"
#include "neyman/parallel.hpp"
#include "neyman/svg.hpp"

namespace neyman {

Covariates gen_covariates_hainmueller(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("covariate generation needs n >= 1");
    Eigen::Matrix3d sigma;
    sigma << 2, 1, -1, 1, 1, -0.5, -1, -0.5, 1;
    Eigen::Matrix3d L = sigma.llt().matrixL();
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Covariates x(n, 6);
    for (int i = 0; i < n; ++i) {
        Eigen::Vector3d e(z(rng), z(rng), z(rng));
        Eigen::Vector3d v = L * e;
        x(i, 0) = v(0);
        x(i, 1) = v(1);
        x(i, 2) = v(2);
        x(i, 3) = -3.0 + 6.0 * uniform01(rng);
        double g = z(rng);
        x(i, 4) = g * g;
        x(i, 5) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    }
    return x;
}

std::vector<double> gen_covariate_study_a(int n, std::uint64_t seed) {
    if (n < 3) throw ValidationError("study A covariate needs n >= 3");
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (i < 2 ? 10.0 : 0.0) + z(rng);
    return x;
}

std::string OutcomeModel::name() const {
    switch (kind) {
        case Kind::no_effect: return "no_effect";
        case Kind::constant_fixed: return "constant_fixed";
        case Kind::constant_random: return "constant_random";
        case Kind::heterogeneous: return "heterogeneous";
    }
    return "unknown";
}

nlohmann::json OutcomeModel::to_json() const {
    nlohmann::json j{{"kind", name()}};
    if (kind == Kind::constant_fixed) j["delta"] = delta;
    if (kind == Kind::constant_random || kind == Kind::heterogeneous) {
        j["lo"] = lo;
        j["hi"] = hi;
    }
    return j;
}

OutcomeModel OutcomeModel::from_json(const nlohmann::json& j) {
    std::string k = j.at("kind").get<std::string>();
    OutcomeModel m;
    if (k == "no_effect")
        m.kind = Kind::no_effect;
    else if (k == "constant_fixed")
        m = constant_fixed(j.value("delta", 5.0));
    else if (k == "constant_random")
        m = constant_random(j.value("lo", -5.0), j.value("hi", 5.0));
    else if (k == "heterogeneous")
        m = heterogeneous(j.value("lo", -5.0), j.value("hi", 5.0));
    else
        throw ValidationError("unknown outcome model '" + k + "'");
    if (!(m.lo <= m.hi)) throw ValidationError("outcome model range is not ordered");
    return m;
}

PotentialOutcomes gen_outcomes(const OutcomeModel& model, int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("outcome generation needs n >= 1");
    Rng rng(seed);
    PotentialOutcomes po;
    po.y0.resize(static_cast<std::size_t>(n));
    po.y1.resize(static_cast<std::size_t>(n));
    for (auto& y : po.y0) y = 10.0 * uniform01(rng);
    auto draw = [&] { return model.lo + (model.hi - model.lo) * uniform01(rng); };
    double common = model.kind == OutcomeModel::Kind::constant_random ? draw() : 0.0;
    for (std::size_t i = 0; i < po.y0.size(); ++i) {
        switch (model.kind) {
            case OutcomeModel::Kind::no_effect: po.y1[i] = po.y0[i]; break;
            case OutcomeModel::Kind::constant_fixed: po.y1[i] = po.y0[i] + model.delta; break;
            case OutcomeModel::Kind::constant_random: po.y1[i] = po.y0[i] + common; break;
            case OutcomeModel::Kind::heterogeneous: po.y1[i] = po.y0[i] + draw(); break;
        }
    }
    return po;
}

AmEstimator::AmEstimator(const Design& d) : n_(d.n()) {
    const auto& pi = d.propensities();
    for (double p : pi)
        if (!(p > 0.0 && p < 1.0)) throw AssumptionViolation("AM estimator needs positivity");
    const double N = n_, n2 = N * N;
    const double q = -1.0 / (n2 * (N - 1));  // off-diagonal of the default CRD Q
    auto f = [&](int i, int w) { return w == 1 ? pi[static_cast<std::size_t>(i)] : 1.0 - pi[static_cast<std::size_t>(i)]; };
    square_.assign(static_cast<std::size_t>(2 * n_), 0.0);
    cross_.assign(static_cast<std::size_t>(n_ * n_ * 4), 0.0);
    for (int i = 0; i < n_; ++i)
        for (int w = 0; w < 2; ++w) square_[static_cast<std::size_t>(2 * i + w)] = 1.0 / (f(i, w) * f(i, w) * n2);
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
            for (int c = 0; c < 4; ++c) {
                int wi = c / 2, wj = c % 2;
                double p = d.pairwise_value(i, j, wi, wj);
                double sign = wi == wj ? 1.0 : -1.0;
                double s = 2.0 * sign * (p / (n2 * f(i, wi) * f(j, wj)) + q - 1.0 / n2);
                if (p > 0.0) {
                    cross_[static_cast<std::size_t>((i * n_ + j) * 4 + c)] = s / p;
                } else {
                    double half = std::abs(s) / 2.0;
                    square_[static_cast<std::size_t>(2 * i + wi)] += half / f(i, wi);
                    square_[static_cast<std::size_t>(2 * j + wj)] += half / f(j, wj);
                }
            }
}

double AmEstimator::operator()(const ObservedData& obs) const {
    if (obs.n() != n_) throw ValidationError("observed data does not match design size");
    CompensatedSum s;
    for (int i = 0; i < n_; ++i) {
        double y = obs.y[static_cast<std::size_t>(i)];
        s.add(square_[static_cast<std::size_t>(2 * i + obs.w[i])] * y * y);
    }
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) {
            int c = 2 * obs.w[i] + obs.w[j];
            s.add(cross_[static_cast<std::size_t>((i * n_ + j) * 4 + c)] * obs.y[static_cast<std::size_t>(i)] *
                  obs.y[static_cast<std::size_t>(j)]);
        }
    return s.value();
}

VarianceEstimate v_am(const Design& d, const ObservedData& obs) {
    obs.validate();
    VarianceEstimate out;
    out.kind = EstimatorKind::am;
    out.value = AmEstimator(d)(obs);
    out.negative = out.value < 0.0;
    return out;
}

std::string to_string(SimEstimator e) {
    switch (e) {
        case SimEstimator::gamma_zero: return "gamma_0";
        case SimEstimator::gamma_tau_hat: return "gamma_tau_hat";
        case SimEstimator::gamma_tau_loo: return "gamma_tau_loo";
        case SimEstimator::gamma_theta_loo: return "gamma_theta_loo";
        case SimEstimator::am: return "am";
        case SimEstimator::neyman: return "neyman";
    }
    return "unknown";
}

SimEstimator sim_estimator_from_string(const std::string& s) {
    for (auto e : {SimEstimator::gamma_zero, SimEstimator::gamma_tau_hat, SimEstimator::gamma_tau_loo,
                   SimEstimator::gamma_theta_loo, SimEstimator::am, SimEstimator::neyman})
        if (to_string(e) == s) return e;
    throw ValidationError("unknown simulation estimator '" + s + "'");
}

nlohmann::json ScenarioSpec::to_json() const {
    std::vector<std::string> est;
    for (auto e : estimators) est.push_back(to_string(e));
    return {{"name", name},
            {"design", design},
            {"outcome_model", outcome_model.to_json()},
            {"n_replications", n_replications},
            {"n_inner_draws", n_inner_draws},
            {"seed", seed},
            {"estimators", est}};
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& j) {
    try {
        ScenarioSpec s;
        s.name = j.at("name").get<std::string>();
        s.design = j.at("design");
        s.outcome_model = OutcomeModel::from_json(j.at("outcome_model"));
        s.n_replications = j.value("n_replications", 100);
        s.n_inner_draws = j.value("n_inner_draws", std::uint64_t{20'000});
        s.seed = j.value("seed", std::uint64_t{0});
        for (const auto& e : j.at("estimators")) s.estimators.push_back(sim_estimator_from_string(e.get<std::string>()));
        if (s.n_replications < 1 || s.n_inner_draws < 2) throw ValidationError("scenario counts must be positive");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed scenario JSON: ") + e.what());
    }
}

namespace {

// Precomputed per-design state for fast repeated estimator evaluation.
class Evaluator {
public:
    explicit Evaluator(const Design& d) : d_(d), pi_(d.propensities()), form_(d), n_(d.n()) {
        cond_.assign(static_cast<std::size_t>(2 * n_ * n_), 0.0);
        for (int i = 0; i < n_; ++i)
            for (int wi = 0; wi < 2; ++wi) {
                double marginal = wi == 1 ? pi_[static_cast<std::size_t>(i)] : 1.0 - pi_[static_cast<std::size_t>(i)];
                for (int j = 0; j < n_; ++j)
                    if (j != i) cond_[idx(i, wi, j)] = d.pairwise_value(i, j, wi, 1) / marginal;
            }
    }

    double true_variance(const PotentialOutcomes& po) const { return form_(c_vector(po, pi_)); }

    double evaluate(SimEstimator e, const ObservedData& obs) const {
        switch (e) {
            case SimEstimator::neyman: return neyman_variance(obs).value;
            case SimEstimator::am:
                if (!am_) am_.emplace(d_);
                return (*am_)(obs);
            default: break;
        }
        std::vector<double> gamma(static_cast<std::size_t>(n_), 0.0);
        if (e == SimEstimator::gamma_tau_hat) {
            std::fill(gamma.begin(), gamma.end(), horvitz_thompson(obs, pi_));
        } else if (e == SimEstimator::gamma_tau_loo || e == SimEstimator::gamma_theta_loo) {
            bool theta = e == SimEstimator::gamma_theta_loo;
            for (int i = 0; i < n_; ++i) gamma[static_cast<std::size_t>(i)] = loo(obs, i, theta);
        }
        return form_(impute_c(obs, pi_, gamma));
    }

private:
    std::size_t idx(int i, int wi, int j) const { return static_cast<std::size_t>((i * 2 + wi) * n_ + j); }

    double loo(const ObservedData& obs, int i, bool theta) const {
        if (obs.w.n_treated() - obs.w[i] < 1 || obs.w.n_control() - (1 - obs.w[i]) < 1)
            throw UndefinedEstimate("leave-one-out estimate undefined: a group is empty");
        CompensatedSum s;
        int wi = obs.w[i];
        for (int j = 0; j < n_; ++j) {
            if (j == i) continue;
            auto k = static_cast<std::size_t>(j);
            double p = pi_[k], c = cond_[idx(i, wi, j)], y = obs.y[k];
            if (obs.w.treated(j)) {
                if (!(c > 0.0)) throw UndefinedEstimate("zero conditional probability for a realized state");
                s.add((theta ? y * (1.0 - p) / p : y) / c);
            } else {
                if (!(1.0 - c > 0.0)) throw UndefinedEstimate("zero conditional probability for a realized state");
                s.add(-(theta ? y * p / (1.0 - p) : y) / (1.0 - c));
            }
        }
        return s.value() / (n_ - 1);
    }

    Design d_;
    std::vector<double> pi_;
    PsiForm form_;
    int n_;
    std::vector<double> cond_;
    mutable std::optional<AmEstimator> am_;
};

}  // namespace

SimResult run_study(const ScenarioSpec& spec) {
    Design base = design_from_json(spec.design);
    bool exact = base.enumerable();
    Design d = exact ? base : build_empirical(sample_assignments(base, spec.n_inner_draws, derive_seed(spec.seed, 0xd1)));
    if (spec.design.contains("require_zero_pair")) {
        auto pr = spec.design.at("require_zero_pair").get<std::vector<int>>();
        if (d.pairwise_value(pr.at(0) - 1, pr.at(1) - 1, 1, 1) != 0.0)
            throw AssumptionViolation("scenario '" + spec.name + "' expected Pr(W_" + std::to_string(pr.at(0)) + "=1, W_" +
                                      std::to_string(pr.at(1)) + "=1) = 0");
    }
    Evaluator ev(d);
    if (std::find(spec.estimators.begin(), spec.estimators.end(), SimEstimator::am) != spec.estimators.end())
        ev.evaluate(SimEstimator::am, reveal(PotentialOutcomes{std::vector<double>(static_cast<std::size_t>(d.n()), 0.0),
                                                                std::vector<double>(static_cast<std::size_t>(d.n()), 0.0)},
                                             d.support().front().w));
    const auto& support = d.support();
    const auto k = spec.estimators.size();
    const double inner = static_cast<double>(spec.n_inner_draws);

    std::vector<std::vector<SimRecord>> per_rep(static_cast<std::size_t>(spec.n_replications));
    std::vector<char> undefined(static_cast<std::size_t>(spec.n_replications), 0);
    parallel_for(static_cast<std::size_t>(spec.n_replications), [&](std::size_t rep) {
        PotentialOutcomes po = gen_outcomes(spec.outcome_model, d.n(), derive_seed(spec.seed, rep + 1));
        double var = ev.true_variance(po);
        if (!(var > 1e-14)) {
            undefined[rep] = 1;
            return;
        }
        std::vector<CompensatedSum> m1(k), m2(k);
        for (const auto& e : support) {
            ObservedData obs = reveal(po, e.w);
            for (std::size_t a = 0; a < k; ++a) {
                double v = ev.evaluate(spec.estimators[a], obs);
                m1[a].add(e.p * v);
                m2[a].add(e.p * v * v);
            }
        }
        for (std::size_t a = 0; a < k; ++a) {
            SimRecord r;
            r.scenario = spec.name;
            r.replication = static_cast<int>(rep) + 1;
            r.estimator = to_string(spec.estimators[a]);
            r.true_variance = var;
            r.expectation = m1[a].value();
            r.relative_bias = (r.expectation - var) / var;
            double second = m2[a].value() - r.expectation * r.expectation;
            r.sd = std::sqrt(std::max(0.0, second));
            r.mc_se = exact ? 0.0 : r.sd / std::sqrt(inner) / var;
            per_rep[rep].push_back(r);
        }
    });

    SimResult res;
    res.scenarios.push_back(spec.name);
    for (auto e : spec.estimators) res.estimators.push_back(to_string(e));
    for (auto& recs : per_rep)
        for (auto& r : recs) res.records.push_back(std::move(r));
    int bad = 0;
    for (char u : undefined) bad += u;
    res.undefined[spec.name] = bad;
    res.meta[spec.name] = {{"exact", exact},
                           {"support_size", support.size()},
                           {"n", d.n()},
                           {"outcome_model", spec.outcome_model.to_json()},
                           {"seed", spec.seed}};
    if (!exact) res.meta[spec.name]["inner_draws"] = spec.n_inner_draws;
    return res;
}

SimResult run_studies(const std::string& study, const std::vector<ScenarioSpec>& specs) {
    SimResult all;
    all.study = study;
    for (const auto& s : specs) {
        SimResult r = run_study(s);
        all.scenarios.push_back(s.name);
        for (const auto& e : r.estimators)
            if (std::find(all.estimators.begin(), all.estimators.end(), e) == all.estimators.end()) all.estimators.push_back(e);
        for (auto& rec : r.records) all.records.push_back(std::move(rec));
        all.undefined[s.name] = r.undefined[s.name];
        all.meta[s.name] = r.meta[s.name];
    }
    return all;
}

StudyADesign find_study_a_design(std::uint64_t seed, int attempts) {
    Design base = build_crd(12, 6);
    for (int a = 0; a < attempts; ++a) {
        std::uint64_t s = derive_seed(seed, 0xa000 + static_cast<std::uint64_t>(a));
        auto x = gen_covariate_study_a(12, s);
        Covariates cx = Eigen::Map<const Eigen::VectorXd>(x.data(), 12);
        try {
            Design d = build_rerandomized(base, cx, asmd_criterion(0), 0.2);
            if (d.pairwise_value(0, 1, 1, 1) == 0.0) return {d, x, s, a};
        } catch (const InfeasibleThreshold&) {
        }
    }
    throw AssumptionViolation("no study A covariate draw among " + std::to_string(attempts) +
                              " seeds gives a non-measurable design");
}

namespace {

std::vector<OutcomeModel> study_models() {
    return {OutcomeModel::no_effect(), OutcomeModel::constant_fixed(5.0), OutcomeModel::constant_random(-5, 5),
            OutcomeModel::heterogeneous(-5, 5)};
}

nlohmann::json matrix_json(const Covariates& x) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> r;
        for (Eigen::Index c = 0; c < x.cols(); ++c) r.push_back(x(i, c));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

std::vector<ScenarioSpec> study_a_scenarios(int reps, std::uint64_t seed) {
    auto found = find_study_a_design(seed);
    nlohmann::json design = {{"kind", "rerandomized"},
                             {"base", {{"kind", "crd"}, {"n", 12}, {"n_treated", 6}}},
                             {"covariates", found.covariate},
                             {"criterion", "asmd"},
                             {"threshold", 0.2},
                             {"require_zero_pair", {1, 2}}};
    std::vector<ScenarioSpec> out;
    auto models = study_models();
    for (std::size_t m = 0; m < models.size(); ++m) {
        ScenarioSpec s;
        s.name = "scenario" + std::to_string(m + 1) + "_" + models[m].name();
        s.design = design;
        s.outcome_model = models[m];
        s.n_replications = reps;
        s.seed = derive_seed(seed, 0x100 + m);
        s.estimators = {SimEstimator::am, SimEstimator::gamma_theta_loo, SimEstimator::gamma_tau_hat};
        out.push_back(s);
    }
    return out;
}

std::vector<ScenarioSpec> study_b_scenarios(int reps, std::uint64_t seed, std::uint64_t inner_draws) {
    Covariates x = gen_covariates_hainmueller(50, derive_seed(seed, 0xb0));
    nlohmann::json design = {{"kind", "rerandomized"},
                             {"base", {{"kind", "crd"}, {"n", 50}, {"n_treated", 25}}},
                             {"covariates", matrix_json(x)},
                             {"criterion", "max_asmd"},
                             {"threshold", 0.2}};
    std::vector<ScenarioSpec> out;
    auto models = study_models();
    for (std::size_t m = 0; m < models.size(); ++m) {
        ScenarioSpec s;
        s.name = "scenario" + std::to_string(m + 1) + "_" + models[m].name();
        s.design = design;
        s.outcome_model = models[m];
        s.n_replications = reps;
        s.n_inner_draws = inner_draws;
        // All scenarios share the design draws; outcomes differ by scenario.
        s.seed = derive_seed(seed, 0x200 + m);
        s.estimators = {SimEstimator::am, SimEstimator::gamma_theta_loo, SimEstimator::gamma_tau_hat};
        out.push_back(s);
    }
    return out;
}

std::vector<ScenarioSpec> small_crd_scenarios(int reps, std::uint64_t seed) {
    struct Row {
        int n, nt;
        bool heterogeneous;
    };
    const Row rows[] = {{6, 3, false}, {6, 3, true}, {6, 4, false}, {8, 4, false}, {8, 4, true}, {8, 5, false}};
    std::vector<ScenarioSpec> out;
    for (std::size_t k = 0; k < std::size(rows); ++k) {
        const auto& r = rows[k];
        ScenarioSpec s;
        s.name = "scenario" + std::to_string(k + 1);
        s.design = {{"kind", "crd"}, {"n", r.n}, {"n_treated", r.nt}};
        s.outcome_model = r.heterogeneous ? OutcomeModel::heterogeneous(-5, 5) : OutcomeModel::constant_random(-5, 5);
        s.n_replications = reps;
        s.seed = derive_seed(seed, 0x300 + k);
        s.estimators = {SimEstimator::gamma_zero, SimEstimator::gamma_tau_hat, SimEstimator::gamma_tau_loo,
                        SimEstimator::gamma_theta_loo};
        out.push_back(s);
    }
    return out;
}

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    if (!out) throw Error("write failed for " + p.string());
}

nlohmann::json quantile_json(const std::vector<double>& v) {
    if (v.empty()) return {{"count", 0}};
    auto q = quantiles(v);
    double mean = compensated_sum(v) / static_cast<double>(v.size());
    return {{"count", v.size()}, {"mean", mean},    {"min", q.min},
            {"q25", q.q25},      {"median", q.median}, {"q75", q.q75}, {"max", q.max}};
}

std::vector<double> column_of(const SimResult& res, const std::string& scenario, const std::string& est, bool bias) {
    std::vector<double> out;
    for (const auto& r : res.records)
        if (r.scenario == scenario && r.estimator == est) out.push_back(bias ? r.relative_bias : r.sd);
    return out;
}

SimResult subset(const SimResult& res, const std::string& scenario) {
    SimResult s;
    s.study = res.study;
    s.scenarios = {scenario};
    s.estimators = res.estimators;
    for (const auto& r : res.records)
        if (r.scenario == scenario) s.records.push_back(r);
    if (auto it = res.undefined.find(scenario); it != res.undefined.end()) s.undefined[scenario] = it->second;
    if (res.meta.contains(scenario)) s.meta[scenario] = res.meta.at(scenario);
    return s;
}

}  // namespace

std::string results_csv(const std::vector<SimRecord>& records) {
    std::string out = "scenario,replication,estimator,true_variance,expectation,relative_bias,sd,mc_se\n";
    for (const auto& r : records) {
        out += r.scenario + "," + std::to_string(r.replication) + "," + r.estimator + "," + fmt(r.true_variance) + "," +
               fmt(r.expectation) + "," + fmt(r.relative_bias) + "," + fmt(r.sd) + "," + fmt(r.mc_se) + "\n";
    }
    return out;
}

nlohmann::json summary_json(const SimResult& res) {
    nlohmann::json j;
    j["study"] = res.study;
    j["scenarios"] = nlohmann::json::object();
    for (const auto& sc : res.scenarios) {
        nlohmann::json s;
        for (const auto& e : res.estimators) {
            auto bias = column_of(res, sc, e, true);
            if (bias.empty()) continue;
            s["estimators"][e] = {{"relative_bias", quantile_json(bias)}, {"sd", quantile_json(column_of(res, sc, e, false))}};
        }
        auto it = res.undefined.find(sc);
        s["undefined_replications"] = it == res.undefined.end() ? 0 : it->second;
        if (res.meta.contains(sc)) s["meta"] = res.meta.at(sc);
        j["scenarios"][sc] = s;
    }
    return j;
}

void emit_outputs(const SimResult& res, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "results.csv", results_csv(res.records));
    write_file(dir / "summary.json", summary_json(res).dump(2) + "\n");

    std::vector<BoxPanel> overview;
    for (const auto& sc : res.scenarios) {
        BoxPanel bias{sc + ": relative bias", {}, true};
        BoxPanel sd{sc + ": standard deviation", {}, false};
        for (const auto& e : res.estimators) {
            auto b = column_of(res, sc, e, true);
            if (b.empty()) continue;
            bias.series.push_back({e, b});
            sd.series.push_back({e, column_of(res, sc, e, false)});
        }
        overview.push_back(bias);
        auto sub = subset(res, sc);
        auto sdir = dir / sc;
        std::filesystem::create_directories(sdir, ec);
        if (ec) throw Error("cannot create " + sdir.string() + ": " + ec.message());
        write_file(sdir / "results.csv", results_csv(sub.records));
        write_file(sdir / "summary.json", summary_json(sub).dump(2) + "\n");
        write_file(sdir / "boxplot.svg", boxplot_svg(res.study + " " + sc, {bias, sd}));
    }
    write_file(dir / "boxplot.svg", boxplot_svg(res.study + ": relative bias by scenario", overview));
}

}  // namespace neyman
