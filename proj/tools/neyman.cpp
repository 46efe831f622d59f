// Command-line front end: design inspection, estimation, enumeration oracles, identity suites
// and simulation studies. Exit codes: 0 ok, 2 invalid input, 3 assumption violated, 4 verify
// failure, 1 anything else.
#include <cstdio>
#include <iostream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "neyman/contrast.hpp"
#include "neyman/decomposition.hpp"
#include "neyman/errors.hpp"
#include "neyman/estimators.hpp"
#include "neyman/imputation.hpp"
#include "neyman/io.hpp"
#include "neyman/parallel.hpp"
#include "neyman/simulation.hpp"
#include "neyman/verify.hpp"

namespace {

using namespace neyman;
using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitVerify = 4;

struct Global {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    bool json = false;
    Tolerances tol;
};

struct EstimatorOptions {
    std::string estimator = "neyman";
    std::string params;  // JSON object; explicit flags win
    std::string q = "default-crd";
    std::string substitutes = "full";
    std::string mode;
    std::string gamma = "tau-hat";
    std::uint64_t mc = 0;
};

void add_estimator_flags(CLI::App* cmd, EstimatorOptions& o) {
    cmd->add_option("--estimator", o.estimator, "neyman|decomposition|contrast|pair|mse-epsem|imputation|am")
        ->capture_default_str();
    cmd->add_option("--params", o.params, "JSON object with q, substitutes, mode, gamma, mc");
    cmd->add_option("--q", o.q, "default-crd or file:<csv>")->capture_default_str();
    cmd->add_option("--substitutes", o.substitutes, "full or file:<json>")->capture_default_str();
    cmd->add_option("--mode", o.mode, "substitute mode: equal_size or epsem");
    cmd->add_option("--gamma", o.gamma, "fixed:<v>|tau-hat|tau-loo|theta-loo")->capture_default_str();
    cmd->add_option("--mc", o.mc, "Monte Carlo draws for imputation (0 = exact)");
}

// Values from --params fill in whatever was not given on the command line.
void merge_params(CLI::App* cmd, EstimatorOptions& o) {
    if (o.params.empty()) return;
    json p;
    try {
        p = json::parse(o.params);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("--params is not valid JSON: ") + e.what());
    }
    if (!p.is_object()) throw ValidationError("--params must be a JSON object");
    auto take = [&](const char* key, const char* flag, auto& dst) {
        if (p.contains(key) && cmd->count(flag) == 0) p.at(key).get_to(dst);
    };
    try {
        take("q", "--q", o.q);
        take("substitutes", "--substitutes", o.substitutes);
        take("mode", "--mode", o.mode);
        take("gamma", "--gamma", o.gamma);
        take("mc", "--mc", o.mc);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad --params value: ") + e.what());
    }
}

SubstituteMode substitute_mode(const EstimatorOptions& o, EstimatorKind k) {
    std::string m = o.mode.empty() ? (k == EstimatorKind::mse_epsem ? "epsem" : "equal_size") : o.mode;
    if (m == "equal_size") return SubstituteMode::equal_size;
    if (m == "epsem") return SubstituteMode::epsem;
    throw ValidationError("unknown substitute mode '" + m + "'");
}

QMatrix resolve_q(const std::string& spec, int n) {
    if (spec == "default-crd") return default_q_crd(n);
    if (spec.rfind("file:", 0) == 0) return load_q(spec.substr(5));
    throw ValidationError("--q must be default-crd or file:<path>");
}

SubstituteMap resolve_substitutes(const std::string& spec, const Design& d, SubstituteMode mode) {
    if (spec == "full") return full_substitute_map(d, mode);
    if (spec.rfind("file:", 0) == 0) {
        auto g = load_substitutes(spec.substr(5), mode);
        validate_substitute_map(d, g);
        return g;
    }
    throw ValidationError("--substitutes must be full or file:<path>");
}

// A reusable estimator bound to a design and options.
struct BoundEstimator {
    EstimatorKind kind = EstimatorKind::neyman;
    json params = json::object();
    std::function<VarianceEstimate(const ObservedData&)> fn;
};

BoundEstimator bind(const Design& d, const EstimatorOptions& o, const Global& g) {
    BoundEstimator b;
    b.kind = estimator_kind_from_string(o.estimator);
    switch (b.kind) {
        case EstimatorKind::neyman:
            b.fn = [](const ObservedData& obs) { return neyman_variance(obs); };
            break;
        case EstimatorKind::decomposition: {
            QMatrix q = resolve_q(o.q, d.n());
            auto report = validate_q(q, g.tol);
            if (!report.ok()) {
                std::string why = "Q matrix is invalid";
                for (const auto& w : report.witnesses) why += "; " + w;
                throw ValidationError(why);
            }
            b.params["q"] = o.q;
            b.fn = [d, q](const ObservedData& obs) { return estimate_decomposition(d, obs, q); };
            break;
        }
        case EstimatorKind::contrast:
        case EstimatorKind::mse_epsem: {
            auto mode = substitute_mode(o, b.kind);
            auto map = std::make_shared<SubstituteMap>(resolve_substitutes(o.substitutes, d, mode));
            b.params["substitutes"] = o.substitutes;
            b.params["mode"] = mode == SubstituteMode::epsem ? "epsem" : "equal_size";
            if (b.kind == EstimatorKind::contrast)
                b.fn = [d, map](const ObservedData& obs) { return v_sub(d, obs, *map); };
            else
                b.fn = [d, map](const ObservedData& obs) { return mse_sub_epsem(d, obs, *map); };
            break;
        }
        case EstimatorKind::pair:
            b.fn = [d](const ObservedData& obs) {
                if (obs.pairs.empty() && !d.pairs().empty()) {
                    ObservedData copy = obs;
                    copy.pairs = d.pairs();
                    return v_pair(copy);
                }
                return v_pair(obs);
            };
            break;
        case EstimatorKind::imputation: {
            GammaSpec spec = GammaSpec::parse(o.gamma);
            b.params["gamma"] = spec.to_string();
            if (o.mc > 0) {
                if (!g.seed_given) throw ValidationError("--mc needs an explicit --seed");
                std::uint64_t m = o.mc, seed = g.seed;
                b.fn = [d, spec, m, seed](const ObservedData& obs) { return v_imputation_mc(d, obs, spec, m, seed); };
            } else if (d.enumerable() || d.pairwise_exact()) {
                auto form = std::make_shared<PsiForm>(d);
                b.fn = [d, spec, form](const ObservedData& obs) { return v_imputation(d, obs, spec, *form); };
            } else {
                b.fn = [d, spec](const ObservedData& obs) { return v_imputation(d, obs, spec); };
            }
            break;
        }
        case EstimatorKind::am: {
            auto am = std::make_shared<AmEstimator>(d);
            b.fn = [am](const ObservedData& obs) {
                VarianceEstimate v;
                v.kind = EstimatorKind::am;
                v.value = (*am)(obs);
                v.negative = v.value < 0.0;
                return v;
            };
            break;
        }
    }
    return b;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_design_inspect(const std::string& path, const Global& g) {
    Design d = load_design(path);
    auto report = check_assumptions(d);
    json j = to_json(report);
    j["design"] = {{"kind", to_string(d.kind())},
                   {"n", d.n()},
                   {"description", d.description()},
                   {"enumerable", d.enumerable()}};
    if (d.enumerable()) j["design"]["support_size"] = d.support_size();
    j["design"]["propensities"] = d.propensities();
    j["design"]["propensities_exact"] = d.propensities_exact();
    if (g.json) {
        print_json(j);
        return 0;
    }
    std::printf("design        %s (n = %d%s)\n", d.description().c_str(), d.n(),
                d.enumerable() ? (", support " + std::to_string(d.support_size())).c_str() : ", sampled");
    const char* rows[][2] = {{"positivity", "positivity"},
                             {"equal_size_constant_propensity", "equal size / constant pi"},
                             {"epsem", "epsem"},
                             {"measurable", "measurable"},
                             {"closed_under_label_switching", "label-switching closed"},
                             {"substitution", "substitution"},
                             {"fixed_total_weight", "fixed total weight"}};
    for (const auto& r : rows) std::printf("%-26s %s\n", r[1], j.at(r[0]).get<std::string>().c_str());
    for (const auto& line : report.details) std::printf("  %s\n", line.c_str());
    return 0;
}

int cmd_analyze(CLI::App* cmd, const std::string& design_path, const std::string& observed_path,
                EstimatorOptions o, const Global& g) {
    merge_params(cmd, o);
    Design d = load_design(design_path);
    auto table = load_outcomes(observed_path);
    if (!std::holds_alternative<ObservedData>(table))
        throw ValidationError("analyze needs an observed table (columns unit_id, w, y_obs)");
    const auto& obs = std::get<ObservedData>(table);
    if (obs.n() != d.n()) throw ValidationError("observed table size does not match the design");
    if (d.enumerable() && !d.contains(obs.w))
        throw ValidationError("observed assignment " + obs.w.to_string() + " is not in the design support");
    auto b = bind(d, o, g);
    VarianceEstimate v = b.fn(obs);
    for (auto& [k, val] : b.params.items()) v.params[k] = val;
    print_json(to_json(v));
    return 0;
}

int cmd_oracle(CLI::App* cmd, const std::string& design_path, const std::string& outcomes_path, EstimatorOptions o,
               const Global& g) {
    merge_params(cmd, o);
    if (o.mc > 0) throw ValidationError("oracle is exact; --mc is not accepted");
    Design d = load_design(design_path);
    if (!d.enumerable()) throw NotEnumerable("oracle needs an enumerable design");
    auto table = load_outcomes(outcomes_path);
    if (!std::holds_alternative<PotentialOutcomes>(table))
        throw ValidationError("oracle needs a science table (columns unit_id, y0, y1)");
    const auto& po = std::get<PotentialOutcomes>(table);
    if (po.n() != d.n()) throw ValidationError("outcome table size does not match the design");
    auto b = bind(d, o, g);
    bool mse = b.kind == EstimatorKind::mse_epsem;
    double target = mse ? true_mse_hajek(d, po) : true_variance(d, po);
    double e = estimator_expectation(d, po, [&](const ObservedData& obs) { return b.fn(obs).value; });
    json j{{"estimator", to_string(b.kind)},
           {"target", mse ? "mse_hajek" : "variance_ht"},
           {"true_variance", target},
           {"expectation", e},
           {"bias", e - target},
           {"relative_bias", target != 0.0 ? json((e - target) / target) : json(nullptr)},
           {"params", b.params}};
    print_json(j);
    return 0;
}

int cmd_verify(const std::string& suite, const Global& g) {
    auto rep = run_verify(suite, g.seed, g.tol);
    if (g.json) {
        print_json(rep.to_json());
    } else {
        for (const auto& c : rep.checks)
            std::printf("%-4s %-70s max residual %.3e (tol %.1e, %zu cases)\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                        c.max_residual, c.tolerance, c.cases);
    }
    if (!rep.passed()) {
        for (const auto& c : rep.checks)
            if (!c.passed) std::fprintf(stderr, "verify: check %s failed\n", c.name.c_str());
        return kExitVerify;
    }
    return 0;
}

struct SimulateOptions {
    std::string study;
    std::string config;
    int reps = 100;
    std::uint64_t inner_draws = 20'000;
    std::string out;
};

int cmd_simulate(CLI::App* cmd, const SimulateOptions& o, const Global& g) {
    if (o.study.empty() == o.config.empty()) throw ValidationError("give exactly one of --study or --config");
    if (o.reps < 1) throw ValidationError("--reps must be positive");
    SimResult res;
    if (!o.config.empty()) {
        json j = read_json(o.config);
        std::vector<ScenarioSpec> specs;
        if (j.is_array())
            for (const auto& s : j) specs.push_back(ScenarioSpec::from_json(s));
        else
            specs.push_back(ScenarioSpec::from_json(j));
        if (cmd->count("--reps"))
            for (auto& s : specs) s.n_replications = o.reps;
        res = run_studies(std::filesystem::path(o.config).stem().string(), specs);
    } else if (o.study == "a") {
        res = run_studies("study_a", study_a_scenarios(o.reps, g.seed));
    } else if (o.study == "b") {
        res = run_studies("study_b", study_b_scenarios(o.reps, g.seed, o.inner_draws));
    } else if (o.study == "appendix-c") {
        res = run_studies("small_crd", small_crd_scenarios(o.reps, g.seed));
    } else {
        throw ValidationError("--study must be a, b or appendix-c (the small CRD study)");
    }
    if (!o.out.empty()) emit_outputs(res, o.out);
    json summary = summary_json(res);
    if (g.json) {
        print_json(summary);
        return 0;
    }
    std::printf("%-28s %-16s %12s %12s %12s\n", "scenario", "estimator", "min rel.bias", "median", "max");
    for (const auto& [name, sc] : summary.at("scenarios").items()) {
        if (!sc.contains("estimators")) continue;
        for (const auto& [est, v] : sc.at("estimators").items()) {
            const auto& rb = v.at("relative_bias");
            std::printf("%-28s %-16s %12.4g %12.4g %12.4g\n", name.c_str(), est.c_str(), rb.at("min").get<double>(),
                        rb.at("median").get<double>(), rb.at("max").get<double>());
        }
    }
    if (!o.out.empty()) std::printf("outputs written to %s\n", o.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design-based variance estimation for randomized experiments"};
    app.require_subcommand(1);
    Global g;
    auto* seed_opt = app.add_option("--seed", g.seed, "seed for every stochastic path")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)")->capture_default_str();
    app.add_flag("--json", g.json, "machine-readable output");
    app.add_option("--tolerance-probability", g.tol.probability, "probability identity tolerance")->capture_default_str();
    app.add_option("--tolerance-weight", g.tol.weight, "weight identity tolerance")->capture_default_str();
    app.add_option("--tolerance-estimator", g.tol.estimator, "estimator identity tolerance")->capture_default_str();
    app.fallthrough();

    auto* design = app.add_subcommand("design", "design utilities");
    design->require_subcommand(1);
    std::string design_file;
    auto* inspect = design->add_subcommand("inspect", "report which design assumptions hold");
    inspect->add_option("file", design_file, "design JSON")->required();

    std::string a_design, a_observed;
    EstimatorOptions a_opts;
    auto* analyze = app.add_subcommand("analyze", "estimate the variance from one observed table");
    analyze->add_option("--design", a_design, "design JSON")->required();
    analyze->add_option("--observed", a_observed, "observed CSV (unit_id, w, y_obs)")->required();
    add_estimator_flags(analyze, a_opts);

    std::string o_design, o_outcomes;
    EstimatorOptions o_opts;
    auto* oracle = app.add_subcommand("oracle", "exact bias of an estimator by enumerating the design");
    oracle->add_option("--design", o_design, "design JSON")->required();
    oracle->add_option("--outcomes", o_outcomes, "science CSV (unit_id, y0, y1)")->required();
    add_estimator_flags(oracle, o_opts);

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run built-in identity checks");
    verify->add_option("suite", suite, "thm2|thm3|prop3|prop4|thm4|prop2|corA1|all")
        ->check(CLI::IsMember({"thm2", "thm3", "prop3", "prop4", "thm4", "prop2", "corA1", "all"}))
        ->capture_default_str();

    SimulateOptions s_opts;
    auto* simulate = app.add_subcommand("simulate", "run a simulation study");
    simulate->add_option("--study", s_opts.study, "a|b|appendix-c");
    simulate->add_option("--config", s_opts.config, "scenario JSON (object or array)");
    simulate->add_option("--reps", s_opts.reps, "replications per scenario")->capture_default_str();
    simulate->add_option("--inner-draws", s_opts.inner_draws, "design draws for sampled designs")->capture_default_str();
    simulate->add_option("--out", s_opts.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (g.threads < 0) throw ValidationError("--threads must be >= 0");
        set_thread_count(g.threads > 0 ? g.threads : static_cast<int>(std::thread::hardware_concurrency()));
        if (inspect->parsed()) return cmd_design_inspect(design_file, g);
        if (analyze->parsed()) return cmd_analyze(analyze, a_design, a_observed, a_opts, g);
        if (oracle->parsed()) return cmd_oracle(oracle, o_design, o_outcomes, o_opts, g);
        if (verify->parsed()) return cmd_verify(suite, g);
        if (simulate->parsed()) return cmd_simulate(simulate, s_opts, g);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const AssumptionViolation& e) {
        std::fprintf(stderr, "refused: %s\n", e.what());
        return kExitAssumption;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
