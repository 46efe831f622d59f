#include "neyman/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "neyman/balance.hpp"
#include "neyman/errors.hpp"

namespace neyman {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw ValidationError("not a finite number: '" + s + "' (" + where + ")");
    return v;
}

int column(const CsvTable& t, const std::string& name) {
    for (std::size_t k = 0; k < t.header.size(); ++k)
        if (t.header[k] == name) return static_cast<int>(k);
    return -1;
}

Covariates covariates_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ValidationError("covariates must be a nonempty array");
    auto n = static_cast<Eigen::Index>(j.size());
    if (j.front().is_number()) {
        Covariates x(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = j.at(static_cast<std::size_t>(i)).get<double>();
        return x;
    }
    auto k = static_cast<Eigen::Index>(j.front().size());
    Covariates x(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != k) throw ValidationError("ragged covariate matrix");
        for (Eigen::Index c = 0; c < k; ++c) x(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return x;
}

BuildOptions build_options(const nlohmann::json& j) {
    BuildOptions o;
    o.enumeration_cap = j.value("enumeration_cap", kDefaultEnumerationCap);
    o.allow_sampler = j.value("allow_sampler", true);
    return o;
}

}  // namespace

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

Design design_from_json(const nlohmann::json& j) {
    try {
        std::string kind = j.value("kind", j.contains("support") ? "explicit" : "");
        if (kind == "explicit") {
            std::vector<AssignmentVector> support;
            for (const auto& s : j.at("support")) support.push_back(AssignmentVector::from_string(s.get<std::string>()));
            auto probs = j.at("probs").get<std::vector<double>>();
            if (j.contains("n") && !support.empty() && j.at("n").get<int>() != support.front().size())
                throw ValidationError("declared n does not match support vector length");
            return build_explicit(support, probs);
        }
        if (kind == "crd") return build_crd(j.at("n").get<int>(), j.at("n_treated").get<int>(), build_options(j));
        if (kind == "matched_pair") {
            UnitPairs pairs;
            for (const auto& p : j.at("pairs")) {
                if (p.size() != 2) throw ValidationError("each pair needs two units");
                pairs.emplace_back(p.at(0).get<int>() - 1, p.at(1).get<int>() - 1);
            }
            return build_matched_pair(pairs, build_options(j));
        }
        if (kind == "rerandomized") {
            Design base = design_from_json(j.at("base"));
            Covariates x = covariates_from_json(j.at("covariates"));
            std::string crit = j.value("criterion", "max_asmd");
            BalanceCriterion criterion;
            if (crit == "asmd")
                criterion = asmd_criterion(j.value("column", 0));
            else if (crit == "max_asmd")
                criterion = max_asmd_criterion();
            else
                throw ValidationError("unknown balance criterion '" + crit + "'");
            double threshold = j.at("threshold").is_string() && j.at("threshold").get<std::string>() == "inf"
                                   ? std::numeric_limits<double>::infinity()
                                   : j.at("threshold").get<double>();
            RerandomizeOptions opts;
            opts.retry_budget = j.value("retry_budget", opts.retry_budget);
            opts.propensity_budget.draws = j.value("mc_draws", opts.propensity_budget.draws);
            opts.propensity_budget.seed = j.value("seed", opts.propensity_budget.seed);
            return build_rerandomized(base, x, criterion, threshold, opts);
        }
        throw ValidationError("design file needs \"support\" or a \"kind\" of crd, matched_pair, rerandomized, explicit");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed design JSON: ") + e.what());
    }
}

Design load_design(const std::filesystem::path& path) { return design_from_json(read_json(path)); }

nlohmann::json design_to_json(const Design& d) {
    nlohmann::json j;
    j["kind"] = d.enumerable() && d.kind() == DesignKind::explicit_support ? "explicit" : to_string(d.kind());
    j["n"] = d.n();
    j["description"] = d.description();
    if (d.enumerable()) {
        std::vector<std::string> support;
        std::vector<double> probs;
        for (const auto& e : d.support()) {
            support.push_back(e.w.to_string());
            probs.push_back(e.p);
        }
        j["support"] = support;
        j["probs"] = probs;
    }
    return j;
}

nlohmann::json to_json(const AssumptionReport& r) {
    return {{"positivity", to_string(r.positivity)},
            {"equal_size_constant_propensity", to_string(r.equal_size_constant_propensity)},
            {"epsem", to_string(r.epsem)},
            {"measurable", to_string(r.measurable)},
            {"closed_under_label_switching", to_string(r.closed_under_label_switching)},
            {"substitution", to_string(r.substitution)},
            {"fixed_total_weight", to_string(r.fixed_total_weight)},
            {"details", r.details}};
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (line.back() == ',') cells.emplace_back();
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

OutcomeTable outcomes_from_csv(const CsvTable& t) {
    int y0 = column(t, "y0"), y1 = column(t, "y1"), w = column(t, "w"), yo = column(t, "y_obs"), pr = column(t, "pair");
    auto cell = [&](std::size_t r, int c) -> const std::string& {
        if (c < 0 || static_cast<std::size_t>(c) >= t.rows[r].size())
            throw ValidationError("row " + std::to_string(r + 2) + " has too few columns");
        return t.rows[r][static_cast<std::size_t>(c)];
    };
    if (t.rows.empty()) throw ValidationError("outcome file has no rows");
    // order[k] is the row holding unit k; unit ids are 1-based and must be a permutation.
    std::vector<std::size_t> order(t.rows.size());
    for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
    if (int id = column(t, "unit_id"); id >= 0) {
        std::vector<int> seen(t.rows.size(), 0);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            double v = to_double(cell(r, id), "unit_id row " + std::to_string(r + 2));
            if (v != std::floor(v) || v < 1 || v > static_cast<double>(t.rows.size()))
                throw ValidationError("unit_id must be an integer in 1.." + std::to_string(t.rows.size()) +
                                      " (row " + std::to_string(r + 2) + ")");
            auto k = static_cast<std::size_t>(v) - 1;
            if (seen[k]++) throw ValidationError("duplicate unit_id " + cell(r, id));
            order[k] = r;
        }
    }
    if (y0 >= 0 && y1 >= 0) {
        PotentialOutcomes po;
        for (std::size_t r : order) {
            po.y0.push_back(to_double(cell(r, y0), "y0 row " + std::to_string(r + 2)));
            po.y1.push_back(to_double(cell(r, y1), "y1 row " + std::to_string(r + 2)));
        }
        po.validate();
        return po;
    }
    if (w >= 0 && yo >= 0) {
        std::vector<int> ind;
        ObservedData obs;
        std::vector<std::string> labels;
        for (std::size_t r : order) {
            const auto& s = cell(r, w);
            if (s != "0" && s != "1") throw ValidationError("w must be 0 or 1 (row " + std::to_string(r + 2) + ")");
            ind.push_back(s == "1");
            obs.y.push_back(to_double(cell(r, yo), "y_obs row " + std::to_string(r + 2)));
            if (pr >= 0) labels.push_back(cell(r, pr));
        }
        obs.w = AssignmentVector::from_indicators(ind);
        if (pr >= 0) {
            std::vector<std::pair<std::string, std::vector<int>>> groups;
            for (std::size_t u = 0; u < labels.size(); ++u) {
                auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == labels[u]; });
                if (it == groups.end())
                    groups.push_back({labels[u], {static_cast<int>(u)}});
                else
                    it->second.push_back(static_cast<int>(u));
            }
            for (const auto& [label, units] : groups) {
                if (units.size() != 2) throw ValidationError("pair '" + label + "' does not have exactly two units");
                obs.pairs.emplace_back(units[0], units[1]);
            }
        }
        obs.validate();
        return obs;
    }
    throw ValidationError("outcome file needs columns unit_id,y0,y1 or unit_id,w,y_obs");
}

OutcomeTable load_outcomes(const std::filesystem::path& path) { return outcomes_from_csv(read_csv(path)); }

QMatrix q_from_csv(const CsvTable& t) {
    std::vector<std::vector<std::string>> rows;
    // A header row is just the first row here; keep it if numeric.
    bool header_numeric = !t.header.empty();
    for (const auto& h : t.header) {
        char* end = nullptr;
        std::strtod(h.c_str(), &end);
        if (h.empty() || end != h.c_str() + h.size()) header_numeric = false;
    }
    if (header_numeric) rows.push_back(t.header);
    rows.insert(rows.end(), t.rows.begin(), t.rows.end());
    auto n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw ValidationError("Q file is empty");
    QMatrix q(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(r.size()) != n) throw ValidationError("Q must be square");
        for (Eigen::Index k = 0; k < n; ++k)
            q(i, k) = to_double(r[static_cast<std::size_t>(k)], "Q entry (" + std::to_string(i + 1) + "," + std::to_string(k + 1) + ")");
    }
    return q;
}

QMatrix load_q(const std::filesystem::path& path) { return q_from_csv(read_csv(path)); }

SubstituteMap substitutes_from_json(const nlohmann::json& j, SubstituteMode mode) {
    const nlohmann::json& sets = j.contains("sets") ? j.at("sets") : j;
    if (!sets.is_object()) throw ValidationError("substitute file must map anchors to lists of bit-strings");
    SubstituteMap g(mode, false);
    try {
        for (const auto& [anchor, members] : sets.items()) {
            SubstituteSet s{AssignmentVector::from_string(anchor), {}};
            for (const auto& m : members) s.members.push_back(AssignmentVector::from_string(m.get<std::string>()));
            g.insert(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed substitute file: ") + e.what());
    }
    return g;
}

SubstituteMap load_substitutes(const std::filesystem::path& path, SubstituteMode mode) {
    return substitutes_from_json(read_json(path), mode);
}

}  // namespace neyman
