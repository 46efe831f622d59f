#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "neyman/contrast.hpp"
#include "neyman/decomposition.hpp"
#include "neyman/design.hpp"
#include "neyman/outcomes.hpp"

namespace neyman {

// Design files: {"n", "support": ["1100", ...], "probs": [...]} or
// {"kind": "crd" | "matched_pair" | "rerandomized" | "explicit", ...}.
Design design_from_json(const nlohmann::json& j);
Design load_design(const std::filesystem::path& path);
nlohmann::json design_to_json(const Design& d);

nlohmann::json to_json(const AssumptionReport& r);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

// unit_id,y0,y1 -> science table; unit_id,w,y_obs[,pair] -> observed data.
using OutcomeTable = std::variant<PotentialOutcomes, ObservedData>;
OutcomeTable load_outcomes(const std::filesystem::path& path);
OutcomeTable outcomes_from_csv(const CsvTable& t);

QMatrix load_q(const std::filesystem::path& path);
QMatrix q_from_csv(const CsvTable& t);

// {"1100": ["1001", "0110"], ...}, optionally wrapped as {"mode": ..., "sets": {...}}.
SubstituteMap substitutes_from_json(const nlohmann::json& j, SubstituteMode mode);
SubstituteMap load_substitutes(const std::filesystem::path& path, SubstituteMode mode);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace neyman
