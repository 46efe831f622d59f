#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neyman/numeric.hpp"

namespace neyman {

struct VerifyCheck {
    std::string name;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::size_t cases = 0;
    bool passed = true;
};

struct VerifyReport {
    std::string suite;
    std::vector<VerifyCheck> checks;
    bool passed() const;
    nlohmann::json to_json() const;
};

// Suite tokens accepted by run_verify, excluding "all".
const std::vector<std::string>& verify_suites();

// Runs a self-contained identity suite on built-in desk-scale designs. "all" runs every suite.
// Throws ValidationError for an unknown suite name.
VerifyReport run_verify(const std::string& suite, std::uint64_t seed = 0, const Tolerances& tol = {});

}  // namespace neyman
