#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "neyman/design.hpp"
#include "neyman/estimators.hpp"
#include "neyman/outcomes.hpp"
#include "neyman/substitutes.hpp"

namespace neyman {

inline constexpr std::size_t kDefaultSubstituteCap = 1'000'000;

struct SubstituteSet {
    AssignmentVector anchor;
    std::vector<AssignmentVector> members;  // sorted

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }
    bool contains(const AssignmentVector& w) const;
    // w in members <=> complement(w) in members
    bool label_closed() const;
};

// Substitute sets keyed by anchor. `full` marks G*, which enables the symmetric shortcut
// W in G*(w) <=> w in G*(W).
class SubstituteMap {
public:
    SubstituteMap() = default;
    SubstituteMap(SubstituteMode mode, bool full) : mode_(mode), full_(full) {}

    void insert(SubstituteSet s);
    const SubstituteSet* find(const AssignmentVector& w) const;
    std::size_t size() const { return sets_.size(); }
    bool full() const { return full_; }
    SubstituteMode mode() const { return mode_; }
    const std::unordered_map<std::uint64_t, SubstituteSet>& sets() const { return sets_; }

private:
    SubstituteMode mode_ = SubstituteMode::equal_size;
    bool full_ = false;
    std::unordered_map<std::uint64_t, SubstituteSet> sets_;
};

SubstituteSet full_substitute_set(const Design& d, const AssignmentVector& w, SubstituteMode mode,
                                  std::size_t cap = kDefaultSubstituteCap);
SubstituteMap full_substitute_map(const Design& d, SubstituteMode mode, std::size_t cap = kDefaultSubstituteCap);

// Checks a user-supplied map: anchors and members in the support, predicate satisfied.
void validate_substitute_map(const Design& d, const SubstituteMap& g);

// Restricts every set of g to label-closed pairs {w~, 1-w~}.
SubstituteMap label_closed_part(const SubstituteMap& g);

VarianceEstimate v_sub(const Design& d, const ObservedData& obs, const SubstituteMap& g);
VarianceEstimate v_pair(const ObservedData& obs);
VarianceEstimate mse_sub_epsem(const Design& d, const ObservedData& obs, const SubstituteMap& g);

}  // namespace neyman
