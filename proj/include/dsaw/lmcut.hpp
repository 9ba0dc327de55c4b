#pragma once

#include <limits>
#include <span>
#include <vector>

#include "dsaw/planner.hpp"

namespace dsaw {

/// Landmark-cut lower bound on the cost to reach the goal, computed on the
/// delete relaxation with negative preconditions dropped. Admissible, so
/// the planner can prune any node whose g + h reaches the incumbent cost.
class LmCut {
public:
    static constexpr Cost kDeadEnd = std::numeric_limits<Cost>::max();

    explicit LmCut(const StripsTask& task);

    /// kDeadEnd if the goal is unreachable even in the relaxation.
    Cost operator()(std::span<const BitSet::Word> state);
    Cost operator()(const BitSet& state) { return (*this)(state.words()); }

private:
    struct RelaxedAction {
        std::vector<std::size_t> pre;
        std::vector<std::size_t> add;
        Cost cost = 0;
    };

    bool compute_hmax(std::span<const BitSet::Word> state);

    std::size_t nprops_ = 0;  // task propositions, then the artificial start and goal facts
    std::size_t start_ = 0, goal_ = 0;
    std::vector<RelaxedAction> actions_;
    std::vector<std::vector<std::size_t>> consumers_;  // fact -> actions with it as a precondition
    std::vector<std::vector<std::size_t>> achievers_;  // fact -> actions adding it

    // Scratch, reused across calls.
    std::vector<Cost> cost_, fact_h_, action_h_;
    std::vector<std::size_t> unsatisfied_, pcf_;
    std::vector<char> in_goal_zone_, reached_;
};

}  // namespace dsaw
