#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsaw/algebra.hpp"
#include "dsaw/bitset.hpp"

namespace dsaw {

using PropId = std::uint32_t;
using Cost = long;

/// Ground STRIPS action with negative preconditions. `label` is the word
/// (or grammar terminal) the action stands for; meta actions leave it empty.
struct Action {
    std::string name;
    std::string label;
    BitSet pre_pos;
    BitSet pre_neg;
    BitSet add;
    BitSet del;
    Cost cost = 1;

    friend bool operator==(const Action&, const Action&) = default;
};

struct StripsTask {
    std::vector<std::string> propositions;
    std::vector<Action> actions;
    BitSet init;
    BitSet goal;

    std::size_t num_propositions() const { return propositions.size(); }

    /// Appends a proposition and widens every bit vector. Returns its id.
    PropId add_proposition(std::string name);
    /// Appends an action with all-empty sets of the current width.
    Action& add_action(std::string name, Cost cost, std::string label = {});

    std::optional<PropId> find_proposition(std::string_view name) const;
    std::optional<std::size_t> find_action(std::string_view name) const;

    /// Throws UsageError on overlapping add/del, bad widths, duplicate names
    /// or negative costs.
    void validate() const;

    friend bool operator==(const StripsTask&, const StripsTask&) = default;
};

inline bool applicable(const BitSet& s, const Action& a) {
    return a.pre_pos.is_subset_of(s) && !a.pre_neg.intersects(s);
}
inline BitSet successor(const BitSet& s, const Action& a) { return (s - a.del) | a.add; }

/// Number of goal propositions missing from `state`.
inline std::size_t goal_count(const BitSet& state, const BitSet& goal) { return goal.count_missing_from(state); }

/// Soft-goal task: unreached goals cost their utility.
struct NetBenefitTask {
    StripsTask task;
    std::map<PropId, Cost> utility;  // keys are exactly the goal propositions

    void validate() const;
};

// ---------------------------------------------------------------------------

/// Planning task whose plans are word sequences reproducing `target`.
/// Propositions are add-1..add-E then del-1..del-E; each word becomes an
/// action named after it (sanitized for PDDL) with cost `action_cost` and
/// every goal gets utility `utility`. Throws UsageError if `target_word`
/// appears among the action words, DataError if the target effect is empty.
NetBenefitTask build_paraphrase_task(const std::string& target_word, const BinaryEffect& target,
                                     std::span<const std::string> action_words,
                                     std::span<const BinaryEffect> action_effects, Cost action_cost,
                                     Cost utility);

/// Lowercase PDDL-safe identifier: [a-z][a-z0-9_-]*.
std::string pddl_identifier(std::string_view word);

struct CompileOptions {
    /// Forbid using an action twice via used-<action> propositions.
    bool used_guard = true;
};

/// Compiles soft goals away (end-mode / collect / forgo / end). The result's
/// optimal cost equals the net-benefit optimum over plans that respect the
/// used-guard.
StripsTask compile_net_benefit(const NetBenefitTask& nb, const CompileOptions& opt = {});

/// Adds used-<action> propositions so each action can fire at most once.
void add_used_guard(StripsTask& task);

// ---------------------------------------------------------------------------

struct Plan {
    std::vector<std::size_t> actions;
    Cost cost = 0;
    double wall_seconds = 0.0;

    std::vector<std::string> names(const StripsTask& task) const;
    /// Non-empty labels in order.
    std::vector<std::string> labels(const StripsTask& task) const;
};

struct ValidationReport {
    bool ok = false;
    bool goal_reached = false;
    std::size_t failed_step = 0;  // meaningful when !ok
    std::string reason;
    BitSet end_state;
    Cost cost = 0;
};

/// Replays `plan_names` from the initial state. Throws DataError on an
/// unknown action name.
ValidationReport validate_plan(const StripsTask& task, std::span<const std::string> plan_names);
ValidationReport validate_plan(const StripsTask& task, const Plan& plan);

enum class AnytimeStatus { optimal_exhausted, timeout, unsolvable };
std::string_view to_string(AnytimeStatus s);

struct AnytimeOptions {
    /// Weighted A* weights after the initial greedy phase. The last weight is
    /// repeated until the search space under the incumbent is exhausted.
    std::vector<double> weights = {10, 5, 3, 2, 1};
    double time_budget_seconds = std::numeric_limits<double>::infinity();
};

struct SearchStats {
    std::size_t expanded = 0;
    std::size_t generated = 0;
    std::size_t states = 0;
    std::size_t phases = 0;
};

struct AnytimeResult {
    std::vector<Plan> plans;  // strictly decreasing cost
    AnytimeStatus status = AnytimeStatus::unsolvable;
    SearchStats stats;

    const Plan* best() const { return plans.empty() ? nullptr : &plans.back(); }
};

/// Greedy best-first search with the goal-count heuristic, then weighted A*
/// with decreasing weights, each phase pruned by the incumbent cost. A phase
/// that empties its open list proves no cheaper plan exists.
AnytimeResult solve_anytime(const StripsTask& task, const AnytimeOptions& opt = {},
                            const std::function<void(const Plan&)>& on_plan = {});

/// CSV: solution_index,cost,wall_clock_seconds,plan_length,plan
void write_plan_log_header(std::ostream& out);
void write_plan_log_row(std::ostream& out, const StripsTask& task, std::size_t index, const Plan& plan);
void write_plan_log_status(std::ostream& out, AnytimeStatus status);

}  // namespace dsaw
