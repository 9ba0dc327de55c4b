#include <algorithm>
#include <ostream>
#include <set>
#include <unordered_set>

#include "dsaw/error.hpp"
#include "dsaw/planner.hpp"

namespace dsaw {

namespace {

BitSet resized(const BitSet& b, std::size_t nbits) {
    BitSet out(nbits);
    if (nbits >= b.size()) {
        auto src = b.words();
        auto dst = out.words();
        std::copy(src.begin(), src.end(), dst.begin());
    } else {
        for (auto i : b.indices())
            if (i < nbits) out.set(i);
    }
    return out;
}

}  // namespace

PropId StripsTask::add_proposition(std::string name) {
    propositions.push_back(std::move(name));
    const std::size_t n = propositions.size();
    init = resized(init, n);
    goal = resized(goal, n);
    for (auto& a : actions) {
        a.pre_pos = resized(a.pre_pos, n);
        a.pre_neg = resized(a.pre_neg, n);
        a.add = resized(a.add, n);
        a.del = resized(a.del, n);
    }
    return static_cast<PropId>(n - 1);
}

Action& StripsTask::add_action(std::string name, Cost cost, std::string label) {
    const std::size_t n = propositions.size();
    actions.push_back({std::move(name), std::move(label), BitSet(n), BitSet(n), BitSet(n), BitSet(n), cost});
    return actions.back();
}

std::optional<PropId> StripsTask::find_proposition(std::string_view name) const {
    for (std::size_t i = 0; i < propositions.size(); ++i)
        if (propositions[i] == name) return static_cast<PropId>(i);
    return std::nullopt;
}

std::optional<std::size_t> StripsTask::find_action(std::string_view name) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i].name == name) return i;
    return std::nullopt;
}

void StripsTask::validate() const {
    const std::size_t n = propositions.size();
    if (init.size() != n || goal.size() != n) throw UsageError("init/goal width does not match the propositions");
    std::unordered_set<std::string> props(propositions.begin(), propositions.end());
    if (props.size() != n) throw UsageError("duplicate proposition names");
    std::unordered_set<std::string> names;
    for (const auto& a : actions) {
        if (a.pre_pos.size() != n || a.pre_neg.size() != n || a.add.size() != n || a.del.size() != n)
            throw UsageError("action '" + a.name + "' has sets of the wrong width");
        if (a.add.intersects(a.del)) throw UsageError("action '" + a.name + "' adds and deletes the same proposition");
        if (a.cost < 0) throw UsageError("action '" + a.name + "' has a negative cost");
        if (!names.insert(a.name).second) throw UsageError("duplicate action name '" + a.name + "'");
    }
}

void NetBenefitTask::validate() const {
    task.validate();
    std::set<PropId> goals;
    for (auto p : task.goal.indices()) goals.insert(static_cast<PropId>(p));
    std::set<PropId> keys;
    for (const auto& [p, u] : utility) {
        keys.insert(p);
        if (u < 0) throw UsageError("utility of '" + task.propositions.at(p) + "' is negative");
    }
    if (keys != goals) throw UsageError("utilities must be defined exactly on the goal propositions");
}

// ---------------------------------------------------------------------------

std::string pddl_identifier(std::string_view word) {
    std::string s;
    for (char c : word) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '-' || c == '_')
            s += static_cast<char>(std::tolower(u));
        else
            s += '_';
    }
    // Also keep clear of the names the soft-goal compilation introduces.
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])) || s == "end" || s.starts_with("collect-") ||
        s.starts_with("forgo-"))
        s = "w-" + s;
    return s;
}

NetBenefitTask build_paraphrase_task(const std::string& target_word, const BinaryEffect& target,
                                     std::span<const std::string> action_words,
                                     std::span<const BinaryEffect> action_effects, Cost action_cost,
                                     Cost utility) {
    if (action_words.size() != action_effects.size()) throw UsageError("action words and effects differ in count");
    if (std::find(action_words.begin(), action_words.end(), target_word) != action_words.end())
        throw UsageError("target word '" + target_word + "' must not be an action");
    if (action_cost < 0 || utility < 0) throw UsageError("costs and utilities must be non-negative");
    if (target.empty()) throw DataError("target '" + target_word + "' has an empty effect, so the goal is empty");
    const std::size_t e = target.width();

    NetBenefitTask nb;
    StripsTask& t = nb.task;
    for (std::size_t i = 0; i < e; ++i) t.propositions.push_back("add-" + std::to_string(i + 1));
    for (std::size_t i = 0; i < e; ++i) t.propositions.push_back("del-" + std::to_string(i + 1));
    const std::size_t n = 2 * e;
    t.init = BitSet(n);
    t.goal = BitSet(n);
    for (std::size_t i = 0; i < e; ++i) {
        if (target.add.test(i)) t.goal.set(i);
        if (target.del.test(i)) t.goal.set(e + i);
    }
    std::unordered_set<std::string> used;
    for (std::size_t k = 0; k < action_words.size(); ++k) {
        const BinaryEffect& x = action_effects[k];
        if (x.width() != e) throw UsageError("effect width of '" + action_words[k] + "' differs from the target");
        std::string name = pddl_identifier(action_words[k]);
        for (int suffix = 2; !used.insert(name).second; ++suffix)
            name = pddl_identifier(action_words[k]) + "-" + std::to_string(suffix);
        Action& a = t.add_action(name, action_cost, action_words[k]);
        for (std::size_t i = 0; i < e; ++i) {
            if (x.add.test(i)) {
                a.add.set(i);
                a.del.set(e + i);
            }
            if (x.del.test(i)) {
                a.add.set(e + i);
                a.del.set(i);
            }
        }
    }
    for (auto p : t.goal.indices()) nb.utility[static_cast<PropId>(p)] = utility;
    nb.validate();
    return nb;
}

void add_used_guard(StripsTask& task) {
    const std::size_t base = task.propositions.size();
    const std::size_t n = base + task.actions.size();
    for (const auto& a : task.actions) task.propositions.push_back("used-" + a.name);
    task.init = resized(task.init, n);
    task.goal = resized(task.goal, n);
    for (std::size_t k = 0; k < task.actions.size(); ++k) {
        Action& a = task.actions[k];
        a.pre_pos = resized(a.pre_pos, n);
        a.pre_neg = resized(a.pre_neg, n);
        a.add = resized(a.add, n);
        a.del = resized(a.del, n);
        a.pre_neg.set(base + k);
        a.add.set(base + k);
    }
}

StripsTask compile_net_benefit(const NetBenefitTask& nb, const CompileOptions& opt) {
    nb.validate();
    const StripsTask& src = nb.task;
    const std::size_t p = src.propositions.size();
    const auto goals = src.goal.indices();
    const std::size_t end_mode = p;
    const std::size_t marked0 = p + 1;
    const std::size_t used0 = marked0 + goals.size();
    const std::size_t n = used0 + (opt.used_guard ? src.actions.size() : 0);

    StripsTask t;
    t.propositions = src.propositions;
    t.propositions.push_back("end-mode");
    for (auto g : goals) t.propositions.push_back("marked-" + src.propositions[g]);
    if (opt.used_guard)
        for (const auto& a : src.actions) t.propositions.push_back("used-" + a.name);
    t.init = resized(src.init, n);
    t.goal = BitSet(n);
    for (std::size_t i = 0; i < goals.size(); ++i) t.goal.set(marked0 + i);

    for (std::size_t k = 0; k < src.actions.size(); ++k) {
        const Action& a = src.actions[k];
        Action c{a.name, a.label, resized(a.pre_pos, n), resized(a.pre_neg, n), resized(a.add, n),
                 resized(a.del, n), a.cost};
        c.pre_neg.set(end_mode);
        if (opt.used_guard) {
            c.pre_neg.set(used0 + k);
            c.add.set(used0 + k);
        }
        t.actions.push_back(std::move(c));
    }
    Action& end = t.add_action("end", 0);
    end.pre_neg.set(end_mode);
    end.add.set(end_mode);
    for (std::size_t i = 0; i < goals.size(); ++i) {
        const std::string& pname = src.propositions[goals[i]];
        for (bool collect : {true, false}) {
            Action& a = t.add_action((collect ? "collect-" : "forgo-") + pname,
                                     collect ? 0 : nb.utility.at(static_cast<PropId>(goals[i])));
            a.pre_pos.set(end_mode);
            if (collect)
                a.pre_pos.set(goals[i]);
            else
                a.pre_neg.set(goals[i]);
            a.pre_neg.set(marked0 + i);
            if (i > 0) a.pre_pos.set(marked0 + i - 1);
            a.add.set(marked0 + i);
        }
    }
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------

std::vector<std::string> Plan::names(const StripsTask& task) const {
    std::vector<std::string> out;
    for (auto a : actions) out.push_back(task.actions.at(a).name);
    return out;
}

std::vector<std::string> Plan::labels(const StripsTask& task) const {
    std::vector<std::string> out;
    for (auto a : actions)
        if (!task.actions.at(a).label.empty()) out.push_back(task.actions[a].label);
    return out;
}

ValidationReport validate_plan(const StripsTask& task, std::span<const std::string> plan_names) {
    std::vector<std::size_t> ids;
    for (const auto& name : plan_names) {
        auto id = task.find_action(name);
        if (!id) throw DataError("plan uses unknown action '" + name + "'");
        ids.push_back(*id);
    }
    Plan p;
    p.actions = std::move(ids);
    return validate_plan(task, p);
}

ValidationReport validate_plan(const StripsTask& task, const Plan& plan) {
    ValidationReport r;
    BitSet s = task.init;
    for (std::size_t i = 0; i < plan.actions.size(); ++i) {
        if (plan.actions[i] >= task.actions.size()) throw DataError("plan step " + std::to_string(i) + " is out of range");
        const Action& a = task.actions[plan.actions[i]];
        if (!a.pre_pos.is_subset_of(s)) {
            auto missing = (a.pre_pos - s).indices();
            r.failed_step = i;
            r.reason = "step " + std::to_string(i) + " (" + a.name + "): precondition " +
                       task.propositions[missing.front()] + " is false";
            r.end_state = s;
            return r;
        }
        if (a.pre_neg.intersects(s)) {
            auto bad = (a.pre_neg & s).indices();
            r.failed_step = i;
            r.reason = "step " + std::to_string(i) + " (" + a.name + "): negative precondition " +
                       task.propositions[bad.front()] + " is true";
            r.end_state = s;
            return r;
        }
        s = successor(s, a);
        r.cost += a.cost;
    }
    r.end_state = s;
    r.goal_reached = task.goal.is_subset_of(s);
    r.ok = true;
    if (!r.goal_reached) r.reason = "goal not reached";
    return r;
}

// ---------------------------------------------------------------------------

std::string_view to_string(AnytimeStatus s) {
    switch (s) {
        case AnytimeStatus::optimal_exhausted: return "optimal-exhausted";
        case AnytimeStatus::timeout: return "timeout";
        case AnytimeStatus::unsolvable: return "unsolvable";
    }
    return "?";
}

void write_plan_log_header(std::ostream& out) { out << "solution_index,cost,wall_clock_seconds,plan_length,plan\n"; }

void write_plan_log_row(std::ostream& out, const StripsTask& task, std::size_t index, const Plan& plan) {
    auto labels = plan.labels(task);
    out << index << ',' << plan.cost << ',' << plan.wall_seconds << ',' << labels.size() << ',';
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? " " : "") << labels[i];
    out << '\n';
}

void write_plan_log_status(std::ostream& out, AnytimeStatus status) { out << "# " << to_string(status) << '\n'; }

}  // namespace dsaw
