#pragma once

#include <algorithm>
#include <string>

#include "dsaw/grammar.hpp"
#include "dsaw/planner.hpp"
#include "dsaw/rng.hpp"

namespace dsaw::oracle {

struct TaskShape {
    std::size_t max_props = 6;
    std::size_t max_actions = 6;
    Cost max_cost = 9;
    double pre_rate = 0.25;     // chance of a precondition per proposition
    double effect_rate = 0.35;  // chance of an add or delete per proposition
    std::size_t labels = 0;     // >0: label actions with one of this many letters
};

inline StripsTask random_task(const TaskShape& shape, Rng& rng) {
    StripsTask t;
    const std::size_t np = 1 + rng.below(shape.max_props);
    for (std::size_t i = 0; i < np; ++i) t.add_proposition("p" + std::to_string(i));
    for (std::size_t i = 0; i < np; ++i) {
        if (rng.bernoulli(0.3)) t.init.set(i);
        if (rng.bernoulli(0.4)) t.goal.set(i);
    }
    const std::size_t na = 1 + rng.below(shape.max_actions);
    for (std::size_t k = 0; k < na; ++k) {
        std::string label;
        if (shape.labels) label = std::string(1, static_cast<char>('x' + rng.below(shape.labels)));
        Action& a = t.add_action("act" + std::to_string(k), static_cast<Cost>(rng.below(shape.max_cost + 1)), label);
        for (std::size_t i = 0; i < np; ++i) {
            if (rng.bernoulli(shape.pre_rate)) (rng.bernoulli(0.5) ? a.pre_pos : a.pre_neg).set(i);
            if (rng.bernoulli(shape.effect_rate)) (rng.bernoulli(0.5) ? a.add : a.del).set(i);
        }
    }
    t.validate();
    return t;
}

/// Soft-goal tasks where most optima are nontrivial: goals start false,
/// utilities are positive and actions are cheap and mostly additive.
struct NetBenefitShape {
    std::size_t max_props = 6;
    std::size_t max_actions = 6;
    Cost max_cost = 4;
    double pre_rate = 0.15;
    double add_rate = 0.4;
    double del_rate = 0.15;
};

inline NetBenefitTask random_net_benefit(const NetBenefitShape& shape, Rng& rng) {
    StripsTask t;
    const std::size_t np = 2 + rng.below(shape.max_props - 1);
    for (std::size_t i = 0; i < np; ++i) t.add_proposition("p" + std::to_string(i));
    for (std::size_t i = 0; i < np; ++i) {
        if (rng.bernoulli(0.6))
            t.goal.set(i);
        else if (rng.bernoulli(0.4))
            t.init.set(i);
    }
    const std::size_t na = 2 + rng.below(shape.max_actions - 1);
    for (std::size_t k = 0; k < na; ++k) {
        Action& a = t.add_action("act" + std::to_string(k), 1 + static_cast<Cost>(rng.below(shape.max_cost)), "");
        for (std::size_t i = 0; i < np; ++i) {
            if (rng.bernoulli(shape.pre_rate))
                a.pre_pos.set(i);
            else if (rng.bernoulli(shape.add_rate))
                a.add.set(i);
            else if (rng.bernoulli(shape.del_rate))
                a.del.set(i);
        }
    }
    t.validate();
    NetBenefitTask nb{std::move(t), {}};
    for (auto p : nb.task.goal.indices()) nb.utility[static_cast<PropId>(p)] = 1 + static_cast<Cost>(rng.below(9));
    nb.validate();
    return nb;
}

/// Nonterminals S, A, B, C (S is the start), terminals a, b, c.
inline RightRegularGrammar random_grammar(Rng& rng, std::size_t max_nonterminals = 4, std::size_t max_terminals = 3,
                                          std::size_t max_rules = 8) {
    RightRegularGrammar g;
    const char* names[] = {"S", "A", "B", "C"};
    const std::size_t nn = 1 + rng.below(max_nonterminals);
    const std::size_t nt = 1 + rng.below(max_terminals);
    for (std::size_t i = 0; i < nn; ++i) g.nonterminals.push_back(names[i]);
    for (std::size_t i = 0; i < nt; ++i) g.terminals.push_back(std::string(1, static_cast<char>('a' + i)));
    g.start = "S";
    const std::size_t nr = 1 + rng.below(max_rules);
    for (std::size_t r = 0; r < nr; ++r) {
        GrammarRule rule;
        rule.lhs = g.nonterminals[rng.below(nn)];
        const auto shape = rng.below(6);
        if (shape < 4) {
            rule.terminal = g.terminals[rng.below(nt)];
            rule.next = g.nonterminals[rng.below(nn)];
        } else if (shape == 4) {
            rule.terminal = g.terminals[rng.below(nt)];
        }
        if (std::find(g.rules.begin(), g.rules.end(), rule) == g.rules.end()) g.rules.push_back(rule);
    }
    g.validate();
    return g;
}

}  // namespace dsaw::oracle
