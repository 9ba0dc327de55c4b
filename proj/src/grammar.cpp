#include "dsaw/grammar.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "dsaw/error.hpp"

namespace dsaw {

namespace {

bool is_nonterminal(const std::string& s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void add_unique(std::vector<std::string>& v, const std::string& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

void RightRegularGrammar::validate() const {
    auto declared = [](const std::vector<std::string>& v, const std::string& x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    if (!declared(nonterminals, start)) throw UsageError("start symbol '" + start + "' is not a nonterminal");
    for (const auto& r : rules) {
        if (!declared(nonterminals, r.lhs)) throw UsageError("rule for undeclared nonterminal '" + r.lhs + "'");
        if (!r.next.empty() && r.terminal.empty())
            throw UsageError("rule " + r.lhs + " -> " + r.next + " is not right-regular");
        if (!r.next.empty() && !declared(nonterminals, r.next))
            throw UsageError("rule uses undeclared nonterminal '" + r.next + "'");
        if (!r.terminal.empty() && !declared(terminals, r.terminal))
            throw UsageError("rule uses undeclared terminal '" + r.terminal + "'");
    }
}

RightRegularGrammar parse_grammar(std::istream& in) {
    RightRegularGrammar g;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        // Accept the arrow and epsilon as typeset symbols too.
        for (auto [from, to] : {std::pair<std::string, std::string>{"→", "->"}, {"ε", "eps"}})
            for (std::size_t p; (p = line.find(from)) != std::string::npos;) line.replace(p, from.size(), to);
        const std::string text = trim(line);
        if (text.empty()) continue;
        if (text.starts_with("%start")) {
            std::istringstream s(text.substr(6));
            std::string sym, extra;
            if (!(s >> sym) || (s >> extra) || !is_nonterminal(sym))
                throw ParseError("'%start' needs one nonterminal: " + text, lineno, 1);
            g.start = sym;
            continue;
        }
        auto arrow = text.find("->");
        if (arrow == std::string::npos) throw ParseError("expected 'X -> ...' in rule '" + text + "'", lineno, 1);
        std::istringstream ls(text.substr(0, arrow)), rs(text.substr(arrow + 2));
        std::vector<std::string> lhs, rhs;
        for (std::string t; ls >> t;) lhs.push_back(t);
        for (std::string t; rs >> t;) rhs.push_back(t);
        if (rhs.size() == 1 && (rhs[0] == "eps" || rhs[0] == "epsilon")) rhs.clear();
        const int col = static_cast<int>(arrow) + 3;
        if (lhs.size() != 1 || !is_nonterminal(lhs[0]))
            throw ParseError("left side must be one nonterminal in rule '" + text + "'", lineno, 1);
        GrammarRule r{lhs[0], {}, {}};
        if (rhs.size() > 2 || (rhs.size() >= 1 && is_nonterminal(rhs[0])) ||
            (rhs.size() == 2 && !is_nonterminal(rhs[1])))
            throw ParseError("rule '" + text + "' is not right-regular", lineno, col);
        if (!rhs.empty()) r.terminal = rhs[0];
        if (rhs.size() == 2) r.next = rhs[1];
        add_unique(g.nonterminals, r.lhs);
        if (!r.next.empty()) add_unique(g.nonterminals, r.next);
        if (!r.terminal.empty()) add_unique(g.terminals, r.terminal);
        g.rules.push_back(r);
    }
    if (g.rules.empty()) throw ParseError("grammar has no rules", lineno, 1);
    if (g.start.empty()) g.start = g.rules.front().lhs;
    add_unique(g.nonterminals, g.start);
    g.validate();
    return g;
}

void write_grammar(std::ostream& out, const RightRegularGrammar& g) {
    out << "%start " << g.start << '\n';
    for (const auto& r : g.rules) {
        out << r.lhs << " ->";
        if (r.terminal.empty())
            out << " eps";
        else
            out << ' ' << r.terminal;
        if (!r.next.empty()) out << ' ' << r.next;
        out << '\n';
    }
}

Language grammar_language(const RightRegularGrammar& g, std::size_t max_len) {
    Language lang;
    std::map<std::string, std::vector<const GrammarRule*>> by_lhs;
    for (const auto& r : g.rules) by_lhs[r.lhs].push_back(&r);
    // Breadth-first over (nonterminal, prefix); each step consumes one terminal.
    std::deque<std::pair<std::string, Word>> queue{{g.start, {}}};
    std::set<std::pair<std::string, Word>> seen{{g.start, {}}};
    while (!queue.empty()) {
        auto [x, prefix] = queue.front();
        queue.pop_front();
        for (const GrammarRule* r : by_lhs[x]) {
            Word w = prefix;
            if (!r->terminal.empty()) w.push_back(r->terminal);
            if (w.size() > max_len) continue;
            if (r->next.empty()) {
                lang.insert(w);
            } else if (seen.insert({r->next, w}).second) {
                queue.push_back({r->next, w});
            }
        }
    }
    return lang;
}

Language plan_language(const StripsTask& task, std::size_t max_len) {
    Language lang;
    std::deque<std::pair<BitSet, Word>> queue{{task.init, {}}};
    std::set<std::pair<std::string, Word>> seen{{task.init.to_string(), {}}};
    while (!queue.empty()) {
        auto [s, w] = queue.front();
        queue.pop_front();
        if (task.goal.is_subset_of(s)) lang.insert(w);
        for (const auto& a : task.actions) {
            if (!applicable(s, a)) continue;
            Word w2 = w;
            if (!a.label.empty()) w2.push_back(a.label);
            if (w2.size() > max_len) continue;
            BitSet s2 = successor(s, a);
            if (seen.insert({s2.to_string(), w2}).second) queue.push_back({std::move(s2), std::move(w2)});
        }
    }
    return lang;
}

StripsTask grammar_to_task(const RightRegularGrammar& g) {
    g.validate();
    StripsTask t;
    t.propositions = g.nonterminals;
    t.propositions.push_back("goal");
    const std::size_t n = t.propositions.size();
    const std::size_t goal = n - 1;
    auto index = [&](const std::string& x) {
        return static_cast<std::size_t>(std::find(g.nonterminals.begin(), g.nonterminals.end(), x) -
                                        g.nonterminals.begin());
    };
    t.init = BitSet(n);
    t.init.set(index(g.start));
    t.goal = BitSet(n);
    t.goal.set(goal);
    for (std::size_t i = 0; i < g.rules.size(); ++i) {
        const auto& r = g.rules[i];
        std::string name = "r" + std::to_string(i + 1) + "-" + pddl_identifier(r.lhs);
        if (!r.terminal.empty()) name += "-" + pddl_identifier(r.terminal);
        if (!r.next.empty()) name += "-" + pddl_identifier(r.next);
        Action& a = t.add_action(name, 1, r.terminal);
        const std::size_t x = index(r.lhs);
        const std::size_t y = r.next.empty() ? goal : index(r.next);
        a.pre_pos.set(x);
        a.add.set(y);
        if (x != y) a.del.set(x);  // X -> a X keeps X
    }
    t.validate();
    return t;
}

RightRegularGrammar task_to_grammar(const StripsTask& task, std::size_t state_bound) {
    task.validate();
    // Reachable states, breadth first.
    std::vector<BitSet> states{task.init};
    std::unordered_map<BitSet, std::size_t> index{{task.init, 0}};
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges;  // (action, target)
    for (std::size_t i = 0; i < states.size(); ++i) {
        edges.emplace_back();
        for (std::size_t a = 0; a < task.actions.size(); ++a) {
            if (!applicable(states[i], task.actions[a])) continue;
            BitSet s2 = successor(states[i], task.actions[a]);
            auto [it, fresh] = index.emplace(s2, states.size());
            if (fresh) {
                if (states.size() >= state_bound)
                    throw UsageError("more than " + std::to_string(state_bound) +
                                     " reachable states; raise the state bound");
                states.push_back(s2);
            }
            edges[i].push_back({a, it->second});
        }
    }

    // Epsilon closure over unlabelled actions.
    const std::size_t n = states.size();
    std::vector<std::vector<std::size_t>> closure(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{i};
        seen[i] = 1;
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            closure[i].push_back(u);
            for (auto [a, v] : edges[u])
                if (task.actions[a].label.empty() && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
        }
    }

    RightRegularGrammar g;
    for (std::size_t i = 0; i < n; ++i) g.nonterminals.push_back("Q" + std::to_string(i));
    g.start = "Q0";
    std::set<std::tuple<std::size_t, std::string, std::size_t>> prods;
    for (std::size_t i = 0; i < n; ++i) {
        bool accepting = false;
        for (std::size_t u : closure[i]) {
            if (task.goal.is_subset_of(states[u])) accepting = true;
            for (auto [a, v] : edges[u])
                if (!task.actions[a].label.empty()) prods.insert({i, task.actions[a].label, v});
        }
        if (accepting) g.rules.push_back({g.nonterminals[i], {}, {}});
    }
    for (const auto& [i, label, v] : prods) {
        g.rules.push_back({g.nonterminals[i], label, g.nonterminals[v]});
        add_unique(g.terminals, label);
    }
    std::sort(g.terminals.begin(), g.terminals.end());
    g.validate();
    return g;
}

}  // namespace dsaw
