#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "dsaw/planner.hpp"

namespace dsaw {

/// X -> a Y, X -> a, or X -> (epsilon). Empty `terminal`/`next` mean absent.
struct GrammarRule {
    std::string lhs;
    std::string terminal;
    std::string next;

    friend bool operator==(const GrammarRule&, const GrammarRule&) = default;
};

struct RightRegularGrammar {
    std::vector<std::string> nonterminals;
    std::vector<std::string> terminals;
    std::vector<GrammarRule> rules;
    std::string start;

    /// Throws UsageError if a rule names an undeclared symbol or has the
    /// unsupported X -> Y shape.
    void validate() const;
};

/// Text format, one rule per line ("#" starts a comment):
///   S -> a S      S -> b      S ->      S -> eps
/// Symbols starting with an uppercase letter are nonterminals. An optional
/// "%start X" line picks the start symbol, otherwise the first left-hand side.
/// Throws ParseError quoting the rule on anything not right-regular.
RightRegularGrammar parse_grammar(std::istream& in);
void write_grammar(std::ostream& out, const RightRegularGrammar& g);

using Word = std::vector<std::string>;
using Language = std::set<Word>;

/// Terminal strings of length <= max_len.
Language grammar_language(const RightRegularGrammar& g, std::size_t max_len);

/// Label sequences (length <= max_len) of all plans of `task`.
Language plan_language(const StripsTask& task, std::size_t max_len);

/// Propositions: nonterminals then "goal". One unit-cost action per rule,
/// labelled with its terminal.
StripsTask grammar_to_task(const RightRegularGrammar& g);

/// One nonterminal per reachable state. Unlabelled actions are folded in by
/// epsilon closure. Throws UsageError if more than `state_bound` states are
/// reachable.
RightRegularGrammar task_to_grammar(const StripsTask& task, std::size_t state_bound);

}  // namespace dsaw
