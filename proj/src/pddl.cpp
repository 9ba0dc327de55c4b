#include "dsaw/pddl.hpp"

#include <cctype>
#include <sstream>
#include <unordered_map>

#include "dsaw/error.hpp"

namespace dsaw {

namespace {

void atoms(std::ostream& out, const StripsTask& t, const BitSet& pos, const BitSet* neg) {
    for (auto i : pos.indices()) out << " (" << t.propositions[i] << ')';
    if (neg)
        for (auto i : neg->indices()) out << " (not (" << t.propositions[i] << "))";
}

}  // namespace

PddlText emit_pddl(const StripsTask& task, std::string_view domain_name, std::string_view problem_name) {
    task.validate();
    std::ostringstream d;
    d << "(define (domain " << domain_name << ")\n"
      << "  (:requirements :strips :negative-preconditions :action-costs)\n"
      << "  (:predicates";
    for (const auto& p : task.propositions) d << "\n    (" << p << ')';
    d << ")\n  (:functions (total-cost) - number)\n";
    for (const auto& a : task.actions) {
        if (!a.label.empty()) d << "  ;; label: " << a.label << '\n';
        d << "  (:action " << a.name << "\n    :parameters ()\n    :precondition (and";
        atoms(d, task, a.pre_pos, &a.pre_neg);
        d << ")\n    :effect (and";
        atoms(d, task, a.add, nullptr);
        for (auto i : a.del.indices()) d << " (not (" << task.propositions[i] << "))";
        d << " (increase (total-cost) " << a.cost << ")))\n";
    }
    d << ")\n";

    std::ostringstream p;
    p << "(define (problem " << problem_name << ")\n  (:domain " << domain_name << ")\n  (:init";
    atoms(p, task, task.init, nullptr);
    p << " (= (total-cost) 0))\n  (:goal (and";
    atoms(p, task, task.goal, nullptr);
    p << "))\n  (:metric minimize (total-cost)))\n";
    return {d.str(), p.str()};
}

// ---------------------------------------------------------------------------

namespace {

struct Node {
    bool list = false;
    std::string atom;
    std::vector<Node> items;
    std::string label;  // ";; label:" comment seen right before this list
    int line = 1, column = 1;
};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    Node read_document() {
        skip();
        if (pos_ >= text_.size()) fail("empty input");
        Node n = read();
        skip();
        if (pos_ < text_.size()) fail("unexpected text after the closing parenthesis");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, col_); }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                std::size_t end = text_.find('\n', pos_);
                if (end == std::string_view::npos) end = text_.size();
                std::string_view comment = text_.substr(pos_, end - pos_);
                constexpr std::string_view tag = ";; label: ";
                if (comment.starts_with(tag)) pending_label_ = std::string(comment.substr(tag.size()));
                while (pos_ < end) advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    Node read() {
        Node n;
        n.line = line_;
        n.column = col_;
        char c = text_[pos_];
        if (c == '(') {
            n.list = true;
            n.label = std::move(pending_label_);
            pending_label_.clear();
            advance();
            for (;;) {
                skip();
                if (pos_ >= text_.size()) fail("missing ')'");
                if (text_[pos_] == ')') {
                    advance();
                    return n;
                }
                n.items.push_back(read());
            }
        }
        if (c == ')') fail("unbalanced ')'");
        while (pos_ < text_.size()) {
            c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';') break;
            n.atom += c;
            advance();
        }
        return n;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    std::string pending_label_;
};

[[noreturn]] void reject(const Node& n, const std::string& what) { throw ParseError(what, n.line, n.column); }

// Keywords are case-insensitive; names keep their case.
bool is_atom(const Node& n, std::string_view s) {
    if (n.list || n.atom.size() != s.size()) return false;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(n.atom[i])) != s[i]) return false;
    return true;
}

const std::string& symbol(const Node& n, const char* what) {
    if (n.list || n.atom.empty()) reject(n, std::string("expected ") + what);
    return n.atom;
}

/// (name) as a ground atom.
const std::string& ground_atom(const Node& n) {
    if (!n.list || n.items.size() != 1 || n.items[0].list) reject(n, "expected a ground atom like (p)");
    return n.items[0].atom;
}

struct Context {
    StripsTask task;
    std::unordered_map<std::string, std::size_t> prop;

    std::size_t lookup(const Node& n) {
        const std::string& name = ground_atom(n);
        auto it = prop.find(name);
        if (it == prop.end()) reject(n, "undeclared predicate '" + name + "'");
        return it->second;
    }
};

/// (and l1 l2 ...) or a single literal. Cost terms are handled by the caller.
template <typename OnLiteral>
void conjunction(const Node& n, OnLiteral on) {
    if (n.list && !n.items.empty() && is_atom(n.items[0], "and")) {
        for (std::size_t i = 1; i < n.items.size(); ++i) on(n.items[i]);
    } else {
        on(n);
    }
}

bool is_not(const Node& n) { return n.list && n.items.size() == 2 && is_atom(n.items[0], "not"); }

void parse_action(Context& ctx, const Node& n) {
    if (n.items.size() < 2) reject(n, "action needs a name");
    Action& a = ctx.task.add_action(symbol(n.items[1], "an action name"), 0, n.label);
    bool has_cost = false;
    for (std::size_t i = 2; i < n.items.size(); i += 2) {
        const Node& key = n.items[i];
        if (i + 1 >= n.items.size()) reject(key, "missing value");
        const Node& val = n.items[i + 1];
        if (is_atom(key, ":parameters")) {
            if (!val.list || !val.items.empty()) reject(val, "only parameterless actions are supported");
        } else if (is_atom(key, ":precondition")) {
            conjunction(val, [&](const Node& lit) {
                if (is_not(lit))
                    a.pre_neg.set(ctx.lookup(lit.items[1]));
                else
                    a.pre_pos.set(ctx.lookup(lit));
            });
        } else if (is_atom(key, ":effect")) {
            conjunction(val, [&](const Node& lit) {
                if (lit.list && lit.items.size() == 3 && is_atom(lit.items[0], "increase")) {
                    const Node& fn = lit.items[1];
                    if (!fn.list || fn.items.size() != 1 || !is_atom(fn.items[0], "total-cost"))
                        reject(fn, "only (total-cost) can be increased");
                    const std::string& v = symbol(lit.items[2], "an integer cost");
                    std::size_t used = 0;
                    long c = -1;
                    try {
                        c = std::stol(v, &used);
                    } catch (const std::exception&) {
                        used = 0;
                    }
                    if (used != v.size() || c < 0) reject(lit.items[2], "cost must be a non-negative integer");
                    if (has_cost) reject(lit, "duplicate cost effect");
                    a.cost = c;
                    has_cost = true;
                } else if (is_not(lit)) {
                    a.del.set(ctx.lookup(lit.items[1]));
                } else {
                    a.add.set(ctx.lookup(lit));
                }
            });
        } else {
            reject(key, "unsupported action field '" + (key.list ? std::string("(...)") : key.atom) + "'");
        }
    }
    if (!has_cost) reject(n, "action '" + a.name + "' lacks an (increase (total-cost) c) effect");
    if (a.add.intersects(a.del)) reject(n, "action '" + a.name + "' adds and deletes the same atom");
}

void expect_header(const Node& root, std::string_view kind, const char* what) {
    if (!root.list || root.items.size() < 2 || !is_atom(root.items[0], "define")) reject(root, "expected (define ...)");
    const Node& h = root.items[1];
    if (!h.list || h.items.size() != 2 || !is_atom(h.items[0], kind)) reject(h, std::string("expected ") + what);
}

}  // namespace

StripsTask parse_pddl(std::string_view domain, std::string_view problem) {
    Context ctx;
    const Node d = Reader(domain).read_document();
    expect_header(d, "domain", "(domain <name>)");
    std::vector<const Node*> actions;
    bool seen_predicates = false;
    for (std::size_t i = 2; i < d.items.size(); ++i) {
        const Node& sec = d.items[i];
        if (!sec.list || sec.items.empty()) reject(sec, "expected a domain section");
        const Node& head = sec.items[0];
        if (is_atom(head, ":requirements")) {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const Node& r = sec.items[k];
                if (!is_atom(r, ":strips") && !is_atom(r, ":negative-preconditions") && !is_atom(r, ":action-costs"))
                    reject(r, "unsupported requirement " + symbol(r, "a requirement"));
            }
        } else if (is_atom(head, ":predicates")) {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const std::string& name = ground_atom(sec.items[k]);
                if (!ctx.prop.emplace(name, ctx.task.propositions.size()).second)
                    reject(sec.items[k], "duplicate predicate '" + name + "'");
                ctx.task.propositions.push_back(name);
            }
            seen_predicates = true;
        } else if (is_atom(head, ":functions")) {
            if (sec.items.size() != 4 || !sec.items[1].list || sec.items[1].items.size() != 1 ||
                !is_atom(sec.items[1].items[0], "total-cost") || !is_atom(sec.items[2], "-") ||
                !is_atom(sec.items[3], "number"))
                reject(sec, "only (:functions (total-cost) - number) is supported");
        } else if (is_atom(head, ":action")) {
            if (!seen_predicates) reject(sec, ":action before :predicates");
            actions.push_back(&sec);
        } else {
            reject(head, "unsupported domain section");
        }
    }
    const std::size_t n = ctx.task.propositions.size();
    ctx.task.init = BitSet(n);
    ctx.task.goal = BitSet(n);
    for (const Node* a : actions) parse_action(ctx, *a);

    const Node p = Reader(problem).read_document();
    expect_header(p, "problem", "(problem <name>)");
    bool has_goal = false;
    for (std::size_t i = 2; i < p.items.size(); ++i) {
        const Node& sec = p.items[i];
        if (!sec.list || sec.items.empty()) reject(sec, "expected a problem section");
        const Node& head = sec.items[0];
        if (is_atom(head, ":domain")) {
            continue;
        } else if (is_atom(head, ":init")) {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const Node& f = sec.items[k];
                if (f.list && f.items.size() == 3 && is_atom(f.items[0], "=")) {
                    if (!f.items[1].list || f.items[1].items.size() != 1 || !is_atom(f.items[1].items[0], "total-cost") ||
                        !is_atom(f.items[2], "0"))
                        reject(f, "only (= (total-cost) 0) is supported");
                    continue;
                }
                ctx.task.init.set(ctx.lookup(f));
            }
        } else if (is_atom(head, ":goal")) {
            if (sec.items.size() != 2) reject(sec, "expected one goal formula");
            conjunction(sec.items[1], [&](const Node& lit) {
                if (is_not(lit)) reject(lit, "negative goals are not supported");
                ctx.task.goal.set(ctx.lookup(lit));
            });
            has_goal = true;
        } else if (is_atom(head, ":metric")) {
            if (sec.items.size() != 3 || !is_atom(sec.items[1], "minimize") || !sec.items[2].list ||
                sec.items[2].items.size() != 1 || !is_atom(sec.items[2].items[0], "total-cost"))
                reject(sec, "only (:metric minimize (total-cost)) is supported");
        } else {
            reject(head, "unsupported problem section");
        }
    }
    if (!has_goal) reject(p, "problem has no :goal");
    ctx.task.validate();
    return ctx.task;
}

}  // namespace dsaw
