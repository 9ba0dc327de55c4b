// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is 0 only if every selected
// criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dsaw/algebra.hpp"
#include "dsaw/corpus.hpp"
#include "dsaw/evalsuite.hpp"
#include "dsaw/fixtures.hpp"
#include "dsaw/grammar.hpp"
#include "dsaw/nncore.hpp"
#include "dsaw/pddl.hpp"
#include "dsaw/planner.hpp"
#include "dsaw/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/planning_oracles.hpp"
#include "support/random_tasks.hpp"

using namespace dsaw;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared planted-corpus models, trained on first use.

struct PlantedData {
    fixtures::PlantedCorpus pc;
    Vocabulary vocab;
    IdCorpus ids;
};

const PlantedData& planted_data(std::uint64_t seed) {
    static std::map<std::uint64_t, PlantedData> cache;
    auto it = cache.find(seed);
    if (it == cache.end()) {
        PlantedData d{fixtures::planted_synonyms({}, seed), {}, {}};
        d.vocab = Vocabulary::build(d.pc.corpus.flatten(), 1);
        d.vocab.set_subsampling(0.0, SubsampleVariant::implementation);
        d.ids = encode(d.pc.corpus, d.vocab);
        it = cache.emplace(seed, std::move(d)).first;
    }
    return it->second;
}

const ModelParameters& planted_model(Variant v, std::size_t width, std::uint64_t seed) {
    static std::map<std::tuple<Variant, std::size_t, std::uint64_t>, ModelParameters> cache;
    const auto key = std::make_tuple(v, width, seed);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto& d = planted_data(seed);
        it = cache.emplace(key, train(d.ids, d.vocab, fixtures::planted_train_config(v, width, seed)).model).first;
    }
    return it->second;
}

BitSet random_bits(std::size_t e, Rng& rng) {
    BitSet b(e);
    for (std::size_t j = 0; j < e; ++j) b.set(j, rng.bernoulli(0.5));
    return b;
}

BinaryEffect random_effect(std::size_t e, Rng& rng) {
    BinaryEffect x(e);
    for (std::size_t j = 0; j < e; ++j) {
        const auto r = rng.below(3);
        if (r == 1) x.add.set(j);
        if (r == 2) x.del.set(j);
    }
    return x;
}

// ---------------------------------------------------------------------------

Outcome algebra_ground_truth() {
    auto f = fixtures::table1();
    auto fx = extract_effects(f.model, f.vocab);
    auto at = [&](const char* w) -> const BinaryEffect& { return fx[f.vocab.id(w)]; };
    CombinedEffect e1(2);
    e1 = compose(e1, ComposeOp::plus, at("king"));
    e1 = compose(e1, ComposeOp::minus, at("man"));
    e1 = compose(e1, ComposeOp::plus, at("woman"));
    CombinedEffect e2 = compose(compose(CombinedEffect(2), ComposeOp::plus, at("king")), ComposeOp::plus, at("man"));
    const bool ok1 = e1 == at("queen");
    const bool ok2 = e2 == at("king");
    return {ok1 && ok2, fmt("king-man+woman==queen: %s, king+man==king: %s", ok1 ? "yes" : "no", ok2 ? "yes" : "no")};
}

Outcome extraction_soundness() {
    const auto& d = planted_data(1);
    const auto& model = planted_model(Variant::dsaw, 16, 1);
    const std::size_t e = model.width;
    Rng rng(2);
    std::size_t mismatches = 0, overlaps = 0, checks = 0;
    std::vector<double> dense(e), zeros(e, 0.0);
    for (WordId w = 0; w < d.vocab.size(); ++w) {
        const BinaryEffect x = extract_effect(model, w, d.vocab.word(w));
        if (x.add.intersects(x.del)) ++overlaps;
        auto row = model.effect.row(w);
        for (int i = 0; i < 1000; ++i) {
            const BitSet s = random_bits(e, rng);
            const BitSet expected = (s - x.del) | x.add;
            for (std::size_t j = 0; j < e; ++j) dense[j] = s.test(j);
            const auto soft = btl_apply(dense, row, model.bn, 1e-9, zeros);
            BitSet rounded(e);
            for (std::size_t j = 0; j < e; ++j) rounded.set(j, soft[j] > 0.5);
            if (btl_apply_limit(s, row, model.bn) != expected || rounded != expected) ++mismatches;
            ++checks;
        }
    }
    return {mismatches == 0 && overlaps == 0,
            fmt("%zu words x 1000 states, %zu mismatches, %zu add/del overlaps", d.vocab.size(), mismatches, overlaps)};
}

Outcome gradient_correctness() {
    Rng rng(3);
    double worst = 0.0;
    std::string where;
    std::size_t checked = 0;
    for (Variant v : {Variant::cbow, Variant::dsaw, Variant::sgbtl}) {
        for (int i = 0; i < 100; ++i) {
            oracle::GradCheckShape shape;
            shape.vocab = 6 + rng.below(10);
            shape.width = 2 + rng.below(6);
            shape.batch = 2 + rng.below(5);
            shape.window = 1 + static_cast<int>(rng.below(2));
            shape.negatives = 1 + rng.below(4);
            shape.tau = 2.0;
            shape.beta = 0.1;
            shape.affine = (i % 2) == 0;
            auto r = oracle::gradient_check(v, shape, rng);
            checked += r.checked;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                where = std::string(to_string(v)) + " " + r.worst;
            }
        }
    }
    return {worst < 1e-4, fmt("300 configs, %zu partials, max rel error %.2e (%s)", checked, worst, where.c_str())};
}

Outcome combined_effect_equivalence() {
    const std::size_t e = 8;
    Rng rng(4);
    std::size_t bad = 0, total = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t len = 1 + rng.below(5);
        std::vector<BinaryEffect> xs;
        std::vector<ComposeOp> ops;
        for (std::size_t i = 0; i < len; ++i) {
            xs.push_back(random_effect(e, rng));
            ops.push_back(rng.bernoulli(0.5) ? ComposeOp::plus : ComposeOp::minus);
        }
        std::vector<const BinaryEffect*> ptrs;
        for (auto& x : xs) ptrs.push_back(&x);
        const auto combined = compose_all(e, ops, ptrs);
        for (std::uint32_t v = 0; v < 256; ++v) {
            BitSet s(e);
            for (std::size_t j = 0; j < e; ++j) s.set(j, (v >> j) & 1u);
            BitSet seq = s;
            for (std::size_t i = 0; i < len; ++i)
                seq = progress(seq, ops[i] == ComposeOp::plus ? xs[i] : xs[i].swapped());
            if (progress(s, combined) != seq) ++bad;
            ++total;
        }
    }
    return {bad == 0, fmt("%zu of %zu (sequence, state) pairs agree", total - bad, total)};
}

Outcome regression_inverse() {
    const std::size_t e = 10;
    Rng rng(5);
    std::size_t bad = 0, total = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_effect(e, rng);
        for (std::uint32_t v = 0; v < (1u << e); ++v) {
            BitSet s(e);
            for (std::size_t j = 0; j < e; ++j) s.set(j, (v >> j) & 1u);
            if (s.intersects(x.add) || !x.del.is_subset_of(s)) continue;
            if (regress(progress(s, x), x) != s) ++bad;
            ++total;
        }
    }
    return {bad == 0 && total > 0, fmt("%zu of %zu change-invoking states restored", total - bad, total)};
}

Outcome net_benefit_compilation() {
    Rng rng(6);
    oracle::NetBenefitShape shape;
    std::size_t agree = 0, nontrivial = 0, guard_agree = 0;
    std::string first_bad;
    for (int i = 0; i < 200; ++i) {
        const auto nb = oracle::random_net_benefit(shape, rng);
        const Cost brute = oracle::net_benefit_brute_force(nb, 4);
        const auto compiled = compile_net_benefit(nb, {.used_guard = false});
        const auto ucs = oracle::uniform_cost(compiled);
        const auto r = solve_anytime(compiled);
        const bool ok = ucs && *ucs == brute && r.best() && r.best()->cost == brute &&
                        r.status == AnytimeStatus::optimal_exhausted;
        if (ok)
            ++agree;
        else if (first_bad.empty())
            first_bad = fmt(", first mismatch task %d: brute %ld, ucs %ld", i, brute, ucs ? *ucs : -1L);
        if (brute < oracle::forgone_utility(nb, oracle::to_state(nb.task.init))) ++nontrivial;

        const auto guarded = solve_anytime(compile_net_benefit(nb, {.used_guard = true}));
        if (guarded.best() && guarded.best()->cost == oracle::net_benefit_brute_force(nb, 4, true)) ++guard_agree;
    }
    return {agree == 200 && guard_agree == 200,
            fmt("%zu/200 match (%zu nontrivial), used-guard vs repeat-free brute force %zu/200%s", agree, nontrivial,
                guard_agree, first_bad.c_str())};
}

Outcome planner_optimality() {
    const auto& d = planted_data(1);
    const auto& model = planted_model(Variant::dsaw, 8, 1);
    const auto effects = extract_effects(model, d.vocab);
    const Cost cost = static_cast<Cost>(model.width);
    std::vector<WordId> targets;
    for (WordId w = 0; w < d.vocab.size(); ++w)
        if (!effects[w].empty()) targets.push_back(w);
    if (targets.empty()) return {false, "every learned effect is empty"};

    Rng rng(7);
    auto pick_actions = [&](WordId target, auto&& allowed) {
        std::vector<WordId> pool;
        for (WordId w = 0; w < d.vocab.size(); ++w)
            if (w != target && allowed(w)) pool.push_back(w);
        rng.shuffle(std::span(pool));
        if (pool.size() > 20) pool.resize(20);
        std::vector<std::string> words;
        std::vector<BinaryEffect> fx;
        for (WordId w : pool) {
            words.push_back(d.vocab.word(w));
            fx.push_back(effects[w]);
        }
        return std::pair{words, fx};
    };

    std::size_t optimal = 0;
    for (int i = 0; i < 50; ++i) {
        const WordId t = targets[rng.below(targets.size())];
        auto [words, fx] = pick_actions(t, [](WordId) { return true; });
        const auto nb = build_paraphrase_task(d.vocab.word(t), effects[t], words, fx, cost, 100);
        const auto r = solve_anytime(compile_net_benefit(nb));
        if (r.status == AnytimeStatus::optimal_exhausted && r.best() &&
            r.best()->cost == oracle::net_benefit_dijkstra(nb))
            ++optimal;
    }

    std::size_t unsolvable = 0;
    for (int i = 0; i < 10; ++i) {
        const WordId t = targets[rng.below(targets.size())];
        const auto goal_bits = effects[t].add.indices();
        const auto del_bits = effects[t].del.indices();
        // Remove every word that can establish one chosen goal proposition.
        const std::size_t k = rng.below(goal_bits.size() + del_bits.size());
        const bool is_add = k < goal_bits.size();
        const std::size_t bit = is_add ? goal_bits[k] : del_bits[k - goal_bits.size()];
        auto [words, fx] = pick_actions(
            t, [&](WordId w) { return !(is_add ? effects[w].add.test(bit) : effects[w].del.test(bit)); });
        const auto nb = build_paraphrase_task(d.vocab.word(t), effects[t], words, fx, cost, 100);
        const auto r = solve_anytime(nb.task);
        if (r.status == AnytimeStatus::unsolvable && r.plans.empty() && !oracle::goal_reachable_bfs(nb.task))
            ++unsolvable;
    }
    return {optimal == 50 && unsolvable == 10,
            fmt("%zu/50 anytime costs equal the Dijkstra optimum, %zu/10 crafted tasks unsolvable and BFS-exhausted",
                optimal, unsolvable)};
}

Outcome grammar_equivalence() {
    Rng rng(8);
    std::size_t forward = 0;
    for (int i = 0; i < 100; ++i) {
        const auto g = oracle::random_grammar(rng);
        Language expected;
        for (auto& w : oracle::all_strings(g.terminals, 6))
            if (oracle::grammar_accepts(g, w)) expected.insert(w);
        const auto task = grammar_to_task(g);
        Language by_plans;
        for (auto& w : oracle::plan_labels(task, 7))
            if (w.size() <= 6) by_plans.insert(w);
        if (grammar_language(g, 6) == expected && plan_language(task, 6) == expected && by_plans == expected)
            ++forward;
    }
    std::size_t reverse = 0;
    oracle::TaskShape shape{.max_props = 4, .max_actions = 6, .max_cost = 3, .pre_rate = 0.3, .effect_rate = 0.4,
                            .labels = 3};
    for (int i = 0; i < 50; ++i) {
        auto task = oracle::random_task(shape, rng);
        for (auto& a : task.actions)
            if (rng.bernoulli(0.2)) a.label.clear();
        std::set<std::string> sigma;
        for (const auto& a : task.actions)
            if (!a.label.empty()) sigma.insert(a.label);
        Language expected;
        for (auto& w : oracle::all_strings({sigma.begin(), sigma.end()}, 6))
            if (oracle::task_accepts(task, w)) expected.insert(w);
        const auto g = task_to_grammar(task, 16);
        if (grammar_language(g, 6) == expected && plan_language(task, 6) == expected) ++reverse;
    }
    return {forward == 100 && reverse == 50,
            fmt("grammar->task %zu/100, task->grammar %zu/50", forward, reverse)};
}

Outcome training_sanity() {
    std::string detail;
    bool ok = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto& d = planted_data(seed);
        for (Variant v : {Variant::dsaw, Variant::cbow}) {
            const double gap = fixtures::group_separation(planted_model(v, 16, seed), d.vocab, d.pc.groups).gap();
            ok = ok && gap >= 0.2;
            detail += fmt("%s%s/%llu %.3f", detail.empty() ? "" : ", ", std::string(to_string(v)).c_str(),
                          static_cast<unsigned long long>(seed), gap);
        }
    }
    return {ok, "separation " + detail};
}

Outcome formula_spot_values() {
    const double p = subsample_prob(0.05, 1e-4, SubsampleVariant::implementation);
    AnnealSchedule s;
    s.anneal_start = 1.0;
    s.total_epochs = 8.0;
    const double t0 = s(0.0), t_end = s(8.0), t_after = s(9.5);
    const double lit = temperature_literal(8.0, 5.0, 0.7, 7.0, 0.2);
    const bool ok = std::abs(p - 0.9532786) <= 1e-6 && t0 == 5.0 && std::abs(t_end - 0.7) <= 1e-9 &&
                    std::abs(lit - 0.7) <= 1e-9 && std::abs(t_after - 0.7) <= 1e-9 &&
                    temperature_literal(0.0, 5.0, 0.7, 7.0, 0.2) == 5.0;
    return {ok, fmt("subsample %.7f, tau(0) %.1f, tau(8) T=1 %.12f, T=7 literal %.12f", p, t0, t_end, lit)};
}

Outcome pddl_round_trip() {
    Rng rng(11);
    std::size_t same = 0;
    oracle::TaskShape shape{.labels = 3};
    for (int i = 0; i < 60; ++i) {
        auto t = oracle::random_task(shape, rng);
        for (auto& a : t.actions)
            if (rng.bernoulli(0.3)) a.label.clear();
        const auto text = emit_pddl(t);
        if (parse_pddl(text.domain, text.problem) == t) ++same;
    }
    const auto& d = planted_data(1);
    const auto& model = planted_model(Variant::dsaw, 8, 1);
    const auto effects = extract_effects(model, d.vocab);
    std::size_t made = 60;
    for (int i = 0; made < 100; ++i) {
        const WordId t = static_cast<WordId>(rng.below(d.vocab.size()));
        if (effects[t].empty()) continue;
        std::vector<std::string> words;
        std::vector<BinaryEffect> fx;
        for (WordId w = 0; w < d.vocab.size(); ++w)
            if (w != t && rng.bernoulli(0.6)) {
                words.push_back(d.vocab.word(w));
                fx.push_back(effects[w]);
            }
        const auto nb = build_paraphrase_task(d.vocab.word(t), effects[t], words, fx, 8, 100);
        const auto compiled = compile_net_benefit(nb, {.used_guard = (i % 2) == 0});
        const auto text = emit_pddl(compiled, "paraphrase", pddl_identifier(d.vocab.word(t)));
        if (parse_pddl(text.domain, text.problem) == compiled) ++same;
        ++made;
    }
    return {same == 100, fmt("%zu/100 structurally equal (60 random, 40 compiled paraphrase)", same)};
}

Outcome redundancy_robustness() {
    const auto& d = planted_data(1);
    const auto demb = Embedding::from_model(planted_model(Variant::dsaw, 16, 1), d.vocab);
    const auto cemb = Embedding::from_model(planted_model(Variant::cbow, 16, 1), d.vocab);
    Rng rng(12);
    std::size_t dsaw_equal = 0, cbow_differs = 0, nondegenerate = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<WordId> rest;
        for (std::size_t k = 0, n = rng.below(10); k < n; ++k)
            rest.push_back(static_cast<WordId>(rng.below(d.vocab.size())));
        const auto w = static_cast<WordId>(rng.below(d.vocab.size()));
        std::vector<WordId> once{w}, twice{w, w};
        once.insert(once.end(), rest.begin(), rest.end());
        twice.insert(twice.end(), rest.begin(), rest.end());
        if (aggregate_ids(once, demb) == aggregate_ids(twice, demb)) ++dsaw_equal;
        const auto row = cemb.vectors.row(w);
        if (dot(row, row) == 0.0) continue;
        ++nondegenerate;
        if (aggregate_ids(once, cemb) != aggregate_ids(twice, cemb)) ++cbow_differs;
    }
    const double share = nondegenerate ? static_cast<double>(cbow_differs) / static_cast<double>(nondegenerate) : 0.0;
    return {dsaw_equal == 1000 && share > 0.99,
            fmt("dsaw unchanged %zu/1000, cbow changed %zu/%zu (%.1f%%)", dsaw_equal, cbow_differs, nondegenerate,
                100.0 * share)};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: no runtime bound
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "algebra ground truth", 1.0, algebra_ground_truth},
    {2, "extraction soundness", 300.0, extraction_soundness},
    {3, "gradient correctness", 120.0, gradient_correctness},
    {4, "combined-effect equivalence", 0.0, combined_effect_equivalence},
    {5, "regression inverse", 0.0, regression_inverse},
    {6, "net-benefit compilation", 60.0, net_benefit_compilation},
    {7, "planner optimality and completeness", 120.0, planner_optimality},
    {8, "grammar equivalence", 0.0, grammar_equivalence},
    {9, "training sanity", 0.0, training_sanity},
    {10, "formula spot values", 0.0, formula_spot_values},
    {11, "PDDL round trip", 0.0, pddl_round_trip},
    {12, "redundancy robustness", 0.0, redundancy_robustness},
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s limit", c.limit_seconds);
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %-36s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
