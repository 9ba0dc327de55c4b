#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <queue>

#include "dsaw/error.hpp"
#include "dsaw/lmcut.hpp"
#include "dsaw/planner.hpp"

namespace dsaw {

namespace {

using Word = BitSet::Word;
using Clock = std::chrono::steady_clock;
constexpr std::uint32_t kNone = 0xffffffffU;

/// Actions flattened to word arrays for the inner loop.
struct FlatTask {
    std::size_t nwords = 0;
    std::vector<Word> pre_pos, pre_neg, add, del;  // nactions * nwords each
    std::vector<Cost> cost;
    std::vector<Word> init, goal;
    // Propositions no action requires and the goal does not mention. Having
    // one of them true can only disable actions, so a state dominates another
    // with the same remaining bits and a superset of these.
    std::vector<Word> harmful;
    bool any_harmful = false;

    explicit FlatTask(const StripsTask& t) {
        nwords = BitSet::word_count(t.num_propositions());
        auto append = [&](std::vector<Word>& dst, const BitSet& b) { dst.insert(dst.end(), b.words().begin(), b.words().end()); };
        for (const auto& a : t.actions) {
            append(pre_pos, a.pre_pos);
            append(pre_neg, a.pre_neg);
            append(add, a.add);
            append(del, a.del);
            cost.push_back(a.cost);
        }
        append(init, t.init);
        append(goal, t.goal);
        BitSet needed = t.goal, negated(t.num_propositions());
        for (const auto& a : t.actions) {
            needed |= a.pre_pos;
            negated |= a.pre_neg;
        }
        for (auto i : negated.indices())
            if (!needed.test(i)) {
                harmful.resize(nwords, 0);
                harmful[i / BitSet::kWordBits] |= Word{1} << (i % BitSet::kWordBits);
                any_harmful = true;
            }
    }

    std::size_t size() const { return cost.size(); }

    bool applicable(std::size_t a, const Word* s) const {
        const Word* pp = &pre_pos[a * nwords];
        const Word* pn = &pre_neg[a * nwords];
        for (std::size_t i = 0; i < nwords; ++i)
            if ((s[i] & pp[i]) != pp[i] || (s[i] & pn[i])) return false;
        return true;
    }

    void apply(std::size_t a, const Word* s, Word* out) const {
        const Word* ad = &add[a * nwords];
        const Word* de = &del[a * nwords];
        for (std::size_t i = 0; i < nwords; ++i) out[i] = (s[i] & ~de[i]) | ad[i];
    }

    std::size_t goal_count(const Word* s) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < nwords; ++i) n += static_cast<std::size_t>(std::popcount(goal[i] & ~s[i]));
        return n;
    }
};

/// Interned states in one flat pool with an open-addressing index.
class StateRegistry {
public:
    explicit StateRegistry(std::size_t nwords) : nwords_(std::max<std::size_t>(nwords, 1)), slots_(1024, kNone) {}

    std::size_t size() const { return count_; }
    const Word* state(std::uint32_t id) const { return &pool_[static_cast<std::size_t>(id) * nwords_]; }

    /// Returns the id of `s`, inserting it if new.
    std::pair<std::uint32_t, bool> insert(const Word* s) {
        if ((count_ + 1) * 2 > slots_.size()) grow();
        std::size_t h = hash(s) & (slots_.size() - 1);
        while (slots_[h] != kNone) {
            if (std::equal(s, s + nwords_, state(slots_[h]))) return {slots_[h], false};
            h = (h + 1) & (slots_.size() - 1);
        }
        const auto id = static_cast<std::uint32_t>(count_++);
        pool_.insert(pool_.end(), s, s + nwords_);
        slots_[h] = id;
        return {id, true};
    }

private:
    std::size_t hash(const Word* s) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::size_t i = 0; i < nwords_; ++i) {
            h ^= s[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0xff51afd7ed558ccdULL;
            h ^= h >> 33;
        }
        return static_cast<std::size_t>(h);
    }

    void grow() {
        std::vector<std::uint32_t> bigger(slots_.size() * 2, kNone);
        for (std::uint32_t id = 0; id < count_; ++id) {
            std::size_t h = hash(state(id)) & (bigger.size() - 1);
            while (bigger[h] != kNone) h = (h + 1) & (bigger.size() - 1);
            bigger[h] = id;
        }
        slots_.swap(bigger);
    }

    std::size_t nwords_;
    std::size_t count_ = 0;
    std::vector<Word> pool_;
    std::vector<std::uint32_t> slots_;
};

struct OpenNode {
    double f;
    Cost g;
    std::uint64_t seq;
    std::uint32_t id;

    // Lower f, then lower g, then FIFO.
    bool operator>(const OpenNode& o) const {
        if (f != o.f) return f > o.f;
        if (g != o.g) return g > o.g;
        return seq > o.seq;
    }
};

enum class PhaseOutcome { found, exhausted, timeout };

struct PhaseResult {
    PhaseOutcome outcome = PhaseOutcome::exhausted;
    std::vector<std::size_t> actions;
    Cost cost = 0;
};

/// One best-first search. weight = infinity is greedy search on the goal
/// count; otherwise nodes are ordered by g + weight * lmcut. Either way a node
/// is pruned once g + lmcut reaches `bound` or the relaxation proves a dead
/// end, so exhausting the open list proves no plan cheaper than `bound`.
PhaseResult run_phase(const FlatTask& task, LmCut& lmcut, double weight, Cost bound, Clock::time_point deadline,
                      bool has_deadline, SearchStats& stats) {
    StateRegistry reg(task.nwords);
    // States grouped by their bits outside task.harmful, for dominance checks.
    StateRegistry cores(task.nwords);
    std::vector<std::vector<std::uint32_t>> group;
    std::vector<std::uint32_t> group_of;
    std::vector<Word> core(std::max<std::size_t>(task.nwords, 1));
    std::vector<Cost> g, lower;  // lower: cached lmcut value per state
    std::vector<std::uint32_t> parent, via;
    std::priority_queue<OpenNode, std::vector<OpenNode>, std::greater<>> open;
    std::uint64_t seq = 0;
    const bool greedy = std::isinf(weight);
    auto pruned = [&](Cost gv, Cost h) { return h == LmCut::kDeadEnd || gv + h >= bound; };
    auto bound_of = [&](const Word* st) { return lmcut(std::span<const Word>(st, task.nwords)); };
    auto join_group = [&](std::uint32_t id) {
        if (!task.any_harmful) return;
        const Word* st = reg.state(id);
        for (std::size_t i = 0; i < task.nwords; ++i) core[i] = st[i] & ~task.harmful[i];
        auto [c, fresh] = cores.insert(core.data());
        if (fresh) group.emplace_back();
        group[c].push_back(id);
        group_of.push_back(c);
    };
    // Another state with the same core, a subset of the harmful bits and no
    // greater g can follow any plan from `id` at no greater cost. Subsets are
    // strict, so two states never dominate each other.
    auto dominated = [&](std::uint32_t id, Cost gv) {
        if (!task.any_harmful) return false;
        const Word* st = reg.state(id);
        for (std::uint32_t other : group[group_of[id]]) {
            if (other == id || g[other] > gv) continue;
            const Word* o = reg.state(other);
            bool subset = true;
            for (std::size_t i = 0; i < task.nwords && subset; ++i) subset = (o[i] & ~st[i]) == 0;
            if (subset) return true;
        }
        return false;
    };
    auto priority = [&](Cost gv, std::uint32_t id) {
        return greedy ? static_cast<double>(task.goal_count(reg.state(id)))
                      : static_cast<double>(gv) + weight * static_cast<double>(lower[id]);
    };

    std::vector<Word> init(task.init), buf(std::max<std::size_t>(task.nwords, 1));
    if (init.empty()) init.push_back(0);
    auto [root, _] = reg.insert(init.data());
    lower.push_back(bound_of(init.data()));
    join_group(root);
    PhaseResult res;
    if (pruned(0, lower[root])) {
        stats.states += reg.size();
        return res;
    }
    g.push_back(0);
    parent.push_back(kNone);
    via.push_back(kNone);
    open.push({priority(0, root), 0, seq++, root});

    std::size_t since_check = 0;
    while (!open.empty()) {
        OpenNode node = open.top();
        open.pop();
        if (node.g > g[node.id] || dominated(node.id, node.g)) continue;
        if (has_deadline && ++since_check >= 256) {
            since_check = 0;
            if (Clock::now() >= deadline) {
                res.outcome = PhaseOutcome::timeout;
                break;
            }
        }
        const Word* s = reg.state(node.id);
        if (task.goal_count(s) == 0) {
            res.outcome = PhaseOutcome::found;
            res.cost = g[node.id];
            for (std::uint32_t id = node.id; parent[id] != kNone; id = parent[id]) res.actions.push_back(via[id]);
            std::reverse(res.actions.begin(), res.actions.end());
            break;
        }
        ++stats.expanded;
        for (std::size_t a = 0; a < task.size(); ++a) {
            s = reg.state(node.id);  // the pool may have moved
            if (!task.applicable(a, s)) continue;
            const Cost g2 = node.g + task.cost[a];
            if (g2 >= bound) continue;
            task.apply(a, s, buf.data());
            ++stats.generated;
            auto [id, fresh] = reg.insert(buf.data());
            if (fresh) {
                lower.push_back(bound_of(reg.state(id)));
                g.push_back(g2);
                parent.push_back(node.id);
                via.push_back(static_cast<std::uint32_t>(a));
                join_group(id);
                if (pruned(g2, lower[id]) || dominated(id, g2)) continue;
            } else if (g2 < g[id]) {
                if (pruned(g2, lower[id]) || dominated(id, g2)) continue;
                g[id] = g2;
                parent[id] = node.id;
                via[id] = static_cast<std::uint32_t>(a);
            } else {
                continue;
            }
            open.push({priority(g2, id), g2, seq++, id});
        }
    }
    stats.states += reg.size();
    return res;
}

}  // namespace

AnytimeResult solve_anytime(const StripsTask& task, const AnytimeOptions& opt,
                            const std::function<void(const Plan&)>& on_plan) {
    task.validate();
    if (task.actions.size() >= kNone) throw UsageError("too many actions");
    for (double w : opt.weights)
        if (!(w >= 0.0)) throw UsageError("search weights must be non-negative");
    const auto t0 = Clock::now();
    const bool has_deadline = std::isfinite(opt.time_budget_seconds);
    const auto deadline =
        has_deadline ? t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(opt.time_budget_seconds))
                     : Clock::time_point::max();

    std::vector<double> schedule{std::numeric_limits<double>::infinity()};
    schedule.insert(schedule.end(), opt.weights.begin(), opt.weights.end());

    FlatTask flat(task);
    LmCut lmcut(task);
    AnytimeResult result;
    Cost bound = std::numeric_limits<Cost>::max();
    for (std::size_t phase = 0;; ++phase) {
        const double w = schedule[std::min(phase, schedule.size() - 1)];
        ++result.stats.phases;
        PhaseResult r = run_phase(flat, lmcut, w, bound, deadline, has_deadline, result.stats);
        if (r.outcome == PhaseOutcome::timeout) {
            result.status = AnytimeStatus::timeout;
            break;
        }
        if (r.outcome == PhaseOutcome::exhausted) {
            result.status = result.plans.empty() ? AnytimeStatus::unsolvable : AnytimeStatus::optimal_exhausted;
            break;
        }
        Plan p;
        p.actions = std::move(r.actions);
        p.cost = r.cost;
        p.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        bound = p.cost;
        result.plans.push_back(std::move(p));
        if (on_plan) on_plan(result.plans.back());
        if (bound == 0) {
            result.status = AnytimeStatus::optimal_exhausted;
            break;
        }
    }
    return result;
}

}  // namespace dsaw
