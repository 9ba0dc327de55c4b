#include "dsaw/lmcut.hpp"

#include <queue>

namespace dsaw {

namespace {
constexpr Cost kInf = LmCut::kDeadEnd;
}

LmCut::LmCut(const StripsTask& task) {
    const std::size_t p = task.num_propositions();
    start_ = p;
    goal_ = p + 1;
    nprops_ = p + 2;
    for (const auto& a : task.actions) {
        RelaxedAction r;
        for (auto i : a.pre_pos.indices()) r.pre.push_back(i);
        if (r.pre.empty()) r.pre.push_back(start_);
        for (auto i : a.add.indices()) r.add.push_back(i);
        r.cost = a.cost;
        actions_.push_back(std::move(r));
    }
    RelaxedAction finish;
    for (auto i : task.goal.indices()) finish.pre.push_back(i);
    if (finish.pre.empty()) finish.pre.push_back(start_);
    finish.add.push_back(goal_);
    actions_.push_back(std::move(finish));

    consumers_.resize(nprops_);
    achievers_.resize(nprops_);
    for (std::size_t a = 0; a < actions_.size(); ++a) {
        for (auto f : actions_[a].pre) consumers_[f].push_back(a);
        for (auto f : actions_[a].add) achievers_[f].push_back(a);
    }
    cost_.resize(actions_.size());
    action_h_.resize(actions_.size());
    unsatisfied_.resize(actions_.size());
    pcf_.resize(actions_.size());
    fact_h_.resize(nprops_);
    in_goal_zone_.resize(nprops_);
    reached_.resize(nprops_);
}

// Generalized Dijkstra for h^max under the current (reduced) costs. Fills
// fact_h_, action_h_ and the precondition choice pcf_. Returns false if the
// goal fact is unreachable.
bool LmCut::compute_hmax(std::span<const BitSet::Word> state) {
    using Item = std::pair<Cost, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::fill(fact_h_.begin(), fact_h_.end(), kInf);
    std::fill(action_h_.begin(), action_h_.end(), kInf);
    for (std::size_t a = 0; a < actions_.size(); ++a) unsatisfied_[a] = actions_[a].pre.size();
    auto reach = [&](std::size_t f, Cost h) {
        if (h < fact_h_[f]) {
            fact_h_[f] = h;
            queue.push({h, f});
        }
    };
    reach(start_, 0);
    for (std::size_t f = 0; f < start_; ++f)
        if ((state[f / BitSet::kWordBits] >> (f % BitSet::kWordBits)) & 1U) reach(f, 0);
    while (!queue.empty()) {
        auto [h, f] = queue.top();
        queue.pop();
        if (h > fact_h_[f]) continue;
        for (std::size_t a : consumers_[f]) {
            if (--unsatisfied_[a] != 0) continue;
            // Last precondition to be settled carries the maximum.
            action_h_[a] = h;
            pcf_[a] = f;
            for (std::size_t q : actions_[a].add) reach(q, h + cost_[a]);
        }
    }
    return fact_h_[goal_] != kInf;
}

Cost LmCut::operator()(std::span<const BitSet::Word> state) {
    for (std::size_t a = 0; a < actions_.size(); ++a) cost_[a] = actions_[a].cost;
    if (!compute_hmax(state)) return kDeadEnd;
    Cost total = 0;
    std::vector<std::size_t> stack, cut;
    while (fact_h_[goal_] != 0) {
        // Goal zone: facts connected to the goal by zero-cost justification edges.
        std::fill(in_goal_zone_.begin(), in_goal_zone_.end(), 0);
        in_goal_zone_[goal_] = 1;
        stack.assign(1, goal_);
        while (!stack.empty()) {
            const std::size_t q = stack.back();
            stack.pop_back();
            for (std::size_t a : achievers_[q]) {
                if (action_h_[a] == kInf || cost_[a] != 0 || in_goal_zone_[pcf_[a]]) continue;
                in_goal_zone_[pcf_[a]] = 1;
                stack.push_back(pcf_[a]);
            }
        }
        // Facts reachable from the state without entering the goal zone;
        // actions leaving that region into the zone form the cut.
        std::fill(reached_.begin(), reached_.end(), 0);
        stack.clear();
        for (std::size_t f = 0; f < nprops_; ++f)
            if (fact_h_[f] == 0 && !in_goal_zone_[f]) {
                reached_[f] = 1;
                stack.push_back(f);
            }
        cut.clear();
        while (!stack.empty()) {
            const std::size_t f = stack.back();
            stack.pop_back();
            for (std::size_t a : consumers_[f]) {
                if (action_h_[a] == kInf || pcf_[a] != f) continue;
                bool into_zone = false;
                for (std::size_t q : actions_[a].add) {
                    if (in_goal_zone_[q]) {
                        into_zone = true;
                    } else if (!reached_[q]) {
                        reached_[q] = 1;
                        stack.push_back(q);
                    }
                }
                if (into_zone) cut.push_back(a);
            }
        }
        Cost m = kInf;
        for (std::size_t a : cut) m = std::min(m, cost_[a]);
        if (cut.empty() || m == kInf || m <= 0) break;  // cannot happen with positive goal h^max
        total += m;
        for (std::size_t a : cut) cost_[a] -= m;
        compute_hmax(state);
    }
    return total;
}

}  // namespace dsaw
