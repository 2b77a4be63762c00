// ============================================================================
// amasv/stuttering.hpp: J-stuttering path equivalence of two models
// ============================================================================
//
// Labels are the values of the observed variables plus the views of the
// agents in J. For every initial state, each infinite path of one model must
// have a path of the other from the same state with the same label sequence
// after collapsing repeated labels, and vice versa.
//
// Inclusion is decided on pairs (m, S): m a state of the first model, S the
// states of the second model that can open the current label block after
// matching the same collapsed prefix. A block change to a label no state of S
// can reach is a counterexample; so is a block m can stay in forever while no
// state of S can.
// ============================================================================
#pragma once

#include "amasv/model.hpp"

#include <map>
#include <set>

namespace amasv {

namespace detail {

using Label = std::vector<Value>;

inline std::vector<Label> state_labels(const Model& m, const std::vector<AgentId>& group,
                                       const std::vector<VarId>& observed) {
    std::vector<Label> out(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        Label l;
        for (auto v : observed) l.push_back(m.value(s, v));
        for (auto j : group) {
            const auto& key = m.view_key(j, m.view(s, j));
            l.push_back(static_cast<Value>(key.size()));
            l.insert(l.end(), key.begin(), key.end());
        }
        out[s] = std::move(l);
    }
    return out;
}

/// States that have an infinite path staying inside their own label.
inline std::vector<char> divergent_states(const Model& m, const std::vector<Label>& labels) {
    const std::size_t n = m.num_states();
    // Iteratively remove states with no same-label successor still present.
    std::vector<char> alive(n, 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateId s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            bool ok = false;
            for (const auto& e : m.successors(s))
                if (alive[e.target] && labels[e.target] == labels[s]) {
                    ok = true;
                    break;
                }
            if (!ok) {
                alive[s] = 0;
                changed = true;
            }
        }
    }
    return alive;
}

/// States of b reachable from `from` within its label block followed by one
/// step into a state labelled `next`.
inline std::vector<StateId> block_step(const Model& b, const std::vector<Label>& lb, const std::vector<StateId>& from,
                                       const Label& next) {
    std::set<StateId> seen(from.begin(), from.end());
    std::vector<StateId> stack(from.begin(), from.end());
    std::set<StateId> out;
    while (!stack.empty()) {
        StateId s = stack.back();
        stack.pop_back();
        for (const auto& e : b.successors(s)) {
            if (lb[e.target] == lb[s]) {
                if (seen.insert(e.target).second) stack.push_back(e.target);
            } else if (lb[e.target] == next) {
                out.insert(e.target);
            }
        }
    }
    return {out.begin(), out.end()};
}

/// Can some state of `from` stay within its label forever?
inline bool block_diverges(const Model& b, const std::vector<Label>& lb, const std::vector<char>& div,
                           const std::vector<StateId>& from) {
    std::set<StateId> seen(from.begin(), from.end());
    std::vector<StateId> stack(from.begin(), from.end());
    while (!stack.empty()) {
        StateId s = stack.back();
        stack.pop_back();
        if (div[s]) return true;
        for (const auto& e : b.successors(s))
            if (lb[e.target] == lb[s] && seen.insert(e.target).second) stack.push_back(e.target);
    }
    return false;
}

}  // namespace detail

/// Every path of a from ia is matched up to stuttering by a path of b from ib.
inline bool stutter_included(const Model& a, StateId ia, const Model& b, StateId ib, const std::vector<AgentId>& group,
                             const std::vector<VarId>& observed) {
    auto la = detail::state_labels(a, group, observed);
    auto lb = detail::state_labels(b, group, observed);
    if (la[ia] != lb[ib]) return false;
    auto div_a = detail::divergent_states(a, la);
    auto div_b = detail::divergent_states(b, lb);
    std::set<std::pair<StateId, std::vector<StateId>>> seen;
    std::vector<std::pair<StateId, std::vector<StateId>>> work;
    work.push_back({ia, {ib}});
    seen.insert(work.back());
    while (!work.empty()) {
        auto [m, set] = std::move(work.back());
        work.pop_back();
        if (div_a[m] && !detail::block_diverges(b, lb, div_b, set)) return false;
        for (const auto& e : a.successors(m)) {
            std::pair<StateId, std::vector<StateId>> next;
            if (la[e.target] == la[m]) {
                next = {e.target, set};
            } else {
                auto step = detail::block_step(b, lb, set, la[e.target]);
                if (step.empty()) return false;
                next = {e.target, std::move(step)};
            }
            if (seen.insert(next).second) work.push_back(std::move(next));
        }
    }
    return true;
}

/// a and b are J-stuttering path equivalent from every initial state of a
/// (looked up in b by its global state).
inline bool stuttering_equiv_oracle(const Model& a, const Model& b, const std::vector<AgentId>& group,
                                    const std::vector<VarId>& observed, std::size_t max_states = 200) {
    if (a.num_states() > max_states || b.num_states() > max_states)
        throw LimitExceeded("stuttering oracle limited to " + std::to_string(max_states) + " states");
    for (auto ia : a.initial()) {
        auto ib = b.find(a.raw(ia));
        if (!ib) return false;
        if (!stutter_included(a, ia, b, *ib, group, observed)) return false;
        if (!stutter_included(b, *ib, a, ia, group, observed)) return false;
    }
    return true;
}

}  // namespace amasv
