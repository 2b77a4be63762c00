// ============================================================================
// amasv/approx.hpp: fixpoint bounds for coalition formulas
// ============================================================================
//
// Upper bound: the formula under perfect information (per-state choices).
// Lower bound: choices constant on every class of the equivalence closure of
// the coalition members' indistinguishability relations, so that the chosen
// moves assemble into a uniform positional strategy.
//
//   F p   = mu Z. p | pre(Z)        G p = nu Z. p & pre(Z)
//   p U q = mu Z. q | (p & pre(Z))
// ============================================================================
#pragma once

#include "amasv/logic.hpp"

#include <bit>
#include <map>
#include <numeric>

namespace amasv {

// ── StateSet ────────────────────────────────────────────────────────────────

class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t n, bool full = false) : n_(n), words_((n + 63) / 64, full ? ~0ull : 0ull) {
        trim();
    }
    static StateSet from_table(const StateTable& t) {
        StateSet s(t.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i]) s.insert(static_cast<StateId>(i));
        return s;
    }

    std::size_t universe() const { return n_; }
    bool contains(StateId s) const { return (words_[s >> 6] >> (s & 63)) & 1ull; }
    void insert(StateId s) { words_[s >> 6] |= 1ull << (s & 63); }
    void erase(StateId s) { words_[s >> 6] &= ~(1ull << (s & 63)); }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    bool subset_of(const StateSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }
    StateSet& operator|=(const StateSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    StateSet& operator&=(const StateSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    bool operator==(const StateSet&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;

    void trim() {
        if (n_ % 64 && !words_.empty()) words_.back() &= (1ull << (n_ % 64)) - 1;
    }
};

// ── Predecessors ────────────────────────────────────────────────────────────

namespace detail {

/// Do all outcome successors of s under ec lie in Z (with at least one)?
inline bool step_into(const Model& m, StateId s, const ChoiceVector& ec, Variant variant, const StateSet& z) {
    auto keep = outcome_events(m, s, ec, variant);
    if (keep.empty()) return false;
    for (const auto& e : m.successors(s))
        if (std::find(keep.begin(), keep.end(), e.event) != keep.end() && !z.contains(e.target)) return false;
    return true;
}

/// Coalition members with a nonempty repertoire at s.
inline ChoiceVector acting_members(const Model& m, const std::vector<AgentId>& agents, StateId s) {
    ChoiceVector ec;
    for (auto a : agents)
        if (!m.repertoire(s, a).empty()) {
            ec.agents.push_back(a);
            ec.choice.push_back(0);
        }
    return ec;
}

/// Advance ec to the next choice vector at s in mixed-radix order.
inline bool next_choice(const Model& m, StateId s, ChoiceVector& ec) {
    for (std::size_t k = ec.agents.size(); k-- > 0;) {
        if (++ec.choice[k] < m.repertoire(s, ec.agents[k]).size()) return true;
        ec.choice[k] = 0;
    }
    return false;
}

}  // namespace detail

/// States where some per-state choice vector forces the next state into Z.
inline StateSet pre_perfect(const Model& m, const std::vector<AgentId>& agents, const StateSet& z,
                            Variant variant = Variant::Std) {
    StateSet out(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        auto ec = detail::acting_members(m, agents, s);
        do {
            if (detail::step_into(m, s, ec, variant, z)) {
                out.insert(s);
                break;
            }
        } while (detail::next_choice(m, s, ec));
    }
    return out;
}

/// Partition of the states into classes of the closure of the union of ~_i, i in A.
struct UniformClasses {
    std::vector<std::uint32_t> class_of;
    std::vector<std::vector<StateId>> members;
};

inline UniformClasses uniform_classes(const Model& m, const std::vector<AgentId>& agents) {
    const std::size_t n = m.num_states();
    std::vector<StateId> parent(n);
    std::iota(parent.begin(), parent.end(), StateId{0});
    auto find = [&](StateId x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto a : agents) {
        std::vector<StateId> first(m.num_views(a), kNoState);
        for (StateId s = 0; s < n; ++s) {
            auto& f = first[m.view(s, a)];
            if (f == kNoState) f = s;
            else parent[find(s)] = find(f);
        }
    }
    UniformClasses uc;
    uc.class_of.assign(n, 0);
    std::unordered_map<StateId, std::uint32_t> ids;
    for (StateId s = 0; s < n; ++s) {
        auto [it, fresh] = ids.try_emplace(find(s), static_cast<std::uint32_t>(uc.members.size()));
        if (fresh) uc.members.emplace_back();
        uc.class_of[s] = it->second;
        uc.members[it->second].push_back(s);
    }
    return uc;
}

/// Search budget per class for the classwise choice assignment. Exhausting it
/// excludes the class, which only weakens the lower bound.
inline constexpr std::uint64_t kUniformClassBudget = 200'000;

namespace detail {

/// Is there one choice per (member, view) in the class such that every state
/// of the class steps into Z? Keys that never meet in a common state are
/// solved independently.
inline bool class_controllable(const Model& m, const std::vector<AgentId>& agents,
                               const std::vector<StateId>& cls, const StateSet& z, Variant variant) {
    std::vector<std::pair<std::size_t, ViewId>> keys;
    std::map<std::pair<std::size_t, ViewId>, std::size_t> key_index;
    std::vector<std::vector<std::size_t>> state_keys(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i)
        for (std::size_t k = 0; k < agents.size(); ++k) {
            if (m.repertoire(cls[i], agents[k]).empty()) continue;
            auto key = std::make_pair(k, m.view(cls[i], agents[k]));
            auto [it, fresh] = key_index.try_emplace(key, keys.size());
            if (fresh) keys.push_back(key);
            state_keys[i].push_back(it->second);
        }
    std::vector<std::uint32_t> value(keys.size(), 0);
    auto state_ok = [&](std::size_t i) {
        ChoiceVector ec;
        for (std::size_t k = 0; k < agents.size(); ++k) {
            if (m.repertoire(cls[i], agents[k]).empty()) continue;
            ec.agents.push_back(agents[k]);
            ec.choice.push_back(value[key_index.at({k, m.view(cls[i], agents[k])})]);
        }
        return step_into(m, cls[i], ec, variant, z);
    };
    // Components of the key graph (keys joined when a state reads both).
    std::vector<std::size_t> parent(keys.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& sk : state_keys)
        for (std::size_t j = 1; j < sk.size(); ++j) parent[find(sk[j])] = find(sk[0]);
    std::map<std::size_t, std::vector<std::size_t>> comp_keys, comp_states;
    for (std::size_t k = 0; k < keys.size(); ++k) comp_keys[find(k)].push_back(k);
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (state_keys[i].empty()) {
            if (!state_ok(i)) return false;
            continue;
        }
        comp_states[find(state_keys[i][0])].push_back(i);
    }
    for (const auto& [root, ks] : comp_keys) {
        // position of each key inside this component's search order
        std::map<std::size_t, std::size_t> pos;
        for (std::size_t j = 0; j < ks.size(); ++j) pos[ks[j]] = j;
        std::vector<std::vector<std::size_t>> checks_at(ks.size());
        for (auto i : comp_states[root]) {
            std::size_t last = 0;
            for (auto k : state_keys[i]) last = std::max(last, pos[k]);
            checks_at[last].push_back(i);
        }
        std::uint64_t budget = kUniformClassBudget;
        std::function<bool(std::size_t)> rec = [&](std::size_t j) -> bool {
            if (j == ks.size()) return true;
            auto [member, view] = keys[ks[j]];
            auto l = static_cast<LocalStateId>(m.view_key(agents[member], view)[0]);
            auto arity = m.amas().agents[agents[member]].repertoire[l].size();
            for (std::uint32_t c = 0; c < arity; ++c) {
                if (budget == 0) return false;
                --budget;
                value[ks[j]] = c;
                bool ok = true;
                for (auto i : checks_at[j])
                    if (!state_ok(i)) {
                        ok = false;
                        break;
                    }
                if (ok && rec(j + 1)) return true;
            }
            return false;
        };
        if (!rec(0)) return false;
    }
    return true;
}

}  // namespace detail

/// States whose whole class can be steered into Z by classwise-constant choices.
inline StateSet pre_uniform(const Model& m, const std::vector<AgentId>& agents, const StateSet& z,
                            Variant variant, const UniformClasses& uc) {
    StateSet out(m.num_states());
    for (const auto& cls : uc.members)
        if (detail::class_controllable(m, agents, cls, z, variant))
            for (auto s : cls) out.insert(s);
    return out;
}

inline StateSet pre_uniform(const Model& m, const std::vector<AgentId>& agents, const StateSet& z,
                            Variant variant = Variant::Std) {
    return pre_uniform(m, agents, z, variant, uniform_classes(m, agents));
}

// ── Fixpoints ───────────────────────────────────────────────────────────────

enum class TriVerdict { True, False, Unknown };

inline const char* tri_name(TriVerdict v) {
    return v == TriVerdict::True ? "true" : v == TriVerdict::False ? "false" : "unknown";
}

struct FixpointRun {
    StateSet set;
    std::size_t iterations = 0;
};

template <typename Pre>
FixpointRun goal_fixpoint(const Model& m, const Goal& goal, Pre&& pre) {
    const std::size_t n = m.num_states();
    auto p = StateSet::from_table(goal.p);
    FixpointRun run;
    switch (goal.path) {
        case Formula::Path::F:
        case Formula::Path::U: {
            auto base = goal.path == Formula::Path::F ? p : StateSet::from_table(goal.q);
            StateSet z = base;
            while (true) {
                ++run.iterations;
                StateSet next = pre(z);
                if (goal.path == Formula::Path::U) next &= p;
                next |= base;
                if (next == z) break;
                z = std::move(next);
            }
            run.set = std::move(z);
            break;
        }
        case Formula::Path::G: {
            StateSet z(n, true);
            while (true) {
                ++run.iterations;
                StateSet next = pre(z);
                next &= p;
                if (next == z) break;
                z = std::move(next);
            }
            run.set = std::move(z);
            break;
        }
    }
    return run;
}

struct ApproxResult {
    TriVerdict verdict = TriVerdict::Unknown;
    std::size_t lower_size = 0;
    std::size_t upper_size = 0;
    std::size_t lower_iterations = 0;
    std::size_t upper_iterations = 0;
    bool lower_within_upper = true;
};

/// Bounds for a top-level coalition formula, conjoined over the initial states.
inline ApproxResult approximate_verify(const Model& m, const Formula& f, Mode mode, Variant variant = Variant::Std) {
    if (f.kind != Formula::Kind::Coalition)
        throw ModelError("the approximation engine needs a formula of the form <<A>> F/G/U");
    Goal goal = make_goal(m, f);
    auto upper = goal_fixpoint(m, goal, [&](const StateSet& z) { return pre_perfect(m, goal.agents, z, variant); });
    auto classes = uniform_classes(m, goal.agents);
    auto lower = goal_fixpoint(m, goal, [&](const StateSet& z) {
        return pre_uniform(m, goal.agents, z, variant, classes);
    });
    ApproxResult res;
    res.lower_size = lower.set.count();
    res.upper_size = upper.set.count();
    res.lower_iterations = lower.iterations;
    res.upper_iterations = upper.iterations;
    res.lower_within_upper = lower.set.subset_of(upper.set);
    bool all_true = true;
    for (auto init : m.initial()) {
        auto roots = roots_for(m, goal.agents, init, mode);
        bool in_lower = std::all_of(roots.begin(), roots.end(), [&](StateId r) { return lower.set.contains(r); });
        bool in_upper = std::all_of(roots.begin(), roots.end(), [&](StateId r) { return upper.set.contains(r); });
        if (!in_upper) {
            res.verdict = TriVerdict::False;
            return res;
        }
        all_true = all_true && in_lower;
    }
    res.verdict = all_true ? TriVerdict::True : TriVerdict::Unknown;
    return res;
}

}  // namespace amasv
