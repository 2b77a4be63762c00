// ============================================================================
// amasv/logic.hpp: strategies, outcomes and exact verification
// ============================================================================
//
// A strategy of agent i maps each view of i (local state plus own variables)
// to an index into R_i at that local state. Under Std the epsilon loop is
// kept wherever it exists; under React it is kept only where the coalition's
// choices admit no real event.
//
// Path formulas are decided on the outcome graph: G p holds iff every
// reachable node satisfies p; F p iff the reachable not-p region is acyclic
// and free of dead ends; p U q likewise on the p-and-not-q region with no
// reachable node violating both.
// ============================================================================
#pragma once

#include "amasv/formula.hpp"
#include "amasv/model.hpp"

#include <atomic>
#include <json.hpp>
#include <optional>
#include <thread>

namespace amasv {

enum class Mode { Objective, Subjective };
enum class Variant { Std, React };

inline const char* mode_name(Mode m) { return m == Mode::Objective ? "objective" : "subjective"; }
inline const char* variant_name(Variant v) { return v == Variant::Std ? "std" : "react"; }

using StateTable = std::vector<char>;

// ── State formulas ──────────────────────────────────────────────────────────

inline AgentId resolve_agent(const Amas& amas, const std::string& name) {
    auto a = amas.find_agent(name);
    if (!a) throw ModelError("unknown agent '" + name + "' in formula");
    return *a;
}

inline std::vector<AgentId> resolve_agents(const Amas& amas, const std::vector<std::string>& names) {
    std::vector<AgentId> out;
    for (const auto& n : names) out.push_back(resolve_agent(amas, n));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// K_i body: true at s iff body holds at every state with the same view of i.
inline StateTable know_table(const Model& m, AgentId i, const StateTable& body) {
    std::vector<char> ok(m.num_views(i), 1);
    for (StateId s = 0; s < m.num_states(); ++s)
        if (!body[s]) ok[m.view(s, i)] = 0;
    StateTable out(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) out[s] = ok[m.view(s, i)];
    return out;
}

inline bool eval_atom(const Model& m, const Formula& f, std::optional<VarId> var, StateId s) {
    if (!var) return false;
    Value v = m.value(s, *var);
    if (f.truthy) return v != kUnset && v != 0;
    if (v == kUnset) return false;
    switch (f.op) {
        case CmpOp::Eq: return v == f.literal;
        case CmpOp::Ne: return v != f.literal;
        case CmpOp::Lt: return v < f.literal;
        case CmpOp::Le: return v <= f.literal;
        case CmpOp::Gt: return v > f.literal;
        case CmpOp::Ge: return v >= f.literal;
    }
    return false;
}

/// Per-state truth table of a coalition-free formula. Atoms over unknown
/// variables are false everywhere.
inline StateTable eval_epistemic(const Model& m, const Formula& f) {
    using K = Formula::Kind;
    const std::size_t n = m.num_states();
    switch (f.kind) {
        case K::Const: return StateTable(n, f.const_value ? 1 : 0);
        case K::Atom: {
            auto var = m.amas().find_var(f.var);
            StateTable out(n);
            for (StateId s = 0; s < n; ++s) out[s] = eval_atom(m, f, var, s);
            return out;
        }
        case K::Not: {
            auto t = eval_epistemic(m, f.kids[0]);
            for (auto& x : t) x = !x;
            return t;
        }
        case K::And:
        case K::Or:
        case K::Implies: {
            auto a = eval_epistemic(m, f.kids[0]);
            auto b = eval_epistemic(m, f.kids[1]);
            for (std::size_t s = 0; s < n; ++s)
                a[s] = f.kind == K::And ? (a[s] && b[s]) : f.kind == K::Or ? (a[s] || b[s]) : (!a[s] || b[s]);
            return a;
        }
        case K::Know: return know_table(m, resolve_agent(m.amas(), f.agent), eval_epistemic(m, f.kids[0]));
        case K::Coalition: throw ModelError("strategic subformula where a state formula was expected");
    }
    return {};
}

// ── Goals and roots ─────────────────────────────────────────────────────────

/// A coalition formula compiled against a model: path operator plus the
/// per-state tables of its operands (p is the F/G operand or the U left side).
struct Goal {
    std::vector<AgentId> agents;
    Formula::Path path = Formula::Path::F;
    StateTable p, q;
};

inline Goal make_goal(const Model& m, const Formula& f) {
    if (f.kind != Formula::Kind::Coalition) throw ModelError("expected a coalition formula");
    Goal g;
    g.agents = resolve_agents(m.amas(), f.coalition);
    g.path = f.path;
    g.p = eval_epistemic(m, f.kids[0]);
    if (f.path == Formula::Path::U) g.q = eval_epistemic(m, f.kids[1]);
    return g;
}

/// {s} for objective ability; s plus every state some coalition member
/// cannot distinguish from s for subjective ability.
inline std::vector<StateId> roots_for(const Model& m, const std::vector<AgentId>& agents, StateId s, Mode mode) {
    std::vector<StateId> roots{s};
    if (mode == Mode::Subjective) {
        for (StateId t = 0; t < m.num_states(); ++t) {
            if (t == s) continue;
            for (auto j : agents)
                if (m.view(t, j) == m.view(s, j)) {
                    roots.push_back(t);
                    break;
                }
        }
    }
    return roots;
}

// ── Strategies ──────────────────────────────────────────────────────────────

struct JointStrategy {
    std::vector<AgentId> agents;
    /// choice[k][view] = index into R at that view's local state, or kUnbound.
    std::vector<std::vector<std::uint32_t>> choice;

    static constexpr std::uint32_t kUnbound = 0xffffffffu;

    static JointStrategy empty_for(const Model& m, const std::vector<AgentId>& agents) {
        JointStrategy s;
        s.agents = agents;
        for (auto a : agents) s.choice.emplace_back(m.num_views(a), kUnbound);
        return s;
    }

    bool operator==(const JointStrategy&) const = default;
};

/// The coalition's choice vector at s; throws if a needed view is unbound.
inline ChoiceVector strategy_choices(const Model& m, const JointStrategy& sigma, StateId s) {
    ChoiceVector ec;
    for (std::size_t k = 0; k < sigma.agents.size(); ++k) {
        AgentId a = sigma.agents[k];
        if (m.repertoire(s, a).empty()) continue;
        ViewId v = m.view(s, a);
        std::uint32_t c = v < sigma.choice[k].size() ? sigma.choice[k][v] : JointStrategy::kUnbound;
        if (c == JointStrategy::kUnbound)
            throw ModelError("strategy has no choice for " + m.amas().agents[a].name + " at " + m.view_name(a, v));
        ec.agents.push_back(a);
        ec.choice.push_back(c);
    }
    return ec;
}

/// Events of s kept by the outcome of the given coalition choice.
inline std::vector<EventId> outcome_events(const Model& m, StateId s, const ChoiceVector& ec, Variant variant) {
    auto ev = m.enabled_by_choices(s, ec);
    if (variant == Variant::React && ev.size() > 1 && ev.back() == kEpsilon) ev.pop_back();
    return ev;
}

inline nlohmann::json strategy_to_json(const Model& m, const JointStrategy& sigma) {
    nlohmann::json out = nlohmann::json::object();
    const auto& amas = m.amas();
    for (std::size_t k = 0; k < sigma.agents.size(); ++k) {
        AgentId a = sigma.agents[k];
        nlohmann::json per = nlohmann::json::object();
        for (ViewId v = 0; v < sigma.choice[k].size(); ++v) {
            auto c = sigma.choice[k][v];
            if (c == JointStrategy::kUnbound) continue;
            auto l = static_cast<LocalStateId>(m.view_key(a, v)[0]);
            nlohmann::json evs = nlohmann::json::array();
            for (auto e : amas.agents[a].repertoire[l][c]) evs.push_back(amas.event_names[e]);
            per[m.view_name(a, v)] = evs;
        }
        out[amas.agents[a].name] = per;
    }
    return out;
}

// ── Outcome graphs ──────────────────────────────────────────────────────────

struct OutcomeGraph {
    std::vector<StateId> roots;
    std::vector<StateId> states;                 // discovery order
    std::vector<std::vector<Edge>> succ;         // parallel to states
    std::unordered_map<StateId, std::uint32_t> index;

    bool contains(StateId s) const { return index.count(s) != 0; }
    const std::vector<Edge>& successors(StateId s) const { return succ[index.at(s)]; }
};

/// States where `settled` holds are kept as leaves and not expanded, so a
/// strategy need not bind views beyond the point where the goal is decided.
inline OutcomeGraph outcome_graph(const Model& m, const std::vector<StateId>& roots, const JointStrategy& sigma,
                                  Variant variant, const std::function<bool(StateId)>& settled = {}) {
    OutcomeGraph og;
    og.roots = roots;
    std::vector<StateId> stack;
    auto visit = [&](StateId s) {
        if (og.index.emplace(s, static_cast<std::uint32_t>(og.states.size())).second) {
            og.states.push_back(s);
            og.succ.emplace_back();
            stack.push_back(s);
        }
    };
    for (auto r : roots) visit(r);
    while (!stack.empty()) {
        StateId s = stack.back();
        stack.pop_back();
        if (settled && settled(s)) continue;
        auto keep = outcome_events(m, s, strategy_choices(m, sigma, s), variant);
        std::vector<Edge> out;
        for (const auto& e : m.successors(s))
            if (std::find(keep.begin(), keep.end(), e.event) != keep.end()) out.push_back(e);
        for (const auto& e : out) visit(e.target);
        og.succ[og.index.at(s)] = std::move(out);
    }
    return og;
}

namespace detail {

/// True iff, inside the region of og selected by `in_region`, nothing reachable
/// from `starts` (through region nodes only) lies on a cycle or is a dead end.
template <typename SuccFn, typename InRegion>
bool region_acyclic(const std::vector<StateId>& starts, SuccFn&& succ, InRegion&& in_region) {
    // 0 = unvisited, 1 = on stack, 2 = done
    std::unordered_map<StateId, char> color;
    struct Frame {
        StateId s;
        std::size_t next;
    };
    std::vector<Frame> stack;
    for (auto r : starts) {
        if (!in_region(r) || color[r] == 2) continue;
        color[r] = 1;
        stack.push_back({r, 0});
        while (!stack.empty()) {
            auto& fr = stack.back();
            const auto& out = succ(fr.s);
            if (out.empty()) return false;
            if (fr.next == out.size()) {
                color[fr.s] = 2;
                stack.pop_back();
                continue;
            }
            StateId t = out[fr.next++].target;
            if (!in_region(t)) continue;
            char& c = color[t];
            if (c == 1) return false;
            if (c == 0) {
                c = 1;
                stack.push_back({t, 0});
            }
        }
    }
    return true;
}

}  // namespace detail

/// Does every infinite path of og from its roots satisfy the path formula?
inline bool holds_on_all_paths(const OutcomeGraph& og, Formula::Path path, const StateTable& p,
                               const StateTable& q = {}) {
    auto succ = [&](StateId s) -> const std::vector<Edge>& { return og.successors(s); };
    switch (path) {
        case Formula::Path::G:
            return std::all_of(og.states.begin(), og.states.end(), [&](StateId s) { return p[s] != 0; });
        case Formula::Path::F:
            return detail::region_acyclic(og.roots, succ, [&](StateId s) { return !p[s]; });
        case Formula::Path::U: {
            // Reachable without passing q: must satisfy p and never loop.
            bool bad = false;
            std::unordered_set<StateId> seen;
            std::vector<StateId> stack;
            for (auto r : og.roots)
                if (seen.insert(r).second) stack.push_back(r);
            while (!stack.empty() && !bad) {
                StateId s = stack.back();
                stack.pop_back();
                if (q[s]) continue;
                if (!p[s]) bad = true;
                for (const auto& e : og.successors(s))
                    if (seen.insert(e.target).second) stack.push_back(e.target);
            }
            if (bad) return false;
            return detail::region_acyclic(og.roots, succ, [&](StateId s) { return p[s] && !q[s]; });
        }
    }
    return false;
}

/// Independent replay of a witness: build its outcome and check the goal.
inline bool replay_strategy(const Model& m, const Goal& goal, const std::vector<StateId>& roots,
                            const JointStrategy& sigma, Variant variant) {
    try {
        auto settled = [&](StateId s) {
            switch (goal.path) {
                case Formula::Path::F: return goal.p[s] != 0;
                case Formula::Path::G: return goal.p[s] == 0;
                case Formula::Path::U: return goal.q[s] != 0 || goal.p[s] == 0;
            }
            return false;
        };
        auto og = outcome_graph(m, roots, sigma, variant, settled);
        return holds_on_all_paths(og, goal.path, goal.p, goal.q);
    } catch (const ModelError&) {
        return false;
    }
}

// ── Exact verification ──────────────────────────────────────────────────────

struct VerifyOptions {
    Mode mode = Mode::Subjective;
    Variant variant = Variant::Std;
    std::uint64_t max_strategies = 50'000'000;
    unsigned workers = 1;
    std::function<bool()> should_stop;
};

struct ExactResult {
    bool verdict = false;
    std::optional<JointStrategy> witness;
    std::uint64_t strategies_checked = 0;
};

/// Strategy slots: (coalition position, view) pairs whose repertoire offers
/// more than one choice, in agent order then view discovery order.
struct StrategySpace {
    struct Slot {
        std::size_t member;
        ViewId view;
        std::uint32_t arity;
    };
    std::vector<Slot> slots;
    JointStrategy base;  // single-choice views pre-bound to 0

    /// Number of joint strategies, saturating at `cap + 1`.
    std::uint64_t size(std::uint64_t cap) const {
        std::uint64_t n = 1;
        for (const auto& s : slots) {
            if (n > cap / s.arity) return cap + 1;
            n *= s.arity;
        }
        return n;
    }

    JointStrategy at(std::uint64_t index) const {
        JointStrategy sigma = base;
        for (std::size_t k = slots.size(); k-- > 0;) {
            sigma.choice[slots[k].member][slots[k].view] = static_cast<std::uint32_t>(index % slots[k].arity);
            index /= slots[k].arity;
        }
        return sigma;
    }
};

inline StrategySpace strategy_space(const Model& m, const std::vector<AgentId>& agents) {
    StrategySpace sp;
    sp.base = JointStrategy::empty_for(m, agents);
    for (std::size_t k = 0; k < agents.size(); ++k) {
        AgentId a = agents[k];
        for (ViewId v = 0; v < m.num_views(a); ++v) {
            auto l = static_cast<LocalStateId>(m.view_key(a, v)[0]);
            auto arity = static_cast<std::uint32_t>(m.amas().agents[a].repertoire[l].size());
            if (arity == 0) continue;
            sp.base.choice[k][v] = 0;
            if (arity > 1) sp.slots.push_back({k, v, arity});
        }
    }
    return sp;
}

/// Exhaustive search for the lexicographically first winning strategy.
inline ExactResult solve_exact(const Model& m, const Goal& goal, const std::vector<StateId>& roots,
                               const VerifyOptions& opts) {
    auto sp = strategy_space(m, goal.agents);
    std::uint64_t total = sp.size(opts.max_strategies);
    if (total > opts.max_strategies)
        throw LimitExceeded("strategy space exceeds " + std::to_string(opts.max_strategies) +
                            " joint strategies; use the synthesis or approximation engines");
    ExactResult res;
    unsigned workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(total)));
    std::atomic<std::uint64_t> best{total};
    std::atomic<std::uint64_t> checked{0};
    std::atomic<bool> stopped{false};
    auto run = [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t i = lo; i < hi && i < best.load(); ++i) {
            if (opts.should_stop && (i & 255) == 0 && opts.should_stop()) {
                stopped = true;
                return;
            }
            checked.fetch_add(1, std::memory_order_relaxed);
            if (replay_strategy(m, goal, roots, sp.at(i), opts.variant)) {
                std::uint64_t cur = best.load();
                while (i < cur && !best.compare_exchange_weak(cur, i)) {}
                return;
            }
        }
    };
    if (workers == 1) {
        run(0, total);
    } else {
        std::vector<std::thread> pool;
        std::uint64_t chunk = (total + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(run, w * chunk, std::min(total, (w + 1) * chunk));
        for (auto& t : pool) t.join();
    }
    if (stopped && best.load() == total) throw LimitExceeded("verification interrupted (timeout)");
    res.strategies_checked = checked.load();
    if (best.load() < total) {
        res.verdict = true;
        res.witness = sp.at(best.load());
    }
    return res;
}

/// Evaluate f at state s; coalition subformulas are delegated to `coalition`.
template <typename CoalitionFn>
bool eval_at(const Model& m, const Formula& f, StateId s, CoalitionFn&& coalition) {
    using K = Formula::Kind;
    switch (f.kind) {
        case K::Coalition: return coalition(f, s);
        case K::Not: return !eval_at(m, f.kids[0], s, coalition);
        case K::And: return eval_at(m, f.kids[0], s, coalition) && eval_at(m, f.kids[1], s, coalition);
        case K::Or: return eval_at(m, f.kids[0], s, coalition) || eval_at(m, f.kids[1], s, coalition);
        case K::Implies: return !eval_at(m, f.kids[0], s, coalition) || eval_at(m, f.kids[1], s, coalition);
        default: return eval_epistemic(m, f)[s] != 0;
    }
}

/// Exact verdict of f at state s.
inline ExactResult verify_exact_at(const Model& m, const Formula& f, StateId s, const VerifyOptions& opts = {}) {
    ExactResult total;
    total.verdict = eval_at(m, f, s, [&](const Formula& c, StateId at) {
        Goal goal = make_goal(m, c);
        auto r = solve_exact(m, goal, roots_for(m, goal.agents, at, opts.mode), opts);
        total.strategies_checked += r.strategies_checked;
        if (r.verdict && &c == &f) total.witness = r.witness;
        return r.verdict;
    });
    if (!total.verdict) total.witness.reset();
    return total;
}

/// Exact verdict of f over the model: conjunction over its initial states.
inline ExactResult verify_exact(const Model& m, const Formula& f, const VerifyOptions& opts = {}) {
    ExactResult out;
    out.verdict = true;
    for (auto s : m.initial()) {
        auto r = verify_exact_at(m, f, s, opts);
        out.strategies_checked += r.strategies_checked;
        if (!r.verdict) {
            out.verdict = false;
            out.witness.reset();
            return out;
        }
        if (!out.witness) out.witness = r.witness;
    }
    return out;
}

}  // namespace amasv
