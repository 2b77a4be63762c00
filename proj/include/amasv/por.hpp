// ============================================================================
// amasv/por.hpp: partial order reduction
// ============================================================================
//
// Visibility and independence are decided syntactically over the AMAS:
//   W(a)  = variables a assigns, plus every non-persistent variable that any
//           transition assigns (a resets those it does not assign)
//   Rd(a) = variables read by guards and by update right-hand sides of a
// An event is invisible iff no owner is in A and W(a) misses PV and every
// variable owned by an agent in A.
//
// Ample sets: all enabled events of the first agent i (in agent order) whose
// every event available at its current local state is private to i,
// invisible, and free of variable conflicts with events of other agents.
// Any state whose ample successors meet the DFS stack is fully expanded.
// ============================================================================
#pragma once

#include "amasv/formula.hpp"
#include "amasv/logic.hpp"
#include "amasv/model.hpp"

#include <set>

namespace amasv {

struct ReductionContext {
    std::vector<AgentId> agents;  // A: coalition plus knowledge agents
    std::vector<VarId> observed;  // PV
    std::vector<char> invisible;  // per event
    std::vector<std::vector<VarId>> assigns, writes, reads;  // per event, sorted
    std::vector<char> safe;       // per event: private, invisible, conflict-free
    std::vector<std::vector<char>> safe_local;  // [agent][local state]

    bool visible(EventId e) const { return e != kEpsilon && !invisible[e]; }

    /// Events are dependent iff they share an owner, both are visible, or
    /// one writes what the other reads or assigns.
    bool dependent(const Amas& amas, EventId a, EventId b) const {
        if (a == kEpsilon || b == kEpsilon) return false;
        if (a == b) return true;
        const auto& oa = amas.event_owners[a];
        const auto& ob = amas.event_owners[b];
        for (auto x : oa)
            if (std::binary_search(ob.begin(), ob.end(), x)) return true;
        if (visible(a) && visible(b)) return true;
        return vars_conflict(a, b);
    }

    bool vars_conflict(EventId a, EventId b) const {
        auto meets = [](const std::vector<VarId>& x, const std::vector<VarId>& y) {
            for (auto v : x)
                if (std::binary_search(y.begin(), y.end(), v)) return true;
            return false;
        };
        return meets(writes[a], reads[b]) || meets(reads[a], writes[b]) || meets(assigns[a], writes[b]) ||
               meets(writes[a], assigns[b]);
    }
};

inline ReductionContext classify_events(const Amas& amas, std::vector<AgentId> agents, std::vector<VarId> observed) {
    std::sort(agents.begin(), agents.end());
    agents.erase(std::unique(agents.begin(), agents.end()), agents.end());
    std::sort(observed.begin(), observed.end());
    observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
    ReductionContext ctx;
    ctx.agents = agents;
    ctx.observed = observed;
    const std::size_t ne = amas.num_events();
    ctx.assigns.resize(ne);
    ctx.writes.resize(ne);
    ctx.reads.resize(ne);
    std::set<VarId> resettable;
    for (const auto& ag : amas.agents)
        for (const auto& t : ag.transitions) {
            for (const auto& u : t.updates) {
                ctx.assigns[t.event].push_back(u.var);
                if (u.is_read) ctx.reads[t.event].push_back(u.source);
                if (!amas.var_persistent[u.var]) resettable.insert(u.var);
            }
            if (t.guard) t.guard->for_each_var([&](const Operand& o) { ctx.reads[t.event].push_back(o.var); });
        }
    auto norm = [](std::vector<VarId>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (EventId e = 0; e < ne; ++e) {
        norm(ctx.assigns[e]);
        norm(ctx.reads[e]);
        ctx.writes[e] = ctx.assigns[e];
        ctx.writes[e].insert(ctx.writes[e].end(), resettable.begin(), resettable.end());
        norm(ctx.writes[e]);
    }
    ctx.invisible.assign(ne, 0);
    for (EventId e = 0; e < ne; ++e) {
        bool inv = true;
        for (auto o : amas.event_owners[e])
            if (std::binary_search(agents.begin(), agents.end(), o)) inv = false;
        for (auto v : ctx.writes[e]) {
            if (std::binary_search(observed.begin(), observed.end(), v)) inv = false;
            AgentId owner = amas.var_owner[v];
            if (owner != kNoAgent && std::binary_search(agents.begin(), agents.end(), owner)) inv = false;
        }
        ctx.invisible[e] = inv;
    }
    ctx.safe.assign(ne, 0);
    for (EventId e = 0; e < ne; ++e) {
        if (amas.event_owners[e].size() != 1 || !ctx.invisible[e]) continue;
        AgentId i = amas.event_owners[e][0];
        bool ok = true;
        for (EventId f = 0; f < ne && ok; ++f) {
            const auto& of = amas.event_owners[f];
            if (of.size() == 1 && of[0] == i) continue;
            if (ctx.vars_conflict(e, f)) ok = false;
        }
        ctx.safe[e] = ok;
    }
    ctx.safe_local.resize(amas.num_agents());
    for (AgentId i = 0; i < amas.num_agents(); ++i) {
        const auto& ag = amas.agents[i];
        ctx.safe_local[i].assign(ag.states.size(), 0);
        if (std::binary_search(agents.begin(), agents.end(), i)) continue;
        for (LocalStateId l = 0; l < ag.states.size(); ++l) {
            auto avail = ag.available(l);
            ctx.safe_local[i][l] =
                !avail.empty() && std::all_of(avail.begin(), avail.end(), [&](EventId e) { return ctx.safe[e] != 0; });
        }
    }
    return ctx;
}

/// A = coalition and knowledge agents of f; PV = atoms of f plus the REDUCTION list.
inline ReductionContext context_for_formula(const Amas& amas, const Formula& f) {
    std::set<std::string> names;
    collect_agents(f, names);
    std::vector<AgentId> agents;
    for (const auto& n : names) {
        auto a = amas.find_agent(n);
        if (!a) throw ModelError("unknown agent '" + n + "' in formula");
        agents.push_back(*a);
    }
    std::set<std::string> vars;
    collect_atom_vars(f, vars);
    std::vector<VarId> observed(amas.reduction_vars.begin(), amas.reduction_vars.end());
    for (const auto& v : vars)
        if (auto id = amas.find_var(v)) observed.push_back(*id);
    return classify_events(amas, std::move(agents), std::move(observed));
}

// ── Ample sets ──────────────────────────────────────────────────────────────

struct AmpleDecision {
    std::vector<EventId> chosen;
    bool fully_expanded = true;
    enum class Reason { None, NoSafeAgent, StackCycle } reason = Reason::None;
};

/// `enabled` lists the real events enabled at g (ascending); `target_on_stack(e)`
/// says whether the successor via e is a state on the current DFS stack.
template <typename OnStack>
AmpleDecision select_ample(const Amas& amas, const ReductionContext& ctx, std::span<const Value> g,
                           const std::vector<EventId>& enabled, OnStack&& target_on_stack) {
    AmpleDecision d;
    d.chosen = enabled;
    d.reason = AmpleDecision::Reason::NoSafeAgent;
    for (AgentId i = 0; i < amas.num_agents(); ++i) {
        if (!ctx.safe_local[i][static_cast<LocalStateId>(g[i])]) continue;
        std::vector<EventId> mine;
        for (auto e : enabled)
            if (amas.event_owners[e][0] == i && amas.event_owners[e].size() == 1) mine.push_back(e);
        if (mine.empty()) continue;
        if (mine.size() == enabled.size()) break;
        bool cycle = std::any_of(mine.begin(), mine.end(), [&](EventId e) { return target_on_stack(e); });
        if (cycle) {
            d.reason = AmpleDecision::Reason::StackCycle;
            return d;
        }
        d.chosen = std::move(mine);
        d.fully_expanded = false;
        d.reason = AmpleDecision::Reason::None;
        return d;
    }
    if (enabled.empty()) d.reason = AmpleDecision::Reason::None;
    return d;
}

// ── Reducing DFS ────────────────────────────────────────────────────────────

struct ReductionStats {
    std::size_t ample = 0;
    std::size_t full = 0;
    std::size_t full_by_cycle = 0;
};

/// The reduced undeadlocked model: DFS from every initial state, then from
/// every extra seed (subjective roots), following ample sets plus epsilon.
inline Model reduce(std::shared_ptr<const Amas> amas, const std::vector<std::vector<Value>>& init,
                    const ReductionContext& ctx, const BuildOptions& opts = {},
                    const std::vector<std::vector<Value>>& extra_seeds = {}, ReductionStats* stats = nullptr) {
    if (init.empty()) throw ModelError("no initial states");
    ModelBuilder b(amas, true, true);
    const auto& gen = b.generator();
    ReductionStats local;
    struct Frame {
        StateId s;
        std::vector<SuccessorGenerator::Successor> succ;
        std::size_t next;
    };
    std::vector<char> on_stack;
    std::vector<Frame> stack;
    std::size_t processed = 0;

    auto enter = [&](StateId s) {
        if (opts.should_stop && (++processed & 1023) == 0 && opts.should_stop())
            throw LimitExceeded("model construction interrupted (timeout)");
        std::vector<Value> g(b.model().raw(s).begin(), b.model().raw(s).end());
        auto succ = gen.successors(g);
        std::vector<EventId> enabled;
        for (const auto& sc : succ) enabled.push_back(sc.event);
        if (gen.has_deadlocking_selection(g, enabled)) b.set_epsilon(s);
        if (on_stack.size() <= s) on_stack.resize(s + 1, 0);
        on_stack[s] = 1;
        auto decision = select_ample(*amas, ctx, g, enabled, [&](EventId e) {
            for (const auto& sc : succ)
                if (sc.event == e) {
                    auto t = b.model().find(sc.state);
                    return t && *t < on_stack.size() && on_stack[*t];
                }
            return false;
        });
        if (decision.fully_expanded) {
            ++local.full;
            if (decision.reason == AmpleDecision::Reason::StackCycle) ++local.full_by_cycle;
        } else {
            ++local.ample;
            std::vector<SuccessorGenerator::Successor> kept;
            for (auto& sc : succ)
                if (std::binary_search(decision.chosen.begin(), decision.chosen.end(), sc.event))
                    kept.push_back(std::move(sc));
            succ = std::move(kept);
        }
        b.set_full_enabled(s, std::move(enabled));
        stack.push_back({s, std::move(succ), 0});
    };

    auto run_from = [&](const std::vector<Value>& g, bool designated) {
        auto [id, fresh] = b.intern(g);
        const auto& ini = b.model().initial();
        if (designated && std::find(ini.begin(), ini.end(), id) == ini.end()) b.add_initial(id);
        const auto& seeds = b.model().seeds();
        if (std::find(seeds.begin(), seeds.end(), id) == seeds.end()) b.add_seed(id);
        if (!fresh) return;
        enter(id);
        while (!stack.empty()) {
            auto& fr = stack.back();
            if (fr.next == fr.succ.size()) {
                on_stack[fr.s] = 0;
                stack.pop_back();
                continue;
            }
            auto& sc = fr.succ[fr.next++];
            StateId src = fr.s;
            auto [t, is_new] = b.intern(sc.state);
            b.add_edge(src, sc.event, t);
            if (is_new) {
                if (b.model().num_states() > opts.max_states)
                    throw LimitExceeded("state limit of " + std::to_string(opts.max_states) + " exceeded");
                enter(t);
            }
        }
    };

    for (const auto& g : init) run_from(g, true);
    for (const auto& g : extra_seeds) run_from(g, false);
    if (stats) *stats = local;
    return b.finish();
}

/// I plus every reachable state some member of A cannot tell apart from an
/// initial state. Requires a sweep of the full state space (states only).
inline std::vector<std::vector<Value>> subjective_seeds(const Amas& amas, const std::vector<std::vector<Value>>& init,
                                                        const std::vector<AgentId>& agents,
                                                        const BuildOptions& opts = {}) {
    SuccessorGenerator gen(amas);
    const std::size_t n = amas.num_agents();
    auto view_of = [&](const std::vector<Value>& g, AgentId a) {
        std::vector<Value> key{g[a]};
        for (auto v : amas.agents[a].own_vars) key.push_back(g[n + v]);
        return key;
    };
    std::vector<std::set<std::vector<Value>>> init_views(agents.size());
    for (const auto& g : init)
        for (std::size_t k = 0; k < agents.size(); ++k) init_views[k].insert(view_of(g, agents[k]));
    std::unordered_set<std::vector<Value>, detail::VecHash> seen(init.begin(), init.end());
    std::deque<std::vector<Value>> queue(init.begin(), init.end());
    std::vector<std::vector<Value>> out;
    std::size_t processed = 0;
    while (!queue.empty()) {
        auto g = std::move(queue.front());
        queue.pop_front();
        if (opts.should_stop && (++processed & 1023) == 0 && opts.should_stop())
            throw LimitExceeded("model construction interrupted (timeout)");
        bool in_init = std::find(init.begin(), init.end(), g) != init.end();
        if (!in_init)
            for (std::size_t k = 0; k < agents.size(); ++k)
                if (init_views[k].count(view_of(g, agents[k]))) {
                    out.push_back(g);
                    break;
                }
        for (auto& sc : gen.successors(g))
            if (seen.insert(sc.state).second) {
                if (seen.size() > opts.max_states)
                    throw LimitExceeded("state limit of " + std::to_string(opts.max_states) + " exceeded");
                queue.push_back(std::move(sc.state));
            }
    }
    return out;
}

/// Reduced model for one formula: W and Rd from its atoms and coalition, and
/// for subjective mode the DFS also starts from every state a coalition member
/// confuses with an initial one.
inline Model reduce_for(std::shared_ptr<const Amas> amas, const std::vector<std::vector<Value>>& init,
                        const Formula& f, Mode mode, const BuildOptions& opts = {},
                        ReductionStats* stats = nullptr) {
    auto ctx = context_for_formula(*amas, f);
    std::vector<std::vector<Value>> seeds;
    if (mode == Mode::Subjective) seeds = subjective_seeds(*amas, init, ctx.agents, opts);
    return reduce(amas, init, ctx, opts, seeds, stats);
}

}  // namespace amasv
