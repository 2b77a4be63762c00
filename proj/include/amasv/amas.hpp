// ============================================================================
// amasv/amas.hpp: asynchronous multi-agent systems
// ============================================================================
//
// An Amas is a list of local automata that synchronise on shared events. It is
// produced from a ModelSpec by instantiate(): every template with count c
// yields agents Name1..Namec, with the keyword `aID` replaced by the instance
// name everywhere.
//
// Variables live in one global store. A variable belongs to the agent whose
// name prefixes it ("VoterC1_vote" belongs to VoterC1); unowned variables are
// observed by nobody.
// ============================================================================
#pragma once

#include "amasv/common.hpp"
#include "amasv/dsl.hpp"
#include "amasv/expr.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace amasv {

struct Update {
    VarId var = 0;
    bool is_read = false;
    VarId source = 0;  // when is_read
    Value literal = 0;
};

struct LocalTransition {
    EventId event = 0;
    LocalStateId source = 0;
    LocalStateId target = 0;
    std::optional<Expr> guard;
    std::vector<Update> updates;
};

/// A choice is a nonempty, sorted set of events.
using Choice = std::vector<EventId>;

struct LocalAgent {
    std::string name;
    std::string template_name;
    std::vector<std::string> states;
    LocalStateId initial = 0;
    std::vector<EventId> events;  // sorted
    std::vector<LocalTransition> transitions;
    std::vector<std::vector<std::size_t>> outgoing;  // per local state: transition indices
    std::vector<std::vector<Choice>> repertoire;     // per local state
    std::vector<VarId> own_vars;                     // sorted

    /// Events with a local transition from `l`, i.e. the union of R_i(l).
    std::vector<EventId> available(LocalStateId l) const {
        std::vector<EventId> out;
        for (auto ti : outgoing[l]) out.push_back(transitions[ti].event);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::optional<LocalStateId> find_state(const std::string& s) const {
        auto it = std::find(states.begin(), states.end(), s);
        if (it == states.end()) return std::nullopt;
        return static_cast<LocalStateId>(it - states.begin());
    }
};

struct Amas {
    std::vector<LocalAgent> agents;

    std::vector<std::string> event_names;
    std::vector<std::vector<AgentId>> event_owners;  // Agent(alpha), sorted
    std::vector<char> event_shared;

    std::vector<std::string> var_names;
    std::vector<AgentId> var_owner;  // kNoAgent if unowned
    std::vector<char> var_is_bool;
    std::vector<char> var_persistent;
    std::vector<VarId> reduction_vars;

    std::vector<std::string> formulas;
    std::string source_text;  // DSL text this system was instantiated from, if any

    std::size_t num_agents() const { return agents.size(); }
    std::size_t num_events() const { return event_names.size(); }
    std::size_t num_vars() const { return var_names.size(); }

    std::optional<AgentId> find_agent(const std::string& name) const {
        for (AgentId i = 0; i < agents.size(); ++i)
            if (agents[i].name == name) return i;
        return std::nullopt;
    }
    std::optional<EventId> find_event(const std::string& name) const {
        auto it = std::find(event_names.begin(), event_names.end(), name);
        if (it == event_names.end()) return std::nullopt;
        return static_cast<EventId>(it - event_names.begin());
    }
    std::optional<VarId> find_var(const std::string& name) const {
        auto it = std::find(var_names.begin(), var_names.end(), name);
        if (it == var_names.end()) return std::nullopt;
        return static_cast<VarId>(it - var_names.begin());
    }
    const std::string& event_name(EventId e) const {
        static const std::string eps = "epsilon";
        return e == kEpsilon ? eps : event_names[e];
    }
};

// ── Instantiation ───────────────────────────────────────────────────────────

struct InstantiateOptions {
    /// Treat orphan shared events and unknown protocol/directive names as errors.
    bool strict = false;
};

struct Instantiated {
    Amas amas;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string substitute_aid(const std::string& s, const std::string& instance) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s.compare(i, 3, "aID") == 0) {
            out += instance;
            i += 3;
        } else {
            out += s[i++];
        }
    }
    return out;
}

struct RawTransition {
    std::string event;
    bool shared;
    std::string source, target;
    std::optional<Expr> guard;
    std::vector<UpdateSpec> updates;
    std::size_t line;
};

struct RawAgent {
    std::string name, template_name, init;
    std::vector<RawTransition> transitions;
    std::vector<std::vector<std::string>> groups;
};

inline RawAgent expand_template(const AgentTemplate& t, int index) {
    RawAgent a;
    a.name = t.name + std::to_string(index);
    a.template_name = t.name;
    auto sub = [&](const std::string& s) { return substitute_aid(s, a.name); };
    a.init = sub(t.init_state);
    for (const auto& tr : t.transitions) {
        RawTransition r{sub(tr.event_name), tr.shared, sub(tr.source), sub(tr.target), tr.precondition, {}, tr.line};
        if (r.guard) r.guard->for_each_var([&](Operand& o) { o.name = sub(o.name); });
        for (auto u : tr.updates) {
            u.var = sub(u.var);
            if (u.value.is_read) u.value.var = sub(u.value.var);
            r.updates.push_back(std::move(u));
        }
        a.transitions.push_back(std::move(r));
    }
    for (const auto& g : t.protocol_groups) {
        std::vector<std::string> ng;
        for (const auto& e : g) ng.push_back(sub(e));
        a.groups.push_back(std::move(ng));
    }
    return a;
}

}  // namespace detail

/// Instantiate every template and wire shared events. Throws ModelError.
inline Instantiated instantiate(const ModelSpec& spec, const InstantiateOptions& opts = {}) {
    using namespace detail;
    Instantiated result;
    auto& amas = result.amas;
    auto warn = [&](const std::string& m) {
        if (opts.strict) throw ModelError(m);
        result.warnings.push_back(m);
    };

    if (spec.templates.empty()) throw ModelError("no agent templates");
    std::vector<RawAgent> raw;
    for (const auto& t : spec.templates)
        for (int k = 1; k <= t.count; ++k) raw.push_back(expand_template(t, k));
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            if (raw[i].name == raw[j].name) throw ModelError("duplicate agent instance name: " + raw[i].name);

    // Events: owners, shared flags, ids ordered by (first owner, name).
    std::map<std::string, std::vector<AgentId>> owners;
    std::map<std::string, bool> any_local;
    for (AgentId i = 0; i < raw.size(); ++i) {
        for (const auto& tr : raw[i].transitions) {
            auto& o = owners[tr.event];
            if (o.empty() || o.back() != i) o.push_back(i);
            if (!tr.shared) any_local[tr.event] = true;
        }
    }
    std::vector<std::pair<AgentId, std::string>> order;
    for (auto& [name, o] : owners) {
        if (o.size() > 1 && any_local[name])
            throw ModelError("event '" + name + "' is not shared but appears in agents " + raw[o[0]].name +
                             " and " + raw[o[1]].name);
        if (o.size() == 1 && !any_local[name])
            warn("shared event '" + name + "' of agent " + raw[o[0]].name + " has no synchronisation partner");
        order.emplace_back(o.front(), name);
    }
    std::sort(order.begin(), order.end());
    std::unordered_map<std::string, EventId> event_id;
    for (const auto& [first, name] : order) {
        event_id[name] = static_cast<EventId>(amas.event_names.size());
        amas.event_names.push_back(name);
        amas.event_owners.push_back(owners[name]);
        amas.event_shared.push_back(owners[name].size() > 1 || !any_local[name]);
    }

    // Variables: every name that is assigned, read, or tested.
    std::vector<std::string> agent_names;
    for (const auto& a : raw) agent_names.push_back(a.name);
    auto owner_of = [&](const std::string& var) {
        AgentId best = kNoAgent;
        std::size_t best_len = 0;
        for (AgentId i = 0; i < agent_names.size(); ++i) {
            const auto& n = agent_names[i];
            if (var.size() > n.size() && var.compare(0, n.size(), n) == 0 && var[n.size()] == '_' &&
                n.size() > best_len) {
                best = i;
                best_len = n.size();
            }
        }
        return best;
    };
    std::set<std::string> var_set;
    std::map<std::string, int> var_type;  // 0 unknown, 1 bool, 2 int
    for (const auto& a : raw) {
        for (const auto& tr : a.transitions) {
            if (tr.guard) tr.guard->for_each_var([&](const Operand& o) { var_set.insert(o.name); });
            for (const auto& u : tr.updates) {
                var_set.insert(u.var);
                if (u.value.is_read) {
                    var_set.insert(u.value.var);
                    continue;
                }
                int ty = u.value.literal_is_bool ? 1 : 2;
                int& cur = var_type[u.var];
                if (cur == 0) cur = ty;
                else if (cur != ty)
                    throw ModelError("variable '" + u.var + "' assigned both boolean and integer values (line " +
                                     std::to_string(tr.line) + ")");
            }
        }
    }
    std::vector<std::pair<std::pair<AgentId, std::string>, std::string>> vorder;
    for (const auto& v : var_set) vorder.push_back({{owner_of(v), v}, v});
    std::sort(vorder.begin(), vorder.end());
    std::unordered_map<std::string, VarId> var_id;
    for (const auto& [key, v] : vorder) {
        var_id[v] = static_cast<VarId>(amas.var_names.size());
        amas.var_names.push_back(v);
        amas.var_owner.push_back(key.first);
        amas.var_is_bool.push_back(var_type[v] == 1);
        amas.var_persistent.push_back(0);
    }
    for (const auto& p : spec.directives.persistent) {
        auto it = var_id.find(p);
        if (it == var_id.end()) warn("PERSISTENT names unknown variable '" + p + "'");
        else amas.var_persistent[it->second] = 1;
    }
    for (const auto& r : spec.directives.reduction) {
        auto it = var_id.find(r);
        if (it == var_id.end()) warn("REDUCTION names unknown variable '" + r + "'");
        else amas.reduction_vars.push_back(it->second);
    }
    amas.formulas = spec.directives.formulas;

    // Local automata.
    for (AgentId i = 0; i < raw.size(); ++i) {
        const auto& r = raw[i];
        LocalAgent ag;
        ag.name = r.name;
        ag.template_name = r.template_name;
        auto state_id = [&](const std::string& s) {
            auto f = ag.find_state(s);
            if (f) return *f;
            ag.states.push_back(s);
            return static_cast<LocalStateId>(ag.states.size() - 1);
        };
        ag.initial = state_id(r.init);
        for (const auto& tr : r.transitions) {
            LocalTransition lt;
            lt.event = event_id.at(tr.event);
            lt.source = state_id(tr.source);
            lt.target = state_id(tr.target);
            lt.guard = tr.guard;
            if (lt.guard) lt.guard->for_each_var([&](Operand& o) { o.var = var_id.at(o.name); });
            for (const auto& u : tr.updates) {
                Update nu;
                nu.var = var_id.at(u.var);
                nu.is_read = u.value.is_read;
                if (nu.is_read) nu.source = var_id.at(u.value.var);
                else nu.literal = u.value.literal;
                lt.updates.push_back(nu);
            }
            ag.transitions.push_back(std::move(lt));
            ag.events.push_back(ag.transitions.back().event);
        }
        std::sort(ag.events.begin(), ag.events.end());
        ag.events.erase(std::unique(ag.events.begin(), ag.events.end()), ag.events.end());
        bool init_used = ag.transitions.empty();
        for (const auto& lt : ag.transitions)
            if (lt.source == ag.initial || lt.target == ag.initial) init_used = true;
        if (!init_used) warn("initial state '" + r.init + "' of agent " + r.name + " has no transitions");

        ag.outgoing.assign(ag.states.size(), {});
        for (std::size_t ti = 0; ti < ag.transitions.size(); ++ti) ag.outgoing[ag.transitions[ti].source].push_back(ti);

        // Protocol groups become one choice each; leftover events are singletons.
        std::vector<std::vector<EventId>> groups;
        std::set<EventId> grouped;
        for (const auto& g : r.groups) {
            std::vector<EventId> ids;
            for (const auto& name : g) {
                auto it = event_id.find(name);
                if (it == event_id.end() || !std::binary_search(ag.events.begin(), ag.events.end(), it->second)) {
                    warn("PROTOCOL of agent " + r.name + " names unknown event '" + name + "'");
                    continue;
                }
                if (!grouped.insert(it->second).second) {
                    warn("event '" + name + "' appears in two PROTOCOL groups of agent " + r.name);
                    continue;
                }
                ids.push_back(it->second);
            }
            std::sort(ids.begin(), ids.end());
            if (!ids.empty()) groups.push_back(std::move(ids));
        }
        ag.repertoire.assign(ag.states.size(), {});
        for (LocalStateId l = 0; l < ag.states.size(); ++l) {
            auto avail = ag.available(l);
            for (const auto& g : groups) {
                Choice c;
                std::set_intersection(g.begin(), g.end(), avail.begin(), avail.end(), std::back_inserter(c));
                if (!c.empty()) ag.repertoire[l].push_back(std::move(c));
            }
            for (auto e : avail)
                if (!grouped.count(e)) ag.repertoire[l].push_back({e});
        }
        amas.agents.push_back(std::move(ag));
    }
    for (VarId v = 0; v < amas.num_vars(); ++v)
        if (amas.var_owner[v] != kNoAgent) amas.agents[amas.var_owner[v]].own_vars.push_back(v);
    amas.source_text = print_model_spec(spec);
    return result;
}

/// Parse and instantiate in one step, keeping the source text for dumps.
inline Instantiated load_amas(std::string_view text, const InstantiateOptions& opts = {},
                              std::string source_name = "<input>") {
    auto r = instantiate(parse_model_file(text, std::move(source_name)), opts);
    r.amas.source_text = std::string(text);
    return r;
}

}  // namespace amasv
