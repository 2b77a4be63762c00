// ============================================================================
// amasv/model.hpp: explicit global models (interleaved interpreted systems)
// ============================================================================
//
// A global state is the tuple of local states plus the variable store. States
// are hash-consed and numbered densely in discovery order. The undeadlocked
// variant adds an epsilon self-loop at every state where some selection of
// choices enables no event.
//
// Each agent observes its own local state and its own variables; that pair is
// interned per agent as a ViewId. Two states are indistinguishable for agent i
// iff they have the same view for i.
// ============================================================================
#pragma once

#include "amasv/amas.hpp"
#include "amasv/common.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace amasv {

struct Edge {
    EventId event;
    StateId target;
};

/// One choice per coalition member, as indices into R_i(g^i).
struct ChoiceVector {
    std::vector<AgentId> agents;
    std::vector<std::uint32_t> choice;
};

struct BuildOptions {
    std::size_t max_states = 20'000'000;
    bool undeadlocked = true;
    /// Polled every few thousand states; returning true aborts with LimitExceeded.
    std::function<bool()> should_stop;
};

namespace detail {

struct VecHash {
    std::size_t operator()(const std::vector<Value>& v) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (auto x : v) h = (h ^ static_cast<std::uint32_t>(x)) * 1099511628211ull;
        return h;
    }
};

inline std::size_t hash_span(std::span<const Value> v) noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : v) h = (h ^ static_cast<std::uint32_t>(x)) * 1099511628211ull;
    return h;
}

}  // namespace detail

// ── Successor generation ────────────────────────────────────────────────────

/// Computes enabled events and successors of raw global states of an Amas.
class SuccessorGenerator {
public:
    struct Successor {
        EventId event;
        std::vector<Value> state;
    };

    explicit SuccessorGenerator(const Amas& amas) : amas_(&amas) {
        for (VarId v = 0; v < amas.num_vars(); ++v)
            if (!amas.var_persistent[v]) volatile_vars_.push_back(v);
    }

    std::size_t width() const { return amas_->num_agents() + amas_->num_vars(); }

    std::vector<Value> initial_state() const {
        std::vector<Value> s(width(), kUnset);
        for (AgentId i = 0; i < amas_->num_agents(); ++i) s[i] = static_cast<Value>(amas_->agents[i].initial);
        return s;
    }

    /// All enabled events with their successor, ordered by event id.
    std::vector<Successor> successors(std::span<const Value> g) const {
        const auto& amas = *amas_;
        const std::size_t n = amas.num_agents();
        auto store = g.subspan(n);
        struct Cand {
            EventId e;
            AgentId agent;
            std::size_t ti;
        };
        std::vector<Cand> cands;
        for (AgentId i = 0; i < n; ++i) {
            const auto& ag = amas.agents[i];
            for (auto ti : ag.outgoing[static_cast<LocalStateId>(g[i])]) {
                const auto& t = ag.transitions[ti];
                if (t.guard && !t.guard->eval(store)) continue;
                cands.push_back({t.event, i, ti});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            return a.e != b.e ? a.e < b.e : a.agent < b.agent;
        });
        std::vector<Successor> out;
        for (std::size_t k = 0; k < cands.size();) {
            std::size_t j = k;
            while (j < cands.size() && cands[j].e == cands[k].e) ++j;
            EventId e = cands[k].e;
            const auto& owners = amas.event_owners[e];
            bool ok = (j - k) >= owners.size();
            for (std::size_t a = k; ok && a + 1 < j; ++a)
                if (cands[a].agent == cands[a + 1].agent)
                    throw ModelError("agent " + amas.agents[cands[a].agent].name +
                                     " has several enabled transitions for event '" + amas.event_names[e] +
                                     "' in state " + describe(g));
            if (ok && (j - k) != owners.size()) ok = false;
            if (ok) out.push_back({e, apply(g, std::span<const Cand>(cands.data() + k, j - k))});
            k = j;
        }
        return out;
    }

    std::vector<EventId> enabled_events(std::span<const Value> g) const {
        std::vector<EventId> out;
        for (auto& s : successors(g)) out.push_back(s.event);
        return out;
    }

    /// True iff some selection of choices (one per agent) enables none of `enabled`.
    bool has_deadlocking_selection(std::span<const Value> g, const std::vector<EventId>& enabled) const {
        if (enabled.empty()) return true;
        const auto& amas = *amas_;
        std::vector<AgentId> involved;
        for (auto e : enabled)
            for (auto a : amas.event_owners[e]) involved.push_back(a);
        std::sort(involved.begin(), involved.end());
        involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
        // killed[k]: event enabled[k] excluded by some assigned owner's choice.
        std::vector<char> killed(enabled.size(), 0);
        std::vector<std::size_t> assigned_owners(enabled.size(), 0);
        std::function<bool(std::size_t)> rec = [&](std::size_t idx) -> bool {
            if (idx == involved.size())
                return std::all_of(killed.begin(), killed.end(), [](char c) { return c != 0; });
            AgentId a = involved[idx];
            const auto& rep = amas.agents[a].repertoire[static_cast<LocalStateId>(g[a])];
            for (const auto& choice : rep) {
                std::vector<std::size_t> newly;
                bool dead_end = false;
                for (std::size_t k = 0; k < enabled.size(); ++k) {
                    const auto& owners = amas.event_owners[enabled[k]];
                    if (!std::binary_search(owners.begin(), owners.end(), a)) continue;
                    ++assigned_owners[k];
                    if (!killed[k] && !std::binary_search(choice.begin(), choice.end(), enabled[k])) {
                        killed[k] = 1;
                        newly.push_back(k);
                    }
                    if (!killed[k] && assigned_owners[k] == owners.size()) dead_end = true;
                }
                bool found = !dead_end && rec(idx + 1);
                for (std::size_t k = 0; k < enabled.size(); ++k) {
                    const auto& owners = amas.event_owners[enabled[k]];
                    if (std::binary_search(owners.begin(), owners.end(), a)) --assigned_owners[k];
                }
                for (auto k : newly) killed[k] = 0;
                if (found) return true;
            }
            return false;
        };
        return rec(0);
    }

    std::string describe(std::span<const Value> g) const {
        const auto& amas = *amas_;
        std::string out = "(";
        for (AgentId i = 0; i < amas.num_agents(); ++i) {
            if (i) out += ", ";
            out += amas.agents[i].states[static_cast<LocalStateId>(g[i])];
        }
        out += ")";
        bool first = true;
        for (VarId v = 0; v < amas.num_vars(); ++v) {
            Value x = g[amas.num_agents() + v];
            if (x == kUnset) continue;
            out += first ? " {" : ", ";
            first = false;
            out += amas.var_names[v] + "=" + value_to_string(x, amas.var_is_bool[v]);
        }
        if (!first) out += "}";
        return out;
    }

private:
    const Amas* amas_;
    std::vector<VarId> volatile_vars_;

    template <typename Cands>
    std::vector<Value> apply(std::span<const Value> g, Cands cands) const {
        const auto& amas = *amas_;
        const std::size_t n = amas.num_agents();
        std::vector<Value> next(g.begin(), g.end());
        for (auto v : volatile_vars_) next[n + v] = kUnset;
        std::vector<std::pair<VarId, Value>> writes;
        for (const auto& c : cands) {
            const auto& t = amas.agents[c.agent].transitions[c.ti];
            next[c.agent] = static_cast<Value>(t.target);
            for (const auto& u : t.updates) {
                Value val = u.is_read ? g[n + u.source] : u.literal;
                for (const auto& [wv, wval] : writes)
                    if (wv == u.var && wval != val)
                        throw ModelError("conflicting updates of variable '" + amas.var_names[u.var] + "' by event '" +
                                         amas.event_names[t.event] + "'");
                writes.emplace_back(u.var, val);
                next[n + u.var] = val;
            }
        }
        return next;
    }
};

// ── Model ───────────────────────────────────────────────────────────────────

class ModelBuilder;

class Model {
public:
    const Amas& amas() const { return *amas_; }
    std::shared_ptr<const Amas> amas_ptr() const { return amas_; }

    std::size_t num_states() const { return edges_.size(); }
    std::size_t num_agents() const { return amas_->num_agents(); }

    /// Transitions excluding epsilon self-loops.
    std::size_t num_transitions() const {
        std::size_t n = 0;
        for (const auto& es : edges_)
            for (const auto& e : es)
                if (e.event != kEpsilon) ++n;
        return n;
    }
    std::size_t num_epsilon_states() const {
        return static_cast<std::size_t>(std::count(epsilon_.begin(), epsilon_.end(), 1));
    }
    bool undeadlocked() const { return undeadlocked_; }
    bool reduced() const { return reduced_; }

    const std::vector<StateId>& initial() const { return initial_; }
    /// States the construction started from (initial states plus extra seeds).
    const std::vector<StateId>& seeds() const { return seeds_; }

    std::span<const Edge> successors(StateId s) const { return edges_[s]; }
    bool has_epsilon(StateId s) const { return epsilon_[s] != 0; }

    /// Real events enabled at s in the full system (independent of reduction).
    std::span<const EventId> real_enabled(StateId s) const {
        if (!full_enabled_.empty()) return full_enabled_[s];
        return edge_events_[s];
    }

    /// enabled(g): every event labelling a transition of g in the full system.
    std::vector<EventId> enabled(StateId s) const {
        auto r = real_enabled(s);
        std::vector<EventId> out(r.begin(), r.end());
        if (has_epsilon(s)) out.push_back(kEpsilon);
        return out;
    }

    std::span<const Value> raw(StateId s) const {
        return {arena_.data() + static_cast<std::size_t>(s) * width_, width_};
    }
    LocalStateId local(StateId s, AgentId i) const { return static_cast<LocalStateId>(raw(s)[i]); }
    Value value(StateId s, VarId v) const { return raw(s)[num_agents() + v]; }
    std::span<const Value> store(StateId s) const { return raw(s).subspan(num_agents()); }

    ViewId view(StateId s, AgentId i) const { return views_[static_cast<std::size_t>(s) * num_agents() + i]; }
    std::size_t num_views(AgentId i) const { return view_keys_[i].size(); }
    /// (local state, own variable values) for a view id.
    const std::vector<Value>& view_key(AgentId i, ViewId v) const { return view_keys_[i][v]; }
    std::string view_name(AgentId i, ViewId v) const {
        const auto& key = view_keys_[i][v];
        const auto& ag = amas_->agents[i];
        std::string out = ag.states[static_cast<LocalStateId>(key[0])];
        for (std::size_t k = 0; k < ag.own_vars.size(); ++k) {
            if (key[k + 1] == kUnset) continue;
            out += "|" + amas_->var_names[ag.own_vars[k]] + "=" +
                   value_to_string(key[k + 1], amas_->var_is_bool[ag.own_vars[k]]);
        }
        return out;
    }

    std::optional<StateId> find(std::span<const Value> g) const {
        auto it = index_.find(Probe{g});
        if (it == index_.end()) return std::nullopt;
        return it->id;
    }

    std::string describe(StateId s) const { return SuccessorGenerator(*amas_).describe(raw(s)); }

    /// g ~_J g2: every agent of J has the same view in both states.
    bool indistinguishable(StateId a, StateId b, std::span<const AgentId> group) const {
        for (auto j : group)
            if (view(a, j) != view(b, j)) return false;
        return true;
    }

    /// R_i(g^i).
    const std::vector<Choice>& repertoire(StateId s, AgentId i) const {
        return amas_->agents[i].repertoire[local(s, i)];
    }

    /// enabled(s, E_A): events of enabled(s) admitted by every coalition owner's
    /// choice. Epsilon has no owners, so it is admitted whenever s carries the loop.
    std::vector<EventId> enabled_by_choices(StateId s, const ChoiceVector& ec) const {
        std::vector<const Choice*> picked;
        for (std::size_t k = 0; k < ec.agents.size(); ++k) {
            const auto& rep = repertoire(s, ec.agents[k]);
            if (ec.choice[k] >= rep.size())
                throw ModelError("choice index " + std::to_string(ec.choice[k]) + " not in the repertoire of " +
                                 amas_->agents[ec.agents[k]].name + " at " + describe(s));
            picked.push_back(&rep[ec.choice[k]]);
        }
        std::vector<EventId> out;
        for (auto e : real_enabled(s)) {
            const auto& owners = amas_->event_owners[e];
            bool ok = true;
            for (std::size_t k = 0; k < ec.agents.size() && ok; ++k)
                if (std::binary_search(owners.begin(), owners.end(), ec.agents[k]) &&
                    !std::binary_search(picked[k]->begin(), picked[k]->end(), e))
                    ok = false;
            if (ok) out.push_back(e);
        }
        if (has_epsilon(s)) out.push_back(kEpsilon);
        return out;
    }

    std::size_t width() const { return width_; }

private:
    friend class ModelBuilder;

    struct Probe {
        std::span<const Value> key;
    };
    struct Entry {
        StateId id;
    };
    struct IndexHash {
        using is_transparent = void;
        const Model* m;
        std::size_t operator()(const Entry& e) const noexcept { return detail::hash_span(m->raw(e.id)); }
        std::size_t operator()(const Probe& p) const noexcept { return detail::hash_span(p.key); }
    };
    struct IndexEq {
        using is_transparent = void;
        const Model* m;
        static bool same(std::span<const Value> a, std::span<const Value> b) {
            return std::equal(a.begin(), a.end(), b.begin(), b.end());
        }
        bool operator()(const Entry& a, const Entry& b) const { return a.id == b.id; }
        bool operator()(const Entry& a, const Probe& b) const { return same(m->raw(a.id), b.key); }
        bool operator()(const Probe& a, const Entry& b) const { return same(a.key, m->raw(b.id)); }
    };

    std::shared_ptr<const Amas> amas_;
    std::size_t width_ = 0;
    bool undeadlocked_ = true;
    bool reduced_ = false;
    std::vector<Value> arena_;
    std::vector<std::vector<Edge>> edges_;
    std::vector<std::vector<EventId>> edge_events_;
    std::vector<std::vector<EventId>> full_enabled_;
    std::vector<char> epsilon_;
    std::vector<ViewId> views_;
    std::vector<std::vector<std::vector<Value>>> view_keys_;
    std::vector<std::unordered_map<std::vector<Value>, ViewId, detail::VecHash>> view_index_;
    std::vector<StateId> initial_;
    std::vector<StateId> seeds_;
    std::unordered_set<Entry, IndexHash, IndexEq> index_{16, IndexHash{this}, IndexEq{this}};

public:
    Model() = default;
    Model(const Model& o) { *this = o; }
    Model& operator=(const Model& o) {
        if (this == &o) return *this;
        amas_ = o.amas_;
        width_ = o.width_;
        undeadlocked_ = o.undeadlocked_;
        reduced_ = o.reduced_;
        arena_ = o.arena_;
        edges_ = o.edges_;
        edge_events_ = o.edge_events_;
        full_enabled_ = o.full_enabled_;
        epsilon_ = o.epsilon_;
        views_ = o.views_;
        view_keys_ = o.view_keys_;
        view_index_ = o.view_index_;
        initial_ = o.initial_;
        seeds_ = o.seeds_;
        index_ = decltype(index_)(16, IndexHash{this}, IndexEq{this});
        for (StateId s = 0; s < num_states(); ++s) index_.insert(Entry{s});
        return *this;
    }
    Model(Model&& o) noexcept { *this = std::move(o); }
    Model& operator=(Model&& o) noexcept {
        if (this == &o) return *this;
        amas_ = std::move(o.amas_);
        width_ = o.width_;
        undeadlocked_ = o.undeadlocked_;
        reduced_ = o.reduced_;
        arena_ = std::move(o.arena_);
        edges_ = std::move(o.edges_);
        edge_events_ = std::move(o.edge_events_);
        full_enabled_ = std::move(o.full_enabled_);
        epsilon_ = std::move(o.epsilon_);
        views_ = std::move(o.views_);
        view_keys_ = std::move(o.view_keys_);
        view_index_ = std::move(o.view_index_);
        initial_ = std::move(o.initial_);
        seeds_ = std::move(o.seeds_);
        index_ = decltype(index_)(16, IndexHash{this}, IndexEq{this});
        index_.reserve(num_states());
        for (StateId s = 0; s < num_states(); ++s) index_.insert(Entry{s});
        return *this;
    }
};

// ── Builder ─────────────────────────────────────────────────────────────────

/// Incremental construction of a Model; used by the full builder, the
/// reducing DFS and the JSON loader.
class ModelBuilder {
public:
    ModelBuilder(std::shared_ptr<const Amas> amas, bool undeadlocked, bool reduced) : gen_(*amas) {
        m_.amas_ = std::move(amas);
        m_.width_ = m_.amas_->num_agents() + m_.amas_->num_vars();
        m_.undeadlocked_ = undeadlocked;
        m_.reduced_ = reduced;
        m_.view_keys_.resize(m_.num_agents());
        m_.view_index_.resize(m_.num_agents());
    }

    const SuccessorGenerator& generator() const { return gen_; }
    const Model& model() const { return m_; }

    /// Intern a state; returns (id, inserted).
    std::pair<StateId, bool> intern(std::span<const Value> g) {
        if (auto f = m_.find(g)) return {*f, false};
        auto id = static_cast<StateId>(m_.num_states());
        m_.arena_.insert(m_.arena_.end(), g.begin(), g.end());
        m_.edges_.emplace_back();
        m_.edge_events_.emplace_back();
        if (m_.reduced_) m_.full_enabled_.emplace_back();
        m_.epsilon_.push_back(0);
        const auto& amas = *m_.amas_;
        for (AgentId i = 0; i < amas.num_agents(); ++i) {
            std::vector<Value> key{g[i]};
            for (auto v : amas.agents[i].own_vars) key.push_back(g[amas.num_agents() + v]);
            auto [it, fresh] = m_.view_index_[i].try_emplace(key, static_cast<ViewId>(m_.view_keys_[i].size()));
            if (fresh) m_.view_keys_[i].push_back(std::move(key));
            m_.views_.push_back(it->second);
        }
        m_.index_.insert(Model::Entry{id});
        return {id, true};
    }

    void add_edge(StateId s, EventId e, StateId t) {
        m_.edges_[s].push_back({e, t});
        if (e != kEpsilon) m_.edge_events_[s].push_back(e);
    }
    void set_epsilon(StateId s) {
        if (!m_.epsilon_[s]) {
            m_.epsilon_[s] = 1;
            m_.edges_[s].push_back({kEpsilon, s});
        }
    }
    void set_full_enabled(StateId s, std::vector<EventId> ev) { m_.full_enabled_[s] = std::move(ev); }
    void add_initial(StateId s) { m_.initial_.push_back(s); }
    void add_seed(StateId s) { m_.seeds_.push_back(s); }

    Model finish() { return std::move(m_); }

private:
    Model m_;
    SuccessorGenerator gen_;
};

// ── Construction ────────────────────────────────────────────────────────────

namespace detail {

inline Model build_bfs(std::shared_ptr<const Amas> amas, const std::vector<std::vector<Value>>& init,
                       const BuildOptions& opts) {
    if (init.empty()) throw ModelError("no initial states");
    ModelBuilder b(amas, opts.undeadlocked, false);
    const auto& gen = b.generator();
    std::deque<StateId> queue;
    for (const auto& g : init) {
        if (g.size() != gen.width()) throw ModelError("initial state has wrong width");
        for (AgentId i = 0; i < amas->num_agents(); ++i)
            if (g[i] < 0 || static_cast<std::size_t>(g[i]) >= amas->agents[i].states.size())
                throw ModelError("initial state names an invalid local state of " + amas->agents[i].name);
        auto [id, fresh] = b.intern(g);
        if (std::find(b.model().initial().begin(), b.model().initial().end(), id) == b.model().initial().end()) {
            b.add_initial(id);
            b.add_seed(id);
        }
        if (fresh) queue.push_back(id);
    }
    std::size_t processed = 0;
    while (!queue.empty()) {
        StateId s = queue.front();
        queue.pop_front();
        if (opts.should_stop && (++processed & 1023) == 0 && opts.should_stop())
            throw LimitExceeded("model construction interrupted (timeout)");
        std::vector<Value> g(b.model().raw(s).begin(), b.model().raw(s).end());
        auto succ = gen.successors(g);
        std::vector<EventId> events;
        for (auto& sc : succ) {
            auto [t, fresh] = b.intern(sc.state);
            if (fresh) {
                if (b.model().num_states() > opts.max_states)
                    throw LimitExceeded("state limit of " + std::to_string(opts.max_states) + " exceeded");
                queue.push_back(t);
            }
            b.add_edge(s, sc.event, t);
            events.push_back(sc.event);
        }
        if (opts.undeadlocked && gen.has_deadlocking_selection(g, events)) b.set_epsilon(s);
    }
    return b.finish();
}

}  // namespace detail

inline std::vector<Value> default_initial_state(const Amas& amas) {
    return SuccessorGenerator(amas).initial_state();
}

/// IIS(S, I): all states reachable from I, without epsilon loops.
inline Model build_iis(std::shared_ptr<const Amas> amas, const std::vector<std::vector<Value>>& init,
                       BuildOptions opts = {}) {
    opts.undeadlocked = false;
    return detail::build_bfs(std::move(amas), init, opts);
}

/// IIS^eps(S, I): as build_iis plus epsilon self-loops where some choice selection deadlocks.
inline Model build_undeadlocked(std::shared_ptr<const Amas> amas, const std::vector<std::vector<Value>>& init,
                                BuildOptions opts = {}) {
    opts.undeadlocked = true;
    return detail::build_bfs(std::move(amas), init, opts);
}

inline Model build_undeadlocked(std::shared_ptr<const Amas> amas, BuildOptions opts = {}) {
    auto init = default_initial_state(*amas);
    return build_undeadlocked(std::move(amas), {init}, std::move(opts));
}

}  // namespace amasv
