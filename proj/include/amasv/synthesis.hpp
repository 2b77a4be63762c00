// ============================================================================
// amasv/synthesis.hpp: strategy synthesis by depth-first search
// ============================================================================
//
// The search walks the outcome graph of a partial strategy. Whenever it
// reaches a state where a coalition member's view is still unbound, it opens
// a choice point and binds the view; every later state with that view reuses
// the binding. Failures (a violating state, a cycle that never reaches the
// target, a dead end) depend only on bindings made so far, so backtracking to
// the most recent choice point is complete over positional uniform strategies.
//
// The parallel variant splits the strategy space into prefixes: bindings made
// along deterministic runs from the first root, stopping at branching actions.
// ============================================================================
#pragma once

#include "amasv/logic.hpp"

#include <atomic>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

namespace amasv {

enum class SynthesisStatus { Found, None, Budget };

inline const char* status_name(SynthesisStatus s) {
    return s == SynthesisStatus::Found ? "true" : s == SynthesisStatus::None ? "false" : "budget";
}

struct SynthesisOptions {
    Variant variant = Variant::Std;
    std::uint64_t max_nodes = 100'000'000;
    std::function<bool()> should_stop;
    /// Cooperative cancellation; polled at every node.
    const std::atomic<bool>* cancel = nullptr;
    /// Incremented once per expanded node when set (instrumentation).
    std::atomic<std::uint64_t>* node_counter = nullptr;
};

struct SynthesisResult {
    SynthesisStatus status = SynthesisStatus::None;
    std::optional<JointStrategy> witness;
    std::uint64_t nodes = 0;
    bool cancelled = false;
};

namespace detail {

class DfsSearch {
public:
    DfsSearch(const Model& m, const Goal& goal, const std::vector<StateId>& roots, const SynthesisOptions& opts,
              JointStrategy initial)
        : m_(m), goal_(goal), roots_(roots), opts_(opts), sigma_(std::move(initial)), color_(m.num_states(), 0) {}

    SynthesisResult run() {
        SynthesisResult res;
        bool failed = false;
        try {
            while (true) {
                if (failed) {
                    if (!backtrack()) {
                        res.status = SynthesisStatus::None;
                        break;
                    }
                    failed = false;
                    continue;
                }
                if (frames_.empty()) {
                    if (root_idx_ == roots_.size()) {
                        res.status = SynthesisStatus::Found;
                        res.witness = sigma_;
                        break;
                    }
                    failed = !visit(roots_[root_idx_++]);
                    continue;
                }
                auto& top = frames_.back();
                if (top.next < top.end) {
                    StateId t = arena_[top.next++];
                    failed = !visit(t);
                } else {
                    set_color(top.s, kBlack);
                    frames_.pop_back();
                }
            }
        } catch (const Stop& s) {
            res.status = SynthesisStatus::Budget;
            res.cancelled = s.cancelled;
        }
        res.nodes = nodes_;
        return res;
    }

private:
    static constexpr std::uint8_t kWhite = 0, kGray = 1, kBlack = 2;
    struct Stop {
        bool cancelled;
    };
    struct Frame {
        StateId s;
        std::uint32_t begin, end, next;
    };
    struct TrailEntry {
        bool is_color;
        std::uint32_t a, b, old;
    };
    struct ChoicePoint {
        std::size_t trail, arena, root_idx;
        std::vector<Frame> frames;
        StateId t;
        std::uint32_t member;
        ViewId view;
        std::uint32_t alt, arity;
    };

    const Model& m_;
    const Goal& goal_;
    const std::vector<StateId>& roots_;
    const SynthesisOptions& opts_;
    JointStrategy sigma_;
    std::vector<std::uint8_t> color_;
    std::vector<TrailEntry> trail_;
    std::vector<StateId> arena_;
    std::vector<Frame> frames_;
    std::size_t root_idx_ = 0;
    std::vector<ChoicePoint> cps_;
    std::uint64_t nodes_ = 0;

    void set_color(StateId s, std::uint8_t c) {
        trail_.push_back({true, s, 0, color_[s]});
        color_[s] = c;
    }
    void bind(std::uint32_t member, ViewId v, std::uint32_t c) {
        trail_.push_back({false, member, v, sigma_.choice[member][v]});
        sigma_.choice[member][v] = c;
    }
    void undo_to(std::size_t size) {
        while (trail_.size() > size) {
            const auto& e = trail_.back();
            if (e.is_color) color_[e.a] = static_cast<std::uint8_t>(e.old);
            else sigma_.choice[e.a][e.b] = e.old;
            trail_.pop_back();
        }
    }

    void tick() {
        ++nodes_;
        if (opts_.node_counter) opts_.node_counter->fetch_add(1, std::memory_order_relaxed);
        if (opts_.cancel && opts_.cancel->load(std::memory_order_relaxed)) throw Stop{true};
        if (nodes_ > opts_.max_nodes) throw Stop{false};
        if (opts_.should_stop && (nodes_ & 1023) == 1 && opts_.should_stop()) throw Stop{false};
    }

    /// Enter state t. Returns false on an immediate failure.
    bool visit(StateId t) {
        tick();
        switch (goal_.path) {
            case Formula::Path::G:
                if (!goal_.p[t]) return false;
                if (color_[t] != kWhite) return true;
                break;
            case Formula::Path::F:
                if (goal_.p[t]) return true;
                if (color_[t] == kGray) return false;
                if (color_[t] == kBlack) return true;
                break;
            case Formula::Path::U:
                if (goal_.q[t]) return true;
                if (!goal_.p[t]) return false;
                if (color_[t] == kGray) return false;
                if (color_[t] == kBlack) return true;
                break;
        }
        for (std::uint32_t k = 0; k < sigma_.agents.size(); ++k) {
            const auto& rep = m_.repertoire(t, sigma_.agents[k]);
            if (rep.empty()) continue;
            ViewId v = m_.view(t, sigma_.agents[k]);
            if (sigma_.choice[k][v] != JointStrategy::kUnbound) continue;
            cps_.push_back({trail_.size(), arena_.size(), root_idx_, frames_, t, k, v, 0,
                            static_cast<std::uint32_t>(rep.size())});
            bind(k, v, 0);
        }
        auto keep = outcome_events(m_, t, strategy_choices(m_, sigma_, t), opts_.variant);
        auto begin = static_cast<std::uint32_t>(arena_.size());
        for (const auto& e : m_.successors(t))
            if (std::find(keep.begin(), keep.end(), e.event) != keep.end()) arena_.push_back(e.target);
        std::sort(arena_.begin() + begin, arena_.end());
        arena_.erase(std::unique(arena_.begin() + begin, arena_.end()), arena_.end());
        auto end = static_cast<std::uint32_t>(arena_.size());
        if (begin == end) return false;
        set_color(t, kGray);
        frames_.push_back({t, begin, end, begin});
        return true;
    }

    bool backtrack() {
        while (!cps_.empty()) {
            auto& cp = cps_.back();
            if (++cp.alt >= cp.arity) {
                cps_.pop_back();
                continue;
            }
            undo_to(cp.trail);
            arena_.resize(cp.arena);
            frames_ = cp.frames;
            root_idx_ = cp.root_idx;
            StateId t = cp.t;
            bind(cp.member, cp.view, cp.alt);
            if (visit(t)) return true;
        }
        return false;
    }
};

}  // namespace detail

/// Sequential synthesis. `prebound` fixes some views in advance.
inline SynthesisResult dfs_synthesize(const Model& m, const Goal& goal, const std::vector<StateId>& roots,
                                      const SynthesisOptions& opts = {}, const JointStrategy* prebound = nullptr) {
    JointStrategy init = prebound ? *prebound : JointStrategy::empty_for(m, goal.agents);
    return detail::DfsSearch(m, goal, roots, opts, std::move(init)).run();
}

// ── Prefixes ────────────────────────────────────────────────────────────────

struct StrategyPrefix {
    /// (state, coalition action) pairs from the first root.
    std::vector<std::pair<StateId, ChoiceVector>> steps;
    StateId terminal = kNoState;
    /// Views fixed by the steps.
    JointStrategy bindings;
};

namespace detail {

inline std::vector<StateId> outcome_targets(const Model& m, StateId s, const ChoiceVector& ec, Variant variant) {
    auto keep = outcome_events(m, s, ec, variant);
    std::vector<StateId> out;
    for (const auto& e : m.successors(s))
        if (std::find(keep.begin(), keep.end(), e.event) != keep.end()) out.push_back(e.target);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// Breadth-first prefix expansion. A prefix whose terminal state has no
/// unbound coalition view is final; an action with exactly one successor
/// keeps its prefix pending, any other action makes it final. Expansion stops
/// when the pending queue is empty or results plus pending reach `limit`.
inline std::vector<StrategyPrefix> generate_prefixes(const Model& m, const std::vector<AgentId>& agents,
                                                     const std::vector<StateId>& roots, std::size_t limit,
                                                     Variant variant = Variant::Std) {
    if (limit == 0) throw ModelError("prefix limit must be positive");
    std::vector<StrategyPrefix> result;
    std::deque<StrategyPrefix> pending;
    StrategyPrefix start;
    start.terminal = roots.at(0);
    start.bindings = JointStrategy::empty_for(m, agents);
    pending.push_back(std::move(start));
    while (!pending.empty() && result.size() + pending.size() < limit) {
        StrategyPrefix p = std::move(pending.front());
        pending.pop_front();
        StateId s = p.terminal;
        // Unbound acting members at s; bound ones are fixed by the prefix.
        ChoiceVector ec;
        std::vector<std::size_t> free;
        for (std::size_t k = 0; k < agents.size(); ++k) {
            if (m.repertoire(s, agents[k]).empty()) continue;
            auto c = p.bindings.choice[k][m.view(s, agents[k])];
            if (c == JointStrategy::kUnbound) free.push_back(ec.agents.size());
            ec.agents.push_back(agents[k]);
            ec.choice.push_back(c == JointStrategy::kUnbound ? 0 : c);
        }
        if (free.empty()) {
            result.push_back(std::move(p));
            continue;
        }
        bool more = true;
        while (more) {
            StrategyPrefix child = p;
            for (auto f : free) {
                std::size_t k = static_cast<std::size_t>(
                    std::find(agents.begin(), agents.end(), ec.agents[f]) - agents.begin());
                child.bindings.choice[k][m.view(s, agents[k])] = ec.choice[f];
            }
            child.steps.emplace_back(s, ec);
            auto targets = detail::outcome_targets(m, s, ec, variant);
            if (targets.size() == 1) {
                child.terminal = targets[0];
                pending.push_back(std::move(child));
            } else {
                result.push_back(std::move(child));
            }
            more = false;
            for (std::size_t j = free.size(); j-- > 0;) {
                auto f = free[j];
                if (++ec.choice[f] < m.repertoire(s, ec.agents[f]).size()) {
                    more = true;
                    break;
                }
                ec.choice[f] = 0;
            }
        }
    }
    for (auto& p : pending) result.push_back(std::move(p));
    return result;
}

// ── Parallel search ─────────────────────────────────────────────────────────

struct ParallelResult : SynthesisResult {
    std::size_t prefixes = 0;
    /// Nodes expanded by all workers after the winning worker raised the cancel flag.
    std::uint64_t nodes_after_cancel = 0;
};

inline ParallelResult parallel_synthesize(const Model& m, const Goal& goal, const std::vector<StateId>& roots,
                                          unsigned workers, const SynthesisOptions& opts = {}) {
    if (workers == 0) throw ModelError("worker count must be positive");
    auto prefixes = generate_prefixes(m, goal.agents, roots, workers, opts.variant);
    ParallelResult out;
    out.prefixes = prefixes.size();
    std::atomic<std::size_t> next{0};
    std::atomic<bool> cancel{false};
    std::atomic<std::uint64_t> nodes{0};
    std::uint64_t nodes_at_cancel = 0;
    std::atomic<bool> budget{false};
    std::mutex mu;
    std::optional<JointStrategy> witness;
    std::exception_ptr error;

    auto worker = [&]() {
        SynthesisOptions local = opts;
        local.cancel = &cancel;
        local.node_counter = &nodes;
        try {
            while (!cancel.load()) {
                std::size_t i = next.fetch_add(1);
                if (i >= prefixes.size()) return;
                auto r = dfs_synthesize(m, goal, roots, local, &prefixes[i].bindings);
                if (r.status == SynthesisStatus::Found) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!witness) {
                        witness = std::move(r.witness);
                        nodes_at_cancel = nodes.load();
                        cancel = true;
                    }
                    return;
                }
                if (r.status == SynthesisStatus::Budget && !r.cancelled) budget = true;
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!error) error = std::current_exception();
            cancel = true;
        }
    };

    unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, prefixes.size()));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    out.nodes = nodes.load();
    if (witness) {
        out.status = SynthesisStatus::Found;
        out.witness = std::move(witness);
        out.nodes_after_cancel = out.nodes - nodes_at_cancel;
    } else {
        out.status = budget ? SynthesisStatus::Budget : SynthesisStatus::None;
    }
    return out;
}

// ── Formula-level drivers ───────────────────────────────────────────────────

struct EngineResult {
    SynthesisStatus status = SynthesisStatus::None;
    std::optional<JointStrategy> witness;
    std::uint64_t nodes = 0;
};

/// Verdict of f over the initial states, deciding each coalition subformula
/// with `solve(goal, roots)`. Budget exhaustion anywhere yields Budget.
template <typename Solve>
EngineResult verify_with(const Model& m, const Formula& f, Mode mode, Solve&& solve) {
    EngineResult out;
    bool budget = false;
    struct BudgetHit {};
    bool all = true;
    for (auto init : m.initial()) {
        try {
            bool v = eval_at(m, f, init, [&](const Formula& c, StateId at) {
                Goal goal = make_goal(m, c);
                SynthesisResult r = solve(goal, roots_for(m, goal.agents, at, mode));
                out.nodes += r.nodes;
                if (r.status == SynthesisStatus::Budget) throw BudgetHit{};
                if (r.status == SynthesisStatus::Found && &c == &f && !out.witness) out.witness = r.witness;
                return r.status == SynthesisStatus::Found;
            });
            if (!v) {
                all = false;
                break;
            }
        } catch (const BudgetHit&) {
            budget = true;
            break;
        }
    }
    if (budget) out.status = SynthesisStatus::Budget;
    else out.status = all ? SynthesisStatus::Found : SynthesisStatus::None;
    if (out.status != SynthesisStatus::Found) out.witness.reset();
    return out;
}

inline EngineResult verify_dfs(const Model& m, const Formula& f, Mode mode, const SynthesisOptions& opts = {}) {
    return verify_with(m, f, mode, [&](const Goal& g, const std::vector<StateId>& roots) {
        return dfs_synthesize(m, g, roots, opts);
    });
}

inline EngineResult verify_parallel(const Model& m, const Formula& f, Mode mode, unsigned workers,
                                    const SynthesisOptions& opts = {}) {
    return verify_with(m, f, mode, [&](const Goal& g, const std::vector<StateId>& roots) -> SynthesisResult {
        return parallel_synthesize(m, g, roots, workers, opts);
    });
}

}  // namespace amasv
