// Random AMAS instances and formulas for property tests.
//
// Instances are emitted as DSL text so every generated system also exercises
// the parser. Each variable is written only by its owner, so shared events
// never produce conflicting writes; each (agent, event, source) has at most one
// transition, so successors are well defined.
#pragma once

#include "amasv/amas.hpp"
#include "amasv/formula.hpp"

#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace amasv_testing {
using namespace amasv;

struct RandomLimits {
    int max_agents = 4;
    int max_locals = 5;
    int max_vars = 3;
};

struct RandomVar {
    std::string name;  // instance-qualified, e.g. Q1_v0
    int owner = 0;
    bool is_bool = false;
};

struct RandomInstance {
    std::string text;
    std::vector<std::string> agents;  // instance names
    std::vector<RandomVar> vars;
};

namespace detail {

inline int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

inline std::string literal_for(std::mt19937_64& rng, const RandomVar& v) {
    if (v.is_bool) return coin(rng, 0.5) ? "true" : "false";
    return std::to_string(pick(rng, 0, 2));
}

}  // namespace detail

inline RandomInstance random_amas(std::mt19937_64& rng, const RandomLimits& lim = {}) {
    using detail::coin;
    using detail::pick;
    static const char* kTemplates[] = {"P", "Q", "R", "S", "T", "U"};
    RandomInstance out;
    const int na = pick(rng, 1, lim.max_agents);
    for (int i = 0; i < na; ++i) out.agents.push_back(std::string(kTemplates[i]) + "1");
    const int nv = pick(rng, 1, lim.max_vars);
    for (int k = 0; k < nv; ++k) {
        int owner = pick(rng, 0, na - 1);
        out.vars.push_back({out.agents[owner] + "_v" + std::to_string(k), owner, coin(rng, 0.3)});
    }
    std::vector<int> locals(na);
    for (auto& l : locals) l = pick(rng, 1, lim.max_locals);

    // events per agent: private ones plus memberships in shared ones
    std::vector<std::vector<std::pair<std::string, bool>>> events(na);
    for (int i = 0; i < na; ++i) {
        int np = pick(rng, 1, 3);
        for (int k = 0; k < np; ++k) events[i].push_back({"e" + std::to_string(k) + "_aID", false});
    }
    if (na >= 2) {
        int ns = pick(rng, 0, 3);
        for (int k = 0; k < ns; ++k) {
            std::vector<int> members;
            for (int i = 0; i < na; ++i) members.push_back(i);
            std::shuffle(members.begin(), members.end(), rng);
            members.resize(static_cast<std::size_t>(pick(rng, 2, na)));
            for (int i : members) events[i].push_back({"sh" + std::to_string(k), true});
        }
    }

    std::ostringstream os;
    os << "% random instance\n";
    for (int i = 0; i < na; ++i) {
        os << "Agent " << kTemplates[i] << "[1]:\ninit s0\n";
        for (const auto& [ev, shared] : events[i]) {
            int count = pick(rng, 1, std::min(2, locals[i]));
            std::vector<int> sources;
            for (int l = 0; l < locals[i]; ++l) sources.push_back(l);
            std::shuffle(sources.begin(), sources.end(), rng);
            sources.resize(static_cast<std::size_t>(count));
            for (int src : sources) {
                os << (shared ? "shared " : "") << ev << ": s" << src;
                if (coin(rng, 0.3)) {
                    const auto& g = out.vars[static_cast<std::size_t>(pick(rng, 0, nv - 1))];
                    std::string atom = g.is_bool ? g.name : g.name + "==" + std::to_string(pick(rng, 0, 2));
                    os << " -[" << (coin(rng, 0.3) ? "!(" + atom + ")" : atom) << "]> ";
                } else {
                    os << " -> ";
                }
                os << "s" << pick(rng, 0, locals[i] - 1);
                std::vector<std::string> ups;
                for (const auto& v : out.vars) {
                    if (v.owner != i || !coin(rng, 0.45)) continue;
                    std::string local_name = "aID" + v.name.substr(out.agents[i].size());
                    if (!v.is_bool && coin(rng, 0.3)) {
                        std::vector<const RandomVar*> ints;
                        for (const auto& w : out.vars)
                            if (!w.is_bool) ints.push_back(&w);
                        const auto* src_var = ints[static_cast<std::size_t>(pick(rng, 0, int(ints.size()) - 1))];
                        ups.push_back(local_name + "=?" + src_var->name);
                    } else {
                        ups.push_back(local_name + "=" + detail::literal_for(rng, v));
                    }
                }
                if (!ups.empty()) {
                    os << " [";
                    for (std::size_t k = 0; k < ups.size(); ++k) os << (k ? ", " : "") << ups[k];
                    os << "]";
                }
                os << "\n";
            }
        }
        if (events[i].size() >= 2 && coin(rng, 0.5)) {
            auto evs = events[i];
            std::shuffle(evs.begin(), evs.end(), rng);
            evs.resize(static_cast<std::size_t>(pick(rng, 2, int(evs.size()))));
            os << "PROTOCOL: [[";
            for (std::size_t k = 0; k < evs.size(); ++k) os << (k ? ", " : "") << evs[k].first;
            os << "]]\n";
        }
        os << "\n";
    }
    std::vector<std::string> persistent;
    for (const auto& v : out.vars)
        if (coin(rng, 0.6)) persistent.push_back(v.name);
    if (!persistent.empty()) {
        os << "PERSISTENT: [";
        for (std::size_t k = 0; k < persistent.size(); ++k) os << (k ? ", " : "") << persistent[k];
        os << "]\n";
    }
    out.text = os.str();
    return out;
}

// ── Formula pool ──

enum class PoolShape { F, G, U, GK };

inline std::string random_atom(std::mt19937_64& rng, const RandomInstance& inst) {
    const auto& v = inst.vars[static_cast<std::size_t>(detail::pick(rng, 0, int(inst.vars.size()) - 1))];
    if (v.is_bool) return detail::coin(rng, 0.5) ? v.name : v.name + "=" + detail::literal_for(rng, v);
    return v.name + "=" + std::to_string(detail::pick(rng, 0, 2));
}

inline std::vector<std::string> random_coalition(std::mt19937_64& rng, const RandomInstance& inst) {
    std::vector<std::string> a;
    for (const auto& n : inst.agents)
        if (detail::coin(rng, 0.5)) a.push_back(n);
    if (a.empty()) a.push_back(inst.agents[static_cast<std::size_t>(detail::pick(rng, 0, int(inst.agents.size()) - 1))]);
    return a;
}

/// One formula of the requested shape: <<A>>F p, <<A>>G p, <<A>>(p U q) or
/// <<A>>G(p -> K_j q) with j in A.
inline std::string random_formula(std::mt19937_64& rng, const RandomInstance& inst, PoolShape shape) {
    auto a = random_coalition(rng, inst);
    std::string co = "<<";
    for (std::size_t k = 0; k < a.size(); ++k) co += (k ? "," : "") + a[k];
    co += ">>";
    auto p = random_atom(rng, inst);
    auto q = random_atom(rng, inst);
    switch (shape) {
        case PoolShape::F: return co + " F " + p;
        case PoolShape::G: return co + " G " + p;
        case PoolShape::U: return co + " (" + p + " U " + q + ")";
        case PoolShape::GK: {
            const auto& j = a[static_cast<std::size_t>(detail::pick(rng, 0, int(a.size()) - 1))];
            return co + " G (" + p + " -> K_" + j + " " + q + ")";
        }
    }
    return co + " F " + p;
}

}  // namespace amasv_testing
