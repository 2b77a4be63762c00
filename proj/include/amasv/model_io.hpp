// ============================================================================
// amasv/model_io.hpp: JSON dump and reload of explicit models
// ============================================================================
//
// A dump carries the DSL text of its AMAS, so a reloaded model has the same
// agents, repertoires and variables; states and edges are taken from the dump
// verbatim and never regenerated.
// ============================================================================
#pragma once

#include "amasv/model.hpp"

#include <json.hpp>

namespace amasv {

inline constexpr const char* kModelFormat = "amasv-model";
inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const Model& m) {
    using nlohmann::json;
    const Amas& a = m.amas();
    json out;
    out["format"] = kModelFormat;
    out["version"] = kModelFormatVersion;
    out["spec"] = a.source_text;
    out["undeadlocked"] = m.undeadlocked();
    out["reduced"] = m.reduced();
    json agents = json::array();
    for (const auto& ag : a.agents) agents.push_back(ag.name);
    out["agents"] = std::move(agents);
    out["variables"] = a.var_names;
    json states = json::array();
    for (StateId s = 0; s < m.num_states(); ++s) {
        json locals = json::array();
        for (AgentId i = 0; i < a.num_agents(); ++i) locals.push_back(a.agents[i].states[m.local(s, i)]);
        json store = json::array();
        for (VarId v = 0; v < a.num_vars(); ++v) {
            Value x = m.value(s, v);
            if (x == kUnset) store.push_back(nullptr);
            else if (a.var_is_bool[v]) store.push_back(x != 0);
            else store.push_back(x);
        }
        json st{{"locals", std::move(locals)}, {"store", std::move(store)}};
        if (m.reduced()) {
            json en = json::array();
            for (auto e : m.real_enabled(s)) en.push_back(a.event_names[e]);
            st["enabled"] = std::move(en);
        }
        states.push_back(std::move(st));
    }
    out["states"] = std::move(states);
    out["initial"] = m.initial();
    out["seeds"] = m.seeds();
    json trans = json::array();
    json eps = json::array();
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& e : m.successors(s))
            if (e.event != kEpsilon) trans.push_back(json::array({s, a.event_names[e.event], e.target}));
        if (m.has_epsilon(s)) eps.push_back(s);
    }
    out["transitions"] = std::move(trans);
    out["epsilon_states"] = std::move(eps);
    return out;
}

inline Model model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw ModelError("not an amasv model dump");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw ModelError("unsupported model dump version " + std::to_string(j.at("version").get<int>()));
        auto inst = load_amas(j.at("spec").get<std::string>(), {}, "<dump>");
        auto amas = std::make_shared<const Amas>(std::move(inst.amas));
        const Amas& a = *amas;
        if (j.at("agents").size() != a.num_agents() || j.at("variables").size() != a.num_vars())
            throw ModelError("model dump does not match its embedded system");
        bool reduced = j.at("reduced").get<bool>();
        ModelBuilder b(amas, j.at("undeadlocked").get<bool>(), reduced);
        auto event_id = [&](const std::string& name) {
            auto e = a.find_event(name);
            if (!e) throw ModelError("model dump names unknown event '" + name + "'");
            return *e;
        };
        const auto& states = j.at("states");
        for (const auto& st : states) {
            std::vector<Value> g(a.num_agents() + a.num_vars(), kUnset);
            const auto& locals = st.at("locals");
            const auto& store = st.at("store");
            if (locals.size() != a.num_agents() || store.size() != a.num_vars())
                throw ModelError("model dump state has the wrong width");
            for (AgentId i = 0; i < a.num_agents(); ++i) {
                const auto& names = a.agents[i].states;
                auto it = std::find(names.begin(), names.end(), locals[i].get<std::string>());
                if (it == names.end()) throw ModelError("model dump names unknown local state");
                g[i] = static_cast<Value>(it - names.begin());
            }
            for (VarId v = 0; v < a.num_vars(); ++v) {
                const auto& x = store[v];
                if (x.is_null()) continue;
                g[a.num_agents() + v] = x.is_boolean() ? (x.get<bool>() ? 1 : 0) : x.get<Value>();
            }
            auto [id, fresh] = b.intern(g);
            if (!fresh) throw ModelError("model dump lists a state twice");
            if (reduced) {
                std::vector<EventId> en;
                for (const auto& e : st.at("enabled")) en.push_back(event_id(e.get<std::string>()));
                std::sort(en.begin(), en.end());
                b.set_full_enabled(id, std::move(en));
            }
        }
        const auto n = static_cast<StateId>(states.size());
        auto check_id = [&](StateId s) {
            if (s >= n) throw ModelError("model dump refers to state " + std::to_string(s) + " out of range");
            return s;
        };
        for (const auto& t : j.at("transitions"))
            b.add_edge(check_id(t.at(0).get<StateId>()), event_id(t.at(1).get<std::string>()),
                       check_id(t.at(2).get<StateId>()));
        for (const auto& s : j.at("epsilon_states")) b.set_epsilon(check_id(s.get<StateId>()));
        for (const auto& s : j.at("initial")) b.add_initial(check_id(s.get<StateId>()));
        for (const auto& s : j.value("seeds", j.at("initial"))) b.add_seed(check_id(s.get<StateId>()));
        return b.finish();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model dump: ") + e.what());
    }
}

}  // namespace amasv
