#include "amasv/bench.hpp"
#include "amasv/model.hpp"
#include "amasv/model_io.hpp"
#include "amasv/por.hpp"
#include "support/oracles.hpp"
#include "support/random_amas.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

using namespace amasv;
using namespace amasv_testing;

namespace {

std::shared_ptr<const Amas> fixture_amas(const std::string& name) {
    std::ifstream in(std::string(AMASV_FIXTURES) + "/" + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::make_shared<const Amas>(load_amas(ss.str(), {}, name).amas);
}

std::shared_ptr<const Amas> asv(int n, int k) { return std::make_shared<const Amas>(gen_asv({n, k})); }

std::vector<std::string> names(const Amas& a, const std::vector<EventId>& evs) {
    std::vector<std::string> out;
    for (auto e : evs) out.push_back(a.event_name(e));
    std::sort(out.begin(), out.end());
    return out;
}

StateId find_state(const Model& m, const std::vector<std::string>& locals) {
    for (StateId s = 0; s < m.num_states(); ++s) {
        bool ok = true;
        for (AgentId i = 0; i < m.num_agents(); ++i)
            if (m.amas().agents[i].states[m.local(s, i)] != locals[i]) ok = false;
        if (ok) return s;
    }
    throw std::runtime_error("state not found");
}

}  // namespace

// ── ASV against a hand-coded product ──

TEST(ModelAsv, MatchesHandCodedProduct) {
    // Voter and coercer automata of the two-candidate, one-voter system,
    // written out by hand; punished is unset/true/false.
    using G = std::tuple<std::string, std::string, int>;  // voter, coercer, punished (-1 unset, 0, 1)
    std::set<G> seen{{"q0", "q0", -1}};
    std::vector<G> todo{{"q0", "q0", -1}};
    std::set<std::tuple<G, std::string, G>> edges;
    while (!todo.empty()) {
        auto g = todo.back();
        todo.pop_back();
        auto [v, c, p] = g;
        std::vector<std::pair<std::string, G>> next;
        if (v == "q0") {
            next.push_back({"vote_Voter1_1", {"q1", c, p}});
            next.push_back({"vote_Voter1_2", {"q2", c, p}});
        }
        if ((v == "q1" || v == "q2") && c == "q0") {
            std::string j = v.substr(1);
            next.push_back({"gv_Voter1_" + j, {v + "g", j == "1" ? "qg" : "qn", p}});
            next.push_back({"ng_Voter1", {v + "n", "qn", p}});
        }
        if (v.size() == 3 && c != "q0") {
            next.push_back({"pun_Voter1", {"q0", "q0", 1}});
            next.push_back({"npun_Voter1", {"q0", "q0", 0}});
        }
        for (auto& [e, t] : next) {
            edges.insert({g, e, t});
            if (seen.insert(t).second) todo.push_back(t);
        }
    }
    auto m = build_iis(asv(1, 2), {default_initial_state(*asv(1, 2))});
    EXPECT_EQ(m.num_states(), seen.size());
    EXPECT_EQ(m.num_transitions(), edges.size());
    EXPECT_EQ(m.num_states(), 21u);
    EXPECT_EQ(m.num_transitions(), 42u);
    const Amas& a = m.amas();
    auto pv = *a.find_var("Coercer1_punished_1");
    for (StateId s = 0; s < m.num_states(); ++s) {
        Value x = m.value(s, pv);
        G g{a.agents[0].states[m.local(s, 0)], a.agents[1].states[m.local(s, 1)], x == kUnset ? -1 : int(x)};
        EXPECT_TRUE(seen.count(g));
        for (const auto& e : m.successors(s)) {
            Value y = m.value(e.target, pv);
            G t{a.agents[0].states[m.local(e.target, 0)], a.agents[1].states[m.local(e.target, 1)],
                y == kUnset ? -1 : int(y)};
            EXPECT_TRUE(edges.count({g, a.event_name(e.event), t})) << a.event_name(e.event);
        }
    }
}

TEST(ModelAsv, UndeadlockedHasNoEpsilon) {
    auto m = build_undeadlocked(asv(1, 2));
    EXPECT_EQ(m.num_epsilon_states(), 0u);
    EXPECT_EQ(m.num_states(), 21u);
}

TEST(ModelAsv, EnabledAtInitialState) {
    auto m = build_undeadlocked(asv(1, 2));
    EXPECT_EQ(names(m.amas(), m.enabled(m.initial()[0])),
              (std::vector<std::string>{"vote_Voter1_1", "vote_Voter1_2"}));
}

TEST(ModelAsv, EnabledByChoices) {
    auto m = build_undeadlocked(asv(1, 2));
    const Amas& a = m.amas();
    StateId s = find_state(m, {"q1", "q0"});
    AgentId voter = *a.find_agent("Voter1"), coercer = *a.find_agent("Coercer1");
    const auto& vrep = m.repertoire(s, voter);
    std::uint32_t give = 0;
    for (std::uint32_t k = 0; k < vrep.size(); ++k)
        if (vrep[k] == Choice{*a.find_event("gv_Voter1_1")}) give = k;
    ChoiceVector ec{{voter, coercer}, {give, 0}};
    EXPECT_EQ(names(a, m.enabled_by_choices(s, ec)), std::vector<std::string>{"gv_Voter1_1"});
    EXPECT_EQ(m.enabled_by_choices(s, {}), m.enabled(s));
    EXPECT_THROW(m.enabled_by_choices(s, {{voter}, {7}}), ModelError);
}

TEST(ModelAsv, VoterCopiesAreIndependent) {
    auto m = build_undeadlocked(asv(2, 2));
    const Amas& a = m.amas();
    for (const char* v : {"Voter1", "Voter2"}) {
        auto i = *a.find_agent(v);
        for (const auto& t : a.agents[i].transitions)
            for (auto o : a.event_owners[t.event]) {
                const auto& name = a.agents[o].name;
                EXPECT_TRUE(name == v || name == "Coercer1") << a.event_name(t.event);
            }
    }
}

// ── Degenerate systems ──

TEST(ModelBasics, SingleIdleAgent) {
    auto a = fixture_amas("trivial.amas");
    auto m = build_iis(a, {default_initial_state(*a)});
    EXPECT_EQ(m.num_states(), 1u);
    EXPECT_EQ(m.num_transitions(), 0u);
    auto u = build_undeadlocked(a);
    EXPECT_TRUE(u.has_epsilon(0));
    EXPECT_EQ(u.enabled(0), std::vector<EventId>{kEpsilon});
    ASSERT_EQ(u.successors(0).size(), 1u);
    EXPECT_EQ(u.successors(0)[0].target, 0u);
}

TEST(ModelBasics, ChoiceAdmittingNothingLeavesOnlyEpsilon) {
    auto a = std::make_shared<const Amas>(load_amas(R"(
Agent A[1]:
init s
shared go: s -> t
shared alt: s -> u
Agent B[1]:
init s
shared go: s -> t
shared alt: s -> u
)").amas);
    auto m = build_undeadlocked(a);
    StateId s0 = m.initial()[0];
    EXPECT_TRUE(m.has_epsilon(s0));  // A picks go while B picks alt
    AgentId pa = *a->find_agent("A1"), pb = *a->find_agent("B1");
    const auto& ra = m.repertoire(s0, pa);
    const auto& rb = m.repertoire(s0, pb);
    ASSERT_EQ(ra.size(), 2u);
    for (std::uint32_t k = 0; k < rb.size(); ++k) {
        auto en = m.enabled_by_choices(s0, {{pb}, {k}});
        std::vector<EventId> real(en.begin(), en.end());
        std::erase(real, kEpsilon);
        EXPECT_EQ(real, rb[k]);
        for (std::uint32_t j = 0; j < ra.size(); ++j) {
            auto both = m.enabled_by_choices(s0, {{pa, pb}, {j, k}});
            if (ra[j] != rb[k]) {
                EXPECT_EQ(both, std::vector<EventId>{kEpsilon});
            }
        }
    }
}

TEST(ModelBasics, StateLimitAndConflicts) {
    auto a = fixture_amas("selene_v1_c3_r3.amas");
    BuildOptions opts;
    opts.max_states = 100;
    EXPECT_THROW(build_undeadlocked(a, opts), LimitExceeded);
    auto conflict = std::make_shared<const Amas>(load_amas(R"(
Agent A[1]:
init s
shared go: s -> t [x=1]
Agent B[1]:
init s
shared go: s -> t [x=2]
)").amas);
    EXPECT_THROW(build_undeadlocked(conflict), ModelError);
    auto ambiguous = std::make_shared<const Amas>(load_amas(R"(
Agent A[1]:
init s
go: s -> t
go: s -> u
)").amas);
    EXPECT_THROW(build_undeadlocked(ambiguous), ModelError);
}

TEST(ModelBasics, NonPersistentVariablesReset) {
    auto a = fixture_amas("counter.amas");
    auto m = build_undeadlocked(a);
    auto tick = *a->find_var("Counter1_tick");
    auto n = *a->find_var("Counter1_n");
    auto inc0 = *a->find_event("inc0");
    auto stop = *a->find_event("stop");
    bool saw_inc = false, saw_stop = false;
    for (StateId s = 0; s < m.num_states(); ++s)
        for (const auto& e : m.successors(s)) {
            if (e.event == inc0) {
                saw_inc = true;
                EXPECT_EQ(m.value(e.target, tick), 1);
            }
            if (e.event == stop) {
                saw_stop = true;
                EXPECT_EQ(m.value(e.target, tick), kUnset);
                EXPECT_EQ(m.value(e.target, n), m.value(s, n));  // persistent
            }
        }
    EXPECT_TRUE(saw_inc && saw_stop);
}

// ── Random systems against the reference semantics ──

TEST(ModelProperties, RandomSystemsMatchReferenceSemantics) {
    std::mt19937_64 rng(2024);
    std::size_t checked = 0;
    for (int n = 0; n < 200; ++n) {
        auto inst = random_amas(rng);
        auto a = std::make_shared<const Amas>(load_amas(inst.text).amas);
        auto m = build_undeadlocked(a);
        auto ref = oracle_explore(*a, default_initial_state(*a));
        ASSERT_EQ(m.num_states(), ref.edges.size()) << inst.text;
        for (StateId s = 0; s < m.num_states(); ++s) {
            Raw g(m.raw(s).begin(), m.raw(s).end());
            ASSERT_TRUE(ref.edges.count(g));
            std::set<std::pair<EventId, Raw>> got;
            for (const auto& e : m.successors(s)) {
                if (e.event == kEpsilon) {
                    EXPECT_EQ(e.target, s);  // epsilon transitions are self-loops
                    continue;
                }
                got.insert({e.event, Raw(m.raw(e.target).begin(), m.raw(e.target).end())});
            }
            EXPECT_EQ(got, ref.edges.at(g)) << inst.text;
            EXPECT_EQ(m.has_epsilon(s), ref.epsilon.count(g) == 1) << inst.text;
            auto en = oracle_enabled(*a, g);
            auto r = m.real_enabled(s);
            EXPECT_EQ(std::vector<EventId>(r.begin(), r.end()), en);
            for (AgentId i = 0; i < a->num_agents(); ++i)
                for (StateId t = 0; t < m.num_states(); t += 3)
                    EXPECT_EQ(m.view(s, i) == m.view(t, i), oracle_view(m, s, i) == oracle_view(m, t, i));
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000u);
}

TEST(ModelProperties, EnabledByChoicesMatchesDefinition) {
    std::mt19937_64 rng(99);
    for (int n = 0; n < 100; ++n) {
        auto inst = random_amas(rng);
        auto a = std::make_shared<const Amas>(load_amas(inst.text).amas);
        auto m = build_undeadlocked(a);
        for (StateId s = 0; s < m.num_states(); ++s) {
            ChoiceVector ec;
            for (AgentId i = 0; i < a->num_agents(); ++i) {
                const auto& rep = m.repertoire(s, i);
                if (rep.empty() || rng() % 2) continue;
                ec.agents.push_back(i);
                ec.choice.push_back(static_cast<std::uint32_t>(rng() % rep.size()));
            }
            std::vector<EventId> expect;
            for (auto e : oracle_enabled(*a, Raw(m.raw(s).begin(), m.raw(s).end()))) {
                bool ok = true;
                for (auto o : a->event_owners[e]) {
                    const auto& rep = a->agents[o].repertoire[m.local(s, o)];
                    auto pos = std::find(ec.agents.begin(), ec.agents.end(), o);
                    if (pos != ec.agents.end()) {
                        const auto& c = rep[ec.choice[pos - ec.agents.begin()]];
                        ok = ok && std::find(c.begin(), c.end(), e) != c.end();
                    } else {
                        bool any = false;
                        for (const auto& c : rep) any = any || std::find(c.begin(), c.end(), e) != c.end();
                        ok = ok && any;
                    }
                }
                if (ok) expect.push_back(e);
            }
            if (m.has_epsilon(s)) expect.push_back(kEpsilon);
            EXPECT_EQ(m.enabled_by_choices(s, ec), expect) << inst.text;
        }
    }
}

// ── Dumps ──

namespace {

void expect_same_model(const Model& a, const Model& b) {
    ASSERT_EQ(a.num_states(), b.num_states());
    EXPECT_EQ(a.initial(), b.initial());
    EXPECT_EQ(a.reduced(), b.reduced());
    for (StateId s = 0; s < a.num_states(); ++s) {
        EXPECT_TRUE(std::equal(a.raw(s).begin(), a.raw(s).end(), b.raw(s).begin(), b.raw(s).end()));
        EXPECT_EQ(a.has_epsilon(s), b.has_epsilon(s));
        std::set<std::pair<EventId, StateId>> ea, eb;
        for (const auto& e : a.successors(s)) ea.insert({e.event, e.target});
        for (const auto& e : b.successors(s)) eb.insert({e.event, e.target});
        EXPECT_EQ(ea, eb);
        auto ra = a.real_enabled(s), rb = b.real_enabled(s);
        EXPECT_TRUE(std::equal(ra.begin(), ra.end(), rb.begin(), rb.end()));
    }
}

}  // namespace

TEST(ModelDump, RoundTripFullAndReduced) {
    for (const char* f : {"asv_1_2.amas", "counter.amas", "selene_v0_c2_r2.amas"}) {
        auto a = fixture_amas(f);
        auto m = build_undeadlocked(a);
        auto text = model_to_json(m).dump();
        auto back = model_from_json(nlohmann::json::parse(text));
        expect_same_model(m, back);
        EXPECT_EQ(model_to_json(back).dump(), text);
    }
    auto a = fixture_amas("counter.amas");
    auto f = parse_formula(a->formulas[0]);
    auto r = reduce_for(a, {default_initial_state(*a)}, f, Mode::Subjective);
    auto back = model_from_json(model_to_json(r));
    expect_same_model(r, back);
    EXPECT_EQ(back.seeds(), r.seeds());
}

TEST(ModelDump, RejectsMalformedDumps) {
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"format":"x"})")), ModelError);
    auto j = model_to_json(build_undeadlocked(asv(1, 2)));
    j["transitions"].push_back(nlohmann::json::array({0, "vote_Voter1_1", 999}));
    EXPECT_THROW(model_from_json(j), ModelError);
    j = model_to_json(build_undeadlocked(asv(1, 2)));
    j["transitions"].push_back(nlohmann::json::array({0, "no_such_event", 0}));
    EXPECT_THROW(model_from_json(j), ModelError);
}
