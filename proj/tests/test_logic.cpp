#include "amasv/bench.hpp"
#include "amasv/logic.hpp"
#include "support/oracles.hpp"
#include "support/random_amas.hpp"

#include <gtest/gtest.h>

using namespace amasv;
using namespace amasv_testing;

namespace {

Model asv_model(int n = 1, int k = 2) { return build_undeadlocked(std::make_shared<const Amas>(gen_asv({n, k}))); }

Model model_of(const std::string& text) { return build_undeadlocked(std::make_shared<const Amas>(load_amas(text).amas)); }

StateId state_where(const Model& m, const std::string& agent, const std::string& local) {
    AgentId i = *m.amas().find_agent(agent);
    for (StateId s = 0; s < m.num_states(); ++s)
        if (m.amas().agents[i].states[m.local(s, i)] == local) return s;
    throw std::runtime_error("no such state");
}

bool exact(const Model& m, const std::string& f, Mode mode, Variant v = Variant::Std) {
    return verify_exact(m, parse_formula(f), {.mode = mode, .variant = v}).verdict;
}

// An environment E moves to sl or sr on its own; A then has to pick a (wins in
// sl) or b (wins in sr) without seeing which branch E took.
const char* kGuess = R"(
Agent E[1]:
init s0
l: s0 -> sl
r: s0 -> sr
shared a: sl -> done
shared b: sr -> done

Agent A[1]:
init s
shared a: s -> w [aID_win=1]
shared b: s -> w [aID_win=1]

PERSISTENT: [A1_win]
)";

}  // namespace

// ── State formulas ──

TEST(Knowledge, OwnVariablesAreKnownOthersAreNot) {
    auto m = asv_model();
    auto coercer = eval_epistemic(m, parse_formula("K_Coercer1 Coercer1_punished_1"));
    auto voter = eval_epistemic(m, parse_formula("K_Voter1 Coercer1_punished_1"));
    auto plain = eval_epistemic(m, parse_formula("Coercer1_punished_1"));
    bool some = false;
    for (StateId s = 0; s < m.num_states(); ++s) {
        EXPECT_EQ(coercer[s], plain[s]);
        EXPECT_FALSE(voter[s]);
        some = some || plain[s];
    }
    EXPECT_TRUE(some);
}

TEST(Knowledge, KnowledgeIsFactiveAndIntrospective) {
    std::mt19937_64 rng(5);
    for (int n = 0; n < 60; ++n) {
        auto inst = random_amas(rng);
        auto m = model_of(inst.text);
        const auto& ag = inst.agents[rng() % inst.agents.size()];
        auto p = random_atom(rng, inst);
        auto k = eval_epistemic(m, parse_formula("K_" + ag + " " + p));
        auto kk = eval_epistemic(m, parse_formula("K_" + ag + " K_" + ag + " " + p));
        auto base = eval_epistemic(m, parse_formula(p));
        for (StateId s = 0; s < m.num_states(); ++s) {
            EXPECT_TRUE(!k[s] || base[s]);
            EXPECT_EQ(k[s], kk[s]);
        }
    }
}

TEST(Atoms, ComparisonOnUnsetVariableIsFalse) {
    auto m = asv_model();
    StateId s0 = m.initial()[0];
    EXPECT_FALSE(eval_epistemic(m, parse_formula("Coercer1_punished_1"))[s0]);
    EXPECT_FALSE(eval_epistemic(m, parse_formula("Coercer1_punished_1=false"))[s0]);
    EXPECT_FALSE(eval_epistemic(m, parse_formula("Coercer1_punished_1!=true"))[s0]);
    EXPECT_TRUE(eval_epistemic(m, parse_formula("!(Coercer1_punished_1=false)"))[s0]);
    EXPECT_FALSE(eval_epistemic(m, parse_formula("No_such_var=1"))[s0]);
}

TEST(Atoms, RandomStateFormulasMatchReference) {
    std::mt19937_64 rng(17);
    for (int n = 0; n < 80; ++n) {
        auto inst = random_amas(rng);
        auto m = model_of(inst.text);
        std::string f = random_atom(rng, inst);
        for (int d = 0; d < 3; ++d) {
            switch (rng() % 4) {
                case 0: f = "!(" + f + ")"; break;
                case 1: f = "(" + f + " & " + random_atom(rng, inst) + ")"; break;
                case 2: f = "(" + random_atom(rng, inst) + " -> " + f + ")"; break;
                default: f = "K_" + inst.agents[rng() % inst.agents.size()] + " " + f; break;
            }
        }
        auto phi = parse_formula(f);
        auto t = eval_epistemic(m, phi);
        for (StateId s = 0; s < m.num_states(); ++s) EXPECT_EQ(t[s] != 0, oracle_state(m, phi, s)) << f;
    }
}

// ── Strategic ability ──

TEST(Ability, AsvCoercerCanPunish) {
    auto m = asv_model();
    for (auto mode : {Mode::Objective, Mode::Subjective}) {
        EXPECT_TRUE(exact(m, "<<Coercer1>> F Coercer1_punished_1", mode));
        EXPECT_TRUE(exact(m, "<<Coercer1>> G !Coercer1_punished_1", mode));
        EXPECT_FALSE(exact(m, "<<Voter1>> G !Coercer1_punished_1", mode));
        EXPECT_FALSE(exact(m, "<<Voter1>> F K_Voter1 Coercer1_punished_1", mode));
        EXPECT_TRUE(exact(m, "<<Voter1, Coercer1>> F Coercer1_punished_1=false", mode));
    }
}

TEST(Ability, ImperfectInformationAndReactiveOutcomes) {
    auto m = model_of(kGuess);
    StateId sl = state_where(m, "E1", "sl");
    auto f = parse_formula("<<A1>> F A1_win");
    auto at = [&](Mode mode, Variant v) { return verify_exact_at(m, f, sl, {.mode = mode, .variant = v}).verdict; };
    // A can stall by refusing the event E offers, so a stutter is always an outcome under Std.
    EXPECT_TRUE(m.has_epsilon(sl));
    EXPECT_FALSE(at(Mode::Objective, Variant::Std));
    EXPECT_TRUE(at(Mode::Objective, Variant::React));
    EXPECT_FALSE(at(Mode::Subjective, Variant::React));
    EXPECT_FALSE(at(Mode::Subjective, Variant::Std));
    EXPECT_FALSE(exact(m, "<<A1>> F A1_win", Mode::Objective, Variant::React));
    // Joint control fixes E's branch; subjectively, A's blindness still puts sr among the roots.
    EXPECT_TRUE(exact(m, "<<A1, E1>> F A1_win", Mode::Objective, Variant::React));
    EXPECT_FALSE(exact(m, "<<A1, E1>> F A1_win", Mode::Subjective, Variant::React));
}

TEST(Ability, BooleanCombinationsOfCoalitions) {
    auto m = asv_model();
    EXPECT_TRUE(exact(m, "!<<Voter1>> G !Coercer1_punished_1", Mode::Subjective));
    EXPECT_TRUE(exact(m, "<<Coercer1>> F Coercer1_punished_1 & <<Coercer1>> G !Coercer1_punished_1",
                      Mode::Objective));
    EXPECT_FALSE(exact(m, "<<Voter1>> F Coercer1_punished_1 | <<Voter1>> G Coercer1_punished_1",
                       Mode::Objective));
}

TEST(Ability, WitnessReplaysAgainstReference) {
    auto m = asv_model();
    auto f = parse_formula("<<Coercer1>> F Coercer1_punished_1");
    auto r = verify_exact(m, f, {.mode = Mode::Subjective});
    ASSERT_TRUE(r.verdict && r.witness);
    OracleStrategy sigma;
    sigma.agents = r.witness->agents;
    for (std::size_t k = 0; k < sigma.agents.size(); ++k) {
        sigma.choice.emplace_back();
        for (StateId s = 0; s < m.num_states(); ++s) {
            auto v = m.view(s, sigma.agents[k]);
            auto c = r.witness->choice[k][v];
            if (c != JointStrategy::kUnbound) sigma.choice[k][oracle_view(m, s, sigma.agents[k])] = c;
        }
    }
    auto p = eval_epistemic(m, f.kids[0]);
    auto roots = oracle_roots(m, sigma.agents, m.initial()[0], Mode::Subjective);
    EXPECT_TRUE(oracle_all_paths(m, sigma, roots, Variant::Std, Formula::Path::F, p, {}));
}

TEST(Ability, StrategyBudgetIsEnforced) {
    auto m = asv_model(2, 2);
    auto f = parse_formula("<<Coercer1>> G !Coercer1_punished_1");
    EXPECT_THROW(verify_exact(m, f, {.max_strategies = 1}), LimitExceeded);
    EXPECT_THROW(verify_exact(m, f, {.should_stop = [] { return true; }}), LimitExceeded);
}

TEST(AbilityProperties, ExactAgreesWithReferenceOnRandomSystems) {
    std::mt19937_64 rng(31337);
    int compared = 0, trues = 0;
    for (int n = 0; n < 120; ++n) {
        auto inst = random_amas(rng);
        auto m = model_of(inst.text);
        for (auto shape : {PoolShape::F, PoolShape::G, PoolShape::U, PoolShape::GK}) {
            auto f = parse_formula(random_formula(rng, inst, shape));
            for (auto mode : {Mode::Objective, Mode::Subjective})
                for (auto v : {Variant::Std, Variant::React}) {
                    auto ref = oracle_verdict(m, f, mode, v, 4096);
                    if (!ref) continue;
                    auto got = verify_exact(m, f, {.mode = mode, .variant = v}).verdict;
                    EXPECT_EQ(got, *ref) << formula_to_string(f) << " " << mode_name(mode) << " "
                                         << variant_name(v) << "\n"
                                         << inst.text;
                    ++compared;
                    trues += got;
                }
        }
    }
    EXPECT_GT(compared, 1500);
    EXPECT_GT(trues, compared / 10);
    EXPECT_LT(trues, compared * 9 / 10);
}

TEST(AbilityProperties, SubjectiveImpliesObjectiveAndReactWeakensNothing) {
    std::mt19937_64 rng(8);
    for (int n = 0; n < 80; ++n) {
        auto inst = random_amas(rng);
        auto m = model_of(inst.text);
        auto f = parse_formula(random_formula(rng, inst, PoolShape(rng() % 4)));
        auto run = [&](Mode mode, Variant v) { return verify_exact(m, f, {.mode = mode, .variant = v}).verdict; };
        // React outcomes are a subset of Std outcomes, and subjective roots a superset of objective ones.
        for (auto v : {Variant::Std, Variant::React})
            if (run(Mode::Subjective, v)) {
                EXPECT_TRUE(run(Mode::Objective, v)) << inst.text;
            }
        for (auto mode : {Mode::Objective, Mode::Subjective})
            if (run(mode, Variant::Std)) {
                EXPECT_TRUE(run(mode, Variant::React)) << inst.text;
            }
    }
}
