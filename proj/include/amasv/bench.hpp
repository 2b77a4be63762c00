// ============================================================================
// amasv/bench.hpp: model families and the coercion-vulnerability formula
// ============================================================================
//
// Generators emit DSL text; the parsed ModelSpec is what the rest of the
// library consumes, so every generated model is also a valid input file.
// ============================================================================
#pragma once

#include "amasv/amas.hpp"
#include "amasv/dsl.hpp"
#include "amasv/formula.hpp"

#include <sstream>
#include <string>

namespace amasv {

// ── ASV ─────────────────────────────────────────────────────────────────────

struct AsvParams {
    int n = 1;  // voters
    int k = 2;  // candidates
};

/// Voters vote, then show a receipt (gv) or refuse (ng); the coercer records
/// only "receipt for candidate 1" (g) or anything else (n) and then punishes
/// or not, which sets its own persistent variable Coercer1_punished_i. Both
/// return to their initial states afterwards.
inline std::string asv_text(const AsvParams& p) {
    if (p.n < 1 || p.k < 2) throw ModelError("ASV needs n >= 1 voters and k >= 2 candidates");
    std::ostringstream out;
    out << "Agent Voter[" << p.n << "]:\ninit q0\n";
    for (int j = 1; j <= p.k; ++j) out << "vote_aID_" << j << ": q0 -> q" << j << "\n";
    for (int j = 1; j <= p.k; ++j) {
        out << "shared gv_aID_" << j << ": q" << j << " -> q" << j << "g\n";
        out << "shared ng_aID: q" << j << " -> q" << j << "n\n";
        for (const char* s : {"g", "n"}) {
            out << "shared pun_aID: q" << j << s << " -> q0\n";
            out << "shared npun_aID: q" << j << s << " -> q0\n";
        }
    }
    out << "PROTOCOL: [[pun_aID, npun_aID]]\n\n";

    // Coercer states: one phase letter (0, g, n) per voter.
    std::vector<std::string> phases{""};
    for (int i = 0; i < p.n; ++i) {
        std::vector<std::string> next;
        for (const auto& s : phases)
            for (char c : {'0', 'g', 'n'}) next.push_back(s + c);
        phases = std::move(next);
    }
    auto name = [&](const std::string& ph) { return p.n == 1 ? "q" + ph : "q_" + ph; };
    out << "Agent Coercer[1]:\ninit " << name(std::string(p.n, '0')) << "\n";
    for (const auto& ph : phases)
        for (int i = 0; i < p.n; ++i) {
            std::string voter = "Voter" + std::to_string(i + 1);
            std::string idx = std::to_string(i + 1);
            if (ph[i] == '0') {
                for (int j = 1; j <= p.k; ++j) {
                    std::string to = ph;
                    to[i] = j == 1 ? 'g' : 'n';
                    out << "shared gv_" << voter << "_" << j << ": " << name(ph) << " -> " << name(to) << "\n";
                }
                std::string to = ph;
                to[i] = 'n';
                out << "shared ng_" << voter << ": " << name(ph) << " -> " << name(to) << "\n";
            } else {
                std::string to = ph;
                to[i] = '0';
                out << "shared pun_" << voter << ": " << name(ph) << " -> " << name(to) << " [aID_punished_" << idx
                    << "=true]\n";
                out << "shared npun_" << voter << ": " << name(ph) << " -> " << name(to) << " [aID_punished_"
                    << idx << "=false]\n";
            }
        }
    out << "PROTOCOL: [[";
    for (int i = 1; i <= p.n; ++i) {
        for (int j = 1; j <= p.k; ++j) out << (i == 1 && j == 1 ? "" : ", ") << "gv_Voter" << i << "_" << j;
        out << ", ng_Voter" << i;
    }
    out << "]]\n\nPERSISTENT: [";
    for (int i = 1; i <= p.n; ++i) out << (i > 1 ? ", " : "") << "Coercer1_punished_" << i;
    out << "]\n";
    return out.str();
}

inline ModelSpec gen_asv_spec(const AsvParams& p) { return parse_model_file(asv_text(p), "asv"); }

inline Amas gen_asv(const AsvParams& p) {
    auto inst = instantiate(gen_asv_spec(p), {.strict = true});
    return std::move(inst.amas);
}

// ── SELENE ──────────────────────────────────────────────────────────────────

struct SeleneParams {
    int V = 1;   // plain voters
    int CV = 1;  // coerced voters
    int C = 3;   // candidates
    int R = 3;   // revoting rounds
};

/// Coerced voter template. The revote counter is initialised to 1 when the
/// vote is prepared; rounds 1..R may revote for the required candidate, and
/// at R+1 the voter may silently restore the prepared vote. Private event
/// names carry the instance name only when several coerced voters exist, so
/// the single-voter template keeps the verbatim template's names.
inline std::string selene_voterc_text(const SeleneParams& p) {
    const std::string own = p.CV > 1 ? "_aID" : "";
    std::ostringstream out;
    out << "Agent VoterC[" << p.CV << "]:\ninit start\n";
    for (int c = 1; c <= p.C; ++c) out << "shared coerce" << c << "_aID: start -> coerced [aID_required=" << c << "]\n";
    for (int c = 1; c <= p.C; ++c)
        out << "select_vote" << c << own << ": coerced -> prepared [aID_vote=" << c << ", aID_prep_vote=" << c
            << ", aID_revote=1]\n";
    out << "shared is_ready: prepared -> ready\n"
        << "shared start_voting: ready -> voting\n"
        << "shared aID_vote: voting -> vote [Coercer1_aID_vote=?aID_vote, Coercer1_aID_revote=?aID_revote]\n"
        << "shared send_vote_aID: vote -> send\n";
    for (int r = 1; r <= p.R; ++r) {
        out << "revote_vote_" << r << own << ": send -[aID_revote==" << r << "]> voting [aID_vote=?aID_required, aID_revote="
            << r + 1 << "]\n";
        out << "skip_revote_" << r << own << ": send -[aID_revote==" << r << "]> votingf\n";
    }
    out << "final_vote" << own << ": send -[aID_revote==" << p.R + 1 << "]> votingf [aID_vote=?aID_prep_vote]\n"
        << "skip_final" << own << ": send -[aID_revote==" << p.R + 1 << "]> votingf\n"
        << "shared send_fvote_aID: votingf -> sendf\n"
        << "shared finish_voting: sendf -> finish\n"
        << "shared send_tracker_aID: finish -> tracker\n"
        << "shared finish_sending_trackers: tracker -> trackers_sent\n";
    for (int c = 1; c <= p.C; ++c)
        out << "shared give" << c << "_aID: trackers_sent -> interact [Coercer1_aID_tracker=" << c << "]\n";
    out << "shared not_give_aID: trackers_sent -> interact [Coercer1_aID_tracker=0]\n"
        << "shared punish_aID: interact -> ccheck [aID_punish=true]\n"
        << "shared not_punish_aID: interact -> check [aID_punish=false]\n";
    for (int c = 1; c <= p.C; ++c) out << "shared check_tracker" << c << "_aID: check -> end\n";
    out << "PROTOCOL: [[";
    for (int c = 1; c <= p.C; ++c) out << (c > 1 ? ", " : "") << "coerce" << c << "_aID";
    out << "], [punish_aID, not_punish_aID]]\n";
    return out.str();
}

inline std::string selene_coercer_text(const SeleneParams& p) {
    std::ostringstream out;
    auto voter = [](int j) { return "VoterC" + std::to_string(j); };
    out << "Agent Coercer[1]:\ninit coerce\n";
    for (int j = 1; j <= p.CV; ++j)
        for (int c = 1; c <= p.C; ++c)
            out << "shared coerce" << c << "_" << voter(j) << ": coerce -> coerce [aID_" << voter(j)
                << "_required=" << c << "]\n";
    out << "shared start_voting: coerce -> voting\n";
    for (int j = 1; j <= p.CV; ++j) out << "shared " << voter(j) << "_vote: voting -> voting\n";
    out << "shared finish_voting: voting -> finish\n"
        << "shared finish_sending_trackers: finish -> trackers_sent\n";
    for (int j = 1; j <= p.CV; ++j) {
        for (int c = 1; c <= p.C; ++c)
            out << "shared give" << c << "_" << voter(j) << ": trackers_sent -> trackers_sent\n";
        out << "shared not_give_" << voter(j) << ": trackers_sent -> trackers_sent\n";
    }
    out << "to_check: trackers_sent -> check\n";
    for (int c = 1; c <= p.C; ++c) out << "shared check_tracker" << c << "_Coercer1: check -> check\n";
    out << "to_interact: check -> interact\n";
    for (int j = 1; j <= p.CV; ++j) {
        out << "shared punish_" << voter(j) << ": interact -> interact\n";
        out << "shared not_punish_" << voter(j) << ": interact -> interact\n";
    }
    out << "finish: interact -> end [aID_finish=1]\n";
    out << "PROTOCOL: [";
    for (int j = 1; j <= p.CV; ++j) {
        out << (j > 1 ? ", " : "") << "[";
        for (int c = 1; c <= p.C; ++c) out << "give" << c << "_" << voter(j) << ", ";
        out << "not_give_" << voter(j) << "]";
    }
    out << "]\n";
    return out.str();
}

/// Plain voter: the coerced voter's voting phase without coercion, revoting,
/// receipts or punishment.
inline std::string selene_voter_text(const SeleneParams& p) {
    std::ostringstream out;
    out << "Agent Voter[" << p.V << "]:\ninit start\n";
    for (int c = 1; c <= p.C; ++c) out << "select_vote" << c << "_aID: start -> prepared [aID_vote=" << c << "]\n";
    out << "shared is_ready: prepared -> ready\n"
        << "shared start_voting: ready -> voting\n"
        << "shared send_vote_aID: voting -> sent\n"
        << "shared send_fvote_aID: sent -> sendf\n"
        << "shared finish_voting: sendf -> finish\n"
        << "shared send_tracker_aID: finish -> tracker\n"
        << "shared finish_sending_trackers: tracker -> trackers_sent\n";
    for (int c = 1; c <= p.C; ++c) out << "shared check_tracker" << c << "_aID: trackers_sent -> end\n";
    return out.str();
}

/// Election authority: runs the phases, accepts ballots, distributes trackers
/// and serves tracker lookups on the bulletin board.
inline std::string selene_ea_text(const SeleneParams& p) {
    std::vector<std::string> voters;
    for (int j = 1; j <= p.CV; ++j) voters.push_back("VoterC" + std::to_string(j));
    for (int j = 1; j <= p.V; ++j) voters.push_back("Voter" + std::to_string(j));
    std::ostringstream out;
    out << "Agent EA[1]:\ninit start\n"
        << "shared is_ready: start -> ready\n"
        << "shared start_voting: ready -> voting\n";
    for (const auto& v : voters) {
        out << "shared send_vote_" << v << ": voting -> voting\n";
        out << "shared send_fvote_" << v << ": voting -> voting\n";
    }
    out << "shared finish_voting: voting -> finish\n";
    for (const auto& v : voters) out << "shared send_tracker_" << v << ": finish -> finish\n";
    out << "shared finish_sending_trackers: finish -> published\n";
    auto checkers = voters;
    checkers.push_back("Coercer1");
    for (const auto& v : checkers)
        for (int c = 1; c <= p.C; ++c) out << "shared check_tracker" << c << "_" << v << ": published -> published\n";
    return out.str();
}

inline std::string selene_text(const SeleneParams& p) {
    if (p.V < 0 || p.CV < 1 || p.C < 2 || p.R < 1)
        throw ModelError("SELENE needs V >= 0, CV >= 1, C >= 2, R >= 1");
    std::ostringstream out;
    out << "% SELENE V=" << p.V << " CV=" << p.CV << " C=" << p.C << " R=" << p.R << "\n";
    out << selene_ea_text(p) << "\n" << selene_voterc_text(p) << "\n";
    if (p.V > 0) out << selene_voter_text(p) << "\n";
    out << selene_coercer_text(p) << "\n";
    std::vector<std::string> persistent;
    for (int j = 1; j <= p.CV; ++j) {
        std::string v = "VoterC" + std::to_string(j);
        for (const char* s : {"_required", "_vote", "_prep_vote", "_revote", "_punish"}) persistent.push_back(v + s);
        for (const char* s : {"_required", "_vote", "_revote", "_tracker"}) persistent.push_back("Coercer1_" + v + s);
    }
    for (int j = 1; j <= p.V; ++j) persistent.push_back("Voter" + std::to_string(j) + "_vote");
    persistent.push_back("Coercer1_finish");
    out << "PERSISTENT: [";
    for (std::size_t i = 0; i < persistent.size(); ++i) out << (i ? ", " : "") << persistent[i];
    out << "]\nREDUCTION: [VoterC1_vote, VoterC1_revote, Coercer1_finish]\n";
    return out.str();
}

inline ModelSpec gen_selene(const SeleneParams& p) { return parse_model_file(selene_text(p), "selene"); }

/// <<Coercer1>> G ((end & revote = k & vote = i) -> K_Coercer1 vote = i) for
/// the given coerced voter; end is Coercer1_finish=1.
inline Formula gen_vuln_formula(int i, int k, int voter = 1) {
    std::string v = "VoterC" + std::to_string(voter);
    Formula voted = f_atom(v + "_vote", i);
    Formula ante = f_and(f_and(f_atom("Coercer1_finish", 1), f_atom(v + "_revote", k)), voted);
    return f_coalition({"Coercer1"}, Formula::Path::G, f_implies(std::move(ante), f_know("Coercer1", voted)));
}

}  // namespace amasv
