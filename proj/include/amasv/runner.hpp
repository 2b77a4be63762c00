// ============================================================================
// amasv/runner.hpp: one verification run end to end, and its report
// ============================================================================
#pragma once

#include "amasv/approx.hpp"
#include "amasv/bench.hpp"
#include "amasv/model_io.hpp"
#include "amasv/por.hpp"
#include "amasv/synthesis.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace amasv {

// ── Configuration ───────────────────────────────────────────────────────────

enum class Method { Dfs, Parallel, Approx, Exact };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Dfs: return "dfs";
        case Method::Parallel: return "parallel";
        case Method::Approx: return "approx";
        case Method::Exact: return "exact";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "dfs") return Method::Dfs;
    if (s == "parallel") return Method::Parallel;
    if (s == "approx") return Method::Approx;
    if (s == "exact") return Method::Exact;
    throw ModelError("unknown method '" + s + "' (dfs, parallel, approx, exact)");
}

inline Mode parse_mode(const std::string& s) {
    if (s == "objective") return Mode::Objective;
    if (s == "subjective") return Mode::Subjective;
    throw ModelError("unknown mode '" + s + "' (objective, subjective)");
}

inline Variant parse_variant(const std::string& s) {
    if (s == "std") return Variant::Std;
    if (s == "react") return Variant::React;
    throw ModelError("unknown variant '" + s + "' (std, react)");
}

/// Where the system comes from: a DSL file, a model dump, or a generator.
struct ModelSource {
    enum class Kind { File, Dump, Asv, Selene } kind = Kind::File;
    std::string path;
    AsvParams asv;
    SeleneParams selene;

    std::string family() const {
        switch (kind) {
            case Kind::File: return "file";
            case Kind::Dump: return "dump";
            case Kind::Asv: return "asv";
            case Kind::Selene: return "selene";
        }
        return "?";
    }
    nlohmann::json params() const {
        switch (kind) {
            case Kind::Asv: return {{"n", asv.n}, {"k", asv.k}};
            case Kind::Selene: return {{"V", selene.V}, {"CV", selene.CV}, {"C", selene.C}, {"R", selene.R}};
            default: return {{"path", path}};
        }
    }
};

struct RunConfig {
    ModelSource source;
    /// `vuln:i:k`, or formula text; empty means the first FORMULA directive.
    std::string formula;
    Method method = Method::Dfs;
    Mode mode = Mode::Subjective;
    Variant variant = Variant::Std;
    bool reduce = false;
    unsigned workers = 1;
    double build_timeout = 300;
    double verify_timeout = 300;
    std::uint64_t max_nodes = 100'000'000;
    std::size_t max_states = 20'000'000;
    bool want_witness = false;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::shared_ptr<const Amas> load_source_amas(const ModelSource& src) {
    switch (src.kind) {
        case ModelSource::Kind::File:
            return std::make_shared<const Amas>(load_amas(read_file(src.path), {}, src.path).amas);
        case ModelSource::Kind::Asv: return std::make_shared<const Amas>(gen_asv(src.asv));
        case ModelSource::Kind::Selene:
            return std::make_shared<const Amas>(instantiate(gen_selene(src.selene), {.strict = true}).amas);
        case ModelSource::Kind::Dump: break;
    }
    throw ModelError("model dumps carry no system to rebuild");
}

/// Expands `vuln:i:k` (i and k may be C, R or R-1 for SELENE sources).
inline Formula resolve_formula(const std::string& text, const ModelSource& src, const Amas& amas) {
    if (text.rfind("vuln:", 0) == 0) {
        auto rest = text.substr(5);
        auto colon = rest.find(':');
        if (colon == std::string::npos) throw ModelError("expected vuln:i:k");
        auto num = [&](const std::string& s) {
            const auto& p = src.selene;
            bool sel = src.kind == ModelSource::Kind::Selene;
            if (sel && s == "C") return p.C;
            if (sel && s == "R") return p.R;
            if (sel && s == "R-1") return p.R - 1;
            std::size_t used = 0;
            int v = 0;
            try {
                v = std::stoi(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != s.size() || s.empty()) throw ModelError("bad number '" + s + "' in vuln formula");
            return v;
        };
        return gen_vuln_formula(num(rest.substr(0, colon)), num(rest.substr(colon + 1)));
    }
    if (!text.empty()) return parse_formula(text);
    if (amas.formulas.empty()) throw ModelError("no formula given and the model has no FORMULA directive");
    return parse_formula(amas.formulas.front());
}

// ── Report ──────────────────────────────────────────────────────────────────

struct RunReport {
    std::string family;
    nlohmann::json params;
    std::string formula;
    std::string method;
    std::string mode;
    std::string variant;
    bool reduced = false;
    unsigned workers = 1;

    std::size_t states = 0;
    std::size_t transitions = 0;
    std::size_t epsilon_states = 0;
    double build_seconds = 0;

    /// true, false, unknown, budget or timeout
    std::string verdict = "none";
    double verify_seconds = 0;
    double wall_seconds = 0;
    std::uint64_t nodes = 0;
    std::optional<nlohmann::json> witness;
    std::optional<nlohmann::json> bounds;
    std::string phase;  // phase that timed out or ran out of budget
    std::string message;

    bool exhausted() const { return verdict == "budget" || verdict == "timeout"; }
};

inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json j;
    j["config"] = {{"family", r.family},   {"params", r.params},   {"formula", r.formula},
                   {"method", r.method},   {"mode", r.mode},       {"variant", r.variant},
                   {"reduced", r.reduced}, {"workers", r.workers}};
    j["model"] = {{"states", r.states},
                  {"transitions", r.transitions},
                  {"epsilon_states", r.epsilon_states},
                  {"build_seconds", r.build_seconds}};
    j["verdict"] = r.verdict;
    j["verify_seconds"] = r.verify_seconds;
    j["wall_seconds"] = r.wall_seconds;
    j["nodes"] = r.nodes;
    if (r.witness) j["witness"] = *r.witness;
    if (r.bounds) j["bounds"] = *r.bounds;
    if (!r.phase.empty()) j["phase"] = r.phase;
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

inline std::string report_to_text(const RunReport& r) {
    std::ostringstream out;
    out << "family:         " << r.family << " " << r.params.dump() << "\n"
        << "formula:        " << r.formula << "\n"
        << "method:         " << r.method << " (mode " << r.mode << ", variant " << r.variant
        << (r.reduced ? ", reduced" : ", full") << ", workers " << r.workers << ")\n"
        << "states:         " << r.states << "\n"
        << "transitions:    " << r.transitions << "\n"
        << "epsilon states: " << r.epsilon_states << "\n"
        << "build seconds:  " << r.build_seconds << "\n"
        << "verify seconds: " << r.verify_seconds << "\n"
        << "nodes:          " << r.nodes << "\n";
    if (r.bounds) out << "bounds:         " << r.bounds->dump() << "\n";
    if (!r.message.empty()) out << "note:           " << r.message << "\n";
    out << "verdict:        " << r.verdict << "\n";
    if (r.witness) out << "witness:\n" << r.witness->dump(2) << "\n";
    return out.str();
}

// ── Running ─────────────────────────────────────────────────────────────────

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::function<bool()> deadline_after(double seconds) {
    auto end = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    return [end] { return Clock::now() >= end; };
}

}  // namespace detail

/// Builds the model for `cfg` (full or reduced), honouring the build timeout.
inline Model build_for(const RunConfig& cfg, const std::shared_ptr<const Amas>& amas, const Formula& f) {
    BuildOptions bo;
    bo.max_states = cfg.max_states;
    bo.should_stop = detail::deadline_after(cfg.build_timeout);
    auto init = std::vector<std::vector<Value>>{default_initial_state(*amas)};
    if (cfg.reduce) return reduce_for(amas, init, f, cfg.mode, bo);
    return build_undeadlocked(amas, init, bo);
}

/// Runs the configured engine on an already built model; fills the verdict
/// part of `r`.
inline void verify_on(const RunConfig& cfg, const Model& m, const Formula& f, RunReport& r) {
    auto t0 = detail::Clock::now();
    auto stop = detail::deadline_after(cfg.verify_timeout);
    auto exhausted = [&](const char* why) {
        r.verdict = stop() ? "timeout" : "budget";
        r.phase = "verify";
        r.message = why;
    };
    try {
        switch (cfg.method) {
            case Method::Dfs:
            case Method::Parallel: {
                SynthesisOptions so;
                so.variant = cfg.variant;
                so.max_nodes = cfg.max_nodes;
                so.should_stop = stop;
                EngineResult er = cfg.method == Method::Dfs ? verify_dfs(m, f, cfg.mode, so)
                                                            : verify_parallel(m, f, cfg.mode, cfg.workers, so);
                r.nodes = er.nodes;
                if (er.status == SynthesisStatus::Budget) exhausted("search stopped before a verdict");
                else r.verdict = er.status == SynthesisStatus::Found ? "true" : "false";
                if (er.witness && cfg.want_witness) r.witness = strategy_to_json(m, *er.witness);
                break;
            }
            case Method::Approx: {
                auto ar = approximate_verify(m, f, cfg.mode, cfg.variant);
                r.verdict = tri_name(ar.verdict);
                r.bounds = nlohmann::json{{"lower_size", ar.lower_size},
                                          {"upper_size", ar.upper_size},
                                          {"lower_iterations", ar.lower_iterations},
                                          {"upper_iterations", ar.upper_iterations},
                                          {"lower_within_upper", ar.lower_within_upper}};
                break;
            }
            case Method::Exact: {
                VerifyOptions vo;
                vo.mode = cfg.mode;
                vo.variant = cfg.variant;
                vo.workers = cfg.workers;
                vo.should_stop = stop;
                auto er = verify_exact(m, f, vo);
                r.nodes = er.strategies_checked;
                r.verdict = er.verdict ? "true" : "false";
                if (er.witness && cfg.want_witness) r.witness = strategy_to_json(m, *er.witness);
                break;
            }
        }
    } catch (const LimitExceeded& e) {
        exhausted(e.what());
    }
    r.verify_seconds = detail::seconds_since(t0);
}

/// Full run: load or generate, build, verify. Input errors propagate as
/// exceptions; resource exhaustion is reported in the verdict.
inline RunReport run_verification(const RunConfig& cfg) {
    auto t0 = detail::Clock::now();
    RunReport r;
    r.family = cfg.source.family();
    r.params = cfg.source.params();
    r.method = method_name(cfg.method);
    r.mode = mode_name(cfg.mode);
    r.variant = variant_name(cfg.variant);
    r.workers = cfg.workers;

    std::optional<Model> model;
    Formula f;
    if (cfg.source.kind == ModelSource::Kind::Dump) {
        auto t1 = detail::Clock::now();
        model = model_from_json(nlohmann::json::parse(read_file(cfg.source.path)));
        r.build_seconds = detail::seconds_since(t1);
        f = resolve_formula(cfg.formula, cfg.source, model->amas());
    } else {
        auto amas = load_source_amas(cfg.source);
        f = resolve_formula(cfg.formula, cfg.source, *amas);
        auto t1 = detail::Clock::now();
        try {
            model = build_for(cfg, amas, f);
        } catch (const LimitExceeded& e) {
            r.formula = formula_to_string(f);
            r.reduced = cfg.reduce;
            r.build_seconds = detail::seconds_since(t1);
            r.verdict = std::string(e.what()).find("timeout") != std::string::npos ? "timeout" : "budget";
            r.phase = "build";
            r.message = e.what();
            r.wall_seconds = detail::seconds_since(t0);
            return r;
        }
        r.build_seconds = detail::seconds_since(t1);
    }
    r.formula = formula_to_string(f);
    r.reduced = model->reduced();
    r.states = model->num_states();
    r.transitions = model->num_transitions();
    r.epsilon_states = model->num_epsilon_states();
    verify_on(cfg, *model, f, r);
    r.wall_seconds = detail::seconds_since(t0);
    return r;
}

// ── Bench rows ──────────────────────────────────────────────────────────────

/// RFC 4180 field: quoted when it contains a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
    return out + "\r\n";
}

struct BenchRow {
    SeleneParams params;
    std::string formula = "vuln:1:R";
};

struct BenchPlan {
    std::vector<BenchRow> rows;
    std::vector<Method> methods{Method::Dfs, Method::Parallel, Method::Approx};
    RunConfig base;  // mode, variant, workers, timeouts
    unsigned jobs = 1;
};

/// One bench row: a full and a reduced run per method, sharing one build each.
struct BenchResult {
    BenchRow row;
    std::vector<RunReport> full, reduced;  // one per method
    bool contended = false;
};

inline std::vector<std::string> bench_header(const std::vector<Method>& methods) {
    std::vector<std::string> h{"A", "V", "CV", "C", "R", "formula", "mode", "variant",
                               "full_st", "full_tr", "full_eps", "full_build_s"};
    for (auto m : methods) h.push_back(std::string("full_") + method_name(m) + "_s");
    h.insert(h.end(), {"red_st", "red_tr", "red_eps", "red_build_s"});
    for (auto m : methods) h.push_back(std::string("red_") + method_name(m) + "_s");
    for (auto m : methods) h.push_back(std::string(method_name(m)) + "_result");
    h.insert(h.end(), {"Result", "contended"});
    return h;
}

namespace detail {

inline std::string fmt_seconds(double s) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(3);
    o << s;
    return o.str();
}

/// Common verdict of a group of runs; "mismatch" if two conclusive verdicts differ.
inline std::string combine_verdicts(const std::vector<const RunReport*>& runs) {
    std::string out;
    for (const auto* r : runs) {
        const auto& v = r->verdict;
        if (v != "true" && v != "false") continue;
        if (out.empty()) out = v;
        else if (out != v) return "mismatch";
    }
    if (!out.empty()) return out;
    for (const auto* r : runs)
        if (r->exhausted()) return r->verdict;
    return runs.empty() ? "none" : runs.front()->verdict;
}

}  // namespace detail

inline std::vector<std::string> bench_csv_fields(const BenchResult& b, const std::vector<Method>& methods) {
    const auto& p = b.row.params;
    auto stats = [](const std::vector<RunReport>& rs, std::vector<std::string>& out) {
        const RunReport& r = rs.front();
        bool built = r.phase != "build";
        out.push_back(built ? std::to_string(r.states) : r.verdict);
        out.push_back(built ? std::to_string(r.transitions) : r.verdict);
        out.push_back(built ? std::to_string(r.epsilon_states) : r.verdict);
        out.push_back(detail::fmt_seconds(r.build_seconds));
        for (const auto& x : rs) out.push_back(x.exhausted() ? x.verdict : detail::fmt_seconds(x.verify_seconds));
    };
    std::vector<std::string> f{std::to_string(p.V + p.CV + 2), std::to_string(p.V), std::to_string(p.CV),
                               std::to_string(p.C), std::to_string(p.R), b.full.front().formula,
                               b.full.front().mode, b.full.front().variant};
    stats(b.full, f);
    stats(b.reduced, f);
    std::vector<const RunReport*> all;
    for (std::size_t k = 0; k < methods.size(); ++k) {
        f.push_back(detail::combine_verdicts({&b.full[k], &b.reduced[k]}));
        all.push_back(&b.full[k]);
        all.push_back(&b.reduced[k]);
    }
    f.push_back(detail::combine_verdicts(all));
    f.push_back(b.contended ? "yes" : "no");
    return f;
}

inline BenchResult run_bench_row(const BenchPlan& plan, const BenchRow& row) {
    BenchResult out;
    out.row = row;
    for (bool red : {false, true}) {
        RunConfig cfg = plan.base;
        cfg.source.kind = ModelSource::Kind::Selene;
        cfg.source.selene = row.params;
        cfg.formula = row.formula;
        cfg.reduce = red;
        auto& dst = red ? out.reduced : out.full;
        auto amas = load_source_amas(cfg.source);
        Formula f = resolve_formula(cfg.formula, cfg.source, *amas);
        RunReport base;
        base.family = "selene";
        base.params = cfg.source.params();
        base.formula = formula_to_string(f);
        base.mode = mode_name(cfg.mode);
        base.variant = variant_name(cfg.variant);
        base.reduced = red;
        base.workers = cfg.workers;
        std::optional<Model> m;
        auto t0 = detail::Clock::now();
        try {
            m = build_for(cfg, amas, f);
        } catch (const LimitExceeded& e) {
            base.verdict = std::string(e.what()).find("timeout") != std::string::npos ? "timeout" : "budget";
            base.phase = "build";
            base.message = e.what();
        }
        base.build_seconds = detail::seconds_since(t0);
        if (m) {
            base.states = m->num_states();
            base.transitions = m->num_transitions();
            base.epsilon_states = m->num_epsilon_states();
        }
        for (auto method : plan.methods) {
            RunReport r = base;
            r.method = method_name(method);
            if (m) {
                cfg.method = method;
                verify_on(cfg, *m, f, r);
            }
            dst.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace amasv
