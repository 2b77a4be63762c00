// amasv: command-line front end.
//
// Exit codes: 0 verdict produced (or clean check), 1 check found errors,
// 2 timeout or budget exhausted, 3 input error.

#include "amasv/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

using namespace amasv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitExhausted = 2;
constexpr int kExitInput = 3;

unsigned default_workers() {
    if (const char* env = std::getenv("AMASV_WORKERS")) {
        try {
            int v = std::stoi(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid AMASV_WORKERS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

// ── Source options shared by build and verify ──

struct SourceArgs {
    std::string file, load, family;
    AsvParams asv;
    SeleneParams selene;

    void attach(CLI::App* app) {
        app->add_option("file", file, "DSL model file");
        app->add_option("--load", load, "model dump produced by 'build --dump'");
        app->add_option("--family", family, "generated family: asv or selene")->check(CLI::IsMember({"asv", "selene"}));
        app->add_option("--n", asv.n, "ASV voters");
        app->add_option("--k", asv.k, "ASV candidates");
        app->add_option("--V", selene.V, "SELENE plain voters");
        app->add_option("--CV", selene.CV, "SELENE coerced voters");
        app->add_option("--C", selene.C, "SELENE candidates");
        app->add_option("--R", selene.R, "SELENE revoting rounds");
    }

    ModelSource resolve() const {
        int given = !file.empty() + !load.empty() + !family.empty();
        if (given != 1) throw ModelError("give exactly one of a model file, --load or --family");
        ModelSource s;
        if (!file.empty()) {
            s.kind = ModelSource::Kind::File;
            s.path = file;
        } else if (!load.empty()) {
            s.kind = ModelSource::Kind::Dump;
            s.path = load;
        } else if (family == "asv") {
            s.kind = ModelSource::Kind::Asv;
            s.asv = asv;
        } else {
            s.kind = ModelSource::Kind::Selene;
            s.selene = selene;
        }
        return s;
    }
};

struct EngineArgs {
    std::string formula, formula_text, method = "dfs", mode = "subjective", variant = "std";
    bool reduce = false;
    unsigned workers = default_workers();
    double timeout = 300, build_timeout = 300;
    std::uint64_t max_nodes = 100'000'000;
    std::size_t max_states = 20'000'000;

    void attach(CLI::App* app, bool with_method) {
        app->add_option("--formula", formula, "formula shorthand, e.g. vuln:1:3");
        app->add_option("--formula-text", formula_text, "formula in sATL*K syntax");
        if (with_method)
            app->add_option("--method", method, "dfs, parallel, approx or exact")
                ->check(CLI::IsMember({"dfs", "parallel", "approx", "exact"}));
        app->add_option("--mode", mode, "objective or subjective")->check(CLI::IsMember({"objective", "subjective"}));
        app->add_option("--variant", variant, "std or react")->check(CLI::IsMember({"std", "react"}));
        app->add_flag("--reduce", reduce, "build the partial-order reduced model");
        app->add_option("--workers", workers, "worker threads (default: AMASV_WORKERS or all cores)")
            ->check(CLI::PositiveNumber);
        app->add_option("--timeout", timeout, "verification timeout in seconds")->check(CLI::PositiveNumber);
        app->add_option("--build-timeout", build_timeout, "model construction timeout in seconds")
            ->check(CLI::PositiveNumber);
        app->add_option("--max-nodes", max_nodes, "search node budget");
        app->add_option("--max-states", max_states, "state limit for model construction");
    }

    RunConfig config(const ModelSource& src) const {
        if (!formula.empty() && !formula_text.empty()) throw ModelError("give --formula or --formula-text, not both");
        RunConfig c;
        c.source = src;
        c.formula = formula.empty() ? formula_text : formula;
        c.method = parse_method(method);
        c.mode = parse_mode(mode);
        c.variant = parse_variant(variant);
        c.reduce = reduce;
        c.workers = workers;
        c.verify_timeout = timeout;
        c.build_timeout = build_timeout;
        c.max_nodes = max_nodes;
        c.max_states = max_states;
        return c;
    }
};

// ── check ──

int cmd_check(const std::string& path, bool strict) {
    std::string text = read_file(path);
    std::vector<std::string> errors, warnings;
    std::optional<Instantiated> inst;
    try {
        inst = load_amas(text, {.strict = false}, path);
    } catch (const ParseError& e) {
        errors.push_back(e.what());
    } catch (const ModelError& e) {
        errors.push_back(e.what());
    }
    if (inst) {
        warnings = inst->warnings;
        const Amas& a = inst->amas;
        for (const auto& ag : a.agents) {
            // local states unreachable in the agent's own automaton
            std::vector<char> seen(ag.states.size(), 0);
            std::vector<LocalStateId> stack{ag.initial};
            seen[ag.initial] = 1;
            while (!stack.empty()) {
                auto l = stack.back();
                stack.pop_back();
                for (auto ti : ag.outgoing[l]) {
                    auto t = ag.transitions[ti].target;
                    if (!seen[t]) {
                        seen[t] = 1;
                        stack.push_back(t);
                    }
                }
            }
            for (LocalStateId l = 0; l < ag.states.size(); ++l)
                if (!seen[l]) warnings.push_back("agent " + ag.name + ": local state '" + ag.states[l] + "' is unreachable");
        }
        for (const auto& ftext : a.formulas) {
            try {
                Formula f = parse_formula(ftext);
                std::set<std::string> vars, agents;
                collect_atom_vars(f, vars);
                collect_agents(f, agents);
                for (const auto& v : vars)
                    if (!a.find_var(v)) warnings.push_back("formula '" + ftext + "': unknown variable '" + v + "'");
                for (const auto& n : agents)
                    if (!a.find_agent(n)) errors.push_back("formula '" + ftext + "': unknown agent '" + n + "'");
            } catch (const ParseError& e) {
                errors.push_back("formula '" + ftext + "': " + e.what());
            }
        }
    }
    if (strict) {
        errors.insert(errors.end(), warnings.begin(), warnings.end());
        warnings.clear();
    }
    for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
    for (const auto& e : errors) std::cout << "error: " << e << "\n";
    if (!errors.empty()) {
        std::cout << path << ": " << errors.size() << " error(s)\n";
        return kExitCheck;
    }
    const Amas& a = inst->amas;
    std::cout << path << ": ok (" << a.num_agents() << " agents, " << a.num_events() << " events, " << a.num_vars()
              << " variables, " << warnings.size() << " warning(s))\n";
    return kExitOk;
}

// ── build ──

int cmd_build(const SourceArgs& sa, const EngineArgs& ea, const std::string& dump, bool json) {
    auto src = sa.resolve();
    if (src.kind == ModelSource::Kind::Dump) throw ModelError("build needs a model file or a family");
    RunConfig cfg = ea.config(src);
    auto amas = load_source_amas(src);
    auto t0 = std::chrono::steady_clock::now();
    std::optional<Formula> f;
    if (cfg.reduce || !cfg.formula.empty() || !amas->formulas.empty()) {
        try {
            f = resolve_formula(cfg.formula, src, *amas);
        } catch (const ModelError&) {
            if (cfg.reduce) throw;
        }
    }
    if (cfg.reduce && !f) throw ModelError("--reduce needs a formula");
    std::optional<Model> m;
    try {
        m = cfg.reduce ? build_for(cfg, amas, *f) : build_for(cfg, amas, f ? *f : f_const(true));
    } catch (const LimitExceeded& e) {
        std::cerr << "build stopped: " << e.what() << "\n";
        return kExitExhausted;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!dump.empty()) write_output(dump, model_to_json(*m).dump() + "\n");
    nlohmann::json stats{{"family", src.family()},
                         {"params", src.params()},
                         {"reduced", m->reduced()},
                         {"states", m->num_states()},
                         {"transitions", m->num_transitions()},
                         {"epsilon_states", m->num_epsilon_states()},
                         {"build_seconds", secs}};
    if (json) {
        std::cout << stats.dump(2) << "\n";
    } else {
        std::cout << "states:         " << m->num_states() << "\n"
                  << "transitions:    " << m->num_transitions() << "\n"
                  << "epsilon states: " << m->num_epsilon_states() << "\n"
                  << "reduced:        " << (m->reduced() ? "yes" : "no") << "\n"
                  << "build seconds:  " << secs << "\n";
    }
    return kExitOk;
}

// ── verify ──

int cmd_verify(const SourceArgs& sa, const EngineArgs& ea, bool json, bool witness) {
    RunConfig cfg = ea.config(sa.resolve());
    cfg.want_witness = witness;
    if (cfg.source.kind == ModelSource::Kind::Dump && cfg.reduce)
        throw ModelError("--reduce does not apply to a loaded model dump");
    RunReport r = run_verification(cfg);
    std::cout << (json ? report_to_json(r).dump(2) + "\n" : report_to_text(r));
    return r.exhausted() ? kExitExhausted : kExitOk;
}

// ── gen ──

int cmd_gen(const SourceArgs& sa, const std::string& out) {
    if (sa.family.empty()) throw ModelError("gen needs --family asv|selene");
    write_output(out, sa.family == "asv" ? asv_text(sa.asv) : selene_text(sa.selene));
    return kExitOk;
}

// ── bench ──

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

BenchPlan plan_from_matrix(const std::string& path, const EngineArgs& ea) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    BenchPlan plan;
    EngineArgs local = ea;
    if (j.contains("mode")) local.mode = j["mode"].get<std::string>();
    if (j.contains("variant")) local.variant = j["variant"].get<std::string>();
    plan.base = local.config({});
    if (j.contains("methods")) {
        plan.methods.clear();
        for (const auto& m : j["methods"]) plan.methods.push_back(parse_method(m.get<std::string>()));
    }
    for (const auto& row : j.value("rows", nlohmann::json::array())) {
        BenchRow r;
        r.params.V = row.value("V", 1);
        r.params.CV = row.value("CV", 1);
        r.params.C = row.value("C", 3);
        r.params.R = row.value("R", 3);
        r.formula = row.value("formula", std::string("vuln:1:R"));
        plan.rows.push_back(r);
    }
    return plan;
}

int cmd_bench(const std::string& matrix, const std::string& vs, const std::string& rs, int cv, int c,
              const std::string& formulas, const std::string& methods, const EngineArgs& ea,
              const std::string& format, const std::string& out, unsigned jobs) {
    BenchPlan plan;
    if (!matrix.empty()) {
        plan = plan_from_matrix(matrix, ea);
    } else {
        plan.base = ea.config({});
        plan.methods.clear();
        std::stringstream ms(methods);
        std::string m;
        while (std::getline(ms, m, ','))
            if (!m.empty()) plan.methods.push_back(parse_method(m));
        std::vector<std::string> fs;
        std::stringstream fss(formulas);
        std::string f;
        while (std::getline(fss, f, ','))
            if (!f.empty()) fs.push_back(f);
        for (int v : parse_int_list(vs))
            for (int r : parse_int_list(rs))
                for (const auto& fm : fs) plan.rows.push_back({{v, cv, c, r}, fm});
    }
    if (plan.methods.empty()) throw ModelError("bench needs at least one method");
    for (const auto& row : plan.rows) selene_text(row.params);  // validate params up front
    plan.jobs = std::max(1u, jobs);

    std::vector<BenchResult> results(plan.rows.size());
    if (plan.jobs == 1) {
        for (std::size_t i = 0; i < plan.rows.size(); ++i) results[i] = run_bench_row(plan, plan.rows[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr err;
        std::mutex mu;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < plan.jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < plan.rows.size();) {
                    try {
                        results[i] = run_bench_row(plan, plan.rows[i]);
                        results[i].contended = true;
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!err) err = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
    }

    bool exhausted = false;
    for (const auto& b : results)
        for (const auto* group : {&b.full, &b.reduced})
            for (const auto& r : *group) exhausted = exhausted || r.exhausted();

    std::string text;
    if (format == "csv") {
        text = csv_line(bench_header(plan.methods));
        for (const auto& b : results) text += csv_line(bench_csv_fields(b, plan.methods));
    } else {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& b : results) {
            nlohmann::json runs = nlohmann::json::array();
            for (const auto* group : {&b.full, &b.reduced})
                for (const auto& r : *group) runs.push_back(report_to_json(r));
            auto fields = bench_csv_fields(b, plan.methods);
            rows.push_back({{"result", fields[fields.size() - 2]}, {"contended", b.contended}, {"runs", runs}});
        }
        text = nlohmann::json{{"rows", rows}}.dump(2) + "\n";
    }
    write_output(out, text);
    return exhausted ? kExitExhausted : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"amasv: strategic-epistemic model checking for asynchronous multi-agent systems"};
    app.require_subcommand(1);

    auto* check = app.add_subcommand("check", "parse and validate a model file");
    std::string check_file;
    bool strict = false;
    check->add_option("file", check_file, "DSL model file")->required();
    check->add_flag("--strict", strict, "treat warnings as errors");

    auto* gen = app.add_subcommand("gen", "emit DSL text for a generated family");
    SourceArgs gen_src;
    std::string gen_out;
    gen_src.attach(gen);
    gen->add_option("-o,--output", gen_out, "output file (default stdout)");

    auto* build = app.add_subcommand("build", "build a model and print its size");
    SourceArgs build_src;
    EngineArgs build_eng;
    std::string dump;
    bool build_json = false;
    build_src.attach(build);
    build_eng.attach(build, false);
    build->add_option("--dump", dump, "write the model as JSON");
    build->add_flag("--json", build_json, "print statistics as JSON");

    auto* verify = app.add_subcommand("verify", "verify a formula");
    SourceArgs ver_src;
    EngineArgs ver_eng;
    bool ver_json = false, ver_witness = false;
    ver_src.attach(verify);
    ver_eng.attach(verify, true);
    verify->add_flag("--json", ver_json, "print the run report as JSON");
    verify->add_flag("--witness", ver_witness, "include the witness strategy");

    auto* bench = app.add_subcommand("bench", "run a SELENE benchmark matrix");
    EngineArgs bench_eng;
    std::string matrix, bench_v = "1", bench_r = "3", bench_formulas = "vuln:1:R", bench_methods = "dfs,parallel,approx",
                        format = "csv", bench_out;
    int bench_cv = 1, bench_c = 3;
    unsigned jobs = 1;
    bench_eng.attach(bench, false);
    bench->add_option("--matrix", matrix, "JSON matrix file");
    bench->add_option("--V", bench_v, "comma-separated plain voter counts");
    bench->add_option("--R", bench_r, "comma-separated revote counts");
    bench->add_option("--CV", bench_cv, "coerced voters");
    bench->add_option("--C", bench_c, "candidates");
    bench->add_option("--formulas", bench_formulas, "comma-separated vuln patterns (i and k may be C, R, R-1)");
    bench->add_option("--methods", bench_methods, "comma-separated methods");
    bench->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    bench->add_option("-o,--output", bench_out, "output file (default stdout)");
    bench->add_option("--jobs", jobs, "rows run in parallel (timings flagged as contended)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*check) return cmd_check(check_file, strict);
        if (*gen) return cmd_gen(gen_src, gen_out);
        if (*build) return cmd_build(build_src, build_eng, dump, build_json);
        if (*verify) return cmd_verify(ver_src, ver_eng, ver_json, ver_witness);
        if (*bench)
            return cmd_bench(matrix, bench_v, bench_r, bench_cv, bench_c, bench_formulas, bench_methods, bench_eng,
                             format, bench_out, jobs);
    } catch (const LimitExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitExhausted;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
