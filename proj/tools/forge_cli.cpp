#include "forge_cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "forge/analytics.hpp"
#include "forge/anchors.hpp"
#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/generator.hpp"
#include "forge/harness.hpp"
#include "forge/prompts.hpp"

namespace forge::cli {

namespace {

namespace fs = std::filesystem;

std::vector<ProblemInstance> load_or_fail(const std::string& path) {
    auto data = load_dataset(path);
    if (data.empty()) throw Error(ErrorKind::io, "dataset '" + path + "' is empty");
    return data;
}

KnowledgeBase knowledge(const Config& cfg) {
    return cfg.triples.empty() ? KnowledgeBase{} : KnowledgeBase{load_triples(cfg.triples)};
}

std::string fixed(double v, int digits = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string config, out, schemas, depths, triples;
    int per_schema = 0;
    std::uint64_t seed = 0;
    bool relaxed = false;
};

int run_generate(CLI::App& cmd, const GenerateArgs& a, std::ostream& out, std::ostream& err) {
    Settings flags;
    if (cmd.count("--schemas")) flags["generation.schemas"] = a.schemas;
    if (cmd.count("--per-schema")) flags["generation.per_schema"] = std::to_string(a.per_schema);
    if (cmd.count("--depths")) flags["generation.depths"] = a.depths;
    if (cmd.count("--seed")) flags["generation.seed"] = std::to_string(a.seed);
    if (cmd.count("--triples")) flags["generation.triples"] = a.triples;
    if (a.relaxed) flags["generation.strict_balance"] = "false";
    Config cfg = load_config(a.config, flags);

    std::vector<std::string> notes;
    auto data = generate_dataset(cfg.generation, knowledge(cfg), &notes);
    save_dataset(a.out, data);
    for (const auto& n : notes) err << "note: " << n << '\n';
    out << "wrote " << data.size() << " instances (" << cfg.generation.schemas.size() << " schemas x "
        << cfg.generation.per_schema << ") to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct ReformulateArgs {
    std::string dataset, out, config;
    bool offline = false;
};

int run_reformulate(const ReformulateArgs& a, std::ostream& out, std::ostream& err) {
    auto data = load_or_fail(a.dataset);
    std::unique_ptr<Backend> backend;
    Config cfg;
    if (!a.offline) {
        cfg = load_config(a.config);
        backend = make_backend(cfg, data);
    }
    std::vector<ProblemInstance> result(data.size());
    std::vector<std::string> failures(data.size());
    parallel_for(data.size(), backend ? backend->max_inflight() : 1, [&](std::size_t i) {
        try {
            result[i] = reformulate(data[i], backend.get(), cfg.backend.params);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::reformulation_failed) throw;
            result[i] = data[i];
            failures[i] = e.what();
        }
    });
    save_dataset(a.out, result);
    std::size_t failed = 0;
    for (const auto& f : failures) {
        if (f.empty()) continue;
        ++failed;
        err << f << '\n';
    }
    out << "reformulated " << data.size() - failed << " of " << data.size() << " instances ("
        << (backend ? "backend" : "offline template") << ") into " << a.out << '\n';
    return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string dataset, strategy = "baseline", config, out, policy;
    int samples = 0, shots = 4;
    std::size_t workers = 0;
    bool use_context = false;
};

int run_evaluate(CLI::App& cmd, const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    auto data = load_or_fail(a.dataset);
    Settings flags;
    if (cmd.count("--samples")) flags["backend.samples"] = std::to_string(a.samples);
    if (cmd.count("--policy")) flags["backend.policy"] = a.policy;
    Config cfg = load_config(a.config, flags);
    auto backend = make_backend(cfg, data);

    EvalOptions eo;
    eo.strategy = parse_strategy(a.strategy);
    eo.strategy.shots = a.shots;
    eo.protocol.params = cfg.backend.params;
    eo.protocol.use_context = a.use_context;
    eo.workers = a.workers;
    auto run = evaluate_to_file(data, *backend, eo, a.out);

    for (const auto& f : run.failures) {
        err << f.instance_id << ": " << (f.errors.empty() ? "failed" : f.errors.front()) << '\n';
    }
    const std::string name = eo.strategy.name();
    std::vector<EvalRecord> mine;
    for (const auto& r : run.records) {
        if (r.strategy == name) mine.push_back(r);
    }
    out << "strategy " << name << ": " << mine.size() << " records (" << run.resumed << " resumed, "
        << run.failures.size() << " failed) in " << a.out << '\n';
    try {
        auto st = accuracy_stats(mine);
        out << "accuracy " << fixed(st.accuracy()) << " (" << st.correct << "/" << st.total << ", "
            << st.unparseable << " unparseable)\n";
    } catch (const Error&) {
    }
    return run.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::vector<std::string> records;
    std::string report;
};

int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
    std::vector<std::vector<EvalRecord>> runs;
    for (const auto& path : a.records) runs.push_back(load_records(path));
    write_report(a.report, runs);
    out << format_gap_table(summarize(runs));
    out << "report written to " << a.report << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct AnchorsArgs {
    std::string record, instance, config, out, categories;
    std::size_t sample = 0;
    double t = kDefaultMatchThreshold;
    int rollouts = kDefaultRollouts;
};

int run_anchors(const AnchorsArgs& a, std::ostream& out, std::ostream& err) {
    auto records = load_records(a.record);
    const EvalRecord* chosen = nullptr;
    for (const auto& r : records) {
        if (r.skipped || r.transcripts.empty()) continue;
        if (a.instance.empty() || r.instance_id == a.instance) {
            chosen = &r;
            break;
        }
    }
    if (!chosen) throw Error(ErrorKind::precondition, "no usable record" + (a.instance.empty() ? "" : " for " + a.instance));
    if (a.sample >= chosen->transcripts.size()) throw Error(ErrorKind::precondition, "sample index out of range");
    const Conversation& conv = chosen->transcripts[a.sample];
    if (conv.messages.empty() || conv.messages.back().role != Role::assistant) {
        throw Error(ErrorKind::precondition, "transcript has no final reply to analyse");
    }

    Config cfg = load_config(a.config);
    auto backend = make_backend(cfg, {});
    auto embed = make_embedding(cfg);

    ReasoningChain chain = segment(conv.messages.back().content);
    ImportanceOptions io;
    io.threshold = a.t;
    io.count = a.rollouts;
    io.rollout.params = cfg.backend.params;
    io.rollout.tag = chosen->instance_id;
    io.rollout.context.assign(conv.messages.begin(), conv.messages.end() - 1);
    auto matrix = importance_matrix(chain, *backend, *embed, io);

    std::ofstream mout(a.out);
    if (!mout) throw Error(ErrorKind::io, "cannot write '" + a.out + "'");
    write_matrix_csv(mout, matrix);
    out << chain.size() << " sentences, " << a.rollouts << " rollouts per condition, t = " << a.t << "; matrix in "
        << a.out << '\n';
    if (matrix.failed_rollouts) err << matrix.failed_rollouts << " rollouts failed and were left out\n";

    if (!a.categories.empty()) {
        auto labelled = categorize(chain, *backend, cfg.backend.params);
        std::ofstream cout_(a.categories);
        if (!cout_) throw Error(ErrorKind::io, "cannot write '" + a.categories + "'");
        write_category_csv(cout_, category_report(matrix, labelled.chain));
        out << "category report in " << a.categories << " (" << labelled.unknown << " sentences unlabeled)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SelftestArgs {
    std::uint64_t seed = 0;
    std::string out;
};

int run_selftest(const SelftestArgs& a, std::ostream& out) {
    GenerationConfig gc;
    gc.per_schema = 8;
    gc.seed = a.seed;
    auto data = generate_dataset(gc, KnowledgeBase{});
    for (auto& inst : data) inst = reformulate(inst, nullptr);

    const std::vector<std::string> strategies{"baseline", "far", "far-single", "zero-shot", "few-shot", "evidence"};
    bool all_ok = true;
    auto check = [&](bool ok, const std::string& what) {
        out << (ok ? "ok    " : "FAIL  ") << what << '\n';
        all_ok = all_ok && ok;
    };

    if (!a.out.empty()) {
        fs::create_directories(a.out);
        save_dataset((fs::path(a.out) / "dataset.jsonl").string(), data);
    }
    out << "selftest: " << data.size() << " instances, seed " << a.seed << '\n';

    for (auto policy : {OraclePolicy::logical, OraclePolicy::factual, OraclePolicy::always_yes}) {
        ScriptedOracle oracle(policy, oracle_facts(data));
        std::vector<EvalRecord> all;
        for (const auto& s : strategies) {
            EvalOptions eo;
            eo.strategy = parse_strategy(s);
            auto rs = evaluate(data, oracle, eo);
            const std::string tag = std::string(to_string(policy)) + " / " + eo.strategy.name();
            const double acc = accuracy(rs);
            if (policy == OraclePolicy::logical) {
                check(acc == 1.0 && gap(rs).gap() == 0.0, tag + ": accuracy " + fixed(acc) + ", gap " + fixed(gap(rs).gap()));
            } else if (policy == OraclePolicy::factual) {
                const double g = gap(rs).gap(), p = spd(rs).spd;
                check(g == 1.0 && p == 100.0, tag + ": valid-subset gap " + fixed(g) + ", spd " + fixed(p, 1));
            } else {
                const double p = spd(rs).spd;
                check(acc == 0.5 && p == 0.0, tag + ": accuracy " + fixed(acc) + ", spd " + fixed(p, 1));
            }
            if (eo.strategy.kind == StrategyKind::far_two_stage || eo.strategy.kind == StrategyKind::far_single_prompt) {
                const bool two = eo.strategy.kind == StrategyKind::far_two_stage;
                std::map<std::string, const ProblemInstance*> by_id;
                for (const auto& inst : data) by_id[inst.id] = &inst;
                bool ok = true;
                for (const auto& r : rs) {
                    const std::string flag = prompts::flag(by_id.at(r.instance_id)->conclusion.text);
                    for (const auto& t : r.transcripts) {
                        ok = ok && t.count(Role::user) == (two ? 2u : 1u) &&
                             t.messages.front().content.find(flag) != std::string::npos;
                    }
                }
                check(ok, tag + ": transcripts carry the flag question in " + (two ? "two user turns" : "one user turn"));
            }
            all.insert(all.end(), rs.begin(), rs.end());
        }
        if (!a.out.empty()) {
            save_records((fs::path(a.out) / ("records-" + std::string(to_string(policy)) + ".jsonl")).string(), all);
        }
    }
    out << (all_ok ? "selftest passed\n" : "selftest FAILED\n");
    return all_ok ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Counterfactual logical-reasoning benchmark toolkit", "forge"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Build a balanced dataset");
    gen->add_option("--out", ga.out, "Output JSONL file")->required();
    gen->add_option("--schemas", ga.schemas, "Comma-separated schema names or 'all'");
    gen->add_option("--per-schema", ga.per_schema, "Instances per schema (multiple of 8)");
    gen->add_option("--depths", ga.depths, "Depths as a range 0..3 or a list 0,2,5");
    gen->add_option("--seed", ga.seed, "Random seed");
    gen->add_option("--triples", ga.triples, "Entity triple catalog (TSV)");
    gen->add_flag("--relaxed-balance", ga.relaxed, "Keep requested depths even where alignment balance breaks");
    gen->add_option("--config", ga.config, "Configuration file");

    ReformulateArgs ra;
    auto* ref = app.add_subcommand("reformulate", "Add a context paragraph and question to each instance");
    ref->add_option("--dataset", ra.dataset, "Input JSONL dataset")->required();
    ref->add_option("--out", ra.out, "Output JSONL dataset")->required();
    auto* ref_cfg = ref->add_option("--backend,--config", ra.config, "Backend configuration file");
    ref->add_flag("--offline", ra.offline, "Use the deterministic template instead of a backend")->excludes(ref_cfg);

    EvaluateArgs ea;
    auto* ev = app.add_subcommand("evaluate", "Run a prompting strategy over a dataset");
    ev->add_option("--dataset", ea.dataset, "Input JSONL dataset")->required();
    ev->add_option("--out", ea.out, "Record file (JSONL); existing records are kept and skipped")->required();
    ev->add_option("--strategy", ea.strategy,
                   "baseline | far | far-single | zero-shot | few-shot | evidence[-support|-negate|-both]");
    ev->add_option("--backend,--config", ea.config, "Backend configuration file (default: scripted logical oracle)");
    ev->add_option("--policy", ea.policy, "Scripted oracle policy override");
    ev->add_option("--samples", ea.samples, "Self-consistency samples per prompt");
    ev->add_option("--shots", ea.shots, "Few-shot exemplar count");
    ev->add_option("--workers", ea.workers, "Concurrent instances (default: backend in-flight cap)");
    ev->add_flag("--use-context", ea.use_context, "Ask with the reformulated context and question");

    AnalyzeArgs aa;
    auto* an = app.add_subcommand("analyze", "Accuracy, gap, SPD and breakdown tables");
    an->add_option("--records", aa.records, "Record files; several files are treated as repeated runs")
        ->required()
        ->expected(1, -1);
    an->add_option("--report", aa.report, "Output directory")->required();

    AnchorsArgs ka;
    auto* anc = app.add_subcommand("anchors", "Sentence importance matrix for one reasoning trace");
    anc->add_option("--record", ka.record, "Record file (JSONL)")->required();
    anc->add_option("--instance", ka.instance, "Instance id (default: first record)");
    anc->add_option("--sample", ka.sample, "Transcript index within the record");
    anc->add_option("--backend,--config", ka.config, "Backend configuration file");
    anc->add_option("--t", ka.t, "Match threshold")->check(CLI::Range(-1.0, 1.0));
    anc->add_option("--rollouts", ka.rollouts, "Rollouts per condition")->check(CLI::PositiveNumber);
    anc->add_option("--out", ka.out, "Matrix CSV")->required();
    anc->add_option("--categories", ka.categories, "Also label sentences and write the category report CSV here");

    SelftestArgs sa;
    auto* st = app.add_subcommand("selftest", "Scripted-oracle pipeline on 72 instances");
    st->add_option("--seed", sa.seed, "Random seed");
    st->add_option("--out", sa.out, "Directory for the dataset and record files");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return 2;
    }

    try {
        if (gen->parsed()) return run_generate(*gen, ga, out, err);
        if (ref->parsed()) return run_reformulate(ra, out, err);
        if (ev->parsed()) return run_evaluate(*ev, ea, out, err);
        if (an->parsed()) return run_analyze(aa, out);
        if (anc->parsed()) return run_anchors(ka, out, err);
        if (st->parsed()) return run_selftest(sa, out);
    } catch (const Error& e) {
        err << "forge: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "forge: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace forge::cli
