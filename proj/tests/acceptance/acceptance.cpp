// Acceptance run: one PASS/FAIL line per criterion, exit status 0 when every
// gating criterion passes. Criterion 10 needs a live backend and never gates.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "forge/analytics.hpp"
#include "forge/anchors.hpp"
#include "forge/config.hpp"
#include "forge/entailment.hpp"
#include "forge/error.hpp"
#include "forge/generator.hpp"
#include "forge/harness.hpp"
#include "forge_cli.hpp"
#include "oracles.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum Status { pass, fail, skip } status;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v, int digits = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    return cli::dispatch(args, out, err);
}

std::vector<std::string> prefix_text(const std::vector<Formula>& fs) {
    std::vector<std::string> out;
    for (const auto& f : fs) out.push_back(to_prefix(f));
    return out;
}

const KnowledgeBase& kb() {
    static const KnowledgeBase instance;
    return instance;
}

// Same shape as the selftest dataset: 8 per schema, offline reformulation.
std::vector<ProblemInstance> selftest_dataset() {
    GenerationConfig gc;
    gc.per_schema = 8;
    auto data = generate_dataset(gc, kb());
    for (auto& inst : data) inst = reformulate(inst, nullptr);
    return data;
}

const std::vector<std::string> kStrategies{"baseline", "far", "far-single", "zero-shot", "few-shot", "evidence"};

// ---------------------------------------------------------------------------

Outcome schema_soundness() {
    const auto start = std::chrono::steady_clock::now();
    int bad = 0;
    for (const auto& s : schema_catalog()) {
        AtomMap same;
        for (const auto& v : s.variables) same[v] = v;
        Argument inv = instantiate_invalid(s, same);
        bad += !entails(s.premises, s.conclusion);
        bad += entails(inv.premises, inv.conclusion);
        bad += !oracle::brute_force_entails(prefix_text(s.premises), to_prefix(s.conclusion));
        bad += oracle::brute_force_entails(prefix_text(inv.premises), to_prefix(inv.conclusion));
    }

    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<int> n_atoms(1, 6), n_premises(0, 4);
    int disagreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int atoms = n_atoms(rng);
        std::vector<std::string> text;
        std::vector<Formula> premises;
        for (int k = n_premises(rng); k > 0; --k) {
            text.push_back(oracle::random_formula(rng, atoms, 3));
            premises.push_back(parse_prefix(text.back()));
        }
        const std::string conclusion = oracle::random_formula(rng, atoms, 3);
        disagreements += entails(premises, parse_prefix(conclusion)) != oracle::brute_force_entails(text, conclusion);
    }
    const double secs = seconds_since(start);
    return verdict(bad == 0 && disagreements == 0 && secs < 5.0,
                   std::to_string(schema_catalog().size()) + " schemas with " + std::to_string(bad) +
                       " wrong verdicts; 1000 random arguments with " + std::to_string(disagreements) +
                       " disagreements; " + num(secs, 2) + " s");
}

Outcome knowledge_oracle() {
    const char* quantifiers[] = {"all", "some", "no", "some_not"};
    int cases = 0, disagreements = 0;
    for (const auto& t : default_triples()) {
        for (auto d : {Direction::forward, Direction::inverted}) {
            const bool fwd = d == Direction::forward;
            const std::set<int> a = fwd ? std::set<int>{1} : std::set<int>{1, 2};
            const std::set<int> b = fwd ? std::set<int>{1, 2} : std::set<int>{1};
            const SetModel m = build_model(t, d);
            for (auto q : quantifiers) {
                ++cases;
                disagreements +=
                    truth_of({parse_quantifier(q), t.a, t.b}, m) != oracle::quantifier_holds(q, a, b, 3);
            }
        }
    }
    return verdict(cases == 80 && disagreements == 0,
                   std::to_string(cases) + " cases, " + std::to_string(disagreements) + " disagreements");
}

Outcome balance() {
    const fs::path dir = fs::temp_directory_path() / "forge_acceptance_balance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto path = (dir / "d.jsonl").string();
    if (cli({"generate", "--per-schema", "200", "--out", path}) != 0) return {Outcome::fail, "generate failed"};
    const auto data = load_dataset(path);
    fs::remove_all(dir);

    std::map<SchemaName, std::array<int, 4>> counts;
    std::map<SchemaName, std::map<int, int>> templates;
    int mismatched = 0;
    for (const auto& inst : data) {
        auto& c = counts[inst.schema];
        ++c[0];
        c[1] += inst.validity == Validity::valid;
        c[2] += inst.alignment == Alignment::aligned;
        c[3] += inst.direction == Direction::forward;
        ++templates[inst.schema][inst.template_index];
        const bool valid = oracle::brute_force_entails(prefix_text(inst.premise_formulas()),
                                                       to_prefix(inst.conclusion.formula));
        mismatched += valid != (inst.validity == Validity::valid) || label_alignment(inst, kb()) != inst.alignment;
    }
    int unbalanced = 0;
    for (auto s : kAllSchemas) {
        const auto& c = counts[s];
        unbalanced += c[0] != 200 || c[1] != 100 || c[2] != 100 || c[3] != 100;
        for (int t = 1; t <= 4; ++t) unbalanced += templates[s][t] != 50;
    }
    return verdict(data.size() == 1800 && unbalanced == 0 && mismatched == 0,
                   std::to_string(data.size()) + " instances, " + std::to_string(unbalanced) +
                       " unbalanced schema counts, " + std::to_string(mismatched) + " label mismatches");
}

Outcome depth_expansion() {
    const SchemaName names[] = {SchemaName::MP, SchemaName::MT, SchemaName::HS, SchemaName::CD,
                                SchemaName::DD, SchemaName::BD, SchemaName::MI};
    GenerationConfig gc;
    gc.schemas = {std::begin(names), std::end(names)};
    gc.per_schema = 8;
    gc.seed = 404;
    const auto base = generate_dataset(gc, kb());
    const SetModel& facts = kb().model();

    int expanded = 0, validity_changed = 0, hidden = 0, conflicting_links = 0;
    for (const auto& inst : base) {
        std::vector<bool> false_base;
        for (const auto& p : inst.premises) {
            false_base.push_back(p.formula.kind() == Formula::Kind::implication &&
                                 !factual_truth(p.formula, inst.bindings, facts));
        }
        for (int d = 1; d <= 8; ++d) {
            const auto ex = expand_depth(inst, d, kb(), 1000 + d);
            ++expanded;
            const bool valid = oracle::brute_force_entails(prefix_text(ex.premise_formulas()),
                                                           to_prefix(ex.conclusion.formula));
            validity_changed += ex.validity != inst.validity || valid != (inst.validity == Validity::valid);
            for (std::size_t i = 0; i < false_base.size(); ++i) {
                if (!false_base[i]) continue;
                ++conflicting_links;
                // The chain replacing implication i runs from its antecedent to its consequent.
                const Formula& ante = inst.premises[i].formula.left();
                const Formula& cons = inst.premises[i].formula.right();
                std::map<std::string, Formula> next;
                for (const auto& p : ex.premises) {
                    if (p.formula.kind() == Formula::Kind::implication) next.emplace(to_prefix(p.formula.left()), p.formula);
                }
                bool false_link = false;
                std::string at = to_prefix(ante);
                for (std::size_t steps = 0; steps <= ex.premises.size(); ++steps) {
                    auto it = next.find(at);
                    if (it == next.end()) break;
                    false_link = false_link || !factual_truth(it->second, ex.bindings, facts);
                    at = to_prefix(it->second.right());
                    if (at == to_prefix(cons)) break;
                }
                hidden += !false_link;
            }
        }
    }
    return verdict(validity_changed == 0 && hidden == 0 && conflicting_links > 0,
                   std::to_string(expanded) + " expansions, " + std::to_string(validity_changed) +
                       " validity changes, " + std::to_string(conflicting_links) + " false base implications, " +
                       std::to_string(hidden) + " without a false chain link");
}

std::string flag_literal(const std::string& conclusion) {
    return "Is the following statement factually correct?\n\nstatement: " + conclusion +
           "\n\nAnswer only with Yes or No.";
}

std::string reason_literal(const ProblemInstance& inst) {
    std::string s =
        "Now, based on the  following premises, determine if the conclusion logically follows. Consider only the "
        "logical validity based on the\ngiven premises, regardless of whether the premises themselves are factually "
        "true.\nPremises:\n";
    for (std::size_t i = 0; i < inst.premises.size(); ++i) {
        s += (i ? "\n" : "") + std::to_string(i + 1) + ". " + inst.premises[i].text;
    }
    s += "\n\nConclusion: " + inst.conclusion.text +
         "\n\nDoes the conclusion logically follow from the premises? Answer with \"Yes\" or \"No\" and explain "
         "your reasoning step by step.";
    return s;
}

Outcome protocol_fidelity() {
    const auto data = selftest_dataset();
    std::map<std::string, const ProblemInstance*> by_id;
    for (const auto& inst : data) by_id[inst.id] = &inst;
    ScriptedOracle oracle(OraclePolicy::logical, oracle_facts(data));

    int transcripts = 0, wrong = 0;
    for (std::string s : {"far", "far-single"}) {
        EvalOptions eo;
        eo.strategy = parse_strategy(s);
        for (const auto& r : evaluate(data, oracle, eo)) {
            const auto& inst = *by_id.at(r.instance_id);
            for (const auto& t : r.transcripts) {
                ++transcripts;
                std::vector<std::string> users;
                for (const auto& m : t.messages) {
                    if (m.role == Role::user) users.push_back(m.content);
                }
                if (s == "far") {
                    wrong += users.size() != 2 || users[0] != flag_literal(inst.conclusion.text) ||
                             users[1] != reason_literal(inst);
                } else {
                    wrong += users.size() != 1;
                }
            }
        }
    }
    return verdict(data.size() == 72 && wrong == 0,
                   std::to_string(data.size()) + " instances, " + std::to_string(transcripts) + " transcripts, " +
                       std::to_string(wrong) + " deviating");
}

Outcome oracle_end_to_end() {
    const auto start = std::chrono::steady_clock::now();
    const auto data = selftest_dataset();
    const auto facts = oracle_facts(data);
    std::vector<std::string> misses;
    for (auto policy : {OraclePolicy::logical, OraclePolicy::factual, OraclePolicy::always_yes}) {
        ScriptedOracle oracle(policy, facts);
        for (const auto& s : kStrategies) {
            EvalOptions eo;
            eo.strategy = parse_strategy(s);
            // Two runs give the ± spread; scripted oracles must show none.
            std::vector<std::vector<EvalRecord>> runs{evaluate(data, oracle, eo), evaluate(data, oracle, eo)};
            const auto sum = summarize(runs).front();
            bool ok = false;
            if (policy == OraclePolicy::logical) {
                ok = sum.accuracy.mean == 1.0 && sum.accuracy.std == 0.0 && sum.gap.mean == 0.0 && sum.gap.std == 0.0;
            } else if (policy == OraclePolicy::factual) {
                ok = sum.gap.mean == 1.0 && sum.gap.std == 0.0 && sum.spd && sum.spd->mean == 100.0 && sum.spd->std == 0.0;
            } else {
                ok = sum.accuracy.mean == 0.5 && sum.accuracy.std == 0.0 && sum.spd && sum.spd->mean == 0.0 && sum.spd->std == 0.0;
            }
            if (!ok) misses.push_back(std::string(to_string(policy)) + "/" + s);
        }
    }
    const double secs = seconds_since(start);
    std::string detail = "3 oracles x " + std::to_string(kStrategies.size()) + " strategies, " + num(secs, 2) + " s";
    for (const auto& m : misses) detail += "; off: " + m;
    return verdict(misses.empty() && secs < 10.0, detail);
}

Outcome spd_contract() {
    const auto data = selftest_dataset();
    const auto facts = oracle_facts(data);
    ScriptedOracle factual(OraclePolicy::factual, facts), logical(OraclePolicy::logical, facts);
    EvalOptions eo;
    auto rs = evaluate(data, factual, eo);
    const auto mixed = evaluate(data, logical, eo);
    for (std::size_t i = 0; i < rs.size(); i += 3) rs[i] = mixed[i];
    const double before = spd(rs).spd;
    std::mt19937 rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Validity> labels;
        for (const auto& r : rs) labels.push_back(r.validity);
        std::shuffle(labels.begin(), labels.end(), rng);
        auto shuffled = rs;
        for (std::size_t i = 0; i < rs.size(); ++i) shuffled[i].validity = labels[i];
        worst = std::max(worst, std::abs(spd(shuffled).spd - before));
    }
    return verdict(worst == 0.0, "100 shuffles, SPD " + num(before, 2) + ", largest change " + num(worst, 6));
}

ReasoningChain chain_of(std::vector<std::string> sentences) {
    ReasoningChain c;
    c.sentences = std::move(sentences);
    return c;
}

class PoolBackend : public Backend {
public:
    explicit PoolBackend(std::vector<std::string> pool) : pool_(std::move(pool)) {}
    Completion complete(const Conversation&, const BackendParams&) override {
        count_call();
        std::lock_guard lock(mutex_);
        std::string text;
        for (int k = 0; k < 3; ++k) text += pool_[rng_() % pool_.size()] + " ";
        return {text, 0, 0, 0};
    }

private:
    std::vector<std::string> pool_;
    std::mt19937_64 rng_{9};
    std::mutex mutex_;
};

Outcome importance_algorithm() {
    TermFrequencyEmbedding tf;
    const std::string j = "Therefore the conclusion follows.";
    const auto with = chain_of({"Some setup.", j});
    const auto without = chain_of({"Some setup.", "Unrelated words entirely."});
    const std::vector<ReasoningChain> keep{with, with, with, without};
    const std::vector<ReasoningChain> remove{with, without, without, without};
    const double fixture = importance(j, keep, remove, 0.8, tf);
    const double same = importance(j, keep, keep, 0.8, tf);

    PoolBackend noisy({"Apply it.", "So the answer is yes.", "Hmm.", "Then apply it.", "Check again."});
    const auto m = importance_matrix(segment("A start. Then apply it. Check again. Hmm. So the answer is yes."), noisy, tf,
                                     {0.8, 6, {}});
    const bool bounded = (m.values.array() >= -1.0).all() && (m.values.array() <= 1.0).all();
    const bool default_t = ImportanceOptions{}.threshold == 0.8 && kDefaultMatchThreshold == 0.8;
    return verdict(fixture == 0.5 && same == 0.0 && bounded && default_t,
                   "fixture " + num(fixture) + ", identical sets " + num(same) + ", cells in [-1, 1]: " +
                       (bounded ? "yes" : "no") + ", default t " + num(ImportanceOptions{}.threshold, 1));
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "forge_acceptance_determinism";
    fs::remove_all(dir);
    for (const char* run : {"a", "b"}) {
        fs::create_directories(dir / run);
        if (cli({"generate", "--seed", "2024", "--per-schema", "16", "--depths", "0..3", "--out",
                 (dir / run / "generated.jsonl").string()}) != 0 ||
            cli({"selftest", "--seed", "2024", "--out", (dir / run).string()}) != 0) {
            fs::remove_all(dir);
            return {Outcome::fail, "a pipeline step failed"};
        }
    }
    int files = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        ++files;
        const std::string a = slurp(entry.path());
        differing += a.empty() || a != slurp(dir / "b" / entry.path().filename());
    }
    fs::remove_all(dir);
    return verdict(files == 5 && differing == 0,
                   std::to_string(files) + " files compared, " + std::to_string(differing) + " differ");
}

// Picks 5 instances from each (validity, alignment) cell of every schema: 180 in all.
std::vector<ProblemInstance> live_subset() {
    GenerationConfig gc;
    gc.per_schema = 24;
    gc.seed = 180;
    std::map<std::tuple<SchemaName, Validity, Alignment>, int> taken;
    std::vector<ProblemInstance> out;
    for (auto& inst : generate_dataset(gc, kb())) {
        if (taken[{inst.schema, inst.validity, inst.alignment}]++ < 5) out.push_back(std::move(inst));
    }
    return out;
}

Outcome live_backend() {
    const char* key = std::getenv("FORGE_API_KEY");
    if (!key || !*key) return {Outcome::skip, "FORGE_API_KEY not set"};
    const char* cfg_path = std::getenv("FORGE_ACCEPTANCE_CONFIG");
    Config cfg = load_config(cfg_path ? cfg_path : "");
    if (cfg.backend.kind != "http") return {Outcome::skip, "backend.kind is not http"};

    const auto data = live_subset();
    auto backend = make_backend(cfg, data);
    std::vector<std::vector<EvalRecord>> runs(1);
    std::size_t failures = 0;
    for (std::string s : {"baseline", "far"}) {
        EvalOptions eo;
        eo.strategy = parse_strategy(s);
        eo.protocol.params = cfg.backend.params;
        auto rs = evaluate(data, *backend, eo);
        for (auto& r : rs) {
            if (failed(r)) ++failures;
            else runs[0].push_back(std::move(r));
        }
    }
    std::cout << format_gap_table(summarize(runs));
    return verdict(data.size() == 180 && failures == 0,
                   std::to_string(data.size()) + " instances x 2 strategies, " + std::to_string(failures) + " failed");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"schema soundness", schema_soundness},
        {"knowledge-model oracle", knowledge_oracle},
        {"balance", balance},
        {"depth expansion", depth_expansion},
        {"protocol fidelity", protocol_fidelity},
        {"oracle end-to-end", oracle_end_to_end},
        {"SPD contract", spd_contract},
        {"importance algorithm", importance_algorithm},
        {"determinism", determinism},
        {"live backend (optional)", live_backend},
    };
    int gating_failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
        std::cout << "[" << tag << "] " << i + 1 << ". " << criteria[i].first << ": " << o.detail << std::endl;
        if (o.status == Outcome::fail && i + 1 < criteria.size()) ++gating_failures;
    }
    return gating_failures ? 1 : 0;
}
