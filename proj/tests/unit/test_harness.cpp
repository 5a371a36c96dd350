#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/generator.hpp"
#include "forge/harness.hpp"

using namespace forge;

namespace {

std::vector<ProblemInstance> dataset() {
    static const auto data = [] {
        GenerationConfig cfg;
        cfg.per_schema = 8;
        cfg.seed = 99;
        return generate_dataset(cfg, KnowledgeBase{});
    }();
    return data;
}

std::string flag_prompt_literal(const std::string& conclusion) {
    return "Is the following statement factually correct?\n\nstatement: " + conclusion + "\n\nAnswer only with Yes or No.";
}

// Replies from a fixed list, cycling; optional failure on selected calls.
class ListBackend : public Backend {
public:
    explicit ListBackend(std::vector<std::string> replies, int fail_every = 0)
        : replies_(std::move(replies)), fail_every_(fail_every) {}
    Completion complete(const Conversation&, const BackendParams&) override {
        count_call();
        const auto n = next_++;
        if (fail_every_ && (n + 1) % fail_every_ == 0) throw Error(ErrorKind::exhausted_retries, "boom");
        return {replies_[n % replies_.size()], 1, 1, 2.5};
    }

private:
    std::vector<std::string> replies_;
    int fail_every_;
    std::atomic<std::size_t> next_{0};
};

ProtocolOptions opts(int samples = 3) {
    ProtocolOptions o;
    o.params.samples = samples;
    return o;
}

}  // namespace

TEST_CASE("parse_answer") {
    CHECK(parse_answer("...Therefore, Yes.") == Answer::yes);
    CHECK(parse_answer("No, the conclusion does not follow") == Answer::no);
    CHECK(parse_answer("It depends") == Answer::unparseable);
    CHECK(parse_answer("yes at first, but on reflection NO") == Answer::no);
    CHECK(parse_answer("The answer is \"No\" according to you, but I say yes") == Answer::yes);
    CHECK(parse_answer("Yes. The premise says “no cats are felines”") == Answer::yes);
    CHECK(parse_answer("Nothing is known, yesterday notwithstanding") == Answer::unparseable);
    CHECK(parse_answer("**Yes**") == Answer::yes);
    CHECK(parse_answer("") == Answer::unparseable);
    CHECK(parse_answer("yes \"unterminated no") == Answer::no);
}

TEST_CASE("single-prompt parsing") {
    CHECK(parse_single_verdict("Statement: No\nConclusion follows: Yes") == Answer::yes);
    CHECK(parse_single_flag("Statement: No\nConclusion follows: Yes") == Answer::no);
    CHECK(parse_single_verdict("No, that statement is wrong.") == Answer::unparseable);
    CHECK(parse_single_verdict("conclusion follows: maybe") == Answer::unparseable);
}

TEST_CASE("self_consistency") {
    using A = Answer;
    CHECK(self_consistency({A::yes, A::yes, A::no}) == A::yes);
    CHECK(self_consistency({A::yes, A::no}) == A::unparseable);
    CHECK(self_consistency({A::unparseable, A::no, A::no}) == A::no);
    CHECK(self_consistency({A::unparseable, A::unparseable}) == A::unparseable);
    CHECK(self_consistency({}) == A::unparseable);
}

TEST_CASE("strategy names") {
    CHECK(parse_strategy("baseline").kind == StrategyKind::standard_cot);
    CHECK(parse_strategy("far").name() == "far-two-stage");
    CHECK(parse_strategy("far-single").name() == "far-single-prompt");
    CHECK(parse_strategy("evidence").name() == "evidence-both");
    CHECK(parse_strategy("evidence-negate").evidence == EvidenceMode::negate);
    CHECK_THROWS_AS(parse_strategy("cot++"), Error);
}

TEST_CASE("baseline with oracles") {
    auto data = dataset();
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    ScriptedOracle yes(OraclePolicy::always_yes);
    for (const auto& inst : data) {
        auto r = run_baseline(inst, logical, opts());
        CHECK(r.correct);
        CHECK(r.answers.size() == 3);
        CHECK(r.transcripts.size() == 3);
        CHECK(r.transcripts[0].count(Role::user) == 1);
        CHECK_FALSE(r.flag_answer);
        CHECK(r.transcripts[0].messages[0].content.find("regardless of whether the premises themselves are factually true") !=
              std::string::npos);
        auto y = run_baseline(inst, yes, opts(1));
        CHECK(y.correct == (inst.validity == Validity::valid));
    }
    ListBackend shrug({"It depends"});
    auto r = run_baseline(data.front(), shrug, opts());
    CHECK(r.verdict == Answer::unparseable);
    CHECK_FALSE(r.correct);
}

TEST_CASE("far two-stage protocol") {
    auto data = dataset();
    ScriptedOracle factual(OraclePolicy::factual, oracle_facts(data));
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    for (const auto& inst : data) {
        auto r = run_far(inst, logical, opts());
        CHECK(r.correct);
        REQUIRE(r.transcripts.size() == 3);
        for (const auto& t : r.transcripts) {
            CHECK(t.count(Role::user) == 2);
            CHECK(t.count(Role::assistant) == 2);
            CHECK(t.messages[0].content == flag_prompt_literal(inst.conclusion.text));
            CHECK(t.messages[2].content.rfind("Now, based on the  following premises", 0) == 0);
        }
        auto f = run_far(inst, factual, opts());
        REQUIRE(f.flag_answer);
        CHECK(*f.flag_answer == (inst.conclusion_factual ? Answer::yes : Answer::no));
        if (inst.alignment == Alignment::conflicting) CHECK(*f.flag_answer == Answer::no);
    }

    std::map<std::string, TableEntry> table{{data[0].id, {"Yes", "No"}}};
    ScriptedOracle scripted(OraclePolicy::table, {}, table);
    auto r = run_far(data[0], scripted, opts());
    CHECK(r.verdict == Answer::yes);
    CHECK(*r.flag_answer == Answer::no);
}

TEST_CASE("far single prompt") {
    auto data = dataset();
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    for (const auto& inst : data) {
        auto r = run_far_single(inst, logical, opts());
        CHECK(r.correct);
        for (const auto& t : r.transcripts) {
            CHECK(t.count(Role::user) == 1);
            CHECK(t.messages[0].content.find(flag_prompt_literal(inst.conclusion.text)) != std::string::npos);
        }
    }
    std::map<std::string, TableEntry> table{{data[0].id, {"No, the statement is false.", ""}}};
    ScriptedOracle flag_only(OraclePolicy::table, {}, table);
    CHECK(run_far_single(data[0], flag_only, opts()).verdict == Answer::unparseable);
}

TEST_CASE("zero-shot and few-shot") {
    auto data = dataset();
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    auto pool = ExemplarPool::standard();
    for (const auto& inst : data) {
        CHECK(run_zero_shot(inst, logical, opts()).correct);
        auto ex = pool.select(inst, 4);
        REQUIRE(ex.size() == 4);
        CHECK(std::count_if(ex.begin(), ex.end(), [](const auto& e) { return e.follows; }) == 2);
        auto r = run_few_shot(inst, logical, opts(), ex);
        CHECK(r.correct);
        CHECK(r.transcripts[0].messages[0].content.find("Example 4:") != std::string::npos);
    }
    // Exemplars avoid the target's entities when the pool allows.
    const auto& mp = data.front();
    std::set<std::string> mine;
    for (const auto& [id, s] : mp.bindings) mine.insert({s.subject, s.predicate});
    for (const auto& e : pool.select(mp, 4)) {
        for (const auto& p : e.premises) {
            for (const auto& m : mine) CHECK(p.find(" " + surface_form(m)) == std::string::npos);
        }
    }
    CHECK(pool.select(mp, 4).front().premises == pool.select(mp, 4).front().premises);
}

TEST_CASE("evidence") {
    auto data = dataset();
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    for (const auto& inst : data) {
        auto r = run_evidence(inst, logical, opts(), EvidenceMode::negate);
        CHECK(r.correct);
        CHECK(r.evidence_mode == "negate");
        CHECK(r.strategy == "evidence-negate");
        REQUIRE(r.evidence.size() == 1);
        CHECK(r.transcripts[0].messages[0].content.find(r.evidence[0]) != std::string::npos);
        CHECK(r.transcripts[0].messages[0].content.find("fabricated") != std::string::npos);
    }
    auto both = run_evidence(data[0], logical, opts(), EvidenceMode::both);
    CHECK(both.evidence.size() == 2);

    try {
        run_evidence(data[0], logical, opts(), EvidenceMode::support, {});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::missing_evidence);
    }
    ListBackend broken({"x"}, 1);
    auto skipped = run_evidence(data[0], broken, opts(), EvidenceMode::support);
    CHECK(skipped.skipped);
    CHECK(skipped.skip_reason.find("evidence generation failed") != std::string::npos);
    ListBackend blank({"   "});
    CHECK(run_evidence(data[0], blank, opts(), EvidenceMode::support).skipped);
}

TEST_CASE("backend errors land in the record") {
    auto data = dataset();
    ListBackend flaky({"Yes"}, 3);
    auto r = run_baseline(data[0], flaky, opts(3));
    CHECK(r.answers.size() == 3);
    CHECK(r.errors.size() == 1);
    CHECK(std::count(r.answers.begin(), r.answers.end(), Answer::unparseable) == 1);
    CHECK(r.latency_ms == doctest::Approx(5.0));
    CHECK_FALSE(failed(r));

    ListBackend dead({"Yes"}, 1);
    auto d = run_far(data[0], dead, opts(2));
    CHECK(d.errors.size() == 2);
    CHECK(failed(d));
}

TEST_CASE("record round trip") {
    auto data = dataset();
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    std::vector<EvalRecord> records{run_far(data[0], logical, opts()),
                                    run_evidence(data[1], logical, opts(), EvidenceMode::both),
                                    run_baseline(data[2], logical, opts())};
    std::stringstream buffer;
    write_records(buffer, records);
    auto back = read_records(buffer);
    REQUIRE(back.size() == 3);
    std::stringstream again;
    write_records(again, back);
    std::stringstream first;
    write_records(first, records);
    CHECK(again.str() == first.str());
    CHECK(back[0].flag_answer == records[0].flag_answer);
    CHECK(back[1].evidence == records[1].evidence);
}

TEST_CASE("evaluate is ordered, deterministic and resumable") {
    auto data = dataset();
    ScriptedOracle logical(OraclePolicy::logical, oracle_facts(data));
    EvalOptions eo;
    eo.strategy = parse_strategy("far");
    auto a = evaluate(data, logical, eo);
    auto b = evaluate(data, logical, eo);
    REQUIRE(a.size() == data.size());
    std::stringstream sa, sb;
    write_records(sa, a);
    write_records(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(std::is_sorted(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.key() < y.key(); }));

    const auto dir = std::filesystem::temp_directory_path() / "forge_test_harness";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "records.jsonl").string();
    std::filesystem::remove(path);
    std::vector<ProblemInstance> half(data.begin(), data.begin() + 30);
    auto first = evaluate_to_file(half, logical, eo, path);
    CHECK(first.records.size() == 30);
    CHECK(first.resumed == 0);
    const auto calls = logical.calls();
    auto second = evaluate_to_file(data, logical, eo, path);
    CHECK(second.resumed == 30);
    CHECK(second.records.size() == data.size());
    CHECK(logical.calls() - calls == (data.size() - 30) * 6);
    std::ifstream in(path);
    std::stringstream whole;
    whole << in.rdbuf();
    CHECK(whole.str() == sa.str());

    EvalOptions fs;
    fs.strategy = parse_strategy("few-shot");
    for (const auto& r : evaluate(half, logical, fs)) CHECK(r.correct);
    auto other = evaluate_to_file(half, logical, fs, path);
    CHECK(other.resumed == 0);
    CHECK(other.records.size() == data.size() + 30);
    std::filesystem::remove_all(dir);
}
