#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "forge/entailment.hpp"
#include "forge/error.hpp"
#include "forge/generator.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

const KnowledgeBase& kb() {
    static const KnowledgeBase instance;
    return instance;
}

std::vector<ProblemInstance> small_dataset(std::uint64_t seed, std::vector<int> depths = {0}) {
    GenerationConfig cfg;
    cfg.per_schema = 8;
    cfg.seed = seed;
    cfg.depths = std::move(depths);
    cfg.strict_balance = false;
    return generate_dataset(cfg, kb());
}

bool entails_text(const ProblemInstance& inst) {
    std::vector<std::string> premises;
    for (const auto& p : inst.premises) premises.push_back(to_prefix(p.formula));
    return oracle::brute_force_entails(premises, to_prefix(inst.conclusion.formula));
}

}  // namespace

TEST_CASE("config validation") {
    GenerationConfig cfg;
    cfg.per_schema = 12;
    CHECK_THROWS_AS(generate_dataset(cfg, kb()), Error);
    try {
        generate_dataset(cfg, kb());
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::infeasible_balance);
    }
    cfg.per_schema = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.per_schema = 8;
    cfg.schemas = {SchemaName::MP, SchemaName::MP};
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("eight MP instances split exactly") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::MP};
    cfg.per_schema = 8;
    cfg.seed = 3;
    auto data = generate_dataset(cfg, kb());
    REQUIRE(data.size() == 8);
    int valid = 0, aligned = 0, forward = 0;
    std::map<int, int> templates;
    for (const auto& inst : data) {
        valid += inst.validity == Validity::valid;
        aligned += inst.alignment == Alignment::aligned;
        forward += inst.direction == Direction::forward;
        ++templates[inst.template_index];
    }
    CHECK(valid == 4);
    CHECK(aligned == 4);
    CHECK(forward == 4);
    for (int t = 1; t <= 4; ++t) CHECK(templates[t] == 2);
}

TEST_CASE("full default dataset is balanced and labels recompute") {
    GenerationConfig cfg;
    cfg.seed = 11;
    auto data = generate_dataset(cfg, kb());
    REQUIRE(data.size() == 1800);
    std::map<SchemaName, std::array<int, 4>> counts;
    std::map<SchemaName, std::map<int, int>> templates;
    std::set<std::string> ids;
    for (const auto& inst : data) {
        auto& c = counts[inst.schema];
        ++c[0];
        c[1] += inst.validity == Validity::valid;
        c[2] += inst.alignment == Alignment::aligned;
        c[3] += inst.direction == Direction::forward;
        ++templates[inst.schema][inst.template_index];
        CHECK((entails(inst.premise_formulas(), inst.conclusion.formula) ? Validity::valid : Validity::invalid) ==
              inst.validity);
        CHECK(label_alignment(inst, kb()) == inst.alignment);
        CHECK(factual_truth(inst.conclusion.formula, inst.bindings, kb().model()) == inst.conclusion_factual);
        ids.insert(inst.id);
    }
    CHECK(ids.size() == data.size());
    for (auto name : kAllSchemas) {
        CHECK(counts[name][0] == 200);
        CHECK(counts[name][1] == 100);
        CHECK(counts[name][2] == 100);
        CHECK(counts[name][3] == 100);
        for (int t = 1; t <= 4; ++t) CHECK(templates[name][t] == 50);
    }
}

TEST_CASE("validity labels agree with the brute-force checker") {
    for (const auto& inst : small_dataset(5, {0, 1, 2})) CHECK(entails_text(inst) == (inst.validity == Validity::valid));
}

TEST_CASE("generation is deterministic in the seed") {
    std::ostringstream a, b, c;
    write_dataset(a, small_dataset(42, {0, 2}));
    write_dataset(b, small_dataset(42, {0, 2}));
    write_dataset(c, small_dataset(43, {0, 2}));
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
}

TEST_CASE("aligned MT cannot take depth") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::MT};
    cfg.per_schema = 8;
    cfg.depths = {2};
    std::vector<std::string> notes;
    auto strict = generate_dataset(cfg, kb(), &notes);
    CHECK(notes.size() == 4);
    int aligned = 0;
    for (const auto& inst : strict) {
        aligned += inst.alignment == Alignment::aligned;
        CHECK(inst.depth == (inst.alignment == Alignment::aligned ? 0 : 2));
    }
    CHECK(aligned == 4);

    cfg.strict_balance = false;
    aligned = 0;
    for (const auto& inst : generate_dataset(cfg, kb())) {
        CHECK(inst.depth == 2);
        CHECK(label_alignment(inst, kb()) == inst.alignment);
        aligned += inst.alignment == Alignment::aligned;
    }
    CHECK(aligned == 0);
}

TEST_CASE("depth schedule holds for other implication schemas under strict balance") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::MP, SchemaName::HS, SchemaName::CD, SchemaName::DD, SchemaName::BD, SchemaName::MI,
                   SchemaName::DS, SchemaName::CT};
    cfg.per_schema = 16;
    cfg.depths = {0, 1, 2, 3};
    auto data = generate_dataset(cfg, kb());
    std::map<SchemaName, std::map<int, int>> depths;
    for (const auto& inst : data) {
        ++depths[inst.schema][inst.depth];
        CHECK(label_alignment(inst, kb()) == inst.alignment);
    }
    CHECK(depths[SchemaName::MP][3] == 4);
    CHECK(depths[SchemaName::DS][0] == 16);
    CHECK(depths[SchemaName::CT][0] == 16);
}

TEST_CASE("label_alignment follows premise and conclusion truth") {
    ProblemInstance inst;
    inst.schema = SchemaName::MP;
    inst.bindings["p"] = {Quantifier::all, "siameses", "cats"};
    inst.bindings["q"] = {Quantifier::all, "boeings", "planes"};
    inst.premises = {{implies(atom("p"), atom("q")), ""}, {atom("p"), ""}};
    inst.conclusion = {atom("q"), ""};
    CHECK(label_alignment(inst, kb()) == Alignment::aligned);

    inst.bindings["q"] = {Quantifier::some_not, "siameses", "cats"};
    CHECK(label_alignment(inst, kb()) == Alignment::conflicting);

    inst.bindings["q"] = {Quantifier::all, "boeings", "planes"};
    inst.premises[1].formula = !atom("p");
    CHECK(label_alignment(inst, kb()) == Alignment::conflicting);

    inst.bindings["q"] = {Quantifier::all, "unicorns", "planes"};
    CHECK_THROWS_AS(label_alignment(inst, kb()), Error);
}

TEST_CASE("expand_depth premise counts") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::MP, SchemaName::DD};
    cfg.per_schema = 8;
    auto data = generate_dataset(cfg, kb());
    const auto& mp = data.front();
    auto mp1 = expand_depth(mp, 1, kb(), 9);
    CHECK(mp1.premises.size() == 3);
    CHECK(mp1.depth == 1);
    CHECK(mp1.validity == mp.validity);
    CHECK(mp1.bindings.count("x1"));

    const auto& dd = data.back();
    REQUIRE(dd.schema == SchemaName::DD);
    auto dd2 = expand_depth(dd, std::vector<int>{1, 1}, kb(), 9);
    CHECK(dd2.premises.size() == 5);
    CHECK(dd2.depth == 2);
    CHECK(dd2.bindings.count("x1"));
    CHECK(dd2.bindings.count("y1"));
}

TEST_CASE("expand_depth errors") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::DS, SchemaName::MP};
    cfg.per_schema = 8;
    auto data = generate_dataset(cfg, kb());
    try {
        expand_depth(data.front(), 1, kb(), 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::schema_without_implication);
    }
    // Four atoms' worth of triples leaves too few true statements for 200 links.
    try {
        expand_depth(data.back(), 200, kb(), 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::pool_exhausted);
    }
}

TEST_CASE("expansion keeps validity and never hides a false implication") {
    const SchemaName names[] = {SchemaName::MP, SchemaName::MT, SchemaName::HS, SchemaName::CD,
                                SchemaName::DD, SchemaName::BD, SchemaName::MI};
    GenerationConfig cfg;
    cfg.schemas = {std::begin(names), std::end(names)};
    cfg.per_schema = 8;
    cfg.seed = 21;
    auto base = generate_dataset(cfg, kb());
    for (const auto& inst : base) {
        for (int d = 1; d <= 8; ++d) {
            auto ex = expand_depth(inst, d, kb(), static_cast<std::uint64_t>(d));
            CHECK(ex.validity == inst.validity);
            CHECK(entails_text(ex) == (inst.validity == Validity::valid));
            CHECK(ex.depth == inst.depth + d);
            CHECK(label_alignment(ex, kb()) == ex.alignment);
            // A base implication with a true antecedent and false consequent must
            // leave at least one false link among the premises that replaced it.
            for (const auto& p : inst.premises) {
                if (p.formula.kind() != Formula::Kind::implication) continue;
                const bool ante = factual_truth(p.formula.left(), inst.bindings, kb().model());
                const bool cons = factual_truth(p.formula.right(), inst.bindings, kb().model());
                if (!(ante && !cons)) continue;
                bool false_link = false;
                for (const auto& q : ex.premises) {
                    if (q.formula.kind() == Formula::Kind::implication &&
                        !factual_truth(q.formula, ex.bindings, kb().model())) {
                        false_link = true;
                    }
                }
                CHECK(false_link);
            }
            // Intermediates are true and come from triples the base does not use.
            std::set<std::string> base_entities;
            for (const auto& [id, s] : inst.bindings) base_entities.insert({s.subject, s.predicate});
            for (const auto& [id, s] : ex.bindings) {
                if (inst.bindings.count(id)) continue;
                CHECK(truth_of(s, kb().model()));
                CHECK_FALSE(base_entities.count(s.subject));
                CHECK_FALSE(base_entities.count(s.predicate));
            }
        }
    }
}

TEST_CASE("gibberize") {
    auto data = small_dataset(8);
    for (const auto& inst : data) {
        auto ready = reformulate(inst, nullptr);
        auto g = gibberize(ready, 77);
        CHECK(g.alignment == Alignment::gibberish);
        CHECK(g.validity == inst.validity);
        CHECK(g.premise_formulas() == inst.premise_formulas());
        CHECK(g.conclusion.formula == inst.conclusion.formula);
        CHECK(g == gibberize(ready, 77));
        CHECK(g.id != inst.id);

        std::map<std::string, std::string> forward;
        std::map<std::string, std::string> backward;
        for (const auto& [id, s] : inst.bindings) {
            const auto& t = g.bindings.at(id);
            CHECK(t.quantifier == s.quantifier);
            for (auto [from, to] : {std::pair{s.subject, t.subject}, std::pair{s.predicate, t.predicate}}) {
                CHECK(to.size() >= 4);
                CHECK(to.size() <= 8);
                auto [it, fresh] = forward.emplace(from, to);
                CHECK(it->second == to);
                auto [jt, fresh2] = backward.emplace(to, from);
                CHECK(jt->second == from);
            }
        }
        for (const auto& [from, to] : forward) {
            const std::string surface = surface_form(from);
            for (const auto& p : g.premises) CHECK(p.text.find(surface) == std::string::npos);
            CHECK(g.context.find(surface) == std::string::npos);
            CHECK(g.question.find(surface) == std::string::npos);
        }
    }
}

TEST_CASE("offline reformulation") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::MP};
    cfg.per_schema = 8;
    auto inst = generate_dataset(cfg, kb()).front();
    auto r = reformulate(inst, nullptr);
    CHECK(r.context.rfind("It's mentioned that ", 0) == 0);
    CHECK(r.context.find("Additionally, ") != std::string::npos);
    CHECK(r.question.rfind("Is it true that ", 0) == 0);
    CHECK(r.question.back() == '?');
    std::string second = inst.premises[1].text;
    second[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(second[0])));
    second.pop_back();
    CHECK(r.context.find(second) != std::string::npos);
}

namespace {

class CannedBackend : public Backend {
public:
    explicit CannedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    Completion complete(const Conversation& conv, const BackendParams&) override {
        count_call();
        last_prompt = std::string(conv.last_user());
        return {replies_.at(std::min(calls() - 1, replies_.size() - 1)), 0, 0, 0};
    }
    std::string last_prompt;

private:
    std::vector<std::string> replies_;
};

}  // namespace

TEST_CASE("backend reformulation") {
    GenerationConfig cfg;
    cfg.schemas = {SchemaName::MP};
    cfg.per_schema = 8;
    auto inst = generate_dataset(cfg, kb()).front();

    CannedBackend ok({"Sure:\n{\"context\": \"C\", \"question\": \"Q?\"}"});
    auto r = reformulate(inst, &ok);
    CHECK(r.context == "C");
    CHECK(r.question == "Q?");
    CHECK(ok.last_prompt.find("Make the premise into a context") != std::string::npos);

    CannedBackend second({"no json here", "{\"context\": \"C2\", \"question\": \"Q2\"}"});
    CHECK(reformulate(inst, &second).context == "C2");
    CHECK(second.calls() == 2);

    CannedBackend prose({"I cannot do that."});
    try {
        reformulate(inst, &prose);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::reformulation_failed);
    }
    CHECK(prose.calls() == 2);

    std::map<std::string, OracleFacts> facts{{inst.id, {true, true, "ctx", "q?"}}};
    ScriptedOracle oracle(OraclePolicy::logical, facts);
    auto o = reformulate(inst, &oracle);
    CHECK(o.context == "ctx");
    CHECK(o.question == "q?");
}

TEST_CASE("JSONL round trip is identity") {
    auto data = small_dataset(19, {0, 1, 3});
    for (auto& inst : data) inst = reformulate(inst, nullptr);
    data.push_back(gibberize(data.front(), 4));
    std::stringstream buffer;
    write_dataset(buffer, data);
    auto back = read_dataset(buffer);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(back[i] == data[i]);
}

TEST_CASE("parse_depths") {
    CHECK(parse_depths("0..3") == std::vector<int>{0, 1, 2, 3});
    CHECK(parse_depths("2") == std::vector<int>{2});
    CHECK(parse_depths("0,2,5") == std::vector<int>{0, 2, 5});
    CHECK_THROWS_AS(parse_depths("3..1"), Error);
    CHECK_THROWS_AS(parse_depths("a"), Error);
    CHECK_THROWS_AS(parse_depths("1,,2"), Error);
}
