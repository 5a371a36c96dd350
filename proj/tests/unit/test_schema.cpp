#include <doctest.h>

#include "forge/entailment.hpp"
#include "forge/error.hpp"
#include "forge/schema.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

std::vector<std::string> text(const std::vector<Formula>& fs) {
    std::vector<std::string> out;
    for (const auto& f : fs) out.push_back(to_prefix(f));
    return out;
}

AtomMap identity(const Schema& s) {
    AtomMap m;
    for (const auto& v : s.variables) m[v] = v;
    return m;
}

}  // namespace

TEST_CASE("catalog: nine schemas in canonical forms") {
    REQUIRE(schema_catalog().size() == 9);
    CHECK(text(schema(SchemaName::MP).premises) == std::vector<std::string>{"(-> p q)", "p"});
    CHECK(to_prefix(schema(SchemaName::HS).conclusion) == "(-> p r)");
    CHECK(to_prefix(schema(SchemaName::CT).conclusion) == "(or q p)");
    CHECK(to_prefix(schema(SchemaName::MI).conclusion) == "(or (not p) q)");
    CHECK(text(schema(SchemaName::BD).premises) == std::vector<std::string>{"(-> p q)", "(-> r s)", "(or p (not s))"});
    CHECK(to_prefix(schema(SchemaName::BD).conclusion) == "(or q (not r))");
    CHECK(to_prefix(schema(SchemaName::DD).conclusion) == "(or (not p) (not r))");
    for (const auto& s : schema_catalog()) {
        CHECK(parse_schema_name(to_string(s.name)) == s.name);
    }
}

TEST_CASE("every schema is valid and every invalidated variant is not") {
    for (const auto& s : schema_catalog()) {
        CAPTURE(to_string(s.name));
        CHECK(entails(s.premises, s.conclusion));
        CHECK(oracle::brute_force_entails(text(s.premises), to_prefix(s.conclusion)));
        Argument bad = instantiate_invalid(s, identity(s));
        CHECK(bad.premises == s.premises);
        CHECK_FALSE(entails(bad.premises, bad.conclusion));
        CHECK_FALSE(oracle::brute_force_entails(text(bad.premises), to_prefix(bad.conclusion)));
    }
}

TEST_CASE("negation groups follow the formulas") {
    std::vector<std::string> with;
    for (const auto& s : schema_catalog()) {
        if (s.has_negation()) with.emplace_back(to_string(s.name));
    }
    CHECK(with == std::vector<std::string>{"MT", "DS", "DD", "BD", "MI"});
}

TEST_CASE("instantiate_valid renames and keeps validity") {
    Argument mp = instantiate_valid(schema(SchemaName::MP), {{"p", "s1"}, {"q", "s2"}});
    CHECK(text(mp.premises) == std::vector<std::string>{"(-> s1 s2)", "s1"});
    CHECK(to_prefix(mp.conclusion) == "s2");
    CHECK(entails(mp.premises, mp.conclusion));

    Argument hs = instantiate_valid(schema(SchemaName::HS), {{"p", "f1"}, {"q", "f2"}, {"r", "f3"}});
    CHECK(entails(hs.premises, hs.conclusion));

    Argument ct = instantiate_valid(schema(SchemaName::CT), {{"p", "s1"}, {"q", "s2"}});
    CHECK(text(ct.premises) == std::vector<std::string>{"s1"});
    CHECK(to_prefix(ct.conclusion) == "(or s2 s1)");
    CHECK(entails(ct.premises, ct.conclusion));
}

TEST_CASE("instantiate_valid rejects non-injective or partial substitutions") {
    CHECK_THROWS_AS(instantiate_valid(schema(SchemaName::MP), {{"p", "s"}, {"q", "s"}}), Error);
    CHECK_THROWS_AS(instantiate_valid(schema(SchemaName::MP), {{"p", "s"}}), Error);
}

TEST_CASE("instantiate_invalid replaces conclusion atoms") {
    Argument mp = instantiate_invalid(schema(SchemaName::MP), {{"p", "p"}, {"q", "q"}});
    CHECK(to_prefix(mp.conclusion) == "q'");
    CHECK_FALSE(entails(mp.premises, mp.conclusion));

    Argument ds = instantiate_invalid(schema(SchemaName::DS), {{"p", "p"}, {"q", "q"}});
    CHECK(to_prefix(ds.conclusion) == "q'");
    CHECK(eval_formula(ds.premises[0], {{"p", false}, {"q", true}}));
    CHECK_FALSE(entails(ds.premises, ds.conclusion));

    Argument mi = instantiate_invalid(schema(SchemaName::MI), {{"p", "p"}, {"q", "q"}});
    CHECK(to_prefix(mi.conclusion) == "(or (not p') q')");
    CHECK_FALSE(entails(mi.premises, mi.conclusion));
}

TEST_CASE("instantiate_invalid detects fresh-atom collisions") {
    const Schema& mp = schema(SchemaName::MP);
    try {
        instantiate_invalid(mp, {{"p", "a"}, {"q", "b"}}, {{"q", "a"}});
        FAIL("expected collision");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::fresh_atom_collision);
    }
    const Schema& ct = schema(SchemaName::CT);
    CHECK_THROWS_AS(instantiate_invalid(ct, {{"p", "a"}, {"q", "b"}}, {{"p", "z"}, {"q", "z"}}), Error);
}

TEST_CASE("expand_implication builds the chain in place") {
    const Schema& mp = schema(SchemaName::MP);
    auto out = expand_implication(mp.premises, mp.premises[0], {"x1"});
    CHECK(text(out) == std::vector<std::string>{"(-> p x1)", "(-> x1 q)", "p"});
    CHECK(entails(out, mp.conclusion));

    const Schema& dd = schema(SchemaName::DD);
    auto once = expand_implication(dd.premises, dd.premises[0], {"x1"});
    auto twice = expand_implication(once, dd.premises[1], {"y1"});
    CHECK(twice.size() == 5);
    CHECK(text(twice) == std::vector<std::string>{"(-> p x1)", "(-> x1 q)", "(-> r y1)", "(-> y1 s)",
                                                  "(or (not q) (not s))"});
    CHECK(entails(twice, dd.conclusion));
}

TEST_CASE("expand_implication: links entail the replaced implication for chain lengths 1..8") {
    for (const auto& s : schema_catalog()) {
        for (std::size_t idx : s.implication_premises()) {
            for (int len = 1; len <= 8; ++len) {
                std::vector<std::string> xs;
                for (int k = 1; k <= len; ++k) xs.push_back("x" + std::to_string(k));
                auto out = expand_implication(s.premises, s.premises[idx], xs);
                CHECK(out.size() == s.premises.size() + len);
                std::vector<Formula> links(out.begin() + idx, out.begin() + idx + len + 1);
                CHECK(entails(links, s.premises[idx]));
                CHECK(entails(out, s.conclusion));
            }
        }
    }
}

TEST_CASE("expand_implication error paths") {
    const Schema& mp = schema(SchemaName::MP);
    CHECK_THROWS_AS(expand_implication(mp.premises, mp.premises[0], {}), Error);
    try {
        expand_implication(mp.premises, implies(atom("q"), atom("p")), {"x1"});
        FAIL("expected target-not-found");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::target_not_found);
    }
    try {
        expand_implication(mp.premises, mp.premises[0], {"p"});
        FAIL("expected non-fresh");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::non_fresh_intermediate);
    }
    // DS and CT have no implication to expand.
    CHECK(schema(SchemaName::DS).implication_premises().empty());
    CHECK(schema(SchemaName::CT).implication_premises().empty());
    CHECK_THROWS_AS(expand_implication(schema(SchemaName::DS).premises, schema(SchemaName::DS).premises[0], {"x1"}),
                    Error);
}
