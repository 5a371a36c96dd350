#include "forge/schema.hpp"

#include <algorithm>
#include <set>

#include "forge/error.hpp"

namespace forge {

std::string_view to_string(SchemaName name) {
    switch (name) {
        case SchemaName::MP: return "MP";
        case SchemaName::MT: return "MT";
        case SchemaName::HS: return "HS";
        case SchemaName::DS: return "DS";
        case SchemaName::CD: return "CD";
        case SchemaName::DD: return "DD";
        case SchemaName::BD: return "BD";
        case SchemaName::CT: return "CT";
        case SchemaName::MI: return "MI";
    }
    return "?";
}

SchemaName parse_schema_name(std::string_view text) {
    for (SchemaName s : kAllSchemas) {
        if (to_string(s) == text) return s;
    }
    throw Error(ErrorKind::parse, "unknown schema '" + std::string(text) + "'");
}

std::vector<std::size_t> Schema::implication_premises() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < premises.size(); ++i) {
        if (premises[i].kind() == Formula::Kind::implication) out.push_back(i);
    }
    return out;
}

bool Schema::has_negation() const {
    return contains_negation(conclusion) ||
           std::any_of(premises.begin(), premises.end(), [](const Formula& f) { return contains_negation(f); });
}

namespace {

Schema make_schema(SchemaName name, std::vector<Formula> premises, Formula conclusion) {
    std::vector<Formula> all = premises;
    all.push_back(conclusion);
    return Schema{name, std::move(premises), std::move(conclusion), atoms_of(all)};
}

std::vector<Schema> build_catalog() {
    const Formula p = atom("p"), q = atom("q"), r = atom("r"), s = atom("s");
    return {
        make_schema(SchemaName::MP, {implies(p, q), p}, q),
        make_schema(SchemaName::MT, {implies(p, q), !q}, !p),
        make_schema(SchemaName::HS, {implies(p, q), implies(q, r)}, implies(p, r)),
        make_schema(SchemaName::DS, {p || q, !p}, q),
        make_schema(SchemaName::CD, {implies(p, q), implies(r, s), p || r}, q || s),
        make_schema(SchemaName::DD, {implies(p, q), implies(r, s), !q || !s}, !p || !r),
        make_schema(SchemaName::BD, {implies(p, q), implies(r, s), p || !s}, q || !r),
        make_schema(SchemaName::CT, {p}, q || p),
        make_schema(SchemaName::MI, {implies(p, q)}, !p || q),
    };
}

void check_substitution(const Schema& schema, const AtomMap& substitution) {
    std::set<std::string> images;
    for (const auto& v : schema.variables) {
        auto it = substitution.find(v);
        if (it == substitution.end()) {
            throw Error(ErrorKind::non_injective_substitution, "variable '" + v + "' is not substituted");
        }
        if (!images.insert(it->second).second) {
            throw Error(ErrorKind::non_injective_substitution, "'" + it->second + "' is the image of two variables");
        }
    }
}

}  // namespace

const std::vector<Schema>& schema_catalog() {
    static const std::vector<Schema> catalog = build_catalog();
    return catalog;
}

const Schema& schema(SchemaName name) { return schema_catalog()[static_cast<std::size_t>(name)]; }

std::string primed(std::string_view atom) { return std::string(atom) + "'"; }

Argument instantiate_valid(const Schema& schema, const AtomMap& substitution) {
    check_substitution(schema, substitution);
    Argument out{{}, rename_atoms(schema.conclusion, substitution)};
    for (const auto& p : schema.premises) out.premises.push_back(rename_atoms(p, substitution));
    return out;
}

Argument instantiate_invalid(const Schema& schema, const AtomMap& substitution, const AtomMap& fresh) {
    Argument out = instantiate_valid(schema, substitution);
    const std::vector<std::string> premise_atoms = atoms_of(out.premises);

    AtomMap conclusion_map;
    std::set<std::string> used;
    for (const auto& v : atoms_of(schema.conclusion)) {
        auto it = fresh.find(v);
        if (it == fresh.end()) throw Error(ErrorKind::precondition, "no fresh atom for conclusion variable '" + v + "'");
        if (std::binary_search(premise_atoms.begin(), premise_atoms.end(), it->second) ||
            !used.insert(it->second).second) {
            throw Error(ErrorKind::fresh_atom_collision, "fresh atom '" + it->second + "' is already in use");
        }
        conclusion_map[substitution.find(v)->second] = it->second;
    }
    out.conclusion = rename_atoms(out.conclusion, conclusion_map);
    return out;
}

Argument instantiate_invalid(const Schema& schema, const AtomMap& substitution) {
    check_substitution(schema, substitution);
    AtomMap fresh;
    for (const auto& v : atoms_of(schema.conclusion)) fresh[v] = primed(substitution.find(v)->second);
    return instantiate_invalid(schema, substitution, fresh);
}

std::vector<Formula> expand_implication(const std::vector<Formula>& premises, const Formula& target,
                                        const std::vector<std::string>& intermediates) {
    if (intermediates.empty()) throw Error(ErrorKind::precondition, "at least one intermediate is required");
    if (target.kind() != Formula::Kind::implication) {
        throw Error(ErrorKind::precondition, "target " + to_prefix(target) + " is not an implication");
    }
    auto pos = std::find(premises.begin(), premises.end(), target);
    if (pos == premises.end()) throw Error(ErrorKind::target_not_found, to_prefix(target));

    const std::vector<std::string> existing = atoms_of(premises);
    std::set<std::string> seen;
    for (const auto& x : intermediates) {
        if (std::binary_search(existing.begin(), existing.end(), x) || !seen.insert(x).second) {
            throw Error(ErrorKind::non_fresh_intermediate, "'" + x + "'");
        }
    }

    std::vector<Formula> chain;
    Formula previous = target.left();
    for (const auto& x : intermediates) {
        Formula next = atom(x);
        chain.push_back(implies(previous, next));
        previous = next;
    }
    chain.push_back(implies(previous, target.right()));

    std::vector<Formula> out(premises.begin(), pos);
    out.insert(out.end(), chain.begin(), chain.end());
    out.insert(out.end(), pos + 1, premises.end());
    return out;
}

}  // namespace forge
