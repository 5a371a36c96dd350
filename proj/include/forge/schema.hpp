#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forge/formula.hpp"

namespace forge {

// Modus ponens, modus tollens, hypothetical syllogism, disjunctive syllogism,
// constructive/destructive/bidirectional dilemma, commutation, material implication.
enum class SchemaName { MP, MT, HS, DS, CD, DD, BD, CT, MI };

inline constexpr std::array kAllSchemas = {SchemaName::MP, SchemaName::MT, SchemaName::HS,
                                           SchemaName::DS, SchemaName::CD, SchemaName::DD,
                                           SchemaName::BD, SchemaName::CT, SchemaName::MI};

std::string_view to_string(SchemaName name);
SchemaName parse_schema_name(std::string_view text);

struct Schema {
    SchemaName name;
    std::vector<Formula> premises;
    Formula conclusion;
    std::vector<std::string> variables;  // sorted; exactly the atoms of premises and conclusion

    // Indices of premises whose top-level connective is an implication.
    std::vector<std::size_t> implication_premises() const;
    bool has_negation() const;
};

// The nine inference schemas over atoms p, q, r, s, in kAllSchemas order.
const std::vector<Schema>& schema_catalog();
const Schema& schema(SchemaName name);

struct Argument {
    std::vector<Formula> premises;
    Formula conclusion;
};

using AtomMap = std::map<std::string, std::string, std::less<>>;

// Fresh ids live in the primed namespace: "q" -> "q'".
std::string primed(std::string_view atom);

/// Renames the schema's variables. The substitution must be total over the
/// variables and injective, else Error(non_injective_substitution).
Argument instantiate_valid(const Schema& schema, const AtomMap& substitution);

/// Same premises as instantiate_valid, but every conclusion atom is replaced by
/// an unrelated fresh atom so the conclusion no longer follows.
///
/// `fresh` maps each conclusion variable to its replacement id. Replacements
/// that coincide with a substituted premise atom, or with each other, raise
/// Error(fresh_atom_collision).
Argument instantiate_invalid(const Schema& schema, const AtomMap& substitution, const AtomMap& fresh);
// Fresh atoms default to the primed images of the substituted conclusion atoms.
Argument instantiate_invalid(const Schema& schema, const AtomMap& substitution);

/// Replaces the implication `target` (a member of `premises`) by the chain
/// antecedent -> i1 -> ... -> ik -> consequent, in place.
///
/// Throws Error(precondition) for an empty intermediate list or a target that is
/// not an implication, Error(target_not_found) and Error(non_fresh_intermediate).
std::vector<Formula> expand_implication(const std::vector<Formula>& premises, const Formula& target,
                                        const std::vector<std::string>& intermediates);

}  // namespace forge
