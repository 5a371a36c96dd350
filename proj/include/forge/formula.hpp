#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Total map from atom id to truth value.
using Assignment = std::map<std::string, bool, std::less<>>;

/// Immutable propositional formula over named atoms.
///
/// Copies share structure; a Formula is never modified after construction, so
/// values can be passed between threads freely. The canonical text form is a
/// prefix notation: `p`, `(not p)`, `(and p q)`, `(or p q)`, `(-> p q)`.
class Formula {
public:
    enum class Kind { atom, negation, conjunction, disjunction, implication };

    static Formula atom(std::string name);
    static Formula negation(Formula child);
    static Formula conjunction(Formula left, Formula right);
    static Formula disjunction(Formula left, Formula right);
    static Formula implication(Formula antecedent, Formula consequent);

    Kind kind() const noexcept { return node_->kind; }
    bool is_atom() const noexcept { return kind() == Kind::atom; }

    // Only meaningful for atoms.
    const std::string& name() const noexcept { return node_->name; }
    // Child of a negation, left operand otherwise.
    const Formula& left() const noexcept { return node_->children[0]; }
    const Formula& right() const noexcept { return node_->children[1]; }

    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node {
        Kind kind;
        std::string name;
        std::vector<Formula> children;
    };
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

// Short constructors used throughout the schema catalog and tests.
inline Formula atom(std::string name) { return Formula::atom(std::move(name)); }
inline Formula operator!(Formula f) { return Formula::negation(std::move(f)); }
inline Formula operator&&(Formula a, Formula b) { return Formula::conjunction(std::move(a), std::move(b)); }
inline Formula operator||(Formula a, Formula b) { return Formula::disjunction(std::move(a), std::move(b)); }
inline Formula implies(Formula a, Formula b) { return Formula::implication(std::move(a), std::move(b)); }

/// Classical truth value; throws Error(missing_atom) if `a` does not cover f.
bool eval_formula(const Formula& f, const Assignment& a);

// Atoms occurring in f, sorted and deduplicated.
std::vector<std::string> atoms_of(const Formula& f);
std::vector<std::string> atoms_of(const std::vector<Formula>& fs);

bool contains_negation(const Formula& f);

// Renames atoms through `mapping`; atoms without an entry are kept.
Formula rename_atoms(const Formula& f, const std::map<std::string, std::string, std::less<>>& mapping);

std::string to_prefix(const Formula& f);
/// Parses the canonical prefix notation. Throws Error(parse).
Formula parse_prefix(std::string_view text);

// Atom ids: letters, digits, '_', '.', '\''. Must not be a keyword.
bool is_valid_atom_id(std::string_view id);

}  // namespace forge
