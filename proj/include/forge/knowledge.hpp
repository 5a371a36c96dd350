#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/formula.hpp"

namespace forge {

// Plural nouns with a ⊂ b ⊂ c.
struct EntityTriple {
    std::string a, b, c;
    friend bool operator==(const EntityTriple&, const EntityTriple&) = default;
};

enum class Quantifier { all, some, no, some_not };

std::string_view to_string(Quantifier q);
Quantifier parse_quantifier(std::string_view text);

struct QuantStatement {
    Quantifier quantifier;
    std::string subject;
    std::string predicate;
    friend auto operator<=>(const QuantStatement&, const QuantStatement&) = default;
};

// All <-> SomeNot, No <-> Some.
QuantStatement negate(const QuantStatement& s);

// Sentence-pair templates 1..4: (All, SomeNot), (No, Some), (Some, No), (SomeNot, All).
struct SentencePair {
    QuantStatement positive;
    QuantStatement negative;
    int template_index;
};
SentencePair make_sentence_pair(int template_index, std::string subject, std::string predicate);

enum class Direction { forward, inverted };
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

/// Finite model: each entity denotes a non-empty witness set of element ids.
class SetModel {
public:
    void add(const std::string& entity, std::set<int> witnesses);
    // Disjoint union; element ids of `other` are shifted past this model's.
    void merge_disjoint(const SetModel& other);

    bool contains(std::string_view entity) const { return witnesses_.find(entity) != witnesses_.end(); }
    // Throws Error(unknown_entity).
    const std::set<int>& witness(std::string_view entity) const;
    const std::map<std::string, std::set<int>, std::less<>>& entries() const { return witnesses_; }

private:
    std::map<std::string, std::set<int>, std::less<>> witnesses_;
    int max_element_ = 0;
};

/// Minimal strict chain {1} ⊂ {1,2} ⊂ {1,2,3} over (a, b, c); `inverted` swaps
/// the roles of a and b.
SetModel build_model(const EntityTriple& triple, Direction direction);

// Disjoint union of the forward models of every triple: the factual world.
SetModel factual_model(const std::vector<EntityTriple>& triples);

/// All ≡ subset, Some ≡ overlap, No ≡ disjoint, SomeNot ≡ not a subset.
bool truth_of(const QuantStatement& s, const SetModel& m);

using StatementMap = std::map<std::string, QuantStatement, std::less<>>;

/// Evaluates f with every atom read as the truth of its bound statement.
/// Throws Error(unmapped_atom) for atoms missing from `bindings`.
bool factual_truth(const Formula& f, const StatementMap& bindings, const SetModel& m);

// "winged_animals" -> "winged animals".
std::string surface_form(std::string_view entity);
// "All siameses are cats" (no trailing period).
std::string render(const QuantStatement& s);

// The ten curated triples.
const std::vector<EntityTriple>& default_triples();

// One triple per line, tab-separated; '#' starts a comment line.
std::vector<EntityTriple> read_triples(std::istream& in);
std::vector<EntityTriple> load_triples(const std::string& path);
void write_triples(std::ostream& out, const std::vector<EntityTriple>& triples);

}  // namespace forge
