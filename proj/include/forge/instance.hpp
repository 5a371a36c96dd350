#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "forge/formula.hpp"
#include "forge/knowledge.hpp"
#include "forge/schema.hpp"

namespace forge {

enum class Validity { valid, invalid };
enum class Alignment { aligned, conflicting, gibberish };

std::string_view to_string(Validity v);
std::string_view to_string(Alignment a);
Validity parse_validity(std::string_view text);
Alignment parse_alignment(std::string_view text);

struct Statement {
    Formula formula;
    std::string text;
    friend bool operator==(const Statement&, const Statement&) = default;
};

/// One benchmark item.
///
/// Formulas are over atom ids (p, q, q', x1, ...); `bindings` gives each atom the
/// quantified sentence it stands for. Labels are always derived, never assigned:
/// validity from entailment, alignment from the factual truth of every premise
/// and of the conclusion.
struct ProblemInstance {
    std::string id;
    SchemaName schema = SchemaName::MP;
    int depth = 0;  // intermediates inserted
    Validity validity = Validity::valid;
    Alignment alignment = Alignment::aligned;
    Direction direction = Direction::forward;
    int template_index = 1;
    std::vector<Statement> premises;
    Statement conclusion{atom("q"), {}};
    StatementMap bindings;
    bool conclusion_factual = false;
    std::string context;
    std::string question;
    std::uint64_t seed = 0;

    std::vector<Formula> premise_formulas() const;
    std::vector<std::string> premise_texts() const;

    friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

// Natural-language rendering of a formula under its bindings: "If all siameses
// are cats, then all boeings are planes." Negated atoms render as the
// complementary sentence.
std::string render_sentence(const Formula& f, const StatementMap& bindings);

// Stable content hash of (schema, bindings, formulas, labels, depth, seed).
std::string content_id(const ProblemInstance& inst);

// One JSON object per line; field order is fixed.
std::string to_json_line(const ProblemInstance& inst);
ProblemInstance instance_from_json(std::string_view line);

void write_dataset(std::ostream& out, const std::vector<ProblemInstance>& dataset);
std::vector<ProblemInstance> read_dataset(std::istream& in);
void save_dataset(const std::string& path, const std::vector<ProblemInstance>& dataset);
std::vector<ProblemInstance> load_dataset(const std::string& path);

}  // namespace forge
