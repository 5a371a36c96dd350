#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/backend.hpp"
#include "forge/instance.hpp"
#include "forge/knowledge.hpp"
#include "forge/schema.hpp"

namespace forge {

/// Triple catalog plus the factual world it induces.
class KnowledgeBase {
public:
    explicit KnowledgeBase(std::vector<EntityTriple> triples = default_triples());

    const std::vector<EntityTriple>& triples() const { return triples_; }
    const SetModel& model() const { return model_; }
    std::optional<std::size_t> triple_of(std::string_view entity) const;

private:
    std::vector<EntityTriple> triples_;
    SetModel model_;
};

struct GenerationConfig {
    std::vector<SchemaName> schemas{kAllSchemas.begin(), kAllSchemas.end()};
    int per_schema = 200;          // multiple of 8
    std::vector<int> depths{0};    // cycled over each schema's instances, then shuffled
    std::uint64_t seed = 0;
    // A chain of true intermediates cannot end in a false consequent, so some aligned
    // cells (every aligned MT instance) cannot take depth. With strict balance those
    // instances stay at depth 0; without it they keep the depth and are relabelled
    // conflicting, so the alignment split is no longer exact.
    bool strict_balance = true;

    void validate() const;
};

/// Per schema: exactly half valid, half aligned, half forward, and every
/// sentence-pair template used per_schema/4 times. Deterministic in cfg.seed.
/// Throws Error(infeasible_balance) when the split cannot be realised. Depth
/// fallbacks are described in `notes` when given.
std::vector<ProblemInstance> generate_dataset(const GenerationConfig& cfg, const KnowledgeBase& kb,
                                              std::vector<std::string>* notes = nullptr);

/// aligned iff every premise and the conclusion are factually true.
Alignment label_alignment(const ProblemInstance& inst, const KnowledgeBase& kb);

/// Inserts `additions` factually true intermediates, spread round-robin over the
/// premise implications. Intermediates come from triples the instance does not
/// use. Validity is preserved; alignment is recomputed.
ProblemInstance expand_depth(const ProblemInstance& inst, int additions, const KnowledgeBase& kb,
                             std::uint64_t pool_seed);
// Chain length per premise implication, in premise order.
ProblemInstance expand_depth(const ProblemInstance& inst, const std::vector<int>& per_implication,
                             const KnowledgeBase& kb, std::uint64_t pool_seed);

/// Replaces every entity by a random lowercase string of length 4-8, consistently
/// and injectively. Formulas and validity are untouched; alignment becomes gibberish.
ProblemInstance gibberize(const ProblemInstance& inst, std::uint64_t seed);

struct Reformulation {
    std::string context;
    std::string question;
};

// Deterministic "It's mentioned that ... Additionally, ..." paraphrase.
Reformulation template_reformulation(const ProblemInstance& inst);

/// Fills context/question. With a backend, asks it for a JSON object with keys
/// context and question, retrying once on an unusable reply before throwing
/// Error(reformulation_failed). Without one, applies template_reformulation.
ProblemInstance reformulate(const ProblemInstance& inst, Backend* backend, const BackendParams& params = {});

// Extracts {"context": ..., "question": ...} from a reply; nullopt if unusable.
std::optional<Reformulation> parse_reformulation(std::string_view reply);

// "0..3" (inclusive range) or "0,2,5".
std::vector<int> parse_depths(std::string_view text);

}  // namespace forge
