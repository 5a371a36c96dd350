#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/backend.hpp"
#include "forge/instance.hpp"
#include "forge/prompts.hpp"

namespace forge {

enum class Answer { yes, no, unparseable };
std::string_view to_string(Answer a);
Answer parse_answer_tag(std::string_view text);

enum class StrategyKind { standard_cot, far_two_stage, far_single_prompt, zero_shot, few_shot, evidence };
enum class EvidenceMode { none, support, negate, both };
std::string_view to_string(StrategyKind k);
std::string_view to_string(EvidenceMode m);
EvidenceMode parse_evidence_mode(std::string_view text);

struct Strategy {
    StrategyKind kind = StrategyKind::standard_cot;
    int shots = 4;                               // few-shot only
    EvidenceMode evidence = EvidenceMode::none;  // evidence only

    // "standard-cot", "far-two-stage", "few-shot", "evidence-negate", ...
    std::string name() const;
};

// Accepts the canonical names plus the short CLI aliases baseline, far, far-single
// and evidence (= evidence-both).
Strategy parse_strategy(std::string_view text);

struct EvalRecord {
    std::string instance_id;
    std::string strategy;
    std::string evidence_mode;  // empty unless the strategy injects evidence
    std::vector<std::string> evidence;
    std::vector<Conversation> transcripts;  // one per sample
    std::vector<Answer> answers;
    Answer verdict = Answer::unparseable;
    std::optional<Answer> flag_answer;  // FaR variants only
    bool correct = false;

    // Labels copied from the instance so records can be analysed alone.
    SchemaName schema = SchemaName::MP;
    int depth = 0;
    Validity validity = Validity::valid;
    Alignment alignment = Alignment::aligned;
    bool conclusion_factual = false;

    double latency_ms = 0.0;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    std::vector<std::string> errors;
    bool skipped = false;
    std::string skip_reason;

    std::string key() const { return instance_id + "|" + strategy; }
};

std::string to_json_line(const EvalRecord& r);
EvalRecord record_from_json(std::string_view line);
void write_records(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records(std::istream& in);
std::vector<EvalRecord> load_records(const std::string& path);
void save_records(const std::string& path, std::vector<EvalRecord> records);  // sorted by key

/// Last standalone yes/no outside double-quoted spans, case-insensitive.
Answer parse_answer(std::string_view reply);
// Verdict of a single-prompt reply: only the text after the last verdict label counts.
Answer parse_single_verdict(std::string_view reply);
// Flag part of a single-prompt reply, between the flag label and the verdict label.
Answer parse_single_flag(std::string_view reply);

/// Strict majority of the parseable answers; a tie or no votes gives unparseable.
Answer self_consistency(const std::vector<Answer>& answers);

struct ProtocolOptions {
    BackendParams params;
    // Use the reformulated context/question instead of the premise list when present.
    bool use_context = false;
};

EvalRecord run_baseline(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts);
EvalRecord run_zero_shot(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts);
EvalRecord run_few_shot(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts,
                        const std::vector<prompts::Exemplar>& exemplars);
EvalRecord run_far(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts);
EvalRecord run_far_single(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts);
// Throws Error(missing_evidence) when `evidence` is empty.
EvalRecord run_evidence(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts, EvidenceMode mode,
                        const std::vector<std::string>& evidence);
// Asks the backend for the evidence first; a failed request yields a skipped record.
EvalRecord run_evidence(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts,
                        EvidenceMode mode);

/// Solved examples from a pool that shares no instance with the evaluation set.
/// Half valid, half invalid; entity-disjoint from `inst` whenever the pool allows.
class ExemplarPool {
public:
    explicit ExemplarPool(std::vector<ProblemInstance> pool);
    // Generated from the default triples with a seed unrelated to any dataset seed.
    static ExemplarPool standard();

    std::vector<prompts::Exemplar> select(const ProblemInstance& inst, int k) const;
    std::size_t size() const { return pool_.size(); }

private:
    std::vector<ProblemInstance> pool_;
};

struct EvalOptions {
    Strategy strategy;
    ProtocolOptions protocol;
    std::size_t workers = 0;  // 0: backend.max_inflight()
};

// One strategy applied to one instance.
EvalRecord evaluate_instance(const ProblemInstance& inst, Backend& backend, const EvalOptions& opts,
                             const ExemplarPool* exemplars = nullptr);

/// Evaluates every instance whose key is not in `done`, concurrently. `sink` is
/// called once per finished record under a lock. Returns the new records sorted by key.
std::vector<EvalRecord> evaluate(const std::vector<ProblemInstance>& dataset, Backend& backend,
                                 const EvalOptions& opts, const std::set<std::string>& done = {},
                                 const std::function<void(const EvalRecord&)>& sink = {});

// A record whose every sample failed; it is reported but never persisted, so a
// resumed run retries it.
bool failed(const EvalRecord& r);

struct EvalRun {
    std::vector<EvalRecord> records;  // everything now in the file, sorted by key
    std::size_t resumed = 0;          // instances of this strategy already present in the file
    std::vector<EvalRecord> failures;
};

/// Resumable file run: keeps existing records at `path`, appends new ones as they
/// finish, then rewrites the file sorted by key.
EvalRun evaluate_to_file(const std::vector<ProblemInstance>& dataset, Backend& backend,
                                         const EvalOptions& opts, const std::string& path);

// Ground truth for scripted oracles, keyed by instance id. Missing context/question
// are filled by the template reformulation.
std::map<std::string, OracleFacts> oracle_facts(const std::vector<ProblemInstance>& dataset);

}  // namespace forge
