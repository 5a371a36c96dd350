#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "forge/backend.hpp"

namespace forge {

enum class SentenceCategory {
    problem_setup,
    plan_generation,
    fact_retrieval,
    active_computation,
    result_consolidation,
    uncertainty_management,
    final_answer_emission,
    self_checking,
    thinking,
};
inline constexpr std::size_t kCategoryCount = 9;
std::string_view to_string(SentenceCategory c);
std::optional<SentenceCategory> parse_category(std::string_view text);

struct ReasoningChain {
    std::vector<std::string> sentences;
    std::vector<std::optional<SentenceCategory>> categories;  // empty or one per sentence

    std::size_t size() const { return sentences.size(); }
};

/// Splits on newlines and on . ? ! followed by whitespace. Common abbreviations,
/// decimals and numbered-list markers ("2.") do not end a sentence.
ReasoningChain segment(std::string_view text);

// Sentences joined back into text.
std::string join(const std::vector<std::string>& sentences, std::size_t begin, std::size_t end);

enum class RolloutCondition { keep, remove };

struct Rollout {
    ReasoningChain chain;  // the resampled continuation only
    std::string error;
    bool ok() const { return error.empty(); }
};

struct RolloutOptions {
    std::vector<Message> context;  // conversation that produced the chain, without the reply
    BackendParams params;
    std::string tag;
};

/// `count` continuations after sentences 0..i (keep) or 0..i-1 (remove).
/// Backend failures are recorded on the rollout.
std::vector<Rollout> rollouts(const ReasoningChain& chain, std::size_t i, RolloutCondition condition, Backend& backend,
                              int count, const RolloutOptions& opts = {});

using Embedding = Eigen::SparseVector<double>;

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    // Unit norm; deterministic for a given configuration.
    virtual Embedding embed(std::string_view sentence) = 0;
};

/// Term-frequency vector over lowercased alphanumeric tokens, one dimension per
/// distinct token. Token-disjoint sentences are exactly orthogonal.
class TermFrequencyEmbedding : public EmbeddingBackend {
public:
    Embedding embed(std::string_view sentence) override;

private:
    std::mutex mutex_;
    std::unordered_map<std::string, int> vocabulary_;
};

/// Embeddings endpoint taking {"model", "input": [text]} and answering
/// {"data": [{"embedding": [...]}]}.
class HttpEmbedding : public EmbeddingBackend {
public:
    HttpEmbedding(std::string endpoint, std::string api_key, std::string model, std::shared_ptr<Transport> transport);
    Embedding embed(std::string_view sentence) override;

private:
    std::string endpoint_, api_key_, model_;
    std::shared_ptr<Transport> transport_;
    std::mutex mutex_;
    std::map<std::string, Embedding, std::less<>> cache_;
};

double cosine(const Embedding& a, const Embedding& b);

inline constexpr double kDefaultMatchThreshold = 0.8;
inline constexpr int kDefaultRollouts = 8;

// Index of the first sentence with the highest similarity to `target`, and that similarity.
std::pair<std::size_t, double> best_match(const Embedding& target, const std::vector<Embedding>& sentences);

// Share of rollouts containing a sentence within cosine t of `target`.
double match_rate(const std::string& target, const std::vector<ReasoningChain>& rollouts, double t,
                  EmbeddingBackend& embed);

/// Match rate of sentence j under keep minus under remove. Throws
/// Error(empty_rollout_set) when either set is empty.
double importance(const std::string& sentence_j, const std::vector<ReasoningChain>& keep,
                  const std::vector<ReasoningChain>& remove, double t, EmbeddingBackend& embed);

struct ImportanceMatrix {
    Eigen::MatrixXd values;  // (i, j) meaningful only for j > i
    double threshold = kDefaultMatchThreshold;
    std::vector<std::size_t> keep_counts;    // usable rollouts per i
    std::vector<std::size_t> remove_counts;
    std::size_t failed_rollouts = 0;

    static bool defined(Eigen::Index i, Eigen::Index j) { return j > i; }
    double outgoing_mean(Eigen::Index i) const;  // mean over j > i; 0 for the last sentence
};

struct ImportanceOptions {
    double threshold = kDefaultMatchThreshold;
    int count = kDefaultRollouts;
    RolloutOptions rollout;
};

/// Fills every j > i cell. Rollouts for index i are generated once and reused for all j.
ImportanceMatrix importance_matrix(const ReasoningChain& chain, Backend& backend, EmbeddingBackend& embed,
                                   const ImportanceOptions& opts = {});

// Header row and column of sentence indices; cells with j <= i are left empty.
void write_matrix_csv(std::ostream& out, const ImportanceMatrix& m);

struct Categorized {
    ReasoningChain chain;
    std::size_t unknown = 0;  // replies naming no category
};

/// One backend request per sentence; the conversation tag is the sentence itself.
Categorized categorize(const ReasoningChain& chain, Backend& backend, const BackendParams& params = {});

struct CategoryRow {
    std::string category;  // "unlabeled" when the sentence has no category
    std::size_t sentences = 0;
    double mean_importance = 0.0;
    double token_share = 0.0;
};

/// Mean outgoing importance and share of whitespace tokens per category, in
/// taxonomy order.
std::vector<CategoryRow> category_report(const ImportanceMatrix& m, const ReasoningChain& chain);
void write_category_csv(std::ostream& out, const std::vector<CategoryRow>& rows);

}  // namespace forge
