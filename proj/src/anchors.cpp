#include "forge/anchors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <set>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/prompts.hpp"

namespace forge {

namespace {

constexpr SentenceCategory kCategories[] = {
    SentenceCategory::problem_setup,          SentenceCategory::plan_generation,
    SentenceCategory::fact_retrieval,         SentenceCategory::active_computation,
    SentenceCategory::result_consolidation,   SentenceCategory::uncertainty_management,
    SentenceCategory::final_answer_emission,  SentenceCategory::self_checking,
    SentenceCategory::thinking,
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view to_string(SentenceCategory c) {
    switch (c) {
        case SentenceCategory::problem_setup: return "problem_setup";
        case SentenceCategory::plan_generation: return "plan_generation";
        case SentenceCategory::fact_retrieval: return "fact_retrieval";
        case SentenceCategory::active_computation: return "active_computation";
        case SentenceCategory::result_consolidation: return "result_consolidation";
        case SentenceCategory::uncertainty_management: return "uncertainty_management";
        case SentenceCategory::final_answer_emission: return "final_answer_emission";
        case SentenceCategory::self_checking: return "self_checking";
        case SentenceCategory::thinking: return "thinking";
    }
    return "?";
}

std::optional<SentenceCategory> parse_category(std::string_view text) {
    std::string t = lower(trim(text));
    while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back())) && t.back() != '_') t.pop_back();
    while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.front())) && t.front() != '_') t.erase(0, 1);
    for (auto& c : t) {
        if (c == ' ' || c == '-') c = '_';
    }
    for (auto c : kCategories) {
        if (to_string(c) == t) return c;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Segmentation

namespace {

const std::set<std::string, std::less<>> kAbbreviations{"e.g", "i.e", "etc", "vs", "mr", "mrs", "ms", "dr",
                                                        "prof", "st", "fig", "eq", "cf", "al", "approx", "resp"};

bool is_number(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

void split_line(std::string_view line, std::vector<std::string>& out) {
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c != '.' && c != '?' && c != '!') {
            ++i;
            continue;
        }
        // Runs like "?!" or "..." end together, as do closing quotes and brackets.
        std::size_t end = i + 1;
        while (end < line.size() && (line[end] == '.' || line[end] == '?' || line[end] == '!')) ++end;
        while (end < line.size() && (line[end] == '"' || line[end] == '\'' || line[end] == ')' || line[end] == ']')) ++end;
        if (end < line.size() && !is_space(line[end])) {
            i = end;
            continue;
        }
        if (c == '.' && end == i + 1) {
            std::size_t w = i;
            while (w > start && !is_space(line[w - 1])) --w;
            std::string word = lower(line.substr(w, i - w));
            while (!word.empty() && (word.front() == '(' || word.front() == '"')) word.erase(0, 1);
            const bool marker = is_number(word) && trim(line.substr(start, w - start)).empty();
            if (marker || kAbbreviations.count(word)) {
                i = end;
                continue;
            }
        }
        std::string s = trim(line.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = end;
        i = end;
    }
    std::string s = trim(line.substr(start));
    if (!s.empty()) out.push_back(std::move(s));
}

}  // namespace

ReasoningChain segment(std::string_view text) {
    ReasoningChain chain;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        split_line(text.substr(pos, nl - pos), chain.sentences);
        pos = nl + 1;
    }
    return chain;
}

std::string join(const std::vector<std::string>& sentences, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t k = begin; k < end && k < sentences.size(); ++k) {
        if (!out.empty()) out += ' ';
        out += sentences[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rollouts

std::vector<Rollout> rollouts(const ReasoningChain& chain, std::size_t i, RolloutCondition condition, Backend& backend,
                              int count, const RolloutOptions& opts) {
    if (i >= chain.size()) throw Error(ErrorKind::precondition, "sentence index out of range");
    if (count < 1) throw Error(ErrorKind::precondition, "rollout count must be >= 1");

    const std::size_t prefix_end = condition == RolloutCondition::keep ? i + 1 : i;
    const std::string prefix = join(chain.sentences, 0, prefix_end);

    Conversation conv;
    conv.tag = opts.tag;
    conv.messages = opts.context;
    if (!prefix.empty() || conv.messages.empty() || conv.messages.back().role != Role::user) {
        conv.user(prompts::continue_reasoning(prefix));
    }
    // Otherwise an empty prefix simply regenerates the reply to the context.

    std::vector<Rollout> out(static_cast<std::size_t>(count));
    for (auto& r : out) {
        try {
            r.chain = segment(backend.complete(conv, opts.params).text);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {

constexpr Eigen::Index kEmbeddingDim = 1 << 30;

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Embedding normalized(Embedding v) {
    const double n = v.norm();
    if (n > 0) v /= n;
    return v;
}

}  // namespace

Embedding TermFrequencyEmbedding::embed(std::string_view sentence) {
    std::map<int, double> counts;
    {
        std::lock_guard lock(mutex_);
        for (auto& tok : tokens(sentence)) {
            auto [it, fresh] = vocabulary_.try_emplace(std::move(tok), static_cast<int>(vocabulary_.size()));
            counts[it->second] += 1.0;
        }
    }
    Embedding v(kEmbeddingDim);
    v.reserve(static_cast<Eigen::Index>(counts.size()));
    for (auto [index, n] : counts) v.insert(index) = n;
    return normalized(std::move(v));
}

HttpEmbedding::HttpEmbedding(std::string endpoint, std::string api_key, std::string model,
                             std::shared_ptr<Transport> transport)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)),
      transport_(std::move(transport)) {
    if (api_key_.empty()) throw Error(ErrorKind::auth_failure, "no credential for the embedding endpoint");
}

Embedding HttpEmbedding::embed(std::string_view sentence) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(sentence); it != cache_.end()) return it->second;
    }
    HttpRequest req{endpoint_,
                    {{"Authorization", "Bearer " + api_key_}, {"Content-Type", "application/json"}},
                    nlohmann::json{{"model", model_}, {"input", {std::string(sentence)}}}.dump()};
    HttpResponse resp = transport_->post(req);
    if (resp.status == 401 || resp.status == 403) throw Error(ErrorKind::auth_failure, "embedding endpoint refused");
    if (resp.status != 200) {
        throw Error(ErrorKind::malformed_response, "embedding endpoint returned " + std::to_string(resp.status));
    }
    Embedding v;
    try {
        const auto values = nlohmann::json::parse(resp.body).at("data").at(0).at("embedding").get<std::vector<double>>();
        v.resize(static_cast<Eigen::Index>(values.size()));
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (values[k] != 0.0) v.insert(static_cast<Eigen::Index>(k)) = values[k];
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::malformed_response, std::string("embedding reply: ") + e.what());
    }
    v = normalized(std::move(v));
    std::lock_guard lock(mutex_);
    cache_.emplace(std::string(sentence), v);
    return v;
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::precondition, "embedding dimensions differ");
    const double na = a.norm(), nb = b.norm();
    if (na == 0 || nb == 0) return 0.0;
    return a.dot(b) / (na * nb);
}

std::pair<std::size_t, double> best_match(const Embedding& target, const std::vector<Embedding>& sentences) {
    std::pair<std::size_t, double> best{0, -2.0};
    for (std::size_t k = 0; k < sentences.size(); ++k) {
        const double c = cosine(target, sentences[k]);
        if (c > best.second) best = {k, c};
    }
    return best;
}

double match_rate(const std::string& target, const std::vector<ReasoningChain>& rollouts, double t,
                  EmbeddingBackend& embed) {
    if (rollouts.empty()) throw Error(ErrorKind::empty_rollout_set, "no rollouts to score");
    const Embedding goal = embed.embed(target);
    std::size_t matches = 0;
    for (const auto& r : rollouts) {
        std::vector<Embedding> es;
        for (const auto& s : r.sentences) es.push_back(embed.embed(s));
        if (!es.empty() && best_match(goal, es).second >= t) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(rollouts.size());
}

double importance(const std::string& sentence_j, const std::vector<ReasoningChain>& keep,
                  const std::vector<ReasoningChain>& remove, double t, EmbeddingBackend& embed) {
    if (keep.empty() || remove.empty()) throw Error(ErrorKind::empty_rollout_set, "importance needs both rollout sets");
    return match_rate(sentence_j, keep, t, embed) - match_rate(sentence_j, remove, t, embed);
}

// ---------------------------------------------------------------------------
// Matrix

double ImportanceMatrix::outgoing_mean(Eigen::Index i) const {
    const Eigen::Index n = values.cols();
    if (i + 1 >= n) return 0.0;
    return values.row(i).tail(n - i - 1).mean();
}

namespace {

// Best similarity per (rollout, target sentence), computed once per rollout set.
Eigen::MatrixXd similarity_table(const std::vector<ReasoningChain>& set, const std::vector<Embedding>& targets,
                                 EmbeddingBackend& embed) {
    Eigen::MatrixXd best = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(set.size()),
                                                     static_cast<Eigen::Index>(targets.size()), -2.0);
    for (std::size_t r = 0; r < set.size(); ++r) {
        std::vector<Embedding> es;
        for (const auto& s : set[r].sentences) es.push_back(embed.embed(s));
        if (es.empty()) continue;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            best(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = best_match(targets[j], es).second;
        }
    }
    return best;
}

double rate(const Eigen::MatrixXd& best, Eigen::Index j, double t) {
    return (best.col(j).array() >= t).cast<double>().mean();
}

}  // namespace

ImportanceMatrix importance_matrix(const ReasoningChain& chain, Backend& backend, EmbeddingBackend& embed,
                                   const ImportanceOptions& opts) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    ImportanceMatrix m;
    m.threshold = opts.threshold;
    m.values = Eigen::MatrixXd::Zero(n, n);
    m.keep_counts.assign(chain.size(), 0);
    m.remove_counts.assign(chain.size(), 0);
    if (n < 2) return m;

    std::vector<Embedding> targets;
    for (const auto& s : chain.sentences) targets.push_back(embed.embed(s));

    std::vector<std::size_t> failures(chain.size(), 0);
    parallel_for(chain.size() - 1, backend.max_inflight(), [&](std::size_t i) {
        std::vector<ReasoningChain> keep, remove;
        for (auto condition : {RolloutCondition::keep, RolloutCondition::remove}) {
            for (auto& r : rollouts(chain, i, condition, backend, opts.count, opts.rollout)) {
                if (!r.ok()) {
                    ++failures[i];
                    continue;
                }
                (condition == RolloutCondition::keep ? keep : remove).push_back(std::move(r.chain));
            }
        }
        m.keep_counts[i] = keep.size();
        m.remove_counts[i] = remove.size();
        if (keep.empty() || remove.empty()) {
            throw Error(ErrorKind::empty_rollout_set, "every rollout failed for sentence " + std::to_string(i));
        }
        const Eigen::MatrixXd kb = similarity_table(keep, targets, embed);
        const Eigen::MatrixXd rb = similarity_table(remove, targets, embed);
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = row + 1; j < n; ++j) m.values(row, j) = rate(kb, j, opts.threshold) - rate(rb, j, opts.threshold);
    });
    for (auto f : failures) m.failed_rollouts += f;
    return m;
}

void write_matrix_csv(std::ostream& out, const ImportanceMatrix& m) {
    const Eigen::Index n = m.values.rows();
    out << "i\\j";
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << j;
    out << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        out << i;
        for (Eigen::Index j = 0; j < n; ++j) {
            out << ',';
            if (ImportanceMatrix::defined(i, j)) out << m.values(i, j);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Taxonomy

Categorized categorize(const ReasoningChain& chain, Backend& backend, const BackendParams& params) {
    Categorized out{chain, 0};
    out.chain.categories.assign(chain.size(), std::nullopt);
    for (std::size_t k = 0; k < chain.size(); ++k) {
        Conversation conv;
        conv.tag = chain.sentences[k];
        conv.user(prompts::categorize(chain.sentences[k]));
        out.chain.categories[k] = parse_category(backend.complete(conv, params).text);
        if (!out.chain.categories[k]) ++out.unknown;
    }
    return out;
}

std::vector<CategoryRow> category_report(const ImportanceMatrix& m, const ReasoningChain& chain) {
    if (static_cast<std::size_t>(m.values.rows()) != chain.size()) {
        throw Error(ErrorKind::precondition, "matrix and chain sizes differ");
    }
    struct Acc {
        std::size_t sentences = 0;
        std::size_t tokens = 0;
        double importance = 0.0;
        std::size_t scored = 0;
    };
    std::map<int, Acc> acc;  // category index; kCategoryCount means unlabeled
    std::size_t total_tokens = 0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const int key = k < chain.categories.size() && chain.categories[k] ? static_cast<int>(*chain.categories[k])
                                                                            : static_cast<int>(kCategoryCount);
        Acc& a = acc[key];
        ++a.sentences;
        std::size_t words = 0;
        bool in_word = false;
        for (char c : chain.sentences[k]) {
            words += !is_space(c) && !in_word;
            in_word = !is_space(c);
        }
        a.tokens += words;
        total_tokens += words;
        if (k + 1 < chain.size()) {
            a.importance += m.outgoing_mean(static_cast<Eigen::Index>(k));
            ++a.scored;
        }
    }
    std::vector<CategoryRow> rows;
    for (const auto& [key, a] : acc) {
        CategoryRow row;
        row.category = key == static_cast<int>(kCategoryCount) ? "unlabeled"
                                                               : std::string(to_string(kCategories[key]));
        row.sentences = a.sentences;
        row.mean_importance = a.scored ? a.importance / static_cast<double>(a.scored) : 0.0;
        row.token_share = total_tokens ? static_cast<double>(a.tokens) / static_cast<double>(total_tokens) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_category_csv(std::ostream& out, const std::vector<CategoryRow>& rows) {
    out << "# mean_importance: mean over the category's sentences of their mean outgoing importance\n";
    out << "category,sentences,mean_importance,token_share\n";
    for (const auto& r : rows) {
        out << r.category << ',' << r.sentences << ',' << r.mean_importance << ',' << r.token_share << '\n';
    }
}

}  // namespace forge
