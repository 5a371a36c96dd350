#include "forge/generator.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "forge/entailment.hpp"
#include "forge/error.hpp"
#include "forge/prompts.hpp"
#include "forge/random.hpp"

namespace forge {

KnowledgeBase::KnowledgeBase(std::vector<EntityTriple> triples)
    : triples_(std::move(triples)), model_(factual_model(triples_)) {}

std::optional<std::size_t> KnowledgeBase::triple_of(std::string_view entity) const {
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        const auto& t = triples_[i];
        if (t.a == entity || t.b == entity || t.c == entity) return i;
    }
    return std::nullopt;
}

void GenerationConfig::validate() const {
    if (schemas.empty()) throw Error(ErrorKind::precondition, "no schemas selected");
    std::set<SchemaName> seen(schemas.begin(), schemas.end());
    if (seen.size() != schemas.size()) throw Error(ErrorKind::precondition, "duplicate schema in selection");
    if (per_schema <= 0 || per_schema % 8 != 0) {
        throw Error(ErrorKind::infeasible_balance,
                    "per-schema count " + std::to_string(per_schema) + " is not a positive multiple of 8");
    }
    if (depths.empty()) throw Error(ErrorKind::precondition, "empty depth distribution");
    for (int d : depths) {
        if (d < 0) throw Error(ErrorKind::precondition, "negative depth");
    }
}

Alignment label_alignment(const ProblemInstance& inst, const KnowledgeBase& kb) {
    bool all_true = factual_truth(inst.conclusion.formula, inst.bindings, kb.model());
    for (const auto& p : inst.premises) {
        all_true = factual_truth(p.formula, inst.bindings, kb.model()) && all_true;
    }
    return all_true ? Alignment::aligned : Alignment::conflicting;
}

namespace {

constexpr Quantifier kQuantifiers[] = {Quantifier::all, Quantifier::some, Quantifier::no, Quantifier::some_not};
constexpr std::string_view kChainLetters = "xyzwuv";

std::vector<Statement> render_all(const std::vector<Formula>& formulas, const StatementMap& bindings) {
    std::vector<Statement> out;
    for (const auto& f : formulas) out.push_back({f, render_sentence(f, bindings)});
    return out;
}

// Factually true statements over triples the instance does not touch.
std::vector<QuantStatement> intermediate_pool(const ProblemInstance& inst, const KnowledgeBase& kb) {
    std::set<std::size_t> used;
    std::set<QuantStatement> bound;
    for (const auto& [atom_id, s] : inst.bindings) {
        bound.insert(s);
        for (const auto* entity : {&s.subject, &s.predicate}) {
            auto t = kb.triple_of(*entity);
            if (!t) throw Error(ErrorKind::unknown_entity, "'" + *entity + "' is not in the triple catalog");
            used.insert(*t);
        }
    }
    std::vector<QuantStatement> pool;
    for (std::size_t i = 0; i < kb.triples().size(); ++i) {
        if (used.count(i)) continue;
        const auto& t = kb.triples()[i];
        for (const auto* x : {&t.a, &t.b, &t.c}) {
            for (const auto* y : {&t.a, &t.b, &t.c}) {
                if (x == y) continue;
                for (auto q : kQuantifiers) {
                    QuantStatement s{q, *x, *y};
                    if (!bound.count(s) && truth_of(s, kb.model())) pool.push_back(s);
                }
            }
        }
    }
    return pool;
}

std::string fresh_atom(char letter, const StatementMap& bindings) {
    for (int n = 1;; ++n) {
        std::string id = std::string(1, letter) + std::to_string(n);
        if (!bindings.count(id)) return id;
    }
}

ProblemInstance expand_planned(const ProblemInstance& inst, const std::vector<std::pair<Formula, int>>& plan,
                               const KnowledgeBase& kb, Rng& rng) {
    int total = 0;
    for (const auto& [target, count] : plan) {
        if (count < 0) throw Error(ErrorKind::precondition, "negative chain length");
        total += count;
    }
    ProblemInstance out = inst;
    if (total == 0) return out;

    std::vector<QuantStatement> pool = intermediate_pool(inst, kb);
    if (pool.size() < static_cast<std::size_t>(total)) {
        throw Error(ErrorKind::pool_exhausted, std::to_string(total) + " intermediates requested, " +
                                                   std::to_string(pool.size()) + " true statements available");
    }
    rng.shuffle(pool);

    std::vector<Formula> formulas = inst.premise_formulas();
    std::size_t next = 0;
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const auto& [target, count] = plan[k];
        if (count == 0) continue;
        const char letter = kChainLetters[std::min(k, kChainLetters.size() - 1)];
        std::vector<std::string> names;
        for (int i = 0; i < count; ++i) {
            names.push_back(fresh_atom(letter, out.bindings));
            out.bindings[names.back()] = pool[next++];
        }
        formulas = expand_implication(formulas, target, names);
    }

    out.premises = render_all(formulas, out.bindings);
    out.depth += total;
    const Validity validity = entails(formulas, out.conclusion.formula) ? Validity::valid : Validity::invalid;
    if (validity != inst.validity) throw std::logic_error("depth expansion changed the validity label");
    if (out.alignment != Alignment::gibberish) out.alignment = label_alignment(out, kb);
    out.id = content_id(out);
    return out;
}

std::vector<Formula> implication_premises(const ProblemInstance& inst) {
    std::vector<Formula> out;
    for (const auto& p : inst.premises) {
        if (p.formula.kind() == Formula::Kind::implication) out.push_back(p.formula);
    }
    return out;
}

struct Target {
    Validity validity;
    Alignment alignment;
    Direction direction;
    int template_index;
    int depth;
};

ProblemInstance build_instance(SchemaName name, const Target& target, std::uint64_t seed, const KnowledgeBase& kb,
                               bool strict, std::vector<std::string>* notes) {
    const Schema& s = schema(name);
    Rng rng(seed);

    AtomMap identity;
    for (const auto& v : s.variables) identity[v] = v;
    const Argument arg =
        target.validity == Validity::valid ? instantiate_valid(s, identity) : instantiate_invalid(s, identity);
    std::vector<Formula> all = arg.premises;
    all.push_back(arg.conclusion);
    const std::vector<std::string> atoms = atoms_of(all);
    const std::vector<std::size_t> implications = s.implication_premises();
    const bool wants_depth = target.depth > 0 && !implications.empty();

    // Pick the real-world truth value of every atom.
    struct Candidate {
        Assignment values;
        std::vector<std::size_t> eligible;  // implications that may be chained
    };
    std::vector<Candidate> candidates;
    int best_score = -1;
    for (std::uint32_t bits = 0; bits < (1U << atoms.size()); ++bits) {
        Assignment v;
        for (std::size_t i = 0; i < atoms.size(); ++i) v[atoms[i]] = (bits >> i) & 1U;
        const bool conclusion = eval_formula(arg.conclusion, v);
        int true_premises = 0;
        for (const auto& p : arg.premises) true_premises += eval_formula(p, v);

        if (target.alignment == Alignment::aligned) {
            if (!conclusion || true_premises != static_cast<int>(arg.premises.size())) continue;
            // A chain of true intermediates ending in a false consequent has a false link.
            std::vector<std::size_t> eligible;
            for (std::size_t idx : implications) {
                if (eval_formula(arg.premises[idx].right(), v)) eligible.push_back(idx);
            }
            candidates.push_back({std::move(v), std::move(eligible)});
        } else {
            if (conclusion) continue;
            if (true_premises > best_score) {
                candidates.clear();
                best_score = true_premises;
            }
            if (true_premises == best_score) candidates.push_back({std::move(v), implications});
        }
    }
    if (candidates.empty()) {
        throw Error(ErrorKind::infeasible_balance,
                    std::string(to_string(name)) + ": no " + std::string(to_string(target.validity)) + " " +
                        std::string(to_string(target.alignment)) + " instance exists at depth " +
                        std::to_string(target.depth));
    }
    int depth = wants_depth ? target.depth : 0;
    if (wants_depth && target.alignment == Alignment::aligned) {
        std::vector<Candidate> chainable;
        for (const auto& c : candidates) {
            if (!c.eligible.empty()) chainable.push_back(c);
        }
        if (!chainable.empty()) {
            candidates = std::move(chainable);
        } else if (strict) {
            depth = 0;
            if (notes) {
                notes->push_back(std::string(to_string(name)) + " " + std::string(to_string(target.validity)) +
                                 " aligned instance kept at depth 0 instead of " + std::to_string(target.depth) +
                                 ": every implication has a false consequent");
            }
        } else {
            for (auto& c : candidates) c.eligible = implications;
        }
    }
    const Candidate& chosen = candidates[rng.below(candidates.size())];

    // One triple per atom, so every atom is a distinct proposition.
    if (kb.triples().size() < atoms.size()) {
        throw Error(ErrorKind::infeasible_balance, "triple catalog has " + std::to_string(kb.triples().size()) +
                                                       " entries; " + std::to_string(atoms.size()) + " needed");
    }
    std::vector<std::size_t> order(kb.triples().size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    ProblemInstance inst;
    inst.schema = name;
    inst.direction = target.direction;
    inst.template_index = target.template_index;
    inst.seed = seed;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const EntityTriple& t = kb.triples()[order[i]];
        const std::pair<const std::string*, const std::string*> pairs[] = {{&t.a, &t.b}, {&t.b, &t.c}, {&t.a, &t.c}};
        auto [lower, upper] = pairs[rng.below(3)];
        const bool forward = target.direction == Direction::forward;
        SentencePair sp = make_sentence_pair(target.template_index, forward ? *lower : *upper, forward ? *upper : *lower);
        const bool wanted = chosen.values.at(atoms[i]);
        inst.bindings[atoms[i]] = truth_of(sp.positive, kb.model()) == wanted ? sp.positive : sp.negative;
    }

    inst.premises = render_all(arg.premises, inst.bindings);
    inst.conclusion = {arg.conclusion, render_sentence(arg.conclusion, inst.bindings)};
    inst.conclusion_factual = factual_truth(arg.conclusion, inst.bindings, kb.model());
    inst.validity = entails(arg.premises, arg.conclusion) ? Validity::valid : Validity::invalid;
    inst.alignment = label_alignment(inst, kb);

    if (depth > 0) {
        std::vector<int> counts(chosen.eligible.size(), 0);
        for (int k = 0; k < depth; ++k) ++counts[k % counts.size()];
        std::vector<std::pair<Formula, int>> plan;
        for (std::size_t k = 0; k < chosen.eligible.size(); ++k) {
            plan.emplace_back(arg.premises[chosen.eligible[k]], counts[k]);
        }
        inst = expand_planned(inst, plan, kb, rng);
    }

    if (inst.validity != target.validity) throw std::logic_error("generated validity label does not match plan");
    if (strict && inst.alignment != target.alignment) {
        throw std::logic_error("generated alignment label does not match plan");
    }
    inst.id = content_id(inst);
    return inst;
}

}  // namespace

std::vector<ProblemInstance> generate_dataset(const GenerationConfig& cfg, const KnowledgeBase& kb,
                                              std::vector<std::string>* notes) {
    cfg.validate();
    std::vector<ProblemInstance> out;
    out.reserve(cfg.schemas.size() * static_cast<std::size_t>(cfg.per_schema));
    const std::uint64_t root = splitmix64(cfg.seed);

    for (SchemaName name : cfg.schemas) {
        const std::uint64_t schema_key = root ^ fnv1a64(to_string(name));
        const bool expandable = !schema(name).implication_premises().empty();
        std::vector<int> depths(static_cast<std::size_t>(cfg.per_schema));
        for (std::size_t k = 0; k < depths.size(); ++k) depths[k] = expandable ? cfg.depths[k % cfg.depths.size()] : 0;
        Rng depth_rng(splitmix64(schema_key ^ 0xD3E7ULL));
        depth_rng.shuffle(depths);

        // Each block of 8 covers the validity x alignment x direction cube once;
        // the rotating offset gives every template exactly two slots per block.
        for (int k = 0; k < cfg.per_schema; ++k) {
            const int cell = k % 8;
            const int block = k / 8;
            Target target{(cell & 1) ? Validity::invalid : Validity::valid,
                          (cell & 2) ? Alignment::conflicting : Alignment::aligned,
                          (cell & 4) ? Direction::inverted : Direction::forward, (cell + block) % 4 + 1,
                          depths[static_cast<std::size_t>(k)]};
            const std::uint64_t seed = splitmix64(schema_key + static_cast<std::uint64_t>(k));
            out.push_back(build_instance(name, target, seed, kb, cfg.strict_balance, notes));
        }
    }
    return out;
}

ProblemInstance expand_depth(const ProblemInstance& inst, const std::vector<int>& per_implication,
                             const KnowledgeBase& kb, std::uint64_t pool_seed) {
    const std::vector<Formula> implications = implication_premises(inst);
    if (implications.empty()) {
        throw Error(ErrorKind::schema_without_implication,
                    std::string(to_string(inst.schema)) + " has no implication to expand");
    }
    if (per_implication.size() != implications.size()) {
        throw Error(ErrorKind::precondition, "expected " + std::to_string(implications.size()) + " chain lengths");
    }
    std::vector<std::pair<Formula, int>> plan;
    for (std::size_t k = 0; k < implications.size(); ++k) plan.emplace_back(implications[k], per_implication[k]);
    Rng rng(pool_seed);
    return expand_planned(inst, plan, kb, rng);
}

ProblemInstance expand_depth(const ProblemInstance& inst, int additions, const KnowledgeBase& kb,
                             std::uint64_t pool_seed) {
    if (additions < 0) throw Error(ErrorKind::precondition, "negative number of additions");
    const std::size_t n = implication_premises(inst).size();
    if (n == 0) {
        throw Error(ErrorKind::schema_without_implication,
                    std::string(to_string(inst.schema)) + " has no implication to expand");
    }
    std::vector<int> counts(n, 0);
    for (int k = 0; k < additions; ++k) ++counts[static_cast<std::size_t>(k) % n];
    return expand_depth(inst, counts, kb, pool_seed);
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Whole-word replacement, longest pattern first at each position.
std::string replace_words(const std::string& text, const std::vector<std::pair<std::string, std::string>>& subs) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        bool replaced = false;
        if (i == 0 || !is_word_char(text[i - 1])) {
            for (const auto& [from, to] : subs) {
                if (text.compare(i, from.size(), from) == 0 &&
                    (i + from.size() == text.size() || !is_word_char(text[i + from.size()]))) {
                    out += to;
                    i += from.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out += text[i++];
    }
    return out;
}

}  // namespace

ProblemInstance gibberize(const ProblemInstance& inst, std::uint64_t seed) {
    Rng rng(seed);
    std::set<std::string> entities;
    for (const auto& [atom_id, s] : inst.bindings) {
        entities.insert(s.subject);
        entities.insert(s.predicate);
    }
    std::set<std::string> taken = entities;
    std::map<std::string, std::string> mapping;
    for (const auto& e : entities) {
        std::string word;
        do {
            word.clear();
            const auto len = 4 + rng.below(5);
            for (std::uint64_t i = 0; i < len; ++i) word += static_cast<char>('a' + rng.below(26));
        } while (!taken.insert(word).second);
        mapping[e] = word;
    }

    ProblemInstance out = inst;
    for (auto& [atom_id, s] : out.bindings) {
        s.subject = mapping.at(s.subject);
        s.predicate = mapping.at(s.predicate);
    }
    out.premises = render_all(inst.premise_formulas(), out.bindings);
    out.conclusion.text = render_sentence(out.conclusion.formula, out.bindings);

    std::vector<std::pair<std::string, std::string>> subs;
    for (const auto& [from, to] : mapping) subs.emplace_back(surface_form(from), to);
    std::sort(subs.begin(), subs.end(), [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    out.context = replace_words(inst.context, subs);
    out.question = replace_words(inst.question, subs);

    out.alignment = Alignment::gibberish;
    out.id = content_id(out);
    return out;
}

namespace {

std::string as_clause(std::string sentence) {
    if (!sentence.empty() && sentence.back() == '.') sentence.pop_back();
    if (!sentence.empty()) sentence[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sentence[0])));
    return sentence;
}

}  // namespace

Reformulation template_reformulation(const ProblemInstance& inst) {
    Reformulation r;
    for (std::size_t i = 0; i < inst.premises.size(); ++i) {
        if (i) r.context += ' ';
        r.context += (i == 0 ? "It's mentioned that " : "Additionally, it's stated that ") +
                     as_clause(inst.premises[i].text) + ".";
    }
    r.question = "Is it true that " + as_clause(inst.conclusion.text) + "?";
    return r;
}

std::optional<Reformulation> parse_reformulation(std::string_view reply) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    try {
        auto doc = nlohmann::json::parse(reply.substr(open, close - open + 1));
        if (!doc.is_object() || !doc.contains("context") || !doc.contains("question")) return std::nullopt;
        if (!doc["context"].is_string() || !doc["question"].is_string()) return std::nullopt;
        Reformulation r{doc["context"].get<std::string>(), doc["question"].get<std::string>()};
        if (r.context.empty() || r.question.empty()) return std::nullopt;
        return r;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

ProblemInstance reformulate(const ProblemInstance& inst, Backend* backend, const BackendParams& params) {
    ProblemInstance out = inst;
    if (!backend) {
        Reformulation r = template_reformulation(inst);
        out.context = std::move(r.context);
        out.question = std::move(r.question);
        return out;
    }
    Conversation conv;
    conv.tag = inst.id;
    conv.user(prompts::reformulate(inst.premise_texts(), inst.conclusion.text));
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last = backend->complete(conv, params).text;
        if (auto r = parse_reformulation(last)) {
            out.context = std::move(r->context);
            out.question = std::move(r->question);
            return out;
        }
    }
    throw Error(ErrorKind::reformulation_failed, inst.id + ": reply was not a JSON object with context and question");
}

std::vector<int> parse_depths(std::string_view text) {
    auto to_int = [&](std::string_view s) {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            throw Error(ErrorKind::parse, "bad depth list '" + std::string(text) + "'");
        }
        return std::stoi(std::string(s));
    };
    std::vector<int> out;
    if (auto dots = text.find(".."); dots != std::string_view::npos) {
        int lo = to_int(text.substr(0, dots)), hi = to_int(text.substr(dots + 2));
        if (hi < lo) throw Error(ErrorKind::parse, "empty depth range '" + std::string(text) + "'");
        for (int d = lo; d <= hi; ++d) out.push_back(d);
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        out.push_back(to_int(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace forge
