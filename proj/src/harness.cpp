#include "forge/harness.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/generator.hpp"
#include "forge/random.hpp"

namespace forge {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Answer a) {
    switch (a) {
        case Answer::yes: return "Yes";
        case Answer::no: return "No";
        case Answer::unparseable: return "Unparseable";
    }
    return "?";
}

Answer parse_answer_tag(std::string_view text) {
    if (text == "Yes") return Answer::yes;
    if (text == "No") return Answer::no;
    if (text == "Unparseable") return Answer::unparseable;
    throw Error(ErrorKind::parse, "unknown answer tag '" + std::string(text) + "'");
}

std::string_view to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::standard_cot: return "standard-cot";
        case StrategyKind::far_two_stage: return "far-two-stage";
        case StrategyKind::far_single_prompt: return "far-single-prompt";
        case StrategyKind::zero_shot: return "zero-shot";
        case StrategyKind::few_shot: return "few-shot";
        case StrategyKind::evidence: return "evidence";
    }
    return "?";
}

std::string_view to_string(EvidenceMode m) {
    switch (m) {
        case EvidenceMode::none: return "none";
        case EvidenceMode::support: return "support";
        case EvidenceMode::negate: return "negate";
        case EvidenceMode::both: return "both";
    }
    return "?";
}

EvidenceMode parse_evidence_mode(std::string_view text) {
    for (auto m : {EvidenceMode::none, EvidenceMode::support, EvidenceMode::negate, EvidenceMode::both}) {
        if (to_string(m) == text) return m;
    }
    throw Error(ErrorKind::config, "unknown evidence mode '" + std::string(text) + "'");
}

std::string Strategy::name() const {
    std::string out(to_string(kind));
    if (kind == StrategyKind::evidence) out += "-" + std::string(to_string(evidence));
    return out;
}

Strategy parse_strategy(std::string_view text) {
    static const std::map<std::string_view, Strategy, std::less<>> names{
        {"baseline", {StrategyKind::standard_cot}},
        {"standard-cot", {StrategyKind::standard_cot}},
        {"far", {StrategyKind::far_two_stage}},
        {"far-two-stage", {StrategyKind::far_two_stage}},
        {"far-single", {StrategyKind::far_single_prompt}},
        {"far-single-prompt", {StrategyKind::far_single_prompt}},
        {"zero-shot", {StrategyKind::zero_shot}},
        {"few-shot", {StrategyKind::few_shot}},
        {"evidence", {StrategyKind::evidence, 4, EvidenceMode::both}},
        {"evidence-both", {StrategyKind::evidence, 4, EvidenceMode::both}},
        {"evidence-support", {StrategyKind::evidence, 4, EvidenceMode::support}},
        {"evidence-negate", {StrategyKind::evidence, 4, EvidenceMode::negate}},
    };
    auto it = names.find(text);
    if (it == names.end()) throw Error(ErrorKind::config, "unknown strategy '" + std::string(text) + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Answer parsing

namespace {

std::string strip_quoted(std::string_view reply) {
    // Curly quotes count as plain double quotes.
    std::string text;
    for (std::size_t i = 0; i < reply.size(); ++i) {
        if (reply.substr(i, 3) == "\xE2\x80\x9C" || reply.substr(i, 3) == "\xE2\x80\x9D") {
            text += '"';
            i += 2;
        } else {
            text += reply[i];
        }
    }
    std::vector<std::size_t> quotes;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '"') quotes.push_back(i);
    }
    if (quotes.size() % 2) quotes.pop_back();  // a stray quote opens nothing
    std::string out;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < quotes.size(); k += 2) {
        out += text.substr(pos, quotes[k] - pos);
        out += ' ';
        pos = quotes[k + 1] + 1;
    }
    out += text.substr(pos);
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

Answer parse_answer(std::string_view reply) {
    const std::string text = lower(strip_quoted(reply));
    Answer last = Answer::unparseable;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
        const std::string_view word(text.data() + i, j - i);
        if (word == "yes") last = Answer::yes;
        if (word == "no") last = Answer::no;
        i = j;
    }
    return last;
}

Answer parse_single_verdict(std::string_view reply) {
    const std::string text = lower(reply);
    const auto at = text.rfind(lower(prompts::kSingleVerdictLabel));
    if (at == std::string::npos) return Answer::unparseable;
    return parse_answer(reply.substr(at + prompts::kSingleVerdictLabel.size()));
}

Answer parse_single_flag(std::string_view reply) {
    const std::string text = lower(reply);
    const auto at = text.find(lower(prompts::kSingleFlagLabel));
    if (at == std::string::npos) return Answer::unparseable;
    const auto start = at + prompts::kSingleFlagLabel.size();
    auto end = text.find(lower(prompts::kSingleVerdictLabel), start);
    if (end == std::string::npos) end = text.size();
    return parse_answer(reply.substr(start, end - start));
}

Answer self_consistency(const std::vector<Answer>& answers) {
    const auto yes = std::count(answers.begin(), answers.end(), Answer::yes);
    const auto no = std::count(answers.begin(), answers.end(), Answer::no);
    if (yes > no) return Answer::yes;
    if (no > yes) return Answer::no;
    return Answer::unparseable;
}

// ---------------------------------------------------------------------------
// Protocols

namespace {

struct Question {
    std::vector<std::string> premises;
    std::string conclusion;
};

Question question_of(const ProblemInstance& inst, const ProtocolOptions& opts) {
    if (opts.use_context && !inst.context.empty() && !inst.question.empty()) return {{inst.context}, inst.question};
    return {inst.premise_texts(), inst.conclusion.text};
}

EvalRecord start_record(const ProblemInstance& inst, std::string strategy) {
    EvalRecord r;
    r.instance_id = inst.id;
    r.strategy = std::move(strategy);
    r.schema = inst.schema;
    r.depth = inst.depth;
    r.validity = inst.validity;
    r.alignment = inst.alignment;
    r.conclusion_factual = inst.conclusion_factual;
    return r;
}

void absorb(EvalRecord& r, const Completion& c) {
    r.latency_ms += c.latency_ms;
    r.prompt_tokens += c.prompt_tokens;
    r.completion_tokens += c.completion_tokens;
}

void finish(EvalRecord& r, std::vector<Answer> flags = {}) {
    r.verdict = self_consistency(r.answers);
    if (!flags.empty()) r.flag_answer = self_consistency(flags);
    const Answer expected = r.validity == Validity::valid ? Answer::yes : Answer::no;
    r.correct = r.verdict == expected;
}

using Parser = Answer (*)(std::string_view);

EvalRecord single_turn(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts,
                       std::string strategy, std::string prompt, Parser parse = parse_answer,
                       Parser parse_flag = nullptr) {
    EvalRecord r = start_record(inst, std::move(strategy));
    Conversation conv;
    conv.tag = inst.id;
    conv.user(std::move(prompt));
    std::vector<Answer> flags;
    for (auto& sample : sample_n(backend, conv, opts.params)) {
        Conversation t = conv;
        if (sample.ok()) {
            t.assistant(sample.completion->text);
            absorb(r, *sample.completion);
            r.answers.push_back(parse(sample.completion->text));
            if (parse_flag) flags.push_back(parse_flag(sample.completion->text));
        } else {
            r.errors.push_back(sample.error);
            r.answers.push_back(Answer::unparseable);
            if (parse_flag) flags.push_back(Answer::unparseable);
        }
        r.transcripts.push_back(std::move(t));
    }
    finish(r, std::move(flags));
    return r;
}

}  // namespace

EvalRecord run_baseline(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts) {
    auto q = question_of(inst, opts);
    return single_turn(inst, backend, opts, "standard-cot", prompts::standard(q.premises, q.conclusion));
}

EvalRecord run_zero_shot(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts) {
    auto q = question_of(inst, opts);
    return single_turn(inst, backend, opts, "zero-shot", prompts::zero_shot(q.premises, q.conclusion));
}

EvalRecord run_few_shot(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts,
                        const std::vector<prompts::Exemplar>& exemplars) {
    auto q = question_of(inst, opts);
    return single_turn(inst, backend, opts, "few-shot", prompts::few_shot(exemplars, q.premises, q.conclusion));
}

EvalRecord run_far_single(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts) {
    auto q = question_of(inst, opts);
    return single_turn(inst, backend, opts, "far-single-prompt",
                       prompts::flag_and_reason_single(q.premises, q.conclusion), parse_single_verdict,
                       parse_single_flag);
}

EvalRecord run_far(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts) {
    opts.params.validate();
    auto q = question_of(inst, opts);
    EvalRecord r = start_record(inst, "far-two-stage");
    const auto n = static_cast<std::size_t>(opts.params.samples);

    struct Run {
        Conversation conv;
        std::vector<Completion> replies;
        Answer flag = Answer::unparseable;
        Answer verdict = Answer::unparseable;
        std::string error;
    };
    std::vector<Run> runs(n);
    parallel_for(n, backend.max_inflight(), [&](std::size_t i) {
        Run& run = runs[i];
        run.conv.tag = inst.id;
        try {
            run.conv.user(prompts::flag(inst.conclusion.text));
            run.replies.push_back(backend.complete(run.conv, opts.params));
            run.conv.assistant(run.replies.back().text);
            run.flag = parse_answer(run.replies.back().text);

            run.conv.user(prompts::reason_after_flag(q.premises, q.conclusion));
            run.replies.push_back(backend.complete(run.conv, opts.params));
            run.conv.assistant(run.replies.back().text);
            run.verdict = parse_answer(run.replies.back().text);
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    });

    std::vector<Answer> flags;
    for (auto& run : runs) {
        for (const auto& c : run.replies) absorb(r, c);
        if (!run.error.empty()) r.errors.push_back(run.error);
        flags.push_back(run.flag);
        r.answers.push_back(run.verdict);
        r.transcripts.push_back(std::move(run.conv));
    }
    finish(r, std::move(flags));
    return r;
}

EvalRecord run_evidence(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts, EvidenceMode mode,
                        const std::vector<std::string>& evidence) {
    if (mode == EvidenceMode::none) throw Error(ErrorKind::precondition, "evidence strategy without a mode");
    if (evidence.empty() ||
        std::any_of(evidence.begin(), evidence.end(), [](const std::string& e) { return e.empty(); })) {
        throw Error(ErrorKind::missing_evidence, inst.id + ": no evidence text");
    }
    auto q = question_of(inst, opts);
    Strategy s{StrategyKind::evidence, 4, mode};
    EvalRecord r = single_turn(inst, backend, opts, s.name(), prompts::with_evidence(q.premises, evidence, q.conclusion));
    r.evidence_mode = to_string(mode);
    r.evidence = evidence;
    return r;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

EvalRecord run_evidence(const ProblemInstance& inst, Backend& backend, const ProtocolOptions& opts,
                        EvidenceMode mode) {
    std::vector<prompts::EvidenceStance> stances;
    if (mode == EvidenceMode::support || mode == EvidenceMode::both) stances.push_back(prompts::EvidenceStance::support);
    if (mode == EvidenceMode::negate || mode == EvidenceMode::both) stances.push_back(prompts::EvidenceStance::negate);

    std::vector<std::string> evidence;
    for (auto stance : stances) {
        Conversation conv;
        conv.tag = inst.id;
        conv.user(prompts::evidence_request(inst.premise_texts(), inst.conclusion.text, stance));
        std::string reason;
        try {
            std::string text = trim(backend.complete(conv, opts.params).text);
            if (!text.empty()) {
                evidence.push_back(std::move(text));
                continue;
            }
            reason = "empty evidence reply";
        } catch (const std::exception& e) {
            reason = e.what();
        }
        EvalRecord r = start_record(inst, Strategy{StrategyKind::evidence, 4, mode}.name());
        r.evidence_mode = to_string(mode);
        r.skipped = true;
        r.skip_reason = "evidence generation failed: " + reason;
        return r;
    }
    return run_evidence(inst, backend, opts, mode, evidence);
}

// ---------------------------------------------------------------------------
// Few-shot exemplars

ExemplarPool::ExemplarPool(std::vector<ProblemInstance> pool) : pool_(std::move(pool)) {}

ExemplarPool ExemplarPool::standard() {
    GenerationConfig cfg;
    cfg.per_schema = 8;
    cfg.seed = 0x6578656d706c6172ULL;
    return ExemplarPool(generate_dataset(cfg, KnowledgeBase{}));
}

namespace {

std::set<std::string> entities_of(const ProblemInstance& inst) {
    std::set<std::string> out;
    for (const auto& [id, s] : inst.bindings) out.insert({s.subject, s.predicate});
    return out;
}

}  // namespace

std::vector<prompts::Exemplar> ExemplarPool::select(const ProblemInstance& inst, int k) const {
    if (k <= 0) return {};
    const auto mine = entities_of(inst);
    struct Ranked {
        std::size_t overlap;
        std::size_t order;
        const ProblemInstance* inst;
    };
    std::vector<std::size_t> order(pool_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(fnv1a64(inst.id));
    rng.shuffle(order);

    std::vector<Ranked> valid, invalid;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const ProblemInstance& cand = pool_[order[rank]];
        if (cand.id == inst.id) continue;
        std::size_t overlap = 0;
        for (const auto& e : entities_of(cand)) overlap += mine.count(e);
        (cand.validity == Validity::valid ? valid : invalid).push_back({overlap, rank, &cand});
    }
    auto by_overlap = [](const Ranked& a, const Ranked& b) {
        return a.overlap != b.overlap ? a.overlap < b.overlap : a.order < b.order;
    };
    std::sort(valid.begin(), valid.end(), by_overlap);
    std::sort(invalid.begin(), invalid.end(), by_overlap);

    const auto want_valid = static_cast<std::size_t>(k / 2 + k % 2);
    const auto want_invalid = static_cast<std::size_t>(k / 2);
    if (valid.size() < want_valid || invalid.size() < want_invalid) {
        throw Error(ErrorKind::pool_exhausted, "exemplar pool too small for k = " + std::to_string(k));
    }
    std::vector<prompts::Exemplar> out;
    for (std::size_t i = 0; out.size() < static_cast<std::size_t>(k); ++i) {
        for (auto* side : {&valid, &invalid}) {
            const std::size_t want = side == &valid ? want_valid : want_invalid;
            if (i < want && out.size() < static_cast<std::size_t>(k)) {
                const ProblemInstance& e = *(*side)[i].inst;
                out.push_back({e.premise_texts(), e.conclusion.text, e.validity == Validity::valid});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runs

EvalRecord evaluate_instance(const ProblemInstance& inst, Backend& backend, const EvalOptions& opts,
                             const ExemplarPool* exemplars) {
    const auto& p = opts.protocol;
    switch (opts.strategy.kind) {
        case StrategyKind::standard_cot: return run_baseline(inst, backend, p);
        case StrategyKind::far_two_stage: return run_far(inst, backend, p);
        case StrategyKind::far_single_prompt: return run_far_single(inst, backend, p);
        case StrategyKind::zero_shot: return run_zero_shot(inst, backend, p);
        case StrategyKind::few_shot: {
            if (!exemplars) throw Error(ErrorKind::precondition, "few-shot run without an exemplar pool");
            return run_few_shot(inst, backend, p, exemplars->select(inst, opts.strategy.shots));
        }
        case StrategyKind::evidence: return run_evidence(inst, backend, p, opts.strategy.evidence);
    }
    throw Error(ErrorKind::precondition, "unknown strategy");
}

bool failed(const EvalRecord& r) {
    return !r.skipped && !r.answers.empty() && r.errors.size() >= r.answers.size();
}

std::vector<EvalRecord> evaluate(const std::vector<ProblemInstance>& dataset, Backend& backend,
                                 const EvalOptions& opts, const std::set<std::string>& done,
                                 const std::function<void(const EvalRecord&)>& sink) {
    opts.protocol.params.validate();
    const std::string suffix = "|" + opts.strategy.name();
    std::vector<const ProblemInstance*> todo;
    std::set<std::string> queued;
    for (const auto& inst : dataset) {
        const std::string key = inst.id + suffix;
        if (!done.count(key) && queued.insert(key).second) todo.push_back(&inst);
    }

    std::optional<ExemplarPool> pool;
    if (opts.strategy.kind == StrategyKind::few_shot) pool = ExemplarPool::standard();

    std::vector<EvalRecord> out(todo.size());
    std::mutex sink_mutex;
    const std::size_t workers = opts.workers ? opts.workers : backend.max_inflight();
    parallel_for(todo.size(), workers, [&](std::size_t i) {
        out[i] = evaluate_instance(*todo[i], backend, opts, pool ? &*pool : nullptr);
        if (sink) {
            std::lock_guard lock(sink_mutex);
            sink(out[i]);
        }
    });
    std::sort(out.begin(), out.end(), [](const EvalRecord& a, const EvalRecord& b) { return a.key() < b.key(); });
    return out;
}

EvalRun evaluate_to_file(const std::vector<ProblemInstance>& dataset, Backend& backend, const EvalOptions& opts,
                         const std::string& path) {
    EvalRun run;
    if (std::filesystem::exists(path)) run.records = load_records(path);
    std::set<std::string> done;
    for (const auto& r : run.records) done.insert(r.key());
    const std::string name = opts.strategy.name();
    for (const auto& inst : dataset) run.resumed += done.count(inst.id + "|" + name);

    {
        std::ofstream append(path, std::ios::app);
        if (!append) throw Error(ErrorKind::io, "cannot write records to '" + path + "'");
        auto fresh = evaluate(dataset, backend, opts, done, [&](const EvalRecord& r) {
            if (failed(r)) return;
            append << to_json_line(r) << '\n';
            append.flush();
        });
        for (auto& r : fresh) (failed(r) ? run.failures : run.records).push_back(std::move(r));
    }
    save_records(path, run.records);
    std::sort(run.records.begin(), run.records.end(),
              [](const EvalRecord& a, const EvalRecord& b) { return a.key() < b.key(); });
    return run;
}

std::map<std::string, OracleFacts> oracle_facts(const std::vector<ProblemInstance>& dataset) {
    std::map<std::string, OracleFacts> out;
    for (const auto& inst : dataset) {
        OracleFacts f{inst.validity == Validity::valid, inst.conclusion_factual, inst.context, inst.question};
        if (f.context.empty() || f.question.empty()) {
            auto r = template_reformulation(inst);
            f.context = std::move(r.context);
            f.question = std::move(r.question);
        }
        out[inst.id] = std::move(f);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string to_json_line(const EvalRecord& r) {
    ojson transcripts = ojson::array();
    for (const auto& conv : r.transcripts) {
        ojson messages = ojson::array();
        for (const auto& m : conv.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
        transcripts.push_back(std::move(messages));
    }
    ojson answers = ojson::array();
    for (auto a : r.answers) answers.push_back(to_string(a));

    ojson j;
    j["instance_id"] = r.instance_id;
    j["strategy"] = r.strategy;
    j["evidence_mode"] = r.evidence_mode;
    j["evidence"] = r.evidence;
    j["transcripts"] = std::move(transcripts);
    j["answers"] = std::move(answers);
    j["verdict"] = to_string(r.verdict);
    j["flag_answer"] = r.flag_answer ? to_string(*r.flag_answer) : "n/a";
    j["correct"] = r.correct;
    j["schema"] = to_string(r.schema);
    j["depth"] = r.depth;
    j["validity"] = to_string(r.validity);
    j["alignment"] = to_string(r.alignment);
    j["conclusion_factual"] = r.conclusion_factual;
    j["latency_ms"] = r.latency_ms;
    j["prompt_tokens"] = r.prompt_tokens;
    j["completion_tokens"] = r.completion_tokens;
    j["errors"] = r.errors;
    j["skipped"] = r.skipped;
    j["skip_reason"] = r.skip_reason;
    return j.dump();
}

EvalRecord record_from_json(std::string_view line) {
    try {
        const auto j = ojson::parse(line);
        EvalRecord r;
        r.instance_id = j.at("instance_id").get<std::string>();
        r.strategy = j.at("strategy").get<std::string>();
        r.evidence_mode = j.value("evidence_mode", std::string());
        r.evidence = j.value("evidence", std::vector<std::string>{});
        for (const auto& t : j.at("transcripts")) {
            Conversation conv;
            conv.tag = r.instance_id;
            for (const auto& m : t) {
                conv.messages.push_back(
                    {parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
            }
            r.transcripts.push_back(std::move(conv));
        }
        for (const auto& a : j.at("answers")) r.answers.push_back(parse_answer_tag(a.get<std::string>()));
        r.verdict = parse_answer_tag(j.at("verdict").get<std::string>());
        const auto flag = j.at("flag_answer").get<std::string>();
        if (flag != "n/a") r.flag_answer = parse_answer_tag(flag);
        r.correct = j.at("correct").get<bool>();
        r.schema = parse_schema_name(j.at("schema").get<std::string>());
        r.depth = j.at("depth").get<int>();
        r.validity = parse_validity(j.at("validity").get<std::string>());
        r.alignment = parse_alignment(j.at("alignment").get<std::string>());
        r.conclusion_factual = j.value("conclusion_factual", false);
        r.latency_ms = j.value("latency_ms", 0.0);
        r.prompt_tokens = j.value("prompt_tokens", 0);
        r.completion_tokens = j.value("completion_tokens", 0);
        r.errors = j.value("errors", std::vector<std::string>{});
        r.skipped = j.value("skipped", false);
        r.skip_reason = j.value("skip_reason", std::string());
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("record: ") + e.what());
    }
}

void write_records(std::ostream& out, const std::vector<EvalRecord>& records) {
    for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<EvalRecord> read_records(std::istream& in) {
    std::vector<EvalRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(record_from_json(line));
    }
    return out;
}

std::vector<EvalRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open records '" + path + "'");
    return read_records(in);
}

void save_records(const std::string& path, std::vector<EvalRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const EvalRecord& a, const EvalRecord& b) { return a.key() < b.key(); });
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write records to '" + path + "'");
    write_records(out, records);
}

}  // namespace forge
