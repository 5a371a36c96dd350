#include "forge/backend.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/prompts.hpp"

namespace forge {

using nlohmann::json;

std::string_view to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "?";
}

Role parse_role(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    throw Error(ErrorKind::parse, "unknown role '" + std::string(text) + "'");
}

Conversation& Conversation::system(std::string content) {
    messages.push_back({Role::system, std::move(content)});
    return *this;
}

Conversation& Conversation::user(std::string content) {
    messages.push_back({Role::user, std::move(content)});
    return *this;
}

Conversation& Conversation::assistant(std::string content) {
    messages.push_back({Role::assistant, std::move(content)});
    return *this;
}

std::size_t Conversation::count(Role r) const {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.role == r;
    return n;
}

void Conversation::validate() const {
    if (messages.empty()) throw Error(ErrorKind::precondition, "empty conversation");
    for (std::size_t i = 1; i < messages.size(); ++i) {
        if (messages[i].role == Role::assistant && messages[i - 1].role == Role::assistant) {
            throw Error(ErrorKind::precondition, "two consecutive assistant messages");
        }
    }
}

std::string_view Conversation::last_user() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) return it->content;
    }
    return {};
}

void BackendParams::validate() const {
    if (temperature < 0) throw Error(ErrorKind::config, "temperature must be >= 0");
    if (!(top_p > 0 && top_p <= 1)) throw Error(ErrorKind::config, "top_p must be in (0, 1]");
    if (max_tokens <= 0) throw Error(ErrorKind::config, "max_tokens must be > 0");
    if (samples < 1) throw Error(ErrorKind::config, "samples must be >= 1");
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<Sample> sample_n(Backend& backend, const Conversation& conv, const BackendParams& params) {
    params.validate();
    std::vector<Sample> out(static_cast<std::size_t>(params.samples));
    parallel_for(out.size(), backend.max_inflight(), [&](std::size_t i) {
        try {
            out[i].completion = backend.complete(conv, params);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(OraclePolicy p) {
    switch (p) {
        case OraclePolicy::always_yes: return "always-yes";
        case OraclePolicy::always_no: return "always-no";
        case OraclePolicy::factual: return "factual";
        case OraclePolicy::logical: return "logical";
        case OraclePolicy::table: return "table";
    }
    return "?";
}

OraclePolicy parse_oracle_policy(std::string_view text) {
    for (auto p : {OraclePolicy::always_yes, OraclePolicy::always_no, OraclePolicy::factual, OraclePolicy::logical,
                   OraclePolicy::table}) {
        if (to_string(p) == text) return p;
    }
    throw Error(ErrorKind::config, "unknown oracle policy '" + std::string(text) + "'");
}

ScriptedOracle::ScriptedOracle(OraclePolicy policy, std::map<std::string, OracleFacts> facts,
                               std::map<std::string, TableEntry> table)
    : policy_(policy), facts_(std::move(facts)), table_(std::move(table)) {}

std::string ScriptedOracle::continuation_text() {
    return "The premises are restated first. Each premise is then applied in order. "
           "The conclusion is compared with what the premises establish.";
}

namespace {

constexpr std::string_view kUnsure = "I am not sure.";

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = c == ' ' || c == '\n' || c == '\t';
        n += !space && !in_word;
        in_word = !space;
    }
    return n;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

}  // namespace

std::string ScriptedOracle::verdict_reply(const std::string& tag) const {
    switch (policy_) {
        case OraclePolicy::always_yes: return "Yes";
        case OraclePolicy::always_no: return "No";
        case OraclePolicy::table: {
            auto it = table_.find(tag);
            return it == table_.end() ? std::string(kUnsure) : it->second.answer;
        }
        case OraclePolicy::logical:
        case OraclePolicy::factual: {
            auto it = facts_.find(tag);
            if (it == facts_.end()) return std::string(kUnsure);
            bool yes = policy_ == OraclePolicy::logical ? it->second.valid : it->second.conclusion_factual;
            return yes ? "Yes" : "No";
        }
    }
    return std::string(kUnsure);
}

std::string ScriptedOracle::flag_reply(const std::string& tag) const {
    switch (policy_) {
        case OraclePolicy::always_yes: return "Yes";
        case OraclePolicy::always_no: return "No";
        case OraclePolicy::table: {
            auto it = table_.find(tag);
            return it == table_.end() ? std::string(kUnsure) : it->second.flag;
        }
        default: {
            auto it = facts_.find(tag);
            if (it == facts_.end()) return std::string(kUnsure);
            return it->second.conclusion_factual ? "Yes" : "No";
        }
    }
}

Completion ScriptedOracle::complete(const Conversation& conv, const BackendParams& params) {
    count_call();
    conv.validate();
    params.validate();
    const std::string_view prompt = conv.last_user();

    std::string reply;
    if (contains(prompt, prompts::kReformulateMarker)) {
        auto it = facts_.find(conv.tag);
        if (it == facts_.end()) {
            reply = std::string(kUnsure);
        } else {
            reply = json{{"context", it->second.context}, {"question", it->second.question}}.dump();
        }
    } else if (contains(prompt, prompts::kEvidenceMarker)) {
        reply = contains(prompt, "supports the conclusion")
                    ? "A recent survey recorded several observations consistent with the conclusion."
                    : "A recent survey recorded several observations that contradict the conclusion.";
    } else if (contains(prompt, prompts::kContinueMarker)) {
        reply = continuation_text();
    } else if (contains(prompt, prompts::kCategorizeMarker)) {
        auto it = table_.find(conv.tag);
        reply = it != table_.end() ? it->second.answer : "active_computation";
    } else if (contains(prompt, prompts::kFlagHead) && contains(prompt, prompts::kSingleVerdictLabel)) {
        reply = policy_ == OraclePolicy::table
                    ? verdict_reply(conv.tag)
                    : std::string(prompts::kSingleFlagLabel) + " " + flag_reply(conv.tag) + "\n" +
                          std::string(prompts::kSingleVerdictLabel) + " " + verdict_reply(conv.tag);
    } else if (prompt.substr(0, prompts::kFlagHead.size()) == prompts::kFlagHead) {
        reply = flag_reply(conv.tag);
    } else if (contains(prompt, prompts::kReasoningQuestion)) {
        reply = verdict_reply(conv.tag);
    } else {
        reply = std::string(kUnsure);
    }

    Completion c;
    c.prompt_tokens = 0;
    for (const auto& m : conv.messages) c.prompt_tokens += static_cast<int>(word_count(m.content));
    c.completion_tokens = static_cast<int>(word_count(reply));
    c.text = std::move(reply);
    return c;
}

std::map<std::string, TableEntry> load_oracle_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open oracle table '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, "oracle table '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::parse, "oracle table must be a JSON object");
    std::map<std::string, TableEntry> out;
    for (const auto& [key, value] : doc.items()) {
        if (value.is_string()) {
            out[key] = {value.get<std::string>(), {}};
        } else if (value.is_object()) {
            out[key] = {value.value("answer", std::string{}), value.value("flag", std::string{})};
        } else {
            throw Error(ErrorKind::parse, "oracle table entry '" + key + "' must be a string or object");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void InflightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void InflightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

HttpBackend::HttpBackend(HttpBackendOptions options, std::shared_ptr<Transport> transport)
    : options_(std::move(options)), transport_(std::move(transport)), limiter_(options_.max_inflight) {
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpBackend::request_body(const Conversation& conv, const BackendParams& params) {
    json messages = json::array();
    for (const auto& m : conv.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return json{{"model", params.model},
                {"messages", messages},
                {"temperature", params.temperature},
                {"top_p", params.top_p},
                {"max_tokens", params.max_tokens}}
        .dump();
}

Completion HttpBackend::parse_response(std::string_view body) {
    try {
        json doc = json::parse(body);
        Completion c;
        c.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage") && doc["usage"].is_object()) {
            c.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
            c.completion_tokens = doc["usage"].value("completion_tokens", 0);
        }
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::malformed_response, e.what());
    }
}

Completion HttpBackend::complete(const Conversation& conv, const BackendParams& params) {
    count_call();
    conv.validate();
    params.validate();
    if (options_.api_key.empty()) throw Error(ErrorKind::auth_failure, "FORGE_API_KEY is not set");
    if (!transport_) throw Error(ErrorKind::config, "no HTTP transport configured");

    HttpRequest request{options_.endpoint,
                        {{"Authorization", "Bearer " + options_.api_key}, {"Content-Type", "application/json"}},
                        request_body(conv, params)};

    limiter_.acquire();
    struct Release {
        InflightLimiter& l;
        ~Release() { l.release(); }
    } release{limiter_};

    std::string last_error;
    for (int attempt = 0;; ++attempt) {
        const auto start = std::chrono::steady_clock::now();
        HttpResponse response = transport_->post(request);
        if (response.status == 200) {
            Completion c = parse_response(response.body);
            c.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            log_transcript(conv, c);
            return c;
        }
        if (response.status == 401 || response.status == 403) {
            throw Error(ErrorKind::auth_failure, "HTTP " + std::to_string(response.status));
        }
        const bool transient = response.status == 0 || response.status == 408 || response.status == 429 ||
                               response.status >= 500;
        if (!transient) {
            throw Error(ErrorKind::malformed_response,
                        "HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 200));
        }
        last_error = response.status == 0 ? response.error : "HTTP " + std::to_string(response.status);
        if (attempt >= options_.max_retries) break;
        options_.sleep(options_.backoff * (1LL << attempt));
    }
    throw Error(ErrorKind::exhausted_retries,
                std::to_string(options_.max_retries + 1) + " attempts failed; last: " + last_error);
}

void HttpBackend::log_transcript(const Conversation& conv, const Completion& reply) {
    if (options_.transcript_log.empty()) return;
    json messages = json::array();
    for (const auto& m : conv.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    json line{{"tag", conv.tag}, {"messages", messages}, {"reply", reply.text}};
    std::lock_guard lock(log_mutex_);
    std::ofstream out(options_.transcript_log, std::ios::app);
    out << line.dump() << '\n';
}

}  // namespace forge
