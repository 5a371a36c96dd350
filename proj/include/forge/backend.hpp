#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace forge {

enum class Role { system, user, assistant };
std::string_view to_string(Role r);
Role parse_role(std::string_view text);

struct Message {
    Role role;
    std::string content;
    friend bool operator==(const Message&, const Message&) = default;
};

/// Ordered chat history. `tag` is a request key (usually an instance id) that
/// never leaves the process; scripted oracles use it to look up ground truth.
struct Conversation {
    std::vector<Message> messages;
    std::string tag;

    Conversation& system(std::string content);
    Conversation& user(std::string content);
    Conversation& assistant(std::string content);

    std::size_t count(Role r) const;
    // Throws Error(precondition) for an empty history or consecutive assistant turns.
    void validate() const;
    // Content of the most recent user message, or "" when there is none.
    std::string_view last_user() const;

    friend bool operator==(const Conversation&, const Conversation&) = default;
};

// Defaults are the sampling settings used for all reported runs.
struct BackendParams {
    double temperature = 0.7;
    double top_p = 0.95;
    int max_tokens = 4096;
    std::string model;
    int samples = 3;

    void validate() const;
};

struct Completion {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    double latency_ms = 0.0;
};

class Backend {
public:
    virtual ~Backend() = default;

    /// One assistant reply; the caller owns and extends the history.
    virtual Completion complete(const Conversation& conv, const BackendParams& params) = 0;

    // Requests this backend accepts concurrently.
    virtual std::size_t max_inflight() const { return 1; }

    std::size_t calls() const { return calls_.load(); }

protected:
    void count_call() { ++calls_; }

private:
    std::atomic<std::size_t> calls_{0};
};

// One self-consistency draw: either a completion or the error that ended it.
struct Sample {
    std::optional<Completion> completion;
    std::string error;
    bool ok() const { return completion.has_value(); }
};

/// params.samples independent completions of `conv`, in request order.
/// Failures are reported per sample rather than thrown.
std::vector<Sample> sample_n(Backend& backend, const Conversation& conv, const BackendParams& params);

// Runs fn(0..n-1) on up to `workers` threads. Results must be written by index.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Scripted oracles

enum class OraclePolicy { always_yes, always_no, factual, logical, table };
std::string_view to_string(OraclePolicy p);
OraclePolicy parse_oracle_policy(std::string_view text);

// Ground truth an oracle needs about one instance.
struct OracleFacts {
    bool valid = false;
    bool conclusion_factual = false;
    std::string context;
    std::string question;
};

struct TableEntry {
    std::string answer;
    std::string flag;
};

/// Deterministic stand-in for a model. Recognises the prompt kind from the last
/// user message and answers from the facts registered under the conversation tag.
/// Flag questions are always answered by factuality; validity questions per policy.
class ScriptedOracle : public Backend {
public:
    ScriptedOracle(OraclePolicy policy, std::map<std::string, OracleFacts> facts = {},
                   std::map<std::string, TableEntry> table = {});

    Completion complete(const Conversation& conv, const BackendParams& params) override;
    std::size_t max_inflight() const override { return 4; }

    OraclePolicy policy() const { return policy_; }
    static std::string continuation_text();

private:
    std::string verdict_reply(const std::string& tag) const;
    std::string flag_reply(const std::string& tag) const;

    OraclePolicy policy_;
    std::map<std::string, OracleFacts> facts_;
    std::map<std::string, TableEntry> table_;
};

std::map<std::string, TableEntry> load_oracle_table(const std::string& path);

// ---------------------------------------------------------------------------
// HTTP chat-completions client

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;  // 0: the request never got a response
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<Transport> make_http_transport(double timeout_seconds);

// Counting semaphore with a runtime bound.
class InflightLimiter {
public:
    explicit InflightLimiter(std::size_t limit) : available_(limit == 0 ? 1 : limit) {}
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t available_;
};

struct HttpBackendOptions {
    std::string endpoint;
    std::string api_key;
    int max_retries = 4;
    std::chrono::milliseconds backoff{500};
    std::size_t max_inflight = 4;
    std::string transcript_log;  // JSONL audit file; empty disables
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

/// Chat-completions style JSON over HTTP. Retries transport failures, 408, 429
/// and 5xx with exponential backoff; 401/403 fail immediately.
class HttpBackend : public Backend {
public:
    HttpBackend(HttpBackendOptions options, std::shared_ptr<Transport> transport);

    Completion complete(const Conversation& conv, const BackendParams& params) override;
    std::size_t max_inflight() const override { return options_.max_inflight; }

    static std::string request_body(const Conversation& conv, const BackendParams& params);
    // Throws Error(malformed_response).
    static Completion parse_response(std::string_view body);

private:
    void log_transcript(const Conversation& conv, const Completion& reply);

    HttpBackendOptions options_;
    std::shared_ptr<Transport> transport_;
    InflightLimiter limiter_;
    std::mutex log_mutex_;
};

}  // namespace forge
