#include "forge/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include <CLI11.hpp>

#include "forge/error.hpp"
#include "forge/harness.hpp"

namespace forge {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "backend.kind",         "backend.policy",         "backend.table",      "backend.endpoint",
        "backend.model",        "backend.temperature",    "backend.top_p",      "backend.max_tokens",
        "backend.samples",      "backend.max_inflight",   "backend.max_retries", "backend.backoff_ms",
        "backend.timeout_s",    "backend.transcript_log", "embedding.kind",     "embedding.endpoint",
        "embedding.model",      "generation.schemas",     "generation.per_schema", "generation.depths",
        "generation.seed",      "generation.strict_balance", "generation.triples",
    };
    return keys;
}

namespace {

bool known(const std::string& key) {
    const auto& keys = known_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

std::string upper(std::string s) {
    for (auto& c : s) c = c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

Settings read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw Error(ErrorKind::config, path + ": " + e.what());
    }
    Settings out;
    for (const auto& item : items) {
        const std::string key = item.fullname();
        // Section headers show up as items named "++" / "--".
        if (item.name == "++" || item.name == "--") continue;
        if (item.name.find("api_key") != std::string::npos || item.name == "key") {
            throw Error(ErrorKind::config, path + ": credentials belong in FORGE_API_KEY, not in the file");
        }
        if (!known(key)) throw Error(ErrorKind::config, path + ": unknown key '" + key + "'");
        std::string value;
        for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
        out[key] = value;
    }
    return out;
}

Settings env_settings(const std::function<const char*(const char*)>& getenv) {
    Settings out;
    for (const auto& key : known_keys()) {
        const std::string name = "FORGE_" + upper(key);
        if (const char* v = getenv(name.c_str())) out[key] = v;
    }
    return out;
}

namespace {

template <typename T>
T number(const Settings& s, const std::string& key, T fallback) {
    auto it = s.find(key);
    if (it == s.end()) return fallback;
    const std::string& v = it->second;
    try {
        std::size_t used = 0;
        T out;
        if constexpr (std::is_floating_point_v<T>) {
            out = static_cast<T>(std::stod(v, &used));
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
            out = static_cast<T>(std::stoull(v, &used));
        } else {
            out = static_cast<T>(std::stoll(v, &used));
        }
        if (used != v.size()) throw std::invalid_argument("trailing text");
        return out;
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::config, key + ": '" + v + "' is not a number");
    }
}

std::string text(const Settings& s, const std::string& key, std::string fallback) {
    auto it = s.find(key);
    return it == s.end() ? fallback : it->second;
}

bool boolean(const Settings& s, const std::string& key, bool fallback) {
    auto it = s.find(key);
    if (it == s.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw Error(ErrorKind::config, key + ": '" + it->second + "' is not a boolean");
}

}  // namespace

std::vector<SchemaName> parse_schema_list(const std::string& text) {
    if (text == "all" || text.empty()) return {kAllSchemas.begin(), kAllSchemas.end()};
    std::vector<SchemaName> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        std::string name = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        name.erase(std::remove_if(name.begin(), name.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
                   name.end());
        try {
            out.push_back(parse_schema_name(name));
        } catch (const Error&) {
            throw Error(ErrorKind::config, "unknown schema '" + name + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

Config resolve_config(const Settings& file, const Settings& env, const Settings& flags, std::string api_key) {
    Settings s = file;
    for (const auto* layer : {&env, &flags}) {
        for (const auto& [k, v] : *layer) {
            if (!known(k)) throw Error(ErrorKind::config, "unknown setting '" + k + "'");
            s[k] = v;
        }
    }

    Config c;
    auto& b = c.backend;
    b.kind = text(s, "backend.kind", b.kind);
    if (b.kind != "scripted" && b.kind != "http") throw Error(ErrorKind::config, "backend.kind must be scripted or http");
    b.policy = text(s, "backend.policy", b.policy);
    parse_oracle_policy(b.policy);
    b.table = text(s, "backend.table", b.table);
    b.endpoint = text(s, "backend.endpoint", b.endpoint);
    b.params.model = text(s, "backend.model", b.params.model);
    b.params.temperature = number(s, "backend.temperature", b.params.temperature);
    b.params.top_p = number(s, "backend.top_p", b.params.top_p);
    b.params.max_tokens = number(s, "backend.max_tokens", b.params.max_tokens);
    b.params.samples = number(s, "backend.samples", b.params.samples);
    b.max_inflight = number(s, "backend.max_inflight", b.max_inflight);
    b.max_retries = number(s, "backend.max_retries", b.max_retries);
    b.backoff_ms = number(s, "backend.backoff_ms", b.backoff_ms);
    b.timeout_s = number(s, "backend.timeout_s", b.timeout_s);
    b.transcript_log = text(s, "backend.transcript_log", b.transcript_log);
    b.api_key = std::move(api_key);
    b.params.validate();
    if (b.max_inflight == 0) throw Error(ErrorKind::config, "backend.max_inflight must be >= 1");
    if (b.max_retries < 0 || b.backoff_ms < 0 || b.timeout_s <= 0) {
        throw Error(ErrorKind::config, "retry settings must be non-negative and the timeout positive");
    }
    if (b.kind == "http" && b.endpoint.empty()) throw Error(ErrorKind::config, "backend.endpoint is required for http");

    c.embedding.kind = text(s, "embedding.kind", c.embedding.kind);
    if (c.embedding.kind != "tf" && c.embedding.kind != "http") {
        throw Error(ErrorKind::config, "embedding.kind must be tf or http");
    }
    c.embedding.endpoint = text(s, "embedding.endpoint", c.embedding.endpoint);
    c.embedding.model = text(s, "embedding.model", c.embedding.model);

    auto& g = c.generation;
    if (s.count("generation.schemas")) g.schemas = parse_schema_list(s.at("generation.schemas"));
    g.per_schema = number(s, "generation.per_schema", g.per_schema);
    if (s.count("generation.depths")) {
        try {
            g.depths = parse_depths(s.at("generation.depths"));
        } catch (const Error& e) {
            throw Error(ErrorKind::config, e.what());
        }
    }
    g.seed = number(s, "generation.seed", g.seed);
    g.strict_balance = boolean(s, "generation.strict_balance", g.strict_balance);
    c.triples = text(s, "generation.triples", c.triples);
    return c;
}

Config load_config(const std::string& path, const Settings& flags) {
    const Settings file = path.empty() ? Settings{} : read_config_file(path);
    const Settings env = env_settings([](const char* name) { return std::getenv(name); });
    const char* key = std::getenv("FORGE_API_KEY");
    return resolve_config(file, env, flags, key ? key : "");
}

std::unique_ptr<Backend> make_backend(const Config& cfg, const std::vector<ProblemInstance>& dataset,
                                      std::shared_ptr<Transport> transport) {
    const auto& b = cfg.backend;
    if (b.kind == "scripted") {
        std::map<std::string, TableEntry> table;
        if (!b.table.empty()) table = load_oracle_table(b.table);
        return std::make_unique<ScriptedOracle>(parse_oracle_policy(b.policy), oracle_facts(dataset), std::move(table));
    }
    HttpBackendOptions o;
    o.endpoint = b.endpoint;
    o.api_key = b.api_key;
    o.max_retries = b.max_retries;
    o.backoff = std::chrono::milliseconds(b.backoff_ms);
    o.max_inflight = b.max_inflight;
    o.transcript_log = b.transcript_log;
    return std::make_unique<HttpBackend>(std::move(o), transport ? transport : make_http_transport(b.timeout_s));
}

std::unique_ptr<EmbeddingBackend> make_embedding(const Config& cfg, std::shared_ptr<Transport> transport) {
    if (cfg.embedding.kind == "tf") return std::make_unique<TermFrequencyEmbedding>();
    if (cfg.embedding.endpoint.empty()) throw Error(ErrorKind::config, "embedding.endpoint is required for http");
    return std::make_unique<HttpEmbedding>(cfg.embedding.endpoint, cfg.backend.api_key, cfg.embedding.model,
                                           transport ? transport : make_http_transport(cfg.backend.timeout_s));
}

}  // namespace forge
