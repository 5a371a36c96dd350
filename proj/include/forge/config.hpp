#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "forge/anchors.hpp"
#include "forge/backend.hpp"
#include "forge/generator.hpp"
#include "forge/instance.hpp"

namespace forge {

// "section.key" -> raw value. Layers are merged with later layers winning.
using Settings = std::map<std::string, std::string>;

/// Every accepted key, e.g. "backend.endpoint".
const std::vector<std::string>& known_keys();

/// TOML-style file: [backend], [embedding] and [generation] tables of scalar or
/// array values. Unknown keys and credentials in the file are rejected.
Settings read_config_file(const std::string& path);

/// FORGE_<SECTION>_<KEY> for every known key, e.g. FORGE_BACKEND_ENDPOINT.
/// The credential is read separately from FORGE_API_KEY.
Settings env_settings(const std::function<const char*(const char*)>& getenv);

struct BackendConfig {
    std::string kind = "scripted";  // scripted | http
    std::string policy = "logical";  // scripted only
    std::string table;               // scripted table file
    std::string endpoint;
    BackendParams params;
    std::size_t max_inflight = 4;
    int max_retries = 4;
    int backoff_ms = 500;
    double timeout_s = 120;
    std::string transcript_log;
    std::string api_key;  // from FORGE_API_KEY only
};

struct EmbeddingConfig {
    std::string kind = "tf";  // tf | http
    std::string endpoint;
    std::string model;
};

struct Config {
    BackendConfig backend;
    EmbeddingConfig embedding;
    GenerationConfig generation;
    std::string triples;  // catalog file; empty means the built-in triples
};

/// Defaults, then file, then environment, then flags. Throws Error(config).
Config resolve_config(const Settings& file, const Settings& env, const Settings& flags, std::string api_key = {});

// Convenience: reads `path` (if non-empty) and the process environment.
Config load_config(const std::string& path, const Settings& flags = {});

/// Scripted backends answer from `dataset`; HTTP backends use `transport` or a
/// real HTTP client when it is null.
std::unique_ptr<Backend> make_backend(const Config& cfg, const std::vector<ProblemInstance>& dataset,
                                      std::shared_ptr<Transport> transport = nullptr);
std::unique_ptr<EmbeddingBackend> make_embedding(const Config& cfg, std::shared_ptr<Transport> transport = nullptr);

// Comma-separated schema names, or "all".
std::vector<SchemaName> parse_schema_list(const std::string& text);

}  // namespace forge
