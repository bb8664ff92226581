#include "fraudlens/providers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/rng.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;

namespace {

std::string collapse_ws(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_ws = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

}  // namespace

void ChatRequest::validate() const {
    if (messages.empty()) throw ValidationError("chat request has no messages");
    if (temperature < 0.0) throw ValidationError("chat temperature must be >= 0");
}

std::string chat_request_digest(const ChatRequest& req) {
    json canonical = json::array();
    for (const auto& m : req.messages) {
        canonical.push_back(json{{"content", collapse_ws(m.content)}, {"role", m.role}});
    }
    return hex64(fnv1a64(canonical.dump()));
}

std::string to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::http_chat: return "http_chat";
        case ProviderKind::scripted: return "scripted";
        case ProviderKind::hashed_embed: return "hashed_embed";
        case ProviderKind::http_embed: return "http_embed";
    }
    throw ConfigError("unknown provider kind");
}

ProviderKind provider_kind_from_string(const std::string& text) {
    if (text == "http_chat") return ProviderKind::http_chat;
    if (text == "scripted") return ProviderKind::scripted;
    if (text == "hashed_embed") return ProviderKind::hashed_embed;
    if (text == "http_embed") return ProviderKind::http_embed;
    throw ConfigError("unknown provider kind: \"" + text + "\"");
}

void ProviderConfig::validate() const {
    const bool offline = kind == ProviderKind::scripted || kind == ProviderKind::hashed_embed;
    if (offline && !api_key_env.empty()) {
        throw ConfigError("provider kind " + to_string(kind) + " takes no credentials");
    }
    const bool http = kind == ProviderKind::http_chat || kind == ProviderKind::http_embed;
    if (http && endpoint.empty()) {
        throw ConfigError("provider kind " + to_string(kind) + " requires an endpoint");
    }
    if (!(timeout_s > 0.0)) throw ConfigError("provider timeout_s must be positive");
    if (max_retries < 1) throw ConfigError("provider max_retries must be >= 1");
}

std::string ProviderConfig::fingerprint() const {
    return to_string(kind) + ":" + hex64(fnv1a64(to_string(kind) + "|" + endpoint + "|" + model));
}

ProviderConfig ProviderConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed provider config: ") + e.what());
    }
    ProviderConfig cfg;
    try {
        cfg.kind = provider_kind_from_string(j.at("kind").get<std::string>());
        cfg.endpoint = j.value("endpoint", std::string());
        cfg.model = j.value("model", std::string());
        cfg.api_key_env = j.value("api_key_env", std::string());
        cfg.timeout_s = j.value("timeout_s", 30.0);
        cfg.max_retries = j.value("max_retries", 3);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid provider config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string ProviderConfig::to_json_text() const {
    json j{{"kind", to_string(kind)},   {"endpoint", endpoint},
           {"model", model},            {"api_key_env", api_key_env},
           {"timeout_s", timeout_s},    {"max_retries", max_retries}};
    return j.dump(2);
}

ProviderConfig load_provider_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open provider config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ProviderConfig::from_json_text(text);
}

std::string ScriptStore::lookup(const std::string& digest) const {
    auto it = responses_.find(digest);
    if (it != responses_.end()) return it->second;
    if (policy_ == MissPolicy::error) {
        throw ProviderError("no scripted response for digest " + digest);
    }
    return "No scripted response is available for digest " + digest + ".";
}

ScriptStore ScriptStore::load(const std::string& path, MissPolicy policy) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script store: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed script store " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("script store must be a JSON object: " + path);
    std::map<std::string, std::string> responses;
    for (const auto& [digest, response] : j.items()) {
        if (!response.is_string()) {
            throw ParseError("script store value for digest " + digest + " must be a string");
        }
        responses[digest] = response.get<std::string>();
    }
    return ScriptStore(std::move(responses), policy);
}

void ScriptStore::save(const std::string& path) const {
    json j = json::object();
    for (const auto& [digest, response] : responses_) j[digest] = response;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write script store: " + path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// ChatProvider
// ---------------------------------------------------------------------------

ChatProvider::ChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.kind == ProviderKind::scripted) {
        if (cfg_.endpoint.empty()) {
            throw ConfigError("scripted chat provider needs endpoint = script store path");
        }
        store_ = ScriptStore::load(cfg_.endpoint);
    } else if (cfg_.kind != ProviderKind::http_chat) {
        throw ConfigError("provider kind " + to_string(cfg_.kind) + " is not a chat kind");
    }
}

ChatProvider::ChatProvider(ProviderConfig cfg, ScriptStore store)
    : cfg_(std::move(cfg)), store_(std::move(store)) {
    cfg_.validate();
    if (cfg_.kind != ProviderKind::scripted) {
        throw ConfigError("a script store only applies to the scripted kind");
    }
}

std::string ChatProvider::chat(const ChatRequest& req) const {
    req.validate();
    if (cfg_.kind == ProviderKind::scripted) {
        return store_.lookup(chat_request_digest(req));
    }
    return http_chat(req);
}

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must be a full URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string resolve_api_key(const std::string& env_name) {
    if (env_name.empty()) return {};
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw ConfigError("environment variable " + env_name + " is not set");
    }
    return value;
}

bool transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

// POSTs JSON with retry/backoff; returns the response body on 2xx.
std::string http_post_json(const ProviderConfig& cfg, const std::string& body) {
    const ParsedUrl url = split_url(cfg.endpoint);
    const std::string api_key = resolve_api_key(cfg.api_key_env);
    std::string last_error = "no attempt made";
    for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 1) {
            const auto backoff = std::chrono::duration<double>((1 << (attempt - 2)) * 1.0);
            std::this_thread::sleep_for(
                std::chrono::duration_cast<std::chrono::milliseconds>(backoff));
        }
        httplib::Client client(url.base);
        const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "status " + std::to_string(res->status);
        if (!transient_status(res->status)) break;
    }
    throw ProviderError("request to " + cfg.endpoint + " failed after retries (" + last_error + ")");
}

}  // namespace

std::string ChatProvider::http_chat(const ChatRequest& req) const {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back(json{{"role", m.role}, {"content", m.content}});
    }
    const json body{{"model", req.model_name.empty() ? cfg_.model : req.model_name},
                    {"messages", messages},
                    {"temperature", req.temperature},
                    {"max_tokens", req.max_output_tokens}};
    const std::string response = http_post_json(cfg_, body.dump());
    try {
        const json j = json::parse(response);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected chat response shape: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// EmbedProvider
// ---------------------------------------------------------------------------

EmbedProvider::EmbedProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.kind != ProviderKind::hashed_embed && cfg_.kind != ProviderKind::http_embed) {
        throw ConfigError("provider kind " + to_string(cfg_.kind) + " is not an embed kind");
    }
}

std::size_t EmbedProvider::dimensions() const {
    if (cfg_.kind == ProviderKind::hashed_embed) return kHashedDims;
    return 0;  // http kind: discovered from the first batch
}

std::vector<std::vector<double>> EmbedProvider::embed(const std::vector<std::string>& texts) const {
    if (texts.empty()) throw ValidationError("embed called with no texts");
    if (cfg_.kind == ProviderKind::hashed_embed) {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(hashed_embedding(t));
        return out;
    }
    return http_embed(texts);
}

std::vector<std::vector<double>> EmbedProvider::http_embed(
    const std::vector<std::string>& texts) const {
    const json body{{"model", cfg_.model}, {"input", texts}};
    const std::string response = http_post_json(cfg_, body.dump());
    std::vector<std::vector<double>> out;
    try {
        const json j = json::parse(response);
        for (const auto& row : j.at("data")) {
            out.push_back(row.at("embedding").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected embedding response shape: ") + e.what());
    }
    if (out.size() != texts.size()) {
        throw ProviderError("embedding count mismatch: sent " + std::to_string(texts.size()) +
                            ", got " + std::to_string(out.size()));
    }
    for (const auto& v : out) {
        if (v.size() != out.front().size()) {
            throw ProviderError("embedding dimensionality drift within batch");
        }
    }
    return out;
}

std::vector<double> hashed_embedding(const std::string& text) {
    std::vector<double> v(kHashedDims, 0.0);
    if (text.empty()) return v;
    // Boundary markers guarantee at least one 3-gram for any non-empty input.
    std::string s = "\x02" + to_lower_ascii(text) + "\x03";
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
        const std::uint64_t h = fnv1a64(s.data() + i, 3);
        const std::size_t dim = static_cast<std::size_t>(h % kHashedDims);
        v[dim] += ((h >> 8) & 1ULL) ? 1.0 : -1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("cosine_similarity dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace fraudlens
