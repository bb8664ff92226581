#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fraudlens {

// ---------------------------------------------------------------------------
// Chat requests
// ---------------------------------------------------------------------------

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_output_tokens = 4096;
    std::string model_name;

    void validate() const;
};

// Stable digest of the normalized message list (whitespace-collapsed content,
// canonical key order). Temperature and model are deliberately excluded so
// scripted fixtures replay across configs.
std::string chat_request_digest(const ChatRequest& req);

// ---------------------------------------------------------------------------
// Provider configuration
// ---------------------------------------------------------------------------

enum class ProviderKind { http_chat, scripted, hashed_embed, http_embed };

std::string to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(const std::string& text);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::scripted;
    std::string endpoint;     // http kinds: URL; scripted: script store path
    std::string model;
    std::string api_key_env;  // env var name; never an inline secret
    double timeout_s = 30.0;
    int max_retries = 3;

    void validate() const;
    // Stable per configuration; changes with kind, endpoint, or model.
    std::string fingerprint() const;

    static ProviderConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

ProviderConfig load_provider_config(const std::string& path);

// ---------------------------------------------------------------------------
// Scripted chat
// ---------------------------------------------------------------------------

enum class MissPolicy { error, echo_template };

class ScriptStore {
public:
    ScriptStore() = default;
    explicit ScriptStore(std::map<std::string, std::string> responses,
                         MissPolicy policy = MissPolicy::error)
        : responses_(std::move(responses)), policy_(policy) {}

    void add(const std::string& digest, const std::string& response) {
        responses_[digest] = response;
    }
    bool contains(const std::string& digest) const { return responses_.count(digest) > 0; }
    std::size_t size() const { return responses_.size(); }
    MissPolicy policy() const { return policy_; }
    void set_policy(MissPolicy policy) { policy_ = policy; }
    const std::map<std::string, std::string>& responses() const { return responses_; }

    // Looks up the digest; on a miss applies the miss policy (error throws a
    // ProviderError naming the digest, echo_template returns a fixed refusal).
    std::string lookup(const std::string& digest) const;

    static ScriptStore load(const std::string& path, MissPolicy policy = MissPolicy::error);
    void save(const std::string& path) const;

private:
    std::map<std::string, std::string> responses_;
    MissPolicy policy_ = MissPolicy::error;
};

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

// Anything that can answer a chat request; implemented by ChatProvider and by
// test/oracle backends.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const ChatRequest& req) const = 0;
};

// Shareable, internally synchronized chat handle. Offline (scripted) kind
// performs no network activity.
class ChatProvider : public ChatBackend {
public:
    explicit ChatProvider(ProviderConfig cfg);        // loads script store for scripted kind
    ChatProvider(ProviderConfig cfg, ScriptStore store);

    std::string chat(const ChatRequest& req) const override;
    const ProviderConfig& config() const { return cfg_; }
    std::string fingerprint() const { return cfg_.fingerprint(); }

private:
    std::string http_chat(const ChatRequest& req) const;

    ProviderConfig cfg_;
    ScriptStore store_;
};

// Shareable embedding handle; hashed kind is fully offline.
class EmbedProvider {
public:
    explicit EmbedProvider(ProviderConfig cfg);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const;
    std::size_t dimensions() const;  // hashed kind: kHashedDims
    const ProviderConfig& config() const { return cfg_; }
    std::string fingerprint() const { return cfg_.fingerprint(); }

private:
    std::vector<std::vector<double>> http_embed(const std::vector<std::string>& texts) const;

    ProviderConfig cfg_;
};

inline constexpr std::size_t kHashedDims = 256;

// Lowercased character 3-gram feature hashing into kHashedDims dims with a
// hash-derived sign, L2-normalized. Empty input maps to the zero vector.
std::vector<double> hashed_embedding(const std::string& text);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fraudlens
