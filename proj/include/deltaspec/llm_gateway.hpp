#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deltaspec/util.hpp"

namespace deltaspec {

struct Message {
    std::string role;
    std::string content;
};

/// Structured-output contract: a name (used by scripted providers to route
/// requests) and a schema the parsed response must satisfy.
struct Contract {
    std::string name;
    json schema;
};

/// Ledger phases. Token_Total covers graph + reasoning; synthesis is the
/// offline exemplar build and is tallied separately.
namespace phase {
inline constexpr std::string_view graph = "graph";
inline constexpr std::string_view reasoning = "reasoning";
inline constexpr std::string_view synthesis = "synthesis";
}  // namespace phase

struct LlmRequest {
    std::string model;
    std::vector<Message> messages;
    double temperature = 0.0;
    std::optional<Contract> contract;
    std::string phase{phase::reasoning};  // ledger tag; not part of the fingerprint

    json canonical() const;
    std::string fingerprint() const;  // SHA-256 of canonical().dump()
    std::string prompt_text() const;  // message contents joined by newlines
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct ProviderReply {
    std::string text;
    std::optional<Usage> usage;  // absent when the provider reports none
};

struct LlmResponse {
    std::string text;
    json value;  // parsed body when a contract was attached, else null
    Usage usage;
    bool cached = false;
    unsigned contract_retries = 0;
};

/// Throws error(provider_error) for transient failures (retried) and
/// error(gateway_error) for failures a retry cannot fix.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderReply complete(const LlmRequest& req) = 0;
    virtual std::string name() const = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) = 0;
};

/// Feature-hashed bag of lexical terms, L2-normalized. Empty text maps to the
/// zero vector.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256) : dim_(dim) {}
    std::vector<double> embed(std::string_view text) override;
    std::size_t dimension() const noexcept { return dim_; }

private:
    std::size_t dim_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Scripted provider. Transcript rows (JSONL):
///   {"fingerprint": F, "response": R}                 exact request match
///   {"task": T, "contains": S|[S..], "excludes": ..., "response": R}
/// `responses: [R1, R2, ...]` serves R1, R2, ... on successive calls with the
/// same fingerprint and then repeats the last one. Rules are tried in file
/// order after fingerprint rows. Non-string responses are serialized.
class MockProvider final : public Provider {
public:
    explicit MockProvider(std::vector<json> rows);
    static std::shared_ptr<MockProvider> from_file(const std::filesystem::path& transcript);

    ProviderReply complete(const LlmRequest& req) override;
    std::string name() const override { return "mock"; }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    struct Rule {
        std::string fingerprint;
        std::string task;
        std::vector<std::string> contains;
        std::vector<std::string> excludes;
        std::vector<std::string> responses;
        std::optional<Usage> usage;
    };
    const Rule* match(const LlmRequest& req, const std::string& fp) const;

    std::vector<Rule> rules_;
    std::mutex mu_;
    std::map<std::string, std::size_t> served_;
    std::atomic<std::size_t> calls_{0};
};

/// Chat-completions style HTTP endpoint ("{base}/chat/completions").
class HttpProvider final : public Provider {
public:
    HttpProvider(std::string base_url, std::string api_key, std::chrono::seconds timeout = std::chrono::seconds(120));
    /// Reads DELTASPEC_API_BASE and DELTASPEC_API_KEY. Throws InvalidConfig
    /// when the base URL is unset.
    static std::shared_ptr<HttpProvider> from_env();

    ProviderReply complete(const LlmRequest& req) override;
    std::vector<double> embed(std::string_view text, const std::string& model);
    std::string name() const override { return "http"; }

private:
    json post(const std::string& path, const json& body);

    std::string scheme_host_;
    std::string path_prefix_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(std::shared_ptr<HttpProvider> http, std::string model)
        : http_(std::move(http)), model_(std::move(model))
    {}
    std::vector<double> embed(std::string_view text) override;

private:
    std::shared_ptr<HttpProvider> http_;
    std::string model_;
};

struct Price {
    double prompt_per_1k = 0;
    double completion_per_1k = 0;
};

/// Token and cost accounting. Only provider-served completions are recorded,
/// so cache hits leave it unchanged.
class CostLedger {
public:
    struct ModelTotals {
        std::size_t prompt_tokens = 0;
        std::size_t completion_tokens = 0;
        std::size_t calls = 0;
    };

    void set_prices(std::map<std::string, Price> prices);
    void record(const std::string& model, std::string_view phase, const Usage& usage);

    std::map<std::string, ModelTotals> per_model() const;
    std::map<std::string, std::size_t> per_phase() const;
    std::size_t phase_tokens(std::string_view phase) const;
    std::size_t token_graph() const { return phase_tokens(phase::graph); }
    std::size_t token_reasoning() const { return phase_tokens(phase::reasoning); }
    std::size_t token_total() const { return token_graph() + token_reasoning(); }
    std::size_t model_token_sum() const;
    double cost() const;

    json to_json() const;
    void merge_json(const json& j);  // adds persisted tallies to this ledger

private:
    mutable std::mutex mu_;
    std::map<std::string, ModelTotals> models_;
    std::map<std::string, std::size_t> phases_;
    std::map<std::string, Price> prices_;
};

struct GatewayConfig {
    std::string model = "gpt-4o";
    double temperature = 0.2;
    unsigned max_in_flight = 4;
    unsigned max_attempts = 3;
    std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
    unsigned contract_retries = 2;
    std::filesystem::path cache_dir;  // empty: memory only
};

struct GatewayStats {
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
    std::size_t provider_calls = 0;
    std::size_t provider_failures = 0;
    std::size_t contract_retries = 0;
    json to_json() const;
};

class LlmGateway {
public:
    LlmGateway(GatewayConfig cfg, std::shared_ptr<Provider> provider, std::shared_ptr<Embedder> embedder);

    /// Cache hit: stored response, no provider call. Miss: bounded retries
    /// and in-flight limit; concurrent identical requests share one call.
    /// Throws ProviderError once attempts are exhausted and ContractViolation
    /// when the response still fails its contract after the retries.
    LlmResponse complete(const LlmRequest& req);

    LlmRequest make_request(std::string_view phase, std::vector<Message> messages,
                            std::optional<Contract> contract = std::nullopt) const;

    std::vector<double> embed(std::string_view text);

    CostLedger& ledger() noexcept { return ledger_; }
    const CostLedger& ledger() const noexcept { return ledger_; }
    GatewayStats stats() const;
    const GatewayConfig& config() const noexcept { return cfg_; }
    Provider& provider() noexcept { return *provider_; }

private:
    struct CacheEntry {
        std::string response;
        Usage usage;
    };
    std::optional<CacheEntry> cache_lookup(const std::string& key);
    void cache_store(const std::string& key, const CacheEntry& entry);
    LlmResponse call_provider(const LlmRequest& req);

    GatewayConfig cfg_;
    std::shared_ptr<Provider> provider_;
    std::shared_ptr<Embedder> embedder_;
    CostLedger ledger_;
    std::counting_semaphore<1024> slots_;

    std::mutex cache_mu_;
    std::unordered_map<std::string, CacheEntry> memory_;
    std::unordered_map<std::string, std::shared_future<LlmResponse>> in_flight_;

    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> provider_calls_{0};
    std::atomic<std::size_t> failures_{0};
    std::atomic<std::size_t> contract_retries_{0};
};

/// Parses a model reply as JSON, tolerating a surrounding ``` fence.
std::optional<json> parse_json_reply(std::string_view text);

}  // namespace deltaspec
