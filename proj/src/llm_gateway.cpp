#include "deltaspec/llm_gateway.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <ctime>
#include <thread>

#include "deltaspec/error.hpp"
#include "deltaspec/json_schema.hpp"
#include "deltaspec/tokenizer.hpp"

namespace deltaspec {

namespace fs = std::filesystem;

json LlmRequest::canonical() const
{
    json msgs = json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    json j{{"model", model}, {"messages", msgs}, {"temperature", temperature}};
    j["contract"] = contract ? json{{"name", contract->name}, {"schema", contract->schema}} : json(nullptr);
    return j;
}

std::string LlmRequest::fingerprint() const
{
    return sha256_hex(canonical().dump());
}

std::string LlmRequest::prompt_text() const
{
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) {
            out.push_back('\n');
        }
        out += m.content;
    }
    return out;
}

std::vector<double> HashEmbedder::embed(std::string_view text)
{
    std::vector<double> v(dim_, 0.0);
    for (const auto& term : lexical_terms(text)) {
        v[fnv1a64(term) % dim_] += 1.0;
    }
    double norm = 0;
    for (double x : v) {
        norm += x * x;
    }
    if (norm > 0) {
        norm = std::sqrt(norm);
        for (double& x : v) {
            x /= norm;
        }
    }
    return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) {
        throw error(errc::precondition, "embedding dimensions differ");
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<json> parse_json_reply(std::string_view text)
{
    text = trim(text);
    if (text.starts_with("```")) {
        const auto nl = text.find('\n');
        const auto close = text.rfind("```");
        if (nl != std::string_view::npos && close != std::string_view::npos && close > nl) {
            text = trim(text.substr(nl + 1, close - nl - 1));
        }
    }
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        return std::nullopt;
    }
    return j;
}

// ---------------------------------------------------------------- mock

namespace {

std::vector<std::string> string_list(const json& row, const char* key)
{
    std::vector<std::string> out;
    if (!row.contains(key)) {
        return out;
    }
    const auto& v = row[key];
    if (v.is_string()) {
        out.push_back(v.get<std::string>());
    } else {
        for (const auto& s : v) {
            out.push_back(s.get<std::string>());
        }
    }
    return out;
}

std::string response_text(const json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

MockProvider::MockProvider(std::vector<json> rows)
{
    for (const auto& row : rows) {
        Rule r;
        r.fingerprint = row.value("fingerprint", "");
        r.task = row.value("task", "");
        r.contains = string_list(row, "contains");
        r.excludes = string_list(row, "excludes");
        if (row.contains("responses")) {
            for (const auto& v : row["responses"]) {
                r.responses.push_back(response_text(v));
            }
        } else if (row.contains("response")) {
            r.responses.push_back(response_text(row["response"]));
        }
        if (r.responses.empty()) {
            throw error(errc::invalid_config, "transcript row without a response: " + row.dump());
        }
        if (row.contains("usage")) {
            r.usage = Usage{row["usage"].value("prompt_tokens", std::size_t{0}),
                            row["usage"].value("completion_tokens", std::size_t{0})};
        }
        rules_.push_back(std::move(r));
    }
    // Exact fingerprints take precedence over rules regardless of file order.
    std::stable_partition(rules_.begin(), rules_.end(), [](const Rule& r) { return !r.fingerprint.empty(); });
}

std::shared_ptr<MockProvider> MockProvider::from_file(const fs::path& transcript)
{
    return std::make_shared<MockProvider>(read_jsonl_file(transcript));
}

const MockProvider::Rule* MockProvider::match(const LlmRequest& req, const std::string& fp) const
{
    const std::string prompt = req.prompt_text();
    const std::string task = req.contract ? req.contract->name : "";
    for (const auto& r : rules_) {
        if (!r.fingerprint.empty()) {
            if (r.fingerprint == fp) {
                return &r;
            }
            continue;
        }
        if (!r.task.empty() && r.task != task) {
            continue;
        }
        const bool all = std::all_of(r.contains.begin(), r.contains.end(),
                                     [&](const std::string& s) { return prompt.find(s) != std::string::npos; });
        const bool none = std::none_of(r.excludes.begin(), r.excludes.end(),
                                       [&](const std::string& s) { return prompt.find(s) != std::string::npos; });
        if (all && none) {
            return &r;
        }
    }
    return nullptr;
}

ProviderReply MockProvider::complete(const LlmRequest& req)
{
    ++calls_;
    const std::string fp = req.fingerprint();
    const Rule* r = match(req, fp);
    if (r == nullptr) {
        throw error(errc::gateway_error, "no scripted response for request " + fp.substr(0, 16) +
                                             (req.contract ? " (task " + req.contract->name + ")" : ""));
    }
    std::size_t n = 0;
    {
        std::lock_guard lock(mu_);
        n = served_[fp]++;
    }
    ProviderReply reply;
    reply.text = r->responses[std::min(n, r->responses.size() - 1)];
    reply.usage = r->usage;
    return reply;
}

// ---------------------------------------------------------------- ledger

void CostLedger::set_prices(std::map<std::string, Price> prices)
{
    std::lock_guard lock(mu_);
    prices_ = std::move(prices);
}

void CostLedger::record(const std::string& model, std::string_view phase, const Usage& usage)
{
    std::lock_guard lock(mu_);
    auto& m = models_[model];
    m.prompt_tokens += usage.prompt_tokens;
    m.completion_tokens += usage.completion_tokens;
    m.calls += 1;
    phases_[std::string(phase)] += usage.prompt_tokens + usage.completion_tokens;
}

std::map<std::string, CostLedger::ModelTotals> CostLedger::per_model() const
{
    std::lock_guard lock(mu_);
    return models_;
}

std::map<std::string, std::size_t> CostLedger::per_phase() const
{
    std::lock_guard lock(mu_);
    return phases_;
}

std::size_t CostLedger::phase_tokens(std::string_view phase) const
{
    std::lock_guard lock(mu_);
    const auto it = phases_.find(std::string(phase));
    return it == phases_.end() ? 0 : it->second;
}

std::size_t CostLedger::model_token_sum() const
{
    std::lock_guard lock(mu_);
    std::size_t total = 0;
    for (const auto& [name, m] : models_) {
        total += m.prompt_tokens + m.completion_tokens;
    }
    return total;
}

double CostLedger::cost() const
{
    std::lock_guard lock(mu_);
    double total = 0;
    for (const auto& [name, m] : models_) {
        const auto it = prices_.find(name);
        if (it != prices_.end()) {
            total += static_cast<double>(m.prompt_tokens) / 1000.0 * it->second.prompt_per_1k +
                     static_cast<double>(m.completion_tokens) / 1000.0 * it->second.completion_per_1k;
        }
    }
    return total;
}

json CostLedger::to_json() const
{
    json models = json::object();
    for (const auto& [name, m] : per_model()) {
        models[name] = {{"prompt_tokens", m.prompt_tokens},
                        {"completion_tokens", m.completion_tokens},
                        {"calls", m.calls}};
    }
    json phases = json::object();
    for (const auto& [name, n] : per_phase()) {
        phases[name] = n;
    }
    return json{{"models", models},
                {"phases", phases},
                {"token_graph", token_graph()},
                {"token_reasoning", token_reasoning()},
                {"token_total", token_total()},
                {"cost", cost()}};
}

void CostLedger::merge_json(const json& j)
{
    std::lock_guard lock(mu_);
    const json models = j.value("models", json::object());
    for (const auto& [name, m] : models.items()) {
        auto& t = models_[name];
        t.prompt_tokens += m.value("prompt_tokens", std::size_t{0});
        t.completion_tokens += m.value("completion_tokens", std::size_t{0});
        t.calls += m.value("calls", std::size_t{0});
    }
    const json phases = j.value("phases", json::object());
    for (const auto& [name, n] : phases.items()) {
        phases_[name] += n.get<std::size_t>();
    }
}

// ---------------------------------------------------------------- gateway

json GatewayStats::to_json() const
{
    return json{{"requests", requests},
                {"cache_hits", cache_hits},
                {"provider_calls", provider_calls},
                {"provider_failures", provider_failures},
                {"contract_retries", contract_retries}};
}

LlmGateway::LlmGateway(GatewayConfig cfg, std::shared_ptr<Provider> provider, std::shared_ptr<Embedder> embedder)
    : cfg_(std::move(cfg)),
      provider_(std::move(provider)),
      embedder_(embedder ? std::move(embedder) : std::make_shared<HashEmbedder>()),
      slots_(static_cast<std::ptrdiff_t>(std::clamp(cfg_.max_in_flight, 1u, 1024u)))
{
    if (!provider_) {
        throw error(errc::invalid_config, "gateway requires a provider");
    }
    if (cfg_.max_attempts == 0) {
        throw error(errc::invalid_config, "max_attempts must be positive");
    }
}

LlmRequest LlmGateway::make_request(std::string_view phase, std::vector<Message> messages,
                                    std::optional<Contract> contract) const
{
    LlmRequest r;
    r.model = cfg_.model;
    r.temperature = cfg_.temperature;
    r.messages = std::move(messages);
    r.contract = std::move(contract);
    r.phase = std::string(phase);
    return r;
}

std::vector<double> LlmGateway::embed(std::string_view text)
{
    return embedder_->embed(text);
}

GatewayStats LlmGateway::stats() const
{
    GatewayStats s;
    s.requests = requests_.load();
    s.cache_hits = hits_.load();
    s.provider_calls = provider_calls_.load();
    s.provider_failures = failures_.load();
    s.contract_retries = contract_retries_.load();
    return s;
}

namespace {

fs::path cache_path(const fs::path& dir, const std::string& key)
{
    return dir / key.substr(0, 2) / (key + ".json");
}

}  // namespace

std::optional<LlmGateway::CacheEntry> LlmGateway::cache_lookup(const std::string& key)
{
    {
        std::lock_guard lock(cache_mu_);
        const auto it = memory_.find(key);
        if (it != memory_.end()) {
            return it->second;
        }
    }
    if (cfg_.cache_dir.empty()) {
        return std::nullopt;
    }
    const auto path = cache_path(cfg_.cache_dir, key);
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        return std::nullopt;
    }
    const json j = read_json_file(path);
    if (j.value("key", "") != key) {
        return std::nullopt;
    }
    CacheEntry e{j.at("response").get<std::string>(),
                 {j.at("usage").value("prompt_tokens", std::size_t{0}),
                  j.at("usage").value("completion_tokens", std::size_t{0})}};
    std::lock_guard lock(cache_mu_);
    memory_.emplace(key, e);
    return e;
}

void LlmGateway::cache_store(const std::string& key, const CacheEntry& entry)
{
    {
        std::lock_guard lock(cache_mu_);
        memory_[key] = entry;
    }
    if (cfg_.cache_dir.empty()) {
        return;
    }
    const json j{{"key", key},
                 {"response", entry.response},
                 {"usage", {{"prompt_tokens", entry.usage.prompt_tokens},
                            {"completion_tokens", entry.usage.completion_tokens}}},
                 {"created_at", static_cast<std::int64_t>(std::time(nullptr))}};
    write_json_file(cache_path(cfg_.cache_dir, key), j);
}

LlmResponse LlmGateway::call_provider(const LlmRequest& req)
{
    struct SlotGuard {
        std::counting_semaphore<1024>& s;
        explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
        ~SlotGuard() { s.release(); }
    } guard(slots_);

    unsigned contract_failures = 0;
    unsigned attempt = 0;
    while (true) {
        ProviderReply reply;
        try {
            ++provider_calls_;
            reply = provider_->complete(req);
        } catch (const error& e) {
            ++failures_;
            if (e.code() != errc::provider_error) {
                throw;
            }
            if (++attempt >= cfg_.max_attempts) {
                throw error(errc::provider_error,
                            "giving up after " + std::to_string(attempt) + " attempts: " + e.what());
            }
            const auto delay = cfg_.backoff * (1u << (attempt - 1));
            spdlog::warn("provider attempt {} failed ({}), retrying in {} ms", attempt, e.what(), delay.count());
            std::this_thread::sleep_for(delay);
            continue;
        }

        const Usage usage = reply.usage.value_or(Usage{count_tokens(req.prompt_text()), count_tokens(reply.text)});
        ledger_.record(req.model, req.phase, usage);

        LlmResponse resp;
        resp.text = reply.text;
        resp.usage = usage;
        resp.contract_retries = contract_failures;
        if (req.contract) {
            auto parsed = parse_json_reply(reply.text);
            std::vector<std::string> problems;
            if (!parsed) {
                problems.push_back("response is not JSON");
            } else {
                problems = validate_schema(*parsed, req.contract->schema);
            }
            if (!problems.empty()) {
                if (contract_failures >= cfg_.contract_retries) {
                    throw error(errc::contract_violation,
                                req.contract->name + " response failed its contract after " +
                                    std::to_string(contract_failures) + " retries: " + problems.front());
                }
                ++contract_failures;
                ++contract_retries_;
                spdlog::debug("{} response violates contract ({}), retry {}", req.contract->name, problems.front(),
                              contract_failures);
                continue;
            }
            resp.value = std::move(*parsed);
        }
        return resp;
    }
}

LlmResponse LlmGateway::complete(const LlmRequest& req)
{
    ++requests_;
    const std::string key = req.fingerprint();
    auto from_cache = [&](const CacheEntry& e) {
        ++hits_;
        LlmResponse resp;
        resp.text = e.response;
        resp.usage = e.usage;
        resp.cached = true;
        if (req.contract) {
            resp.value = parse_json_reply(resp.text).value_or(json());
        }
        return resp;
    };
    if (auto hit = cache_lookup(key)) {
        return from_cache(*hit);
    }

    std::promise<LlmResponse> promise;
    std::shared_future<LlmResponse> follower;
    {
        std::lock_guard lock(cache_mu_);
        // A leader may have finished between the lookup above and this lock.
        if (const auto m = memory_.find(key); m != memory_.end()) {
            return from_cache(m->second);
        }
        if (const auto it = in_flight_.find(key); it != in_flight_.end()) {
            follower = it->second;
        } else {
            in_flight_.emplace(key, promise.get_future().share());
        }
    }
    if (follower.valid()) {
        ++hits_;
        LlmResponse resp = follower.get();
        resp.cached = true;
        return resp;
    }

    try {
        LlmResponse resp = call_provider(req);
        cache_store(key, {resp.text, resp.usage});
        promise.set_value(resp);
        std::lock_guard lock(cache_mu_);
        in_flight_.erase(key);
        return resp;
    } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(cache_mu_);
        in_flight_.erase(key);
        throw;
    }
}

}  // namespace deltaspec
