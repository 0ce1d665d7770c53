#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "deltaspec/error.hpp"
#include "deltaspec/llm_gateway.hpp"

namespace deltaspec {

HttpProvider::HttpProvider(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout)
{
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) {
        throw error(errc::invalid_config, "API base URL needs a scheme: " + base_url);
    }
    const auto path = base_url.find('/', scheme + 3);
    scheme_host_ = base_url.substr(0, path);
    path_prefix_ = path == std::string::npos ? "" : base_url.substr(path);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
}

std::shared_ptr<HttpProvider> HttpProvider::from_env()
{
    const char* base = std::getenv("DELTASPEC_API_BASE");
    const char* key = std::getenv("DELTASPEC_API_KEY");
    if (base == nullptr || *base == '\0') {
        throw error(errc::invalid_config, "DELTASPEC_API_BASE is not set (use --mock for the scripted provider)");
    }
    return std::make_shared<HttpProvider>(base, key == nullptr ? "" : key);
}

json HttpProvider::post(const std::string& path, const json& body)
{
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }
    const auto res = client.Post(path_prefix_ + path, headers, body.dump(), "application/json");
    if (!res) {
        throw error(errc::provider_error, "request to " + scheme_host_ + path_prefix_ + path +
                                              " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw error(errc::provider_error, "HTTP " + std::to_string(res->status));
    }
    if (res->status >= 400) {
        throw error(errc::gateway_error, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded()) {
        throw error(errc::provider_error, "provider returned non-JSON body");
    }
    return j;
}

ProviderReply HttpProvider::complete(const LlmRequest& req)
{
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    const json body{{"model", req.model}, {"messages", messages}, {"temperature", req.temperature}};
    const json j = post("/chat/completions", body);
    ProviderReply reply;
    try {
        reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw error(errc::provider_error, "malformed completion payload");
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        reply.usage = Usage{j["usage"].value("prompt_tokens", std::size_t{0}),
                            j["usage"].value("completion_tokens", std::size_t{0})};
    }
    return reply;
}

std::vector<double> HttpProvider::embed(std::string_view text, const std::string& model)
{
    const json j = post("/embeddings", json{{"model", model}, {"input", std::string(text)}});
    try {
        return j.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw error(errc::provider_error, "malformed embedding payload");
    }
}

std::vector<double> HttpEmbedder::embed(std::string_view text)
{
    std::vector<double> v = http_->embed(text, model_);
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

}  // namespace deltaspec
