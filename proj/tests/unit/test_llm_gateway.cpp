#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "deltaspec/error.hpp"
#include "deltaspec/llm_gateway.hpp"
#include "support/support.hpp"

using namespace deltaspec;
namespace ts = testing_support;

namespace {

class FlakyProvider final : public Provider {
public:
    explicit FlakyProvider(int failures) : failures_(failures) {}
    ProviderReply complete(const LlmRequest& req) override
    {
        ++calls;
        if (calls <= failures_) {
            throw error(errc::provider_error, "503");
        }
        return {"echo:" + req.messages.back().content, Usage{7, 3}};
    }
    std::string name() const override { return "flaky"; }
    std::atomic<int> calls{0};

private:
    int failures_;
};

class SlowProvider final : public Provider {
public:
    ProviderReply complete(const LlmRequest&) override
    {
        ++calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        return {"slow reply", Usage{1, 1}};
    }
    std::string name() const override { return "slow"; }
    std::atomic<int> calls{0};
};

GatewayConfig fast_config()
{
    GatewayConfig cfg;
    cfg.backoff = std::chrono::milliseconds(1);
    return cfg;
}

LlmRequest user_request(const LlmGateway& gw, const std::string& text, std::string_view phase = phase::reasoning)
{
    return gw.make_request(phase, {{"user", text}});
}

}  // namespace

TEST(Gateway, SecondIdenticalRequestServedFromCache)
{
    auto provider = std::make_shared<FlakyProvider>(0);
    LlmGateway gw(fast_config(), provider, std::make_shared<HashEmbedder>());
    const auto a = gw.complete(user_request(gw, "hello"));
    const auto b = gw.complete(user_request(gw, "hello"));
    EXPECT_EQ(provider->calls, 1);
    EXPECT_FALSE(a.cached);
    EXPECT_TRUE(b.cached);
    EXPECT_EQ(a.text, b.text);
    const auto s = gw.stats();
    EXPECT_EQ(s.requests, 2u);
    EXPECT_EQ(s.cache_hits, 1u);
    EXPECT_EQ(s.provider_calls, 1u);
    EXPECT_EQ(gw.ledger().per_model().at("gpt-4o").calls, 1u);
}

TEST(Gateway, DiskCacheSurvivesRestart)
{
    ts::TempDir dir;
    auto cfg = fast_config();
    cfg.cache_dir = dir.path();
    auto p1 = std::make_shared<FlakyProvider>(0);
    {
        LlmGateway gw(cfg, p1, std::make_shared<HashEmbedder>());
        gw.complete(user_request(gw, "persist me"));
    }
    auto p2 = std::make_shared<FlakyProvider>(0);
    LlmGateway gw(cfg, p2, std::make_shared<HashEmbedder>());
    const auto r = gw.complete(user_request(gw, "persist me"));
    EXPECT_TRUE(r.cached);
    EXPECT_EQ(p2->calls, 0);
    EXPECT_EQ(r.text, "echo:persist me");
    EXPECT_EQ(gw.ledger().token_total(), 0u);
}

TEST(Gateway, TransientFailuresRetriedThenGiveUp)
{
    auto ok_after_two = std::make_shared<FlakyProvider>(2);
    LlmGateway gw(fast_config(), ok_after_two, std::make_shared<HashEmbedder>());
    EXPECT_EQ(gw.complete(user_request(gw, "x")).text, "echo:x");
    EXPECT_EQ(ok_after_two->calls, 3);

    auto always = std::make_shared<FlakyProvider>(100);
    LlmGateway gw2(fast_config(), always, std::make_shared<HashEmbedder>());
    try {
        gw2.complete(user_request(gw2, "x"));
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::provider_error);
    }
    EXPECT_EQ(always->calls, 3);
    EXPECT_TRUE(gw2.ledger().per_model().empty());
    EXPECT_EQ(gw2.stats().provider_failures, 3u);
}

TEST(Gateway, ConcurrentIdenticalRequestsShareOneCall)
{
    auto provider = std::make_shared<SlowProvider>();
    LlmGateway gw(fast_config(), provider, std::make_shared<HashEmbedder>());
    std::vector<std::string> replies(8);
    {
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < replies.size(); ++i) {
            threads.emplace_back([&, i] { replies[i] = gw.complete(user_request(gw, "same")).text; });
        }
    }
    EXPECT_EQ(provider->calls, 1);
    for (const auto& r : replies) {
        EXPECT_EQ(r, "slow reply");
    }
}

TEST(Gateway, ContractRetriesThenViolation)
{
    const Contract c{"verdict", json{{"type", "object"}, {"required", {"verdict"}}}};
    auto gw = ts::mock_gateway(
        {json{{"task", "verdict"}, {"contains", "fix"}, {"responses", json::array({"oops", "{}", json{{"verdict", "ok"}}})}},
         json{{"task", "verdict"}, {"response", "never json"}}});
    const auto r = gw->complete(gw->make_request(phase::reasoning, {{"user", "fix me"}}, c));
    EXPECT_EQ(r.contract_retries, 2u);
    EXPECT_EQ(r.value.at("verdict"), "ok");
    try {
        gw->complete(gw->make_request(phase::reasoning, {{"user", "broken"}}, c));
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::contract_violation);
    }
}

TEST(MockProvider, FingerprintRowsWinAndSequencesRepeatLast)
{
    GatewayConfig cfg;
    LlmGateway probe(cfg, std::make_shared<MockProvider>(std::vector<json>{}), std::make_shared<HashEmbedder>());
    const auto req = user_request(probe, "exact");
    MockProvider m({json{{"contains", "exact"}, {"response", "by rule"}},
                    json{{"fingerprint", req.fingerprint()}, {"response", "by fingerprint"}},
                    json{{"contains", "seq"}, {"responses", json::array({"one", "two"})}}});
    EXPECT_EQ(m.complete(req).text, "by fingerprint");
    const auto seq = user_request(probe, "seq");
    EXPECT_EQ(m.complete(seq).text, "one");
    EXPECT_EQ(m.complete(seq).text, "two");
    EXPECT_EQ(m.complete(seq).text, "two");
    try {
        m.complete(user_request(probe, "unmatched"));
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::gateway_error);
    }
}

TEST(Fingerprint, PureFunctionOfCanonicalRequest)
{
    GatewayConfig cfg;
    LlmGateway gw(cfg, std::make_shared<MockProvider>(std::vector<json>{}), std::make_shared<HashEmbedder>());
    auto a = user_request(gw, "x", phase::graph);
    auto b = user_request(gw, "x", phase::reasoning);
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    b.temperature = 0.7;
    EXPECT_NE(a.fingerprint(), b.fingerprint());
    auto c = a;
    c.contract = Contract{"k", json::object()};
    EXPECT_NE(a.fingerprint(), c.fingerprint());
    auto d = a;
    d.messages = {{"user", "x"}, {"user", ""}};
    EXPECT_NE(a.fingerprint(), d.fingerprint());
    EXPECT_EQ(a.fingerprint().size(), 64u);
}

TEST(Ledger, ConservationAndCost)
{
    CostLedger l;
    l.set_prices({{"gpt-4o", {2.5, 10.0}}});
    l.record("gpt-4o", phase::graph, {1000, 100});
    l.record("gpt-4o", phase::reasoning, {2000, 200});
    l.record("gpt-4o-mini", phase::synthesis, {50, 5});
    EXPECT_EQ(l.token_graph(), 1100u);
    EXPECT_EQ(l.token_reasoning(), 2200u);
    EXPECT_EQ(l.token_total(), l.token_graph() + l.token_reasoning());
    std::size_t phases = 0;
    for (const auto& [p, n] : l.per_phase()) {
        phases += n;
    }
    EXPECT_EQ(phases, l.model_token_sum());
    EXPECT_NEAR(l.cost(), 3.0 * 2.5 + 0.3 * 10.0, 1e-9);

    CostLedger m;
    m.merge_json(l.to_json());
    EXPECT_EQ(m.to_json()["models"], l.to_json()["models"]);
    EXPECT_EQ(m.token_total(), l.token_total());
}

TEST(HashEmbedder, NormalizationAndOrthogonality)
{
    HashEmbedder h(256);
    const auto a = h.embed("sequence number secret");
    EXPECT_EQ(a, h.embed("sequence number secret"));
    double norm = 0;
    for (double x : a) {
        norm += x * x;
    }
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
    const auto b = h.embed("window scale option");
    bool overlap = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        overlap = overlap || (a[i] != 0 && b[i] != 0);
    }
    ASSERT_FALSE(overlap) << "fixture vocabularies collide under the hash";
    EXPECT_NEAR(cosine(a, b), 0.0, 1e-9);
    const auto z = h.embed("");
    EXPECT_TRUE(std::all_of(z.begin(), z.end(), [](double x) { return x == 0; }));
}

TEST(ParseJsonReply, FencesTolerated)
{
    EXPECT_EQ(*parse_json_reply("```json\n{\"a\": 1}\n```"), (json{{"a", 1}}));
    EXPECT_EQ(*parse_json_reply("  [1,2] "), (json{1, 2}));
    EXPECT_FALSE(parse_json_reply("not json").has_value());
}
