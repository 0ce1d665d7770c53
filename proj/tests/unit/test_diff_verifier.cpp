#include <gtest/gtest.h>

#include "deltaspec/diff_verifier.hpp"
#include "deltaspec/error.hpp"
#include "oracles/oracles.hpp"
#include "support/support.hpp"

using namespace deltaspec;
namespace ts = testing_support;

namespace {

using V = VerdictValue;

oracle::Vote to_oracle(V v)
{
    return v == V::implemented ? oracle::Vote::yes : v == V::not_implemented ? oracle::Vote::no : oracle::Vote::unsure;
}

FunctionalEntry entry(int rfc, const std::string& section, const std::string& title, std::vector<std::string> concepts)
{
    FunctionalEntry e;
    e.rfc = rfc;
    e.section = section;
    e.title = title;
    e.summary = title + ".";
    e.concepts = std::move(concepts);
    e.id = stable_id({std::to_string(rfc), section, title});
    return e;
}

Verdict cell(V value)
{
    Verdict v;
    v.value = value;
    return v;
}

// A three-RFC chain 793 -> 1948 -> 6528 with one target per increment.
struct ChainFixture {
    UpdateChainGraph chain;
    std::vector<Increment> increments;
    std::map<int, std::vector<FunctionalEntry>> entries;
    KnowledgeGraph graph;

    ChainFixture()
    {
        chain.nodes = {793, 1948, 6528};
        chain.edges = {{793, 1948, EdgeKind::updates}, {1948, 6528, EdgeKind::obsoletes}};
        chain.published = {{793, {1981, 9}}, {1948, {1996, 5}}, {6528, {2012, 2}}};
        entries[793] = {entry(793, "3.3", "initial sequence number selection", {"initial sequence number"})};
        FunctionalDelta d1;
        d1.added = {entry(1948, "3", "keyed sequence number generation", {"secret key"})};
        FunctionalDelta d2;
        d2.added = {entry(6528, "4", "secret key reseeding", {"secret key"})};
        chain.deltas[{793, 1948}] = d1;
        chain.deltas[{1948, 6528}] = d2;
        increments = enumerate_increments(chain);

        for (const auto& [name, fid] : std::vector<std::pair<std::string, std::string>>{
                 {"initial sequence number", "seq.c::isn_gen"}, {"secret key", "seq.c::secure_seq"}}) {
            Entity e;
            e.kind = EntityKind::mechanism;
            e.name = name;
            e.id = entity_id(e.kind, name);
            e.provenance = {"c"};
            graph.entities.push_back(e);
            graph.edges.push_back({e.id, function_node(fid), Relation::implements_candidate, 1.0});
            graph.function_names[fid] = fid.substr(fid.find("::") + 2);
        }
        std::sort(graph.entities.begin(), graph.entities.end(),
                  [](const Entity& a, const Entity& b) { return a.id < b.id; });
        graph.communities = detect_communities(graph);
    }
};

std::vector<json> chain_transcript()
{
    return {
        json{{"task", "verdict"}, {"contains", "RFC 6528 relative to RFC 1948, code version B"},
             {"response", {{"verdict", "not-implemented"},
                           {"rationale", "the key is never reseeded"},
                           {"cited_functions", {"seq.c::secure_seq", "not/a/candidate.c::x"}}}}},
        json{{"task", "verdict"},
             {"response", {{"verdict", "implemented"}, {"rationale", "present"}, {"cited_functions", json::array()}}}},
        json{{"contains", "Functionality to implement:"}, {"response", "Generate and reseed the key."}},
    };
}

const CodeLookup kCode = [](const std::string& fid) { return "/* body of " + fid + " */ int f(void) { return 0; }"; };

}  // namespace

TEST(Majority, AllFiveVoteVectorsMatchBruteForce)
{
    const V values[] = {V::implemented, V::not_implemented, V::unknown};
    int checked = 0;
    for (int code = 0; code < 243; ++code) {
        std::vector<V> votes;
        std::vector<oracle::Vote> ovotes;
        int c = code;
        for (int i = 0; i < 5; ++i, c /= 3) {
            votes.push_back(values[c % 3]);
            ovotes.push_back(to_oracle(values[c % 3]));
        }
        ASSERT_EQ(to_oracle(majority(votes)), oracle::majority(ovotes)) << "vector " << code;
        ++checked;
    }
    EXPECT_EQ(checked, 243);
}

TEST(Majority, DocumentedCases)
{
    EXPECT_EQ(majority({V::implemented, V::implemented, V::implemented, V::not_implemented, V::not_implemented}),
              V::implemented);
    EXPECT_EQ(majority({V::unknown, V::unknown, V::unknown, V::unknown, V::implemented}), V::unknown);
    EXPECT_EQ(majority({}), V::unknown);
    EXPECT_EQ(matrix_label(V::implemented), "True");
    EXPECT_EQ(matrix_label(V::not_implemented), "False");
    EXPECT_EQ(matrix_label(V::unknown), "Unknown");
}

TEST(VerifierConfig, TrialsMustBeOddAndPositive)
{
    VerifierConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.trials = 4;
    EXPECT_THROW(cfg.validate(), error);
    cfg.trials = 0;
    EXPECT_THROW(cfg.validate(), error);
}

TEST(CodeContext, BudgetKeepsTopCandidates)
{
    const std::vector<RetrievalHit> hits = {{"a.c::big", 3.0}, {"a.c::small", 2.0}, {"a.c::tiny", 1.0}};
    const CodeLookup lookup = [](const std::string& fid) {
        std::string big;
        for (int i = 0; i < 100; ++i) {
            big += "x ";
        }
        return fid == "a.c::big" ? big : std::string("int f;");
    };
    const auto all = build_code_context(hits, lookup, 10000);
    EXPECT_EQ(all.functions.size(), 3u);
    EXPECT_FALSE(all.truncated);
    const auto cut = build_code_context(hits, lookup, 50);
    EXPECT_TRUE(cut.truncated);
    for (const auto& [id, text] : cut.functions) {
        EXPECT_NE(id, "a.c::big");
    }
}

TEST(IntermediateRepr, ScriptedAndZeroShot)
{
    std::shared_ptr<MockProvider> provider;
    auto gw = ts::mock_gateway({json{{"contains", "Functionality to implement:"}, {"response", "  Reseed the key hourly. "}}},
                               &provider);
    CodeContext ctx;
    ctx.functions = {{"seq.c::secure_seq", "u32 secure_seq(void) { return 0; }"}};
    bool zero = false;
    const auto ir = generate_intermediate_repr({entry(6528, "4", "secret key reseeding", {})}, ctx, {}, *gw, 0, &zero);
    EXPECT_EQ(ir, "Reseed the key hourly.");
    EXPECT_TRUE(zero);
    EXPECT_EQ(provider->calls(), 1u);

    auto blank = ts::mock_gateway({json{{"response", ""}}});
    try {
        generate_intermediate_repr({entry(6528, "4", "x", {})}, ctx, {}, *blank);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::empty_response);
    }
}

TEST(VerifyIncrement, ReseedMissingIsNotImplemented)
{
    auto gw = ts::mock_gateway(chain_transcript());
    VerificationTask task;
    task.rfc_from = 1948;
    task.rfc_to = 6528;
    task.code_version = "B";
    task.targets = {entry(6528, "4", "secret key reseeding", {"secret key"})};
    task.candidates = {{"seq.c::secure_seq", 1.0}};
    const auto ctx = build_code_context(task.candidates, kCode, 6000);
    TripletStore store;
    const auto v = verify_increment(task, ctx, store, *gw, {});
    EXPECT_EQ(v.value, V::not_implemented);
    ASSERT_EQ(v.trials.size(), 5u);
    EXPECT_EQ(v.vote_counts.at("not-implemented"), 5);
    EXPECT_TRUE(v.zero_shot);
    for (const auto& t : v.trials) {
        EXPECT_EQ(t.ir, "Generate and reseed the key.");
        EXPECT_EQ(t.cited, std::vector<std::string>{"seq.c::secure_seq"});
    }
    std::vector<V> votes;
    for (const auto& t : v.trials) {
        votes.push_back(t.value);
    }
    EXPECT_EQ(majority(votes), v.value);
    const auto back = Verdict::from_json(v.to_json());
    EXPECT_EQ(back.to_json(), v.to_json());
}

TEST(VerifyIncrement, GatewayFailureCarriesPartialVerdict)
{
    auto gw = ts::mock_gateway({json{{"task", "verdict"}, {"contains", "Trial 1 of"},
                                      {"response", {{"verdict", "implemented"}, {"rationale", "ok"}}}},
                                json{{"contains", "Functionality to implement:"}, {"response", "ir"}}});
    VerificationTask task;
    task.rfc_to = 793;
    task.whole_rfc = true;
    task.code_version = "A";
    task.targets = {entry(793, "3.3", "isn", {})};
    TripletStore store;
    try {
        verify_increment(task, {}, store, *gw, {});
        FAIL();
    } catch (const verification_aborted& e) {
        EXPECT_EQ(e.code(), errc::gateway_error);
        EXPECT_EQ(e.partial().trials.size(), 1u);
        EXPECT_EQ(e.partial().mode, "whole-rfc");
    }
}

TEST(VerifyChain, CodebaseRowsAndDeterminism)
{
    ChainFixture fx;
    TripletStore store;
    auto gw = ts::mock_gateway(chain_transcript());
    const auto row_a = verify_chain(fx.chain, fx.increments, fx.entries, "A", fx.graph, kCode, store, *gw, {});
    const auto row_b = verify_chain(fx.chain, fx.increments, fx.entries, "B", fx.graph, kCode, store, *gw, {});
    for (int rfc : {793, 1948, 6528}) {
        EXPECT_EQ(row_a.at(rfc).value, V::implemented) << rfc;
    }
    EXPECT_EQ(row_b.at(793).value, V::implemented);
    EXPECT_EQ(row_b.at(1948).value, V::implemented);
    EXPECT_EQ(row_b.at(6528).value, V::not_implemented);
    EXPECT_EQ(row_a.at(793).mode, "whole-rfc");
    EXPECT_EQ(row_a.at(1948).mode, "increment");
    EXPECT_EQ(row_a.at(1948).predecessor, 793);
    for (const auto& c : row_b.at(6528).candidates) {
        EXPECT_TRUE(fx.graph.function_names.contains(c));
    }

    auto fresh = ts::mock_gateway(chain_transcript());
    const auto again = verify_chain(fx.chain, fx.increments, fx.entries, "B", fx.graph, kCode, store, *fresh, {});
    for (const auto& [rfc, v] : row_b) {
        EXPECT_EQ(again.at(rfc).to_json().dump(), v.to_json().dump());
    }
}

TEST(VerifyChain, EmptyTargetIncrementInherits)
{
    ChainFixture fx;
    FunctionalDelta only_inherited;
    only_inherited.inherited = {entry(6528, "3", "keyed sequence number generation", {})};
    fx.chain.deltas[{1948, 6528}] = only_inherited;
    fx.increments = enumerate_increments(fx.chain);
    TripletStore store;
    auto gw = ts::mock_gateway(chain_transcript());
    const auto row = verify_chain(fx.chain, fx.increments, fx.entries, "B", fx.graph, kCode, store, *gw, {});
    EXPECT_EQ(row.at(6528).mode, "inherited");
    EXPECT_EQ(row.at(6528).predecessor, 1948);
    EXPECT_EQ(row.at(6528).value, row.at(1948).value);
}

TEST(Findings, OutcomeDefinitions)
{
    VerdictMatrix m;
    m.rfcs = {1, 2, 3, 4};
    m.versions = {"v"};
    m.cells[{1, "v"}] = cell(V::not_implemented);
    m.cells[{2, "v"}] = cell(V::implemented);
    m.cells[{3, "v"}] = cell(V::unknown);
    m.cells[{4, "v"}] = cell(V::implemented);
    GroundTruth g;
    g.rfcs = m.rfcs;
    g.versions = m.versions;
    g.inconsistent = {{{1, "v"}, true}, {{2, "v"}, true}, {{3, "v"}, false}, {{4, "v"}, false}};
    const auto r = compile_findings(m, g, {{1, "sequence number prediction"}});
    EXPECT_EQ(r.outcomes.at({1, "v"}), "TP");
    EXPECT_EQ(r.outcomes.at({2, "v"}), "FN");
    EXPECT_EQ(r.outcomes.at({3, "v"}), "FP");
    EXPECT_EQ(r.outcomes.at({4, "v"}), "TN");
    EXPECT_EQ(*r.confusion, (Confusion{1, 1, 1, 1}));
    ASSERT_EQ(r.findings.size(), 3u);
    EXPECT_EQ(r.findings[0].vulnerability_class, "sequence number prediction");
    EXPECT_TRUE(r.findings[2].unknown_verdict);
    EXPECT_EQ(GroundTruth::from_json(g.to_json()).inconsistent, g.inconsistent);
}

TEST(Findings, WithoutTruthOnlyPositiveCells)
{
    VerdictMatrix m;
    m.rfcs = {1, 2};
    m.versions = {"v"};
    auto bad = cell(V::not_implemented);
    bad.candidates = {"a", "b", "c", "d"};
    m.cells[{1, "v"}] = bad;
    m.cells[{2, "v"}] = cell(V::implemented);
    const auto r = compile_findings(m, std::nullopt, {});
    EXPECT_FALSE(r.confusion.has_value());
    ASSERT_EQ(r.findings.size(), 1u);
    EXPECT_EQ(r.findings[0].evidence, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(r.findings[0].vulnerability_class, "protocol nonconformance");
    EXPECT_EQ(Finding::from_json(r.findings[0].to_json()).to_json(), r.findings[0].to_json());
}

TEST(Findings, ShapeMismatch)
{
    VerdictMatrix m;
    m.rfcs = {1};
    m.versions = {"v"};
    m.cells[{1, "v"}] = cell(V::implemented);
    GroundTruth g;
    g.rfcs = {1, 2};
    g.versions = {"v"};
    g.inconsistent = {{{1, "v"}, false}, {{2, "v"}, false}};
    try {
        compile_findings(m, g, {});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::shape_mismatch);
    }
}

TEST(Findings, ReferenceMatrixMismatches)
{
    // System output per RFC row, one column per code version; `*` marks a
    // cell that disagrees with the ground truth.
    const std::vector<std::string> versions = {"linux-6.9", "linux-3.6", "linux-2.6.39", "android-4.19",
                                               "freebsd-13.3", "netbsd-9.4", "openbsd-7.5"};
    const std::vector<std::pair<int, std::vector<std::string>>> table = {
        {793, {"T", "T", "T", "T", "T", "T", "T"}},
        {1948, {"T", "T", "T", "T", "T", "T", "T"}},
        {6528, {"T*", "F", "F", "T*", "T", "F", "F"}},
        {5961, {"T", "T", "F", "T", "T", "F", "T"}},
        {2385, {"T", "T", "T", "T", "T", "T", "F*"}},
        {5925, {"T", "F", "F", "F", "F", "F", "F"}},
        {1323, {"T", "T", "T", "T", "T", "T", "T"}},
        {7323, {"T", "F", "F", "F*", "T", "F", "T*"}},
    };
    VerdictMatrix m;
    GroundTruth g;
    m.versions = g.versions = versions;
    for (const auto& [rfc, cells] : table) {
        m.rfcs.push_back(rfc);
        g.rfcs.push_back(rfc);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const bool says_true = cells[i][0] == 'T';
            const bool flagged = cells[i].size() > 1;
            m.cells[{rfc, versions[i]}] = cell(says_true ? V::implemented : V::not_implemented);
            const bool truth_true = flagged ? !says_true : says_true;
            g.inconsistent[{rfc, versions[i]}] = !truth_true;
        }
    }
    const auto r = compile_findings(m, g, {});
    EXPECT_EQ(*r.confusion, (Confusion{15, 2, 36, 3}));
    std::size_t mismatches = 0;
    for (const auto& f : r.findings) {
        mismatches += !f.mismatch.empty();
    }
    EXPECT_EQ(mismatches, 5u);
    EXPECT_EQ(VerdictMatrix::from_json(m.to_json()).to_json(), m.to_json());
}
