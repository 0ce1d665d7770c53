#include <gtest/gtest.h>

#include <random>

#include "deltaspec/error.hpp"
#include "deltaspec/json_schema.hpp"
#include "deltaspec/report.hpp"
#include "oracles/oracles.hpp"

using namespace deltaspec;

namespace {

errc code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return errc::precondition;
}

Verdict cell(VerdictValue v, std::vector<std::string> candidates = {})
{
    Verdict out;
    out.value = v;
    out.candidates = std::move(candidates);
    return out;
}

}  // namespace

TEST(Metrics, ReferenceConfusion)
{
    const auto m = compute_metrics(Confusion{15, 2, 36, 3});
    EXPECT_NEAR(m.accuracy * 100, 91.1, 0.05);
    EXPECT_NEAR(m.precision * 100, 88.2, 0.05);
    EXPECT_NEAR(m.recall * 100, 83.3, 0.05);
    EXPECT_NEAR(m.f1, 0.857, 0.0005);
    EXPECT_EQ(m.total, 56u);
    EXPECT_EQ(percent1(m.accuracy), "91.1");
}

TEST(Metrics, TargetFiguresPinOneConfusion)
{
    const auto all = oracle::confusions_matching(56, 91.1, 88.2, 83.3, 0.857, 0.05, 0.0005);
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0], (oracle::ConfusionTuple{15, 2, 3, 36}));
}

TEST(Metrics, AllCorrect)
{
    const auto m = compute_metrics(Confusion{5, 0, 7, 0});
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(Metrics, DegenerateDenominators)
{
    const auto m = compute_metrics(Confusion{0, 0, 10, 0});
    EXPECT_TRUE(m.precision_degenerate);
    EXPECT_TRUE(m.recall_degenerate);
    EXPECT_DOUBLE_EQ(m.precision, 0.0);
    EXPECT_DOUBLE_EQ(m.f1, 0.0);
    EXPECT_EQ(code_of([] { compute_metrics(Confusion{}); }), errc::empty_eval);
}

TEST(Metrics, F1IsHarmonicMean)
{
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> d(0, 40);
    for (int i = 0; i < 1000; ++i) {
        const Confusion c{d(rng) + 1, d(rng), d(rng), d(rng)};
        const auto m = compute_metrics(c);
        const double tp = double(c.tp);
        EXPECT_NEAR(m.precision, tp / double(c.tp + c.fp), 1e-12);
        EXPECT_NEAR(m.recall, tp / double(c.tp + c.fn), 1e-12);
        EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-12);
        EXPECT_NEAR(m.accuracy, double(c.tp + c.tn) / double(c.total()), 1e-12);
    }
}

TEST(CostModel, WorkedExample)
{
    const auto e = cost_model({2, 10, 100, 1, 5});
    EXPECT_EQ(e.naive, 220);
    EXPECT_EQ(e.reasoning, 12);
    EXPECT_EQ(e.graph, 120);
    EXPECT_EQ(e.total, 132);
    EXPECT_EQ(e.delta, 88);
}

TEST(CostModel, SavingsIdentityOnRandomInputs)
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const long long n = std::uniform_int_distribution<long long>(1, 500)(rng);
        const long long len = std::uniform_int_distribution<long long>(1, 100000)(rng);
        const long long m = std::uniform_int_distribution<long long>(1, 10000000)(rng);
        const long long dlen = std::uniform_int_distribution<long long>(0, len)(rng);
        const long long dm = std::uniform_int_distribution<long long>(0, m)(rng);
        const auto e = cost_model({n, len, m, dlen, dm});
        ASSERT_EQ(e.delta, oracle::savings_closed_form(n, m, dlen, dm));
        ASSERT_EQ(e.delta, oracle::savings_by_difference(n, len, m, dlen, dm));
        ASSERT_EQ(e.total, e.reasoning + e.graph);
    }
}

TEST(CostModel, WholeDocumentUpdatesSaveNothingPerRfc)
{
    // With dLen = Len and dM = M the incremental route costs M - N M more.
    const auto e = cost_model({3, 50, 1000, 50, 1000});
    EXPECT_EQ(e.delta, oracle::savings_closed_form(3, 1000, 50, 1000));
    EXPECT_LT(e.delta, 0);
}

TEST(CostModel, RejectsBadInputs)
{
    EXPECT_EQ(code_of([] { cost_model({-1, 10, 100, 1, 5}); }), errc::invalid_inputs);
    EXPECT_EQ(code_of([] { cost_model({2, 10, 100, 11, 5}); }), errc::invalid_inputs);
    EXPECT_EQ(code_of([] { cost_model({2, 10, 100, 1, 101}); }), errc::invalid_inputs);
    EXPECT_EQ(code_of([] { cost_model({2, -1, 100, 0, 5}); }), errc::invalid_inputs);
}

TEST(Report, SectionsAndSchema)
{
    ReportInputs in;
    in.matrix.rfcs = {793, 6528};
    in.matrix.versions = {"A", "B"};
    in.matrix.cells[{793, "A"}] = cell(VerdictValue::implemented);
    in.matrix.cells[{793, "B"}] = cell(VerdictValue::implemented);
    in.matrix.cells[{6528, "A"}] = cell(VerdictValue::implemented);
    in.matrix.cells[{6528, "B"}] = cell(VerdictValue::unknown, {"seq.c::secure_seq"});
    in.findings = compile_findings(in.matrix, std::nullopt, {{6528, "sequence number prediction"}});
    in.model = "gpt-4o";
    in.manifest = {{"verify/matrix.json", "verdict matrix"}};
    const auto r = render_report(in);
    for (const char* heading : {"Verdict matrix", "Findings", "Extraction", "Cost"}) {
        EXPECT_NE(r.markdown.find(heading), std::string::npos) << heading;
    }
    EXPECT_NE(r.markdown.find("Unknown"), std::string::npos);
    EXPECT_TRUE(validate_schema(r.machine, report_schema()).empty());
    const auto back = VerdictMatrix::from_json(r.machine.at("matrix"));
    EXPECT_EQ(back.to_json(), in.matrix.to_json());
    ASSERT_EQ(r.machine.at("findings").size(), 1u);
    EXPECT_TRUE(r.machine.at("findings")[0].at("unknown_verdict").get<bool>());
}

TEST(Report, NoFindingsSaysNone)
{
    ReportInputs in;
    in.matrix.rfcs = {793};
    in.matrix.versions = {"A"};
    in.matrix.cells[{793, "A"}] = cell(VerdictValue::implemented);
    in.findings = compile_findings(in.matrix, std::nullopt, {});
    const auto r = render_report(in);
    EXPECT_NE(r.markdown.find("## Findings\n\nnone\n"), std::string::npos);
}
