#include <gtest/gtest.h>

#include <algorithm>

#include "deltaspec/code_ingest.hpp"
#include "deltaspec/error.hpp"
#include "support/support.hpp"

using namespace deltaspec;
namespace ts = testing_support;

namespace {

void touch(const std::filesystem::path& p, const std::string& content = "int x;\n")
{
    std::filesystem::create_directories(p.parent_path());
    write_text_file(p, content);
}

SourceFile annotated_file()
{
    const std::string rel = "net/ipv4/fixture_proto.c";
    return SourceFile::make(rel, "fixture", read_text_file(ts::annotated() / rel));
}

std::filesystem::path annotated_stubs() { return ts::annotated() / "stubs"; }

}  // namespace

TEST(SelectSources, FilterSemantics)
{
    ts::TempDir dir;
    touch(dir.path() / "net/ipv4/tcp.c");
    touch(dir.path() / "fs/ext4.c");
    const auto files = select_protocol_sources(dir.path(), SourceFilter::defaults());
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].path, "net/ipv4/tcp.c");
}

TEST(SelectSources, EmptyTreeAndMissingRoot)
{
    ts::TempDir dir;
    EXPECT_TRUE(select_protocol_sources(dir.path(), SourceFilter::defaults()).empty());
    try {
        select_protocol_sources(dir.path() / "nope", SourceFilter::defaults());
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::io_error);
    }
}

TEST(SelectSources, KernelLayoutKeepsNetworkFiles)
{
    ts::TempDir dir;
    for (const char* p : {"net/ipv4/tcp_input.c", "net/ipv6/tcp_ipv6.c", "include/net/tcp.h", "net/core/secure_seq.c",
                          "fs/ext4/inode.c", "mm/memory.c"}) {
        touch(dir.path() / p);
    }
    std::vector<std::string> got;
    for (const auto& f : select_protocol_sources(dir.path(), SourceFilter::defaults())) {
        got.push_back(f.path);
    }
    EXPECT_EQ(got, (std::vector<std::string>{"include/net/tcp.h", "net/core/secure_seq.c", "net/ipv4/tcp_input.c",
                                             "net/ipv6/tcp_ipv6.c"}));
}

TEST(SourceFile, LineAndTokenCounts)
{
    const auto f = SourceFile::make("a.c", "v", "int a;\nint b;\n");
    EXPECT_EQ(f.line_count, 2u);
    EXPECT_EQ(f.token_count, 6u);
}

TEST(ExtractFunctions, ThreePlainFunctions)
{
    const std::string src =
        "int one(void)\n{\n\treturn 1;\n}\n\n"
        "static int two(int a, int b)\n{\n\treturn a + b;\n}\n\n"
        "void three(char *s)\n{\n\tif (s) {\n\t\t*s = 0;\n\t}\n}\n";
    const auto fns = extract_functions(SourceFile::make("x.c", "v", src), {});
    ASSERT_EQ(fns.size(), 3u);
    EXPECT_EQ(fns[0].name, "one");
    EXPECT_EQ(fns[1].name, "two");
    EXPECT_EQ(fns[2].name, "three");
    EXPECT_EQ(fns[0].span.start_line, 1u);
    EXPECT_EQ(fns[0].span.end_line, 4u);
    EXPECT_EQ(fns[1].span.start_line, 6u);
    EXPECT_EQ(fns[1].span.end_line, 9u);
    EXPECT_EQ(fns[2].span.start_line, 11u);
    EXPECT_EQ(fns[2].span.end_line, 16u);
    EXPECT_EQ(fns[1].params, (std::vector<Param>{{"a", "int"}, {"b", "int"}}));
    for (const auto& f : fns) {
        EXPECT_EQ(f.tier, ExtractionTier::syntax_tree);
    }
}

TEST(ExtractFunctions, EmptyFile)
{
    EXPECT_TRUE(extract_functions(SourceFile::make("e.c", "v", ""), {}).empty());
}

TEST(ExtractFunctions, AnnotatedFixtureMatchesHandSpans)
{
    const auto truth = read_json_file(ts::annotated() / "annotations.json");
    const auto fns = extract_functions(annotated_file(), annotated_stubs());
    const auto& want = truth.at("functions");
    ASSERT_EQ(fns.size(), want.size());
    for (std::size_t i = 0; i < fns.size(); ++i) {
        const auto& w = want[i];
        EXPECT_EQ(fns[i].name, w.at("name").get<std::string>());
        EXPECT_EQ(fns[i].span.start_line, w.at("start_line").get<std::size_t>()) << fns[i].name;
        EXPECT_EQ(fns[i].span.end_line, w.at("end_line").get<std::size_t>()) << fns[i].name;
        EXPECT_EQ(to_string(fns[i].tier), w.at("tier").get<std::string>()) << fns[i].name;
        std::vector<std::string> names;
        for (const auto& p : fns[i].params) {
            names.push_back(p.name);
        }
        EXPECT_EQ(names, w.at("params").get<std::vector<std::string>>()) << fns[i].name;
    }
}

TEST(ExtractFunctions, DocCommentsAttached)
{
    const auto fns = extract_functions(annotated_file(), annotated_stubs());
    std::vector<std::string> with_doc;
    for (const auto& f : fns) {
        if (f.doc_comment) {
            with_doc.push_back(f.name);
        }
    }
    EXPECT_EQ(with_doc, (std::vector<std::string>{"reset_counter", "run_handler", "counter_ptr"}));
}

TEST(ExtractFunctions, SpanFidelityAndOrdering)
{
    const auto file = annotated_file();
    const auto fns = extract_functions(file, annotated_stubs());
    for (std::size_t i = 0; i < fns.size(); ++i) {
        const auto& f = fns[i];
        const auto body = file.content.substr(f.span.start_byte, f.span.end_byte - f.span.start_byte);
        EXPECT_EQ(body.back(), '}') << f.name;
        EXPECT_TRUE(body.starts_with(f.signature.substr(0, f.signature.find_first_of(" \t\n")))) << f.name;
        // the slice on its own parses back to the same function
        const auto again = extract_functions(SourceFile::make("s.c", "v", body), annotated_stubs());
        if (f.tier == ExtractionTier::syntax_tree) {
            ASSERT_EQ(again.size(), 1u) << f.name;
            EXPECT_EQ(again[0].name, f.name);
        }
        if (i > 0) {
            EXPECT_LE(fns[i - 1].span.end_byte, f.span.start_byte);
        }
        if (f.tier == ExtractionTier::brace_fallback) {
            EXPECT_EQ(std::count(body.begin(), body.end(), '{'), std::count(body.begin(), body.end(), '}'));
        }
    }
}

TEST(ExtractFunctions, MacroWrappedNeedsFallback)
{
    const auto detailed = extract_functions_detailed(annotated_file(), annotated_stubs());
    const auto it = std::find_if(detailed.functions.begin(), detailed.functions.end(),
                                 [](const CodeFunction& f) { return f.name == "drop_handler"; });
    ASSERT_NE(it, detailed.functions.end());
    EXPECT_EQ(it->tier, ExtractionTier::brace_fallback);
    EXPECT_GE(detailed.tier1_errors, 1u);
}

TEST(CodebaseIndex, DeterministicAndInvariants)
{
    const auto files = select_protocol_sources(ts::minicorpus() / "code" / "A", SourceFilter::defaults(), "A");
    const auto a = build_codebase_index("A", files, ts::minicorpus() / "stubs", 4);
    const auto b = build_codebase_index("A", files, ts::minicorpus() / "stubs", 1);
    ASSERT_EQ(a.functions.size(), b.functions.size());
    std::size_t tl = 0;
    for (std::size_t i = 0; i < a.functions.size(); ++i) {
        EXPECT_EQ(to_json(a.functions[i]), to_json(b.functions[i]));
        tl += a.functions[i].line_count();
    }
    EXPECT_EQ(a.total_functions(), a.functions.size());
    EXPECT_EQ(a.total_lines(), tl);
    EXPECT_NE(a.find("net/core/secure_seq.c::net_secret_rekey"), nullptr);
}

TEST(CodebaseIndex, ArtifactRoundTrip)
{
    ts::TempDir dir;
    const auto files = select_protocol_sources(ts::minicorpus() / "code" / "B", SourceFilter::defaults(), "B");
    const auto idx = build_codebase_index("B", files, ts::minicorpus() / "stubs");
    write_code_artifacts(idx, dir.path());
    const auto back = read_code_artifacts(dir.path());
    EXPECT_EQ(back.version, "B");
    ASSERT_EQ(back.functions.size(), idx.functions.size());
    for (std::size_t i = 0; i < idx.functions.size(); ++i) {
        EXPECT_EQ(to_json(back.functions[i]), to_json(idx.functions[i]));
    }
    ASSERT_EQ(back.files.size(), idx.files.size());
    EXPECT_EQ(back.files[0].content, idx.files[0].content);
}

TEST(ExtractionRates, KernelTreeExample)
{
    const auto s = extraction_rates(1250, 37327, 69.8, 5628.7);
    EXPECT_DOUBLE_EQ(s.function_rate, 5.6);
    EXPECT_DOUBLE_EQ(s.length_rate, 15.1);
    EXPECT_DOUBLE_EQ(extraction_rates(1250, 37327, 0, 0).function_rate, 0.0);
}

TEST(ExtractionRates, MeansOverRfcs)
{
    const auto files = select_protocol_sources(ts::minicorpus() / "code" / "A", SourceFilter::defaults(), "A");
    const auto idx = build_codebase_index("A", files, ts::minicorpus() / "stubs");
    const auto& f0 = idx.functions[0];
    const auto& f1 = idx.functions[1];
    const auto s = compute_extraction_stats(idx, {{793, {f0.id, f1.id}}, {1948, {f0.id}}});
    EXPECT_DOUBLE_EQ(s.selected_functions, 1.5);
    EXPECT_DOUBLE_EQ(s.selected_lines, (2.0 * f0.line_count() + f1.line_count()) / 2.0);
    EXPECT_EQ(s.rfc_count, 2u);
    EXPECT_THROW(compute_extraction_stats(idx, {{793, {"nope"}}}), error);
}
