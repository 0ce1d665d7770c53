#include <gtest/gtest.h>

#include <algorithm>

#include "deltaspec/error.hpp"
#include "deltaspec/parallel.hpp"
#include "deltaspec/util.hpp"
#include "support/support.hpp"

using namespace deltaspec;

TEST(Util, Sha256KnownVectors)
{
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Util, StableIdSeparatesParts)
{
    EXPECT_EQ(stable_id({"ab", "c"}).size(), 16u);
    EXPECT_NE(stable_id({"ab", "c"}), stable_id({"a", "bc"}));
    EXPECT_EQ(stable_id({"x", "y"}), stable_id({"x", "y"}));
}

TEST(Util, DottedLessOrdersNumericallyThenAlpha)
{
    std::vector<std::string> ids = {"10", "3.10", "A.1", "2", "3.2", "9", "3"};
    std::sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) { return dotted_less(a, b); });
    EXPECT_EQ(ids, (std::vector<std::string>{"2", "3", "3.2", "3.10", "9", "10", "A.1"}));
    EXPECT_FALSE(dotted_less("3.2", "3.2"));
}

TEST(Util, FileRoundTrips)
{
    testing_support::TempDir dir;
    const auto j = json{{"a", 1}, {"b", {1, 2, 3}}};
    write_json_file(dir.path() / "x" / "a.json", j);
    EXPECT_EQ(read_json_file(dir.path() / "x" / "a.json"), j);

    const std::vector<json> rows = {json{{"k", 1}}, json{{"k", "two"}}};
    write_jsonl_file(dir.path() / "r.jsonl", rows);
    EXPECT_EQ(read_jsonl_file(dir.path() / "r.jsonl"), rows);

    EXPECT_THROW(read_text_file(dir.path() / "missing"), error);
}

TEST(Util, SplitLinesKeepsEmptyInteriorLines)
{
    EXPECT_EQ(split_lines("a\n\nb"), (std::vector<std::string>{"a", "", "b"}));
}

TEST(Util, ErrorMessageCarriesCodeName)
{
    const error e(errc::missing_artifact, "run ingest-rfc first");
    EXPECT_EQ(e.code(), errc::missing_artifact);
    EXPECT_STREQ(e.what(), "MissingArtifact: run ingest-rfc first");
}

TEST(Parallel, ResultsIndependentOfWorkerCount)
{
    for (unsigned workers : {1u, 3u, 8u}) {
        std::vector<int> out(100);
        parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
        for (std::size_t i = 0; i < out.size(); ++i) {
            ASSERT_EQ(out[i], static_cast<int>(i * i));
        }
    }
}

TEST(Parallel, RethrowsLowestFailingIndex)
{
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 30) {
                throw std::runtime_error(std::to_string(i));
            }
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}
