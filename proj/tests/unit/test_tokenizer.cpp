#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "deltaspec/tokenizer.hpp"
#include "deltaspec/util.hpp"
#include "support/support.hpp"

using namespace deltaspec;

TEST(Tokenizer, DocumentedExamples)
{
    EXPECT_EQ(count_tokens(""), 0u);
    EXPECT_EQ(count_tokens("SYN ACK"), 2u);
    EXPECT_EQ(count_tokens("a->b"), 3u);
    EXPECT_EQ(count_tokens("+-+-+"), 1u);
    EXPECT_EQ(count_tokens("  \n\t "), 0u);
}

TEST(Tokenizer, TokensAreOrderedDisjointRanges)
{
    const std::string text = "if (seq_after(a, b)) return -1; /* ok */";
    const auto toks = tokenize(text);
    std::size_t prev = 0;
    for (const auto& t : toks) {
        EXPECT_GE(t.begin, prev);
        EXPECT_LT(t.begin, t.end);
        prev = t.end;
    }
    EXPECT_EQ(token_text(text, toks.front()), "if");
    EXPECT_EQ(token_text(text, toks[1]), "(");
    EXPECT_EQ(token_text(text, toks[2]), "seq_after");
}

TEST(Tokenizer, LexicalTermsDropPunctuationAndLowercase)
{
    EXPECT_EQ(lexical_terms("The SYN-ACK, state!"), (std::vector<std::string>{"the", "syn", "ack", "state"}));
}

TEST(Tokenizer, NormalizeName)
{
    EXPECT_EQ(normalize_name("  Initial   Sequence\tNumber "), "initial sequence number");
}

namespace {

std::string run_reference(const std::vector<std::string>& texts, const std::filesystem::path& dir)
{
    const auto in = dir / "texts.bin";
    {
        std::ofstream f(in, std::ios::binary);
        for (const auto& t : texts) {
            f.write(t.data(), static_cast<std::streamsize>(t.size()));
            f.put('\0');
        }
    }
    const auto out = dir / "counts.txt";
    const std::string cmd = std::string(DELTASPEC_PYTHON) + " \"" +
                            (testing_support::source_dir() / "tests" / "oracles" / "tokenize_ref.py").string() +
                            "\" \"" + in.string() + "\" > \"" + out.string() + "\"";
    if (std::system(cmd.c_str()) != 0) {
        return {};
    }
    return read_text_file(out);
}

}  // namespace

TEST(Tokenizer, MatchesStandaloneReferenceScript)
{
    if (std::string(DELTASPEC_PYTHON).empty()) {
        GTEST_SKIP() << "python3 not available";
    }
    std::vector<std::string> texts;
    texts.push_back(read_text_file(testing_support::minicorpus() / "rfcs" / "rfc793.txt"));
    texts.push_back(read_text_file(testing_support::annotated() / "net" / "ipv4" / "fixture_proto.c"));
    std::mt19937 rng(7);
    const std::string alphabet = "abcXYZ019_ \t\n\r+-*/(){};,.<>=!&|\"'#\x80\xc3\xa9";
    for (int i = 0; i < 300; ++i) {
        std::string t;
        const int len = static_cast<int>(rng() % 80);
        for (int c = 0; c < len; ++c) {
            t += alphabet[rng() % alphabet.size()];
        }
        texts.push_back(t);
    }
    testing_support::TempDir dir("tok");
    std::istringstream counts(run_reference(texts, dir.path()));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::size_t expected = 0;
        ASSERT_TRUE(counts >> expected) << "reference script produced too few lines";
        ASSERT_EQ(count_tokens(texts[i]), expected) << "text #" << i;
    }
}
