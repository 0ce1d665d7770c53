#include <gtest/gtest.h>

#include <random>
#include <set>

#include "deltaspec/chunk_mapper.hpp"
#include "deltaspec/error.hpp"
#include "support/support.hpp"

using namespace deltaspec;

namespace {

// Reference cut selection: scan the alignment window from its right edge.
std::size_t reference_cut(std::size_t nominal, std::size_t r, std::size_t n, const std::set<std::size_t>& primary,
                          const std::set<std::size_t>& secondary)
{
    if (n <= nominal + r) {
        return n;
    }
    for (std::size_t c = nominal + r + 1; c-- > nominal;) {
        if (primary.contains(c)) {
            return c;
        }
    }
    for (std::size_t c = nominal + r + 1; c-- > nominal;) {
        if (secondary.contains(c)) {
            return c;
        }
    }
    return nominal;
}

struct Stream {
    std::string text;
    std::vector<Token> tokens;
    std::vector<CodeFunction> functions;
};

// Random words separated by random whitespace; random disjoint token ranges
// become functions.
Stream random_stream(std::mt19937& rng, std::size_t n_tokens)
{
    Stream s;
    static const std::vector<std::string> words = {"if", "x", "(", ")", "{", "}", ";", "return", "seq", "+=", "ack"};
    for (std::size_t i = 0; i < n_tokens; ++i) {
        if (i > 0) {
            s.text += (rng() % 5 == 0) ? "\n" : " ";
        }
        s.text += words[rng() % words.size()];
    }
    s.tokens = tokenize(s.text);
    std::size_t t = 0;
    int k = 0;
    while (t < s.tokens.size()) {
        t += rng() % 40;
        if (t >= s.tokens.size()) {
            break;
        }
        const std::size_t len = 1 + rng() % 120;
        const std::size_t end = std::min(s.tokens.size(), t + len);
        CodeFunction f;
        f.name = "f" + std::to_string(k++);
        f.id = "s.c::" + f.name;
        f.file = "s.c";
        f.span.start_byte = s.tokens[t].begin;
        f.span.end_byte = s.tokens[end - 1].end;
        s.functions.push_back(f);
        t = end;
    }
    return s;
}

std::vector<const CodeFunction*> ptrs(const std::vector<CodeFunction>& fns)
{
    std::vector<const CodeFunction*> out;
    for (const auto& f : fns) {
        out.push_back(&f);
    }
    return out;
}

CodeFunction fn_over(const std::vector<Token>& toks, std::size_t first, std::size_t last_excl, const std::string& name)
{
    CodeFunction f;
    f.name = name;
    f.id = "s.c::" + name;
    f.file = "s.c";
    f.span.start_byte = toks[first].begin;
    f.span.end_byte = toks[last_excl - 1].end;
    return f;
}

std::string words(std::size_t n)
{
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += (i ? " w" : "w") + std::to_string(i);
    }
    return s;
}

}  // namespace

TEST(ChunkSpans, ShortStreamIsOneChunk)
{
    EXPECT_EQ(chunk_spans(300, {}, {}), (std::vector<TokenSpan>{{0, 300}}));
    EXPECT_TRUE(chunk_spans(0, {}, {}).empty());
}

TEST(ChunkSpans, NoBoundariesCutsAtNominal)
{
    EXPECT_EQ(chunk_spans(1200, {}, {}), (std::vector<TokenSpan>{{0, 500}, {450, 950}, {900, 1200}}));
}

TEST(ChunkSpans, AlignsToFunctionEnd)
{
    Boundaries b;
    b.primary = {520};
    const auto spans = chunk_spans(1200, {}, b);
    EXPECT_EQ(spans[0], (TokenSpan{0, 520}));
    EXPECT_EQ(spans[1].start, 470u);
}

TEST(ChunkConfig, Validation)
{
    EXPECT_EQ(ChunkConfig{}.redundancy(), 50u);
    EXPECT_THROW((ChunkConfig{0, 0.1}.validate()), error);
    EXPECT_THROW((ChunkConfig{500, 0.6}.validate()), error);
}

TEST(ChunkSpans, PropertySuiteOverRandomStreams)
{
    std::mt19937 rng(20240601);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = rng() % 3000;
        ChunkConfig cfg;
        if (iter % 2 == 1) {
            cfg.chunk_size = 1 + rng() % 200;
            cfg.redundancy_ratio = (rng() % 51) / 100.0;
        }
        const std::size_t r = cfg.redundancy();
        std::set<std::size_t> primary, secondary;
        for (std::size_t i = 0; i < n / 7; ++i) {
            primary.insert(1 + rng() % std::max<std::size_t>(n, 1));
            secondary.insert(1 + rng() % std::max<std::size_t>(n, 1));
        }
        Boundaries b{{primary.begin(), primary.end()}, {secondary.begin(), secondary.end()}};
        const auto spans = chunk_spans(n, cfg, b);
        if (n == 0) {
            ASSERT_TRUE(spans.empty());
            continue;
        }
        ASSERT_EQ(spans.front().start, 0u);
        ASSERT_EQ(spans.back().end, n);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            const auto& s = spans[i];
            ASSERT_LT(s.start, s.end);
            ASSERT_LE(s.end - s.start, cfg.chunk_size + r);
            if (i > 0) {
                const auto overlap = spans[i - 1].end - s.start;
                ASSERT_LE(s.start, spans[i - 1].end) << "gap before chunk " << i;
                ASSERT_LE(overlap, r);
                ASSERT_GT(s.end, spans[i - 1].end);
            }
            const std::size_t nominal = s.start + cfg.chunk_size;
            const std::size_t want = nominal >= n ? n : reference_cut(nominal, r, n, primary, secondary);
            ASSERT_EQ(s.end, want) << "iteration " << iter << " chunk " << i;
        }
    }
}

TEST(ChunkMap, ReconstructionIdentityOverRandomStreams)
{
    std::mt19937 rng(99);
    for (int iter = 0; iter < 1000; ++iter) {
        const auto s = random_stream(rng, 1 + rng() % 600);
        ChunkConfig cfg{5 + rng() % 80, (rng() % 51) / 100.0};
        const auto fns = ptrs(s.functions);
        const auto chunks = chunk_stream("code:v:s.c", s.text, s.tokens, cfg, code_boundaries(s.text, s.tokens, fns));
        const auto map = build_map(chunks, fns, s.tokens);
        ChunkStore store;
        for (const auto& c : chunks) {
            store[c.id] = c;
        }
        for (const auto& f : s.functions) {
            const auto want = s.text.substr(f.span.start_byte, f.span.end_byte - f.span.start_byte);
            ASSERT_EQ(reconstruct_function(f.id, map, store), want) << "iteration " << iter << " " << f.id;
        }
        // both directions hold the same link set
        std::size_t forward = 0, backward = 0;
        for (const auto& [cid, links] : map.chunk_to_functions) {
            forward += links.size();
            for (const auto& l : links) {
                ASSERT_EQ(l.chunk_id, cid);
                const auto& back = map.function_to_chunks.at(l.function_id);
                ASSERT_NE(std::find(back.begin(), back.end(), l), back.end());
            }
        }
        for (const auto& [fid, links] : map.function_to_chunks) {
            backward += links.size();
        }
        ASSERT_EQ(forward, backward);
    }
}

TEST(ChunkMap, ChunkIdsStable)
{
    const std::string text = words(1200);
    const auto toks = tokenize(text);
    const auto a = chunk_stream("rfc793#3", text, toks, {}, {});
    const auto b = chunk_stream("rfc793#3", text, toks, {}, {});
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].id, b[i].id);
        EXPECT_EQ(a[i].id, stable_id({"rfc793#3", std::to_string(i)}));
    }
    EXPECT_EQ(a[1].overlap_prev, 50u);
}

TEST(ChunkMap, LinkFixtures)
{
    const std::string text = words(1200);
    const auto toks = tokenize(text);
    std::vector<CodeFunction> fns = {fn_over(toks, 10, 20, "inside0"), fn_over(toks, 30, 40, "inside0b"),
                                     fn_over(toks, 900, 1000, "cross12")};
    const auto chunks = chunk_stream("code:v:s.c", text, toks, {}, {});
    const auto map = build_map(chunks, ptrs(fns), toks);

    EXPECT_EQ(map.function_to_chunks.at("s.c::inside0").size(), 1u);
    const auto& c0 = map.chunk_to_functions.at(chunks[0].id);
    ASSERT_EQ(c0.size(), 2u);
    EXPECT_EQ(c0[0].function_id, "s.c::inside0");
    EXPECT_EQ(c0[1].function_id, "s.c::inside0b");

    // chunk 1 is [450, 950), chunk 2 is [900, 1200): the links tile the body
    const auto& cross = map.function_to_chunks.at("s.c::cross12");
    ASSERT_EQ(cross.size(), 2u);
    EXPECT_EQ(cross[0].chunk_index, 1u);
    EXPECT_EQ(cross[1].chunk_index, 2u);
    EXPECT_EQ(cross[0].byte_begin, fns[2].span.start_byte);
    EXPECT_EQ(cross[1].byte_end, fns[2].span.end_byte);
    EXPECT_LE(cross[1].byte_begin, cross[0].byte_end);

    ChunkStore store;
    for (const auto& c : chunks) {
        store[c.id] = c;
    }
    EXPECT_EQ(reconstruct_function("s.c::cross12", map, store),
              text.substr(fns[2].span.start_byte, fns[2].span.end_byte - fns[2].span.start_byte));
    try {
        reconstruct_function("s.c::nope", map, store);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::unknown_function);
    }
}

TEST(ChunkMap, UncoveredFunctionIsSpanMismatch)
{
    const std::string text = words(100);
    const auto toks = tokenize(text);
    auto chunks = chunk_stream("code:v:s.c", text, toks, {}, {});
    std::vector<CodeFunction> fns = {fn_over(toks, 10, 20, "f")};
    fns[0].span.end_byte = text.size() + 10;
    try {
        build_map(chunks, ptrs(fns), toks);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::span_mismatch);
    }
}

TEST(ChunkMap, JsonRoundTrip)
{
    const std::string text = words(700);
    const auto toks = tokenize(text);
    std::vector<CodeFunction> fns = {fn_over(toks, 400, 600, "g")};
    const auto chunks = chunk_stream("code:v:s.c", text, toks, {}, {});
    const auto map = build_map(chunks, ptrs(fns), toks);
    const auto back = ChunkFunctionMap::from_json(map.to_json());
    EXPECT_EQ(back.chunk_to_functions, map.chunk_to_functions);
    EXPECT_EQ(back.function_to_chunks, map.function_to_chunks);
    for (const auto& c : chunks) {
        const auto r = chunk_from_json(to_json(c));
        EXPECT_EQ(r.id, c.id);
        EXPECT_EQ(r.text, c.text);
        EXPECT_EQ(r.span, c.span);
    }
}

TEST(ChunkText, ParagraphBoundariesArePrimary)
{
    const std::string text = "one two.\n\nthree four. five";
    const auto toks = tokenize(text);
    const auto b = text_boundaries(text, toks);
    ASSERT_FALSE(b.primary.empty());
    EXPECT_EQ(b.primary[0], 3u);  // "one" "two" "." | "three"
}
