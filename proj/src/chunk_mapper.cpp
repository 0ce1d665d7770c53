#include "deltaspec/chunk_mapper.hpp"

#include <algorithm>
#include <cmath>

#include "deltaspec/error.hpp"

namespace deltaspec {

std::size_t ChunkConfig::redundancy() const
{
    return static_cast<std::size_t>(std::floor(redundancy_ratio * static_cast<double>(chunk_size)));
}

void ChunkConfig::validate() const
{
    if (chunk_size == 0) {
        throw error(errc::invalid_config, "chunk_size must be positive");
    }
    if (!(redundancy_ratio >= 0.0 && redundancy_ratio <= 0.5)) {
        throw error(errc::invalid_config, "redundancy_ratio must lie in [0, 0.5]");
    }
}

namespace {

// Latest cut in the sorted list lying in [lo, hi].
std::optional<std::size_t> latest_in(const std::vector<std::size_t>& cuts, std::size_t lo, std::size_t hi)
{
    auto it = std::upper_bound(cuts.begin(), cuts.end(), hi);
    if (it == cuts.begin()) {
        return std::nullopt;
    }
    --it;
    if (*it < lo) {
        return std::nullopt;
    }
    return *it;
}

}  // namespace

std::vector<TokenSpan> chunk_spans(std::size_t n, const ChunkConfig& cfg, const Boundaries& cuts)
{
    cfg.validate();
    std::vector<TokenSpan> spans;
    if (n == 0) {
        return spans;
    }
    const std::size_t r = cfg.redundancy();
    std::size_t start = 0;
    while (true) {
        const std::size_t nominal = start + cfg.chunk_size;
        if (nominal >= n) {
            spans.push_back({start, n});
            break;
        }
        const std::size_t hi = nominal + r;
        std::size_t cut = nominal;
        if (n <= hi) {
            cut = n;
        } else if (auto p = latest_in(cuts.primary, nominal, hi)) {
            cut = *p;
        } else if (auto s = latest_in(cuts.secondary, nominal, hi)) {
            cut = *s;
        }
        spans.push_back({start, cut});
        if (cut >= n) {
            break;
        }
        start = cut - r;
    }
    return spans;
}

std::vector<Chunk> chunk_stream(std::string_view origin, std::string_view text, const std::vector<Token>& tokens,
                                const ChunkConfig& cfg, const Boundaries& cuts)
{
    const auto spans = chunk_spans(tokens.size(), cfg, cuts);
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size());
    const std::size_t n = tokens.size();
    for (std::size_t i = 0; i < spans.size(); ++i) {
        Chunk c;
        c.origin = std::string(origin);
        c.index = i;
        c.id = stable_id({origin, std::to_string(i)});
        c.span = spans[i];
        c.byte_begin = tokens[c.span.start].begin;
        c.byte_end = c.span.end < n ? tokens[c.span.end].begin : tokens[n - 1].end;
        c.text = std::string(text.substr(c.byte_begin, c.byte_end - c.byte_begin));
        c.overlap_prev = i == 0 ? 0 : spans[i - 1].end - c.span.start;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

namespace {

// Index of the first token starting at or after `byte`.
std::size_t token_at(const std::vector<Token>& tokens, std::size_t byte)
{
    return static_cast<std::size_t>(
        std::lower_bound(tokens.begin(), tokens.end(), byte, [](const Token& t, std::size_t b) { return t.begin < b; }) -
        tokens.begin());
}

void sort_unique(std::vector<std::size_t>& v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Boundaries code_boundaries(std::string_view text, const std::vector<Token>& tokens,
                           const std::vector<const CodeFunction*>& functions)
{
    Boundaries b;
    for (const CodeFunction* f : functions) {
        b.primary.push_back(token_at(tokens, f->span.end_byte));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto t = token_text(text, tokens[i]);
        if (!is_word_token(text, tokens[i]) && (t.find(';') != std::string_view::npos || t.find('}') != std::string_view::npos)) {
            b.secondary.push_back(i + 1);
        }
    }
    sort_unique(b.primary);
    sort_unique(b.secondary);
    return b;
}

Boundaries text_boundaries(std::string_view text, const std::vector<Token>& tokens)
{
    Boundaries b;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const auto gap = text.substr(tokens[i].end, tokens[i + 1].begin - tokens[i].end);
        if (std::count(gap.begin(), gap.end(), '\n') >= 2) {
            b.primary.push_back(i + 1);
        }
        const auto t = token_text(text, tokens[i]);
        if (!is_word_token(text, tokens[i]) &&
            (t.back() == '.' || t.back() == '!' || t.back() == '?' || t.back() == ':')) {
            b.secondary.push_back(i + 1);
        }
    }
    return b;
}

std::string code_origin(const std::string& version, const std::string& path)
{
    return "code:" + version + ":" + path;
}

std::string section_origin(int rfc, const std::string& section_id)
{
    return "rfc" + std::to_string(rfc) + "#" + section_id;
}

std::vector<Chunk> chunk_source_file(const SourceFile& file, const std::vector<const CodeFunction*>& functions,
                                     const ChunkConfig& cfg)
{
    const auto tokens = tokenize(file.content);
    return chunk_stream(code_origin(file.version, file.path), file.content, tokens, cfg,
                        code_boundaries(file.content, tokens, functions));
}

std::vector<Chunk> chunk_section(int rfc, const RfcSection& section, const ChunkConfig& cfg)
{
    const std::string text = section.text();
    const auto tokens = tokenize(text);
    return chunk_stream(section_origin(rfc, section.id), text, tokens, cfg, text_boundaries(text, tokens));
}

void ChunkFunctionMap::merge(const ChunkFunctionMap& other)
{
    for (const auto& [k, v] : other.chunk_to_functions) {
        auto& dst = chunk_to_functions[k];
        dst.insert(dst.end(), v.begin(), v.end());
    }
    for (const auto& [k, v] : other.function_to_chunks) {
        auto& dst = function_to_chunks[k];
        dst.insert(dst.end(), v.begin(), v.end());
    }
}

namespace {

json link_json(const ChunkLink& l)
{
    return json{{"chunk", l.chunk_id},
                {"function", l.function_id},
                {"chunk_index", l.chunk_index},
                {"bytes", {l.byte_begin, l.byte_end}},
                {"tokens", {l.tokens.start, l.tokens.end}}};
}

ChunkLink link_from_json(const json& j)
{
    ChunkLink l;
    l.chunk_id = j.at("chunk").get<std::string>();
    l.function_id = j.at("function").get<std::string>();
    l.chunk_index = j.at("chunk_index").get<std::size_t>();
    l.byte_begin = j.at("bytes").at(0).get<std::size_t>();
    l.byte_end = j.at("bytes").at(1).get<std::size_t>();
    l.tokens = {j.at("tokens").at(0).get<std::size_t>(), j.at("tokens").at(1).get<std::size_t>()};
    return l;
}

}  // namespace

json ChunkFunctionMap::to_json() const
{
    json c2f = json::object();
    for (const auto& [k, links] : chunk_to_functions) {
        json arr = json::array();
        for (const auto& l : links) {
            arr.push_back(link_json(l));
        }
        c2f[k] = arr;
    }
    json f2c = json::object();
    for (const auto& [k, links] : function_to_chunks) {
        json arr = json::array();
        for (const auto& l : links) {
            arr.push_back(link_json(l));
        }
        f2c[k] = arr;
    }
    return json{{"chunk_to_functions", c2f}, {"function_to_chunks", f2c}};
}

ChunkFunctionMap ChunkFunctionMap::from_json(const json& j)
{
    ChunkFunctionMap m;
    for (const auto& [k, arr] : j.at("chunk_to_functions").items()) {
        auto& v = m.chunk_to_functions[k];
        for (const auto& l : arr) {
            v.push_back(link_from_json(l));
        }
    }
    for (const auto& [k, arr] : j.at("function_to_chunks").items()) {
        auto& v = m.function_to_chunks[k];
        for (const auto& l : arr) {
            v.push_back(link_from_json(l));
        }
    }
    return m;
}

ChunkFunctionMap build_map(const std::vector<Chunk>& chunks, const std::vector<const CodeFunction*>& functions,
                           const std::vector<Token>& tokens)
{
    ChunkFunctionMap map;
    for (const CodeFunction* f : functions) {
        const std::size_t fb = f->span.start_byte;
        const std::size_t fe = f->span.end_byte;
        const std::size_t ft0 = token_at(tokens, fb);
        const std::size_t ft1 = token_at(tokens, fe);
        std::size_t covered = fb;
        auto& links = map.function_to_chunks[f->id];
        for (const Chunk& c : chunks) {
            const std::size_t b = std::max(fb, c.byte_begin);
            const std::size_t e = std::min(fe, c.byte_end);
            if (b >= e) {
                continue;
            }
            if (b > covered) {
                break;  // gap; reported below
            }
            covered = std::max(covered, e);
            ChunkLink l;
            l.chunk_id = c.id;
            l.function_id = f->id;
            l.chunk_index = c.index;
            l.byte_begin = b;
            l.byte_end = e;
            l.tokens = {std::max(ft0, c.span.start), std::min(ft1, c.span.end)};
            links.push_back(l);
            map.chunk_to_functions[c.id].push_back(l);
        }
        if (links.empty() || covered < fe) {
            throw error(errc::span_mismatch, "function " + f->id + " bytes [" + std::to_string(fb) + ", " +
                                                 std::to_string(fe) + ") not covered by chunks");
        }
    }
    for (auto& [id, links] : map.chunk_to_functions) {
        std::stable_sort(links.begin(), links.end(),
                         [](const ChunkLink& a, const ChunkLink& b) { return a.byte_begin < b.byte_begin; });
    }
    return map;
}

std::string reconstruct_function(const std::string& fid, const ChunkFunctionMap& map, const ChunkStore& chunks)
{
    const auto it = map.function_to_chunks.find(fid);
    if (it == map.function_to_chunks.end() || it->second.empty()) {
        throw error(errc::unknown_function, fid);
    }
    std::string out;
    std::size_t cursor = it->second.front().byte_begin;
    for (const ChunkLink& l : it->second) {
        const auto c = chunks.find(l.chunk_id);
        if (c == chunks.end()) {
            throw error(errc::unknown_function, "chunk " + l.chunk_id + " of " + fid + " missing from store");
        }
        if (l.byte_end <= cursor) {
            continue;
        }
        const std::size_t from = std::max(l.byte_begin, cursor);
        out.append(c->second.text, from - c->second.byte_begin, l.byte_end - from);
        cursor = l.byte_end;
    }
    return out;
}

json to_json(const Chunk& c)
{
    return json{{"id", c.id},
                {"origin", c.origin},
                {"index", c.index},
                {"span", {c.span.start, c.span.end}},
                {"bytes", {c.byte_begin, c.byte_end}},
                {"overlap_prev", c.overlap_prev},
                {"overlap_span", {c.span.start, c.span.start + c.overlap_prev}},
                {"text", c.text}};
}

Chunk chunk_from_json(const json& j)
{
    Chunk c;
    c.id = j.at("id").get<std::string>();
    c.origin = j.at("origin").get<std::string>();
    c.index = j.at("index").get<std::size_t>();
    c.span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
    c.byte_begin = j.at("bytes").at(0).get<std::size_t>();
    c.byte_end = j.at("bytes").at(1).get<std::size_t>();
    c.overlap_prev = j.at("overlap_prev").get<std::size_t>();
    c.text = j.at("text").get<std::string>();
    return c;
}

}  // namespace deltaspec
