#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deltaspec/code_ingest.hpp"
#include "deltaspec/rfc_ingest.hpp"
#include "deltaspec/tokenizer.hpp"
#include "deltaspec/util.hpp"

namespace deltaspec {

struct ChunkConfig {
    std::size_t chunk_size = 500;
    double redundancy_ratio = 0.10;

    std::size_t redundancy() const;  // floor(ratio * chunk_size)
    void validate() const;           // InvalidConfig unless size > 0 and ratio in [0, 0.5]
};

/// Candidate cut points, as token indices: a cut at c ends a chunk before
/// token c. Primary cuts are function ends (code) or paragraph ends (text);
/// secondary cuts are statement or sentence ends.
struct Boundaries {
    std::vector<std::size_t> primary;
    std::vector<std::size_t> secondary;
};

struct TokenSpan {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Cut positions only. Each chunk ends at the latest primary cut in
/// [nominal, nominal + R], else the latest secondary cut there, else at
/// nominal; the stream end counts as a primary cut. The next chunk starts R
/// tokens before the previous cut.
std::vector<TokenSpan> chunk_spans(std::size_t n_tokens, const ChunkConfig& cfg, const Boundaries& cuts);

struct Chunk {
    std::string id;      // stable_id(origin, index)
    std::string origin;  // "rfc793#3.2" or "code:<version>:<path>"
    std::size_t index = 0;
    TokenSpan span;
    std::size_t byte_begin = 0;
    std::size_t byte_end = 0;
    std::string text;  // overlap with the previous chunk included
    std::size_t overlap_prev = 0;
};

/// Chunks over `text`, whose tokens are `tokens`. Empty token stream: no chunks.
std::vector<Chunk> chunk_stream(std::string_view origin, std::string_view text, const std::vector<Token>& tokens,
                                const ChunkConfig& cfg, const Boundaries& cuts);

Boundaries code_boundaries(std::string_view text, const std::vector<Token>& tokens,
                           const std::vector<const CodeFunction*>& functions);
Boundaries text_boundaries(std::string_view text, const std::vector<Token>& tokens);

std::string code_origin(const std::string& version, const std::string& path);
std::string section_origin(int rfc, const std::string& section_id);

std::vector<Chunk> chunk_source_file(const SourceFile& file, const std::vector<const CodeFunction*>& functions,
                                     const ChunkConfig& cfg);
std::vector<Chunk> chunk_section(int rfc, const RfcSection& section, const ChunkConfig& cfg);

struct ChunkLink {
    std::string chunk_id;
    std::string function_id;
    std::size_t chunk_index = 0;
    std::size_t byte_begin = 0;  // intersection, file byte offsets
    std::size_t byte_end = 0;
    TokenSpan tokens;            // intersection, file token indices
    friend bool operator==(const ChunkLink&, const ChunkLink&) = default;
};

/// Both directions hold the same link set. Links of a function are ordered by
/// chunk index; links of a chunk by function start.
struct ChunkFunctionMap {
    std::map<std::string, std::vector<ChunkLink>> chunk_to_functions;
    std::map<std::string, std::vector<ChunkLink>> function_to_chunks;

    void merge(const ChunkFunctionMap& other);
    json to_json() const;
    static ChunkFunctionMap from_json(const json& j);
};

/// Chunks and functions must come from the same file. Throws SpanMismatch when
/// a function's bytes are not fully covered by chunk spans.
ChunkFunctionMap build_map(const std::vector<Chunk>& chunks, const std::vector<const CodeFunction*>& functions,
                           const std::vector<Token>& tokens);

using ChunkStore = std::map<std::string, Chunk>;

/// Concatenates the function's per-chunk slices, skipping bytes already
/// emitted by an earlier chunk. Throws UnknownFunction.
std::string reconstruct_function(const std::string& fid, const ChunkFunctionMap& map, const ChunkStore& chunks);

json to_json(const Chunk& c);
Chunk chunk_from_json(const json& j);

}  // namespace deltaspec
