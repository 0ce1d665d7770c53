#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deltaspec/util.hpp"

namespace deltaspec {

struct SourceFile {
    std::string path;  // relative to the tree root, '/' separated
    std::string version;
    std::string content;
    std::size_t line_count = 0;
    std::size_t token_count = 0;

    static SourceFile make(std::string path, std::string version, std::string content);
};

enum class ExtractionTier { syntax_tree, brace_fallback };

std::string_view to_string(ExtractionTier t) noexcept;

struct Param {
    std::string name;
    std::string type;
    friend bool operator==(const Param&, const Param&) = default;
};

struct BodySpan {
    std::size_t start_byte = 0;
    std::size_t end_byte = 0;  // exclusive, one past the closing brace
    std::size_t start_line = 0;  // 1-based, inclusive
    std::size_t end_line = 0;
    friend bool operator==(const BodySpan&, const BodySpan&) = default;
};

struct CodeFunction {
    std::string id;  // "path::name", "@line" appended on duplicates within a file
    std::string name;
    std::string signature;
    std::vector<Param> params;
    BodySpan span;
    std::optional<std::string> doc_comment;
    std::string file;
    std::size_t token_count = 0;
    ExtractionTier tier = ExtractionTier::syntax_tree;

    std::size_t line_count() const noexcept { return span.end_line - span.start_line + 1; }
};

struct CodebaseIndex {
    std::string version;
    std::vector<SourceFile> files;
    std::vector<CodeFunction> functions;

    std::size_t total_functions() const noexcept { return functions.size(); }
    std::size_t total_lines() const noexcept;
    const CodeFunction* find(std::string_view id) const;
    const SourceFile* file(std::string_view path) const;
};

struct SourceFilter {
    std::vector<std::string> globs;
    std::vector<std::string> keywords;
    std::vector<std::string> extensions;

    static SourceFilter defaults();
    static SourceFilter from_json(const json& j);  // missing keys keep defaults
};

/// Files under `tree_root` matching a glob (fnmatch over the relative path) or
/// whose file-name components start with a keyword; lexicographic order.
/// Throws IoError when the root cannot be read.
std::vector<SourceFile> select_protocol_sources(const std::filesystem::path& tree_root, const SourceFilter& filter,
                                                const std::string& version = "");

/// Typedef names and empty macros harvested from a stub-header directory.
/// Includes in the source are redirected here instead of the real headers.
struct StubHeaders {
    std::set<std::string> typedef_names;
    std::set<std::string> empty_macros;
    std::set<std::string> empty_function_macros;
};

struct ResidueRegion {
    std::size_t start_line = 0;
    std::size_t end_line = 0;
    std::string reason;
};

struct ExtractionResult {
    std::vector<CodeFunction> functions;
    std::vector<ResidueRegion> residue;  // regions neither tier could use
    std::size_t tier1_errors = 0;
};

ExtractionResult extract_functions_detailed(const SourceFile& file, const std::filesystem::path& stub_headers);

std::vector<CodeFunction> extract_functions(const SourceFile& file, const std::filesystem::path& stub_headers);

/// Extracts every file (in parallel) and assembles the index in file order.
CodebaseIndex build_codebase_index(std::string version, std::vector<SourceFile> files,
                                   const std::filesystem::path& stub_headers, unsigned max_workers = 4);

struct ExtractionStats {
    std::size_t total_functions = 0;  // TF
    std::size_t total_lines = 0;      // TL
    double selected_functions = 0;    // SF, mean per RFC
    double selected_lines = 0;        // SL, mean per RFC
    double function_rate = 0;         // FER, percent, one decimal
    double length_rate = 0;           // LER, percent, one decimal
    std::size_t rfc_count = 0;
};

double round1(double x);

/// FER = SF/TF, LER = SL/TL as percentages rounded to one decimal.
ExtractionStats extraction_rates(std::size_t tf, std::size_t tl, double sf, double sl);

/// Means over the RFCs in `selected` (RFC -> selected function ids).
ExtractionStats compute_extraction_stats(const CodebaseIndex& index,
                                         const std::map<int, std::vector<std::string>>& selected);

json to_json(const CodeFunction& f);
CodeFunction function_from_json(const json& j);
json index_summary_json(const CodebaseIndex& index);

void write_code_artifacts(const CodebaseIndex& index, const std::filesystem::path& dir);
/// Reads functions.jsonl + index.json and re-reads file contents from files.jsonl.
CodebaseIndex read_code_artifacts(const std::filesystem::path& dir);

}  // namespace deltaspec
