#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deltaspec/util.hpp"

namespace deltaspec {

enum class RfcStatus { standards_track, informational, experimental, historic, unknown };

std::string_view to_string(RfcStatus s) noexcept;
RfcStatus rfc_status_from_string(std::string_view s) noexcept;

struct YearMonth {
    int year = 0;
    int month = 0;  // 1..12, 0 when unknown

    std::string str() const;  // "YYYY-MM"
    static YearMonth parse(std::string_view s);
    friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

struct AsciiFigure {
    std::vector<std::string> lines;  // verbatim from the source
    std::optional<std::string> caption;
    std::string section;             // origin section id
    std::size_t first_line = 0;      // body-relative, inclusive
    std::size_t last_line = 0;       // body-relative, inclusive
};

struct RfcSection {
    std::string id;        // dotted label, "3.2" or "A.1" for appendices
    std::string heading;
    std::vector<std::string> body;  // prose paragraphs, figures removed
    std::vector<AsciiFigure> figures;
    std::size_t token_count = 0;
    bool appendix = false;
    std::size_t first_line = 0;  // line span in the cleaned document, heading line included
    std::size_t last_line = 0;   // exclusive

    /// Paragraphs joined with blank lines; what token_count is measured over.
    std::string text() const;
};

struct RfcDocument {
    int number = 0;
    std::string title;
    RfcStatus status = RfcStatus::unknown;
    std::vector<int> updates;
    std::vector<int> obsoletes;
    YearMonth published;
    std::vector<RfcSection> sections;

    const RfcSection* find_section(std::string_view id) const;
};

struct FigureConfig {
    double density_threshold = 0.15;
    std::size_t min_lines = 3;
};

/// Removes page footers ("[Page N]"), form feeds and running page headers, the
/// table-of-contents block, the authors' address block and the references
/// block, then collapses blank-line runs. Idempotent.
/// Throws MalformedDocument when no numbered section heading survives.
std::string strip_boilerplate(std::string_view raw);

struct FigureSplit {
    std::vector<AsciiFigure> figures;
    std::vector<std::string> prose_lines;
};

/// Splits blank-line-delimited blocks into figures and prose. A block is a
/// figure when it has at least `min_lines` lines and the share of diagram
/// characters among its non-space characters exceeds the threshold.
FigureSplit extract_ascii_figures(std::string_view section_id, const std::vector<std::string>& body_lines,
                                  const FigureConfig& cfg = {});

/// Diagram-character share of the non-space characters in `lines`.
double diagram_density(const std::vector<std::string>& lines);

/// Header-block metadata only (number, status, updates, obsoletes, date, title).
RfcDocument parse_rfc_header(std::string_view raw);

RfcDocument parse_rfc(std::string_view raw, const FigureConfig& cfg = {});

json to_json(const AsciiFigure& f);
json to_json(const RfcSection& s, int rfc);
json metadata_json(const RfcDocument& d);
RfcSection section_from_json(const json& j);
RfcDocument document_from_json(const json& metadata, const std::vector<json>& section_rows);

struct ManifestEntry {
    std::filesystem::path path;
    int number = 0;
};

/// Manifest: {"documents": [{"path": "...", "number": N}, ...]}; relative paths
/// resolve against the manifest's directory.
std::vector<ManifestEntry> read_corpus_manifest(const std::filesystem::path& manifest);

/// Parses every manifest document; the parsed header number must match the
/// manifest entry. Documents come back sorted by number.
std::vector<RfcDocument> ingest_corpus(const std::filesystem::path& manifest, const FigureConfig& cfg = {});

void write_rfc_artifacts(const std::vector<RfcDocument>& docs, const std::filesystem::path& sections_jsonl,
                         const std::filesystem::path& documents_json);
std::vector<RfcDocument> read_rfc_artifacts(const std::filesystem::path& sections_jsonl,
                                            const std::filesystem::path& documents_json);

}  // namespace deltaspec
