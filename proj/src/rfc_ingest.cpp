#include "deltaspec/rfc_ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "deltaspec/error.hpp"
#include "deltaspec/tokenizer.hpp"

namespace deltaspec {

std::string_view to_string(RfcStatus s) noexcept
{
    switch (s) {
    case RfcStatus::standards_track: return "standards-track";
    case RfcStatus::informational: return "informational";
    case RfcStatus::experimental: return "experimental";
    case RfcStatus::historic: return "historic";
    case RfcStatus::unknown: return "unknown";
    }
    return "unknown";
}

RfcStatus rfc_status_from_string(std::string_view s) noexcept
{
    const std::string v = normalize_name(s);
    if (v == "standards-track" || v == "standards track" || v.starts_with("proposed standard") ||
        v.starts_with("internet standard") || v.starts_with("draft standard")) {
        return RfcStatus::standards_track;
    }
    if (v.starts_with("informational")) return RfcStatus::informational;
    if (v.starts_with("experimental")) return RfcStatus::experimental;
    if (v.starts_with("historic")) return RfcStatus::historic;
    return RfcStatus::unknown;
}

std::string YearMonth::str() const
{
    std::string m = std::to_string(month);
    if (m.size() < 2) {
        m.insert(0, "0");
    }
    return std::to_string(year) + "-" + m;
}

YearMonth YearMonth::parse(std::string_view s)
{
    YearMonth ym;
    const auto dash = s.find('-');
    const auto ys = s.substr(0, dash);
    std::from_chars(ys.data(), ys.data() + ys.size(), ym.year);
    if (dash != std::string_view::npos) {
        const auto ms = s.substr(dash + 1);
        std::from_chars(ms.data(), ms.data() + ms.size(), ym.month);
    }
    return ym;
}

std::string RfcSection::text() const
{
    std::string out;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (i > 0) {
            out += "\n\n";
        }
        out += body[i];
    }
    return out;
}

const RfcSection* RfcDocument::find_section(std::string_view id) const
{
    for (const auto& s : sections) {
        if (s.id == id) {
            return &s;
        }
    }
    return nullptr;
}

namespace {

constexpr std::array<std::string_view, 12> kMonths = {"january", "february", "march",     "april",
                                                       "may",     "june",     "july",      "august",
                                                       "september", "october", "november", "december"};

bool is_blank(std::string_view line)
{
    return trim(line).empty();
}

bool is_col0(std::string_view line)
{
    return !line.empty() && classify(line[0]) != CharClass::space;
}

std::string_view rstrip(std::string_view s)
{
    while (!s.empty() && classify(s.back()) == CharClass::space) {
        s.remove_suffix(1);
    }
    return s;
}

bool all_digits(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// "Month YYYY" at the end of `s`; returns month index 1..12 and year.
std::optional<YearMonth> trailing_date(std::string_view s)
{
    s = rstrip(s);
    if (s.size() < 6) {
        return std::nullopt;
    }
    const auto year_part = s.substr(s.size() - 4);
    if (!all_digits(year_part)) {
        return std::nullopt;
    }
    auto rest = rstrip(s.substr(0, s.size() - 4));
    if (rest.size() == s.size() - 4) {
        return std::nullopt;  // no space between month and year
    }
    // Allow "February 2012" and "1 February 2012".
    const auto sp = rest.find_last_of(" \t");
    const auto word = to_lower(sp == std::string_view::npos ? rest : rest.substr(sp + 1));
    for (std::size_t m = 0; m < kMonths.size(); ++m) {
        if (word == kMonths[m]) {
            YearMonth ym;
            std::from_chars(year_part.data(), year_part.data() + 4, ym.year);
            ym.month = static_cast<int>(m) + 1;
            return ym;
        }
    }
    return std::nullopt;
}

bool is_page_footer(std::string_view line)
{
    line = rstrip(line);
    if (line.empty() || line.back() != ']') {
        return false;
    }
    const auto open = line.rfind("[Page ");
    if (open == std::string_view::npos) {
        return false;
    }
    return all_digits(line.substr(open + 6, line.size() - 1 - (open + 6)));
}

bool is_page_header(std::string_view line)
{
    if (!line.starts_with("RFC")) {
        return false;
    }
    auto rest = line.substr(3);
    while (!rest.empty() && rest.front() == ' ') {
        rest.remove_prefix(1);
    }
    if (rest.empty() || !std::isdigit(static_cast<unsigned char>(rest.front()))) {
        return false;
    }
    return line.find("  ") != std::string_view::npos && trailing_date(line).has_value();
}

struct Heading {
    std::string id;
    std::string title;
    int level = 1;
    bool appendix = false;
};

// Column-0 section headings: "3.", "3.2.", "3.2.1  Title", "Appendix A.  Title", "A.1.  Title".
std::optional<Heading> parse_heading(std::string_view line)
{
    if (!is_col0(line)) {
        return std::nullopt;
    }
    line = rstrip(line);
    Heading h;
    std::size_t i = 0;
    auto read_numbered_tail = [&]() {
        while (i + 1 < line.size() && line[i] == '.' && std::isdigit(static_cast<unsigned char>(line[i + 1]))) {
            ++i;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
                ++i;
            }
            ++h.level;
        }
    };
    if (std::isdigit(static_cast<unsigned char>(line[0]))) {
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        read_numbered_tail();
        h.id = std::string(line.substr(0, i));
    } else if (line.starts_with("Appendix ") && line.size() > 9 && std::isupper(static_cast<unsigned char>(line[9]))) {
        i = 10;
        h.id = std::string(1, line[9]);
        h.appendix = true;
    } else if (std::isupper(static_cast<unsigned char>(line[0])) && line.size() > 2 && line[1] == '.' &&
               std::isdigit(static_cast<unsigned char>(line[2]))) {
        i = 1;
        read_numbered_tail();
        h.id = std::string(line.substr(0, i));
        h.appendix = true;
    } else {
        return std::nullopt;
    }
    if (i < line.size() && line[i] == '.') {
        ++i;
    }
    if (i >= line.size() || (line[i] != ' ' && line[i] != '\t')) {
        return std::nullopt;
    }
    const auto title = trim(line.substr(i));
    if (title.empty() || !std::isalpha(static_cast<unsigned char>(title[0]))) {
        return std::nullopt;
    }
    // TOC entries that slipped to column 0 end in dot leaders + page numbers.
    if (title.find("...") != std::string_view::npos) {
        return std::nullopt;
    }
    h.title = std::string(title);
    return h;
}

bool title_is(std::string_view line, std::initializer_list<std::string_view> names)
{
    const std::string v = normalize_name(line);
    return std::any_of(names.begin(), names.end(), [&](std::string_view n) { return v == n; });
}

bool is_references_heading(std::string_view line)
{
    if (!is_col0(line)) {
        return false;
    }
    std::string title;
    if (auto h = parse_heading(line)) {
        title = normalize_name(h->title);
    } else {
        title = normalize_name(line);
    }
    return title.ends_with("references") && title.size() <= 40;
}

bool is_authors_heading(std::string_view line)
{
    return is_col0(line) && title_is(line, {"authors' addresses", "author's address", "authors addresses",
                                            "author's addresses", "authors' address", "author address",
                                            "authors' addresses:", "author's address:"});
}

bool is_toc_heading(std::string_view line)
{
    return title_is(line, {"table of contents", "contents"});
}

std::vector<std::string> clean_lines(std::string_view raw)
{
    std::vector<std::string> lines;
    for (std::string line : split_lines(raw)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }

    std::vector<std::string> kept;
    kept.reserve(lines.size());
    for (std::string& line : lines) {
        if (line.find('\f') != std::string::npos) {
            line.erase(std::remove(line.begin(), line.end(), '\f'), line.end());
        }
        if (is_page_footer(line) || is_page_header(line)) {
            continue;
        }
        kept.push_back(std::move(line));
    }

    std::vector<std::string> out;
    out.reserve(kept.size());
    std::size_t i = 0;
    while (i < kept.size()) {
        const std::string& line = kept[i];
        if (is_toc_heading(line)) {
            // Entries are indented; the block ends at the next column-0 line.
            ++i;
            while (i < kept.size() && !is_col0(kept[i])) {
                ++i;
            }
            continue;
        }
        if (is_authors_heading(line)) {
            ++i;
            while (i < kept.size() && !is_col0(kept[i])) {
                ++i;
            }
            continue;
        }
        if (is_references_heading(line)) {
            ++i;
            while (i < kept.size() && !(is_col0(kept[i]) && !is_references_heading(kept[i]))) {
                ++i;
            }
            continue;
        }
        out.push_back(line);
        ++i;
    }

    // Collapse blank runs and drop leading/trailing blanks.
    std::vector<std::string> collapsed;
    collapsed.reserve(out.size());
    for (auto& line : out) {
        if (is_blank(line)) {
            if (collapsed.empty() || is_blank(collapsed.back())) {
                continue;
            }
            collapsed.emplace_back();
            continue;
        }
        collapsed.push_back(std::move(line));
    }
    while (!collapsed.empty() && is_blank(collapsed.back())) {
        collapsed.pop_back();
    }
    return collapsed;
}

std::string join_lines(const std::vector<std::string>& lines, std::size_t first, std::size_t last)
{
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        out += lines[i];
        out.push_back('\n');
    }
    return out;
}

std::vector<int> parse_rfc_list(std::string_view s, int self)
{
    std::vector<int> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            // Stop at annotations such as "(if approved)".
            if (s[i] == '(') {
                break;
            }
            ++i;
            continue;
        }
        int v = 0;
        auto [p, ec] = std::from_chars(s.data() + i, s.data() + s.size(), v);
        i = static_cast<std::size_t>(p - s.data());
        if (ec == std::errc() && v > 0 && v != self &&
            std::find(out.begin(), out.end(), v) == out.end()) {
            out.push_back(v);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Left column of a two-column header line.
std::string_view left_column(std::string_view line)
{
    line = trim(line);
    const auto gap = line.find("  ");
    return gap == std::string_view::npos ? line : line.substr(0, gap);
}

std::optional<std::string_view> field_value(std::string_view left, std::string_view key)
{
    if (left.size() <= key.size() || to_lower(left.substr(0, key.size())) != to_lower(key)) {
        return std::nullopt;
    }
    auto rest = left.substr(key.size());
    if (rest.empty() || rest.front() != ':') {
        return std::nullopt;
    }
    return trim(rest.substr(1));
}

}  // namespace

std::string strip_boilerplate(std::string_view raw)
{
    if (trim(raw).empty()) {
        throw error(errc::malformed_document, "empty document");
    }
    const auto lines = clean_lines(raw);
    const bool has_heading = std::any_of(lines.begin(), lines.end(), [](const std::string& l) {
        auto h = parse_heading(l);
        return h && !h->appendix;
    });
    if (!has_heading) {
        throw error(errc::malformed_document, "no numbered section heading found after cleaning");
    }
    return join_lines(lines, 0, lines.size());
}

double diagram_density(const std::vector<std::string>& lines)
{
    static constexpr std::string_view kDiagram = "+-|/\\=_*<>^~#";
    std::size_t diagram = 0;
    std::size_t nonspace = 0;
    for (const auto& line : lines) {
        for (char c : line) {
            if (classify(c) == CharClass::space) {
                continue;
            }
            ++nonspace;
            if (kDiagram.find(c) != std::string_view::npos) {
                ++diagram;
            }
        }
    }
    return nonspace == 0 ? 0.0 : static_cast<double>(diagram) / static_cast<double>(nonspace);
}

FigureSplit extract_ascii_figures(std::string_view section_id, const std::vector<std::string>& body_lines,
                                  const FigureConfig& cfg)
{
    FigureSplit out;
    std::size_t i = 0;
    const std::size_t n = body_lines.size();
    while (i < n) {
        if (is_blank(body_lines[i])) {
            out.prose_lines.push_back(body_lines[i]);
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !is_blank(body_lines[j])) {
            ++j;
        }
        std::vector<std::string> block(body_lines.begin() + static_cast<std::ptrdiff_t>(i),
                                       body_lines.begin() + static_cast<std::ptrdiff_t>(j));
        if (block.size() >= cfg.min_lines && diagram_density(block) > cfg.density_threshold) {
            AsciiFigure fig;
            fig.lines = std::move(block);
            fig.section = std::string(section_id);
            fig.first_line = i;
            fig.last_line = j - 1;
            // A one-line "Figure N..." paragraph right after the block is its caption.
            std::size_t k = j;
            while (k < n && is_blank(body_lines[k])) {
                ++k;
            }
            if (k < n && (k + 1 == n || is_blank(body_lines[k + 1]))) {
                const auto t = trim(body_lines[k]);
                if (t.starts_with("Figure")) {
                    fig.caption = std::string(t);
                }
            }
            out.figures.push_back(std::move(fig));
        } else {
            out.prose_lines.insert(out.prose_lines.end(), block.begin(), block.end());
        }
        i = j;
    }
    return out;
}

RfcDocument parse_rfc_header(std::string_view raw)
{
    if (trim(raw).empty()) {
        throw error(errc::malformed_document, "empty document");
    }
    std::vector<std::string> lines;
    for (std::string line : split_lines(raw)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        line.erase(std::remove(line.begin(), line.end(), '\f'), line.end());
        lines.push_back(std::move(line));
    }
    std::size_t i = 0;
    while (i < lines.size() && is_blank(lines[i])) {
        ++i;
    }
    RfcDocument doc;
    std::string updates_text;
    std::string obsoletes_text;
    std::size_t header_end = i;
    for (; header_end < lines.size() && !is_blank(lines[header_end]); ++header_end) {
        const std::string& line = lines[header_end];
        const auto left = left_column(line);
        if (auto v = field_value(left, "Request for Comments")) {
            std::from_chars(v->data(), v->data() + v->size(), doc.number);
        } else if (auto v2 = field_value(left, "RFC")) {
            std::from_chars(v2->data(), v2->data() + v2->size(), doc.number);
        } else if (auto v3 = field_value(left, "Updates")) {
            updates_text += " " + std::string(*v3);
        } else if (auto v4 = field_value(left, "Obsoletes")) {
            obsoletes_text += " " + std::string(*v4);
        } else if (auto v5 = field_value(left, "Category")) {
            doc.status = rfc_status_from_string(*v5);
        }
        if (auto ym = trailing_date(line)) {
            doc.published = *ym;
        }
    }
    if (doc.number <= 0) {
        throw error(errc::malformed_document, "no parseable RFC header block");
    }
    doc.updates = parse_rfc_list(updates_text, doc.number);
    doc.obsoletes = parse_rfc_list(obsoletes_text, doc.number);

    // Title: the first indented paragraph after the header block.
    std::size_t t = header_end;
    while (t < lines.size() && is_blank(lines[t])) {
        ++t;
    }
    std::string title;
    for (; t < lines.size() && !is_blank(lines[t]) && !is_col0(lines[t]); ++t) {
        if (!title.empty()) {
            title.push_back(' ');
        }
        title += std::string(trim(lines[t]));
    }
    doc.title = title;
    return doc;
}

RfcDocument parse_rfc(std::string_view raw, const FigureConfig& cfg)
{
    RfcDocument doc = parse_rfc_header(raw);
    const std::string cleaned = strip_boilerplate(raw);
    const auto lines = split_lines(cleaned);

    struct Open {
        Heading heading;
        std::size_t first = 0;
    };
    std::vector<std::pair<Open, std::size_t>> spans;  // (section, last exclusive)
    std::optional<Open> current;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto h = parse_heading(lines[i]);
        if (!h) {
            continue;
        }
        if (!current && h->appendix) {
            continue;
        }
        if (h->level > 2) {
            continue;  // flattened into the enclosing level-2 section
        }
        if (current) {
            spans.emplace_back(*current, i);
        }
        current = Open{*h, i};
    }
    if (!current) {
        throw error(errc::malformed_document, "no section headings");
    }
    spans.emplace_back(*current, lines.size());

    std::set<std::string> seen;
    for (const auto& [open, last] : spans) {
        RfcSection sec;
        sec.id = open.heading.id;
        sec.heading = open.heading.title;
        sec.appendix = open.heading.appendix;
        sec.first_line = open.first;
        sec.last_line = last;
        if (!seen.insert(sec.id).second) {
            throw error(errc::malformed_document, "duplicate section id " + sec.id);
        }

        std::vector<std::string> body(lines.begin() + static_cast<std::ptrdiff_t>(open.first + 1),
                                      lines.begin() + static_cast<std::ptrdiff_t>(last));
        auto split = extract_ascii_figures(sec.id, body, cfg);
        sec.figures = std::move(split.figures);

        std::string para;
        for (const auto& line : split.prose_lines) {
            if (is_blank(line)) {
                if (!para.empty()) {
                    sec.body.push_back(std::move(para));
                    para.clear();
                }
                continue;
            }
            if (!para.empty()) {
                para.push_back('\n');
            }
            para += line;
        }
        if (!para.empty()) {
            sec.body.push_back(std::move(para));
        }
        sec.token_count = count_tokens(sec.text());
        doc.sections.push_back(std::move(sec));
    }
    for (std::size_t i = 1; i < doc.sections.size(); ++i) {
        if (!dotted_less(doc.sections[i - 1].id, doc.sections[i].id)) {
            throw error(errc::malformed_document,
                        "section " + doc.sections[i].id + " out of order after " + doc.sections[i - 1].id);
        }
    }
    return doc;
}

json to_json(const AsciiFigure& f)
{
    json j;
    j["lines"] = f.lines;
    j["caption"] = f.caption ? json(*f.caption) : json(nullptr);
    j["origin"] = {{"section", f.section}, {"first_line", f.first_line}, {"last_line", f.last_line}};
    return j;
}

json to_json(const RfcSection& s, int rfc)
{
    json figs = json::array();
    for (const auto& f : s.figures) {
        figs.push_back(to_json(f));
    }
    return json{{"rfc", rfc},
                {"id", s.id},
                {"heading", s.heading},
                {"appendix", s.appendix},
                {"body", s.body},
                {"figures", figs},
                {"token_count", s.token_count},
                {"line_span", {s.first_line, s.last_line}}};
}

json metadata_json(const RfcDocument& d)
{
    std::vector<std::string> ids;
    for (const auto& s : d.sections) {
        ids.push_back(s.id);
    }
    return json{{"number", d.number},
                {"title", d.title},
                {"status", std::string(to_string(d.status))},
                {"updates", d.updates},
                {"obsoletes", d.obsoletes},
                {"published", d.published.str()},
                {"sections", ids}};
}

RfcSection section_from_json(const json& j)
{
    RfcSection s;
    s.id = j.at("id").get<std::string>();
    s.heading = j.at("heading").get<std::string>();
    s.appendix = j.value("appendix", false);
    s.body = j.at("body").get<std::vector<std::string>>();
    s.token_count = j.at("token_count").get<std::size_t>();
    if (j.contains("line_span")) {
        s.first_line = j["line_span"][0].get<std::size_t>();
        s.last_line = j["line_span"][1].get<std::size_t>();
    }
    for (const auto& fj : j.value("figures", json::array())) {
        AsciiFigure f;
        f.lines = fj.at("lines").get<std::vector<std::string>>();
        if (fj.contains("caption") && fj["caption"].is_string()) {
            f.caption = fj["caption"].get<std::string>();
        }
        f.section = fj.at("origin").at("section").get<std::string>();
        f.first_line = fj["origin"].at("first_line").get<std::size_t>();
        f.last_line = fj["origin"].at("last_line").get<std::size_t>();
        s.figures.push_back(std::move(f));
    }
    return s;
}

RfcDocument document_from_json(const json& metadata, const std::vector<json>& section_rows)
{
    RfcDocument d;
    d.number = metadata.at("number").get<int>();
    d.title = metadata.value("title", "");
    d.status = rfc_status_from_string(metadata.value("status", "unknown"));
    d.updates = metadata.value("updates", std::vector<int>{});
    d.obsoletes = metadata.value("obsoletes", std::vector<int>{});
    d.published = YearMonth::parse(metadata.value("published", "0-0"));
    for (const auto& row : section_rows) {
        if (row.at("rfc").get<int>() == d.number) {
            d.sections.push_back(section_from_json(row));
        }
    }
    return d;
}

std::vector<ManifestEntry> read_corpus_manifest(const std::filesystem::path& manifest)
{
    const json j = read_json_file(manifest);
    std::vector<ManifestEntry> out;
    const auto base = manifest.parent_path();
    for (const auto& e : j.at("documents")) {
        ManifestEntry m;
        m.path = e.at("path").get<std::string>();
        if (m.path.is_relative()) {
            m.path = base / m.path;
        }
        m.number = e.at("number").get<int>();
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<RfcDocument> ingest_corpus(const std::filesystem::path& manifest, const FigureConfig& cfg)
{
    std::vector<RfcDocument> docs;
    std::set<int> numbers;
    for (const auto& entry : read_corpus_manifest(manifest)) {
        RfcDocument d = parse_rfc(read_text_file(entry.path), cfg);
        if (d.number != entry.number) {
            throw error(errc::malformed_document, entry.path.string() + ": header says RFC " +
                                                      std::to_string(d.number) + ", manifest says " +
                                                      std::to_string(entry.number));
        }
        if (!numbers.insert(d.number).second) {
            throw error(errc::malformed_document, "duplicate RFC " + std::to_string(d.number) + " in corpus");
        }
        docs.push_back(std::move(d));
    }
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.number < b.number; });
    return docs;
}

void write_rfc_artifacts(const std::vector<RfcDocument>& docs, const std::filesystem::path& sections_jsonl,
                         const std::filesystem::path& documents_json)
{
    std::vector<json> rows;
    json meta = json::array();
    for (const auto& d : docs) {
        meta.push_back(metadata_json(d));
        for (const auto& s : d.sections) {
            rows.push_back(to_json(s, d.number));
        }
    }
    write_jsonl_file(sections_jsonl, rows);
    write_json_file(documents_json, json{{"documents", meta}});
}

std::vector<RfcDocument> read_rfc_artifacts(const std::filesystem::path& sections_jsonl,
                                            const std::filesystem::path& documents_json)
{
    const auto rows = read_jsonl_file(sections_jsonl);
    const json meta = read_json_file(documents_json);
    std::vector<RfcDocument> docs;
    for (const auto& m : meta.at("documents")) {
        docs.push_back(document_from_json(m, rows));
    }
    return docs;
}

}  // namespace deltaspec
