#include "deltaspec/code_ingest.hpp"

#include <fnmatch.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_set>

#include "c_lexer.hpp"
#include "deltaspec/error.hpp"
#include "deltaspec/parallel.hpp"
#include "deltaspec/tokenizer.hpp"

namespace deltaspec {

namespace fs = std::filesystem;
using clex::CToken;
using clex::Kind;

std::string_view to_string(ExtractionTier t) noexcept
{
    return t == ExtractionTier::syntax_tree ? "syntax-tree" : "brace-fallback";
}

SourceFile SourceFile::make(std::string path, std::string version, std::string content)
{
    SourceFile f;
    f.path = std::move(path);
    f.version = std::move(version);
    f.line_count = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
    if (!content.empty() && content.back() != '\n') {
        ++f.line_count;
    }
    f.token_count = count_tokens(content);
    f.content = std::move(content);
    return f;
}

std::size_t CodebaseIndex::total_lines() const noexcept
{
    std::size_t total = 0;
    for (const auto& f : functions) {
        total += f.line_count();
    }
    return total;
}

const CodeFunction* CodebaseIndex::find(std::string_view id) const
{
    for (const auto& f : functions) {
        if (f.id == id) {
            return &f;
        }
    }
    return nullptr;
}

const SourceFile* CodebaseIndex::file(std::string_view path) const
{
    for (const auto& f : files) {
        if (f.path == path) {
            return &f;
        }
    }
    return nullptr;
}

SourceFilter SourceFilter::defaults()
{
    SourceFilter f;
    f.globs = {"net/ipv4/*", "net/ipv6/*", "net/core/*", "include/net/*", "sys/netinet/*", "sys/netinet6/*"};
    f.keywords = {"tcp", "ip"};
    f.extensions = {".c", ".h"};
    return f;
}

SourceFilter SourceFilter::from_json(const json& j)
{
    SourceFilter f = defaults();
    if (j.contains("globs")) f.globs = j["globs"].get<std::vector<std::string>>();
    if (j.contains("keywords")) f.keywords = j["keywords"].get<std::vector<std::string>>();
    if (j.contains("extensions")) f.extensions = j["extensions"].get<std::vector<std::string>>();
    return f;
}

namespace {

bool keyword_match(const std::string& filename, const std::vector<std::string>& keywords)
{
    const std::string stem = to_lower(fs::path(filename).stem().string());
    std::size_t i = 0;
    while (i < stem.size()) {
        std::size_t j = i;
        while (j < stem.size() && std::isalnum(static_cast<unsigned char>(stem[j]))) {
            ++j;
        }
        const std::string_view part(stem.data() + i, j - i);
        for (const auto& kw : keywords) {
            if (!kw.empty() && part.starts_with(to_lower(kw))) {
                return true;
            }
        }
        i = j + 1;
    }
    return false;
}

}  // namespace

std::vector<SourceFile> select_protocol_sources(const fs::path& tree_root, const SourceFilter& filter,
                                                const std::string& version)
{
    std::error_code ec;
    if (!fs::is_directory(tree_root, ec)) {
        throw error(errc::io_error, "cannot read source tree " + tree_root.string());
    }
    std::vector<std::string> selected;
    fs::recursive_directory_iterator it(tree_root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        throw error(errc::io_error, "cannot read source tree " + tree_root.string() + ": " + ec.message());
    }
    for (const auto& entry : it) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const std::string ext = entry.path().extension().string();
        if (!filter.extensions.empty() &&
            std::find(filter.extensions.begin(), filter.extensions.end(), ext) == filter.extensions.end()) {
            continue;
        }
        const std::string rel = fs::relative(entry.path(), tree_root).generic_string();
        bool keep = std::any_of(filter.globs.begin(), filter.globs.end(),
                                [&](const std::string& g) { return ::fnmatch(g.c_str(), rel.c_str(), 0) == 0; });
        keep = keep || keyword_match(entry.path().filename().string(), filter.keywords);
        if (keep) {
            selected.push_back(rel);
        }
    }
    std::sort(selected.begin(), selected.end());
    std::vector<SourceFile> files;
    files.reserve(selected.size());
    for (const auto& rel : selected) {
        files.push_back(SourceFile::make(rel, version, read_text_file(tree_root / rel)));
    }
    return files;
}

namespace {

const std::unordered_set<std::string_view> kStorage = {
    "static", "extern", "inline", "__inline", "__inline__", "register", "auto", "typedef", "_Noreturn",
    "__extension__", "_Thread_local", "__thread"};
const std::unordered_set<std::string_view> kQualifiers = {
    "const", "volatile", "restrict", "__restrict", "__restrict__", "__const", "__volatile__", "_Atomic"};
const std::unordered_set<std::string_view> kTypeKeywords = {
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool", "_Complex",
    "__signed__", "__int128"};
const std::unordered_set<std::string_view> kAttributeWords = {
    "__attribute__", "__attribute", "__declspec", "__asm__", "__asm", "asm"};
const std::unordered_set<std::string_view> kStatementKeywords = {
    "if", "else", "for", "while", "do", "switch", "case", "default", "return", "goto", "break", "continue",
    "sizeof", "struct", "union", "enum"};

constexpr std::size_t npos = static_cast<std::size_t>(-1);

struct FnDef {
    std::size_t first = 0;        // first token of the definition
    std::size_t brace_open = 0;
    std::size_t brace_close = 0;
    std::size_t name_tok = 0;
    std::size_t params_open = 0;
    std::size_t params_close = 0;
    ExtractionTier tier = ExtractionTier::syntax_tree;
};

struct parse_failure {
    std::string reason;
};

class DeclParser {
public:
    DeclParser(std::string_view src, const std::vector<CToken>& toks, const StubHeaders& stubs)
        : src_(src), toks_(toks), stubs_(stubs), typedefs_(stubs.typedef_names)
    {}

    struct Outcome {
        std::vector<FnDef> functions;
        std::vector<std::pair<std::size_t, std::size_t>> error_regions;
        std::vector<std::string> error_reasons;
    };

    Outcome run()
    {
        Outcome out;
        std::size_t i = 0;
        while (i < toks_.size()) {
            const std::size_t start = i;
            try {
                parse_external(i, out.functions);
            } catch (const parse_failure& f) {
                i = resync(start);
                out.error_regions.emplace_back(start, i);
                out.error_reasons.push_back(f.reason);
            }
            if (i == start) {
                ++i;  // never stall
            }
        }
        return out;
    }

    const std::set<std::string>& typedefs() const { return typedefs_; }

    std::size_t match(std::size_t open) const
    {
        const auto o = text(open);
        const std::string_view c = o == "(" ? ")" : o == "[" ? "]" : "}";
        int depth = 0;
        for (std::size_t i = open; i < toks_.size(); ++i) {
            const auto t = text(i);
            if (toks_[i].kind != Kind::punct) {
                continue;
            }
            if (t == o) {
                ++depth;
            } else if (t == c) {
                if (--depth == 0) {
                    return i;
                }
            }
        }
        return npos;
    }

    std::string_view text(std::size_t i) const
    {
        if (i >= toks_.size()) {
            return {};
        }
        return src_.substr(toks_[i].begin, toks_[i].end - toks_[i].begin);
    }

    bool is_ident(std::size_t i) const { return i < toks_.size() && toks_[i].kind == Kind::identifier; }

private:
    [[noreturn]] void fail(std::size_t i, const std::string& why) const
    {
        throw parse_failure{why + " at '" + std::string(text(i)) + "'"};
    }

    std::size_t skip_group(std::size_t i) const
    {
        if (text(i) != "(") {
            fail(i, "expected '('");
        }
        const auto close = match(i);
        if (close == npos) {
            fail(i, "unbalanced parentheses");
        }
        return close + 1;
    }

    // Attributes, asm labels and stub-declared empty macros.
    bool skip_ignorable(std::size_t& i) const
    {
        if (!is_ident(i)) {
            return false;
        }
        const auto t = text(i);
        if (kAttributeWords.contains(t)) {
            i = skip_group(i + 1);
            return true;
        }
        const std::string s(t);
        if (stubs_.empty_macros.contains(s)) {
            ++i;
            return true;
        }
        if (stubs_.empty_function_macros.contains(s)) {
            ++i;
            if (text(i) == "(") {
                i = skip_group(i);
            }
            return true;
        }
        return false;
    }

    bool parse_specifiers(std::size_t& i, bool& is_typedef) const
    {
        bool saw_type = false;
        while (i < toks_.size() && is_ident(i)) {
            const auto t = text(i);
            if (kStorage.contains(t)) {
                is_typedef = is_typedef || t == "typedef";
                ++i;
            } else if (kQualifiers.contains(t)) {
                ++i;
            } else if (skip_ignorable(i)) {
            } else if (kTypeKeywords.contains(t)) {
                saw_type = true;
                ++i;
            } else if (t == "struct" || t == "union" || t == "enum") {
                ++i;
                while (skip_ignorable(i)) {
                }
                if (is_ident(i)) {
                    ++i;
                }
                if (text(i) == "{") {
                    const auto close = match(i);
                    if (close == npos) {
                        fail(i, "unbalanced braces");
                    }
                    i = close + 1;
                }
                saw_type = true;
            } else if (t == "typeof" || t == "__typeof__" || t == "__typeof") {
                i = skip_group(i + 1);
                saw_type = true;
            } else if (!saw_type && typedefs_.contains(std::string(t))) {
                saw_type = true;
                ++i;
            } else {
                break;
            }
        }
        return saw_type;
    }

    struct Declarator {
        std::size_t name_tok = npos;
        std::size_t params_open = npos;
        std::size_t params_close = npos;
    };

    Declarator parse_declarator(std::size_t& i, bool abstract_ok) const
    {
        Declarator d;
        while (text(i) == "*") {
            ++i;
            while (is_ident(i) && (kQualifiers.contains(text(i)) || skip_ignorable(i))) {
                if (kQualifiers.contains(text(i))) {
                    ++i;
                }
            }
        }
        bool direct_name = false;
        if (is_ident(i) && !kStorage.contains(text(i)) && !kTypeKeywords.contains(text(i))) {
            d.name_tok = i++;
            direct_name = true;
        } else if (text(i) == "(" && !(abstract_ok && looks_like_params(i))) {
            ++i;
            Declarator inner = parse_declarator(i, abstract_ok);
            if (text(i) != ")") {
                fail(i, "expected ')' in declarator");
            }
            ++i;
            d = inner;
        } else if (!abstract_ok) {
            fail(i, "expected declarator");
        }
        bool first_suffix = true;
        while (true) {
            if (text(i) == "[") {
                const auto close = match(i);
                if (close == npos) {
                    fail(i, "unbalanced brackets");
                }
                i = close + 1;
            } else if (text(i) == "(") {
                const auto close = match(i);
                if (close == npos) {
                    fail(i, "unbalanced parentheses");
                }
                validate_params(i, close);
                if (first_suffix && direct_name) {
                    d.params_open = i;
                    d.params_close = close;
                }
                i = close + 1;
            } else {
                break;
            }
            first_suffix = false;
        }
        return d;
    }

    // "(int)" / "(void)" / "(struct x *)" in an abstract declarator position.
    bool looks_like_params(std::size_t open) const
    {
        const std::size_t i = open + 1;
        if (text(i) == ")") {
            return true;
        }
        if (!is_ident(i)) {
            return false;
        }
        const auto t = text(i);
        return kTypeKeywords.contains(t) || kQualifiers.contains(t) || t == "struct" || t == "union" ||
               t == "enum" || typedefs_.contains(std::string(t));
    }

    void validate_params(std::size_t open, std::size_t close) const
    {
        if (close == open + 1) {
            return;
        }
        if (close == open + 2 && text(open + 1) == "void") {
            return;
        }
        std::size_t i = open + 1;
        while (i < close) {
            if (text(i) == "...") {
                ++i;
            } else {
                bool td = false;
                if (!parse_specifiers(i, td)) {
                    fail(i, "unknown parameter type");
                }
                if (text(i) != "," && i < close) {
                    parse_declarator(i, true);
                }
                while (skip_ignorable(i)) {
                }
            }
            if (i == close) {
                break;
            }
            if (text(i) != ",") {
                fail(i, "malformed parameter list");
            }
            ++i;
        }
    }

    void skip_initializer(std::size_t& i) const
    {
        while (i < toks_.size()) {
            const auto t = text(i);
            if (t == "," || t == ";") {
                return;
            }
            if (t == "(" || t == "[" || t == "{") {
                const auto close = match(i);
                if (close == npos) {
                    fail(i, "unbalanced initializer");
                }
                i = close + 1;
                continue;
            }
            ++i;
        }
        fail(i, "unterminated initializer");
    }

    void parse_external(std::size_t& i, std::vector<FnDef>& fns)
    {
        const std::size_t start = i;
        if (text(i) == ";") {
            ++i;
            return;
        }
        bool is_typedef = false;
        if (!parse_specifiers(i, is_typedef)) {
            fail(i, "no type specifier");
        }
        if (text(i) == ";") {
            ++i;
            return;
        }
        bool first = true;
        while (true) {
            Declarator d = parse_declarator(i, false);
            if (d.name_tok == npos) {
                fail(i, "declarator without a name");
            }
            while (skip_ignorable(i)) {
            }
            if (is_typedef) {
                typedefs_.insert(std::string(text(d.name_tok)));
            }
            const auto t = text(i);
            if (t == "{") {
                if (!first || is_typedef || d.params_open == npos) {
                    fail(i, "unexpected '{'");
                }
                const auto close = match(i);
                if (close == npos) {
                    fail(i, "unbalanced function body");
                }
                fns.push_back({start, i, close, d.name_tok, d.params_open, d.params_close, ExtractionTier::syntax_tree});
                i = close + 1;
                return;
            }
            if (t == "=") {
                ++i;
                skip_initializer(i);
            }
            if (text(i) == ",") {
                ++i;
                first = false;
                continue;
            }
            if (text(i) == ";") {
                ++i;
                return;
            }
            fail(i, "expected ';'");
        }
    }

    // End of the region a failed declaration occupies: after a top-level ';',
    // or after a brace group that follows a ')' (a function-like body).
    std::size_t resync(std::size_t start) const
    {
        std::size_t i = start;
        while (i < toks_.size()) {
            const auto t = text(i);
            if (t == ";") {
                return i + 1;
            }
            if (t == "(" || t == "[" || t == "{") {
                const auto close = match(i);
                if (close == npos) {
                    return toks_.size();
                }
                if (t == "{" && i > start && text(i - 1) == ")") {
                    return close + 1;
                }
                i = close + 1;
                continue;
            }
            ++i;
        }
        return toks_.size();
    }

    std::string_view src_;
    const std::vector<CToken>& toks_;
    const StubHeaders& stubs_;
    std::set<std::string> typedefs_;
};

// Brace-matching recovery inside one tier-1 error region [rs, re).
bool is_macro_name(std::string_view w)
{
    bool letter = false;
    for (char c : w) {
        if (c >= 'A' && c <= 'Z') {
            letter = true;
        } else if (!(c == '_' || (c >= '0' && c <= '9'))) {
            return false;
        }
    }
    return letter;
}

std::vector<FnDef> brace_scan(const DeclParser& p, std::size_t rs, std::size_t re)
{
    std::vector<FnDef> out;
    std::size_t cand = rs;
    std::size_t i = rs;
    while (i < re) {
        const auto t = p.text(i);
        if (t == ";") {
            cand = ++i;
            continue;
        }
        if (t == "{") {
            const auto close = p.match(i);
            i = (close == npos || close >= re) ? re : close + 1;
            cand = i;
            continue;
        }
        if (t == "(" && i > cand && p.is_ident(i - 1) && !kStatementKeywords.contains(p.text(i - 1))) {
            const auto close = p.match(i);
            if (close == npos || close >= re) {
                break;
            }
            std::size_t k = close + 1;
            while (k < re && p.is_ident(k)) {
                const auto w = p.text(k);
                if ((kAttributeWords.contains(w) || w.starts_with("__")) && p.text(k + 1) == "(") {
                    const auto c2 = p.match(k + 1);
                    if (c2 == npos || c2 >= re) {
                        break;
                    }
                    k = c2 + 1;
                } else {
                    ++k;
                }
            }
            if (k < re && p.text(k) == "{") {
                const auto body_close = p.match(k);
                if (body_close == npos || body_close >= re) {
                    break;
                }
                FnDef d{cand, k, body_close, i - 1, i, close, ExtractionTier::brace_fallback};
                // DEFINE_X(name, ...) { ... }: the function is named by the
                // macro's first argument; its parameters stay unknown.
                if (is_macro_name(p.text(i - 1)) && p.is_ident(i + 1) &&
                    (p.text(i + 2) == "," || p.text(i + 2) == ")")) {
                    d.name_tok = i + 1;
                    d.params_close = i;
                }
                out.push_back(d);
                i = body_close + 1;
                cand = i;
                continue;
            }
            i = close + 1;
            continue;
        }
        ++i;
    }
    return out;
}

std::string collapse_ws(std::string_view s)
{
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (classify(c) == CharClass::space) {
            space = true;
            continue;
        }
        if (space) {
            out.push_back(' ');
            space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<Param> split_params(std::string_view src, const std::vector<CToken>& toks, const DeclParser& p,
                                std::size_t open, std::size_t close)
{
    std::vector<Param> params;
    if (close <= open + 1) {
        return params;
    }
    if (close == open + 2 && p.text(open + 1) == "void") {
        return params;
    }
    std::size_t part_start = open + 1;
    int depth = 0;
    for (std::size_t i = open + 1; i <= close; ++i) {
        const auto t = p.text(i);
        if (i < close && (t == "(" || t == "[")) {
            ++depth;
        } else if (i < close && (t == ")" || t == "]")) {
            --depth;
        }
        if (i == close || (depth == 0 && t == ",")) {
            if (i == part_start) {
                part_start = i + 1;
                continue;
            }
            // Name: the last identifier outside nested parentheses, or inside
            // the first group for function pointers ("(*cb)(int)").
            std::size_t name_tok = npos;
            int d = 0;
            bool in_fp = false;
            for (std::size_t k = part_start; k < i; ++k) {
                const auto w = p.text(k);
                if (w == "(") {
                    ++d;
                    if (d == 1 && p.text(k + 1) == "*") {
                        in_fp = true;
                    }
                } else if (w == ")") {
                    --d;
                    if (d == 0) {
                        in_fp = false;
                    }
                } else if (w == "[" ) {
                    break;
                } else if (p.is_ident(k) && (d == 0 || in_fp) && !kQualifiers.contains(w) &&
                           !kTypeKeywords.contains(w) && w != "struct" && w != "union" && w != "enum") {
                    name_tok = k;
                }
            }
            const std::size_t b = toks[part_start].begin;
            const std::size_t e = toks[i - 1].end;
            Param prm;
            if (p.text(part_start) == "..." && i == part_start + 1) {
                prm.name = "...";
                prm.type = "...";
            } else if (name_tok != npos && !(name_tok == part_start && i - part_start > 1 &&
                                             p.text(part_start + 1) != "[")) {
                prm.name = std::string(p.text(name_tok));
                std::string type(src.substr(b, toks[name_tok].begin - b));
                type += " ";
                type += src.substr(toks[name_tok].end, e - toks[name_tok].end);
                prm.type = collapse_ws(type);
            } else {
                prm.type = collapse_ws(src.substr(b, e - b));
            }
            params.push_back(std::move(prm));
            part_start = i + 1;
        }
    }
    return params;
}

std::string resolve_include(const std::string& directive)
{
    auto rest = trim(std::string_view(directive).substr(1));
    if (!rest.starts_with("include")) {
        return {};
    }
    rest = trim(rest.substr(7));
    if (rest.empty()) {
        return {};
    }
    const char open = rest.front();
    const char closing = open == '<' ? '>' : open == '"' ? '"' : '\0';
    if (closing == '\0') {
        return {};
    }
    const auto end = rest.find(closing, 1);
    if (end == std::string_view::npos) {
        return {};
    }
    return std::string(rest.substr(1, end - 1));
}

// "#define NAME" and "#define NAME(args)" with an empty replacement.
void harvest_empty_macro(const std::string& directive, StubHeaders& stubs)
{
    auto rest = trim(std::string_view(directive).substr(1));
    if (!rest.starts_with("define")) {
        return;
    }
    rest = trim(rest.substr(6));
    std::size_t i = 0;
    while (i < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[i])) || rest[i] == '_')) {
        ++i;
    }
    if (i == 0) {
        return;
    }
    const std::string name(rest.substr(0, i));
    if (i < rest.size() && rest[i] == '(') {
        const auto close = rest.find(')', i);
        if (close != std::string_view::npos && trim(rest.substr(close + 1)).empty()) {
            stubs.empty_function_macros.insert(name);
        }
        return;
    }
    if (trim(rest.substr(i)).empty()) {
        stubs.empty_macros.insert(name);
    }
}

void load_stub(const fs::path& stub_dir, const std::string& include, StubHeaders& stubs, std::set<fs::path>& seen)
{
    if (stub_dir.empty() || include.empty()) {
        return;
    }
    fs::path candidate = stub_dir / include;
    std::error_code ec;
    if (!fs::is_regular_file(candidate, ec)) {
        candidate = stub_dir / fs::path(include).filename();
        if (!fs::is_regular_file(candidate, ec)) {
            return;
        }
    }
    candidate = fs::weakly_canonical(candidate, ec);
    if (!seen.insert(candidate).second) {
        return;
    }
    const std::string content = read_text_file(candidate);
    const auto lexed = clex::lex(content);
    for (const auto& d : lexed.directives) {
        harvest_empty_macro(d.text, stubs);
        load_stub(stub_dir, resolve_include(d.text), stubs, seen);
    }
    DeclParser parser(content, lexed.tokens, stubs);
    parser.run();
    stubs.typedef_names = parser.typedefs();
}

std::vector<std::size_t> line_starts(std::string_view s)
{
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\n') {
            starts.push_back(i + 1);
        }
    }
    return starts;
}

std::size_t line_of(const std::vector<std::size_t>& starts, std::size_t byte)
{
    const auto it = std::upper_bound(starts.begin(), starts.end(), byte);
    return static_cast<std::size_t>(it - starts.begin());
}

std::optional<std::string> doc_comment_before(std::string_view src, const std::vector<clex::Comment>& comments,
                                              std::size_t start)
{
    auto gap_ok = [&](std::size_t from, std::size_t to) {
        int newlines = 0;
        for (std::size_t k = from; k < to; ++k) {
            if (classify(src[k]) != CharClass::space) {
                return false;
            }
            newlines += src[k] == '\n';
        }
        return newlines <= 1;
    };
    const auto it = std::partition_point(comments.begin(), comments.end(),
                                         [&](const clex::Comment& c) { return c.end <= start; });
    if (it == comments.begin()) {
        return std::nullopt;
    }
    auto last = std::prev(it);
    if (!gap_ok(last->end, start)) {
        return std::nullopt;
    }
    auto first = last;
    if (last->line_comment) {
        while (first != comments.begin()) {
            auto prev = std::prev(first);
            if (!prev->line_comment || !gap_ok(prev->end, first->begin)) {
                break;
            }
            first = prev;
        }
    }
    return std::string(src.substr(first->begin, last->end - first->begin));
}

}  // namespace

ExtractionResult extract_functions_detailed(const SourceFile& file, const fs::path& stub_headers)
{
    ExtractionResult result;
    const std::string_view src = file.content;
    if (trim(src).empty()) {
        return result;
    }
    const auto lexed = clex::lex(src);

    StubHeaders stubs;
    std::set<fs::path> seen;
    for (const auto& d : lexed.directives) {
        load_stub(stub_headers, resolve_include(d.text), stubs, seen);
    }

    DeclParser parser(src, lexed.tokens, stubs);
    auto outcome = parser.run();
    result.tier1_errors = outcome.error_regions.size();

    std::vector<FnDef> defs = std::move(outcome.functions);
    const auto starts = line_starts(src);
    for (std::size_t r = 0; r < outcome.error_regions.size(); ++r) {
        const auto [rs, re] = outcome.error_regions[r];
        auto recovered = brace_scan(parser, rs, re);
        if (recovered.empty()) {
            ResidueRegion res;
            res.start_line = line_of(starts, lexed.tokens[rs].begin);
            res.end_line = line_of(starts, lexed.tokens[re - 1].begin);
            res.reason = outcome.error_reasons[r];
            spdlog::debug("{}:{}-{}: unparsed residue ({})", file.path, res.start_line, res.end_line, res.reason);
            result.residue.push_back(std::move(res));
        }
        defs.insert(defs.end(), recovered.begin(), recovered.end());
    }
    std::sort(defs.begin(), defs.end(), [](const FnDef& a, const FnDef& b) { return a.first < b.first; });

    std::map<std::string, int> seen_names;
    for (const FnDef& d : defs) {
        CodeFunction fn;
        const auto& toks = lexed.tokens;
        fn.name = std::string(parser.text(d.name_tok));
        fn.file = file.path;
        fn.tier = d.tier;
        fn.span.start_byte = toks[d.first].begin;
        fn.span.end_byte = toks[d.brace_close].end;
        fn.span.start_line = line_of(starts, fn.span.start_byte);
        fn.span.end_line = line_of(starts, fn.span.end_byte - 1);
        fn.signature = collapse_ws(src.substr(fn.span.start_byte, toks[d.brace_open].begin - fn.span.start_byte));
        fn.params = split_params(src, toks, parser, d.params_open, d.params_close);
        fn.doc_comment = doc_comment_before(src, lexed.comments, fn.span.start_byte);
        fn.token_count = count_tokens(src.substr(fn.span.start_byte, fn.span.end_byte - fn.span.start_byte));
        const int dup = seen_names[fn.name]++;
        fn.id = file.path + "::" + fn.name;
        if (dup > 0) {
            fn.id += "@" + std::to_string(fn.span.start_line);
        }
        result.functions.push_back(std::move(fn));
    }
    return result;
}

std::vector<CodeFunction> extract_functions(const SourceFile& file, const fs::path& stub_headers)
{
    return extract_functions_detailed(file, stub_headers).functions;
}

CodebaseIndex build_codebase_index(std::string version, std::vector<SourceFile> files, const fs::path& stub_headers,
                                   unsigned max_workers)
{
    std::vector<std::vector<CodeFunction>> per_file(files.size());
    parallel_for(files.size(), max_workers,
                 [&](std::size_t i) { per_file[i] = extract_functions(files[i], stub_headers); });
    CodebaseIndex index;
    index.version = std::move(version);
    for (auto& fns : per_file) {
        for (auto& f : fns) {
            index.functions.push_back(std::move(f));
        }
    }
    for (auto& f : files) {
        f.version = index.version;
    }
    index.files = std::move(files);
    return index;
}

double round1(double x)
{
    return std::round(x * 10.0) / 10.0;
}

ExtractionStats extraction_rates(std::size_t tf, std::size_t tl, double sf, double sl)
{
    if (tf == 0) {
        throw error(errc::empty_index, "no functions in index (TF = 0)");
    }
    ExtractionStats s;
    s.total_functions = tf;
    s.total_lines = tl;
    s.selected_functions = sf;
    s.selected_lines = sl;
    s.function_rate = round1(100.0 * sf / static_cast<double>(tf));
    s.length_rate = tl == 0 ? 0.0 : round1(100.0 * sl / static_cast<double>(tl));
    return s;
}

ExtractionStats compute_extraction_stats(const CodebaseIndex& index,
                                         const std::map<int, std::vector<std::string>>& selected)
{
    double sf = 0;
    double sl = 0;
    for (const auto& [rfc, ids] : selected) {
        for (const auto& id : ids) {
            const CodeFunction* f = index.find(id);
            if (f == nullptr) {
                throw error(errc::precondition,
                            "selected function " + id + " for RFC " + std::to_string(rfc) + " not in index");
            }
            sf += 1;
            sl += static_cast<double>(f->line_count());
        }
    }
    const double n = selected.empty() ? 1.0 : static_cast<double>(selected.size());
    ExtractionStats s = extraction_rates(index.total_functions(), index.total_lines(), sf / n, sl / n);
    s.rfc_count = selected.size();
    return s;
}

json to_json(const CodeFunction& f)
{
    json params = json::array();
    for (const auto& p : f.params) {
        params.push_back({{"name", p.name}, {"type", p.type}});
    }
    return json{{"id", f.id},
                {"name", f.name},
                {"signature", f.signature},
                {"params", params},
                {"body_span",
                 {{"start_byte", f.span.start_byte},
                  {"end_byte", f.span.end_byte},
                  {"start_line", f.span.start_line},
                  {"end_line", f.span.end_line}}},
                {"doc_comment", f.doc_comment ? json(*f.doc_comment) : json(nullptr)},
                {"file", f.file},
                {"token_count", f.token_count},
                {"extraction_tier", std::string(to_string(f.tier))}};
}

CodeFunction function_from_json(const json& j)
{
    CodeFunction f;
    f.id = j.at("id").get<std::string>();
    f.name = j.at("name").get<std::string>();
    f.signature = j.value("signature", "");
    for (const auto& p : j.value("params", json::array())) {
        f.params.push_back({p.at("name").get<std::string>(), p.at("type").get<std::string>()});
    }
    const auto& s = j.at("body_span");
    f.span = {s.at("start_byte").get<std::size_t>(), s.at("end_byte").get<std::size_t>(),
              s.at("start_line").get<std::size_t>(), s.at("end_line").get<std::size_t>()};
    if (j.contains("doc_comment") && j["doc_comment"].is_string()) {
        f.doc_comment = j["doc_comment"].get<std::string>();
    }
    f.file = j.at("file").get<std::string>();
    f.token_count = j.value("token_count", std::size_t{0});
    f.tier = j.value("extraction_tier", "syntax-tree") == "brace-fallback" ? ExtractionTier::brace_fallback
                                                                            : ExtractionTier::syntax_tree;
    return f;
}

json index_summary_json(const CodebaseIndex& index)
{
    json files = json::array();
    for (const auto& f : index.files) {
        files.push_back({{"path", f.path}, {"line_count", f.line_count}, {"token_count", f.token_count}});
    }
    std::size_t fallback = 0;
    for (const auto& f : index.functions) {
        fallback += f.tier == ExtractionTier::brace_fallback;
    }
    return json{{"version", index.version},
                {"total_functions", index.total_functions()},
                {"total_lines", index.total_lines()},
                {"brace_fallback_functions", fallback},
                {"files", files}};
}

void write_code_artifacts(const CodebaseIndex& index, const fs::path& dir)
{
    std::vector<json> fn_rows;
    for (const auto& f : index.functions) {
        fn_rows.push_back(to_json(f));
    }
    std::vector<json> file_rows;
    for (const auto& f : index.files) {
        file_rows.push_back({{"path", f.path}, {"content", f.content}});
    }
    write_jsonl_file(dir / "functions.jsonl", fn_rows);
    write_jsonl_file(dir / "files.jsonl", file_rows);
    write_json_file(dir / "index.json", index_summary_json(index));
}

CodebaseIndex read_code_artifacts(const fs::path& dir)
{
    CodebaseIndex index;
    const json summary = read_json_file(dir / "index.json");
    index.version = summary.at("version").get<std::string>();
    for (const auto& row : read_jsonl_file(dir / "files.jsonl")) {
        index.files.push_back(
            SourceFile::make(row.at("path").get<std::string>(), index.version, row.at("content").get<std::string>()));
    }
    for (const auto& row : read_jsonl_file(dir / "functions.jsonl")) {
        index.functions.push_back(function_from_json(row));
    }
    return index;
}

}  // namespace deltaspec
