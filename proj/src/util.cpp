#include "deltaspec/util.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "deltaspec/error.hpp"

namespace deltaspec {

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw error(errc::precondition, "sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string stable_id(std::initializer_list<std::string_view> parts)
{
    std::string joined;
    bool first = true;
    for (std::string_view p : parts) {
        if (!first) {
            joined.push_back('\x1f');
        }
        joined.append(p);
        first = false;
    }
    return sha256_hex(joined).substr(0, 16);
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(errc::io_error, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw error(errc::io_error, "cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw error(errc::io_error, "short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path)
{
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw error(errc::serialization_error, path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& value)
{
    write_text_file(path, value.dump(2) + "\n");
}

std::vector<json> read_jsonl_file(const std::filesystem::path& path)
{
    std::vector<json> rows;
    std::size_t lineno = 0;
    for (const std::string& line : split_lines(read_text_file(path))) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw error(errc::serialization_error,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& rows)
{
    std::string out;
    for (const json& row : rows) {
        out += row.dump();
        out.push_back('\n');
    }
    write_text_file(path, out);
}

namespace {

std::vector<std::string_view> split_dots(std::string_view s)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t dot = s.find('.', start);
        if (dot == std::string_view::npos) {
            dot = s.size();
        }
        if (dot > start) {
            parts.push_back(s.substr(start, dot - start));
        }
        start = dot + 1;
    }
    return parts;
}

bool all_digits(std::string_view s)
{
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    return true;
}

}  // namespace

bool dotted_less(std::string_view a, std::string_view b)
{
    const auto pa = split_dots(a);
    const auto pb = split_dots(b);
    for (std::size_t i = 0; i < pa.size() && i < pb.size(); ++i) {
        const bool da = all_digits(pa[i]);
        const bool db = all_digits(pb[i]);
        if (da && db) {
            const auto na = std::stoull(std::string(pa[i]));
            const auto nb = std::stoull(std::string(pb[i]));
            if (na != nb) {
                return na < nb;
            }
        } else if (da != db) {
            return da;
        } else if (pa[i] != pb[i]) {
            return pa[i] < pb[i];
        }
    }
    return pa.size() < pb.size();
}

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace deltaspec
