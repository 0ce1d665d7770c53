#pragma once

// Independent reference implementations used to check the library. None of
// these call into the library; they restate each rule from its definition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Okapi BM25 evaluated term by term from raw counts.
inline double bm25(const std::vector<std::string>& query, std::size_t doc_index,
                   const std::vector<std::vector<std::string>>& corpus, double k1 = 1.2, double b = 0.75)
{
    const double n = static_cast<double>(corpus.size());
    double total_len = 0;
    for (const auto& d : corpus) {
        total_len += static_cast<double>(d.size());
    }
    const double avgdl = total_len / n;
    const auto& doc = corpus[doc_index];
    double score = 0;
    for (const auto& q : query) {
        double f = 0;
        for (const auto& t : doc) {
            f += t == q ? 1 : 0;
        }
        if (f == 0) {
            continue;
        }
        double df = 0;
        for (const auto& d : corpus) {
            df += std::find(d.begin(), d.end(), q) != d.end() ? 1 : 0;
        }
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double dl = static_cast<double>(doc.size());
        score += idf * (f * (k1 + 1)) / (f + k1 * (1 - b + b * dl / avgdl));
    }
    return score;
}

enum class Vote { yes, no, unsure };

// Strict majority by direct counting: a value wins only with more than half.
inline Vote majority(const std::vector<Vote>& votes)
{
    for (Vote v : {Vote::yes, Vote::no}) {
        std::size_t c = 0;
        for (Vote x : votes) {
            c += x == v;
        }
        if (2 * c > votes.size()) {
            return v;
        }
    }
    return Vote::unsure;
}

struct ConfusionTuple {
    int tp, fp, fn, tn;
    bool operator==(const ConfusionTuple&) const = default;
};

// Every nonnegative confusion on `points` whose rounded metrics match the
// reported ones within the given tolerances.
inline std::vector<ConfusionTuple> confusions_matching(int points, double acc_pct, double prec_pct, double rec_pct,
                                                       double f1, double pct_tol, double f1_tol)
{
    std::vector<ConfusionTuple> out;
    for (int tp = 0; tp <= points; ++tp) {
        for (int fp = 0; tp + fp <= points; ++fp) {
            for (int fn = 0; tp + fp + fn <= points; ++fn) {
                const int tn = points - tp - fp - fn;
                if (tp + fp == 0 || tp + fn == 0) {
                    continue;
                }
                const double a = 100.0 * (tp + tn) / points;
                const double p = 100.0 * tp / (tp + fp);
                const double r = 100.0 * tp / (tp + fn);
                const double f = (p + r) > 0 ? 2 * (p / 100) * (r / 100) / ((p + r) / 100) : 0;
                if (std::abs(a - acc_pct) <= pct_tol && std::abs(p - prec_pct) <= pct_tol &&
                    std::abs(r - rec_pct) <= pct_tol && std::abs(f - f1) <= f1_tol) {
                    out.push_back({tp, fp, fn, tn});
                }
            }
        }
    }
    return out;
}

// Newman modularity of a partition of an undirected weighted graph given as
// a symmetric adjacency matrix.
inline double modularity(const std::vector<std::vector<double>>& adj, const std::vector<int>& part)
{
    const std::size_t n = adj.size();
    std::vector<double> deg(n, 0);
    double two_m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            deg[i] += adj[i][j];
        }
        two_m += deg[i];
    }
    double q = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (part[i] == part[j]) {
                q += adj[i][j] - deg[i] * deg[j] / two_m;
            }
        }
    }
    return q / two_m;
}

// Exhaustive search over all set partitions (restricted growth strings);
// returns the best partition in canonical form.
inline std::vector<int> best_modularity_partition(const std::vector<std::vector<double>>& adj)
{
    const std::size_t n = adj.size();
    std::vector<int> rgs(n, 0), best;
    double best_q = -1e9;
    auto rec = [&](auto&& self, std::size_t i, int max_label) -> void {
        if (i == n) {
            const double q = modularity(adj, rgs);
            if (q > best_q + 1e-12) {
                best_q = q;
                best = rgs;
            }
            return;
        }
        for (int l = 0; l <= max_label + 1; ++l) {
            rgs[i] = l;
            self(self, i + 1, std::max(max_label, l));
        }
    };
    rgs[0] = 0;
    rec(rec, 1, 0);
    return best;
}

// Both sides of the savings identity, evaluated independently.
inline long long savings_closed_form(long long n, long long m, long long dlen, long long dm)
{
    return (n - 1) * m - n * (dlen + dm);
}

inline long long savings_by_difference(long long n, long long len, long long m, long long dlen, long long dm)
{
    const long long naive = n * len + n * m;
    const long long total = n * dlen + n * dm + n * len + m;
    return naive - total;
}

struct HeaderFields {
    int number = 0;
    std::vector<int> updates;
    std::vector<int> obsoletes;
    std::string category;
    std::string published;  // YYYY-MM
    std::string title;
};

inline std::vector<int> numbers_in(const std::string& s)
{
    std::vector<int> out;
    static const std::regex num(R"(\d+)");
    for (auto it = std::sregex_iterator(s.begin(), s.end(), num); it != std::sregex_iterator(); ++it) {
        out.push_back(std::stoi(it->str()));
    }
    return out;
}

// Header grammar: a left column of "Key: value" fields separated from the
// right column by a run of two or more spaces, ending at the first blank
// line; the title is the first non-blank line after it.
inline HeaderFields parse_header(const std::string& raw)
{
    static const std::regex field(R"(^(Request for Comments|Updates|Obsoletes|Category):\s*(.*?)(\s{2,}.*)?$)");
    static const std::regex date(
        R"((January|February|March|April|May|June|July|August|September|October|November|December)\s+(\d{4})\s*$)");
    static const std::vector<std::string> months = {"January", "February", "March",     "April",   "May",      "June",
                                                    "July",    "August",   "September", "October", "November", "December"};
    HeaderFields h;
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const auto nl = raw.find('\n', pos);
        lines.push_back(raw.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
        if (nl == std::string::npos) {
            break;
        }
        pos = nl + 1;
    }
    std::size_t i = 0;
    for (; i < lines.size() && lines[i].find_first_not_of(' ') != std::string::npos; ++i) {
        std::smatch m;
        if (std::regex_match(lines[i], m, field)) {
            const std::string key = m[1];
            const std::string value = m[2];
            if (key == "Request for Comments") {
                h.number = std::stoi(value);
            } else if (key == "Updates") {
                h.updates = numbers_in(value);
            } else if (key == "Obsoletes") {
                h.obsoletes = numbers_in(value);
            } else {
                h.category = value;
            }
        }
        if (std::regex_search(lines[i], m, date)) {
            const int month = static_cast<int>(std::find(months.begin(), months.end(), m[1].str()) - months.begin()) + 1;
            char buf[16];
            std::snprintf(buf, sizeof buf, "%s-%02d", m[2].str().c_str(), month);
            h.published = buf;
        }
    }
    for (; i < lines.size(); ++i) {
        const auto b = lines[i].find_first_not_of(' ');
        if (b != std::string::npos) {
            const auto e = lines[i].find_last_not_of(' ');
            h.title = lines[i].substr(b, e - b + 1);
            break;
        }
    }
    return h;
}

}  // namespace oracle
