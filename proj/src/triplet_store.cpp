#include "deltaspec/triplet_store.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "deltaspec/error.hpp"
#include "deltaspec/tokenizer.hpp"

namespace deltaspec {

std::string_view to_string(TripletLabel l) noexcept
{
    return l == TripletLabel::consistent ? "consistent" : "inconsistent";
}

std::string_view to_string(TripletSource s) noexcept
{
    return s == TripletSource::description_corpus ? "description-corpus" : "vuln-patch-corpus";
}

json to_json(const DifferentialTriplet& t)
{
    return json{{"id", t.id},
                {"spec_text", t.spec_text},
                {"intermediate_repr", t.intermediate_repr},
                {"code", t.code},
                {"label", std::string(to_string(t.label))},
                {"source", std::string(to_string(t.source))},
                {"complexity", t.complexity}};
}

DifferentialTriplet triplet_from_json(const json& j)
{
    DifferentialTriplet t;
    t.id = j.at("id").get<std::string>();
    t.spec_text = j.at("spec_text").get<std::string>();
    t.intermediate_repr = j.at("intermediate_repr").get<std::string>();
    t.code = j.at("code").get<std::string>();
    t.label = j.at("label").get<std::string>() == "consistent" ? TripletLabel::consistent : TripletLabel::inconsistent;
    t.source = j.at("source").get<std::string>() == "description-corpus" ? TripletSource::description_corpus
                                                                         : TripletSource::vuln_patch_corpus;
    t.complexity = count_tokens(t.code);
    if (j.contains("complexity") && j["complexity"].get<std::size_t>() != t.complexity) {
        throw error(errc::invalid_record, "triplet " + t.id + " complexity does not match its code");
    }
    return t;
}

std::vector<DescriptionRecord> read_description_records(const std::filesystem::path& jsonl)
{
    std::vector<DescriptionRecord> out;
    for (const auto& row : read_jsonl_file(jsonl)) {
        out.push_back({row.at("id").get<std::string>(), row.at("description").get<std::string>(),
                       row.at("solution").get<std::string>()});
    }
    return out;
}

std::vector<PatchRecord> read_patch_records(const std::filesystem::path& jsonl)
{
    std::vector<PatchRecord> out;
    for (const auto& row : read_jsonl_file(jsonl)) {
        out.push_back({row.at("id").get<std::string>(), row.at("summary").get<std::string>(),
                       row.at("before").get<std::string>(), row.at("after").get<std::string>()});
    }
    return out;
}

namespace {

std::string plain_call(LlmGateway& gw, const std::string& system, const std::string& user)
{
    const auto resp = gw.complete(gw.make_request(phase::synthesis, {{"system", system}, {"user", user}}));
    const auto text = trim(resp.text);
    if (text.empty()) {
        throw error(errc::empty_response, "blank intermediate representation");
    }
    return std::string(text);
}

}  // namespace

DifferentialTriplet synth_positive(const DescriptionRecord& rec, LlmGateway& gw)
{
    if (trim(rec.description).empty() || trim(rec.solution).empty()) {
        throw error(errc::precondition, "description record " + rec.id + " has an empty field");
    }
    DifferentialTriplet t;
    t.spec_text = rec.description;
    t.intermediate_repr = plain_call(
        gw,
        "Rewrite the task description as an imperative description of what the code must do, step by step.",
        "Description:\n" + rec.description + "\n\nCode:\n" + rec.solution);
    t.code = rec.solution;
    t.label = TripletLabel::consistent;
    t.source = TripletSource::description_corpus;
    t.complexity = count_tokens(t.code);
    t.id = stable_id({to_string(t.source), rec.id, to_string(t.label)});
    return t;
}

std::vector<DifferentialTriplet> synth_negative(const PatchRecord& rec, LlmGateway& gw, bool paired)
{
    if (trim(rec.summary).empty() || trim(rec.before).empty() || trim(rec.after).empty()) {
        throw error(errc::precondition, "patch record " + rec.id + " has an empty field");
    }
    if (rec.before == rec.after) {
        throw error(errc::invalid_record, "patch record " + rec.id + " has no behavioral delta");
    }
    const std::string ir = plain_call(
        gw,
        "Describe, as imperative steps, the behavior the patched code must have. The diff shows what the "
        "vulnerable version got wrong.",
        "Summary:\n" + rec.summary + "\n\nDiff:\n" + line_diff(rec.before, rec.after));
    std::vector<DifferentialTriplet> out;
    auto make = [&](const std::string& code, TripletLabel label) {
        DifferentialTriplet t;
        t.spec_text = rec.summary;
        t.intermediate_repr = ir;
        t.code = code;
        t.label = label;
        t.source = TripletSource::vuln_patch_corpus;
        t.complexity = count_tokens(code);
        t.id = stable_id({to_string(t.source), rec.id, to_string(label)});
        out.push_back(std::move(t));
    };
    make(rec.before, TripletLabel::inconsistent);
    if (paired) {
        make(rec.after, TripletLabel::consistent);
    }
    return out;
}

std::string line_diff(std::string_view before, std::string_view after)
{
    const auto a = split_lines(before);
    const auto b = split_lines(after);
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
        }
    }
    std::string out;
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j]) {
            out += " " + a[i++] + "\n";
            ++j;
        } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
            out += "-" + a[i++] + "\n";
        } else {
            out += "+" + b[j++] + "\n";
        }
    }
    return out;
}

CorpusStats CorpusStats::build(const std::vector<std::vector<std::string>>& docs)
{
    CorpusStats s;
    s.documents = docs.size();
    std::size_t total = 0;
    for (const auto& d : docs) {
        total += d.size();
        for (const auto& t : std::set<std::string>(d.begin(), d.end())) {
            ++s.document_frequency[t];
        }
    }
    s.average_length = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
    return s;
}

double bm25_score(const std::vector<std::string>& query, const std::vector<std::string>& doc, const CorpusStats& stats,
                  double k1, double b)
{
    std::map<std::string, std::size_t> tf;
    for (const auto& t : doc) {
        ++tf[t];
    }
    const double n = static_cast<double>(stats.documents);
    const double len_ratio =
        stats.average_length > 0 ? static_cast<double>(doc.size()) / stats.average_length : 1.0;
    double score = 0;
    for (const auto& q : query) {
        const auto f = tf.find(q);
        if (f == tf.end()) {
            continue;
        }
        const auto dfi = stats.document_frequency.find(q);
        const double df = dfi == stats.document_frequency.end() ? 0.0 : static_cast<double>(dfi->second);
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        const double freq = static_cast<double>(f->second);
        score += idf * freq * (k1 + 1.0) / (freq + k1 * (1.0 - b + b * len_ratio));
    }
    return score;
}

void RetrievalConfig::validate() const
{
    if (k == 0) {
        throw error(errc::invalid_config, "retrieval k must be positive");
    }
    if (!(fusion_alpha >= 0.0 && fusion_alpha <= 1.0)) {
        throw error(errc::invalid_config, "fusion_alpha must lie in [0, 1]");
    }
    if (k1 < 0 || b < 0 || b > 1) {
        throw error(errc::invalid_config, "bm25 parameters out of range");
    }
}

std::string retrieval_text(std::string_view spec_text, std::string_view code)
{
    std::string s(spec_text);
    s += "\n";
    s += code;
    return s;
}

void TripletStore::add(DifferentialTriplet t)
{
    if (trim(t.spec_text).empty() || trim(t.intermediate_repr).empty() || trim(t.code).empty()) {
        throw error(errc::invalid_record, "triplet " + t.id + " has an empty text");
    }
    t.complexity = count_tokens(t.code);
    terms_.push_back(lexical_terms(retrieval_text(t.spec_text, t.code)));
    triplets_.push_back(std::move(t));
    stats_ = CorpusStats::build(terms_);
}

const std::vector<double>& TripletStore::embedding(std::size_t i, LlmGateway& gw) const
{
    {
        std::lock_guard lock(*embed_mu_);
        const auto it = embeddings_.find(i);
        if (it != embeddings_.end()) {
            return it->second;
        }
    }
    auto v = gw.embed(retrieval_text(triplets_[i].spec_text, triplets_[i].code));
    std::lock_guard lock(*embed_mu_);
    return embeddings_.try_emplace(i, std::move(v)).first->second;
}

void TripletStore::save(const std::filesystem::path& jsonl) const
{
    std::vector<json> rows;
    for (const auto& t : triplets_) {
        rows.push_back(to_json(t));
    }
    write_jsonl_file(jsonl, rows);
}

TripletStore TripletStore::load(const std::filesystem::path& jsonl)
{
    TripletStore s;
    for (const auto& row : read_jsonl_file(jsonl)) {
        s.add(triplet_from_json(row));
    }
    return s;
}

std::vector<ScoredTriplet> score_store(std::string_view spec_text, std::string_view code, const TripletStore& store,
                                       const RetrievalConfig& cfg, LlmGateway& gw)
{
    cfg.validate();
    const std::string qtext = retrieval_text(spec_text, code);
    const auto query = lexical_terms(qtext);
    std::vector<ScoredTriplet> scored(store.size());
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < store.size(); ++i) {
        scored[i].index = i;
        scored[i].bm25 = bm25_score(query, store.terms(i), store.stats(), cfg.k1, cfg.b);
        lo = i == 0 ? scored[i].bm25 : std::min(lo, scored[i].bm25);
        hi = i == 0 ? scored[i].bm25 : std::max(hi, scored[i].bm25);
    }
    std::vector<double> qvec;
    if (cfg.fusion_alpha > 0) {
        qvec = gw.embed(qtext);
    }
    for (auto& s : scored) {
        s.bm25_normalized = hi > lo ? (s.bm25 - lo) / (hi - lo) : 0.0;
        s.cosine = cfg.fusion_alpha > 0 ? cosine(qvec, store.embedding(s.index, gw)) : 0.0;
        s.fused = cfg.fusion_alpha * s.cosine + (1.0 - cfg.fusion_alpha) * s.bm25_normalized;
    }
    return scored;
}

std::vector<DifferentialTriplet> retrieve_exemplars(std::string_view spec_text, std::string_view code,
                                                    const TripletStore& store, const RetrievalConfig& cfg,
                                                    LlmGateway& gw)
{
    if (store.empty()) {
        throw error(errc::empty_store, "triplet store is empty");
    }
    const auto scored = score_store(spec_text, code, store, cfg, gw);
    const auto& ts = store.triplets();
    auto by_score = [&](const ScoredTriplet& a, const ScoredTriplet& b) {
        if (a.fused != b.fused) {
            return a.fused > b.fused;
        }
        return ts[a.index].id < ts[b.index].id;
    };
    std::vector<ScoredTriplet> picked;
    for (TripletLabel label : {TripletLabel::consistent, TripletLabel::inconsistent}) {
        std::vector<ScoredTriplet> pool;
        for (const auto& s : scored) {
            if (ts[s.index].label == label) {
                pool.push_back(s);
            }
        }
        std::sort(pool.begin(), pool.end(), by_score);
        if (pool.size() > cfg.k) {
            pool.resize(cfg.k);
        }
        picked.insert(picked.end(), pool.begin(), pool.end());
    }
    std::sort(picked.begin(), picked.end(), [&](const ScoredTriplet& a, const ScoredTriplet& b) {
        if (ts[a.index].complexity != ts[b.index].complexity) {
            return ts[a.index].complexity < ts[b.index].complexity;
        }
        return by_score(a, b);
    });
    std::vector<DifferentialTriplet> out;
    for (const auto& s : picked) {
        out.push_back(ts[s.index]);
    }
    return out;
}

}  // namespace deltaspec
