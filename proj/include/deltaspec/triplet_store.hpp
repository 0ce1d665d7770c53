#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "deltaspec/llm_gateway.hpp"

namespace deltaspec {

enum class TripletLabel { consistent, inconsistent };
enum class TripletSource { description_corpus, vuln_patch_corpus };

std::string_view to_string(TripletLabel l) noexcept;
std::string_view to_string(TripletSource s) noexcept;

struct DifferentialTriplet {
    std::string id;
    std::string spec_text;
    std::string intermediate_repr;
    std::string code;
    TripletLabel label = TripletLabel::consistent;
    TripletSource source = TripletSource::description_corpus;
    std::size_t complexity = 0;  // count_tokens(code)
};

json to_json(const DifferentialTriplet& t);
DifferentialTriplet triplet_from_json(const json& j);

struct DescriptionRecord {
    std::string id;
    std::string description;
    std::string solution;
};

struct PatchRecord {
    std::string id;
    std::string summary;
    std::string before;
    std::string after;
};

std::vector<DescriptionRecord> read_description_records(const std::filesystem::path& jsonl);
std::vector<PatchRecord> read_patch_records(const std::filesystem::path& jsonl);

/// Throws PreconditionViolation on empty fields, EmptyResponse on a blank IR.
DifferentialTriplet synth_positive(const DescriptionRecord& rec, LlmGateway& gw);

/// (summary, IR, before, inconsistent), plus (summary, IR, after, consistent)
/// when `paired`. Throws InvalidRecord when before == after.
std::vector<DifferentialTriplet> synth_negative(const PatchRecord& rec, LlmGateway& gw, bool paired = false);

/// Line diff ("-"/"+"/" " prefixes) from a longest common subsequence.
std::string line_diff(std::string_view before, std::string_view after);

struct CorpusStats {
    std::size_t documents = 0;
    double average_length = 0;
    std::map<std::string, std::size_t> document_frequency;

    static CorpusStats build(const std::vector<std::vector<std::string>>& docs);
};

/// Okapi BM25 with idf = ln((N - df + 0.5) / (df + 0.5) + 1), summed over the
/// query tokens as given.
double bm25_score(const std::vector<std::string>& query, const std::vector<std::string>& doc, const CorpusStats& stats,
                  double k1 = 1.2, double b = 0.75);

struct RetrievalConfig {
    std::size_t k = 5;
    double fusion_alpha = 0.5;
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;  // InvalidConfig
};

/// Text a triplet is indexed under, and a query is scored with.
std::string retrieval_text(std::string_view spec_text, std::string_view code);

/// Append-only during synthesis; read-only (and thread-safe) during retrieval.
class TripletStore {
public:
    void add(DifferentialTriplet t);
    const std::vector<DifferentialTriplet>& triplets() const noexcept { return triplets_; }
    std::size_t size() const noexcept { return triplets_.size(); }
    bool empty() const noexcept { return triplets_.empty(); }

    const std::vector<std::string>& terms(std::size_t i) const { return terms_[i]; }
    const CorpusStats& stats() const noexcept { return stats_; }
    /// Embeddings are computed once per triplet on first use.
    const std::vector<double>& embedding(std::size_t i, LlmGateway& gw) const;

    void save(const std::filesystem::path& jsonl) const;
    static TripletStore load(const std::filesystem::path& jsonl);

private:
    std::vector<DifferentialTriplet> triplets_;
    std::vector<std::vector<std::string>> terms_;
    CorpusStats stats_;
    std::unique_ptr<std::mutex> embed_mu_ = std::make_unique<std::mutex>();
    mutable std::map<std::size_t, std::vector<double>> embeddings_;
};

struct ScoredTriplet {
    std::size_t index = 0;
    double bm25 = 0;
    double bm25_normalized = 0;
    double cosine = 0;
    double fused = 0;
};

/// Fused scores for every triplet: alpha * cosine + (1 - alpha) * min-max
/// normalized BM25 (all zero when every BM25 score is equal).
std::vector<ScoredTriplet> score_store(std::string_view spec_text, std::string_view code, const TripletStore& store,
                                       const RetrievalConfig& cfg, LlmGateway& gw);

/// Top k of each label pool by fused score (ties by id), then the union in
/// ascending complexity (ties by fused score, then id). Throws EmptyStore.
std::vector<DifferentialTriplet> retrieve_exemplars(std::string_view spec_text, std::string_view code,
                                                    const TripletStore& store, const RetrievalConfig& cfg,
                                                    LlmGateway& gw);

}  // namespace deltaspec
