#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deltaspec/chunk_mapper.hpp"
#include "deltaspec/code_ingest.hpp"
#include "deltaspec/diff_verifier.hpp"
#include "deltaspec/llm_gateway.hpp"
#include "deltaspec/report.hpp"
#include "deltaspec/rfc_ingest.hpp"
#include "deltaspec/spec_evolution.hpp"

namespace deltaspec {

struct CodebaseConfig {
    std::string tag;
    std::filesystem::path root;
    std::filesystem::path stubs;
};

struct PipelineConfig {
    std::filesystem::path workspace;
    std::filesystem::path rfc_manifest;
    std::vector<CodebaseConfig> codebases;
    SourceFilter source_filter = SourceFilter::defaults();
    FigureConfig figures;
    ChunkConfig chunk;
    DiffConfig diff;
    VerifierConfig verifier;
    GatewayConfig gateway;
    std::string provider_mode = "live";  // live | mock
    std::filesystem::path transcript;
    std::string embedder = "hash";  // hash | http
    std::string embedding_model = "text-embedding-3-small";
    std::size_t embedding_dim = 256;
    std::map<std::string, Price> prices;
    std::filesystem::path descriptions;
    std::filesystem::path patches;
    bool paired_negatives = false;
    std::filesystem::path ground_truth;
    unsigned workers = 4;

    /// Relative paths resolve against `base`. Throws InvalidConfig.
    static PipelineConfig from_json(const json& j, const std::filesystem::path& base);
    static PipelineConfig load(const std::filesystem::path& file);
};

/// Stage orchestration over a workspace directory. Every stage reads its
/// inputs from the workspace (MissingArtifact when absent) and writes its
/// outputs there; the gateway cache lives in <workspace>/cache.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, bool force_mock = false);

    void ingest_rfc();
    void ingest_code(const std::string& tag = "");
    void build_graph(const std::string& tag = "");
    void build_chains();
    void synth_triplets();
    VerdictMatrix verify(const std::string& tag = "");
    Metrics eval();
    RenderedReport report();
    /// Unset inputs are estimated from workspace artifacts.
    CostEstimate cost_model(const std::optional<CostModelInputs>& inputs, const std::string& tag = "");
    void run_all(const std::string& tag = "");

    LlmGateway& gateway() noexcept { return *gw_; }
    const PipelineConfig& config() const noexcept { return cfg_; }
    std::filesystem::path path(const std::string& rel) const { return cfg_.workspace / rel; }

    /// Workspace-relative artifact paths with descriptions; "<tag>" stands
    /// for each codebase.
    static const std::vector<ManifestItem>& artifact_manifest();

private:
    std::vector<CodebaseConfig> selected(const std::string& tag) const;
    std::filesystem::path require(const std::string& rel, const std::string& producer) const;
    template <typename Fn>
    auto stage(const std::string& name, Fn&& fn);
    void persist_ledger() const;

    PipelineConfig cfg_;
    std::shared_ptr<LlmGateway> gw_;
};

}  // namespace deltaspec
