#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deltaspec/code_ingest.hpp"
#include "deltaspec/diff_verifier.hpp"

namespace deltaspec {

struct Metrics {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    bool precision_degenerate = false;  // TP + FP = 0
    bool recall_degenerate = false;     // TP + FN = 0
    std::size_t total = 0;

    json to_json() const;
};

/// Throws EmptyEval when every count is zero.
Metrics compute_metrics(const Confusion& c);

struct CostModelInputs {
    long long n = 0;          // RFC count
    long long len_rfc = 0;    // average RFC length, tokens
    long long m = 0;          // codebase size, tokens
    long long delta_len = 0;  // incremental RFC update size, tokens
    long long delta_m = 0;    // affected code size, tokens

    void validate() const;  // InvalidInputs
    json to_json() const;
};

struct CostEstimate {
    long long naive = 0;
    long long reasoning = 0;
    long long graph = 0;
    long long total = 0;
    long long delta = 0;

    json to_json() const;
};

/// Naive = N(Len + M), Reasoning = N(dLen + dM), Graph = N Len + M,
/// Total = Reasoning + Graph, Delta = Naive - Total.
CostEstimate cost_model(const CostModelInputs& in);

struct ManifestItem {
    std::string path;  // workspace-relative
    std::string description;
};

struct ReportInputs {
    VerdictMatrix matrix;
    FindingsReport findings;
    std::map<std::string, ExtractionStats> extraction;  // by code version
    json ledger = json::object();                       // CostLedger::to_json()
    std::optional<Metrics> metrics;
    std::string model;
    std::optional<double> wall_seconds;
    std::vector<ManifestItem> manifest;
};

struct RenderedReport {
    std::string markdown;
    json machine;
};

json report_schema();

/// Throws SerializationError when the machine-readable form fails the schema.
RenderedReport render_report(const ReportInputs& in);

std::string percent1(double fraction);  // "91.1"

}  // namespace deltaspec
