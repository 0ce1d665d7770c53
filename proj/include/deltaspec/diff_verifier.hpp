#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deltaspec/error.hpp"
#include "deltaspec/knowledge_graph.hpp"
#include "deltaspec/llm_gateway.hpp"
#include "deltaspec/spec_evolution.hpp"
#include "deltaspec/triplet_store.hpp"

namespace deltaspec {

enum class VerdictValue { implemented, not_implemented, unknown };

std::string_view to_string(VerdictValue v) noexcept;
VerdictValue verdict_from_string(std::string_view s);
/// "True" / "False" / "Unknown", as in the verdict matrix.
std::string_view matrix_label(VerdictValue v) noexcept;

/// implemented or not-implemented when it holds more than half of the votes,
/// else unknown. Empty input is unknown.
VerdictValue majority(const std::vector<VerdictValue>& votes);

struct Trial {
    VerdictValue value = VerdictValue::unknown;
    std::string ir;
    std::string rationale;
    std::vector<std::string> cited;  // subset of the task candidates
};

struct Verdict {
    VerdictValue value = VerdictValue::unknown;
    std::vector<Trial> trials;
    std::map<std::string, int> vote_counts;  // by to_string(value)
    std::string mode = "increment";          // increment | whole-rfc | inherited
    int predecessor = 0;                     // RFC the verdict is relative to / inherited from
    std::vector<std::string> candidates;
    bool truncated = false;
    bool zero_shot = false;

    json to_json() const;
    static Verdict from_json(const json& j);
};

/// Thrown when a gateway failure aborts a task; carries the trials finished.
class verification_aborted : public error {
public:
    verification_aborted(const std::string& what, Verdict partial)
        : error(errc::gateway_error, what), partial_(std::move(partial))
    {}
    const Verdict& partial() const noexcept { return partial_; }

private:
    Verdict partial_;
};

struct VerifierConfig {
    unsigned trials = 5;
    std::size_t candidate_budget = 20;
    std::size_t code_token_budget = 6000;
    RetrievalConfig retrieval;
    double community_damping = 0.5;
    std::map<int, std::string> vulnerability_classes;  // RFC -> class label

    void validate() const;  // trials odd and positive
};

struct VerificationTask {
    int rfc_from = 0;  // 0 in whole-RFC mode
    int rfc_to = 0;
    std::vector<FunctionalEntry> targets;
    std::string code_version;
    std::vector<RetrievalHit> candidates;  // ranked, at most the budget
    bool whole_rfc = false;
};

/// Candidate functions rendered for the prompt, highest weight first.
struct CodeContext {
    std::vector<std::pair<std::string, std::string>> functions;  // (id, text)
    bool truncated = false;

    std::string render() const;
};

using CodeLookup = std::function<std::string(const std::string& function_id)>;

/// Keeps candidates in rank order until the token budget is spent.
CodeContext build_code_context(const std::vector<RetrievalHit>& candidates, const CodeLookup& code,
                               std::size_t token_budget);

std::string describe_targets(const std::vector<FunctionalEntry>& targets);

json verdict_contract_schema();

/// One call with the exemplars as few-shot context. Throws EmptyResponse on
/// a blank reply. `zero_shot` is set when no exemplars were given.
std::string generate_intermediate_repr(const std::vector<FunctionalEntry>& targets, const CodeContext& code,
                                       const std::vector<DifferentialTriplet>& exemplars, LlmGateway& gw,
                                       unsigned trial = 0, bool* zero_shot = nullptr);

/// Runs the configured number of trials (IR generation then judgment) and
/// takes the strict-majority vote. Throws verification_aborted on gateway
/// failure.
Verdict verify_increment(const VerificationTask& task, const CodeContext& code, const TripletStore& store,
                         LlmGateway& gw, const VerifierConfig& cfg);

struct VerdictMatrix {
    std::vector<int> rfcs;             // rows
    std::vector<std::string> versions;  // columns
    std::map<std::pair<int, std::string>, Verdict> cells;

    const Verdict* cell(int rfc, const std::string& version) const;
    json to_json() const;
    static VerdictMatrix from_json(const json& j);
};

/// Verdicts for every RFC of the chain graph against one code version. Roots
/// are verified whole; other RFCs on the targets of their incoming
/// increments. An RFC with no targets inherits its predecessor's verdict.
std::map<int, Verdict> verify_chain(const UpdateChainGraph& chain, const std::vector<Increment>& increments,
                                    const std::map<int, std::vector<FunctionalEntry>>& entries,
                                    const std::string& version, const KnowledgeGraph& graph, const CodeLookup& code,
                                    const TripletStore& store, LlmGateway& gw, const VerifierConfig& cfg);

struct Finding {
    std::string system;
    int rfc = 0;
    std::string description;
    std::string vulnerability_class;
    std::vector<std::string> evidence;
    bool unknown_verdict = false;
    std::string mismatch;  // "", "false-positive" or "false-negative"

    json to_json() const;
    static Finding from_json(const json& j);
};

/// Ground truth: true when the cell is inconsistent (the RFC is not
/// implemented in that version).
struct GroundTruth {
    std::vector<int> rfcs;
    std::vector<std::string> versions;
    std::map<std::pair<int, std::string>, bool> inconsistent;

    static GroundTruth from_json(const json& j);
    json to_json() const;
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct FindingsReport {
    std::vector<Finding> findings;
    std::optional<Confusion> confusion;
    std::map<std::pair<int, std::string>, std::string> outcomes;  // TP/FP/TN/FN per cell
};

/// Positive class is "inconsistency present": not-implemented and unknown
/// verdicts count as positive. Throws ShapeMismatch when the ground truth
/// does not cover the matrix exactly.
FindingsReport compile_findings(const VerdictMatrix& matrix, const std::optional<GroundTruth>& truth,
                                const std::map<int, std::string>& vulnerability_classes);

}  // namespace deltaspec
