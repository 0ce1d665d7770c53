#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deltaspec/llm_gateway.hpp"
#include "deltaspec/rfc_ingest.hpp"

namespace deltaspec {

enum class EntryStatus { added, modified, inherited, deprecated };

std::string_view to_string(EntryStatus s) noexcept;
EntryStatus entry_status_from_string(std::string_view s);

struct FunctionalEntry {
    std::string id;  // stable_id(rfc, section, title)
    int rfc = 0;
    std::string section;
    std::string title;
    std::string summary;
    std::vector<std::string> concepts;
    EntryStatus status = EntryStatus::added;
};

json to_json(const FunctionalEntry& e);
FunctionalEntry entry_from_json(const json& j);

json entries_contract_schema();

/// One structured request per non-empty section; entries in section order,
/// then reply order. Throws SchemaViolation when a reply breaks the contract
/// after the gateway's retries.
std::vector<FunctionalEntry> extract_functional_entries(const RfcDocument& doc, LlmGateway& gw,
                                                        unsigned max_workers = 4);

enum class EdgeKind { updates, obsoletes };

std::string_view to_string(EdgeKind k) noexcept;

struct ChainEdge {
    int from = 0;  // older
    int to = 0;    // newer; its header names `from`
    EdgeKind kind = EdgeKind::updates;
    friend bool operator==(const ChainEdge&, const ChainEdge&) = default;
};

struct FunctionalDelta {
    std::vector<FunctionalEntry> added;
    std::vector<std::pair<FunctionalEntry, FunctionalEntry>> modified;  // (old, new)
    std::vector<FunctionalEntry> deprecated;
    std::vector<FunctionalEntry> inherited;

    /// Verification targets: added entries and the new side of modified pairs.
    std::vector<FunctionalEntry> targets() const;
    json to_json() const;
    static FunctionalDelta from_json(const json& j);
};

struct UpdateChainGraph {
    std::vector<int> nodes;      // ascending
    std::vector<ChainEdge> edges;  // ascending (from, to)
    std::map<int, YearMonth> published;
    std::map<std::pair<int, int>, FunctionalDelta> deltas;

    std::vector<int> predecessors(int rfc) const;
    std::vector<int> successors(int rfc) const;
    /// Kahn's algorithm, smallest RFC number first among ready nodes.
    /// Throws CycleDetected.
    std::vector<int> topological_order() const;
    /// Every root-to-sink path, successors visited in ascending order.
    std::vector<std::vector<int>> chains() const;

    json to_json() const;
    static UpdateChainGraph from_json(const json& j);
};

/// Edges from Updates/Obsoletes metadata restricted to the corpus, with edges
/// implied by a longer path removed (6528 both obsoletes 1948 and updates
/// 793; only 1948 -> 6528 is kept). Throws CycleDetected, and
/// PreconditionViolation when a newer RFC predates the one it revises.
UpdateChainGraph build_update_chain(const std::vector<RfcDocument>& docs);

/// Throws CycleDetected or PreconditionViolation on a broken invariant.
void check_chain_invariants(const UpdateChainGraph& g);

struct DiffConfig {
    double title_similarity = 0.5;
};

/// Dice coefficient over the lexical term sets of two titles.
double title_similarity(std::string_view a, std::string_view b);

json pair_contract_schema();
json removal_contract_schema();

/// Pairs old/new entries greedily by title similarity; each pair is
/// classified (inherited / modified / unrelated) by the gateway, each unpaired
/// old entry as deprecated or inherited. Unpaired new entries are added.
FunctionalDelta diff_functional_entries(const std::vector<FunctionalEntry>& old_entries,
                                        const std::vector<FunctionalEntry>& new_entries, LlmGateway& gw,
                                        const DiffConfig& cfg = {});

struct Increment {
    int from = 0;
    int to = 0;
    EdgeKind kind = EdgeKind::updates;
    FunctionalDelta delta;
    std::vector<FunctionalEntry> targets;

    json to_json() const;
    static Increment from_json(const json& j);
};

/// Edges in topological order of their endpoints. Throws MissingDelta.
std::vector<Increment> enumerate_increments(const UpdateChainGraph& chain);

}  // namespace deltaspec
