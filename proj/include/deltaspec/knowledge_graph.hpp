#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deltaspec/chunk_mapper.hpp"
#include "deltaspec/code_ingest.hpp"
#include "deltaspec/llm_gateway.hpp"

namespace deltaspec {

enum class EntityKind { state, event, action, mechanism };

std::string_view to_string(EntityKind k) noexcept;
/// Anything outside the four kinds maps to mechanism.
EntityKind entity_kind_from_string(std::string_view s) noexcept;

struct Entity {
    std::string id;  // stable_id(kind, normalized name)
    EntityKind kind = EntityKind::mechanism;
    std::string name;
    std::string description;
    std::set<std::string> provenance;  // chunk ids, never empty

    std::string normalized() const { return normalize_name(name); }
};

std::string entity_id(EntityKind kind, std::string_view name);

enum class Relation { mentions, implements_candidate, relates_to, in_community };

std::string_view to_string(Relation r) noexcept;
Relation relation_from_string(std::string_view s);

// Node ids: entity ids are bare; other nodes carry a prefix.
std::string chunk_node(const std::string& chunk_id);
std::string function_node(const std::string& function_id);
std::string community_node(int community);

struct GraphEdge {
    std::string src;
    std::string dst;
    Relation relation = Relation::mentions;
    double weight = 1.0;
};

struct Community {
    int id = 0;
    std::vector<std::string> members;  // entity ids, ascending
    std::string summary;
};

inline constexpr std::string_view kEntityTemplateVersion = "entities-v1";

/// implements-candidate weight of an entity for a function: the sum, over the
/// entity's code chunks, of the fraction of the function's bytes in that chunk.
inline constexpr std::string_view kWeightFormula =
    "w(f) = sum_A w(e,f) + 0.5 * sum_B w(s,f); w(e,f) = sum over code chunks c of e of |c & f| / |f|";

struct KnowledgeGraph {
    std::vector<Entity> entities;  // ascending id
    std::vector<GraphEdge> edges;  // ascending (relation, src, dst)
    std::vector<Community> communities;
    std::map<std::string, std::string> function_names;  // function id -> name
    std::set<std::string> chunks;                       // chunk ids referenced

    const Entity* find(std::string_view id) const;
    /// Entity ids whose normalized name equals normalize_name(name).
    std::vector<std::string> match_name(std::string_view name) const;
    int community_of(std::string_view entity) const;  // -1 when absent
    bool empty() const noexcept { return entities.empty(); }

    json to_json() const;
    static KnowledgeGraph from_json(const json& j);
};

json entity_contract_schema();

/// One structured request per non-empty chunk. Entities are deduplicated by
/// (kind, normalized name) and carry the chunk in their provenance. Throws
/// SchemaViolation when the reply still breaks the contract after the
/// gateway's retries; other gateway errors propagate.
std::vector<Entity> extract_entities(const Chunk& chunk, LlmGateway& gw, unsigned* retries = nullptr);

/// Merges `more` into `into` by entity id, unioning provenance. The first
/// description seen wins.
void merge_entities(std::vector<Entity>& into, const std::vector<Entity>& more);

/// Per-document reuse of extraction results keyed by a content hash of the
/// document's chunks and the template version.
class GraphCache {
public:
    explicit GraphCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
    static std::string key(const std::vector<const Chunk*>& chunks);
    std::optional<std::vector<Entity>> load(const std::string& key) const;
    void store(const std::string& key, const std::vector<Entity>& entities) const;

private:
    std::filesystem::path dir_;
};

struct GraphSources {
    std::vector<Chunk> text_chunks;
    std::vector<Chunk> code_chunks;
    const ChunkFunctionMap* map = nullptr;
    const CodebaseIndex* index = nullptr;
};

/// Extracts entities from every chunk (cached per document when `cache` is
/// set), then assembles edges and communities.
KnowledgeGraph build_graph(const GraphSources& src, LlmGateway& gw, const GraphCache* cache = nullptr,
                           unsigned max_workers = 4);

/// Assembles the graph from already-extracted entities.
KnowledgeGraph assemble_graph(std::vector<Entity> entities, const GraphSources& src);

/// Asynchronous weighted label propagation over relates-to edges. Node order
/// is reshuffled every round from a generator seeded with 0; a node keeps its
/// label when it is among the heaviest, else takes the smallest heaviest
/// label. Stops at a fixed point or after 100 rounds.
std::vector<Community> detect_communities(const KnowledgeGraph& g, unsigned max_rounds = 100);

struct RetrievalHit {
    std::string function_id;
    double weight = 0;
    friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

/// Dual-path retrieval from a set of query entity ids. Throws EmptyGraph.
std::vector<RetrievalHit> retrieve_for_entities(const std::set<std::string>& query, const KnowledgeGraph& g,
                                                std::size_t k, double damping = 0.5);
/// Query entities resolved from concept names.
std::vector<RetrievalHit> retrieve_code_for_spec(const std::vector<std::string>& concepts, const KnowledgeGraph& g,
                                                 std::size_t k, double damping = 0.5);
/// Query entities are those with provenance in the given text chunks.
std::vector<RetrievalHit> retrieve_code_for_chunks(const std::set<std::string>& chunk_ids, const KnowledgeGraph& g,
                                                   std::size_t k, double damping = 0.5);

json to_json(const Entity& e);
Entity entity_from_json(const json& j);

}  // namespace deltaspec
