#include "deltaspec/knowledge_graph.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "deltaspec/error.hpp"
#include "deltaspec/parallel.hpp"

namespace deltaspec {

namespace fs = std::filesystem;

std::string_view to_string(EntityKind k) noexcept
{
    switch (k) {
    case EntityKind::state: return "state";
    case EntityKind::event: return "event";
    case EntityKind::action: return "action";
    case EntityKind::mechanism: return "mechanism";
    }
    return "mechanism";
}

EntityKind entity_kind_from_string(std::string_view s) noexcept
{
    const std::string k = normalize_name(s);
    if (k == "state") return EntityKind::state;
    if (k == "event") return EntityKind::event;
    if (k == "action") return EntityKind::action;
    return EntityKind::mechanism;
}

std::string entity_id(EntityKind kind, std::string_view name)
{
    return stable_id({to_string(kind), normalize_name(name)});
}

std::string_view to_string(Relation r) noexcept
{
    switch (r) {
    case Relation::mentions: return "mentions";
    case Relation::implements_candidate: return "implements-candidate";
    case Relation::relates_to: return "relates-to";
    case Relation::in_community: return "in-community";
    }
    return "mentions";
}

Relation relation_from_string(std::string_view s)
{
    for (Relation r : {Relation::mentions, Relation::implements_candidate, Relation::relates_to, Relation::in_community}) {
        if (to_string(r) == s) {
            return r;
        }
    }
    throw error(errc::serialization_error, "unknown relation " + std::string(s));
}

std::string chunk_node(const std::string& chunk_id) { return "chunk:" + chunk_id; }
std::string function_node(const std::string& function_id) { return "fn:" + function_id; }
std::string community_node(int community) { return "community:" + std::to_string(community); }

const Entity* KnowledgeGraph::find(std::string_view id) const
{
    const auto it = std::lower_bound(entities.begin(), entities.end(), id,
                                     [](const Entity& e, std::string_view v) { return e.id < v; });
    return it != entities.end() && it->id == id ? &*it : nullptr;
}

std::vector<std::string> KnowledgeGraph::match_name(std::string_view name) const
{
    const std::string n = normalize_name(name);
    std::vector<std::string> out;
    for (const auto& e : entities) {
        if (e.normalized() == n) {
            out.push_back(e.id);
        }
    }
    return out;
}

int KnowledgeGraph::community_of(std::string_view entity) const
{
    for (const auto& c : communities) {
        if (std::binary_search(c.members.begin(), c.members.end(), entity)) {
            return c.id;
        }
    }
    return -1;
}

json to_json(const Entity& e)
{
    return json{{"id", e.id},
                {"kind", std::string(to_string(e.kind))},
                {"name", e.name},
                {"description", e.description},
                {"provenance", e.provenance}};
}

Entity entity_from_json(const json& j)
{
    Entity e;
    e.id = j.at("id").get<std::string>();
    e.kind = entity_kind_from_string(j.at("kind").get<std::string>());
    e.name = j.at("name").get<std::string>();
    e.description = j.value("description", "");
    e.provenance = j.at("provenance").get<std::set<std::string>>();
    return e;
}

json KnowledgeGraph::to_json() const
{
    json nodes = json::array();
    for (const auto& e : entities) {
        json n = deltaspec::to_json(e);
        n["type"] = "entity";
        nodes.push_back(std::move(n));
    }
    for (const auto& c : chunks) {
        nodes.push_back({{"id", chunk_node(c)}, {"type", "chunk"}});
    }
    for (const auto& [id, name] : function_names) {
        nodes.push_back({{"id", function_node(id)}, {"type", "function"}, {"name", name}});
    }
    json es = json::array();
    for (const auto& e : edges) {
        es.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", std::string(to_string(e.relation))}, {"weight", e.weight}});
    }
    json cs = json::array();
    for (const auto& c : communities) {
        cs.push_back({{"id", c.id}, {"members", c.members}, {"summary", c.summary}});
    }
    return json{{"template_version", std::string(kEntityTemplateVersion)},
                {"weight_formula", std::string(kWeightFormula)},
                {"weight_formula_note", "interpretation; ranked-function weights are not defined upstream"},
                {"nodes", nodes},
                {"edges", es},
                {"communities", cs}};
}

KnowledgeGraph KnowledgeGraph::from_json(const json& j)
{
    KnowledgeGraph g;
    for (const auto& n : j.at("nodes")) {
        const std::string type = n.at("type").get<std::string>();
        const std::string id = n.at("id").get<std::string>();
        if (type == "entity") {
            g.entities.push_back(entity_from_json(n));
        } else if (type == "chunk") {
            g.chunks.insert(id.substr(6));
        } else if (type == "function") {
            g.function_names[id.substr(3)] = n.value("name", "");
        }
    }
    for (const auto& e : j.at("edges")) {
        g.edges.push_back({e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                           relation_from_string(e.at("relation").get<std::string>()), e.at("weight").get<double>()});
    }
    for (const auto& c : j.at("communities")) {
        g.communities.push_back(
            {c.at("id").get<int>(), c.at("members").get<std::vector<std::string>>(), c.value("summary", "")});
    }
    return g;
}

json entity_contract_schema()
{
    return json{{"type", "array"},
                {"items",
                 {{"type", "object"},
                  {"required", {"kind", "name"}},
                  {"properties",
                   {{"kind", {{"type", "string"}}},
                    {"name", {{"type", "string"}, {"minLength", 1}}},
                    {"description", {{"type", "string"}}}}}}}};
}

void merge_entities(std::vector<Entity>& into, const std::vector<Entity>& more)
{
    for (const auto& e : more) {
        auto it = std::find_if(into.begin(), into.end(), [&](const Entity& x) { return x.id == e.id; });
        if (it == into.end()) {
            into.push_back(e);
        } else {
            it->provenance.insert(e.provenance.begin(), e.provenance.end());
            if (it->description.empty()) {
                it->description = e.description;
            }
        }
    }
}

std::vector<Entity> extract_entities(const Chunk& chunk, LlmGateway& gw, unsigned* retries)
{
    if (retries != nullptr) {
        *retries = 0;
    }
    if (trim(chunk.text).empty()) {
        return {};
    }
    const std::string system =
        "You extract protocol entities from TCP/IP specification text or network stack source code.\n"
        "Reply with a JSON array of objects {\"kind\", \"name\", \"description\"} where kind is one of "
        "state, event, action, mechanism. Use short noun phrases for names. Reply [] when nothing "
        "protocol-related is present.\n"
        "template: " + std::string(kEntityTemplateVersion);
    const std::string user = "Source: " + chunk.origin + "\n\n" + chunk.text;
    LlmResponse resp;
    try {
        resp = gw.complete(gw.make_request(phase::graph, {{"system", system}, {"user", user}},
                                           Contract{"entities", entity_contract_schema()}));
    } catch (const error& e) {
        if (e.code() == errc::contract_violation) {
            throw error(errc::schema_violation, std::string("entity extraction for chunk ") + chunk.id + ": " + e.what());
        }
        throw;
    }
    if (retries != nullptr) {
        *retries = resp.contract_retries;
    }
    std::vector<Entity> out;
    for (const auto& item : resp.value) {
        Entity e;
        e.kind = entity_kind_from_string(item.at("kind").get<std::string>());
        e.name = std::string(trim(item.at("name").get<std::string>()));
        if (e.name.empty()) {
            continue;
        }
        e.description = item.value("description", "");
        e.id = entity_id(e.kind, e.name);
        e.provenance.insert(chunk.id);
        merge_entities(out, {e});
    }
    return out;
}

std::string GraphCache::key(const std::vector<const Chunk*>& chunks)
{
    std::string material(kEntityTemplateVersion);
    for (const Chunk* c : chunks) {
        material += '\x1e';
        material += c->id;
        material += '\x1f';
        material += c->text;
    }
    return sha256_hex(material);
}

std::optional<std::vector<Entity>> GraphCache::load(const std::string& key) const
{
    const auto path = dir_ / (key + ".json");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        return std::nullopt;
    }
    std::vector<Entity> out;
    const json cached = read_json_file(path);
    for (const auto& e : cached.at("entities")) {
        out.push_back(entity_from_json(e));
    }
    return out;
}

void GraphCache::store(const std::string& key, const std::vector<Entity>& entities) const
{
    json arr = json::array();
    for (const auto& e : entities) {
        arr.push_back(to_json(e));
    }
    write_json_file(dir_ / (key + ".json"), json{{"key", key}, {"entities", arr}});
}

namespace {

// Document of a chunk: everything before the chunk-local part of its origin.
std::string document_of(const Chunk& c)
{
    if (c.origin.starts_with("rfc")) {
        return c.origin.substr(0, c.origin.find('#'));
    }
    return c.origin;
}

}  // namespace

KnowledgeGraph build_graph(const GraphSources& src, LlmGateway& gw, const GraphCache* cache, unsigned max_workers)
{
    // Group chunks by document so unchanged documents reuse cached results.
    std::map<std::string, std::vector<const Chunk*>> docs;
    for (const auto* list : {&src.text_chunks, &src.code_chunks}) {
        for (const auto& c : *list) {
            docs[document_of(c)].push_back(&c);
        }
    }
    std::vector<std::string> doc_names;
    for (const auto& [name, chunks] : docs) {
        doc_names.push_back(name);
    }
    std::vector<std::vector<Entity>> per_doc(doc_names.size());
    std::vector<std::string> keys(doc_names.size());
    std::vector<const Chunk*> pending;
    std::vector<std::size_t> pending_doc;
    for (std::size_t d = 0; d < doc_names.size(); ++d) {
        const auto& chunks = docs[doc_names[d]];
        keys[d] = GraphCache::key(chunks);
        if (cache != nullptr) {
            if (auto hit = cache->load(keys[d])) {
                per_doc[d] = std::move(*hit);
                continue;
            }
        }
        for (const Chunk* c : chunks) {
            pending.push_back(c);
            pending_doc.push_back(d);
        }
    }
    std::vector<std::vector<Entity>> per_chunk(pending.size());
    parallel_for(pending.size(), max_workers, [&](std::size_t i) { per_chunk[i] = extract_entities(*pending[i], gw); });
    std::set<std::size_t> fresh;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        merge_entities(per_doc[pending_doc[i]], per_chunk[i]);
        fresh.insert(pending_doc[i]);
    }
    if (cache != nullptr) {
        for (std::size_t d : fresh) {
            cache->store(keys[d], per_doc[d]);
        }
    }
    std::vector<Entity> all;
    for (const auto& ents : per_doc) {
        merge_entities(all, ents);
    }
    return assemble_graph(std::move(all), src);
}

KnowledgeGraph assemble_graph(std::vector<Entity> entities, const GraphSources& src)
{
    KnowledgeGraph g;
    std::sort(entities.begin(), entities.end(), [](const Entity& a, const Entity& b) { return a.id < b.id; });
    g.entities = std::move(entities);

    std::map<std::string, const Chunk*> chunk_by_id;
    for (const auto* list : {&src.text_chunks, &src.code_chunks}) {
        for (const auto& c : *list) {
            chunk_by_id[c.id] = &c;
            g.chunks.insert(c.id);
        }
    }
    for (const auto& e : g.entities) {
        if (e.provenance.empty()) {
            throw error(errc::precondition, "entity " + e.name + " has no provenance");
        }
        for (const auto& c : e.provenance) {
            if (!chunk_by_id.contains(c)) {
                throw error(errc::precondition, "entity " + e.name + " cites unknown chunk " + c);
            }
        }
    }

    // mentions and co-occurrence
    std::map<std::string, std::vector<std::string>> by_chunk;
    for (const auto& e : g.entities) {
        for (const auto& c : e.provenance) {
            g.edges.push_back({chunk_node(c), e.id, Relation::mentions, 1.0});
            by_chunk[c].push_back(e.id);
        }
    }
    std::map<std::pair<std::string, std::string>, double> co;
    for (auto& [c, ids] : by_chunk) {
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                co[{ids[i], ids[j]}] += 1.0;
            }
        }
    }
    for (const auto& [pair, w] : co) {
        g.edges.push_back({pair.first, pair.second, Relation::relates_to, w});
    }

    // implements-candidate via code chunk provenance
    if (src.map != nullptr && src.index != nullptr) {
        for (const auto& e : g.entities) {
            std::map<std::string, double> weights;
            for (const auto& c : e.provenance) {
                const auto it = src.map->chunk_to_functions.find(c);
                if (it == src.map->chunk_to_functions.end()) {
                    continue;
                }
                for (const auto& link : it->second) {
                    const CodeFunction* f = src.index->find(link.function_id);
                    if (f == nullptr) {
                        continue;
                    }
                    const double len = static_cast<double>(f->span.end_byte - f->span.start_byte);
                    weights[link.function_id] += static_cast<double>(link.byte_end - link.byte_begin) / len;
                    g.function_names[f->id] = f->name;
                }
            }
            for (const auto& [fid, w] : weights) {
                if (w > 0) {
                    g.edges.push_back({e.id, function_node(fid), Relation::implements_candidate, w});
                }
            }
        }
    }

    g.communities = detect_communities(g);
    for (const auto& c : g.communities) {
        for (const auto& m : c.members) {
            g.edges.push_back({m, community_node(c.id), Relation::in_community, 1.0});
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
        return std::tie(a.relation, a.src, a.dst) < std::tie(b.relation, b.src, b.dst);
    });
    return g;
}

std::vector<Community> detect_communities(const KnowledgeGraph& g, unsigned max_rounds)
{
    const std::size_t n = g.entities.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        index[g.entities[i].id] = i;
    }
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& e : g.edges) {
        if (e.relation != Relation::relates_to) {
            continue;
        }
        const auto a = index.find(e.src);
        const auto b = index.find(e.dst);
        if (a == index.end() || b == index.end() || a->second == b->second) {
            continue;
        }
        adj[a->second].emplace_back(b->second, e.weight);
        adj[b->second].emplace_back(a->second, e.weight);
    }

    // Labels are entity indices; entities are sorted by id, so the smallest
    // index is the smallest id.
    std::vector<std::size_t> label(n);
    for (std::size_t i = 0; i < n; ++i) {
        label[i] = i;
    }
    std::mt19937 rng(0);
    std::vector<std::size_t> order(label);
    for (unsigned round = 0; round < max_rounds; ++round) {
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = rng() % i;
            std::swap(order[i - 1], order[j]);
        }
        bool changed = false;
        for (std::size_t v : order) {
            if (adj[v].empty()) {
                continue;
            }
            std::map<std::size_t, double> votes;
            for (const auto& [u, w] : adj[v]) {
                votes[label[u]] += w;
            }
            double best = 0;
            for (const auto& [l, w] : votes) {
                best = std::max(best, w);
            }
            std::size_t pick = label[v];
            const auto cur = votes.find(label[v]);
            if (cur == votes.end() || cur->second < best) {
                for (const auto& [l, w] : votes) {
                    if (w == best) {
                        pick = l;
                        break;
                    }
                }
            }
            if (pick != label[v]) {
                label[v] = pick;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        groups[label[i]].push_back(i);
    }
    std::vector<std::vector<std::size_t>> ordered;
    for (auto& [l, members] : groups) {
        ordered.push_back(std::move(members));
    }
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<Community> out;
    for (std::size_t c = 0; c < ordered.size(); ++c) {
        Community com;
        com.id = static_cast<int>(c);
        std::vector<std::string> names;
        for (std::size_t i : ordered[c]) {
            com.members.push_back(g.entities[i].id);
            names.push_back(g.entities[i].name);
        }
        std::sort(names.begin(), names.end());
        for (std::size_t i = 0; i < names.size() && i < 6; ++i) {
            com.summary += (i ? ", " : "") + names[i];
        }
        if (names.size() > 6) {
            com.summary += ", ...";
        }
        out.push_back(std::move(com));
    }
    return out;
}

std::vector<RetrievalHit> retrieve_for_entities(const std::set<std::string>& query, const KnowledgeGraph& g,
                                                std::size_t k, double damping)
{
    if (g.empty()) {
        throw error(errc::empty_graph, "knowledge graph has no entities");
    }
    std::map<std::string, std::vector<std::pair<std::string, double>>> impl;
    for (const auto& e : g.edges) {
        if (e.relation == Relation::implements_candidate) {
            impl[e.src].emplace_back(e.dst.substr(3), e.weight);
        }
    }
    std::map<std::string, double> weight;
    std::set<int> touched;
    for (const auto& q : query) {
        if (g.find(q) == nullptr) {
            continue;
        }
        for (const auto& [fid, w] : impl[q]) {
            weight[fid] += w;
        }
        if (const int c = g.community_of(q); c >= 0) {
            touched.insert(c);
        }
    }
    for (const auto& c : g.communities) {
        if (!touched.contains(c.id)) {
            continue;
        }
        for (const auto& s : c.members) {
            if (query.contains(s)) {
                continue;
            }
            for (const auto& [fid, w] : impl[s]) {
                weight[fid] += damping * w;
            }
        }
    }
    std::vector<RetrievalHit> hits;
    for (const auto& [fid, w] : weight) {
        hits.push_back({fid, w});
    }
    auto name_of = [&](const std::string& fid) {
        const auto it = g.function_names.find(fid);
        return it == g.function_names.end() ? fid : it->second;
    };
    std::sort(hits.begin(), hits.end(), [&](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.weight != b.weight) {
            return a.weight > b.weight;
        }
        const auto na = name_of(a.function_id);
        const auto nb = name_of(b.function_id);
        return na != nb ? na < nb : a.function_id < b.function_id;
    });
    if (hits.size() > k) {
        hits.resize(k);
    }
    return hits;
}

std::vector<RetrievalHit> retrieve_code_for_spec(const std::vector<std::string>& concepts, const KnowledgeGraph& g,
                                                 std::size_t k, double damping)
{
    std::set<std::string> query;
    for (const auto& c : concepts) {
        for (auto& id : g.match_name(c)) {
            query.insert(std::move(id));
        }
    }
    return retrieve_for_entities(query, g, k, damping);
}

std::vector<RetrievalHit> retrieve_code_for_chunks(const std::set<std::string>& chunk_ids, const KnowledgeGraph& g,
                                                   std::size_t k, double damping)
{
    std::set<std::string> query;
    for (const auto& e : g.entities) {
        if (std::any_of(e.provenance.begin(), e.provenance.end(),
                        [&](const std::string& c) { return chunk_ids.contains(c); })) {
            query.insert(e.id);
        }
    }
    return retrieve_for_entities(query, g, k, damping);
}

}  // namespace deltaspec
