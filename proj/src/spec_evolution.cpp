#include "deltaspec/spec_evolution.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <tuple>

#include "deltaspec/error.hpp"
#include "deltaspec/parallel.hpp"
#include "deltaspec/tokenizer.hpp"

namespace deltaspec {

std::string_view to_string(EntryStatus s) noexcept
{
    switch (s) {
    case EntryStatus::added: return "new";
    case EntryStatus::modified: return "modified";
    case EntryStatus::inherited: return "inherited";
    case EntryStatus::deprecated: return "deprecated";
    }
    return "new";
}

EntryStatus entry_status_from_string(std::string_view s)
{
    if (s == "new") return EntryStatus::added;
    if (s == "modified") return EntryStatus::modified;
    if (s == "inherited") return EntryStatus::inherited;
    if (s == "deprecated") return EntryStatus::deprecated;
    throw error(errc::serialization_error, "unknown entry status " + std::string(s));
}

std::string_view to_string(EdgeKind k) noexcept
{
    return k == EdgeKind::updates ? "updates" : "obsoletes";
}

json to_json(const FunctionalEntry& e)
{
    return json{{"id", e.id},
                {"rfc", e.rfc},
                {"section", e.section},
                {"title", e.title},
                {"summary", e.summary},
                {"concepts", e.concepts},
                {"status", std::string(to_string(e.status))}};
}

FunctionalEntry entry_from_json(const json& j)
{
    FunctionalEntry e;
    e.id = j.at("id").get<std::string>();
    e.rfc = j.at("rfc").get<int>();
    e.section = j.at("section").get<std::string>();
    e.title = j.at("title").get<std::string>();
    e.summary = j.value("summary", "");
    e.concepts = j.value("concepts", std::vector<std::string>{});
    e.status = entry_status_from_string(j.value("status", "new"));
    return e;
}

json entries_contract_schema()
{
    return json{{"type", "array"},
                {"items",
                 {{"type", "object"},
                  {"required", {"title", "summary", "concepts"}},
                  {"properties",
                   {{"title", {{"type", "string"}, {"minLength", 1}}},
                    {"summary", {{"type", "string"}}},
                    {"concepts", {{"type", "array"}, {"items", {{"type", "string"}}}}}}}}}};
}

namespace {

LlmResponse structured_call(LlmGateway& gw, std::string system, std::string user, Contract contract,
                            const std::string& what)
{
    try {
        return gw.complete(gw.make_request(phase::reasoning, {{"system", std::move(system)}, {"user", std::move(user)}},
                                           std::move(contract)));
    } catch (const error& e) {
        if (e.code() == errc::contract_violation) {
            throw error(errc::schema_violation, what + ": " + e.what());
        }
        throw;
    }
}

}  // namespace

std::vector<FunctionalEntry> extract_functional_entries(const RfcDocument& doc, LlmGateway& gw, unsigned max_workers)
{
    const std::string system =
        "You summarize protocol functionality in one RFC section.\n"
        "Reply with a JSON array of functional entries {\"title\", \"summary\", \"concepts\"}: one entry per "
        "protocol state, event or interaction rule the section defines. concepts lists the protocol entities "
        "involved. Reply [] when the section has no protocol behavior.";
    std::vector<std::vector<FunctionalEntry>> per_section(doc.sections.size());
    parallel_for(doc.sections.size(), max_workers, [&](std::size_t i) {
        const RfcSection& sec = doc.sections[i];
        const std::string text = sec.text();
        if (trim(text).empty()) {
            return;
        }
        const std::string user = "RFC " + std::to_string(doc.number) + " section " + sec.id + ": " + sec.heading +
                                 "\n\n" + text;
        const auto resp = structured_call(gw, system, user, Contract{"functional_entries", entries_contract_schema()},
                                          "functional entries for RFC " + std::to_string(doc.number) + " section " +
                                              sec.id);
        std::set<std::string> seen;
        for (const auto& item : resp.value) {
            FunctionalEntry e;
            e.rfc = doc.number;
            e.section = sec.id;
            e.title = std::string(trim(item.at("title").get<std::string>()));
            e.summary = item.value("summary", "");
            e.concepts = item.value("concepts", std::vector<std::string>{});
            e.id = stable_id({std::to_string(doc.number), sec.id, e.title});
            if (seen.insert(e.id).second) {
                per_section[i].push_back(std::move(e));
            }
        }
    });
    std::vector<FunctionalEntry> out;
    for (auto& v : per_section) {
        for (auto& e : v) {
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<FunctionalEntry> FunctionalDelta::targets() const
{
    std::vector<FunctionalEntry> out = added;
    for (const auto& [o, n] : modified) {
        out.push_back(n);
    }
    return out;
}

namespace {

json entry_list(const std::vector<FunctionalEntry>& v)
{
    json a = json::array();
    for (const auto& e : v) {
        a.push_back(to_json(e));
    }
    return a;
}

std::vector<FunctionalEntry> entries_from(const json& a)
{
    std::vector<FunctionalEntry> out;
    for (const auto& e : a) {
        out.push_back(entry_from_json(e));
    }
    return out;
}

}  // namespace

json FunctionalDelta::to_json() const
{
    json mod = json::array();
    for (const auto& [o, n] : modified) {
        mod.push_back({{"old", deltaspec::to_json(o)}, {"new", deltaspec::to_json(n)}});
    }
    return json{{"added", entry_list(added)},
                {"modified", mod},
                {"deprecated", entry_list(deprecated)},
                {"inherited", entry_list(inherited)}};
}

FunctionalDelta FunctionalDelta::from_json(const json& j)
{
    FunctionalDelta d;
    d.added = entries_from(j.at("added"));
    for (const auto& p : j.at("modified")) {
        d.modified.emplace_back(entry_from_json(p.at("old")), entry_from_json(p.at("new")));
    }
    d.deprecated = entries_from(j.at("deprecated"));
    d.inherited = entries_from(j.at("inherited"));
    return d;
}

std::vector<int> UpdateChainGraph::predecessors(int rfc) const
{
    std::vector<int> out;
    for (const auto& e : edges) {
        if (e.to == rfc) {
            out.push_back(e.from);
        }
    }
    return out;
}

std::vector<int> UpdateChainGraph::successors(int rfc) const
{
    std::vector<int> out;
    for (const auto& e : edges) {
        if (e.from == rfc) {
            out.push_back(e.to);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> UpdateChainGraph::topological_order() const
{
    std::map<int, int> indegree;
    for (int n : nodes) {
        indegree[n] = 0;
    }
    for (const auto& e : edges) {
        ++indegree[e.to];
    }
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (const auto& [n, d] : indegree) {
        if (d == 0) {
            ready.push(n);
        }
    }
    std::vector<int> order;
    while (!ready.empty()) {
        const int n = ready.top();
        ready.pop();
        order.push_back(n);
        for (int s : successors(n)) {
            if (--indegree[s] == 0) {
                ready.push(s);
            }
        }
    }
    if (order.size() != indegree.size()) {
        std::string stuck;
        for (const auto& [n, d] : indegree) {
            if (d > 0) {
                stuck += (stuck.empty() ? "" : ", ") + std::to_string(n);
            }
        }
        throw error(errc::cycle_detected, "update/obsolete cycle among RFCs " + stuck);
    }
    return order;
}

std::vector<std::vector<int>> UpdateChainGraph::chains() const
{
    topological_order();  // rejects cycles before the walk
    std::vector<std::vector<int>> out;
    std::vector<int> path;
    std::function<void(int)> walk = [&](int n) {
        path.push_back(n);
        const auto next = successors(n);
        if (next.empty()) {
            out.push_back(path);
        }
        for (int s : next) {
            walk(s);
        }
        path.pop_back();
    };
    for (int n : nodes) {
        if (predecessors(n).empty()) {
            walk(n);
        }
    }
    return out;
}

json UpdateChainGraph::to_json() const
{
    json es = json::array();
    for (const auto& e : edges) {
        json row{{"from", e.from}, {"to", e.to}, {"kind", std::string(deltaspec::to_string(e.kind))}};
        const auto d = deltas.find({e.from, e.to});
        if (d != deltas.end()) {
            row["delta"] = d->second.to_json();
        }
        es.push_back(std::move(row));
    }
    json pub = json::object();
    for (const auto& [n, ym] : published) {
        pub[std::to_string(n)] = ym.str();
    }
    return json{{"nodes", nodes}, {"edges", es}, {"published", pub}, {"chains", chains()}};
}

UpdateChainGraph UpdateChainGraph::from_json(const json& j)
{
    UpdateChainGraph g;
    g.nodes = j.at("nodes").get<std::vector<int>>();
    for (const auto& e : j.at("edges")) {
        ChainEdge ce{e.at("from").get<int>(), e.at("to").get<int>(),
                     e.at("kind").get<std::string>() == "obsoletes" ? EdgeKind::obsoletes : EdgeKind::updates};
        g.edges.push_back(ce);
        if (e.contains("delta")) {
            g.deltas[{ce.from, ce.to}] = FunctionalDelta::from_json(e["delta"]);
        }
    }
    const json published = j.value("published", json::object());
    for (const auto& [k, v] : published.items()) {
        g.published[std::stoi(k)] = YearMonth::parse(v.get<std::string>());
    }
    return g;
}

void check_chain_invariants(const UpdateChainGraph& g)
{
    g.topological_order();
    for (const auto& e : g.edges) {
        const auto a = g.published.find(e.from);
        const auto b = g.published.find(e.to);
        if (a != g.published.end() && b != g.published.end() && a->second.year != 0 && b->second.year != 0 &&
            b->second < a->second) {
            throw error(errc::precondition, "RFC " + std::to_string(e.to) + " (" + b->second.str() + ") revises RFC " +
                                                std::to_string(e.from) + " (" + a->second.str() +
                                                ") but predates it");
        }
    }
}

UpdateChainGraph build_update_chain(const std::vector<RfcDocument>& docs)
{
    UpdateChainGraph g;
    std::set<int> corpus;
    for (const auto& d : docs) {
        if (!corpus.insert(d.number).second) {
            throw error(errc::precondition, "RFC " + std::to_string(d.number) + " appears twice in the corpus");
        }
        g.published[d.number] = d.published;
    }
    g.nodes.assign(corpus.begin(), corpus.end());

    std::map<std::pair<int, int>, EdgeKind> raw;
    for (const auto& d : docs) {
        for (int u : d.updates) {
            if (corpus.contains(u) && u != d.number) {
                raw.emplace(std::pair{u, d.number}, EdgeKind::updates);
            }
        }
        for (int o : d.obsoletes) {
            if (corpus.contains(o) && o != d.number) {
                raw[{o, d.number}] = EdgeKind::obsoletes;
            }
        }
    }
    for (const auto& [k, kind] : raw) {
        g.edges.push_back({k.first, k.second, kind});
    }
    g.topological_order();  // cycles are reported before reduction

    // Transitive reduction: drop (a, c) when c is reachable from a without it.
    auto reachable_without = [&](int a, int c) {
        std::set<int> seen;
        std::vector<int> stack;
        for (int s : g.successors(a)) {
            if (s != c) {
                stack.push_back(s);
            }
        }
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            if (n == c) {
                return true;
            }
            if (!seen.insert(n).second) {
                continue;
            }
            for (int s : g.successors(n)) {
                stack.push_back(s);
            }
        }
        return false;
    };
    std::vector<ChainEdge> kept;
    for (const auto& e : g.edges) {
        if (!reachable_without(e.from, e.to)) {
            kept.push_back(e);
        }
    }
    g.edges = std::move(kept);
    check_chain_invariants(g);
    return g;
}

double title_similarity(std::string_view a, std::string_view b)
{
    const auto ta = lexical_terms(a);
    const auto tb = lexical_terms(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) {
        return 0.0;
    }
    std::size_t common = 0;
    for (const auto& t : sa) {
        common += sb.contains(t);
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(sa.size() + sb.size());
}

json pair_contract_schema()
{
    return json{{"type", "object"},
                {"required", {"classification"}},
                {"properties", {{"classification", {{"enum", {"inherited", "modified", "unrelated"}}}},
                                {"rationale", {{"type", "string"}}}}}};
}

json removal_contract_schema()
{
    return json{{"type", "object"},
                {"required", {"classification"}},
                {"properties", {{"classification", {{"enum", {"deprecated", "inherited"}}}},
                                {"rationale", {{"type", "string"}}}}}};
}

namespace {

std::string describe(const FunctionalEntry& e)
{
    return "RFC " + std::to_string(e.rfc) + " section " + e.section + ": " + e.title + "\n" + e.summary;
}

FunctionalEntry with_status(FunctionalEntry e, EntryStatus s)
{
    e.status = s;
    return e;
}

}  // namespace

FunctionalDelta diff_functional_entries(const std::vector<FunctionalEntry>& old_entries,
                                        const std::vector<FunctionalEntry>& new_entries, LlmGateway& gw,
                                        const DiffConfig& cfg)
{
    struct Candidate {
        double sim;
        std::size_t o;
        std::size_t n;
    };
    std::vector<Candidate> cands;
    for (std::size_t o = 0; o < old_entries.size(); ++o) {
        for (std::size_t n = 0; n < new_entries.size(); ++n) {
            const double s = title_similarity(old_entries[o].title, new_entries[n].title);
            if (s >= cfg.title_similarity) {
                cands.push_back({s, o, n});
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.sim, a.o, a.n) < std::tie(a.sim, b.o, b.n);
    });
    std::vector<bool> old_used(old_entries.size(), false);
    std::vector<bool> new_used(new_entries.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& c : cands) {
        if (!old_used[c.o] && !new_used[c.n]) {
            old_used[c.o] = new_used[c.n] = true;
            pairs.emplace_back(c.o, c.n);
        }
    }

    FunctionalDelta d;
    std::vector<bool> old_settled(old_entries.size(), false);
    std::vector<bool> new_settled(new_entries.size(), false);
    const std::string pair_system =
        "You compare one protocol functionality across two RFC versions.\n"
        "Reply with JSON {\"classification\": \"inherited\" | \"modified\" | \"unrelated\", \"rationale\"}: "
        "inherited when the newer entry keeps the older behavior, modified when it changes it, unrelated when "
        "they describe different functionality.";
    for (const auto& [o, n] : pairs) {
        const auto& oe = old_entries[o];
        const auto& ne = new_entries[n];
        const auto resp = structured_call(gw, pair_system, "Older entry:\n" + describe(oe) + "\n\nNewer entry:\n" + describe(ne),
                                          Contract{"classify_pair", pair_contract_schema()},
                                          "pair classification " + oe.title + " / " + ne.title);
        const std::string cls = resp.value.at("classification").get<std::string>();
        if (cls == "inherited") {
            d.inherited.push_back(with_status(ne, EntryStatus::inherited));
        } else if (cls == "modified") {
            d.modified.emplace_back(with_status(oe, EntryStatus::modified), with_status(ne, EntryStatus::modified));
        } else {
            continue;
        }
        old_settled[o] = new_settled[n] = true;
    }

    const std::string removal_system =
        "An RFC revision no longer lists the protocol functionality below.\n"
        "Reply with JSON {\"classification\": \"deprecated\" | \"inherited\", \"rationale\"}: inherited when "
        "the revision keeps it by reference, deprecated when it is withdrawn.";
    for (std::size_t o = 0; o < old_entries.size(); ++o) {
        if (old_settled[o]) {
            continue;
        }
        const auto& oe = old_entries[o];
        const int newer = new_entries.empty() ? 0 : new_entries.front().rfc;
        const auto resp = structured_call(
            gw, removal_system,
            "Entry:\n" + describe(oe) + (newer ? "\n\nRevision: RFC " + std::to_string(newer) : std::string()),
            Contract{"classify_removed", removal_contract_schema()}, "removal classification " + oe.title);
        if (resp.value.at("classification").get<std::string>() == "deprecated") {
            d.deprecated.push_back(with_status(oe, EntryStatus::deprecated));
        } else {
            d.inherited.push_back(with_status(oe, EntryStatus::inherited));
        }
    }
    for (std::size_t n = 0; n < new_entries.size(); ++n) {
        if (!new_settled[n]) {
            d.added.push_back(with_status(new_entries[n], EntryStatus::added));
        }
    }
    return d;
}

json Increment::to_json() const
{
    json t = json::array();
    for (const auto& e : targets) {
        t.push_back(deltaspec::to_json(e));
    }
    return json{{"from", from}, {"to", to}, {"kind", std::string(deltaspec::to_string(kind))},
                {"delta", delta.to_json()}, {"targets", t}};
}

Increment Increment::from_json(const json& j)
{
    Increment inc;
    inc.from = j.at("from").get<int>();
    inc.to = j.at("to").get<int>();
    inc.kind = j.at("kind").get<std::string>() == "obsoletes" ? EdgeKind::obsoletes : EdgeKind::updates;
    inc.delta = FunctionalDelta::from_json(j.at("delta"));
    for (const auto& e : j.at("targets")) {
        inc.targets.push_back(entry_from_json(e));
    }
    return inc;
}

std::vector<Increment> enumerate_increments(const UpdateChainGraph& chain)
{
    const auto order = chain.topological_order();
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) {
        pos[order[i]] = i;
    }
    std::vector<ChainEdge> edges = chain.edges;
    std::sort(edges.begin(), edges.end(), [&](const ChainEdge& a, const ChainEdge& b) {
        return std::pair(pos[a.to], pos[a.from]) < std::pair(pos[b.to], pos[b.from]);
    });
    std::vector<Increment> out;
    for (const auto& e : edges) {
        const auto it = chain.deltas.find({e.from, e.to});
        if (it == chain.deltas.end()) {
            throw error(errc::missing_delta,
                        "no delta for edge " + std::to_string(e.from) + " -> " + std::to_string(e.to));
        }
        Increment inc{e.from, e.to, e.kind, it->second, it->second.targets()};
        out.push_back(std::move(inc));
    }
    return out;
}

}  // namespace deltaspec
