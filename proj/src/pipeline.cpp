#include "deltaspec/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "deltaspec/knowledge_graph.hpp"
#include "deltaspec/parallel.hpp"
#include "deltaspec/tokenizer.hpp"
#include "deltaspec/triplet_store.hpp"

namespace deltaspec {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p)
{
    if (p.empty()) {
        return {};
    }
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

json extraction_json(const ExtractionStats& s)
{
    return json{{"TF", s.total_functions}, {"TL", s.total_lines},   {"SF", s.selected_functions},
                {"SL", s.selected_lines},  {"FER", s.function_rate}, {"LER", s.length_rate},
                {"rfc_count", s.rfc_count}};
}

ExtractionStats extraction_from_json(const json& j)
{
    ExtractionStats s;
    s.total_functions = j.at("TF").get<std::size_t>();
    s.total_lines = j.at("TL").get<std::size_t>();
    s.selected_functions = j.at("SF").get<double>();
    s.selected_lines = j.at("SL").get<double>();
    s.function_rate = j.at("FER").get<double>();
    s.length_rate = j.at("LER").get<double>();
    s.rfc_count = j.at("rfc_count").get<std::size_t>();
    return s;
}

std::vector<Chunk> read_chunks(const fs::path& p)
{
    std::vector<Chunk> out;
    for (const auto& row : read_jsonl_file(p)) {
        out.push_back(chunk_from_json(row));
    }
    return out;
}

void write_chunks(const fs::path& p, const std::vector<Chunk>& chunks)
{
    std::vector<json> rows;
    rows.reserve(chunks.size());
    for (const auto& c : chunks) {
        rows.push_back(to_json(c));
    }
    write_jsonl_file(p, rows);
}

std::map<int, std::vector<FunctionalEntry>> read_entries(const fs::path& p)
{
    std::map<int, std::vector<FunctionalEntry>> out;
    for (const auto& row : read_jsonl_file(p)) {
        auto e = entry_from_json(row);
        out[e.rfc].push_back(std::move(e));
    }
    return out;
}

std::map<int, Verdict> read_row(const fs::path& p)
{
    std::map<int, Verdict> row;
    const json doc = read_json_file(p);
    for (const auto& cell : doc.at("verdicts")) {
        row[cell.at("rfc").get<int>()] = Verdict::from_json(cell.at("verdict"));
    }
    return row;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base)
{
    try {
        PipelineConfig c;
        c.workspace = resolve(base, j.value("workspace", "workspace"));
        c.rfc_manifest = resolve(base, j.at("rfc_manifest").get<std::string>());
        for (const auto& cb : j.value("codebases", json::array())) {
            CodebaseConfig cc;
            cc.tag = cb.at("tag").get<std::string>();
            cc.root = resolve(base, cb.at("root").get<std::string>());
            cc.stubs = resolve(base, cb.value("stubs", ""));
            if (cc.tag.empty()) {
                throw error(errc::invalid_config, "codebase tag must not be empty");
            }
            c.codebases.push_back(std::move(cc));
        }
        if (j.contains("source_filter")) {
            c.source_filter = SourceFilter::from_json(j["source_filter"]);
        }
        if (const auto f = j.value("figures", json::object()); !f.empty()) {
            c.figures.density_threshold = f.value("density_threshold", c.figures.density_threshold);
            c.figures.min_lines = f.value("min_lines", c.figures.min_lines);
        }
        const auto ch = j.value("chunk", json::object());
        c.chunk.chunk_size = ch.value("size", c.chunk.chunk_size);
        c.chunk.redundancy_ratio = ch.value("overlap_ratio", c.chunk.redundancy_ratio);
        c.chunk.validate();
        c.diff.title_similarity = j.value("diff", json::object()).value("title_similarity", c.diff.title_similarity);

        const auto r = j.value("retrieval", json::object());
        auto& rc = c.verifier.retrieval;
        rc.k = r.value("k", rc.k);
        rc.fusion_alpha = r.value("fusion_alpha", rc.fusion_alpha);
        rc.k1 = r.value("k1", rc.k1);
        rc.b = r.value("b", rc.b);
        const auto v = j.value("verifier", json::object());
        c.verifier.trials = v.value("trials", c.verifier.trials);
        c.verifier.candidate_budget = v.value("candidate_budget", c.verifier.candidate_budget);
        c.verifier.code_token_budget = v.value("code_token_budget", c.verifier.code_token_budget);
        c.verifier.community_damping = v.value("community_damping", c.verifier.community_damping);
        const json classes = v.value("vulnerability_classes", json::object());
        for (const auto& [rfc, cls] : classes.items()) {
            c.verifier.vulnerability_classes[std::stoi(rfc)] = cls.get<std::string>();
        }
        c.verifier.validate();

        const auto g = j.value("gateway", json::object());
        c.gateway.model = g.value("model", c.gateway.model);
        c.gateway.temperature = g.value("temperature", c.gateway.temperature);
        c.gateway.max_in_flight = g.value("max_in_flight", c.gateway.max_in_flight);
        c.gateway.max_attempts = g.value("max_attempts", c.gateway.max_attempts);
        c.gateway.backoff = std::chrono::milliseconds(g.value("backoff_ms", 500));
        c.gateway.contract_retries = g.value("contract_retries", c.gateway.contract_retries);
        if (c.gateway.max_in_flight == 0 || c.gateway.max_attempts == 0) {
            throw error(errc::invalid_config, "gateway in-flight budget and attempts must be positive");
        }

        const auto p = j.value("provider", json::object());
        c.provider_mode = p.value("mode", c.provider_mode);
        if (c.provider_mode != "live" && c.provider_mode != "mock") {
            throw error(errc::invalid_config, "provider.mode must be live or mock");
        }
        c.transcript = resolve(base, p.value("transcript", ""));
        c.embedder = p.value("embedder", c.embedder);
        if (c.embedder != "hash" && c.embedder != "http") {
            throw error(errc::invalid_config, "provider.embedder must be hash or http");
        }
        c.embedding_model = p.value("embedding_model", c.embedding_model);
        c.embedding_dim = p.value("embedding_dim", c.embedding_dim);

        const json prices = j.value("prices", json::object());
        for (const auto& [model, price] : prices.items()) {
            c.prices[model] = Price{price.value("prompt_per_1k", 0.0), price.value("completion_per_1k", 0.0)};
        }
        const auto t = j.value("triplets", json::object());
        c.descriptions = resolve(base, t.value("descriptions", ""));
        c.patches = resolve(base, t.value("patches", ""));
        c.paired_negatives = t.value("paired", false);
        c.ground_truth = resolve(base, j.value("ground_truth", ""));
        c.workers = std::max(1u, j.value("workers", 4u));
        return c;
    } catch (const json::exception& e) {
        throw error(errc::invalid_config, e.what());
    }
}

PipelineConfig PipelineConfig::load(const fs::path& file)
{
    if (!fs::exists(file)) {
        throw error(errc::invalid_config, "config file not found: " + file.string());
    }
    json j;
    try {
        j = json::parse(read_text_file(file));
    } catch (const json::exception& e) {
        throw error(errc::invalid_config, file.string() + ": " + e.what());
    }
    return from_json(j, fs::absolute(file).parent_path());
}

Pipeline::Pipeline(PipelineConfig cfg, bool force_mock) : cfg_(std::move(cfg))
{
    std::shared_ptr<Provider> provider;
    std::shared_ptr<Embedder> embedder;
    if (force_mock || cfg_.provider_mode == "mock") {
        if (cfg_.transcript.empty()) {
            throw error(errc::invalid_config, "mock provider needs provider.transcript");
        }
        provider = MockProvider::from_file(cfg_.transcript);
        embedder = std::make_shared<HashEmbedder>(cfg_.embedding_dim);
    } else {
        auto http = HttpProvider::from_env();
        provider = http;
        if (cfg_.embedder == "http") {
            embedder = std::make_shared<HttpEmbedder>(http, cfg_.embedding_model);
        } else {
            embedder = std::make_shared<HashEmbedder>(cfg_.embedding_dim);
        }
    }
    // Derived here so a workspace override also moves the response cache.
    cfg_.gateway.cache_dir = cfg_.workspace / "cache" / "llm";
    gw_ = std::make_shared<LlmGateway>(cfg_.gateway, provider, embedder);
    gw_->ledger().set_prices(cfg_.prices);
    if (const auto ledger = path("ledger.json"); fs::exists(ledger)) {
        gw_->ledger().merge_json(read_json_file(ledger));
    }
}

const std::vector<ManifestItem>& Pipeline::artifact_manifest()
{
    static const std::vector<ManifestItem> items{
        {"rfc/documents.json", "RFC metadata: number, title, status, updates, obsoletes, publication date"},
        {"rfc/sections.jsonl", "one row per RFC section: heading, prose paragraphs, ASCII figures"},
        {"rfc/chunks.jsonl", "specification text chunks"},
        {"code/<tag>/index.json", "codebase summary: file and function counts"},
        {"code/<tag>/functions.jsonl", "extracted functions: signature, parameters, body span, doc comment, tier"},
        {"code/<tag>/files.jsonl", "selected protocol source files"},
        {"code/<tag>/chunks.jsonl", "code chunks"},
        {"code/<tag>/map.json", "chunk to function mapping, both directions"},
        {"graph/<tag>/graph.json", "knowledge graph: entities, weighted edges, communities"},
        {"graph/<tag>/extraction.json", "function and length extraction statistics"},
        {"spec/entries.jsonl", "functional entries per RFC section"},
        {"spec/chains.json", "update chain graph with per-edge functional deltas"},
        {"spec/increments.json", "verification increments in topological order"},
        {"triplets/triplets.jsonl", "differential triplets (spec, description, code, label)"},
        {"verify/<tag>.json", "verdicts with per-trial votes for one codebase"},
        {"verify/matrix.json", "verdict matrix, RFC rows by codebase columns"},
        {"verify/findings.json", "findings for not-implemented and unknown verdicts"},
        {"eval/eval.json", "confusion counts, metrics and per-cell outcomes against the ground truth"},
        {"eval/findings.json", "findings including ground-truth mismatches"},
        {"report/report.md", "human-readable report"},
        {"report/report.json", "machine-readable report"},
        {"cost/cost_model.json", "token cost model inputs and estimates"},
        {"ledger.json", "accumulated token usage and cost per model and phase"},
        {"run_stats.json", "per-stage wall-clock time and cache counters of the latest runs"},
        {"cache/", "content-addressed model response cache and per-document entity cache"},
    };
    return items;
}

std::vector<CodebaseConfig> Pipeline::selected(const std::string& tag) const
{
    if (tag.empty()) {
        return cfg_.codebases;
    }
    for (const auto& cb : cfg_.codebases) {
        if (cb.tag == tag) {
            return {cb};
        }
    }
    throw error(errc::invalid_config, "no codebase tagged " + tag);
}

fs::path Pipeline::require(const std::string& rel, const std::string& producer) const
{
    const fs::path p = path(rel);
    if (!fs::exists(p)) {
        throw error(errc::missing_artifact, rel + " not found in " + cfg_.workspace.string() + "; run " + producer +
                                                " first");
    }
    return p;
}

void Pipeline::persist_ledger() const
{
    write_json_file(path("ledger.json"), gw_->ledger().to_json());
}

template <typename Fn>
auto Pipeline::stage(const std::string& name, Fn&& fn)
{
    const auto before = gw_->stats();
    const auto t0 = std::chrono::steady_clock::now();
    const auto record = [&] {
        const auto after = gw_->stats();
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json stats = fs::exists(path("run_stats.json")) ? read_json_file(path("run_stats.json")) : json::object();
        stats["stages"][name] = {{"seconds", seconds},
                                 {"requests", after.requests - before.requests},
                                 {"cache_hits", after.cache_hits - before.cache_hits},
                                 {"provider_calls", after.provider_calls - before.provider_calls},
                                 {"provider_failures", after.provider_failures - before.provider_failures},
                                 {"contract_retries", after.contract_retries - before.contract_retries}};
        write_json_file(path("run_stats.json"), stats);
        persist_ledger();
        spdlog::info("{}: {:.2f}s, {} requests, {} cache hits, {} provider calls", name, seconds,
                     after.requests - before.requests, after.cache_hits - before.cache_hits,
                     after.provider_calls - before.provider_calls);
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record();
        } else {
            auto result = fn();
            record();
            return result;
        }
    } catch (...) {
        persist_ledger();
        throw;
    }
}

void Pipeline::ingest_rfc()
{
    stage("ingest-rfc", [&] {
        const auto docs = ingest_corpus(cfg_.rfc_manifest, cfg_.figures);
        write_rfc_artifacts(docs, path("rfc/sections.jsonl"), path("rfc/documents.json"));
        std::vector<Chunk> chunks;
        for (const auto& d : docs) {
            for (const auto& s : d.sections) {
                auto part = chunk_section(d.number, s, cfg_.chunk);
                chunks.insert(chunks.end(), part.begin(), part.end());
            }
        }
        write_chunks(path("rfc/chunks.jsonl"), chunks);
        spdlog::info("ingested {} RFCs, {} text chunks", docs.size(), chunks.size());
    });
}

void Pipeline::ingest_code(const std::string& tag)
{
    for (const auto& cb : selected(tag)) {
        stage("ingest-code:" + cb.tag, [&] {
            auto files = select_protocol_sources(cb.root, cfg_.source_filter, cb.tag);
            const auto index = build_codebase_index(cb.tag, std::move(files), cb.stubs, cfg_.workers);
            const std::string dir = "code/" + cb.tag;
            write_code_artifacts(index, path(dir));
            std::vector<Chunk> chunks;
            ChunkFunctionMap map;
            for (const auto& file : index.files) {
                std::vector<const CodeFunction*> fns;
                for (const auto& f : index.functions) {
                    if (f.file == file.path) {
                        fns.push_back(&f);
                    }
                }
                const auto part = chunk_source_file(file, fns, cfg_.chunk);
                map.merge(build_map(part, fns, tokenize(file.content)));
                chunks.insert(chunks.end(), part.begin(), part.end());
            }
            write_chunks(path(dir + "/chunks.jsonl"), chunks);
            write_json_file(path(dir + "/map.json"), map.to_json());
            spdlog::info("{}: {} files, {} functions, {} chunks", cb.tag, index.files.size(), index.functions.size(),
                         chunks.size());
        });
    }
}

void Pipeline::build_graph(const std::string& tag)
{
    const auto text_path = require("rfc/chunks.jsonl", "ingest-rfc");
    for (const auto& cb : selected(tag)) {
        stage("build-graph:" + cb.tag, [&] {
            const std::string dir = "code/" + cb.tag;
            require(dir + "/index.json", "ingest-code");
            const auto index = read_code_artifacts(path(dir));
            const auto map = ChunkFunctionMap::from_json(read_json_file(require(dir + "/map.json", "ingest-code")));
            GraphSources src;
            src.text_chunks = read_chunks(text_path);
            src.code_chunks = read_chunks(require(dir + "/chunks.jsonl", "ingest-code"));
            src.map = &map;
            src.index = &index;
            const GraphCache cache(path("cache/graph"));
            const auto g = deltaspec::build_graph(src, *gw_, &cache, cfg_.workers);
            write_json_file(path("graph/" + cb.tag + "/graph.json"), g.to_json());

            std::map<int, std::set<std::string>> by_rfc;
            for (const auto& c : src.text_chunks) {
                if (c.origin.rfind("rfc", 0) == 0) {
                    by_rfc[std::stoi(c.origin.substr(3))].insert(c.id);
                }
            }
            std::map<int, std::vector<std::string>> selection;
            for (const auto& [rfc, ids] : by_rfc) {
                auto& sel = selection[rfc];
                if (!g.empty()) {
                    for (const auto& hit : retrieve_code_for_chunks(ids, g, cfg_.verifier.candidate_budget,
                                                                    cfg_.verifier.community_damping)) {
                        sel.push_back(hit.function_id);
                    }
                }
            }
            write_json_file(path("graph/" + cb.tag + "/extraction.json"),
                            extraction_json(compute_extraction_stats(index, selection)));
        });
    }
}

void Pipeline::build_chains()
{
    stage("build-chains", [&] {
        const auto docs = read_rfc_artifacts(require("rfc/sections.jsonl", "ingest-rfc"),
                                             require("rfc/documents.json", "ingest-rfc"));
        auto chain = build_update_chain(docs);
        std::map<int, std::vector<FunctionalEntry>> entries;
        std::vector<json> rows;
        for (const auto& d : docs) {
            if (!std::binary_search(chain.nodes.begin(), chain.nodes.end(), d.number)) {
                continue;
            }
            entries[d.number] = extract_functional_entries(d, *gw_, cfg_.workers);
            for (const auto& e : entries[d.number]) {
                rows.push_back(to_json(e));
            }
        }
        write_jsonl_file(path("spec/entries.jsonl"), rows);
        std::vector<FunctionalDelta> deltas(chain.edges.size());
        parallel_for(chain.edges.size(), cfg_.workers, [&](std::size_t i) {
            const auto& e = chain.edges[i];
            deltas[i] = diff_functional_entries(entries[e.from], entries[e.to], *gw_, cfg_.diff);
        });
        for (std::size_t i = 0; i < chain.edges.size(); ++i) {
            chain.deltas[{chain.edges[i].from, chain.edges[i].to}] = std::move(deltas[i]);
        }
        write_json_file(path("spec/chains.json"), chain.to_json());
        json inc = json::array();
        for (const auto& i : enumerate_increments(chain)) {
            inc.push_back(i.to_json());
        }
        write_json_file(path("spec/increments.json"), inc);
    });
}

void Pipeline::synth_triplets()
{
    stage("synth-triplets", [&] {
        TripletStore store;
        if (!cfg_.descriptions.empty()) {
            const auto recs = read_description_records(cfg_.descriptions);
            std::vector<DifferentialTriplet> out(recs.size());
            parallel_for(recs.size(), cfg_.workers, [&](std::size_t i) { out[i] = synth_positive(recs[i], *gw_); });
            for (auto& t : out) {
                store.add(std::move(t));
            }
        }
        if (!cfg_.patches.empty()) {
            const auto recs = read_patch_records(cfg_.patches);
            std::vector<std::vector<DifferentialTriplet>> out(recs.size());
            parallel_for(recs.size(), cfg_.workers,
                         [&](std::size_t i) { out[i] = synth_negative(recs[i], *gw_, cfg_.paired_negatives); });
            for (auto& ts : out) {
                for (auto& t : ts) {
                    store.add(std::move(t));
                }
            }
        }
        if (store.empty()) {
            spdlog::warn("no triplet corpora configured; verification will run zero-shot");
        }
        store.save(path("triplets/triplets.jsonl"));
    });
}

VerdictMatrix Pipeline::verify(const std::string& tag)
{
    return stage("verify", [&] {
        const auto chain = UpdateChainGraph::from_json(read_json_file(require("spec/chains.json", "build-chains")));
        std::vector<Increment> increments;
        for (const auto& i : read_json_file(require("spec/increments.json", "build-chains"))) {
            increments.push_back(Increment::from_json(i));
        }
        const auto entries = read_entries(require("spec/entries.jsonl", "build-chains"));
        const auto store = TripletStore::load(require("triplets/triplets.jsonl", "synth-triplets"));

        for (const auto& cb : selected(tag)) {
            const std::string dir = "code/" + cb.tag;
            const auto graph = KnowledgeGraph::from_json(
                read_json_file(require("graph/" + cb.tag + "/graph.json", "build-graph")));
            const auto map = ChunkFunctionMap::from_json(read_json_file(require(dir + "/map.json", "ingest-code")));
            ChunkStore chunks;
            for (auto& c : read_chunks(require(dir + "/chunks.jsonl", "ingest-code"))) {
                auto id = c.id;
                chunks.emplace(std::move(id), std::move(c));
            }
            const CodeLookup lookup = [&](const std::string& fid) { return reconstruct_function(fid, map, chunks); };
            const auto row =
                verify_chain(chain, increments, entries, cb.tag, graph, lookup, store, *gw_, cfg_.verifier);
            json cells = json::array();
            for (const auto& [rfc, v] : row) {
                cells.push_back({{"rfc", rfc}, {"verdict", v.to_json()}});
            }
            write_json_file(path("verify/" + cb.tag + ".json"), {{"version", cb.tag}, {"verdicts", cells}});
        }

        VerdictMatrix m;
        m.rfcs = chain.nodes;
        for (const auto& cb : cfg_.codebases) {
            const auto p = path("verify/" + cb.tag + ".json");
            if (!fs::exists(p)) {
                continue;
            }
            m.versions.push_back(cb.tag);
            for (auto& [rfc, v] : read_row(p)) {
                m.cells[{rfc, cb.tag}] = std::move(v);
            }
        }
        write_json_file(path("verify/matrix.json"), m.to_json());
        json findings = json::array();
        for (const auto& f : compile_findings(m, std::nullopt, cfg_.verifier.vulnerability_classes).findings) {
            findings.push_back(f.to_json());
        }
        write_json_file(path("verify/findings.json"), findings);
        return m;
    });
}

Metrics Pipeline::eval()
{
    return stage("eval", [&] {
        const auto m = VerdictMatrix::from_json(read_json_file(require("verify/matrix.json", "verify")));
        if (cfg_.ground_truth.empty()) {
            throw error(errc::invalid_config, "eval needs ground_truth in the config");
        }
        const auto truth = GroundTruth::from_json(read_json_file(cfg_.ground_truth));
        const auto rep = compile_findings(m, truth, cfg_.verifier.vulnerability_classes);
        const Metrics metrics = compute_metrics(*rep.confusion);
        json outcomes = json::array();
        for (const auto& [cell, outcome] : rep.outcomes) {
            outcomes.push_back({{"rfc", cell.first}, {"version", cell.second}, {"outcome", outcome}});
        }
        const auto& c = *rep.confusion;
        write_json_file(path("eval/eval.json"), {{"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}},
                                                 {"metrics", metrics.to_json()},
                                                 {"outcomes", outcomes}});
        json findings = json::array();
        for (const auto& f : rep.findings) {
            findings.push_back(f.to_json());
        }
        write_json_file(path("eval/findings.json"), findings);
        return metrics;
    });
}

RenderedReport Pipeline::report()
{
    return stage("report", [&] {
        ReportInputs in;
        in.matrix = VerdictMatrix::from_json(read_json_file(require("verify/matrix.json", "verify")));
        if (fs::exists(path("eval/eval.json")) && !cfg_.ground_truth.empty()) {
            const auto truth = GroundTruth::from_json(read_json_file(cfg_.ground_truth));
            in.findings = compile_findings(in.matrix, truth, cfg_.verifier.vulnerability_classes);
            in.metrics = compute_metrics(*in.findings.confusion);
        } else {
            in.findings = compile_findings(in.matrix, std::nullopt, cfg_.verifier.vulnerability_classes);
        }
        for (const auto& cb : cfg_.codebases) {
            const auto p = path("graph/" + cb.tag + "/extraction.json");
            if (fs::exists(p)) {
                in.extraction[cb.tag] = extraction_from_json(read_json_file(p));
            }
        }
        in.ledger = gw_->ledger().to_json();
        in.model = cfg_.gateway.model;
        if (fs::exists(path("run_stats.json"))) {
            double total = 0;
            const json stages = read_json_file(path("run_stats.json")).value("stages", json::object());
            for (const auto& [_, s] : stages.items()) {
                total += s.value("seconds", 0.0);
            }
            in.wall_seconds = total;
        }
        for (const auto& item : artifact_manifest()) {
            if (item.path.find("<tag>") == std::string::npos) {
                in.manifest.push_back(item);
                continue;
            }
            for (const auto& cb : cfg_.codebases) {
                auto p = item.path;
                p.replace(p.find("<tag>"), 5, cb.tag);
                in.manifest.push_back({p, item.description});
            }
        }
        auto out = render_report(in);
        write_text_file(path("report/report.md"), out.markdown);
        write_json_file(path("report/report.json"), out.machine);
        return out;
    });
}

CostEstimate Pipeline::cost_model(const std::optional<CostModelInputs>& inputs, const std::string& tag)
{
    return stage("cost-model", [&] {
        CostModelInputs in;
        if (inputs) {
            in = *inputs;
        } else {
            const auto cbs = selected(tag);
            if (cbs.empty()) {
                throw error(errc::invalid_config, "no codebase configured");
            }
            const auto& cb = cbs.front();
            const auto docs = read_rfc_artifacts(require("rfc/sections.jsonl", "ingest-rfc"),
                                                 require("rfc/documents.json", "ingest-rfc"));
            const auto chain =
                UpdateChainGraph::from_json(read_json_file(require("spec/chains.json", "build-chains")));
            std::map<int, const RfcDocument*> by_number;
            for (const auto& d : docs) {
                by_number[d.number] = &d;
            }
            const auto doc_tokens = [](const RfcDocument& d) {
                std::size_t n = 0;
                for (const auto& s : d.sections) {
                    n += s.token_count;
                }
                return n;
            };
            in.n = static_cast<long long>(chain.nodes.size());
            double len = 0;
            for (int rfc : chain.nodes) {
                len += static_cast<double>(doc_tokens(*by_number.at(rfc)));
            }
            in.len_rfc = in.n == 0 ? 0 : std::llround(len / static_cast<double>(in.n));

            require("code/" + cb.tag + "/index.json", "ingest-code");
            const auto index = read_code_artifacts(path("code/" + cb.tag));
            long long m = 0;
            for (const auto& f : index.files) {
                m += static_cast<long long>(f.token_count);
            }
            in.m = m;

            double dlen = 0;
            std::size_t n_inc = 0;
            for (const auto& i : read_json_file(require("spec/increments.json", "build-chains"))) {
                const auto inc = Increment::from_json(i);
                std::set<std::string> sections;
                for (const auto& t : inc.targets) {
                    sections.insert(t.section);
                }
                std::size_t tokens = 0;
                for (const auto& s : sections) {
                    if (const auto* sec = by_number.at(inc.to)->find_section(s)) {
                        tokens += sec->token_count;
                    }
                }
                dlen += static_cast<double>(tokens);
                ++n_inc;
            }
            in.delta_len = n_inc == 0 ? 0 : std::llround(dlen / static_cast<double>(n_inc));

            double dm = 0;
            std::size_t n_cells = 0;
            for (const auto& [rfc, v] : read_row(require("verify/" + cb.tag + ".json", "verify"))) {
                if (v.mode == "inherited") {
                    continue;
                }
                std::size_t tokens = 0;
                for (const auto& id : v.candidates) {
                    if (const auto* f = index.find(id)) {
                        tokens += f->token_count;
                    }
                }
                dm += static_cast<double>(tokens);
                ++n_cells;
            }
            in.delta_m = n_cells == 0 ? 0 : std::llround(dm / static_cast<double>(n_cells));
        }
        const auto est = deltaspec::cost_model(in);
        write_json_file(path("cost/cost_model.json"), {{"inputs", in.to_json()}, {"estimate", est.to_json()}});
        return est;
    });
}

void Pipeline::run_all(const std::string& tag)
{
    ingest_rfc();
    ingest_code(tag);
    build_graph(tag);
    build_chains();
    synth_triplets();
    verify(tag);
    if (!cfg_.ground_truth.empty()) {
        eval();
    }
    report();
}

}  // namespace deltaspec
