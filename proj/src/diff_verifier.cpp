#include "deltaspec/diff_verifier.hpp"

#include <algorithm>
#include <set>

#include "deltaspec/tokenizer.hpp"

namespace deltaspec {

std::string_view to_string(VerdictValue v) noexcept
{
    switch (v) {
    case VerdictValue::implemented: return "implemented";
    case VerdictValue::not_implemented: return "not-implemented";
    case VerdictValue::unknown: return "unknown";
    }
    return "unknown";
}

VerdictValue verdict_from_string(std::string_view s)
{
    if (s == "implemented") return VerdictValue::implemented;
    if (s == "not-implemented") return VerdictValue::not_implemented;
    if (s == "unknown") return VerdictValue::unknown;
    throw error(errc::serialization_error, "unknown verdict " + std::string(s));
}

std::string_view matrix_label(VerdictValue v) noexcept
{
    switch (v) {
    case VerdictValue::implemented: return "True";
    case VerdictValue::not_implemented: return "False";
    case VerdictValue::unknown: return "Unknown";
    }
    return "Unknown";
}

VerdictValue majority(const std::vector<VerdictValue>& votes)
{
    const auto yes = std::count(votes.begin(), votes.end(), VerdictValue::implemented);
    const auto no = std::count(votes.begin(), votes.end(), VerdictValue::not_implemented);
    const auto n = static_cast<long>(votes.size());
    if (2 * yes > n) {
        return VerdictValue::implemented;
    }
    if (2 * no > n) {
        return VerdictValue::not_implemented;
    }
    return VerdictValue::unknown;
}

json Verdict::to_json() const
{
    json ts = json::array();
    for (const auto& t : trials) {
        ts.push_back({{"value", std::string(deltaspec::to_string(t.value))},
                      {"ir", t.ir},
                      {"rationale", t.rationale},
                      {"cited", t.cited}});
    }
    return json{{"value", std::string(deltaspec::to_string(value))},
                {"label", std::string(matrix_label(value))},
                {"trials", ts},
                {"vote_counts", vote_counts},
                {"mode", mode},
                {"predecessor", predecessor},
                {"candidates", candidates},
                {"truncated", truncated},
                {"zero_shot", zero_shot}};
}

Verdict Verdict::from_json(const json& j)
{
    Verdict v;
    v.value = verdict_from_string(j.at("value").get<std::string>());
    for (const auto& t : j.value("trials", json::array())) {
        v.trials.push_back({verdict_from_string(t.at("value").get<std::string>()), t.value("ir", ""),
                            t.value("rationale", ""), t.value("cited", std::vector<std::string>{})});
    }
    v.vote_counts = j.value("vote_counts", std::map<std::string, int>{});
    v.mode = j.value("mode", "increment");
    v.predecessor = j.value("predecessor", 0);
    v.candidates = j.value("candidates", std::vector<std::string>{});
    v.truncated = j.value("truncated", false);
    v.zero_shot = j.value("zero_shot", false);
    return v;
}

void VerifierConfig::validate() const
{
    if (trials == 0 || trials % 2 == 0) {
        throw error(errc::invalid_config, "trial count must be odd and positive");
    }
    if (candidate_budget == 0) {
        throw error(errc::invalid_config, "candidate budget must be positive");
    }
    retrieval.validate();
}

std::string CodeContext::render() const
{
    std::string out;
    for (const auto& [id, text] : functions) {
        out += "// " + id + "\n" + text + "\n\n";
    }
    return out;
}

CodeContext build_code_context(const std::vector<RetrievalHit>& candidates, const CodeLookup& code,
                               std::size_t token_budget)
{
    CodeContext ctx;
    std::size_t used = 0;
    for (const auto& hit : candidates) {
        std::string text = code(hit.function_id);
        const std::size_t n = count_tokens(text);
        if (used + n > token_budget) {
            ctx.truncated = true;
            continue;
        }
        used += n;
        ctx.functions.emplace_back(hit.function_id, std::move(text));
    }
    return ctx;
}

std::string describe_targets(const std::vector<FunctionalEntry>& targets)
{
    std::string out;
    for (const auto& e : targets) {
        out += "- [RFC " + std::to_string(e.rfc) + " section " + e.section + "] " + e.title + ": " + e.summary + "\n";
    }
    return out;
}

json verdict_contract_schema()
{
    return json{{"type", "object"},
                {"required", {"verdict", "rationale"}},
                {"properties",
                 {{"verdict", {{"enum", {"implemented", "not-implemented", "unknown"}}}},
                  {"rationale", {{"type", "string"}}},
                  {"cited_functions", {{"type", "array"}, {"items", {{"type", "string"}}}}}}}};
}

std::string generate_intermediate_repr(const std::vector<FunctionalEntry>& targets, const CodeContext& code,
                                       const std::vector<DifferentialTriplet>& exemplars, LlmGateway& gw,
                                       unsigned trial, bool* zero_shot)
{
    std::string shots;
    for (const auto& ex : exemplars) {
        shots += "Specification:\n" + ex.spec_text + "\nCode:\n" + ex.code + "\nDescription (" +
                 std::string(to_string(ex.label)) + "):\n" + ex.intermediate_repr + "\n---\n";
    }
    if (zero_shot != nullptr) {
        *zero_shot = exemplars.empty();
    }
    std::string user;
    if (!shots.empty()) {
        user += "Examples, simplest first:\n" + shots + "\n";
    }
    user += "Functionality to implement:\n" + describe_targets(targets) + "\nCandidate code:\n" + code.render() +
            "\nTrial " + std::to_string(trial + 1);
    const auto resp = gw.complete(gw.make_request(
        phase::reasoning,
        {{"system",
          "Describe in imperative natural language what code implementing the functionality below must do, "
          "at the level of the candidate code."},
         {"user", user}}));
    const auto text = trim(resp.text);
    if (text.empty()) {
        throw error(errc::empty_response, "blank intermediate representation");
    }
    return std::string(text);
}

namespace {

void finalize(Verdict& v)
{
    std::vector<VerdictValue> votes;
    v.vote_counts.clear();
    for (const auto& t : v.trials) {
        votes.push_back(t.value);
        ++v.vote_counts[std::string(to_string(t.value))];
    }
    v.value = majority(votes);
}

}  // namespace

Verdict verify_increment(const VerificationTask& task, const CodeContext& code, const TripletStore& store,
                         LlmGateway& gw, const VerifierConfig& cfg)
{
    cfg.validate();
    if (task.targets.empty()) {
        throw error(errc::precondition, "verification task for RFC " + std::to_string(task.rfc_to) + " has no targets");
    }
    Verdict v;
    v.mode = task.whole_rfc ? "whole-rfc" : "increment";
    v.predecessor = task.rfc_from;
    for (const auto& c : task.candidates) {
        v.candidates.push_back(c.function_id);
    }
    v.truncated = code.truncated;
    const std::set<std::string> allowed(v.candidates.begin(), v.candidates.end());

    const std::string targets = describe_targets(task.targets);
    const std::string rendered = code.render();
    const std::string header = task.whole_rfc
                                   ? "RFC " + std::to_string(task.rfc_to) + " (whole document)"
                                   : "RFC " + std::to_string(task.rfc_to) + " relative to RFC " +
                                         std::to_string(task.rfc_from);
    try {
        const auto exemplars =
            store.empty() ? std::vector<DifferentialTriplet>{} : retrieve_exemplars(targets, rendered, store, cfg.retrieval, gw);
        for (unsigned t = 0; t < cfg.trials; ++t) {
            Trial trial;
            bool zero_shot = false;
            trial.ir = generate_intermediate_repr(task.targets, code, exemplars, gw, t, &zero_shot);
            v.zero_shot = zero_shot;
            const std::string user = header + ", code version " + task.code_version + "\n\nFunctionality:\n" +
                                     targets + "\nExpected behavior:\n" + trial.ir + "\n\nCandidate code:\n" +
                                     rendered + "\nTrial " + std::to_string(t + 1) + " of " +
                                     std::to_string(cfg.trials);
            const auto resp = gw.complete(gw.make_request(
                phase::reasoning,
                {{"system",
                  "Decide whether the candidate code implements the functionality. Reply with JSON "
                  "{\"verdict\": \"implemented\" | \"not-implemented\" | \"unknown\", \"rationale\", "
                  "\"cited_functions\": [function ids]}."},
                 {"user", user}},
                Contract{"verdict", verdict_contract_schema()}));
            trial.value = verdict_from_string(resp.value.at("verdict").get<std::string>());
            trial.rationale = resp.value.value("rationale", "");
            for (const auto& c : resp.value.value("cited_functions", std::vector<std::string>{})) {
                if (allowed.contains(c) &&
                    std::find(trial.cited.begin(), trial.cited.end(), c) == trial.cited.end()) {
                    trial.cited.push_back(c);
                }
            }
            v.trials.push_back(std::move(trial));
        }
    } catch (const error& e) {
        finalize(v);
        throw verification_aborted("verification of " + header + " on " + task.code_version + " aborted: " + e.what(),
                                   v);
    }
    finalize(v);
    return v;
}

const Verdict* VerdictMatrix::cell(int rfc, const std::string& version) const
{
    const auto it = cells.find({rfc, version});
    return it == cells.end() ? nullptr : &it->second;
}

json VerdictMatrix::to_json() const
{
    json rows = json::array();
    for (int r : rfcs) {
        json row{{"rfc", r}, {"cells", json::object()}};
        for (const auto& v : versions) {
            if (const Verdict* c = cell(r, v)) {
                row["cells"][v] = c->to_json();
            }
        }
        rows.push_back(std::move(row));
    }
    return json{{"rfcs", rfcs}, {"versions", versions}, {"rows", rows}};
}

VerdictMatrix VerdictMatrix::from_json(const json& j)
{
    VerdictMatrix m;
    m.rfcs = j.at("rfcs").get<std::vector<int>>();
    m.versions = j.at("versions").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
        const int r = row.at("rfc").get<int>();
        for (const auto& [v, cell] : row.at("cells").items()) {
            m.cells[{r, v}] = Verdict::from_json(cell);
        }
    }
    return m;
}

std::map<int, Verdict> verify_chain(const UpdateChainGraph& chain, const std::vector<Increment>& increments,
                                    const std::map<int, std::vector<FunctionalEntry>>& entries,
                                    const std::string& version, const KnowledgeGraph& graph, const CodeLookup& code,
                                    const TripletStore& store, LlmGateway& gw, const VerifierConfig& cfg)
{
    std::map<int, Verdict> row;
    for (int rfc : chain.topological_order()) {
        VerificationTask task;
        task.rfc_to = rfc;
        task.code_version = version;
        const auto preds = chain.predecessors(rfc);
        if (preds.empty()) {
            task.whole_rfc = true;
            const auto it = entries.find(rfc);
            if (it != entries.end()) {
                task.targets = it->second;
            }
        } else {
            task.rfc_from = *std::min_element(preds.begin(), preds.end());
            for (const auto& inc : increments) {
                if (inc.to == rfc) {
                    task.targets.insert(task.targets.end(), inc.targets.begin(), inc.targets.end());
                }
            }
        }
        if (task.targets.empty()) {
            Verdict v;
            if (!task.whole_rfc) {
                v = row.at(task.rfc_from);
            }
            v.mode = "inherited";
            v.predecessor = task.rfc_from;
            row[rfc] = std::move(v);
            continue;
        }
        std::vector<std::string> concepts;
        for (const auto& e : task.targets) {
            concepts.insert(concepts.end(), e.concepts.begin(), e.concepts.end());
            concepts.push_back(e.title);
        }
        task.candidates = graph.empty()
                              ? std::vector<RetrievalHit>{}
                              : retrieve_code_for_spec(concepts, graph, cfg.candidate_budget, cfg.community_damping);
        const CodeContext ctx = build_code_context(task.candidates, code, cfg.code_token_budget);
        row[rfc] = verify_increment(task, ctx, store, gw, cfg);
    }
    return row;
}

json Finding::to_json() const
{
    return json{{"system", system},
                {"rfc", rfc},
                {"description", description},
                {"vulnerability_class", vulnerability_class},
                {"evidence", evidence},
                {"unknown_verdict", unknown_verdict},
                {"mismatch", mismatch}};
}

Finding Finding::from_json(const json& j)
{
    Finding f;
    f.system = j.at("system").get<std::string>();
    f.rfc = j.at("rfc").get<int>();
    f.description = j.value("description", "");
    f.vulnerability_class = j.value("vulnerability_class", "");
    f.evidence = j.value("evidence", std::vector<std::string>{});
    f.unknown_verdict = j.value("unknown_verdict", false);
    f.mismatch = j.value("mismatch", "");
    return f;
}

GroundTruth GroundTruth::from_json(const json& j)
{
    GroundTruth g;
    g.rfcs = j.at("rfcs").get<std::vector<int>>();
    g.versions = j.at("versions").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
        const int r = row.at("rfc").get<int>();
        for (const auto& [v, label] : row.at("cells").items()) {
            const std::string s = label.get<std::string>();
            if (s != "consistent" && s != "inconsistent") {
                throw error(errc::serialization_error, "ground truth label must be consistent/inconsistent: " + s);
            }
            g.inconsistent[{r, v}] = s == "inconsistent";
        }
    }
    return g;
}

json GroundTruth::to_json() const
{
    json rows = json::array();
    for (int r : rfcs) {
        json cells = json::object();
        for (const auto& v : versions) {
            const auto it = inconsistent.find({r, v});
            if (it != inconsistent.end()) {
                cells[v] = it->second ? "inconsistent" : "consistent";
            }
        }
        rows.push_back({{"rfc", r}, {"cells", cells}});
    }
    return json{{"rfcs", rfcs}, {"versions", versions}, {"rows", rows}};
}

FindingsReport compile_findings(const VerdictMatrix& matrix, const std::optional<GroundTruth>& truth,
                                const std::map<int, std::string>& vulnerability_classes)
{
    FindingsReport report;
    if (truth) {
        const std::set<int> mr(matrix.rfcs.begin(), matrix.rfcs.end());
        const std::set<int> tr(truth->rfcs.begin(), truth->rfcs.end());
        const std::set<std::string> mv(matrix.versions.begin(), matrix.versions.end());
        const std::set<std::string> tv(truth->versions.begin(), truth->versions.end());
        if (mr != tr || mv != tv || truth->inconsistent.size() != mr.size() * mv.size()) {
            throw error(errc::shape_mismatch, "ground truth is " + std::to_string(tr.size()) + "x" +
                                                  std::to_string(tv.size()) + ", matrix is " +
                                                  std::to_string(mr.size()) + "x" + std::to_string(mv.size()));
        }
        report.confusion = Confusion{};
    }
    for (const auto& version : matrix.versions) {
        for (int rfc : matrix.rfcs) {
            const Verdict* v = matrix.cell(rfc, version);
            if (v == nullptr) {
                throw error(errc::shape_mismatch, "matrix has no cell for RFC " + std::to_string(rfc) + " / " + version);
            }
            const bool positive = v->value != VerdictValue::implemented;
            std::string mismatch;
            if (truth) {
                const bool actual = truth->inconsistent.at({rfc, version});
                std::string outcome;
                if (positive && actual) {
                    ++report.confusion->tp;
                    outcome = "TP";
                } else if (positive && !actual) {
                    ++report.confusion->fp;
                    outcome = "FP";
                    mismatch = "false-positive";
                } else if (!positive && actual) {
                    ++report.confusion->fn;
                    outcome = "FN";
                    mismatch = "false-negative";
                } else {
                    ++report.confusion->tn;
                    outcome = "TN";
                }
                report.outcomes[{rfc, version}] = outcome;
            }
            if (!positive && mismatch.empty()) {
                continue;
            }
            Finding f;
            f.system = version;
            f.rfc = rfc;
            f.unknown_verdict = v->value == VerdictValue::unknown;
            f.mismatch = mismatch;
            const auto cls = vulnerability_classes.find(rfc);
            f.vulnerability_class = cls == vulnerability_classes.end() ? "protocol nonconformance" : cls->second;
            std::set<std::string> cited;
            std::string rationale;
            for (const auto& t : v->trials) {
                if (t.value == v->value || (v->value == VerdictValue::unknown && t.value != VerdictValue::implemented)) {
                    cited.insert(t.cited.begin(), t.cited.end());
                    if (rationale.empty()) {
                        rationale = t.rationale;
                    }
                }
            }
            f.evidence.assign(cited.begin(), cited.end());
            if (f.evidence.empty()) {
                for (std::size_t i = 0; i < v->candidates.size() && i < 3; ++i) {
                    f.evidence.push_back(v->candidates[i]);
                }
            }
            f.description = std::string(matrix_label(v->value)) + " verdict for RFC " + std::to_string(rfc) + " on " +
                             version + (v->mode == "inherited" ? " (inherited)" : "") +
                             (rationale.empty() ? std::string() : ": " + rationale);
            report.findings.push_back(std::move(f));
        }
    }
    return report;
}

}  // namespace deltaspec
