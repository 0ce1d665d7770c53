#include "deltaspec/report.hpp"

#include <cstdio>
#include <sstream>

#include "deltaspec/json_schema.hpp"

namespace deltaspec {

json Metrics::to_json() const
{
    return json{{"accuracy", accuracy},
                {"precision", precision},
                {"recall", recall},
                {"f1", f1},
                {"precision_degenerate", precision_degenerate},
                {"recall_degenerate", recall_degenerate},
                {"total", total}};
}

Metrics compute_metrics(const Confusion& c)
{
    Metrics m;
    m.total = c.total();
    if (m.total == 0) {
        throw error(errc::empty_eval, "confusion has no data points");
    }
    const auto d = [](std::size_t x) { return static_cast<double>(x); };
    m.accuracy = d(c.tp + c.tn) / d(m.total);
    m.precision_degenerate = c.tp + c.fp == 0;
    m.recall_degenerate = c.tp + c.fn == 0;
    m.precision = m.precision_degenerate ? 0.0 : d(c.tp) / d(c.tp + c.fp);
    m.recall = m.recall_degenerate ? 0.0 : d(c.tp) / d(c.tp + c.fn);
    m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

void CostModelInputs::validate() const
{
    if (n < 0 || len_rfc < 0 || m < 0 || delta_len < 0 || delta_m < 0) {
        throw error(errc::invalid_inputs, "cost-model inputs must be nonnegative");
    }
    if (delta_len > len_rfc) {
        throw error(errc::invalid_inputs, "incremental RFC size exceeds the RFC length");
    }
    if (delta_m > m) {
        throw error(errc::invalid_inputs, "affected code size exceeds the codebase size");
    }
}

json CostModelInputs::to_json() const
{
    return json{{"N", n}, {"Len_RFC", len_rfc}, {"M", m}, {"dLen_RFC", delta_len}, {"dM", delta_m}};
}

json CostEstimate::to_json() const
{
    return json{{"naive", naive}, {"reasoning", reasoning}, {"graph", graph}, {"total", total}, {"delta", delta}};
}

CostEstimate cost_model(const CostModelInputs& in)
{
    in.validate();
    CostEstimate e;
    e.naive = in.n * (in.len_rfc + in.m);
    e.reasoning = in.n * (in.delta_len + in.delta_m);
    e.graph = in.n * in.len_rfc + in.m;
    e.total = e.reasoning + e.graph;
    e.delta = e.naive - e.total;
    return e;
}

std::string percent1(double fraction)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
    return buf;
}

namespace {

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string md_escape(std::string s)
{
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
}

std::string outcome_of(const FindingsReport& f, int rfc, const std::string& version)
{
    const auto it = f.outcomes.find({rfc, version});
    return it == f.outcomes.end() ? "" : it->second;
}

json string_array() { return json{{"type", "array"}, {"items", {{"type", "string"}}}}; }

}  // namespace

json report_schema()
{
    const json verdict_cell{{"type", "object"},
                            {"required", {"value", "label", "trials", "vote_counts", "mode"}},
                            {"properties",
                             {{"value", {{"enum", {"implemented", "not-implemented", "unknown"}}}},
                              {"label", {{"enum", {"True", "False", "Unknown"}}}},
                              {"trials", {{"type", "array"}}},
                              {"vote_counts", {{"type", "object"}}},
                              {"mode", {{"enum", {"increment", "whole-rfc", "inherited"}}}}}}};
    const json matrix{
        {"type", "object"},
        {"required", {"rfcs", "versions", "rows"}},
        {"properties",
         {{"rfcs", {{"type", "array"}, {"items", {{"type", "integer"}}}}},
          {"versions", string_array()},
          {"rows",
           {{"type", "array"},
            {"items",
             {{"type", "object"},
              {"required", {"rfc", "cells"}},
              {"properties",
               {{"rfc", {{"type", "integer"}}},
                {"cells", {{"type", "object"}, {"additionalProperties", true}}}}}}}}}}}};
    const json finding{{"type", "object"},
                       {"required", {"system", "rfc", "description", "vulnerability_class", "evidence",
                                     "unknown_verdict", "mismatch"}},
                       {"properties",
                        {{"system", {{"type", "string"}, {"minLength", 1}}},
                         {"rfc", {{"type", "integer"}, {"minimum", 1}}},
                         {"description", {{"type", "string"}}},
                         {"vulnerability_class", {{"type", "string"}}},
                         {"evidence", string_array()},
                         {"unknown_verdict", {{"type", "boolean"}}},
                         {"mismatch", {{"enum", {"", "false-positive", "false-negative"}}}}}}};
    const json flag{{"type", "object"},
                    {"required", {"rfc", "version", "reason"}},
                    {"properties",
                     {{"rfc", {{"type", "integer"}}},
                      {"version", {{"type", "string"}}},
                      {"reason", {{"enum", {"unknown", "false-positive", "false-negative"}}}}}}};
    const json extraction_row{{"type", "object"},
                              {"required", {"TF", "TL", "SF", "SL", "FER", "LER", "rfc_count"}},
                              {"properties",
                               {{"TF", {{"type", "integer"}, {"minimum", 0}}},
                                {"TL", {{"type", "integer"}, {"minimum", 0}}},
                                {"SF", {{"type", "number"}, {"minimum", 0}}},
                                {"SL", {{"type", "number"}, {"minimum", 0}}},
                                {"FER", {{"type", "number"}, {"minimum", 0}}},
                                {"LER", {{"type", "number"}, {"minimum", 0}}},
                                {"rfc_count", {{"type", "integer"}, {"minimum", 0}}}}}};
    const json rate{{"type", "number"}, {"minimum", 0}, {"maximum", 1}};
    const json metrics{{"type", {"object", "null"}},
                       {"required", {"accuracy", "precision", "recall", "f1", "total"}},
                       {"properties",
                        {{"accuracy", rate},
                         {"precision", rate},
                         {"recall", rate},
                         {"f1", rate},
                         {"precision_degenerate", {{"type", "boolean"}}},
                         {"recall_degenerate", {{"type", "boolean"}}},
                         {"total", {{"type", "integer"}, {"minimum", 1}}}}}};
    const json count{{"type", "integer"}, {"minimum", 0}};
    const json confusion{{"type", {"object", "null"}},
                         {"required", {"tp", "fp", "tn", "fn"}},
                         {"properties", {{"tp", count}, {"fp", count}, {"tn", count}, {"fn", count}}}};
    const json usage{{"type", "object"},
                     {"required", {"models", "phases", "token_graph", "token_reasoning", "token_total", "cost"}},
                     {"properties",
                      {{"models", {{"type", "object"}}},
                       {"phases", {{"type", "object"}}},
                       {"token_graph", count},
                       {"token_reasoning", count},
                       {"token_total", count},
                       {"cost", {{"type", "number"}, {"minimum", 0}}}}}};
    const json manifest{{"type", "array"},
                        {"items",
                         {{"type", "object"},
                          {"required", {"path", "description"}},
                          {"properties",
                           {{"path", {{"type", "string"}, {"minLength", 1}}},
                            {"description", {{"type", "string"}}}}}}}};
    return json{{"type", "object"},
                {"required",
                 {"matrix", "flags", "findings", "extraction", "metrics", "confusion", "usage", "model",
                  "wall_seconds", "manifest"}},
                {"additionalProperties", false},
                {"properties",
                 {{"matrix", matrix},
                  {"cells", {{"type", "array"}, {"items", verdict_cell}}},
                  {"flags", {{"type", "array"}, {"items", flag}}},
                  {"findings", {{"type", "array"}, {"items", finding}}},
                  {"extraction", {{"type", "object"}, {"additionalProperties", true}}},
                  {"extraction_rows", {{"type", "array"}, {"items", extraction_row}}},
                  {"metrics", metrics},
                  {"confusion", confusion},
                  {"usage", usage},
                  {"model", {{"type", "string"}}},
                  {"wall_seconds", {{"type", {"number", "null"}}, {"minimum", 0}}},
                  {"manifest", manifest}}}};
}

RenderedReport render_report(const ReportInputs& in)
{
    RenderedReport out;
    std::ostringstream md;
    const auto& m = in.matrix;

    // Verdict matrix.
    md << "# Verification report\n\n## Verdict matrix\n\n";
    json flags = json::array();
    json cells = json::array();
    if (m.rfcs.empty() || m.versions.empty()) {
        md << "none\n\n";
    } else {
        md << "| RFC |";
        for (const auto& v : m.versions) {
            md << ' ' << md_escape(v) << " |";
        }
        md << "\n|---|";
        for (std::size_t i = 0; i < m.versions.size(); ++i) {
            md << "---|";
        }
        md << '\n';
        for (int rfc : m.rfcs) {
            md << "| " << rfc << " |";
            for (const auto& v : m.versions) {
                const Verdict* cell = m.cell(rfc, v);
                if (cell == nullptr) {
                    md << " - |";
                    continue;
                }
                cells.push_back(cell->to_json());
                std::string text(matrix_label(cell->value));
                const std::string outcome = outcome_of(in.findings, rfc, v);
                if (outcome == "FP" || outcome == "FN") {
                    text = "**" + text + "** (" + outcome + ")";
                    flags.push_back({{"rfc", rfc},
                                     {"version", v},
                                     {"reason", outcome == "FP" ? "false-positive" : "false-negative"}});
                }
                if (cell->value == VerdictValue::unknown) {
                    text += " [flagged]";
                    flags.push_back({{"rfc", rfc}, {"version", v}, {"reason", "unknown"}});
                }
                if (cell->mode == "inherited") {
                    text += " (inherited)";
                }
                md << ' ' << text << " |";
            }
            md << '\n';
        }
        md << "\nBold cells with (FP)/(FN) disagree with the ground truth. Unknown cells are flagged for manual "
              "review.\n\n";
    }

    // Findings.
    md << "## Findings\n\n";
    json findings = json::array();
    if (in.findings.findings.empty()) {
        md << "none\n\n";
    } else {
        md << "| System | RFC | Description | Vulnerability class | Evidence | Flags |\n|---|---|---|---|---|---|\n";
        for (const auto& f : in.findings.findings) {
            findings.push_back(f.to_json());
            std::string ev;
            for (const auto& e : f.evidence) {
                ev += (ev.empty() ? "`" : ", `") + e + "`";
            }
            std::string fl;
            if (f.unknown_verdict) {
                fl = "unknown verdict";
            }
            if (!f.mismatch.empty()) {
                fl += (fl.empty() ? "" : ", ") + f.mismatch;
            }
            md << "| " << md_escape(f.system) << " | " << f.rfc << " | " << md_escape(f.description) << " | "
               << md_escape(f.vulnerability_class) << " | " << (ev.empty() ? "none" : ev) << " | "
               << (fl.empty() ? "-" : fl) << " |\n";
        }
        md << '\n';
    }

    // Extraction statistics.
    md << "## Extraction statistics\n\n";
    json extraction = json::object();
    json extraction_rows = json::array();
    if (in.extraction.empty()) {
        md << "none\n\n";
    } else {
        md << "| Version | TF | TL | SF | SL | FER (%) | LER (%) |\n|---|---|---|---|---|---|---|\n";
        for (const auto& [version, s] : in.extraction) {
            const json row{{"TF", s.total_functions}, {"TL", s.total_lines},   {"SF", s.selected_functions},
                           {"SL", s.selected_lines},  {"FER", s.function_rate}, {"LER", s.length_rate},
                           {"rfc_count", s.rfc_count}};
            extraction[version] = row;
            extraction_rows.push_back(row);
            md << "| " << md_escape(version) << " | " << s.total_functions << " | " << s.total_lines << " | "
               << fixed(s.selected_functions, 1) << " | " << fixed(s.selected_lines, 1) << " | "
               << fixed(s.function_rate, 1) << " | " << fixed(s.length_rate, 1) << " |\n";
        }
        md << '\n';
    }

    // Metrics, tokens, cost, time.
    md << "## Metrics and cost\n\n";
    md << "Model: " << (in.model.empty() ? "unspecified" : in.model) << "\n\n";
    const auto tok = [&](const char* key) { return in.ledger.value(key, std::size_t{0}); };
    md << "| Accuracy (%) | Precision (%) | Recall (%) | F1 | Tokens (graph) | Tokens (reasoning) | Tokens (total) | "
          "Cost | Time (s) |\n|---|---|---|---|---|---|---|---|---|\n";
    if (in.metrics) {
        const auto& x = *in.metrics;
        md << "| " << percent1(x.accuracy) << " | " << percent1(x.precision) << (x.precision_degenerate ? "*" : "")
           << " | " << percent1(x.recall) << (x.recall_degenerate ? "*" : "") << " | " << fixed(x.f1, 3) << " |";
    } else {
        md << "| n/a | n/a | n/a | n/a |";
    }
    md << ' ' << tok("token_graph") << " | " << tok("token_reasoning") << " | " << tok("token_total") << " | "
       << fixed(in.ledger.value("cost", 0.0), 4) << " | "
       << (in.wall_seconds ? fixed(*in.wall_seconds, 2) : std::string("n/a")) << " |\n\n";
    if (in.metrics && (in.metrics->precision_degenerate || in.metrics->recall_degenerate)) {
        md << "\\* denominator is zero; the value is defined as 0.\n\n";
    }
    if (in.findings.confusion) {
        const auto& c = *in.findings.confusion;
        md << "Confusion (positive = inconsistency present): TP " << c.tp << ", FP " << c.fp << ", TN " << c.tn
           << ", FN " << c.fn << ".\n\n";
    }
    const json models = in.ledger.value("models", json::object());
    if (!models.empty()) {
        md << "| Model | Calls | Prompt tokens | Completion tokens |\n|---|---|---|---|\n";
        for (const auto& [name, t] : models.items()) {
            md << "| " << md_escape(name) << " | " << t.value("calls", 0) << " | " << t.value("prompt_tokens", 0)
               << " | " << t.value("completion_tokens", 0) << " |\n";
        }
        md << '\n';
    }
    md << "Token counts cover provider-served calls only; cache hits are free. Wall-clock time is a reference "
          "figure.\n\n";

    // Manifest.
    md << "## Manifest\n\n";
    json manifest = json::array();
    if (in.manifest.empty()) {
        md << "none\n";
    } else {
        md << "| Path | Contents |\n|---|---|\n";
        for (const auto& item : in.manifest) {
            manifest.push_back({{"path", item.path}, {"description", item.description}});
            md << "| `" << item.path << "` | " << md_escape(item.description) << " |\n";
        }
    }

    json confusion = nullptr;
    if (in.findings.confusion) {
        const auto& c = *in.findings.confusion;
        confusion = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    }
    out.machine = json{{"matrix", m.to_json()},
                       {"cells", cells},
                       {"flags", flags},
                       {"findings", findings},
                       {"extraction", extraction},
                       {"extraction_rows", extraction_rows},
                       {"metrics", in.metrics ? in.metrics->to_json() : json(nullptr)},
                       {"confusion", confusion},
                       {"usage", in.ledger.empty() ? CostLedger{}.to_json() : in.ledger},
                       {"model", in.model},
                       {"wall_seconds", in.wall_seconds ? json(*in.wall_seconds) : json(nullptr)},
                       {"manifest", manifest}};
    const auto problems = validate_schema(out.machine, report_schema());
    if (!problems.empty()) {
        throw error(errc::serialization_error, "report does not match its schema: " + problems.front());
    }
    out.markdown = md.str();
    return out;
}

}  // namespace deltaspec
