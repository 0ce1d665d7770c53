// deltaspec: specification-to-implementation conformance pipeline.
//
// Exit status: 0 on success, 1 on a pipeline error, 2 on a usage error.

#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "deltaspec/pipeline.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kPipelineError = 1;

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Check protocol implementations against incremental RFC updates."};
    app.require_subcommand(1, 1);

    std::string config_path = "deltaspec.json";
    bool mock = false;
    std::string version_tag;
    std::string log_level = "warn";
    std::string workspace;
    app.add_option("-c,--config", config_path, "Pipeline config file (JSON)");
    app.add_flag("--mock", mock, "Use the scripted provider from the config transcript");
    app.add_option("-w,--workspace", workspace, "Override the workspace directory from the config");
    app.add_option("--version-tag", version_tag, "Restrict codebase stages to one codebase tag");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    auto* ingest_rfc = app.add_subcommand("ingest-rfc", "Parse the RFC corpus into sections and text chunks");
    auto* ingest_code = app.add_subcommand("ingest-code", "Extract functions and code chunks from each codebase");
    auto* build_graph = app.add_subcommand("build-graph", "Build the knowledge graph and extraction statistics");
    auto* build_chains = app.add_subcommand("build-chains", "Extract functional entries and RFC update chains");
    auto* synth = app.add_subcommand("synth-triplets", "Synthesize differential triplets from the corpora");
    auto* verify = app.add_subcommand("verify", "Verify every RFC of the chains against the codebases");
    auto* eval = app.add_subcommand("eval", "Score the verdict matrix against the ground truth");
    auto* report = app.add_subcommand("report", "Render the Markdown and JSON reports");
    auto* run = app.add_subcommand("run", "Run every stage in order");
    auto* cost = app.add_subcommand("cost-model", "Estimate token consumption of naive and incremental analysis");

    std::optional<long long> n, len, m, dlen, dm;
    cost->add_option("--n", n, "RFC count");
    cost->add_option("--len-rfc", len, "Average RFC length in tokens");
    cost->add_option("--m", m, "Codebase size in tokens");
    cost->add_option("--delta-len", dlen, "Incremental RFC update size in tokens");
    cost->add_option("--delta-m", dm, "Affected code size in tokens");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kUsageError;
    }

    const int given = int(n.has_value()) + int(len.has_value()) + int(m.has_value()) + int(dlen.has_value()) +
                      int(dm.has_value());
    if (given != 0 && given != 5) {
        std::cerr << "cost-model: give all of --n, --len-rfc, --m, --delta-len, --delta-m, or none\n";
        return kUsageError;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_pattern("[%l] %v");

    try {
        auto cfg = deltaspec::PipelineConfig::load(config_path);
        if (!workspace.empty()) {
            cfg.workspace = workspace;
        }
        deltaspec::Pipeline pipeline(std::move(cfg), mock);
        if (*ingest_rfc) {
            pipeline.ingest_rfc();
        } else if (*ingest_code) {
            pipeline.ingest_code(version_tag);
        } else if (*build_graph) {
            pipeline.build_graph(version_tag);
        } else if (*build_chains) {
            pipeline.build_chains();
        } else if (*synth) {
            pipeline.synth_triplets();
        } else if (*verify) {
            const auto matrix = pipeline.verify(version_tag);
            std::cout << "wrote " << pipeline.path("verify/matrix.json").string() << " (" << matrix.rfcs.size()
                      << " RFCs x " << matrix.versions.size() << " codebases)\n";
        } else if (*eval) {
            const auto x = pipeline.eval();
            std::cout << "accuracy " << deltaspec::percent1(x.accuracy) << "%, precision "
                      << deltaspec::percent1(x.precision) << "%, recall " << deltaspec::percent1(x.recall)
                      << "%, F1 " << x.f1 << "\n";
        } else if (*report) {
            pipeline.report();
            std::cout << "wrote " << pipeline.path("report/report.md").string() << "\n";
        } else if (*run) {
            pipeline.run_all(version_tag);
            std::cout << "wrote " << pipeline.path("report/report.md").string() << "\n";
        } else if (*cost) {
            std::optional<deltaspec::CostModelInputs> inputs;
            if (given == 5) {
                inputs = deltaspec::CostModelInputs{*n, *len, *m, *dlen, *dm};
            }
            std::cout << pipeline.cost_model(inputs, version_tag).to_json().dump(2) << "\n";
        }
    } catch (const deltaspec::error& e) {
        std::cerr << e.what() << "\n";
        return kPipelineError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipelineError;
    }
    return 0;
}
