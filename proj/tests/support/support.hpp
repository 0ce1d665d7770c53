#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "deltaspec/llm_gateway.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return DELTASPEC_SOURCE_DIR; }
inline std::filesystem::path minicorpus() { return source_dir() / "data" / "minicorpus"; }
inline std::filesystem::path annotated() { return source_dir() / "data" / "annotated"; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t")
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("deltaspec-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Gateway over a scripted provider with memory-only cache and no backoff.
inline std::shared_ptr<deltaspec::LlmGateway> mock_gateway(std::vector<deltaspec::json> rows,
                                                           std::shared_ptr<deltaspec::MockProvider>* out = nullptr)
{
    auto provider = std::make_shared<deltaspec::MockProvider>(std::move(rows));
    if (out != nullptr) {
        *out = provider;
    }
    deltaspec::GatewayConfig cfg;
    cfg.backoff = std::chrono::milliseconds(0);
    return std::make_shared<deltaspec::LlmGateway>(cfg, provider, std::make_shared<deltaspec::HashEmbedder>(64));
}

}  // namespace testing_support
