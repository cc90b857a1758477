#pragma once

#include "tkmx/corpus_filter.hpp"
#include "tkmx/fertility.hpp"
#include "tkmx/mixture.hpp"
#include "tkmx/packer.hpp"
#include "tkmx/vocab_extend.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tkmx {

// Declarative recipe. Paths are relative to the workspace root.
struct RecipeConfig {
    std::filesystem::path corpus;          // raw JSONL documents
    std::filesystem::path base_vocab;      // vocabulary JSON
    std::filesystem::path base_embeddings; // TKMX embedding file
    std::filesystem::path output_dir = "run";

    FilterChainOptions filter;
    SplitSpec split;
    MixtureSpec mixture;
    ExtensionSpec extension;
    // Languages whose training documents feed vocabulary extension.
    std::vector<std::string> extend_langs = {"hu"};
    std::size_t window = 4096;
    LongDocPolicy long_doc = LongDocPolicy::split;
    std::string delimiter = "<|endoftext|>";
    FertilityMode fertility_mode = FertilityMode::corpus;

    // Throws ConfigError on unknown keys, wrong types or invalid values.
    static RecipeConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

// The eight stages in execution order.
const std::vector<std::string>& stage_names();

struct RunOptions {
    std::filesystem::path workspace;
    bool force = false;
    std::size_t threads = 1;
};

struct RunResult {
    nlohmann::ordered_json manifest;
    std::vector<std::string> executed;
    std::vector<std::string> skipped;
};

// Runs the recipe. A stage is skipped when the manifest already records the
// same input hashes and parameter hash and its outputs still hash to the
// recorded values. If an output was modified since it was recorded the run
// stops with DataError unless options.force is set. The manifest
// (<output_dir>/manifest.json) holds no timestamps, so identical inputs give
// byte-identical manifests.
RunResult run(const RecipeConfig& config, const RunOptions& options);

// Workspace root: explicit value, else $TKMX_WORKSPACE, else the current
// directory.
std::filesystem::path resolve_workspace(const std::optional<std::filesystem::path>& explicit_root);

} // namespace tkmx
