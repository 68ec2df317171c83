#pragma once

#include "kce/adversaries.hpp"
#include "kce/fantope_game.hpp"
#include "kce/kernels.hpp"
#include "kce/preimage.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kce {

/// Every run setting. Text form: one "key = value" per line, '#' starts a comment.
struct RunConfig {
    // data
    std::string dataset = "synth";  ///< "synth" or "embeddings"
    std::filesystem::path embeddings;
    std::filesystem::path labels;     ///< token/label/split TSV (written by ingest)
    Index synth_n = 2000;
    Index synth_d = 10;
    double synth_band = 0.3;
    std::uint64_t synth_seed = 0;

    // ingest
    std::string anchor_a = "he";
    std::string anchor_b = "she";
    Index per_side = 7500;
    std::uint64_t split_seed = 0;

    // association and similarity
    std::filesystem::path weat_suite;
    std::filesystem::path simlex;
    int weat_permutations = 10000;
    std::vector<std::string> neighbor_words;
    Index neighbors_k = 10;

    std::filesystem::path out = "kce_out";

    // erasure
    std::vector<KernelSpec> kernels{KernelSpec::rbf(1.0)};
    Index landmarks = 1024;
    int k = 1;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    SolverConfig solver;
    PreimageConfig preimage;
    Index hidden1 = 512;
    Index hidden2 = 300;
    double dropout = 0.1;

    // adversaries
    KernelAdversaryOptions adversary;
    MlpConfig mlp;
    int mlp_restarts = 3;

    // oracle check
    int oracle_instances = 100;
    Index oracle_anchors = 10;

    /// Sets one key from its text value; throws InvalidArgument on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    /// Canonical "key=value" lines in sorted key order, excluding `out` (paths as given).
    [[nodiscard]] std::string snapshot() const;
    /// Hex FNV-1a hash of snapshot().
    [[nodiscard]] std::string hash() const;

    /// Effective output directory: $KCE_OUT when set, else `out`.
    [[nodiscard]] std::filesystem::path output_dir() const;
};

/// Parses "key = value" lines into cfg (later keys win).
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::filesystem::path& path);

/// "key=value" override as passed on the command line.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Names of all recognised keys, sorted.
std::vector<std::string> config_keys();

}  // namespace kce
