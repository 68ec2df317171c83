#pragma once

#include "kce/adversaries.hpp"
#include "kce/association.hpp"
#include "kce/config.hpp"
#include "kce/data.hpp"
#include "kce/exact_game.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kce {

/// Table row label of a kernel family: Poly, RBF, Laplace, Linear, Sigmoid, MK.
std::string family_label(const KernelSpec& spec);

/// Synthetic data or embeddings joined with the label TSV. Throws IoError for missing paths.
LabeledEmbeddings load_dataset(const RunConfig& cfg);

/// Everything produced by one (kernel, seed) erasure.
struct ErasureResult {
    KernelSpec kernel;
    std::uint64_t seed = 0;
    NystromMap map;
    GameSolution game;
    PreimageNet net;
    double majority = 0.0;        ///< test split
    double probe_before = 0.0;    ///< in-RKHS linear probe, test split
    double probe_after = 0.0;     ///< same, after P
    ReconstructionError recon;    ///< test split
    int preimage_step = 0;
    std::optional<double> aux_before;  ///< linear probe on the auxiliary attribute, inputs
    std::optional<double> aux_after;   ///< same, on pre-images
};

/// Nystrom fit on train rows -> relaxed game (dev selection) -> rounding -> pre-image training.
ErasureResult erase_one(const LabeledEmbeddings& data, const KernelSpec& kernel, std::uint64_t seed,
                        const RunConfig& cfg);

std::filesystem::path artifact_path(const RunConfig& cfg, const KernelSpec& kernel, std::uint64_t seed);
void save_erasure(const std::filesystem::path& path, const ErasureResult& result, const RunConfig& cfg);
ErasureResult load_erasure(const std::filesystem::path& path);

struct EraseRecord {
    KernelSpec kernel;
    std::uint64_t seed = 0;
    std::string status;  ///< "ok" or the error message
    std::optional<ErasureResult> result;
};

/// Runs every grid point and seed, writing one KCE1 file each plus erase.tsv and erase.md.
/// A failing point is recorded and the remaining points continue.
std::vector<EraseRecord> run_erase(const RunConfig& cfg);

/// Same-kernel adversary on pre-images, per family: eval_same.tsv / .md.
struct SameKernelRow {
    std::string family;
    CellStats before;
    CellStats after;
};
std::vector<SameKernelRow> run_eval_same(const RunConfig& cfg);

/// Neutraliser x adversary accuracies: eval_transfer.tsv / .md.
TransferTable run_eval_transfer(const RunConfig& cfg);

struct WeatRow {
    std::string test;
    std::string kernel;  ///< "Original" or a family label
    CellStats d;
    CellStats p;
};
std::vector<WeatRow> run_weat(const RunConfig& cfg);

struct SimlexRow {
    std::string kernel;
    CellStats rho;
    Index pairs = 0;
};
std::vector<SimlexRow> run_simlex(const RunConfig& cfg);

/// Nearest neighbours of cfg.neighbor_words before and after erasure (first seed per family).
void run_neighbors(const RunConfig& cfg);

OracleCheckReport run_oracle_check(const RunConfig& cfg);

/// Induces labels from the anchor words and writes labels.tsv to the output directory.
std::filesystem::path run_ingest(const RunConfig& cfg);

/// Report helpers: every TSV starts with "# config_hash=<hash>".
void write_report(const std::filesystem::path& path, const std::string& body, const RunConfig& cfg,
                  bool markdown);

}  // namespace kce
