#pragma once

#include "kce/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kce {

/// Token-indexed word vectors, rows in file order.
struct WordVectors {
    std::vector<std::string> tokens;
    MatrixXd vectors;  ///< N x D

    [[nodiscard]] Index size() const { return vectors.rows(); }
    [[nodiscard]] Index dim() const { return vectors.cols(); }
    [[nodiscard]] std::optional<Index> find(std::string_view token) const;
    /// Row of `token`; throws InvalidArgument naming the token if absent.
    [[nodiscard]] VectorXd at(std::string_view token) const;

    void rebuild_index();

private:
    std::unordered_map<std::string, Index> index_;
};

enum class Split { train, dev, test };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct LabeledEmbeddings {
    std::vector<std::string> tokens;
    MatrixXd X;                 ///< N x D, unit-norm rows
    Labels y;                   ///< concept labels
    std::vector<Split> split;   ///< per-row assignment
    std::optional<Labels> aux;  ///< optional second attribute (synthetic data)

    [[nodiscard]] Index size() const { return X.rows(); }

    /// Row indices assigned to `s`, ascending.
    [[nodiscard]] std::vector<Index> rows(Split s) const;
    [[nodiscard]] MatrixXd features(Split s) const;
    [[nodiscard]] Labels labels(Split s) const;
    [[nodiscard]] Labels aux_labels(Split s) const;

    void check() const;
};

/// Whitespace-separated text: token followed by D reals per line.
WordVectors load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const WordVectors& words);

/// Scales each row to unit Euclidean norm; zero rows are rejected.
void normalize_rows(MatrixXd& X);

/// Scores every word by x . (x_a - x_b); the per_side highest become class 1 (side a),
/// the per_side lowest class 0 (side b). Middle words are discarded. Output rows follow
/// descending score, all tagged train until split() is applied.
LabeledEmbeddings induce_labels(const WordVectors& words, std::string_view anchor_a, std::string_view anchor_b,
                                Index per_side);

struct SplitSizes {
    Index train = 0;
    Index dev = 0;
    Index test = 0;
};

/// Seeded stratified split. Rows beyond train + dev + test are dropped.
LabeledEmbeddings split(const LabeledEmbeddings& data, SplitSizes sizes, std::uint64_t seed);

/// Radially encoded synthetic concept on the unit sphere in R^d.
///
/// Rows are g / |g| with g ~ N(0, I_d), drawn until each class holds n / 2 rows. The
/// concept label is 1 iff q = x_1^2 + x_2^2 exceeds the population median of q; rows
/// whose q falls in the central `band` probability mass of its distribution are
/// rejected, leaving a margin around the boundary. The auxiliary attribute is 1 iff
/// x_3 > 0. Every coordinate is sign-symmetric, so no linear rule predicts the concept,
/// while the auxiliary attribute is linearly separable.
/// Rows are split 49% / 21% / 30% (train / dev / test), stratified.
LabeledEmbeddings synth_radial(Index n, Index d, std::uint64_t seed, double band = 0.3);

/// Label/split TSV: "token<TAB>label<TAB>split" per line.
void save_label_tsv(const std::filesystem::path& path, const LabeledEmbeddings& data);

struct LabelRow {
    std::string token;
    int label = 0;
    Split split = Split::train;
};
std::vector<LabelRow> load_label_tsv(const std::filesystem::path& path);

/// Joins a label TSV with word vectors (vectors are normalised to unit norm).
LabeledEmbeddings assemble(const WordVectors& words, const std::vector<LabelRow>& rows);

}  // namespace kce
