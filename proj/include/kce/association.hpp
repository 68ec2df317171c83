#pragma once

#include "kce/data.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kce {

/// Target word sets X, Y and attribute word sets A, B of an association test.
struct WeatSpec {
    std::string name;
    std::vector<std::string> X, Y, A, B;
    int permutations = 10000;

    void check() const;
};

enum class PermutationMode {
    automatic,    ///< exact when the partition count is at most `permutations`
    exact,
    monte_carlo,
};

struct WeatResult {
    double d = 0.0;
    double p = 0.0;
    bool exact = false;
    double partitions = 0.0;  ///< number of partitions scored
};

/// s(w) = mean_a cos(w, a) - mean_b cos(w, b);
/// d = (mean_X s - mean_Y s) / std_{X u Y} s   (population std);
/// p = share of |X|/|Y| partitions of X u Y whose sum_X s - sum_Y s is at least the observed one.
WeatResult weat(const WordVectors& words, const WeatSpec& spec, std::uint64_t seed,
                PermutationMode mode = PermutationMode::automatic);

/// One word per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

/// Reads a "test X Y A B" TSV whose list columns name files in the same directory.
std::vector<WeatSpec> load_weat_suite(const std::filesystem::path& tsv);

struct WordPair {
    std::string first;
    std::string second;
    double score = 0.0;
};

/// Whitespace-separated "w1 w2 ... score" rows. A header row is detected when its
/// score column is not numeric; the column named `score_column` (default "SimLex999")
/// is then used, otherwise the third column.
std::vector<WordPair> load_word_pairs(const std::filesystem::path& path,
                                      const std::string& score_column = "SimLex999");

struct SimilarityResult {
    double rho_before = 0.0;
    double rho_after = 0.0;
    Index used = 0;
    Index skipped = 0;  ///< pairs with a word missing from either embedding
};

/// Spearman correlation (average ranks for ties) between pair cosines and scores.
double spearman(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

SimilarityResult similarity_correlation(const WordVectors& before, const WordVectors& after,
                                        const std::vector<WordPair>& pairs);

struct Neighbor {
    std::string token;
    double cosine = 0.0;
};

/// Top-k tokens by cosine to `word`, excluding the word itself; ties in lexicographic order.
std::vector<Neighbor> nearest_neighbors(const WordVectors& words, std::string_view word, Index k);

double cosine(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

}  // namespace kce
