#include "kce/data.hpp"

#include "kce/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace kce {

std::optional<Index> WordVectors::find(std::string_view token) const {
    if (index_.size() != tokens.size()) {
        // Index not built (vectors assembled by hand); fall back to a scan.
        const auto it = std::find(tokens.begin(), tokens.end(), token);
        if (it == tokens.end()) return std::nullopt;
        return static_cast<Index>(it - tokens.begin());
    }
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

VectorXd WordVectors::at(std::string_view token) const {
    const auto row = find(token);
    if (!row) throw InvalidArgument("word '" + std::string(token) + "' not in vocabulary");
    return vectors.row(*row).transpose();
}

void WordVectors::rebuild_index() {
    index_.clear();
    index_.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!index_.emplace(tokens[i], static_cast<Index>(i)).second) {
            throw InvalidArgument("duplicate token '" + tokens[i] + "'");
        }
    }
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "dev") return Split::dev;
    if (name == "test") return Split::test;
    throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

std::vector<Index> LabeledEmbeddings::rows(Split s) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == s) out.push_back(static_cast<Index>(i));
    }
    return out;
}

MatrixXd LabeledEmbeddings::features(Split s) const {
    const auto idx = rows(s);
    MatrixXd out(static_cast<Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = X.row(idx[i]);
    return out;
}

Labels LabeledEmbeddings::labels(Split s) const {
    const auto idx = rows(s);
    Labels out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = y[idx[i]];
    return out;
}

Labels LabeledEmbeddings::aux_labels(Split s) const {
    if (!aux) throw InvalidArgument("dataset has no auxiliary attribute");
    const auto idx = rows(s);
    Labels out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = (*aux)[idx[i]];
    return out;
}

void LabeledEmbeddings::check() const {
    const auto n = static_cast<std::size_t>(X.rows());
    if (tokens.size() != n || static_cast<std::size_t>(y.size()) != n || split.size() != n) {
        throw InvalidArgument("LabeledEmbeddings: inconsistent row counts");
    }
    if (aux && static_cast<std::size_t>(aux->size()) != n) throw InvalidArgument("LabeledEmbeddings: aux size mismatch");
    require_binary(y, "LabeledEmbeddings");
    for (Index i = 0; i < X.rows(); ++i) {
        if (std::abs(X.row(i).norm() - 1.0) > 1e-8) throw InvalidArgument("LabeledEmbeddings: row not unit-norm");
    }
}

WordVectors load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file " + path.string());
    WordVectors out;
    std::vector<double> values;
    Index dim = -1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) continue;
        Index count = 0;
        std::string field;
        while (fields >> field) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc{} || ptr != field.data() + field.size()) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + field + "'");
            }
            if (!std::isfinite(v)) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-finite value '" + field + "'");
            }
            values.push_back(v);
            ++count;
        }
        if (count == 0) throw IoError(path.string() + ":" + std::to_string(line_no) + ": no vector values");
        if (dim < 0) dim = count;
        if (count != dim) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                          " values, found " + std::to_string(count));
        }
        out.tokens.push_back(std::move(token));
    }
    if (out.tokens.empty()) throw IoError("embeddings file " + path.string() + " is empty");
    const auto n = static_cast<Index>(out.tokens.size());
    out.vectors = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, dim);
    try {
        out.rebuild_index();
    } catch (const InvalidArgument& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return out;
}

void save_embeddings(const std::filesystem::path& path, const WordVectors& words) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (Index i = 0; i < words.size(); ++i) {
        out << words.tokens[static_cast<std::size_t>(i)];
        for (Index j = 0; j < words.dim(); ++j) out << ' ' << format_double(words.vectors(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void normalize_rows(MatrixXd& X) {
    for (Index i = 0; i < X.rows(); ++i) {
        const double norm = X.row(i).norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("normalize_rows: zero or non-finite row");
        X.row(i) /= norm;
    }
}

LabeledEmbeddings induce_labels(const WordVectors& words, std::string_view anchor_a, std::string_view anchor_b,
                                Index per_side) {
    const VectorXd direction = words.at(anchor_a) - words.at(anchor_b);
    const Index n = words.size();
    if (per_side < 1 || 2 * per_side > n) throw InvalidArgument("induce_labels: need 1 <= per_side <= N/2");
    const VectorXd score = words.vectors * direction;
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score[a] > score[b]; });

    LabeledEmbeddings out;
    out.X.resize(2 * per_side, words.dim());
    out.y.resize(2 * per_side);
    for (Index i = 0; i < 2 * per_side; ++i) {
        const bool top = i < per_side;
        const Index row = top ? order[static_cast<std::size_t>(i)]
                              : order[static_cast<std::size_t>(n - 2 * per_side + i)];
        out.tokens.push_back(words.tokens[static_cast<std::size_t>(row)]);
        out.X.row(i) = words.vectors.row(row);
        out.y[i] = top ? 1 : 0;
    }
    normalize_rows(out.X);
    out.split.assign(static_cast<std::size_t>(2 * per_side), Split::train);
    return out;
}

LabeledEmbeddings split(const LabeledEmbeddings& data, SplitSizes sizes, std::uint64_t seed) {
    const Index n = data.size();
    if (sizes.train < 0 || sizes.dev < 0 || sizes.test < 0 || sizes.train + sizes.dev + sizes.test > n) {
        throw InvalidArgument("split: sizes exceed the number of rows");
    }
    Rng rng(seed);
    std::vector<Index> pools[2];
    for (Index i = 0; i < n; ++i) pools[data.y[i]].push_back(i);
    rng.shuffle(pools[0]);
    rng.shuffle(pools[1]);

    const double frac1 = n ? static_cast<double>(pools[1].size()) / static_cast<double>(n) : 0.0;
    std::size_t taken[2] = {0, 0};
    std::vector<std::pair<Index, Split>> assigned;
    const std::pair<Split, Index> order[] = {{Split::train, sizes.train}, {Split::dev, sizes.dev}, {Split::test, sizes.test}};
    for (const auto& [which, size] : order) {
        // Proportional quota per class, rounded to nearest, then clamped by availability.
        Index want1 = static_cast<Index>(std::llround(frac1 * static_cast<double>(size)));
        want1 = std::min<Index>(want1, static_cast<Index>(pools[1].size() - taken[1]));
        Index want0 = size - want1;
        if (want0 > static_cast<Index>(pools[0].size() - taken[0])) {
            want0 = static_cast<Index>(pools[0].size() - taken[0]);
            want1 = size - want0;
        }
        for (Index i = 0; i < want0; ++i) assigned.emplace_back(pools[0][taken[0]++], which);
        for (Index i = 0; i < want1; ++i) assigned.emplace_back(pools[1][taken[1]++], which);
    }
    std::sort(assigned.begin(), assigned.end());

    LabeledEmbeddings out;
    const auto m = static_cast<Index>(assigned.size());
    out.X.resize(m, data.X.cols());
    out.y.resize(m);
    if (data.aux) out.aux = Labels(m);
    for (Index i = 0; i < m; ++i) {
        const auto [row, which] = assigned[static_cast<std::size_t>(i)];
        out.tokens.push_back(data.tokens[static_cast<std::size_t>(row)]);
        out.X.row(i) = data.X.row(row);
        out.y[i] = data.y[row];
        if (data.aux) (*out.aux)[i] = (*data.aux)[row];
        out.split.push_back(which);
    }
    return out;
}

LabeledEmbeddings synth_radial(Index n, Index d, std::uint64_t seed, double band) {
    if (n < 2 || n % 2 != 0) throw InvalidArgument("synth_radial: n must be even and >= 2");
    if (d < 3) throw InvalidArgument("synth_radial: d must be >= 3");
    if (!(band >= 0.0 && band < 1.0)) throw InvalidArgument("synth_radial: band must lie in [0, 1)");
    // x_1^2 + x_2^2 for x uniform on the sphere is Beta(1, (d - 2) / 2).
    const double shape = 0.5 * static_cast<double>(d - 2);
    const auto quantile = [&](double p) { return 1.0 - std::pow(1.0 - p, 1.0 / shape); };
    const double median = quantile(0.5);
    const double lo = quantile(0.5 - 0.5 * band);
    const double hi = quantile(0.5 + 0.5 * band);

    Rng rng(seed);
    LabeledEmbeddings data;
    data.X.resize(n, d);
    data.y.resize(n);
    Index filled[2] = {0, 0};
    Index row = 0;
    VectorXd g(d);
    while (row < n) {
        for (Index j = 0; j < d; ++j) g[j] = rng.normal();
        const double norm = g.norm();
        if (norm == 0.0) continue;
        g /= norm;
        const double q = g[0] * g[0] + g[1] * g[1];
        if (band > 0.0 && q > lo && q < hi) continue;
        const int label = q > median ? 1 : 0;
        if (filled[label] == n / 2) continue;
        ++filled[label];
        data.X.row(row) = g.transpose();
        data.y[row] = label;
        ++row;
    }

    data.aux = Labels(n);
    for (Index i = 0; i < n; ++i) (*data.aux)[i] = data.X(i, 2) > 0.0 ? 1 : 0;
    for (Index i = 0; i < n; ++i) data.tokens.push_back("s" + std::to_string(i));
    data.split.assign(static_cast<std::size_t>(n), Split::train);

    const Index train = static_cast<Index>(std::llround(0.49 * static_cast<double>(n)));
    const Index dev = static_cast<Index>(std::llround(0.21 * static_cast<double>(n)));
    return split(data, {train, dev, n - train - dev}, seed ^ 0x9e3779b97f4a7c15ULL);
}

void save_label_tsv(const std::filesystem::path& path, const LabeledEmbeddings& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (Index i = 0; i < data.size(); ++i) {
        out << data.tokens[static_cast<std::size_t>(i)] << '\t' << data.y[i] << '\t'
            << split_name(data.split[static_cast<std::size_t>(i)]) << '\n';
    }
}

std::vector<LabelRow> load_label_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label file " + path.string());
    std::vector<LabelRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        LabelRow row;
        std::string label;
        std::string which;
        if (!std::getline(fields, row.token, '\t') || !std::getline(fields, label, '\t') ||
            !std::getline(fields, which, '\t')) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected token, label, split");
        }
        if (label != "0" && label != "1") {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
        }
        row.label = label == "1" ? 1 : 0;
        try {
            row.split = parse_split(which);
        } catch (const InvalidArgument& e) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

LabeledEmbeddings assemble(const WordVectors& words, const std::vector<LabelRow>& rows) {
    LabeledEmbeddings out;
    const auto n = static_cast<Index>(rows.size());
    if (n == 0) throw InvalidArgument("assemble: no labeled rows");
    out.X.resize(n, words.dim());
    out.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        out.tokens.push_back(row.token);
        out.X.row(i) = words.at(row.token).transpose();
        out.y[i] = row.label;
        out.split.push_back(row.split);
    }
    normalize_rows(out.X);
    return out;
}

}  // namespace kce
