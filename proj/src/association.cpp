#include "kce/association.hpp"

#include "kce/random.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace kce {

namespace {

// Slack for the "at least as large" comparison of partition statistics.
constexpr double kStatSlack = 1e-12;

VectorXd lookup(const WordVectors& words, const std::string& token) {
    VectorXd v = words.at(token);
    if (v.norm() == 0.0) throw InvalidArgument("zero vector for word '" + token + "'");
    return v;
}

double log_binomial(Index n, Index k) {
    return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
           std::lgamma(static_cast<double>(n - k + 1));
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string field;
    while (in >> field) out.push_back(field);
    return out;
}

bool parse_real(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

VectorXd average_ranks(const Eigen::Ref<const VectorXd>& v) {
    const Index n = v.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
    VectorXd ranks(n);
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) == v(order[static_cast<std::size_t>(i)])) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

void WeatSpec::check() const {
    if (X.empty() || Y.empty() || A.empty() || B.empty())
        throw InvalidArgument("association test '" + name + "' has an empty word list");
    const std::set<std::string> xs(X.begin(), X.end());
    for (const auto& w : Y)
        if (xs.count(w) > 0) throw InvalidArgument("target lists share the word '" + w + "'");
    if (permutations <= 0) throw InvalidArgument("permutations must be positive");
}

double cosine(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine of a zero vector");
    return a.dot(b) / (na * nb);
}

WeatResult weat(const WordVectors& words, const WeatSpec& spec, std::uint64_t seed, PermutationMode mode) {
    spec.check();
    std::vector<VectorXd> attr_a, attr_b;
    for (const auto& w : spec.A) attr_a.push_back(lookup(words, w));
    for (const auto& w : spec.B) attr_b.push_back(lookup(words, w));

    auto association = [&](const VectorXd& w) {
        double sa = 0.0, sb = 0.0;
        for (const auto& a : attr_a) sa += cosine(w, a);
        for (const auto& b : attr_b) sb += cosine(w, b);
        return sa / static_cast<double>(attr_a.size()) - sb / static_cast<double>(attr_b.size());
    };

    const auto nx = static_cast<Index>(spec.X.size());
    const auto ny = static_cast<Index>(spec.Y.size());
    const Index n = nx + ny;
    VectorXd s(n);
    for (Index i = 0; i < nx; ++i) s(i) = association(lookup(words, spec.X[static_cast<std::size_t>(i)]));
    for (Index i = 0; i < ny; ++i) s(nx + i) = association(lookup(words, spec.Y[static_cast<std::size_t>(i)]));

    WeatResult out;
    const double mean_x = s.head(nx).mean();
    const double mean_y = s.tail(ny).mean();
    const double mu = s.mean();
    const double sd = std::sqrt((s.array() - mu).square().mean());
    out.d = sd > 0.0 ? (mean_x - mean_y) / sd : 0.0;

    // Statistic of a partition: sum over the X-side minus sum over the Y-side.
    const double total = s.sum();
    const double observed = 2.0 * s.head(nx).sum() - total;

    const double log_count = log_binomial(n, nx);
    bool exact = false;
    switch (mode) {
        case PermutationMode::exact:
            if (log_count > std::log(1e8)) throw InvalidArgument("too many partitions for an exact test");
            exact = true;
            break;
        case PermutationMode::monte_carlo:
            exact = false;
            break;
        case PermutationMode::automatic:
            exact = log_count <= std::log(static_cast<double>(spec.permutations)) + 1e-9;
            break;
    }
    out.exact = exact;

    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    if (exact) {
        std::vector<Index> pick(static_cast<std::size_t>(nx));
        std::iota(pick.begin(), pick.end(), Index{0});
        while (true) {
            double sum = 0.0;
            for (Index i : pick) sum += s(i);
            if (2.0 * sum - total >= observed - kStatSlack) ++hits;
            ++trials;
            Index pos = nx - 1;
            while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == n - nx + pos) --pos;
            if (pos < 0) break;
            ++pick[static_cast<std::size_t>(pos)];
            for (Index t = pos + 1; t < nx; ++t)
                pick[static_cast<std::size_t>(t)] = pick[static_cast<std::size_t>(t - 1)] + 1;
        }
    } else {
        Rng rng(seed);
        std::vector<Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), Index{0});
        for (int t = 0; t < spec.permutations; ++t) {
            rng.shuffle(perm);
            double sum = 0.0;
            for (Index i = 0; i < nx; ++i) sum += s(perm[static_cast<std::size_t>(i)]);
            if (2.0 * sum - total >= observed - kStatSlack) ++hits;
            ++trials;
        }
    }
    out.partitions = static_cast<double>(trials);
    out.p = static_cast<double>(hits) / static_cast<double>(trials);
    return out;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word list " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto fields = split_ws(line);
        if (fields.empty() || fields[0][0] == '#') continue;
        out.push_back(fields[0]);
    }
    if (out.empty()) throw IoError("word list " + path.string() + " is empty");
    return out;
}

std::vector<WeatSpec> load_weat_suite(const std::filesystem::path& tsv) {
    std::ifstream in(tsv);
    if (!in) throw IoError("cannot open association suite " + tsv.string());
    const auto dir = tsv.parent_path();
    std::vector<WeatSpec> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = split_ws(line);
        if (f.empty() || f[0][0] == '#') continue;
        if (lineno == 1 && f[0] == "test") continue;
        if (f.size() != 5) throw IoError(tsv.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        WeatSpec spec;
        spec.name = f[0];
        spec.X = load_word_list(dir / (f[1] + ".txt"));
        spec.Y = load_word_list(dir / (f[2] + ".txt"));
        spec.A = load_word_list(dir / (f[3] + ".txt"));
        spec.B = load_word_list(dir / (f[4] + ".txt"));
        out.push_back(std::move(spec));
    }
    return out;
}

std::vector<WordPair> load_word_pairs(const std::filesystem::path& path, const std::string& score_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word pairs " + path.string());
    std::vector<WordPair> out;
    std::string line;
    std::size_t column = 2;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = split_ws(line);
        if (f.empty()) continue;
        double score = 0.0;
        if (first) {
            first = false;
            if (f.size() >= 3 && !parse_real(f[2], score)) {
                const auto it = std::find(f.begin(), f.end(), score_column);
                if (it != f.end()) column = static_cast<std::size_t>(it - f.begin());
                continue;
            }
        }
        if (f.size() <= column || !parse_real(f[column], score))
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed word pair");
        out.push_back({f[0], f[1], score});
    }
    return out;
}

double spearman(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("rank correlation needs two equal-length series");
    const VectorXd ra = average_ranks(a);
    const VectorXd rb = average_ranks(b);
    const VectorXd ca = ra.array() - ra.mean();
    const VectorXd cb = rb.array() - rb.mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    if (denom == 0.0) throw NumericalError("rank correlation of a constant series");
    return ca.dot(cb) / denom;
}

SimilarityResult similarity_correlation(const WordVectors& before, const WordVectors& after,
                                        const std::vector<WordPair>& pairs) {
    std::vector<double> human, cos_before, cos_after;
    SimilarityResult out;
    for (const auto& pair : pairs) {
        const auto b1 = before.find(pair.first);
        const auto b2 = before.find(pair.second);
        const auto a1 = after.find(pair.first);
        const auto a2 = after.find(pair.second);
        if (!b1 || !b2 || !a1 || !a2) {
            ++out.skipped;
            continue;
        }
        human.push_back(pair.score);
        cos_before.push_back(cosine(before.vectors.row(*b1).transpose(), before.vectors.row(*b2).transpose()));
        cos_after.push_back(cosine(after.vectors.row(*a1).transpose(), after.vectors.row(*a2).transpose()));
    }
    out.used = static_cast<Index>(human.size());
    if (out.used < 10)
        throw InvalidArgument("only " + std::to_string(out.used) + " usable word pairs (need at least 10)");
    const auto view = [](const std::vector<double>& v) {
        return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
    };
    out.rho_before = spearman(view(cos_before), view(human));
    out.rho_after = spearman(view(cos_after), view(human));
    return out;
}

std::vector<Neighbor> nearest_neighbors(const WordVectors& words, std::string_view word, Index k) {
    if (k < 0) throw InvalidArgument("neighbor count must be non-negative");
    const VectorXd q = words.at(word);
    std::vector<Neighbor> all;
    all.reserve(static_cast<std::size_t>(words.size()));
    for (Index i = 0; i < words.size(); ++i) {
        const auto& token = words.tokens[static_cast<std::size_t>(i)];
        if (token == word) continue;
        all.push_back({token, cosine(q, words.vectors.row(i).transpose())});
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                          if (a.cosine != b.cosine) return a.cosine > b.cosine;
                          return a.token < b.token;
                      });
    all.resize(take);
    return all;
}

}  // namespace kce
