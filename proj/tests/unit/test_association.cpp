#include <doctest.h>

#include "oracles.hpp"
#include "suites.hpp"

#include "kce/association.hpp"

#include <filesystem>
#include <fstream>

using namespace kce;
using namespace kce::testing;

namespace {

WordVectors vocabulary(Rng& rng, const std::vector<std::string>& tokens, Index d = 6) {
    WordVectors w;
    w.tokens = tokens;
    w.vectors = rng.normal_matrix(static_cast<Index>(tokens.size()), d);
    w.rebuild_index();
    return w;
}

WeatSpec small_spec() {
    WeatSpec s;
    s.name = "t";
    s.X = {"x0", "x1", "x2"};
    s.Y = {"y0", "y1", "y2"};
    s.A = {"a0", "a1"};
    s.B = {"b0", "b1"};
    return s;
}

WordVectors small_vocab(Rng& rng) {
    return vocabulary(rng, {"x0", "x1", "x2", "y0", "y1", "y2", "a0", "a1", "b0", "b1"});
}

// Direct evaluation of the effect size.
double reference_d(const WordVectors& w, const WeatSpec& s) {
    auto cos = [&](const std::string& a, const std::string& b) {
        const VectorXd u = w.at(a), v = w.at(b);
        return u.dot(v) / (u.norm() * v.norm());
    };
    auto assoc = [&](const std::string& t) {
        double pa = 0.0, pb = 0.0;
        for (const auto& a : s.A) pa += cos(t, a) / static_cast<double>(s.A.size());
        for (const auto& b : s.B) pb += cos(t, b) / static_cast<double>(s.B.size());
        return pa - pb;
    };
    std::vector<double> all;
    double mx = 0.0, my = 0.0;
    for (const auto& x : s.X) {
        all.push_back(assoc(x));
        mx += all.back() / static_cast<double>(s.X.size());
    }
    for (const auto& y : s.Y) {
        all.push_back(assoc(y));
        my += all.back() / static_cast<double>(s.Y.size());
    }
    double m = 0.0, v = 0.0;
    for (double a : all) m += a / static_cast<double>(all.size());
    for (double a : all) v += (a - m) * (a - m) / static_cast<double>(all.size());
    return (mx - my) / std::sqrt(v);
}

}  // namespace

TEST_CASE("effect size matches a direct evaluation") {
    Rng rng(1);
    const auto w = small_vocab(rng);
    CHECK(weat(w, small_spec(), 0).d == doctest::Approx(reference_d(w, small_spec())).epsilon(1e-12));
}

TEST_CASE("A = B gives d = 0 and swapping X, Y negates d") {
    Rng rng(2);
    const auto w = small_vocab(rng);
    auto same = small_spec();
    same.B = same.A;
    CHECK(weat(w, same, 0).d == 0.0);
    auto swapped = small_spec();
    std::swap(swapped.X, swapped.Y);
    CHECK(weat(w, swapped, 0).d == doctest::Approx(-weat(w, small_spec(), 0).d).epsilon(1e-12));
}

TEST_CASE("exact p by brute-force partition enumeration") {
    Rng rng(3);
    const auto w = small_vocab(rng);
    const auto spec = small_spec();
    const auto r = weat(w, spec, 0, PermutationMode::exact);
    CHECK(r.exact);
    CHECK(r.partitions == 20.0);

    auto assoc = [&](const std::string& t) {
        double pa = 0.0, pb = 0.0;
        for (const auto& a : spec.A) pa += cosine(w.at(t), w.at(a)) / 2.0;
        for (const auto& b : spec.B) pb += cosine(w.at(t), w.at(b)) / 2.0;
        return pa - pb;
    };
    std::vector<std::string> pool = spec.X;
    pool.insert(pool.end(), spec.Y.begin(), spec.Y.end());
    double observed = 0.0;
    for (int i = 0; i < 3; ++i) observed += assoc(pool[i]) - assoc(pool[i + 3]);
    int hits = 0, total = 0;
    for (int mask = 0; mask < 64; ++mask) {
        if (__builtin_popcount(mask) != 3) continue;
        double stat = 0.0;
        for (int i = 0; i < 6; ++i) stat += ((mask >> i) & 1 ? 1.0 : -1.0) * assoc(pool[i]);
        ++total;
        if (stat >= observed - 1e-12) ++hits;
    }
    CHECK(r.p == doctest::Approx(static_cast<double>(hits) / total));
}

TEST_CASE("p is a probability; automatic mode chooses exact when it is cheap") {
    Rng rng(4);
    const auto w = small_vocab(rng);
    auto spec = small_spec();
    spec.permutations = 100;
    const auto r = weat(w, spec, 0);
    CHECK(r.exact);
    CHECK(r.p >= 0.0);
    CHECK(r.p <= 1.0);
    spec.permutations = 10;
    const auto mc = weat(w, spec, 0);
    CHECK_FALSE(mc.exact);
    CHECK(mc.partitions == 10.0);
}

TEST_CASE("property suite: antisymmetry, null attributes, exact vs Monte Carlo") {
    const auto r = weat_suite(71);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("effect size is invariant to uniform rescaling") {
    Rng rng(5);
    auto w = small_vocab(rng);
    const double d = weat(w, small_spec(), 0).d;
    w.vectors *= 7.5;
    CHECK(std::abs(weat(w, small_spec(), 0).d - d) < 1e-10);
}

TEST_CASE("WEAT errors") {
    Rng rng(6);
    auto w = small_vocab(rng);
    auto spec = small_spec();
    spec.X.push_back("missing");
    try {
        (void)weat(w, spec, 0);
        FAIL("expected an error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
    spec = small_spec();
    spec.Y.push_back("x0");
    CHECK_THROWS_AS(weat(w, spec, 0), InvalidArgument);
    spec = small_spec();
    spec.A.clear();
    CHECK_THROWS_AS(weat(w, spec, 0), InvalidArgument);
    w.vectors.row(0).setZero();
    CHECK_THROWS_AS(weat(w, small_spec(), 0), InvalidArgument);
}

TEST_CASE("similarity correlation") {
    Rng rng(7);
    std::vector<std::string> tokens;
    for (int i = 0; i < 20; ++i) tokens.push_back("w" + std::to_string(i));
    const auto w = vocabulary(rng, tokens);
    std::vector<WordPair> pairs;
    for (int i = 0; i < 19; ++i) {
        const std::string a = "w" + std::to_string(i), b = "w" + std::to_string(i + 1);
        pairs.push_back({a, b, cosine(w.at(a), w.at(b))});
    }
    pairs.push_back({"w0", "nope", 1.0});

    const auto r = similarity_correlation(w, w, pairs);
    CHECK(r.rho_before == doctest::Approx(1.0));
    CHECK(r.rho_after == r.rho_before);
    CHECK(r.used == 19);
    CHECK(r.skipped == 1);

    auto shifted = pairs;
    for (auto& p : shifted) p.score = std::exp(3.0 * p.score) + 2.0;
    CHECK(similarity_correlation(w, w, shifted).rho_before == doctest::Approx(1.0));

    const std::vector<WordPair> few(pairs.begin(), pairs.begin() + 5);
    CHECK_THROWS(similarity_correlation(w, w, few));
}

TEST_CASE("spearman uses average ranks") {
    VectorXd a(4), b(4);
    a << 1, 2, 2, 3;
    b << 10, 20, 30, 40;
    // ranks of a: 1, 2.5, 2.5, 4
    const double ra[] = {1, 2.5, 2.5, 4}, rb[] = {1, 2, 3, 4};
    double ma = 2.5, mb = 2.5, num = 0, da = 0, db = 0;
    for (int i = 0; i < 4; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    CHECK(spearman(a, b) == doctest::Approx(num / std::sqrt(da * db)));
}

TEST_CASE("nearest neighbours") {
    Rng rng(8);
    std::vector<std::string> tokens;
    for (int i = 0; i < 30; ++i) tokens.push_back("w" + std::to_string(i));
    auto w = vocabulary(rng, tokens);
    SUBCASE("duplicate vector ranks first") {
        w.tokens.push_back("twin");
        w.vectors.conservativeResize(31, Eigen::NoChange);
        w.vectors.row(30) = w.vectors.row(4);
        w.rebuild_index();
        const auto nn = nearest_neighbors(w, "w4", 3);
        REQUIRE(nn.size() == 3);
        CHECK(nn[0].token == "twin");
    }
    SUBCASE("k = 0") { CHECK(nearest_neighbors(w, "w1", 0).empty()); }
    SUBCASE("matches an exhaustive scan") {
        const auto nn = nearest_neighbors(w, "w7", 5);
        std::vector<std::pair<double, std::string>> all;
        for (const auto& t : tokens)
            if (t != "w7") all.push_back({-cosine(w.at("w7"), w.at(t)), t});
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < 5; ++i) CHECK(nn[i].token == all[i].second);
    }
    SUBCASE("ties break lexicographically") {
        WordVectors t;
        t.tokens = {"q", "b", "a", "c"};
        t.vectors = MatrixXd::Ones(4, 2);
        t.rebuild_index();
        const auto nn = nearest_neighbors(t, "q", 3);
        CHECK(nn[0].token == "a");
        CHECK(nn[1].token == "b");
        CHECK(nn[2].token == "c");
    }
}

TEST_CASE("word list and suite files") {
    const auto suite = load_weat_suite(std::filesystem::path(KCE_DATA_DIR) / "weat" / "tests.tsv");
    REQUIRE(suite.size() == 3);
    for (const auto& s : suite) {
        CHECK_NOTHROW(s.check());
        CHECK(s.X.size() == s.Y.size());
    }
    CHECK(suite[2].name == "science_arts");

    const auto dir = std::filesystem::temp_directory_path() / "kce_assoc_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "pairs.txt");
        f << "word1\tword2\tPOS\tSimLex999\n";
        f << "old\tnew\tA\t1.58\n";
        f << "smart\tintelligent\tA\t9.2\n";
    }
    const auto pairs = load_word_pairs(dir / "pairs.txt");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[1].score == 9.2);
    {
        std::ofstream f(dir / "list.txt");
        f << "# comment\nalpha\n\nbeta\n";
    }
    CHECK(load_word_list(dir / "list.txt") == std::vector<std::string>{"alpha", "beta"});
    std::filesystem::remove_all(dir);
}
