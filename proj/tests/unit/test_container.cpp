#include <doctest.h>

#include "oracles.hpp"

#include "kce/container.hpp"

#include <filesystem>

using namespace kce;
using namespace kce::testing;

TEST_CASE("sections round-trip") {
    Rng rng(1);
    Kce1File f;
    const MatrixXd m = rng.normal_matrix(3, 4);
    const VectorXd v = rng.normal_matrix(5, 1);
    f.add_matrix("m", m);
    f.add_vector("v", v);
    f.add_scalar("s", -0.125);
    f.add_text("t", "kernel = rbf gamma=1\n");
    f.add_matrix("empty", MatrixXd(0, 3));

    const Kce1File back = decode_kce1(encode_kce1(f));
    CHECK(back.matrix("m") == m);
    CHECK(back.vector("v") == v);
    CHECK(back.scalar("s") == -0.125);
    CHECK(back.text("t") == "kernel = rbf gamma=1\n");
    CHECK(back.matrix("empty").rows() == 0);
    CHECK(back.sections().size() == 5);
    CHECK(back.contains("m"));
    CHECK_FALSE(back.contains("nope"));
    CHECK_THROWS_AS(back.matrix("nope"), IoError);
    CHECK_THROWS_AS(back.text("m"), IoError);
}

TEST_CASE("header layout") {
    Kce1File f;
    f.add_scalar("x", 1.0);
    const std::string bytes = encode_kce1(f);
    CHECK(bytes.substr(0, 4) == "KCE1");
    CHECK(static_cast<unsigned char>(bytes[4]) == kKce1Version);
    CHECK(bytes[8] == 1);  // section count, little-endian
}

TEST_CASE("corruption is detected") {
    Rng rng(2);
    Kce1File f;
    f.add_matrix("m", rng.normal_matrix(4, 4));
    const std::string good = encode_kce1(f);

    std::string flipped = good;
    flipped[good.size() - 20] ^= 0x01;  // payload byte
    CHECK_THROWS_AS(decode_kce1(flipped), IoError);

    CHECK_THROWS_AS(decode_kce1(good.substr(0, good.size() - 3)), IoError);
    CHECK_THROWS_AS(decode_kce1(good + "x"), IoError);

    std::string magic = good;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_kce1(magic), IoError);

    std::string version = good;
    version[4] = 99;
    CHECK_THROWS_AS(decode_kce1(version), IoError);

    CHECK_THROWS_AS(f.add_scalar("m", 1.0), InvalidArgument);
}

TEST_CASE("model objects round-trip through a file") {
    Rng rng(3);
    const MatrixXd X = rng.normal_matrix(20, 3);
    const NystromMap map = fit_nystrom(X, parse_kernel("combination uniform(linear,rbf[gamma=0.5])"), 12, 4);

    GameSolution game;
    game.theta = rng.normal_matrix(map.rank(), 1);
    game.B = fantope_project(random_symmetric(rng, map.rank()), 1);
    const auto rounded = round_projection(game.B);
    game.W = rounded.W;
    game.P = rounded.P;
    game.history = {{100, 0.7, 0.6}, {200, 0.55, 0.69}};
    game.selected_step = 200;

    PreimageNet net = init_preimage_net(3, 5, 6, 4, 0.2);
    net.W3 = rng.normal_matrix(3, 4);

    Kce1File f;
    store(f, "nystrom", map);
    store(f, "game", game);
    store(f, "preimage", net);
    const auto path = std::filesystem::temp_directory_path() / "kce_container_test.kce1";
    write_kce1(path, f);
    const Kce1File back = read_kce1(path);
    std::filesystem::remove(path);

    const NystromMap m2 = load_nystrom(back, "nystrom");
    CHECK(m2.kernel == map.kernel);
    CHECK(m2.landmarks == map.landmarks);
    CHECK(m2.eigvecs == map.eigvecs);
    CHECK(m2.eigvals == map.eigvals);
    const VectorXd z = rng.normal_matrix(3, 1);
    CHECK(transform(m2, z) == transform(map, z));

    const GameSolution g2 = load_game(back, "game");
    CHECK(g2.theta == game.theta);
    CHECK(g2.B.B == game.B.B);
    CHECK(g2.P == game.P);
    CHECK(g2.selected_step == 200);
    REQUIRE(g2.history.size() == 2);
    CHECK(g2.history[1].probe_accuracy == 0.55);

    const PreimageNet n2 = load_preimage(back, "preimage");
    CHECK(pack_parameters(n2) == pack_parameters(net));
    CHECK(n2.dropout == 0.2);
    CHECK(forward(n2, z) == forward(net, z));

    CHECK_THROWS_AS(load_game(back, "missing"), IoError);
    CHECK_THROWS_AS(read_kce1(path), IoError);
}
