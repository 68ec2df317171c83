import numpy as np
import pytest

import kce


def test_kernel_parsing_and_gram():
    k = kce.KernelSpec("poly gamma=0.5 alpha=1 d=2")
    assert k.family == "poly"
    assert k.slug == "poly_g0.5_a1_d2"
    x = np.array([1.0, 2.0])
    y = np.array([0.5, -1.0])
    assert k(x, y) == pytest.approx((0.5 * x @ y + 1.0) ** 2)
    X = np.random.default_rng(0).normal(size=(6, 2))
    K = kce.gram(k, X)
    assert np.allclose(K, K.T)
    assert np.linalg.eigvalsh(K).min() > -1e-10
    assert len(kce.expand_kernel_grid("rbf gamma={0.1,1}; linear")) == 3
    with pytest.raises(kce.InvalidArgument):
        kce.KernelSpec("cosine")


def test_nystrom_reproduces_the_gram_matrix():
    X = np.random.default_rng(1).normal(size=(20, 3))
    k = kce.KernelSpec.rbf(0.5)
    m = kce.fit_nystrom(X, k, L=20, seed=0)
    F = m.transform(X)
    assert np.abs(F @ F.T - kce.gram(k, X)).max() < 1e-8


def test_fantope_projection():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 6))
    B = kce.fantope_project(A + A.T, 2)
    w = np.linalg.eigvalsh(B)
    assert np.trace(B) == pytest.approx(2.0)
    assert w.min() > -1e-9 and w.max() < 1 + 1e-9


def test_small_erasure_round():
    d = kce.synth_radial(400, 4, 0)
    k = kce.KernelSpec.rbf(1.0)
    m = kce.fit_nystrom(d["X_train"], k, L=64)
    cfg = kce.SolverConfig()
    cfg.total_batches = 200
    cfg.eval_every = 50
    cfg.batch_size = 64
    g = kce.solve_game(m.transform(d["X_train"]), d["y_train"], m.transform(d["X_dev"]), d["y_dev"], 1, cfg)
    assert g.P.shape == (m.rank, m.rank)
    assert np.allclose(g.P @ g.P, g.P, atol=1e-9)
    assert len(g.history) == 4
    before = kce.linear_probe(m.transform(d["X_train"]), d["y_train"], m.transform(d["X_test"]), d["y_test"])
    after = kce.linear_probe(
        m.transform(d["X_train"]) @ g.P, d["y_train"], m.transform(d["X_test"]) @ g.P, d["y_test"]
    )
    assert before > 0.9
    assert after < before


def test_untrained_preimage_net_is_identity():
    net = kce.init_preimage_net(3, seed=0, hidden1=16, hidden2=8)
    X = np.random.default_rng(3).normal(size=(5, 3))
    assert np.array_equal(net(X), X)


def test_association_and_oracle():
    rng = np.random.default_rng(4)
    tokens = [f"w{i}" for i in range(10)]
    V = rng.normal(size=(10, 4))
    d, p = kce.weat_effect(tokens, V, tokens[:3], tokens[3:6], tokens[6:8], tokens[6:8])
    assert d == 0.0
    assert 0.0 <= p <= 1.0
    assert kce.poly2_oracle_check(5, 10, 0) < 1e-8


def test_config_hash():
    assert kce.config_hash() == kce.config_hash(["out=/elsewhere"])
    assert kce.config_hash() != kce.config_hash(["L=64"])
    assert "lr_pre" in kce.config_keys()
    with pytest.raises(kce.InvalidArgument):
        kce.config_hash(["bogus=1"])
