import json

import numpy as np
import pytest

import rscca


def test_generate_contaminates_the_last_rows():
    x, y, outliers = rscca.generate("sparse-low", "asymmetric", seed=3)
    assert x.shape == (100, 6) and y.shape == (100, 4) and outliers == 10
    assert np.all(x[-10:] == 10.0) and np.all(y[-10:] == 10.0)
    a_true, b_true, rho = rscca.true_vectors("sparse-low")
    assert a_true[0, 0] == 1.0 and rho[0] == pytest.approx(0.9)


def test_fit_recovers_a_planted_sparse_pair():
    # the leading Y direction carries the signal, so the start is informative
    rng = np.random.default_rng(3)
    z = rng.standard_normal(150)
    x = rng.standard_normal((150, 6))
    y = rng.standard_normal((150, 4))
    x[:, 2] = z + 0.3 * rng.standard_normal(150)
    y[:, 1] = 3.0 * z + 0.5 * rng.standard_normal(150)
    x[:10] += 25.0  # a block of outlying rows
    fit = rscca.fit(x, y, method="robust-sparse", variates=1, seed=1)
    assert np.flatnonzero(fit.a[:, 0]).tolist() == [2]
    assert np.flatnonzero(fit.b[:, 0]).tolist() == [1]
    assert abs(np.linalg.norm(fit.a[:, 0]) - 1.0) < 1e-8
    assert fit.rank == 1 and len(fit.logs) == 1 and fit.logs[0].converged
    assert fit.correlations[0] > 0.9
    assert "schema_version" in json.loads(fit.to_json())


def test_fit_is_seeded():
    x, y, _ = rscca.generate("sparse-low", "symmetric", seed=5)
    first = rscca.fit(x, y, method="robust", variates=2, seed=7).to_json()
    assert rscca.fit(x, y, method="robust", variates=2, seed=7).to_json() == first


def test_classical_matches_numpy_cca():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 3))
    y = rng.standard_normal((200, 2))
    y[:, 0] += x[:, 1]
    fit = rscca.fit(x, y, method="classical", variates=1)
    xc, yc = x - x.mean(0), y - y.mean(0)
    lx = np.linalg.cholesky(xc.T @ xc)
    ly = np.linalg.cholesky(yc.T @ yc)
    k = np.linalg.solve(lx, xc.T @ yc) @ np.linalg.inv(ly).T
    u, s, _ = np.linalg.svd(k)
    a = np.linalg.solve(lx.T, u[:, 0])
    assert rscca.subspace_angle(fit.a, a[:, None]) < 1e-3
    assert abs(abs(fit.correlations[0]) - s[0]) < 1e-4


def test_errors_are_python_exceptions():
    x = np.zeros((20, 30))
    y = np.ones((20, 2))
    with pytest.raises(rscca.UnsupportedConfigError):
        rscca.fit(x, y, method="classical")
    with pytest.raises(rscca.RsccaError):
        rscca.fit(np.ones((10, 2)), np.ones((9, 2)))
    with pytest.raises(ValueError):
        rscca.fit(np.ones((10, 2)), np.ones((10, 2)), method="pls")


def test_helpers():
    rng = np.random.default_rng(1)
    u = rng.standard_normal(200)
    assert rscca.robust_correlation(u, 2 * u + 1) == pytest.approx(1.0)
    d = rscca.distances(rng.standard_normal((50, 3)))
    assert d.shape == (50, 3)
    assert np.allclose(d[:, 2], d[0, 2])
    assert set(rscca.design_names()) == {"sparse-low", "nonsparse-low", "sparse-high"}
    x, y, _ = rscca.generate("sparse-low", seed=2)
    score, folds, failures = rscca.cv_score(x[:30], y[:30], method="sparse", alpha=0.9)
    assert folds == 27 and failures == 0 and score >= 0.0
