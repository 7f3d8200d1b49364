import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrf.checks import dense_sylvester_solve, random_sylvester
from ctrf.numerics import CGBreakdown, CGConfig, cg_solve, nuclear_norm, numeric_rank, svd_thin, svt

seeds = st.integers(0, 2**31 - 1)


def test_cg_config_validation():
    with pytest.raises(ValueError):
        CGConfig(tol=0.0)
    with pytest.raises(ValueError):
        CGConfig(max_iter=0)


def test_cg_identity(rng):
    rhs = rng.standard_normal((4, 3))
    res = cg_solve(lambda g: g, rhs)
    np.testing.assert_allclose(res.x, rhs, rtol=1e-15)
    assert res.iters == 1 and res.residual <= 1e-8


def test_cg_scalar_sylvester():
    a, alpha, beta, r = 2.0, 3.0, 0.5, np.array([[4.0]])
    res = cg_solve(lambda g: a * g * alpha + g * beta, r)
    assert res.iters <= 1
    assert res.x[0, 0] == pytest.approx(4.0 / 6.5, rel=1e-15)


def test_cg_zero_rhs():
    res = cg_solve(lambda g: 2 * g, np.zeros((2, 2)), np.ones((2, 2)))
    assert not res.x.any() and res.iters == 0


def test_cg_shape_and_nan_errors():
    with pytest.raises(ValueError):
        cg_solve(lambda g: g, np.ones((2, 2)), np.ones((3, 2)))
    with pytest.raises(CGBreakdown):
        cg_solve(lambda g: g * np.nan, np.ones((2, 2)))


def test_cg_max_iter_reports_residual(rng):
    ptp, a, b, rhs = random_sylvester(np.random.default_rng(3))
    res = cg_solve(lambda g: ptp @ g @ a + g @ b, rhs, None, CGConfig(tol=1e-15, max_iter=1))
    assert res.iters == 1


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cg_matches_dense_solve(seed):
    ptp, a, b, rhs = random_sylvester(np.random.default_rng(seed))
    x = cg_solve(lambda g: ptp @ g @ a + g @ b, rhs, None, CGConfig(1e-13, 2000)).x
    ref = dense_sylvester_solve(ptp, a, b, rhs)
    assert np.linalg.norm(x - ref) <= 1e-6 * np.linalg.norm(ref)


def test_dense_oracle_against_scipy_sylvester(rng):
    # independent check of the Kronecker oracle with P'P = I
    a = rng.standard_normal((4, 4))
    a = a @ a.T + np.eye(4)
    b = np.eye(4) * 0.5
    rhs = rng.standard_normal((5, 4))
    x = dense_sylvester_solve(np.eye(5), a, b, rhs)
    ref = scipy.linalg.solve_sylvester(np.zeros((5, 5)), a + b, rhs)
    np.testing.assert_allclose(x, ref, rtol=1e-10)


def _spd_system(seed, n=30, cond=1e4):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    a = q @ np.diag(np.geomspace(1, cond, n)) @ q.T
    return a, rng.standard_normal((n, 1)), rng.standard_normal((n, 1))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_cg_energy_error_monotone(seed):
    a, b, x0 = _spd_system(seed)
    x_star = np.linalg.solve(a, b)
    errs = []

    def energy(x):
        e = x - x_star
        errs.append(float(np.vdot(e, a @ e)))

    energy(x0)
    cg_solve(lambda g: a @ g, b, x0, CGConfig(1e-12, 60), callback=energy)
    assert all(e1 <= e0 * (1 + 1e-10) + 1e-12 for e0, e1 in zip(errs, errs[1:]))


def test_cg_residual_need_not_be_monotone():
    # CG minimizes the energy-norm error; the residual norm can rise on ill-conditioned systems
    rises = 0
    for seed in range(20):
        a, b, x0 = _spd_system(seed)
        res = []
        cg_solve(lambda g: a @ g, b, x0, CGConfig(1e-12, 60), callback=lambda x: res.append(np.linalg.norm(b - a @ x)))
        rises += any(r1 > r0 * (1 + 1e-10) for r0, r1 in zip(res, res[1:]))
    assert rises > 0


def test_cg_psd_operator_with_null_space(rng):
    p = rng.standard_normal((2, 5))
    op = lambda g: p.T @ (p @ g)
    rhs = p.T @ rng.standard_normal((2, 3))
    res = cg_solve(op, rhs)
    assert res.residual <= 1e-8


def test_svd_thin_examples(rng):
    u, s, v = svd_thin(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(s, [3, 1])
    a, b = rng.standard_normal(5), rng.standard_normal(4)
    s = svd_thin(np.outer(a, b))[1]
    assert s[0] == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b), rel=1e-12)
    assert s[1] < 1e-12 * s[0]
    m = rng.standard_normal((10, 6))
    u, s, v = svd_thin(m)
    assert np.linalg.norm(u * s @ v.T - m) <= 1e-10 * np.linalg.norm(m)
    assert np.abs(u.T @ u - np.eye(6)).max() < 1e-10
    assert np.abs(v.T @ v - np.eye(6)).max() < 1e-10
    assert (np.diff(s) <= 0).all() and (s >= 0).all()
    with pytest.raises(ValueError):
        svd_thin(np.array([[np.inf, 0.0]]))


def test_svt_examples(rng):
    m = rng.standard_normal((6, 4))
    np.testing.assert_allclose(svt(m, 0.0), m, atol=1e-12)
    np.testing.assert_allclose(svt(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), atol=1e-15)
    with pytest.raises(ValueError):
        svt(m, -1.0)


def test_svt_matches_independent_svd(rng):
    for _ in range(10):
        m = rng.standard_normal((7, 5))
        u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        ref = u @ np.diag(np.maximum(s - 0.7, 0)) @ vt
        assert np.abs(svt(m, 0.7) - ref).max() <= 1e-10


def test_svt_proximal_optimality(rng):
    tau = 0.5
    for _ in range(10):
        m = rng.standard_normal((6, 4))
        x = svt(m, tau)
        best = tau * nuclear_norm(x) + 0.5 * np.sum((x - m) ** 2)
        for _ in range(200):
            y = x + rng.standard_normal(x.shape) * rng.choice([1e-3, 1e-2, 1e-1])
            assert best < tau * nuclear_norm(y) + 0.5 * np.sum((y - m) ** 2)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(0.0, 3.0))
def test_svt_nonexpansive(seed, tau):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((5, 4)), rng.standard_normal((5, 4))
    assert np.linalg.norm(svt(a, tau) - svt(b, tau)) <= np.linalg.norm(a - b) + 1e-8


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(0.05, 3.0))
def test_svt_rank(seed, tau):
    m = np.random.default_rng(seed).standard_normal((6, 5))
    s = np.linalg.svd(m, compute_uv=False)
    expected = int(np.sum(s > tau))
    got = np.linalg.svd(svt(m, tau), compute_uv=False)
    assert int(np.sum(got > 1e-12)) == expected


def test_numeric_rank():
    assert numeric_rank(np.zeros((3, 3))) == 0
    assert numeric_rank(np.diag([1.0, 1e-12, 0.0])) == 1
    assert numeric_rank(np.eye(4)) == 4
    assert nuclear_norm(np.diag([3.0, -1.0])) == pytest.approx(4.0)
