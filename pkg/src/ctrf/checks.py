"""Fast self-test of the algebraic identities the solver relies on."""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .numerics import CGConfig, cg_solve, svt
from .ring import TRCores, merge_cores, rank_bound_check, tr_init, tr_reconstruct
from .tensor import block_unfold, circ_shift, mode_n_unfold, tr_unfold

__all__ = [
    "CheckResult",
    "random_ring",
    "check_factorization_identity",
    "check_shift_invariance",
    "check_rank_bound",
    "check_svt",
    "check_cg",
    "run_checks",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def random_ring(rng, order=None, max_rank=4, max_dim=6):
    order = order or int(rng.integers(3, 5))
    shape = tuple(int(d) for d in rng.integers(2, max_dim + 1, size=order))
    ranks = tuple(int(r) for r in rng.integers(1, max_rank + 1, size=order))
    return tr_init(shape, ranks, seed=int(rng.integers(2**31)))


def _rel(a, b):
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(a - b) / scale)


def _interleaved_wrong(ring, last):
    # merges with the *right* core's index fastest: the negative control
    out = ring[0]
    for k in range(1, last + 1):
        nxt = ring[k]
        t = np.tensordot(out, nxt, axes=(2, 0))
        out = t.transpose(0, 2, 1, 3).reshape(out.shape[0], -1, nxt.shape[2], order="F")
    return out


def check_factorization_identity(n_rings=50, tol=1e-10, seed=0, corrupt=False):
    """``H[I_1..I_n, I_{n+1}..I_N] = G^{(1..n)}_(2) (G^{(n+1..N)}_<2>)^T`` for every split."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_rings):
        ring = random_ring(rng)
        full = tr_reconstruct(ring)
        n_modes = len(ring)
        for n in range(1, n_modes):
            left = _interleaved_wrong(ring, n - 1) if corrupt else merge_cores(ring, 0, n - 1)
            right = merge_cores(ring, n, n_modes - 1)
            lhs = mode_n_unfold(left, 2) @ tr_unfold(right, 2).T
            worst = max(worst, _rel(lhs, block_unfold(full, n)))
    return worst <= tol, f"max relative error {worst:.2e} over {n_rings} rings (tol {tol:g})"


def check_shift_invariance(n_rings=50, tol=1e-12, seed=1):
    """Reconstructing a rotated ring equals circularly shifting the reconstruction."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_rings):
        ring = random_ring(rng)
        full = tr_reconstruct(ring)
        for k in range(len(ring)):
            worst = max(worst, _rel(tr_reconstruct(ring.rotated(k)), circ_shift(full, k)))
    return worst <= tol, f"max relative error {worst:.2e} over {n_rings} rings (tol {tol:g})"


def check_rank_bound(n_rings=100, tol=1e-9, seed=2):
    """``rank(G(n)_<2>) >= rank(H_(n))`` for every mode of random rings."""
    rng = np.random.default_rng(seed)
    violations = 0
    total = 0
    for _ in range(n_rings):
        ring = random_ring(rng)
        for n in range(1, len(ring) + 1):
            _, _, holds = rank_bound_check(ring, n, tol)
            violations += not holds
            total += 1
    return violations == 0, f"{violations} violations in {total} mode checks"


def _svt_reference(m, tau):
    # LAPACK gesvd, independent of the gesdd path numpy takes
    u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    return (u * np.maximum(s - tau, 0.0)) @ vt


def check_svt(n_instances=10, n_perturb=200, tol=1e-10, seed=3):
    """SVT against an independent SVD, plus a proximal-optimality spot check."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    beaten = 0
    for _ in range(n_instances):
        rows, cols = (int(d) for d in rng.integers(2, 9, size=2))
        m = rng.standard_normal((rows, cols))
        tau = float(rng.uniform(0.1, 1.5))
        x = svt(m, tau)
        worst = max(worst, _rel(x, _svt_reference(m, tau)))

        def prox_obj(v):
            return tau * np.sum(np.linalg.svd(v, compute_uv=False)) + 0.5 * np.sum((v - m) ** 2)

        best = prox_obj(x)
        for _ in range(n_perturb):
            step = rng.standard_normal(m.shape) * 10.0 ** rng.uniform(-4, 0)
            if prox_obj(x + step) <= best:
                beaten += 1
    ok = worst <= tol and beaten == 0
    return ok, f"max deviation {worst:.2e}; {beaten} of {n_instances * n_perturb} perturbations beat SVT"


def random_sylvester(rng, max_dim=8):
    """Random SPD system ``P'P G A + G B = R`` with ``P'P`` PSD and ``A, B`` SPD."""
    m, k = (int(d) for d in rng.integers(1, max_dim + 1, size=2))
    p = rng.standard_normal((int(rng.integers(1, m + 1)), m))
    ptp = p.T @ p
    qa = rng.standard_normal((k, k))
    qb = rng.standard_normal((k, k))
    a = qa @ qa.T + 0.1 * np.eye(k)
    b = qb @ qb.T + 0.5 * np.eye(k)
    rhs = rng.standard_normal((m, k))
    return ptp, a, b, rhs


def dense_sylvester_solve(ptp, a, b, rhs):
    """Direct solve through the explicit Kronecker form (column-major vec)."""
    m, k = rhs.shape
    big = np.kron(a.T, ptp) + np.kron(b.T, np.eye(m))
    return np.linalg.solve(big, rhs.reshape(-1, order="F")).reshape(m, k, order="F")


def check_cg(n_systems=20, tol=1e-6, seed=4):
    """Matrix CG against the dense Kronecker-form solve on small Sylvester systems."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    cfg = CGConfig(tol=1e-13, max_iter=2000)
    for _ in range(n_systems):
        ptp, a, b, rhs = random_sylvester(rng)
        x = cg_solve(lambda g: ptp @ g @ a + g @ b, rhs, None, cfg).x
        worst = max(worst, _rel(x, dense_sylvester_solve(ptp, a, b, rhs)))
    return worst <= tol, f"max relative deviation {worst:.2e} over {n_systems} systems (tol {tol:g})"


def run_checks(corrupt_unfolding=False):
    """Run every check; returns a list of :class:`CheckResult`."""
    checks = [
        ("factorization identity", lambda: check_factorization_identity(corrupt=corrupt_unfolding)),
        ("circular shift invariance", check_shift_invariance),
        ("core rank bound", check_rank_bound),
        ("svt oracle", check_svt),
        ("cg oracle", check_cg),
    ]
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        ok, detail = fn()
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
