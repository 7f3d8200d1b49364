"""Coupled tensor-ring factorization (CTRF) and its nuclear-norm variant (NCTRF).

The HR cube ``X`` (M x N x B) is modelled as a 3-core ring
``G1 (R1 x M x R2)``, ``G2 (R2 x N x R3)``, ``G3 (R3 x B x R1)``. The
observations are rings with degraded cores::

    Y = ring(G1 x_2 P1, G2 x_2 P2, G3)       # low-resolution HSI
    Z = ring(G1, G2, G3 x_2 P3)              # high-resolution MSI

Each core is updated in turn by solving the normal equations of its
(convex) block subproblem with matrix-shaped CG. NCTRF splits ``G3`` into an
auxiliary copy ``G0`` carrying the nuclear-norm penalty and ties the two with
an augmented Lagrangian.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .degradation import DegradationModel
from .numerics import CGBreakdown, CGConfig, cg_solve, nuclear_norm, svt
from .ring import TRCores, merge_cores, tr_init, tr_reconstruct
from .tensor import as_tensor, fold_n, mode2_ttm, mode_n_unfold, tr_unfold

__all__ = [
    "RANK_PRESETS",
    "SolverError",
    "FusionProblem",
    "SolverConfig",
    "SolverState",
    "SolveResult",
    "init_state",
    "ctrf_objective",
    "nctrf_objective",
    "augmented_lagrangian",
    "core_system",
    "update_core",
    "update_g1",
    "update_g2",
    "update_g3",
    "update_g0",
    "update_multiplier",
    "solve",
]

log = logging.getLogger(__name__)

# TR ranks reported for the three noise levels
RANK_PRESETS = {
    "snr20": (3, 150, 3),
    "snr30": (4, 200, 4),
    "snr40": (5, 250, 5),
}

MODES = ("ctrf", "nctrf")
CG_STARTS = ("warm", "zero")


class SolverError(RuntimeError):
    """Numerical failure inside the outer loop."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"outer iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


@dataclass
class FusionProblem:
    y: np.ndarray
    z: np.ndarray
    model: DegradationModel
    ranks: tuple

    def __post_init__(self):
        self.y = as_tensor(self.y)
        self.z = as_tensor(self.z)
        self.ranks = tuple(int(r) for r in self.ranks)
        if len(self.ranks) != 3 or min(self.ranks) < 1:
            raise ValueError(f"need three positive TR ranks, got {self.ranks}")
        if self.y.shape != self.model.hsi_shape:
            raise ValueError(f"HSI shape {self.y.shape} does not match operators {self.model.hsi_shape}")
        if self.z.shape != self.model.msi_shape:
            raise ValueError(f"MSI shape {self.z.shape} does not match operators {self.model.msi_shape}")

    @property
    def hr_shape(self):
        return self.model.hr_shape

    @cached_property
    def y_unfoldings(self):
        """Cyclic unfoldings ``Y_<1>, Y_<2>, Y_<3>``."""
        return [tr_unfold(self.y, k) for k in (1, 2, 3)]

    @cached_property
    def z_unfoldings(self):
        return [tr_unfold(self.z, k) for k in (1, 2, 3)]


@dataclass
class SolverConfig:
    lam: float = 1e-3
    rho: float = 1.5
    mu0: float = 1e-4
    mu_max: float = 1e6
    outer_iters: int = 50
    cg: CGConfig = field(default_factory=CGConfig)
    seed: int = 0
    mode: str = "nctrf"
    # "warm" starts each CG at the current core (monotone block descent);
    # "zero" with a small cg.max_iter acts as an implicit ridge on noisy data
    cg_start: str = "warm"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.cg_start not in CG_STARTS:
            raise ValueError(f"cg_start must be one of {CG_STARTS}, got {self.cg_start!r}")
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if self.mu_max < self.mu0:
            raise ValueError("mu_max must be >= mu0")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.outer_iters < 0:
            raise ValueError("outer_iters must be non-negative")


@dataclass
class SolverState:
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g0: np.ndarray
    l: np.ndarray
    mu: float
    trace: list = field(default_factory=list)

    @property
    def cores(self):
        return TRCores([self.g1, self.g2, self.g3])

    def core(self, k):
        return (self.g1, self.g2, self.g3)[k]

    def set_core(self, k, g):
        setattr(self, ("g1", "g2", "g3")[k], g)


@dataclass
class SolveResult:
    cores: TRCores
    x_hat: np.ndarray
    trace: list
    state: SolverState


def init_state(problem, cfg, cores=None):
    """Random (or given) cores with ``G0 = G3``, zero multiplier and ``mu = mu0``."""
    if cores is None:
        cores = tr_init(problem.hr_shape, problem.ranks, seed=cfg.seed)
    g1, g2, g3 = (np.array(g, dtype=np.float64) for g in cores)
    ring = TRCores([g1, g2, g3])
    if ring.shape != problem.hr_shape or ring.ranks != problem.ranks:
        raise ValueError(
            f"initial ring {ring.shape}/{ring.ranks} does not match problem {problem.hr_shape}/{problem.ranks}"
        )
    return SolverState(g1, g2, g3, g3.copy(), np.zeros_like(g3), cfg.mu0)


def _hsi_ring(state, model):
    return [mode2_ttm(state.g1, model.p1), mode2_ttm(state.g2, model.p2), state.g3]


def _msi_ring(state, model):
    return [state.g1, state.g2, mode2_ttm(state.g3, model.p3)]


def ctrf_objective(state, problem):
    """Data-fit terms ``(total, ||Y - Y_hat||^2, ||Z - Z_hat||^2)``."""
    y_hat = tr_reconstruct(TRCores(_hsi_ring(state, problem.model)))
    z_hat = tr_reconstruct(TRCores(_msi_ring(state, problem.model)))
    hsi = float(np.sum(np.square(problem.y - y_hat)))
    msi = float(np.sum(np.square(problem.z - z_hat)))
    return hsi + msi, hsi, msi


def nctrf_objective(state, problem, cfg):
    """CTRF data fit plus ``lam * ||G3_<2>||_*``."""
    total, _, _ = ctrf_objective(state, problem)
    return total + cfg.lam * nuclear_norm(tr_unfold(state.g3, 2))


def augmented_lagrangian(state, problem, cfg):
    """Augmented Lagrangian of the split problem (penalty on ``G0``, coupling to ``G3``)."""
    total, _, _ = ctrf_objective(state, problem)
    diff = state.g0 - state.g3
    return (
        total
        + cfg.lam * nuclear_norm(mode_n_unfold(state.g0, 2))
        + float(np.vdot(state.l, diff))
        + 0.5 * state.mu * float(np.vdot(diff, diff))
    )


# operators acting on the left of each core's mode-2 unfolding, per observation
def _left_operators(model, k):
    hsi = (model.p1, model.p2, None)[k]
    msi = (None, None, model.p3)[k]
    return hsi, msi


def core_system(state, problem, k, penalty=False):
    """Normal equations for core `k` (0-based) as ``(apply, rhs, x0)``.

    With data unfoldings ``D_<k>`` and rest-of-ring matrices ``C`` the block
    objective is ``sum ||D - P G C||^2`` over both observations, whose
    minimizer satisfies ``sum P'P G CC' = sum P' D C'``. With `penalty` the
    ``<L, G0 - G3> + mu/2 ||G0 - G3||^2`` coupling adds ``mu/2 G`` on the left
    and ``(L + mu G0)/2`` on the right (unfoldings along mode 2).
    """
    model = problem.model
    terms = []
    for ring, data, p in (
        (_hsi_ring(state, model), problem.y_unfoldings[k], _left_operators(model, k)[0]),
        (_msi_ring(state, model), problem.z_unfoldings[k], _left_operators(model, k)[1]),
    ):
        rest = merge_cores(ring, (k + 1) % 3, (k - 1) % 3)
        c = tr_unfold(rest, 2).T  # (R_k R_{k+1}) x J
        gram = c @ c.T
        lhs = data @ c.T
        if p is not None:
            lhs = p.T @ lhs
            ptp = p.T @ p
        else:
            ptp = None
        terms.append((ptp, gram, lhs))

    rhs = terms[0][2] + terms[1][2]
    shift = 0.0
    if penalty:
        shift = 0.5 * state.mu
        rhs = rhs + 0.5 * (mode_n_unfold(state.l, 2) + state.mu * mode_n_unfold(state.g0, 2))

    (ptp_a, gram_a, _), (ptp_b, gram_b, _) = terms

    def apply(g):
        out = (g if ptp_a is None else ptp_a @ g) @ gram_a
        out += (g if ptp_b is None else ptp_b @ g) @ gram_b
        if shift:
            out += shift * g
        return out

    return apply, rhs, mode_n_unfold(state.core(k), 2)


def update_core(state, problem, cfg, k, penalty=False, iteration=None):
    """Block minimization over core `k` (exact to CG tolerance); returns the new core."""
    apply, rhs, x0 = core_system(state, problem, k, penalty)
    if cfg.cg_start == "zero":
        x0 = None
    try:
        res = cg_solve(apply, rhs, x0, cfg.cg)
    except CGBreakdown as exc:
        raise SolverError(f"CG failed on core {k + 1}: {exc}", iteration) from exc
    if res.residual > cfg.cg.tol:
        log.debug("core %d: CG stopped at residual %.3e after %d iterations", k + 1, res.residual, res.iters)
    return fold_n(res.x, state.core(k).shape, 2)


def update_g1(state, problem, cfg, iteration=None):
    return update_core(state, problem, cfg, 0, iteration=iteration)


def update_g2(state, problem, cfg, iteration=None):
    return update_core(state, problem, cfg, 1, iteration=iteration)


def update_g3(state, problem, cfg, iteration=None):
    return update_core(state, problem, cfg, 2, penalty=cfg.mode == "nctrf", iteration=iteration)


def update_g0(state, cfg):
    """``G0 = fold_2(SVT_{lam/mu}(G3_(2) - L_(2)/mu))``."""
    if not state.mu > 0:
        raise ValueError("penalty mu must be positive")
    target = mode_n_unfold(state.g3, 2) - mode_n_unfold(state.l, 2) / state.mu
    return fold_n(svt(target, cfg.lam / state.mu), state.g3.shape, 2)


def update_multiplier(state, cfg):
    """``L += mu (G0 - G3)`` then ``mu = min(mu_max, rho mu)``."""
    l = state.l + state.mu * (state.g0 - state.g3)
    return l, min(cfg.mu_max, cfg.rho * state.mu)


def sweep(state, problem, cfg, iteration=None):
    """One pass of block updates, in place."""
    state.g1 = update_g1(state, problem, cfg, iteration)
    state.g2 = update_g2(state, problem, cfg, iteration)
    state.g3 = update_g3(state, problem, cfg, iteration)
    if cfg.mode == "nctrf":
        state.g0 = update_g0(state, cfg)
        state.l, state.mu = update_multiplier(state, cfg)


def _record(state, problem, cfg, it, t0, reference):
    total, hsi, msi = ctrf_objective(state, problem)
    row = {"iteration": it, "hsi_term": hsi, "msi_term": msi}
    if cfg.mode == "nctrf":
        nuc = cfg.lam * nuclear_norm(tr_unfold(state.g3, 2))
        row.update(
            objective=total + nuc,
            nuclear_term=nuc,
            mu=state.mu,
            g0_g3_residual=float(np.linalg.norm(state.g0 - state.g3)),
        )
    else:
        row.update(objective=total, nuclear_term=None, mu=None, g0_g3_residual=None)
    if reference is not None:
        x_hat = tr_reconstruct(state.cores)
        row["rmse"] = float(np.sqrt(np.mean(np.square(x_hat - reference))))
    row["wall_seconds"] = time.perf_counter() - t0
    if not math.isfinite(row["objective"]):
        raise SolverError("objective became non-finite", it)
    return row


def solve(problem, cfg=None, init=None, reference=None, callback=None):
    """Run `cfg.outer_iters` sweeps from `init` (random ring if omitted).

    Parameters
    ----------
    problem : FusionProblem
    cfg : SolverConfig, optional
    init : sequence of three cores, optional
    reference : ndarray, optional
        Ground-truth cube; adds an ``rmse`` entry to every trace row.
    callback : callable, optional
        ``callback(iteration, state)`` after each sweep.

    Returns
    -------
    SolveResult
    """
    cfg = cfg or SolverConfig()
    state = init_state(problem, cfg, init)
    if reference is not None:
        reference = as_tensor(reference)
    t0 = time.perf_counter()
    for it in range(1, cfg.outer_iters + 1):
        sweep(state, problem, cfg, it)
        state.trace.append(_record(state, problem, cfg, it, t0, reference))
        if callback is not None:
            callback(it, state)
    cores = state.cores
    return SolveResult(cores, tr_reconstruct(cores), state.trace, state)
