"""Finite-horizon dynamic programming over a quantized predicted-belief space.

Stage ``L`` (terminal):  ``J_L(p) = min_u p^T h(p, u)``.
Stage ``k < L``:         ``J_k(p) = min_u [ p^T h(p, u) + E_y J_{k+1}(q(P r(y,u) p / 1^T r(y,u) p)) ]``

where ``h`` is the per-state expected squared filtering error of the
Kalman-like update, ``r(y, u) = diag(f(y|i, u))`` and ``q`` snaps to the
nearest grid point. The expectation over ``y`` is taken under its marginal
``sum_i p_i f(y | i, u)``, so it is estimated by a plain average over draws
from that mixture.
"""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateLikelihood
from ..kalman import kalman_gain
from ..sensing import ObservationModel
from .grid import BeliefGrid

log = logging.getLogger(__name__)

TABLE_VERSION = 1
DEFAULT_SAMPLES = 4096
_CHUNK = 64


def dp_stage_cost_vector(model: ObservationModel, p_pred, u: int) -> np.ndarray:
    """``h_i = 1 - tr(G^T G Q_i) - ||p + G (m_i - y_pred)||^2`` for every state."""
    p = np.asarray(p_pred, dtype=float)
    G, y_pred, _ = kalman_gain(model, p, u)
    blk = model.blocks[u]
    GtG = G.T @ G
    tr = np.einsum("ij,kji->k", GtG, blk.covs)
    v = p[None, :] + (blk.means - y_pred) @ G.T
    return 1.0 - tr - (v * v).sum(axis=1)


def stage_cost(model: ObservationModel, p_pred, u: int) -> float:
    """Expected squared error ``p^T h(p, u)`` of one filter update."""
    p = np.asarray(p_pred, dtype=float)
    return float(p @ dp_stage_cost_vector(model, p, u))


@dataclass(frozen=True)
class StageTable:
    values: np.ndarray  # (K,) cost-to-go
    controls: np.ndarray  # (K,) minimizing control index
    brackets: np.ndarray  # (K, alpha) value of each control
    bracket_se: np.ndarray  # (K, alpha) Monte-Carlo standard error of each bracket


@dataclass(frozen=True)
class DpPolicy:
    grid: BeliefGrid
    stages: tuple[StageTable, ...]  # stages[0] is stage 1, stages[-1] is stage L
    controls: tuple[tuple[int, ...], ...]
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def horizon(self) -> int:
        return len(self.stages)

    def stage(self, k: int) -> StageTable:
        """Table for stage ``k`` in ``1..L``."""
        return self.stages[k - 1]

    def decide(self, p_pred, k: int = 1) -> tuple[int, float]:
        """Control and cost-to-go at the grid point nearest ``p_pred``."""
        t = self.stage(k)
        i = int(self.grid.nearest(p_pred)[0])
        return int(t.controls[i]), float(t.values[i])

    def save(self, path) -> None:
        np.savez(
            path,
            version=np.int64(TABLE_VERSION),
            kind=np.array("dp"),
            n=np.int64(self.grid.n),
            d=np.int64(self.grid.d),
            samples=np.int64(self.samples),
            seed=np.int64(self.seed),
            controls=np.array(self.controls, dtype=np.int64),
            values=np.stack([s.values for s in self.stages]),
            policy=np.stack([s.controls for s in self.stages]),
            brackets=np.stack([s.brackets for s in self.stages]),
            bracket_se=np.stack([s.bracket_se for s in self.stages]),
        )

    @classmethod
    def load(cls, path) -> "DpPolicy":
        with np.load(path, allow_pickle=False) as z:
            if str(z["kind"]) != "dp":
                raise ValueError(f"{path} is not a DP table")
            if int(z["version"]) != TABLE_VERSION:
                raise ValueError(f"unsupported DP table version {int(z['version'])}")
            grid = BeliefGrid.build(int(z["n"]), int(z["d"]))
            stages = tuple(
                StageTable(z["values"][k], z["policy"][k], z["brackets"][k], z["bracket_se"][k])
                for k in range(z["values"].shape[0])
            )
            controls = tuple(tuple(int(v) for v in u) for u in z["controls"])
            return cls(grid, stages, controls, int(z["samples"]), int(z["seed"]))


def _choose(costs: np.ndarray, se: np.ndarray) -> StageTable:
    controls = np.argmin(costs, axis=1)  # first minimum = lowest index
    values = costs[np.arange(len(costs)), controls]
    return StageTable(values, controls, costs, se)


def stage_cost_table(model: ObservationModel, grid: BeliefGrid) -> np.ndarray:
    """``p^T h(p, u)`` for every grid point and control: (K, alpha)."""
    pts = grid.points
    return np.array([[stage_cost(model, p, u) for u in range(model.n_controls)] for p in pts])


def dp_terminal(model: ObservationModel, grid: BeliefGrid, costs: np.ndarray | None = None) -> StageTable:
    if costs is None:
        costs = stage_cost_table(model, grid)
    return _choose(costs, np.zeros_like(costs))


def bayes_next_belief(P, p, loglik: np.ndarray) -> np.ndarray:
    """Exact filter-then-predict map ``P r p / 1^T r p`` from per-state
    log-likelihoods ``loglik`` (..., n), computed with log-sum-exp."""
    with np.errstate(divide="ignore"):
        logw = np.log(p) + loglik
    top = logw.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise DegenerateLikelihood("all state likelihoods underflowed")
    w = np.exp(logw - top)
    w /= w.sum(axis=-1, keepdims=True)
    return w @ np.asarray(P).T


def _loglik_all(blk, y: np.ndarray) -> np.ndarray:
    """Per-state log-densities of y (..., d) -> (..., n)."""
    n, d = blk.means.shape
    out = np.empty(y.shape[:-1] + (n,))
    for i in range(n):
        r = y - blk.means[i]
        maha = ((r @ blk.precisions[i]) * r).sum(axis=-1)
        out[..., i] = -0.5 * maha - 0.5 * blk.logdets[i] - 0.5 * d * np.log(2 * np.pi)
    return out


def _point_draws(seed: int, stage: int, idx: np.ndarray, M: int, dmax: int):
    # One independent stream per (seed, stage, grid point), shared by all
    # controls at that point.
    U = np.empty((len(idx), M))
    Z = np.empty((len(idx), M, dmax))
    for j, k in enumerate(idx):
        rng = np.random.default_rng([seed, stage, int(k)])
        U[j] = rng.random(M)
        Z[j] = rng.standard_normal((M, dmax))
    return U, Z


def _continuation(model, P, grid, J_next, pts, states, Z, u):
    blk = model.blocks[u]
    n, d = blk.means.shape
    y = np.empty(states.shape + (d,))
    z = Z[:, :, :d]
    for i in range(n):
        sel = states == i
        y[sel] = blk.means[i] + z[sel] @ blk.chols[i].T
    nxt = bayes_next_belief(P, pts[:, None, :], _loglik_all(blk, y))
    cont = J_next[grid.nearest(nxt.reshape(-1, n))].reshape(states.shape)
    return cont.mean(axis=1), cont.std(axis=1, ddof=1) / np.sqrt(states.shape[1])


def dp_backup(
    model: ObservationModel,
    P,
    grid: BeliefGrid,
    next_stage: StageTable,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    stage: int = 0,
    costs: np.ndarray | None = None,
    workers: int = 1,
) -> StageTable:
    """One Bellman backup; ``stage`` only keys the random streams."""
    if costs is None:
        costs = stage_cost_table(model, grid)
    P = np.asarray(P, dtype=float)
    K, alpha = len(grid), model.n_controls
    pts = grid.points
    cont = np.empty((K, alpha))
    se = np.empty((K, alpha))
    dmax = model.max_dim

    def run_chunk(lo):
        idx = np.arange(lo, min(lo + _CHUNK, K))
        U, Z = _point_draws(seed, stage, idx, samples, dmax)
        # Inverse-CDF draw of the true state from each point's belief.
        cum = np.cumsum(pts[idx], axis=1)
        states = (U[:, :, None] >= cum[:, None, :-1]).sum(axis=2)
        for u in range(alpha):
            cont[idx, u], se[idx, u] = _continuation(model, P, grid, next_stage.values, pts[idx], states, Z, u)

    starts = range(0, K, _CHUNK)
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(workers) as ex:
            list(ex.map(run_chunk, starts))
    else:
        for lo in starts:
            run_chunk(lo)
    return _choose(costs + cont, se)


def dp_solve(
    model: ObservationModel,
    P,
    L: int,
    d: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> DpPolicy:
    if L < 1:
        raise ValueError("DP horizon must be >= 1")
    grid = BeliefGrid.build(model.n_states, d)
    costs = stage_cost_table(model, grid)
    stages = [dp_terminal(model, grid, costs)]
    for k in range(L - 1, 0, -1):
        log.debug("DP backup for stage %d of %d", k, L)
        stages.insert(0, dp_backup(model, P, grid, stages[0], samples, seed, stage=k, costs=costs, workers=workers))
    return DpPolicy(grid, tuple(stages), model.controls, samples, seed)
