"""Generalized Fisher information for a discrete state parameter.

For a state ``x`` and an integer test point ``h`` (with ``x + h`` a valid
state) the generalized score is the scaled log-likelihood ratio

    S(y) = (1/h) ln f(y | x+h, u) / f(y | x, u)
         = (1/h) [ ld - 1/2 (y^T A y - 2 y^T b + c) ]

with ``ld = 1/2 ln(|Sigma_x| / |Sigma_{x+h}|)`` and ``A, b, c`` from
:func:`score_terms`. The generalized Fisher information is the variance of
``S`` under ``y ~ N(m_x, Sigma_x)``. Using the Gaussian quadratic-form
moments (``A`` symmetric)

    Var(y^T A y) = 2 tr((A Sigma)^2) + 4 m^T A Sigma A m
    Cov(y^T A y, y^T b) = 2 m^T A Sigma b

this is

    I = (1/h^2) [ 1/2 tr((A Sigma)^2) + b^T Sigma b
                  + m^T A Sigma A m - 2 m^T A Sigma b ].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTestPoint, NumericError
from .sensing import ObservationModel

CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class ScoreTerms:
    A: np.ndarray
    b: np.ndarray
    c: float
    half_log_det_ratio: float  # 1/2 ln(|Sigma_x| / |Sigma_{x+h}|)


@dataclass(frozen=True)
class FisherTable:
    """Precomputed ``phi(x, u)`` for every state and control."""

    phi: np.ndarray  # (n, alpha)
    best_h: np.ndarray  # (n, alpha) maximizing test point
    best_control: np.ndarray  # (n,)

    @classmethod
    def from_values(cls, phi, best_h) -> "FisherTable":
        phi = np.asarray(phi, dtype=float)
        # argmax returns the first maximum, i.e. the lowest control index.
        return cls(phi, np.asarray(best_h, dtype=int), np.argmax(phi, axis=1))

    @property
    def n_states(self) -> int:
        return self.phi.shape[0]

    @property
    def n_controls(self) -> int:
        return self.phi.shape[1]


def _check_test_point(model: ObservationModel, x: int, h: int):
    n = model.n_states
    if not 0 <= x < n:
        raise InvalidTestPoint(f"state {x} outside 0..{n - 1}")
    if h == 0 or not 0 <= x + h < n:
        raise InvalidTestPoint(f"test point {h} invalid for state {x} of {n}")


def score_terms(model: ObservationModel, x: int, h: int, u: int) -> ScoreTerms:
    _check_test_point(model, x, h)
    blk = model.blocks[u]
    Px, Pz = blk.precisions[x], blk.precisions[x + h]
    mx, mz = blk.means[x], blk.means[x + h]
    A = Pz - Px
    A = 0.5 * (A + A.T)
    b = Pz @ mz - Px @ mx
    c = float(mz @ Pz @ mz - mx @ Px @ mx)
    ld = 0.5 * float(blk.logdets[x] - blk.logdets[x + h])
    return ScoreTerms(A, b, c, ld)


def generalized_score(model: ObservationModel, y, x: int, h: int, u: int):
    """Score at ``y`` of shape (d,) or (m, d)."""
    t = score_terms(model, x, h, u)
    y = np.asarray(y, dtype=float)
    quad = np.einsum("...i,ij,...j->...", y, t.A, y)
    return (t.half_log_det_ratio - 0.5 * (quad - 2.0 * (y @ t.b) + t.c)) / h


def expected_score(model: ObservationModel, x: int, h: int, u: int) -> float:
    """Mean of the generalized score under state ``x``; equals ``-KL/h``."""
    t = score_terms(model, x, h, u)
    S, m = model.blocks[u].covs[x], model.blocks[u].means[x]
    mu = t.half_log_det_ratio - 0.5 * np.trace(t.A @ S) - 0.5 * m @ t.A @ m + m @ t.b - 0.5 * t.c
    return float(mu) / h


def generalized_fisher_info(model: ObservationModel, x: int, h: int, u: int) -> float:
    t = score_terms(model, x, h, u)
    S, m = model.blocks[u].covs[x], model.blocks[u].means[x]
    AS = t.A @ S
    Am = t.A @ m
    val = 0.5 * np.trace(AS @ AS) + t.b @ S @ t.b + Am @ S @ Am - 2.0 * Am @ S @ t.b
    val = float(val) / (h * h)
    if val < 0:
        scale = max(1.0, 0.5 * np.trace(AS @ AS) + abs(t.b @ S @ t.b) + abs(Am @ S @ Am))
        if val < -CLAMP_TOL * scale:
            raise NumericError(f"negative Fisher information {val} for x={x}, h={h}, u={u}")
        val = 0.0
    return val


def score_second_moment(model: ObservationModel, x: int, h: int, u: int) -> float:
    """Uncentered ``E[S^2]``; diagnostic only."""
    return generalized_fisher_info(model, x, h, u) + expected_score(model, x, h, u) ** 2


def enumerate_test_points(n: int, x: int) -> list[int]:
    """Offsets ``h != 0`` with ``0 <= x + h < n``."""
    if not 0 <= x < n:
        raise InvalidTestPoint(f"state {x} outside 0..{n - 1}")
    return [h for h in range(-x, n - x) if h != 0]


def phi(model: ObservationModel, x: int, u: int) -> tuple[float, int]:
    """Largest Fisher information over the valid test points of ``x``.

    Ties go to the smallest ``|h|``, then the smallest ``h``.
    """
    best_val, best_h = -np.inf, 0
    for h in sorted(enumerate_test_points(model.n_states, x), key=lambda h: (abs(h), h)):
        v = generalized_fisher_info(model, x, h, u)
        if v > best_val:
            best_val, best_h = v, h
    return best_val, best_h


def build_fisher_table(model: ObservationModel) -> FisherTable:
    """Evaluate ``phi`` once per (state, control) pair."""
    n, a = model.n_states, model.n_controls
    vals = np.empty((n, a))
    hs = np.empty((n, a), dtype=int)
    for x in range(n):
        for u in range(a):
            vals[x, u], hs[x, u] = phi(model, x, u)
    return FisherTable.from_values(vals, hs)
