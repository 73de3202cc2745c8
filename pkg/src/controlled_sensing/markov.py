"""Finite-state Markov chain: transition matrix checks, belief prediction and
ground-truth trajectory sampling.

States are 0-based indices. Transition matrices are column-stochastic:
``P[j, i] = P(x_{k+1} = j | x_k = i)`` so that a belief is predicted with
``P @ p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NegativeEntry, NonStochastic

STOCHASTIC_TOL = 1e-9

# The transition matrix reported for the 4-state activity example
# (Sit, Stand, Run, Walk), stored column-stochastic.
ACTIVITY_TRANSITION_MATRIX = np.array(
    [
        [0.6, 0.2, 0.0, 0.4],
        [0.1, 0.4, 0.1, 0.0],
        [0.0, 0.1, 0.3, 0.3],
        [0.3, 0.3, 0.6, 0.3],
    ]
)


@dataclass(frozen=True)
class StateSpace:
    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 states, got {self.n}")
        if self.labels is not None and len(self.labels) != self.n:
            raise DimensionMismatch(f"{len(self.labels)} labels for {self.n} states")

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    seed: object = field(default=None, compare=False)

    def __len__(self):
        return len(self.states)


def validate_transition_matrix(P) -> np.ndarray:
    """Check that ``P`` is square, entrywise in [0, 1] and column-stochastic.

    Returns the matrix as a float array. Column sums are checked first, so a
    row-stochastic matrix is reported as :class:`NonStochastic` naming the
    first offending column.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"transition matrix must be square, got shape {P.shape}")
    sums = P.sum(axis=0)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > STOCHASTIC_TOL:
            raise NonStochastic(i, float(s))
    bad = np.argwhere((P < 0.0) | (P > 1.0))
    if len(bad):
        r, c = bad[0]
        raise NegativeEntry(int(r), int(c), float(P[r, c]))
    return P


def predict_belief(P, p) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    p = np.asarray(p, dtype=float)
    if P.shape[1] != p.shape[-1]:
        raise DimensionMismatch(f"belief of length {p.shape[-1]} for {P.shape[1]}-state chain")
    return P @ p


def stationary_distribution(P) -> np.ndarray:
    """Eigenvector of ``P`` for eigenvalue 1, normalised to a distribution."""
    w, v = np.linalg.eig(np.asarray(P, dtype=float))
    k = int(np.argmin(np.abs(w - 1.0)))
    s = np.real(v[:, k])
    return s / s.sum()


def sample_trajectory(P, pi, L: int, seed=None) -> Trajectory:
    """Draw ``x_0 ~ pi`` and ``x_{k+1} ~ P[:, x_k]`` for ``k < L``.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`,
    including an existing Generator (which is then advanced).
    """
    P = validate_transition_matrix(P)
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (P.shape[0],):
        raise DimensionMismatch(f"initial distribution of shape {pi.shape} for {P.shape[0]} states")
    if L < 0:
        raise ValueError("L must be nonnegative")
    rng = np.random.default_rng(seed)
    # Inverse-CDF sampling on column cumulative sums; one uniform per step.
    cum = np.cumsum(P, axis=0)
    cum[-1, :] = 1.0
    u = rng.random(L + 1)
    states = np.empty(L + 1, dtype=np.int64)
    pi_cum = np.cumsum(pi)
    pi_cum[-1] = 1.0
    states[0] = np.searchsorted(pi_cum, u[0], side="right")
    for k in range(L):
        states[k + 1] = np.searchsorted(cum[:, states[k]], u[k + 1], side="right")
    return Trajectory(states=states, seed=seed)
