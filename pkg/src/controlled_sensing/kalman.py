"""Kalman-like approximate MMSE filter for a Markov chain observed through
controlled Gaussian measurements.

The chain state is treated as an indicator vector ``x``; given a predicted
belief ``p`` the filter applies the linear-MMSE update

    Sigma = diag(p) - p p^T
    y_pred = M p
    G = Sigma M^T (M Sigma M^T + sum_i p_i Q_i)^{-1}
    p_post = p + G (y - y_pred)

which is exactly the LMMSE estimator of ``x`` from ``y`` under the belief.
``p_post`` always sums to one but may leave the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionMismatch, NonPDMixture, SingularInnovation
from .markov import predict_belief
from .sensing import ObservationModel

PosteriorMode = Literal["raw", "renormalize", "project"]
POSTERIOR_MODES = ("raw", "renormalize", "project")


@dataclass(frozen=True)
class FilterState:
    predicted: np.ndarray
    posterior: np.ndarray
    gain: np.ndarray
    predicted_obs: np.ndarray
    pred_cov: np.ndarray


def conditional_covariance(p) -> np.ndarray:
    """Covariance of an indicator vector distributed according to ``p``."""
    p = np.asarray(p, dtype=float)
    return np.diag(p) - np.outer(p, p)


def mixture_covariance(model: ObservationModel, p_pred, u: int, check: bool = True) -> np.ndarray:
    p_pred = np.asarray(p_pred, dtype=float)
    Qt = np.tensordot(p_pred, model.blocks[u].covs, axes=1)
    if check and np.any(p_pred < 0):
        # Negative weights can break positive-definiteness.
        if np.linalg.eigvalsh(Qt)[0] <= 0:
            raise NonPDMixture("mixture covariance lost positive-definiteness; project the belief first")
    return Qt


def kalman_gain(model: ObservationModel, p_pred: np.ndarray, u: int):
    M = model.mean_matrix(u)
    Sigma = conditional_covariance(p_pred)
    Qt = mixture_covariance(model, p_pred, u)
    SMt = Sigma @ M.T
    S = M @ SMt + Qt
    try:
        cf = cho_factor(S, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    # G = Sigma M^T S^{-1}; S symmetric so G^T = S^{-1} M Sigma.
    G = cho_solve(cf, SMt.T).T
    return G, M @ p_pred, Sigma


def update(model: ObservationModel, p_pred, y, u: int) -> FilterState:
    """Measurement update from a predicted belief."""
    p_pred = np.asarray(p_pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape != (model.dim(u),):
        raise DimensionMismatch(f"observation of shape {y.shape}, control {u} produces ({model.dim(u)},)")
    if p_pred.shape != (model.n_states,):
        raise DimensionMismatch(f"belief of shape {p_pred.shape} for {model.n_states} states")
    G, y_pred, Sigma = kalman_gain(model, p_pred, u)
    posterior = p_pred + G @ (y - y_pred)
    return FilterState(p_pred, posterior, G, y_pred, Sigma)


def filter_step(model: ObservationModel, P, p_prev, y, u: int) -> FilterState:
    """One prediction plus measurement update."""
    return update(model, predict_belief(P, p_prev), y, u)


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    if np.all(v >= 0) and abs(v.sum() - 1.0) <= 1e-12:
        return v.copy()
    s = np.sort(v)[::-1]
    css = np.cumsum(s) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(s - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def renormalize(v) -> np.ndarray:
    """Clip negatives to zero and rescale to unit sum."""
    w = np.maximum(np.asarray(v, dtype=float), 0.0)
    s = w.sum()
    return w / s if s > 0 else np.full(len(w), 1.0 / len(w))


def to_belief(v, mode: PosteriorMode = "project") -> np.ndarray:
    """Map a raw posterior to the belief carried into the next step."""
    if mode == "project":
        return project_to_simplex(v)
    if mode == "renormalize":
        return renormalize(v)
    if mode == "raw":
        return np.asarray(v, dtype=float)
    raise ValueError(f"unknown posterior mode {mode!r}")


def declare_state(p) -> int:
    """Index of the largest entry; ties go to the lowest index."""
    return int(np.argmax(p))
