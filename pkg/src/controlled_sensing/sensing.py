"""Controlled multivariate-Gaussian observation model.

A control is an allocation ``(N_1, ..., N_s)`` of samples to sensors. Under
state ``i`` and control ``u`` the observation is ``N(m_i^u, Q_i^u)`` where the
mean stacks ``N_l`` copies of each sensor's per-state mean and the covariance
is block diagonal with one AR(1)-plus-noise Toeplitz block per active sensor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag, cho_solve, solve_triangular, toeplitz

from .errors import (
    BudgetExceeded,
    CholeskyFailure,
    DimensionMismatch,
    EmptyControl,
    InvalidARParameter,
    ValidationError,
)

LOG_2PI = float(np.log(2.0 * np.pi))
JITTER = 1e-10


@dataclass(frozen=True)
class SensorSpec:
    """One sensor: per-state mean and AR innovation variance, shared AR(1)
    correlation, additive noise variance and the per-step sample cap."""

    means: tuple[float, ...]
    ar_variances: tuple[float, ...]
    ar_parameter: float
    noise_variance: float
    max_samples: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "ar_variances", tuple(float(v) for v in self.ar_variances))
        if len(self.means) != len(self.ar_variances):
            raise DimensionMismatch("means and ar_variances must have one entry per state")
        if not abs(self.ar_parameter) < 1.0:
            raise InvalidARParameter(f"|ar_parameter| must be < 1, got {self.ar_parameter}")
        if any(v < 0 for v in self.ar_variances):
            raise ValidationError("ar_variances", "must be nonnegative")
        if not self.noise_variance > 0:
            raise ValidationError("noise_variance", "must be strictly positive")
        if self.max_samples < 1:
            raise ValidationError("max_samples", "must be a positive integer")

    @property
    def n_states(self) -> int:
        return len(self.means)


def build_sensor_covariance(spec: SensorSpec, state: int, n_samples: int) -> np.ndarray:
    """``sigma^2/(1 - phi^2) * T + sigma_z^2 * I`` with ``T`` the Toeplitz
    matrix with first row ``(1, phi, ..., phi^(n-1))``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    phi = spec.ar_parameter
    if not abs(phi) < 1.0:
        raise InvalidARParameter(f"|ar_parameter| must be < 1, got {phi}")
    T = toeplitz(phi ** np.arange(n_samples))
    scale = spec.ar_variances[state] / (1.0 - phi * phi)
    return scale * T + spec.noise_variance * np.eye(n_samples)


def enumerate_controls(max_samples: Sequence[int], budget: int) -> list[tuple[int, ...]]:
    """All nonzero allocations with total <= budget and per-sensor caps.

    Ordered by total samples, then by the number of active sensors, then
    descending lexicographically; for three sensors and budget 2 this gives
    (1,0,0) (0,1,0) (0,0,1) (2,0,0) (0,2,0) (0,0,2) (1,1,0) (1,0,1) (0,1,1).
    """
    ranges = [range(min(m, budget) + 1) for m in max_samples]
    out = [u for u in itertools.product(*ranges) if 0 < sum(u) <= budget]
    out.sort(key=lambda u: (sum(u), sum(1 for v in u if v), tuple(-v for v in u)))
    return out


def cholesky(Q: np.ndarray, what: str = "covariance") -> np.ndarray:
    """Lower Cholesky factor; retries once with ``1e-10 * I`` added."""
    try:
        return np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(Q + JITTER * np.eye(Q.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"{what} is not positive definite") from exc


@dataclass(frozen=True)
class _ControlBlock:
    """Per-control arrays over all states: means (n, d), covs (n, d, d) and
    the derived Cholesky factors, precisions and log-determinants."""

    means: np.ndarray
    covs: np.ndarray
    chols: np.ndarray
    precisions: np.ndarray
    logdets: np.ndarray

    @classmethod
    def from_arrays(cls, means, covs, where=""):
        means = np.asarray(means, dtype=float)
        covs = np.asarray(covs, dtype=float)
        n, d = means.shape
        if covs.shape != (n, d, d):
            raise DimensionMismatch(f"{where}: covariance shape {covs.shape} does not match means {means.shape}")
        covT = np.swapaxes(covs, 1, 2)
        if not np.allclose(covs, covT, rtol=1e-10, atol=1e-12):
            raise ValidationError(where or "covariance", "covariance matrices must be symmetric")
        covs = 0.5 * (covs + covT)
        chols = np.stack([cholesky(c, f"{where} state {i} covariance") for i, c in enumerate(covs)])
        eye = np.eye(d)
        precisions = np.stack([cho_solve((L, True), eye) for L in chols])
        precisions = 0.5 * (precisions + np.swapaxes(precisions, 1, 2))
        logdets = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
        for a in (means, covs, chols, precisions, logdets):
            a.setflags(write=False)
        return cls(means, covs, chols, precisions, logdets)


@dataclass(frozen=True)
class ObservationModel:
    """Gaussian observation statistics for every (state, control) pair.

    Controls are addressed by their index into :attr:`controls`.
    """

    controls: tuple[tuple[int, ...], ...]
    blocks: tuple[_ControlBlock, ...] = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.blocks[0].means.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def n_sensors(self) -> int:
        return len(self.controls[0])

    def dim(self, u: int) -> int:
        return self.blocks[u].means.shape[1]

    @property
    def max_dim(self) -> int:
        return max(self.dim(u) for u in range(self.n_controls))

    def mean(self, state: int, u: int) -> np.ndarray:
        return self.blocks[u].means[state]

    def cov(self, state: int, u: int) -> np.ndarray:
        return self.blocks[u].covs[state]

    def mean_matrix(self, u: int) -> np.ndarray:
        """``[m_1^u, ..., m_n^u]`` as a (d, n) matrix."""
        return self.blocks[u].means.T

    @classmethod
    def from_arrays(cls, controls, means, covs) -> "ObservationModel":
        """Build from explicit per-control arrays ``means[u]`` of shape (n, d_u)
        and ``covs[u]`` of shape (n, d_u, d_u)."""
        controls = tuple(tuple(int(v) for v in u) for u in controls)
        if len(controls) == 0 or len(controls) != len(means) or len(means) != len(covs):
            raise DimensionMismatch("need one mean/covariance set per control")
        if len(set(controls)) != len(controls):
            raise ValidationError("controls", "controls must be distinct")
        blocks = tuple(
            _ControlBlock.from_arrays(m, c, where=f"control {u}") for u, (m, c) in enumerate(zip(means, covs))
        )
        if len({b.means.shape[0] for b in blocks}) != 1:
            raise DimensionMismatch("all controls must cover the same states")
        return cls(controls, blocks)


def assemble_observation_model(
    specs: Sequence[SensorSpec], controls: Sequence[Sequence[int]], budget: int | None = None
) -> ObservationModel:
    if not specs:
        raise ValidationError("sensors", "at least one sensor is required")
    n = specs[0].n_states
    if any(s.n_states != n for s in specs):
        raise DimensionMismatch("all sensors must describe the same number of states")
    means, covs = [], []
    for k, u in enumerate(controls):
        u = tuple(int(v) for v in u)
        if len(u) != len(specs):
            raise DimensionMismatch(f"control {k} has {len(u)} entries for {len(specs)} sensors")
        if any(v < 0 for v in u):
            raise ValidationError(f"controls[{k}]", "sample counts must be nonnegative")
        if sum(u) == 0:
            raise EmptyControl(f"control {k} requests no samples")
        if budget is not None and sum(u) > budget:
            raise BudgetExceeded(f"control {k} = {u} exceeds budget {budget}")
        for spec, v in zip(specs, u):
            if v > spec.max_samples:
                raise BudgetExceeded(f"control {k} = {u} requests {v} samples from a sensor capped at {spec.max_samples}")
        m = np.array([[mu for spec, v in zip(specs, u) for mu in [spec.means[i]] * v] for i in range(n)])
        Q = np.stack(
            [block_diag(*[build_sensor_covariance(spec, i, v) for spec, v in zip(specs, u) if v > 0]) for i in range(n)]
        )
        means.append(m)
        covs.append(Q)
    return ObservationModel.from_arrays(controls, means, covs)


def sample_observation(model: ObservationModel, state: int, u: int, seed=None, z=None) -> np.ndarray:
    """``m + L z`` with ``L`` the Cholesky factor of the state's covariance.

    ``z`` may be passed directly (e.g. to share standard-normal draws across
    controls); only its first ``d(u)`` entries are used.
    """
    block = model.blocks[u]
    d = block.means.shape[1]
    if z is None:
        z = np.random.default_rng(seed).standard_normal(d)
    else:
        z = np.asarray(z, dtype=float)[..., :d]
    return block.means[state] + z @ block.chols[state].T


def log_pdf(model: ObservationModel, y, state: int, u: int) -> np.ndarray | float:
    """Gaussian log-density of ``y`` (shape (d,) or (m, d))."""
    block = model.blocks[u]
    y = np.asarray(y, dtype=float)
    d = block.means.shape[1]
    if y.shape[-1] != d:
        raise DimensionMismatch(f"observation has dimension {y.shape[-1]}, control {u} produces {d}")
    r = y - block.means[state]
    # Triangular solve against the Cholesky factor: ||L^{-1} r||^2.
    w = solve_triangular(block.chols[state], r.T if r.ndim > 1 else r, lower=True)
    maha = (w * w).sum(axis=0)
    out = -0.5 * d * LOG_2PI - 0.5 * block.logdets[state] - 0.5 * maha
    return float(out) if np.ndim(out) == 0 else out


def log_likelihoods(model: ObservationModel, y: np.ndarray, u: int) -> np.ndarray:
    """Log-densities of observations ``y`` (m, d) under every state: (m, n)."""
    block = model.blocks[u]
    y = np.atleast_2d(y)
    d = block.means.shape[1]
    out = np.empty((y.shape[0], block.means.shape[0]))
    for i in range(block.means.shape[0]):
        r = y - block.means[i]
        maha = np.einsum("mi,ij,mj->m", r, block.precisions[i], r)
        out[:, i] = -0.5 * d * LOG_2PI - 0.5 * block.logdets[i] - 0.5 * maha
    return out
