"""Episode metrics: MSE of the raw posterior, detection accuracy and the
average sample allocation per true state."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..policies.rollout import EpisodeRecord


@dataclass(frozen=True)
class MetricsReport:
    policy: str
    mse: float
    mse_se: float
    detection_accuracy: float
    accuracy_se: float
    avg_allocation: np.ndarray  # (n, s); NaN rows for states never visited
    n_episodes: int
    steps: int
    wall_time: float = float("nan")

    @property
    def mse_out_of_range(self) -> bool:
        """Only possible with raw (unprojected) posteriors."""
        return not 0.0 <= self.mse <= 2.0


def squared_errors(ep: EpisodeRecord) -> np.ndarray:
    err = ep.posteriors.copy()
    err[np.arange(len(ep)), ep.true_states] -= 1.0
    return (err * err).sum(axis=1)


def compute_mse(episodes: Sequence[EpisodeRecord]) -> float:
    if not episodes:
        raise ValueError("no episodes")
    return float(np.concatenate([squared_errors(e) for e in episodes]).mean())


def compute_detection_accuracy(episodes: Sequence[EpisodeRecord]) -> float:
    if not episodes:
        raise ValueError("no episodes")
    hits = np.concatenate([e.declared == e.true_states for e in episodes])
    return float(hits.mean())


def compute_avg_allocation(episodes: Sequence[EpisodeRecord], controls, n_states: int) -> np.ndarray:
    if not episodes:
        raise ValueError("no episodes")
    alloc = np.asarray(controls, dtype=float)
    states = np.concatenate([e.true_states for e in episodes])
    used = alloc[np.concatenate([e.controls for e in episodes])]
    out = np.full((n_states, alloc.shape[1]), np.nan)
    for s in range(n_states):
        mask = states == s
        if mask.any():
            out[s] = used[mask].mean(axis=0)
    return out


def _se(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else float("nan")


def summarize(policy: str, episodes: Sequence[EpisodeRecord], controls, n_states: int, wall_time=float("nan")):
    """Pool steps across episodes; standard errors are across episodes."""
    per_mse = [compute_mse([e]) for e in episodes]
    per_acc = [compute_detection_accuracy([e]) for e in episodes]
    return MetricsReport(
        policy=policy,
        mse=compute_mse(episodes),
        mse_se=_se(per_mse),
        detection_accuracy=compute_detection_accuracy(episodes),
        accuracy_se=_se(per_acc),
        avg_allocation=compute_avg_allocation(episodes, controls, n_states),
        n_episodes=len(episodes),
        steps=sum(len(e) for e in episodes),
        wall_time=wall_time,
    )
