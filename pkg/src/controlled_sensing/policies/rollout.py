"""Closed-loop episodes: control selection, measurement, Kalman-like update."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..fisher import FisherTable
from ..kalman import PosteriorMode, declare_state, to_belief, update
from ..markov import sample_trajectory, validate_transition_matrix
from ..sensing import ObservationModel, sample_observation
from .dp import DpPolicy
from .gfis2 import PolicyDecision, gfis2_select


class Policy(Protocol):
    name: str

    def select(self, p_pred: np.ndarray, rng: np.random.Generator) -> PolicyDecision: ...


@dataclass(frozen=True)
class Gfis2Policy:
    table: FisherTable
    name: str = "gfis2"

    def select(self, p_pred, rng):
        return gfis2_select(self.table, p_pred)


@dataclass(frozen=True)
class DpSelector:
    """Receding-horizon use of a DP solution: every step consults the
    stage-1 table at the grid point nearest the predicted belief."""

    policy: DpPolicy
    name: str = "dp"

    def select(self, p_pred, rng):
        u, v = self.policy.decide(p_pred, 1)
        return PolicyDecision(u, v)


@dataclass(frozen=True)
class RandomPolicy:
    n_controls: int
    name: str = "random"

    def select(self, p_pred, rng):
        return PolicyDecision(int(rng.integers(self.n_controls)), float("nan"))


@dataclass(frozen=True)
class FixedPolicy:
    control: int
    name: str = "fixed"

    def select(self, p_pred, rng):
        return PolicyDecision(self.control, float("nan"))


@dataclass(frozen=True)
class FullBudgetPolicy:
    """Uniformly random among the controls that spend the whole budget."""

    candidates: tuple[int, ...]
    name: str = "full-budget"

    @classmethod
    def for_model(cls, model: ObservationModel, budget: int | None = None):
        totals = [sum(u) for u in model.controls]
        top = budget if budget is not None else max(totals)
        cands = tuple(i for i, t in enumerate(totals) if t == top)
        if not cands:
            raise ValueError(f"no control spends the full budget {top}")
        return cls(cands)

    def select(self, p_pred, rng):
        return PolicyDecision(self.candidates[int(rng.integers(len(self.candidates)))], float("nan"))


@dataclass(frozen=True)
class EpisodeRecord:
    policy: str
    seed: int
    true_states: np.ndarray  # (L+1,)
    posteriors: np.ndarray  # (L+1, n) raw filter output
    declared: np.ndarray  # (L+1,)
    controls: np.ndarray  # (L+1,) control that produced y_k

    def __len__(self):
        return len(self.true_states)


def episode_streams(seed: int):
    """Independent (state, noise, policy) generators derived from one seed.

    The state and noise streams do not depend on the policy, so episodes run
    with the same seed share their ground truth and standard-normal draws.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def run_policy(
    policy: Policy,
    model: ObservationModel,
    P,
    pi,
    L: int,
    seed: int = 0,
    posterior_mode: PosteriorMode = "project",
) -> EpisodeRecord:
    P = validate_transition_matrix(P)
    pi = np.asarray(pi, dtype=float)
    state_rng, noise_rng, policy_rng = episode_streams(seed)
    states = sample_trajectory(P, pi, L, state_rng).states
    Z = noise_rng.standard_normal((L + 1, model.max_dim))
    n = model.n_states
    posteriors = np.empty((L + 1, n))
    declared = np.empty(L + 1, dtype=np.int64)
    controls = np.empty(L + 1, dtype=np.int64)

    p_pred = pi
    u = policy.select(p_pred, policy_rng).control
    for k in range(L + 1):
        y = sample_observation(model, states[k], u, z=Z[k])
        post = update(model, p_pred, y, u).posterior
        posteriors[k] = post
        controls[k] = u
        belief = to_belief(post, posterior_mode)
        declared[k] = declare_state(belief)
        p_pred = P @ belief
        if k < L:
            u = policy.select(p_pred, policy_rng).control
    return EpisodeRecord(policy.name, seed, states, posteriors, declared, controls)
