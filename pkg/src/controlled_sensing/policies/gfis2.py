"""Greedy Fisher-information sensor selection: pick the control that
maximizes ``phi(x_hat, u)`` at the most likely predicted state."""

from __future__ import annotations

from dataclasses import dataclass

from ..fisher import FisherTable
from ..kalman import declare_state


@dataclass(frozen=True)
class PolicyDecision:
    control: int
    diagnostic: float


def gfis2_select(table: FisherTable, p_pred) -> PolicyDecision:
    x_hat = declare_state(p_pred)
    u = int(table.best_control[x_hat])
    return PolicyDecision(u, float(table.phi[x_hat, u]))
