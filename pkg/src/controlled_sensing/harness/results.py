"""CSV emission and reading. Floats are written with 9 significant digits."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..fisher import FisherTable
from ..policies.rollout import EpisodeRecord
from .metrics import MetricsReport


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r])


def write_episodes(path, episodes: Sequence[EpisodeRecord]):
    n = episodes[0].posteriors.shape[1]
    header = ["policy", "seed", "step", "true_state", "declared_state", "control_index"] + [f"p_{i}" for i in range(n)]

    def rows():
        for e in episodes:
            for k in range(len(e)):
                yield [e.policy, e.seed, k, e.true_states[k], e.declared[k], e.controls[k], *e.posteriors[k]]

    _write(Path(path), header, rows())


def write_metrics(path, reports: Sequence[MetricsReport], timing: bool = False):
    header = ["policy", "episodes", "steps", "mse", "mse_se", "detection_accuracy", "accuracy_se"]
    if timing:
        header.append("wall_time")
    rows = []
    for r in reports:
        row = [r.policy, r.n_episodes, r.steps, r.mse, r.mse_se, r.detection_accuracy, r.accuracy_se]
        if timing:
            row.append(r.wall_time)
        rows.append(row)
    _write(Path(path), header, rows)


def write_allocation(path, reports: Sequence[MetricsReport]):
    rows = []
    for r in reports:
        for s, row in enumerate(r.avg_allocation):
            for l, v in enumerate(row):
                rows.append([r.policy, s, l, v])
    _write(Path(path), ["policy", "state", "sensor", "mean_samples"], rows)


def write_fisher_table(path, table: FisherTable):
    rows = [
        [x, u, table.phi[x, u], table.best_h[x, u]]
        for x in range(table.n_states)
        for u in range(table.n_controls)
    ]
    _write(Path(path), ["state", "control", "phi", "best_h"], rows)


def read_fisher_table(path) -> FisherTable:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows or set(rows[0]) != {"state", "control", "phi", "best_h"}:
        raise ValueError(f"{path} is not a Fisher table CSV")
    n = 1 + max(int(r["state"]) for r in rows)
    a = 1 + max(int(r["control"]) for r in rows)
    phi = np.full((n, a), np.nan)
    hs = np.zeros((n, a), dtype=int)
    for r in rows:
        phi[int(r["state"]), int(r["control"])] = float(r["phi"])
        hs[int(r["state"]), int(r["control"])] = int(r["best_h"])
    if np.isnan(phi).any():
        raise ValueError(f"{path} does not cover every (state, control) pair")
    return FisherTable.from_values(phi, hs)
