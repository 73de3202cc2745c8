"""Policy comparison on a scenario: build tables once, run matched-seed
episodes, aggregate metrics and write result files."""

from __future__ import annotations

import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..fisher import FisherTable, build_fisher_table
from ..policies.dp import DpPolicy, dp_solve
from ..policies.rollout import (
    DpSelector,
    EpisodeRecord,
    FixedPolicy,
    FullBudgetPolicy,
    Gfis2Policy,
    RandomPolicy,
    run_policy,
)
from ..sensing import ObservationModel
from .config import ScenarioConfig, check_policy_name
from .metrics import MetricsReport, summarize
from .results import write_allocation, write_episodes, write_fisher_table, write_metrics

log = logging.getLogger(__name__)


@dataclass
class ComparisonResult:
    reports: dict[str, MetricsReport]
    episodes: dict[str, list[EpisodeRecord]]
    model: ObservationModel
    fisher_table: FisherTable
    dp_policy: DpPolicy | None = None
    files: list[Path] = field(default_factory=list)


def build_dp(cfg: ScenarioConfig, model: ObservationModel | None = None, workers: int = 1, **overrides) -> DpPolicy:
    model = model or cfg.build_model()
    params = dict(L=cfg.dp.horizon, d=cfg.dp.resolution, samples=cfg.dp.samples, seed=cfg.dp.seed)
    params.update({k: v for k, v in overrides.items() if v is not None})
    return dp_solve(model, cfg.transition_matrix, workers=workers, **params)


def make_policy(name: str, model: ObservationModel, table: FisherTable, dp: DpPolicy | None, budget: int):
    check_policy_name(name, model.n_controls)
    if name == "gfis2":
        return Gfis2Policy(table)
    if name == "dp":
        return DpSelector(dp)
    if name == "random":
        return RandomPolicy(model.n_controls)
    if name == "full-budget":
        return FullBudgetPolicy.for_model(model, budget)
    return FixedPolicy(int(name.split(":", 1)[1]), name=name)


def run_comparison(
    cfg: ScenarioConfig,
    policies: Sequence[str] | None = None,
    out_dir=None,
    seeds: Sequence[int] | None = None,
    fisher_table: FisherTable | None = None,
    dp_policy: DpPolicy | None = None,
    workers: int = 1,
    timing: bool = False,
) -> ComparisonResult:
    policies = list(policies or cfg.policies)
    seeds = list(seeds if seeds is not None else cfg.seeds)
    model = cfg.build_model()
    table = fisher_table if fisher_table is not None else build_fisher_table(model)
    if table.phi.shape != (model.n_states, model.n_controls):
        raise ValueError("Fisher table does not match the scenario")
    if "dp" in policies and dp_policy is None:
        t0 = time.perf_counter()
        dp_policy = build_dp(cfg, model, workers=workers)
        log.info("built DP table in %.1fs", time.perf_counter() - t0)
    if dp_policy is not None and tuple(dp_policy.controls) != tuple(model.controls):
        raise ValueError("DP table was built for a different control set")

    reports, episodes = {}, {}
    for name in policies:
        pol = make_policy(name, model, table, dp_policy, cfg.budget)
        t0 = time.perf_counter()

        def one(seed, pol=pol):
            return run_policy(pol, model, cfg.transition_matrix, cfg.initial_distribution, cfg.horizon, seed, cfg.posterior_mode)

        if workers > 1:
            with concurrent.futures.ThreadPoolExecutor(workers) as ex:
                eps = list(ex.map(one, seeds))
        else:
            eps = [one(s) for s in seeds]
        wall = time.perf_counter() - t0
        episodes[name] = eps
        reports[name] = summarize(name, eps, model.controls, model.n_states, wall)

    result = ComparisonResult(reports, episodes, model, table, dp_policy)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [out / "episode.csv", out / "metrics.csv", out / "allocation.csv", out / "fisher_table.csv"]
        write_episodes(files[0], [e for name in policies for e in episodes[name]])
        write_metrics(files[1], list(reports.values()), timing=timing)
        write_allocation(files[2], list(reports.values()))
        write_fisher_table(files[3], table)
        result.files = files
    return result
