"""Scenario configuration (YAML) with validation.

See ``docs/config.md`` for the schema. Every validation failure raises
:class:`~controlled_sensing.errors.ValidationError` carrying the offending
field path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ..errors import ConfigError, ParseError, ValidationError
from ..kalman import POSTERIOR_MODES
from ..markov import StateSpace, validate_transition_matrix
from ..sensing import ObservationModel, SensorSpec, assemble_observation_model, enumerate_controls

CONFIG_VERSION = 1
KNOWN_POLICIES = ("gfis2", "dp", "random", "full-budget")


@dataclass(frozen=True)
class DpConfig:
    resolution: int = 10
    samples: int = 4096
    horizon: int = 10
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    states: StateSpace
    transition_matrix: np.ndarray
    initial_distribution: np.ndarray
    sensors: tuple[SensorSpec, ...]
    budget: int
    controls: tuple[tuple[int, ...], ...]
    horizon: int = 2000
    seeds: tuple[int, ...] = tuple(range(10))
    policies: tuple[str, ...] = ("gfis2", "dp", "random")
    dp: DpConfig = field(default_factory=DpConfig)
    posterior_mode: str = "project"
    overrides: tuple[dict, ...] = ()
    name: str = "scenario"

    @property
    def n_states(self) -> int:
        return self.states.n

    def build_model(self) -> ObservationModel:
        model = assemble_observation_model(self.sensors, self.controls, self.budget)
        if not self.overrides:
            return model
        means = [b.means.copy() for b in model.blocks]
        covs = [b.covs.copy() for b in model.blocks]
        for o in self.overrides:
            u, i = o["control"], o["state"]
            if "mean" in o:
                means[u][i] = o["mean"]
            if "cov" in o:
                covs[u][i] = o["cov"]
        return ObservationModel.from_arrays(self.controls, means, covs)


def _require(tree: dict, key: str, where: str = ""):
    if key not in tree:
        raise ValidationError(where + key, "missing required field")
    return tree[key]


def _int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(path, f"must be >= {minimum}, got {value}")
    return int(value)


def _floats(value, path: str, length: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(path, f"expected numbers, got {value!r}") from None
    if length is not None and arr.shape != (length,):
        raise ValidationError(path, f"expected {length} values, got shape {arr.shape}")
    return arr


def parse_config(tree: Any) -> ScenarioConfig:
    """Validate an already-parsed key/value tree."""
    if not isinstance(tree, dict):
        raise ParseError("config must be a mapping at the top level")
    version = _require(tree, "version")
    if version != CONFIG_VERSION:
        raise ValidationError("version", f"unsupported version {version!r} (expected {CONFIG_VERSION})")

    try:
        P = validate_transition_matrix(_require(tree, "transition_matrix"))
    except ConfigError as exc:
        if isinstance(exc, ValidationError):
            raise
        hint = ""
        M = np.asarray(tree["transition_matrix"], dtype=float)
        if M.ndim == 2 and np.allclose(M.sum(axis=1), 1.0, atol=1e-9):
            hint = "; rows sum to 1, but the matrix must be column-stochastic (entry [j][i] = P(next=j | now=i))"
        raise ValidationError("transition_matrix", f"{exc}{hint}") from None
    n = P.shape[0]

    st = tree.get("states", {}) or {}
    labels = st.get("labels")
    if "n" in st and _int(st["n"], "states.n", 2) != n:
        raise ValidationError("states.n", f"{st['n']} states but transition matrix is {n}x{n}")
    if labels is not None and len(labels) != n:
        raise ValidationError("states.labels", f"{len(labels)} labels for {n} states")
    states = StateSpace(n, tuple(str(s) for s in labels) if labels else None)

    if "initial_distribution" in tree:
        pi = _floats(tree["initial_distribution"], "initial_distribution", n)
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
            raise ValidationError("initial_distribution", "must be a probability vector")
    else:
        pi = np.full(n, 1.0 / n)

    budget = _int(_require(tree, "budget"), "budget", 1)
    ar_default = float(tree.get("ar_parameter", 0.0))
    noise_default = tree.get("noise_variance")
    raw_sensors = _require(tree, "sensors")
    if not isinstance(raw_sensors, list) or not raw_sensors:
        raise ValidationError("sensors", "expected a nonempty list")
    sensors = []
    for k, s in enumerate(raw_sensors):
        where = f"sensors[{k}]."
        noise = s.get("noise_variance", noise_default)
        if noise is None:
            raise ValidationError(where + "noise_variance", "missing (set per sensor or at top level)")
        try:
            sensors.append(
                SensorSpec(
                    means=_floats(_require(s, "means", where), where + "means", n),
                    ar_variances=_floats(_require(s, "ar_variances", where), where + "ar_variances", n),
                    ar_parameter=float(s.get("ar_parameter", ar_default)),
                    noise_variance=float(noise),
                    max_samples=_int(s.get("max_samples", budget), where + "max_samples", 1),
                    name=str(s.get("name", f"S{k + 1}")),
                )
            )
        except ValidationError as exc:
            if exc.field.startswith(where):
                raise
            raise ValidationError(where + exc.field, str(exc).split(": ", 1)[-1]) from None
        except ConfigError as exc:
            raise ValidationError(where.rstrip("."), str(exc)) from None

    raw_controls = tree.get("controls", "budget")
    if raw_controls == "budget":
        controls = enumerate_controls([s.max_samples for s in sensors], budget)
    else:
        controls = []
        for k, u in enumerate(raw_controls):
            if len(u) != len(sensors):
                raise ValidationError(f"controls[{k}]", f"expected {len(sensors)} entries")
            u = tuple(_int(v, f"controls[{k}]", 0) for v in u)
            if sum(u) == 0:
                raise ValidationError(f"controls[{k}]", "control requests no samples")
            if sum(u) > budget:
                raise ValidationError(f"controls[{k}]", f"exceeds budget {budget}")
            if any(v > s.max_samples for v, s in zip(u, sensors)):
                raise ValidationError(f"controls[{k}]", "exceeds a sensor's max_samples")
            controls.append(u)
        if len(set(controls)) != len(controls):
            raise ValidationError("controls", "controls must be distinct")
    controls = tuple(controls)

    dp_tree = tree.get("dp", {}) or {}
    dp = DpConfig(
        resolution=_int(dp_tree.get("resolution", 10), "dp.resolution", 1),
        samples=_int(dp_tree.get("samples", 4096), "dp.samples", 2),
        horizon=_int(dp_tree.get("horizon", 10), "dp.horizon", 1),
        seed=_int(dp_tree.get("seed", 0), "dp.seed", 0),
    )

    mode = (tree.get("filter", {}) or {}).get("posterior_mode", "project")
    if mode not in POSTERIOR_MODES:
        raise ValidationError("filter.posterior_mode", f"must be one of {POSTERIOR_MODES}")

    policies = tuple(tree.get("policies", ("gfis2", "dp", "random")))
    for k, p in enumerate(policies):
        check_policy_name(p, len(controls), f"policies[{k}]")

    seeds = tree.get("seeds", list(range(10)))
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    seeds = tuple(_int(s, "seeds", 0) for s in seeds)
    if not seeds:
        raise ValidationError("seeds", "need at least one seed")

    overrides = []
    for k, o in enumerate(tree.get("observation_overrides", []) or []):
        where = f"observation_overrides[{k}]"
        u = _int(_require(o, "control", where + "."), where + ".control", 0)
        i = _int(_require(o, "state", where + "."), where + ".state", 0)
        if u >= len(controls) or i >= n:
            raise ValidationError(where, "state or control index out of range")
        d = sum(controls[u])
        entry = {"control": u, "state": i}
        if "mean" in o:
            entry["mean"] = _floats(o["mean"], where + ".mean", d)
        if "cov" in o:
            cov = _floats(o["cov"], where + ".cov")
            if cov.shape != (d, d):
                raise ValidationError(where + ".cov", f"expected a {d}x{d} matrix")
            entry["cov"] = cov
        overrides.append(entry)

    cfg = ScenarioConfig(
        states=states,
        transition_matrix=P,
        initial_distribution=pi,
        sensors=tuple(sensors),
        budget=budget,
        controls=controls,
        horizon=_int(tree.get("horizon", 2000), "horizon", 0),
        seeds=seeds,
        policies=policies,
        dp=dp,
        posterior_mode=mode,
        overrides=tuple(overrides),
        name=str(tree.get("name", "scenario")),
    )
    try:
        cfg.build_model()
    except ConfigError as exc:
        raise ValidationError("sensors", str(exc)) from None
    return cfg


def check_policy_name(name: str, n_controls: int, path: str = "policies") -> None:
    if name in KNOWN_POLICIES:
        return
    if name.startswith("fixed:"):
        try:
            u = int(name.split(":", 1)[1])
        except ValueError:
            raise ValidationError(path, f"bad fixed policy {name!r}; use fixed:<control index>") from None
        if not 0 <= u < n_controls:
            raise ValidationError(path, f"control index {u} out of range 0..{n_controls - 1}")
        return
    raise ValidationError(path, f"unknown policy {name!r}; choose from {KNOWN_POLICIES} or fixed:<index>")


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_config(tree)


def bundled_scenario_path(name: str = "activity_wban") -> Path:
    return Path(__file__).resolve().parent.parent / "scenarios" / f"{name}.yaml"
