"""Scenario files: schema, validation diagnostics, resolution, hashing.

A scenario is one JSON document (``schema_version`` 1) holding every knob
of a run: population synthesis, lifecycle rates, the offending model,
policy specs, horizon and seed. Distribution tables come either inline or
from a bundle directory (``"builtin"`` refers to the packaged synthetic
defaults). ``scenario_hash`` fingerprints the fully resolved payload, so
two scenarios hash equal exactly when every effective parameter matches.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ocsim.crime import BaselineRow, BaselineTable, RiskFactorSet
from ocsim.distributions import (
    DistributionTable,
    load_builtin_bundle,
    load_bundle,
    table_from_json,
    table_to_json,
)
from ocsim.dynamics import LifecycleConfig
from ocsim.errors import ConfigError
from ocsim.policy import PolicySpec
from ocsim.population import OcSeedConfig, PopulationConfig, PropensityParams

SCHEMA_VERSION = 1


class ScenarioValidationError(ValueError):
    """Carries every (field path, message) diagnostic found in a payload."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


@dataclass(frozen=True)
class ScenarioConfig:
    population: PopulationConfig
    lifecycle: LifecycleConfig
    baseline: BaselineTable
    risk_factors: RiskFactorSet
    facilitator_crime_multiplier: float = 1.2
    h: int = 2
    recovery_fraction: float = 0.5
    ticks_per_year: int = 12
    horizon_ticks: int = 120
    policies: tuple[PolicySpec, ...] = ()
    seed: int = 1

    @property
    def tables(self):
        return self.population.distributions


def default_scenario_path() -> Path:
    return Path(resources.files("ocsim").joinpath("data/default_scenario.json"))


def default_scenario_payload() -> dict:
    return json.loads(default_scenario_path().read_text())


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioValidationError([("file", f"scenario file not found: {path}")])
    except json.JSONDecodeError as exc:
        raise ScenarioValidationError([("file", f"not valid JSON: {exc}")])
    return parse_scenario(payload, base_dir=path.parent)


def parse_scenario(payload: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Parse and fully validate a scenario payload.

    Raises ScenarioValidationError listing every offending field path."""
    errors: list[tuple[str, str]] = []
    if not isinstance(payload, dict):
        raise ScenarioValidationError([("", "scenario must be a JSON object")])
    version = payload.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append(("schema_version", f"unsupported version {version!r}, expected {SCHEMA_VERSION}"))

    pop_section = payload.get("population", {}) or {}
    lifecycle_section = payload.get("lifecycle", {}) or {}
    crime_section = payload.get("crime", {}) or {}

    tables = _resolve_tables(pop_section.get("distributions", {"bundle": "builtin"}), base_dir, errors)

    propensity_section = pop_section.get("propensity", {}) or {}
    propensity = PropensityParams(
        mu=float(propensity_section.get("mu", 0.0)),
        sigma=float(propensity_section.get("sigma", 0.5)),
        threshold_percentile=float(propensity_section.get("threshold_percentile", 0.9)),
    )
    oc_section = pop_section.get("oc_seed", {}) or {}
    oc_seed = OcSeedConfig(
        member_count=int(oc_section.get("member_count", 30)),
        topology=str(oc_section.get("topology", "clique")),
        tree_branching=int(oc_section.get("tree_branching", 3)),
        gender_table=str(oc_section.get("gender_table", "oc_gender")),
        age_table=str(oc_section.get("age_table", "oc_age")),
    )
    population = PopulationConfig(
        population_size=int(pop_section.get("population_size", 10000)),
        unemployment_rate=float(pop_section.get("unemployment_rate", 0.12)),
        facilitator_share=float(pop_section.get("facilitator_share", 0.05)),
        propensity=propensity,
        oc_seed=oc_seed,
        distributions=tables,
        random_seed=pop_section.get("random_seed"),
    )
    try:
        population.validate()
    except ConfigError as exc:
        errors.append((exc.path, exc.message))

    lifecycle = LifecycleConfig(
        friendship_make_rate=float(lifecycle_section.get("friendship_make_rate", 0.4)),
        friendship_break_rate=float(lifecycle_section.get("friendship_break_rate", 0.15)),
        unemployment_target=float(
            lifecycle_section.get("unemployment_target", pop_section.get("unemployment_rate", 0.12))
        ),
        high_school_completion=float(lifecycle_section.get("high_school_completion", 0.75)),
        graduation_ages=dict(
            lifecycle_section.get(
                "graduation_ages", {"primary": 11, "secondary": 14, "high_school": 19}
            )
        ),
        newborn_propensity=str(lifecycle_section.get("newborn_propensity", "fresh")),
    )
    try:
        lifecycle.validate()
    except ConfigError as exc:
        errors.append((exc.path, exc.message))

    baseline = _parse_baseline(crime_section.get("baseline_table", "default"), errors)
    risk_factors = _parse_risk_factors(crime_section.get("risk_factors", "default"), errors)

    policies = []
    for i, block in enumerate(payload.get("policies", []) or []):
        path = f"policies[{i}]"
        if not isinstance(block, dict):
            errors.append((path, "policy spec must be an object"))
            continue
        spec = PolicySpec(
            kind=str(block.get("kind", "")),
            start_tick=int(block.get("start_tick", 0)),
            end_tick=int(block.get("end_tick", 0)),
            target_share=float(block.get("target_share", 0.5)),
            components=frozenset(block.get("components", []) or []),
            scrutiny_factor=float(block.get("scrutiny_factor", 1.0)),
            repression_multiplier=float(block.get("repression_multiplier", 1.0)),
            tie_weakening_factor=float(block.get("tie_weakening_factor", 0.5)),
            friends_to_add=int(block.get("friends_to_add", 2)),
            ties_to_remove=int(block.get("ties_to_remove", 2)),
        )
        try:
            spec.validate(path)
        except ConfigError as exc:
            errors.append((exc.path, exc.message))
        policies.append(spec)

    h = int(payload.get("h", 2))
    if not 1 <= h <= 3:
        errors.append(("h", "must be between 1 and 3"))
    recovery_fraction = float(payload.get("recovery_fraction", 0.5))
    if not 0 <= recovery_fraction <= 1:
        errors.append(("recovery_fraction", "must be in [0, 1]"))
    ticks_per_year = int(payload.get("ticks_per_year", 12))
    if ticks_per_year < 1:
        errors.append(("ticks_per_year", "must be >= 1"))
    horizon_ticks = int(payload.get("horizon_ticks", 120))
    if horizon_ticks < 12:
        errors.append(("horizon_ticks", "must be >= 12"))
    facilitator_crime_multiplier = float(crime_section.get("facilitator_crime_multiplier", 1.2))
    if facilitator_crime_multiplier <= 0:
        errors.append(("crime.facilitator_crime_multiplier", "must be positive"))
    seed = int(payload.get("seed", 1))

    if errors:
        raise ScenarioValidationError(errors)
    return ScenarioConfig(
        population=population,
        lifecycle=lifecycle,
        baseline=baseline,
        risk_factors=risk_factors,
        facilitator_crime_multiplier=facilitator_crime_multiplier,
        h=h,
        recovery_fraction=recovery_fraction,
        ticks_per_year=ticks_per_year,
        horizon_ticks=horizon_ticks,
        policies=tuple(policies),
        seed=seed,
    )


def _resolve_tables(spec, base_dir, errors) -> dict[str, DistributionTable]:
    try:
        if isinstance(spec, str):
            spec = {"bundle": spec}
        if "inline" in spec:
            return {
                name: table_from_json(name, block) for name, block in sorted(spec["inline"].items())
            }
        bundle = spec.get("bundle", "builtin")
        if bundle == "builtin":
            return load_builtin_bundle()
        path = Path(bundle)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return load_bundle(path)
    except ConfigError as exc:
        errors.append((f"population.{exc.path}", exc.message))
        return load_builtin_bundle()


def _parse_baseline(spec, errors) -> BaselineTable:
    if spec == "default":
        return BaselineTable.default()
    try:
        table = BaselineTable(
            BaselineRow(str(r[0]), str(r[1]), float(r[2]), float(r[3])) for r in spec
        )
        table.validate()
        return table
    except ConfigError as exc:
        errors.append((exc.path, exc.message))
    except (TypeError, ValueError, IndexError) as exc:
        errors.append(("crime.baseline_table", f"malformed rows: {exc}"))
    return BaselineTable.default()


def _parse_risk_factors(spec, errors) -> RiskFactorSet:
    if spec == "default":
        return RiskFactorSet()
    try:
        factors = RiskFactorSet({str(k): float(v) for k, v in spec.items()})
        factors.validate()
        return factors
    except ConfigError as exc:
        errors.append((exc.path, exc.message))
    except (TypeError, AttributeError, ValueError) as exc:
        errors.append(("crime.risk_factors", f"malformed mapping: {exc}"))
    return RiskFactorSet()


# -- canonical form & hashing ---------------------------------------------------


def canonical_payload(config: ScenarioConfig) -> dict:
    """Fully resolved scenario with tables inline; hashing input."""
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": config.seed,
        "horizon_ticks": config.horizon_ticks,
        "ticks_per_year": config.ticks_per_year,
        "h": config.h,
        "recovery_fraction": config.recovery_fraction,
        "population": {
            "population_size": config.population.population_size,
            "unemployment_rate": config.population.unemployment_rate,
            "facilitator_share": config.population.facilitator_share,
            "random_seed": config.population.random_seed,
            "propensity": {
                "mu": config.population.propensity.mu,
                "sigma": config.population.propensity.sigma,
                "threshold_percentile": config.population.propensity.threshold_percentile,
            },
            "oc_seed": {
                "member_count": config.population.oc_seed.member_count,
                "topology": config.population.oc_seed.topology,
                "tree_branching": config.population.oc_seed.tree_branching,
                "gender_table": config.population.oc_seed.gender_table,
                "age_table": config.population.oc_seed.age_table,
            },
            "distributions": {
                "inline": {
                    name: table_to_json(t) for name, t in sorted(config.tables.items())
                }
            },
        },
        "lifecycle": {
            "friendship_make_rate": config.lifecycle.friendship_make_rate,
            "friendship_break_rate": config.lifecycle.friendship_break_rate,
            "unemployment_target": config.lifecycle.unemployment_target,
            "high_school_completion": config.lifecycle.high_school_completion,
            "graduation_ages": dict(sorted(config.lifecycle.graduation_ages.items())),
            "newborn_propensity": config.lifecycle.newborn_propensity,
        },
        "crime": {
            "baseline_table": [
                [r.gender, r.age_label, r.probability, r.odds_ratio]
                for r in sorted(config.baseline.rows.values(), key=lambda r: (r.gender, r.age_label))
            ],
            "risk_factors": dict(sorted(config.risk_factors.odds_ratios.items())),
            "facilitator_crime_multiplier": config.facilitator_crime_multiplier,
        },
        "policies": [
            {
                "kind": p.kind,
                "start_tick": p.start_tick,
                "end_tick": p.end_tick,
                "target_share": p.target_share,
                "components": sorted(p.components),
                "scrutiny_factor": p.scrutiny_factor,
                "repression_multiplier": p.repression_multiplier,
                "tie_weakening_factor": p.tie_weakening_factor,
                "friends_to_add": p.friends_to_add,
                "ties_to_remove": p.ties_to_remove,
            }
            for p in config.policies
        ],
    }


def scenario_hash(config: ScenarioConfig) -> str:
    blob = json.dumps(canonical_payload(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
