"""Agent-based simulator of recruitment into an organized-crime group.

A synthetic urban society of agents lives on a five-layer multiplex network
(household, friendship, work/school, co-offending, OC group). Each tick,
agents age, socialize, commit crimes, recruit co-offenders into the OC group
and get incarcerated; policy interventions can be scheduled against any of
these mechanics. The package ships a batch experiment runner, a CLI and an
HTTP control service for the dashboard.
"""

__version__ = "0.1.0"

from ocsim.multiplex import Layer, MultiplexGraph, oc_embeddedness, social_proximity

__all__ = [
    "Layer",
    "MultiplexGraph",
    "oc_embeddedness",
    "social_proximity",
    "__version__",
]


def __getattr__(name):
    # engine/config re-exports resolved lazily to keep import cost low
    if name in ("init_run", "step", "run_scenario", "run_batch"):
        from ocsim import engine

        return getattr(engine, name)
    if name in ("load_scenario", "parse_scenario", "scenario_hash", "ScenarioConfig"):
        from ocsim import config

        return getattr(config, name)
    raise AttributeError(f"module 'ocsim' has no attribute {name!r}")
