"""Tick orchestration, metrics collection and Monte Carlo batching.

One tick runs a fixed phase order:

1. demography  2. social dynamics  3. policy application
4. probability computation + calibration  5. offender draws, co-offender
matching, crime events  6. recruitment  7. prison countdowns/releases and
new sanctions  8. metrics.

All randomness of a replica flows from one generator seeded with the
replica seed, consumed in this phase order (agent-id order inside each
phase), which makes a (config, seed) pair bit-reproducible regardless of
how many worker processes a batch uses.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ocsim.config import ScenarioConfig, scenario_hash
from ocsim.crime import (
    AGE_CLASS_LABELS,
    CrimeEvent,
    GENDERS,
    TickModifiers,
    apply_recruitment,
    commit_event,
    compute_tick_probabilities,
    draw_offenders,
    match_co_offenders,
    release,
    sample_group_size,
    sanction,
)
from ocsim.dynamics import step_demography, step_social
from ocsim.errors import ConfigError
from ocsim.multiplex import MultiplexGraph, batch_embeddedness, oc_embeddedness
from ocsim.policy import InterventionRecord, PolicyState, step_policies
from ocsim.population import Population, synthesize_population

CLASS_COLUMNS = tuple(
    f"mean_c_{gender.lower()}_{label}" for gender in GENDERS for label in AGE_CLASS_LABELS
)

METRIC_COLUMNS = (
    "tick",
    "crimes",
    "crime_rate_100k",
    "oc_members",
    "recruits",
    "incarcerated",
    "mean_r",
    "interventions",
) + CLASS_COLUMNS


@dataclass(frozen=True)
class MetricsFrame:
    tick: int
    crimes: int
    crime_rate_100k: float
    oc_members: int
    recruits: int
    incarcerated: int
    mean_r: float
    interventions: int
    class_mean_c: dict[tuple[str, str], float]

    def to_row(self) -> list:
        row = [
            self.tick,
            self.crimes,
            self.crime_rate_100k,
            self.oc_members,
            self.recruits,
            self.incarcerated,
            self.mean_r,
            self.interventions,
        ]
        for gender in GENDERS:
            for label in AGE_CLASS_LABELS:
                row.append(self.class_mean_c.get((gender, label), float("nan")))
        return row


class RunCancelled(Exception):
    pass


@dataclass
class RunState:
    config: ScenarioConfig
    pop: Population
    graph: MultiplexGraph
    rng: np.random.Generator
    seed: int
    tick: int = 0
    crime_log: list[CrimeEvent] = field(default_factory=list)
    intervention_log: list[InterventionRecord] = field(default_factory=list)
    policy_state: PolicyState = field(default_factory=PolicyState)
    crimes_window: deque = field(default_factory=lambda: deque(maxlen=12))
    policy_phase_enabled: bool = True
    _next_event_id: int = 0

    def next_event_id(self) -> int:
        self._next_event_id += 1
        return self._next_event_id - 1


@dataclass
class RunResult:
    scenario_hash: str
    seed: int
    frames: list[MetricsFrame]
    pop: Population
    graph: MultiplexGraph
    crime_log: list[CrimeEvent]
    intervention_log: list[InterventionRecord]


def init_run(
    config: ScenarioConfig, seed: int | None = None, policy_phase_enabled: bool = True
) -> RunState:
    """Synthesize the society and set up the run. Deterministic per seed."""
    if config.horizon_ticks < 12:
        raise ConfigError("horizon_ticks", "must be >= 12")
    run_seed = config.seed if seed is None else seed
    rng = np.random.default_rng(run_seed)
    if config.population.random_seed is not None:
        pop, graph = synthesize_population(config.population)
    else:
        pop, graph = synthesize_population(config.population, rng)
    return RunState(config=config, pop=pop, graph=graph, rng=rng, seed=run_seed)


def step(state: RunState) -> MetricsFrame:
    """Advance one tick through the eight phases and return its metrics."""
    if state.tick >= state.config.horizon_ticks:
        raise ValueError("run horizon already reached")
    state.tick += 1
    tick = state.tick
    cfg = state.config
    pop, graph, rng = state.pop, state.graph, state.rng
    tables = cfg.tables

    # 1-2: lifecycle
    step_demography(pop, graph, tables, cfg.population.propensity, cfg.lifecycle, tick, rng)
    step_social(pop, graph, cfg.lifecycle, tables, tick, rng)

    # 3: policy
    if cfg.policies and state.policy_phase_enabled:
        modifiers, records = step_policies(
            pop,
            graph,
            list(cfg.policies),
            state.policy_state,
            tick,
            rng,
            tables,
            embeddedness_of=_embeddedness_lookup(state),
            crime_probability_of=_provisional_probability_lookup(state, tick),
        )
        state.intervention_log.extend(records)
    else:
        modifiers, records = TickModifiers.none(), []

    # 4: probabilities + calibration
    probs = compute_tick_probabilities(
        pop,
        graph,
        cfg.baseline,
        cfg.risk_factors,
        tick,
        cfg.ticks_per_year,
        modifiers=modifiers,
        facilitator_multiplier=cfg.facilitator_crime_multiplier,
    )

    # 5: offender draws, matching, events
    initiators = draw_offenders(probs, rng)
    incarcerated = pop.incarcerated_ids()
    oc_members = pop.oc_member_ids()
    emb_cache: dict[int, float] = {}

    def cached_embeddedness(cand_id: int) -> float:
        if cand_id not in emb_cache:
            emb_cache[cand_id] = oc_embeddedness(
                graph,
                cand_id,
                cfg.h,
                oc_members,
                exclude=incarcerated,
                edge_mask=modifiers.edge_masks.get(cand_id),
            ).value
        return emb_cache[cand_id]

    # matching reads the phase-start graph; events are committed afterwards
    # so no event at tick t reflects edges created in this phase
    parties = []
    for initiator in initiators:
        size = sample_group_size(tables["co_offending_size"], rng)
        if size == 1:
            parties.append([initiator])
        else:
            parties.append(
                match_co_offenders(
                    initiator,
                    size,
                    graph,
                    pop,
                    probs,
                    cfg.h,
                    oc_members,
                    incarcerated,
                    modifiers,
                    embeddedness_of=cached_embeddedness,
                )
            )
    events = [
        commit_event(state.next_event_id(), tick, party, pop, graph) for party in parties
    ]

    # 6: recruitment
    recruits: list[int] = []
    for event in events:
        recruits.extend(apply_recruitment(event, pop, graph))

    # 7: countdowns and releases, then fresh sanctions
    for aid in sorted(pop.incarcerated_ids()):
        agent = pop.agents[aid]
        agent.incarceration.remaining_months -= 1
        if agent.incarceration.remaining_months <= 0:
            release(agent, pop, graph, cfg.recovery_fraction, rng)
    punishment_rate = tables["punishment"].scalar
    for event in events:
        sanction(event, pop, graph, punishment_rate, tables["sentence_months"], rng, modifiers)
    state.crime_log.extend(events)

    # 8: metrics
    state.crimes_window.append(len(events))
    alive = pop.alive_agents()
    free_ids = [a.id for a in alive if a.incarceration is None]
    oc_now = pop.oc_member_ids()
    if free_ids:
        values = batch_embeddedness(
            graph,
            free_ids,
            cfg.h,
            oc_now,
            exclude=pop.incarcerated_ids(),
            edge_masks=modifiers.edge_masks,
        )
        mean_r = float(np.mean([values[aid] for aid in free_ids]))
    else:
        mean_r = 0.0
    rate = (
        sum(state.crimes_window) / len(alive) * 100_000 if alive else 0.0
    )
    frame = MetricsFrame(
        tick=tick,
        crimes=len(events),
        crime_rate_100k=float(rate),
        oc_members=len(oc_now),
        recruits=len(recruits),
        incarcerated=len(pop.incarcerated_ids()),
        mean_r=mean_r,
        interventions=len(records),
        class_mean_c={k: float(v) for k, v in probs.calibration.post_mean.items()},
    )
    return frame


def _embeddedness_lookup(state: RunState):
    cache: dict[int, float] = {}

    def lookup(agent_id: int) -> float:
        if agent_id not in cache:
            cache[agent_id] = oc_embeddedness(
                state.graph,
                agent_id,
                state.config.h,
                state.pop.oc_member_ids(),
                exclude=state.pop.incarcerated_ids(),
            ).value
        return cache[agent_id]

    return lookup


def _provisional_probability_lookup(state: RunState, tick: int):
    """Offending probability before this tick's policy modifiers, used only
    to rank secondary-socialisation targets; computed lazily once."""
    holder: dict = {}

    def lookup(agent_id: int) -> float:
        if "probs" not in holder:
            holder["probs"] = compute_tick_probabilities(
                state.pop,
                state.graph,
                state.config.baseline,
                state.config.risk_factors,
                tick,
                state.config.ticks_per_year,
                facilitator_multiplier=state.config.facilitator_crime_multiplier,
            )
        return holder["probs"].per_tick_of(agent_id)

    return lookup


def run_scenario(
    config: ScenarioConfig,
    seed: int | None = None,
    policy_phase_enabled: bool = True,
    on_frame=None,
) -> RunResult:
    """Execute a full run; ``on_frame(frame, state)`` may raise RunCancelled
    to abort (used by the service for streaming and cancellation)."""
    state = init_run(config, seed=seed, policy_phase_enabled=policy_phase_enabled)
    frames = []
    for _ in range(config.horizon_ticks):
        frame = step(state)
        frames.append(frame)
        if on_frame is not None:
            on_frame(frame, state)
    return RunResult(
        scenario_hash=scenario_hash(config),
        seed=state.seed,
        frames=frames,
        pop=state.pop,
        graph=state.graph,
        crime_log=state.crime_log,
        intervention_log=state.intervention_log,
    )


# -- batching --------------------------------------------------------------------


@dataclass
class BatchResult:
    scenario_hash: str
    base_seed: int
    replications: int
    results: list[RunResult]
    summary: dict[str, np.ndarray]  # column -> (mean per tick, ci95 per tick)


def _run_replica(args) -> RunResult:
    config, seed = args
    return run_scenario(config, seed=seed)


def run_batch(
    config: ScenarioConfig,
    replications: int,
    jobs: int = 1,
    base_seed: int | None = None,
) -> BatchResult:
    """Independent replicas with seeds base_seed + r; identical results for
    any job count because every replica owns its generator."""
    if replications < 1:
        raise ConfigError("replications", "must be >= 1")
    base = config.seed if base_seed is None else base_seed
    tasks = [(config, base + r) for r in range(replications)]
    if jobs > 1 and replications > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, replications)) as pool:
            results = list(pool.map(_run_replica, tasks))
    else:
        results = [_run_replica(t) for t in tasks]
    return BatchResult(
        scenario_hash=scenario_hash(config),
        base_seed=base,
        replications=replications,
        results=results,
        summary=summarize_frames([r.frames for r in results]),
    )


def summarize_frames(frame_sets: list[list[MetricsFrame]]) -> dict[str, np.ndarray]:
    """Across replicas: per-tick mean and normal-approximation 95% CI
    half-width for every metric column."""
    n = len(frame_sets)
    ticks = min(len(fs) for fs in frame_sets)
    table = np.array(
        [[fs[t].to_row() for t in range(ticks)] for fs in frame_sets], dtype=float
    )  # (replicas, ticks, columns)
    out: dict[str, np.ndarray] = {"tick": table[0, :, 0]}
    for c, name in enumerate(METRIC_COLUMNS):
        if name == "tick":
            continue
        column = table[:, :, c]
        mean = column.mean(axis=0)
        if n > 1:
            ci = 1.96 * column.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            ci = np.zeros(ticks)
        out[f"{name}_mean"] = mean
        out[f"{name}_ci95"] = ci
    return out
