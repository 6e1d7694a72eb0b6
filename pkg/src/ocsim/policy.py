"""Policy interventions: socialisation programs and law-enforcement targeting.

Three treatment families, schedulable over tick windows and re-targeted
every 12 ticks:

* primary socialisation   -- juveniles (12-18) in OC families: weaken the
  OC-parent tie, add pro-social friends, pin the education track, employ
  the mother;
* secondary socialisation -- crime-prone school children (6-18): education
  guarantee, pro-social/anti-social tie surgery, extra friendships, class
  moves, mother/child employment;
* law enforcement         -- high-betweenness OC members or facilitator
  workers: scrutiny (probability damping + exclusion from OC co-offender
  pools) and repression (sanction multiplier).

Every attribute or graph mutation lands in exactly one InterventionRecord.
Scrutiny/repression/tie-masks are evaluation modifiers, not mutations; they
are rebuilt every tick into a TickModifiers for the crime pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ocsim.crime import TickModifiers, CRIME_WINDOW_MONTHS
from ocsim.errors import ConfigError
from ocsim.multiplex import Layer, MultiplexGraph, betweenness
from ocsim.population import Population

PRIMARY_SOCIALISATION = "primary_socialisation"
SECONDARY_SOCIALISATION = "secondary_socialisation"
LAW_ENFORCEMENT = "law_enforcement"
KINDS = (PRIMARY_SOCIALISATION, SECONDARY_SOCIALISATION, LAW_ENFORCEMENT)

COMPONENTS = {
    PRIMARY_SOCIALISATION: {"weaken_family_tie", "add_friends", "education_track", "mother_job"},
    SECONDARY_SOCIALISATION: {
        "education_guarantee",
        "prosocial_support",
        "social_activities",
        "class_reassignment",
        "mother_job",
        "child_job",
    },
    LAW_ENFORCEMENT: {"scrutiny", "repression", "facilitators"},
}

RESELECT_EVERY = 12


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    start_tick: int
    end_tick: int
    target_share: float = 0.5
    components: frozenset = frozenset()
    scrutiny_factor: float = 1.0
    repression_multiplier: float = 1.0
    tie_weakening_factor: float = 0.5
    friends_to_add: int = 2
    ties_to_remove: int = 2

    def validate(self, path: str = "policy") -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"{path}.kind", f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.start_tick >= self.end_tick:
            raise ConfigError(f"{path}.start_tick", "start_tick must be < end_tick")
        if not 0 <= self.target_share <= 1:
            raise ConfigError(f"{path}.target_share", "must be in [0, 1]")
        unknown = set(self.components) - COMPONENTS[self.kind]
        if unknown:
            raise ConfigError(
                f"{path}.components",
                f"{sorted(unknown)} not valid for {self.kind}; accepted: {sorted(COMPONENTS[self.kind])}",
            )
        if not 0 < self.scrutiny_factor <= 1:
            raise ConfigError(f"{path}.scrutiny_factor", "must be in (0, 1]")
        if self.repression_multiplier < 1:
            raise ConfigError(f"{path}.repression_multiplier", "must be >= 1")
        if not 0 <= self.tie_weakening_factor <= 1:
            raise ConfigError(f"{path}.tie_weakening_factor", "must be in [0, 1]")

    def active(self, tick: int) -> bool:
        return self.start_tick <= tick < self.end_tick


@dataclass(frozen=True)
class InterventionRecord:
    tick: int
    kind: str
    target: int
    actions: tuple[str, ...]


@dataclass
class PolicyState:
    """Mutable cross-tick bookkeeping for the scheduled specs."""

    targets: dict[int, list[int]] = field(default_factory=dict)
    treated: set[tuple[int, int]] = field(default_factory=set)
    damped_parents: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    job_promises: set[int] = field(default_factory=set)


# -- target selection -----------------------------------------------------------


def _take_share(ranked: list[int], share: float) -> list[int]:
    if not ranked or share <= 0:
        return []
    return ranked[: math.ceil(share * len(ranked))]


def select_primary_targets(
    pop: Population,
    graph: MultiplexGraph,
    spec: PolicySpec,
    embeddedness_of,
) -> list[int]:
    """Juveniles aged 12-18 with an OC parent, ranked by embeddedness."""
    eligible = []
    for agent in pop.agents.values():
        if not agent.free or not 12 <= agent.age_years <= 18:
            continue
        if any(
            p in pop.agents and pop.agents[p].alive and pop.agents[p].oc_member
            for p in agent.parent_ids
        ):
            eligible.append(agent.id)
    ranked = sorted(eligible, key=lambda aid: (-embeddedness_of(aid), aid))
    return _take_share(ranked, spec.target_share)


def select_secondary_targets(
    pop: Population, spec: PolicySpec, crime_probability_of
) -> list[int]:
    """School-attending 6-18, ranked by current offending probability."""
    eligible = [
        a.id
        for a in pop.agents.values()
        if a.free and 6 <= a.age_years <= 18 and a.school_id is not None
    ]
    ranked = sorted(eligible, key=lambda aid: (-crime_probability_of(aid), aid))
    return _take_share(ranked, spec.target_share)


def select_le_targets(
    pop: Population,
    graph: MultiplexGraph,
    spec: PolicySpec,
    exclude: set[int],
) -> list[int]:
    """Mode (a): OC members by betweenness over the criminal layers.
    Mode (b, `facilitators` component): everyone in a facilitator job."""
    if "facilitators" in spec.components:
        return sorted(a.id for a in pop.agents.values() if a.free and a.facilitator)
    members = sorted(aid for aid in pop.oc_member_ids() if pop.agents[aid].free)
    if not members:
        return []
    scores = betweenness(graph, (Layer.CO_OFFENDING, Layer.OC_GROUP), set(members))
    ranked = sorted(members, key=lambda aid: (-scores.get(aid, 0.0), aid))
    return _take_share(ranked, spec.target_share)


# -- application ------------------------------------------------------------------


def step_policies(
    pop: Population,
    graph: MultiplexGraph,
    specs: list[PolicySpec],
    state: PolicyState,
    tick: int,
    rng: np.random.Generator,
    tables,
    embeddedness_of,
    crime_probability_of,
) -> tuple[TickModifiers, list[InterventionRecord]]:
    """Run the policy phase: (re)select targets on cadence, apply one-shot
    components to the newly selected, rebuild this tick's modifiers.

    With no active spec this never touches the generator, so a run with an
    empty policy list is bit-identical to one with the phase disabled.
    """
    modifiers = TickModifiers.none()
    records: list[InterventionRecord] = []
    for aid in sorted(state.job_promises):
        agent = pop.agents.get(aid)
        if agent is None or not agent.free:
            continue
        if agent.age_years >= 16 and not agent.employed:
            from ocsim.dynamics import _hire, _leave_school

            actions = []
            if agent.school_id is not None:  # the job replaces school
                _leave_school(pop, graph, agent)
                actions.append("left_school")
            _hire(pop, graph, agent, tables, rng, tick)
            state.job_promises.discard(aid)
            actions.append(f"hired:{agent.employer_id}")
            records.append(
                InterventionRecord(tick, SECONDARY_SOCIALISATION, aid, tuple(actions))
            )

    for idx, spec in enumerate(specs):
        if not spec.active(tick):
            state.targets.pop(idx, None)
            state.damped_parents.pop(idx, None)
            continue
        if (tick - spec.start_tick) % RESELECT_EVERY == 0 or idx not in state.targets:
            _reselect(pop, graph, spec, idx, state, tick, rng, tables, records, embeddedness_of, crime_probability_of)
        _apply_tick_effects(pop, spec, idx, state, modifiers, rng)
    return modifiers, records


def _reselect(pop, graph, spec, idx, state, tick, rng, tables, records, embeddedness_of, crime_probability_of):
    if spec.kind == PRIMARY_SOCIALISATION:
        targets = select_primary_targets(pop, graph, spec, embeddedness_of)
    elif spec.kind == SECONDARY_SOCIALISATION:
        targets = select_secondary_targets(pop, spec, crime_probability_of)
    else:
        targets = select_le_targets(pop, graph, spec, pop.incarcerated_ids())
    state.targets[idx] = targets
    if spec.kind == PRIMARY_SOCIALISATION:
        state.damped_parents[idx] = [
            (t, p)
            for t in targets
            for p in sorted(pop.agents[t].parent_ids)
            if p in pop.agents and pop.agents[p].alive and pop.agents[p].oc_member
        ]
    for target in targets:
        if (idx, target) in state.treated:
            continue
        state.treated.add((idx, target))
        actions = _apply_one_shots(pop, graph, spec, target, state, tick, rng, tables)
        records.append(InterventionRecord(tick, spec.kind, target, tuple(actions) or ("selected",)))


def _apply_tick_effects(pop, spec, idx, state, modifiers: TickModifiers, rng) -> None:
    targets = state.targets.get(idx, [])
    if spec.kind == LAW_ENFORCEMENT:
        scrutiny_on = "scrutiny" in spec.components or not spec.components
        for t in targets:
            if not pop.agents[t].free:
                continue
            if scrutiny_on:
                modifiers.scrutiny[t] = modifiers.scrutiny.get(t, 1.0) * spec.scrutiny_factor
                modifiers.oc_match_blocked.add(t)
            if "repression" in spec.components:
                modifiers.repression[t] = modifiers.repression.get(t, 1.0) * spec.repression_multiplier
    elif spec.kind == PRIMARY_SOCIALISATION and (
        "weaken_family_tie" in spec.components or not spec.components
    ):
        # per-tick draw: the parent edge vanishes from the child's own
        # neighborhood evaluations with the configured probability
        for child, parent in state.damped_parents.get(idx, []):
            if not pop.agents[child].free or not pop.agents[parent].alive:
                continue
            if rng.random() < spec.tie_weakening_factor:
                pair = (min(child, parent), max(child, parent), Layer.HOUSEHOLD)
                mask = modifiers.edge_masks.get(child, frozenset())
                modifiers.edge_masks[child] = mask | {pair}


def _apply_one_shots(pop, graph, spec, target, state, tick, rng, tables) -> list[str]:
    agent = pop.agents[target]
    actions: list[str] = []
    comps = spec.components
    if spec.kind == PRIMARY_SOCIALISATION:
        if "weaken_family_tie" in comps or not comps:
            actions.append(f"tie_weakening_registered:{spec.tie_weakening_factor}")
        if "add_friends" in comps:
            actions += _add_prosocial_friends(pop, graph, agent, spec.friends_to_add, tick, rng)
        if "education_track" in comps:
            agent.education_pinned = True
            actions.append("education_pinned")
        if "mother_job" in comps:
            actions += _employ_mother(pop, graph, agent, tables, tick, rng)
    elif spec.kind == SECONDARY_SOCIALISATION:
        if "education_guarantee" in comps:
            agent.education_pinned = True
            actions.append("education_pinned")
        if "prosocial_support" in comps:
            actions += _add_prosocial_friends(pop, graph, agent, spec.friends_to_add, tick, rng)
            actions += _cut_criminal_friends(pop, graph, agent, spec.ties_to_remove, tick, rng)
        if "social_activities" in comps:
            actions += _add_random_friends(pop, graph, agent, spec.friends_to_add, tick, rng)
        if "class_reassignment" in comps:
            actions += _move_class(pop, graph, agent, rng)
        if "mother_job" in comps:
            actions += _employ_mother(pop, graph, agent, tables, tick, rng)
        if "child_job" in comps:
            state.job_promises.add(agent.id)
            agent.job_promised_at_16 = True
            actions.append("job_promised_at_16")
    else:  # law enforcement carries no one-shot mutations
        if "scrutiny" in comps or not comps:
            actions.append(f"scrutiny:{spec.scrutiny_factor}")
        if "repression" in comps:
            actions.append(f"repression:{spec.repression_multiplier}")
    return actions


def _prosocial_pool(pop, graph, agent, tick):
    window_floor = tick - (CRIME_WINDOW_MONTHS - 1)
    pool = []
    for other in pop.agents.values():
        if (
            other.id != agent.id
            and other.free
            and not other.oc_member
            and other.crimes_since(window_floor) == 0
            and abs(other.age_months - agent.age_months) <= 36
            and not graph.has_edge(Layer.FRIENDSHIP, agent.id, other.id)
            and not graph.has_edge(Layer.HOUSEHOLD, agent.id, other.id)
        ):
            pool.append(other.id)
    return sorted(pool)


def _add_prosocial_friends(pop, graph, agent, k, tick, rng) -> list[str]:
    pool = _prosocial_pool(pop, graph, agent, tick)
    actions = []
    if pool and k > 0:
        picks = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
        for i in sorted(int(p) for p in picks):
            graph.add_edge(Layer.FRIENDSHIP, agent.id, pool[i], tick)
            actions.append(f"friend_added:{pool[i]}")
    return actions


def _add_random_friends(pop, graph, agent, k, tick, rng) -> list[str]:
    pool = sorted(
        o.id
        for o in pop.agents.values()
        if o.id != agent.id
        and o.free
        and abs(o.age_months - agent.age_months) <= 60
        and not graph.has_edge(Layer.FRIENDSHIP, agent.id, o.id)
    )
    actions = []
    if pool and k > 0:
        picks = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
        for i in sorted(int(p) for p in picks):
            graph.add_edge(Layer.FRIENDSHIP, agent.id, pool[i], tick)
            actions.append(f"friend_added:{pool[i]}")
    return actions


def _cut_criminal_friends(pop, graph, agent, k, tick, rng) -> list[str]:
    window_floor = tick - (CRIME_WINDOW_MONTHS - 1)
    risky = sorted(
        other
        for other in graph.neighbors(Layer.FRIENDSHIP, agent.id)
        if pop.agents[other].crimes_since(window_floor) > 0 or pop.agents[other].oc_member
    )
    actions = []
    if risky and k > 0:
        picks = rng.choice(len(risky), size=min(k, len(risky)), replace=False)
        for i in sorted(int(p) for p in picks):
            graph.remove_edge(Layer.FRIENDSHIP, agent.id, risky[i])
            actions.append(f"friend_removed:{risky[i]}")
    return actions


def _move_class(pop, graph, agent, rng) -> list[str]:
    if agent.school_id is None:
        return ["class_move_skipped:not_in_school"]
    school = pop.schools[agent.school_id]
    old_class = pop.agent_class.get(agent.id)
    options = [c for c in school.class_ids if c != old_class]
    if not options:
        return ["class_move_skipped:single_class"]
    new_class = int(options[int(rng.integers(0, len(options)))])
    if old_class is not None and agent.id in pop.classes.get(old_class, ()):
        for mate in pop.classes[old_class]:
            if mate != agent.id:
                graph.remove_edge(Layer.WORK_SCHOOL, agent.id, mate)
        pop.classes[old_class].remove(agent.id)
    for mate in pop.classes[new_class]:
        if pop.agents[mate].free:
            graph.add_edge(Layer.WORK_SCHOOL, agent.id, mate)
    pop.classes[new_class].append(agent.id)
    pop.agent_class[agent.id] = new_class
    return [f"class_moved:{old_class}->{new_class}"]


def _employ_mother(pop, graph, agent, tables, tick, rng) -> list[str]:
    mothers = [
        pop.agents[p]
        for p in agent.parent_ids
        if p in pop.agents and pop.agents[p].alive and pop.agents[p].gender == "F"
    ]
    if not mothers:
        return ["mother_job_skipped:no_mother"]
    mother = mothers[0]
    if mother.employed:
        return ["mother_job_noop:already_employed"]
    if not mother.free:
        return ["mother_job_skipped:incarcerated"]
    from ocsim.dynamics import _hire

    _hire(pop, graph, mother, tables, rng, tick)
    return [f"mother_hired:{mother.employer_id}"]
