"""Per-tick demographic and social lifecycle.

Monthly: aging, mortality, births to partnered women, partnership
formation, friendship churn and employment steering. Yearly (every 12th
tick): school enrollment, stage transfers, graduations and a rebuild of
all classmate cliques, mirroring school-year boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ocsim.errors import ConfigError
from ocsim.multiplex import Layer, MultiplexGraph
from ocsim.population import (
    Agent,
    EducationLevel,
    MONTHS_PER_YEAR,
    Population,
    PropensityParams,
    School,
    WORKING_AGE,
    rebuild_school_classes,
    sample_propensity,
    school_stage,
)

MAX_AGE_YEARS = 119
PARTNER_MAX_AGE_GAP_YEARS = 8
FRIEND_CONTEXT_WEIGHT = 10.0
FRIEND_AGE_SCALE_MONTHS = 120.0
FRIEND_STRANGER_SAMPLE = 8


@dataclass(frozen=True)
class LifecycleConfig:
    friendship_make_rate: float = 0.4    # per agent per year
    friendship_break_rate: float = 0.15  # per edge per year
    unemployment_target: float = 0.12
    high_school_completion: float = 0.75
    graduation_ages: dict = field(
        default_factory=lambda: {"primary": 11, "secondary": 14, "high_school": 19}
    )
    newborn_propensity: str = "fresh"  # or "inherit_mean"

    def validate(self, path: str = "lifecycle") -> None:
        for name in ("friendship_make_rate", "friendship_break_rate", "unemployment_target", "high_school_completion"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigError(f"{path}.{name}", "must be in [0, 1]")
        if self.newborn_propensity not in ("fresh", "inherit_mean"):
            raise ConfigError(f"{path}.newborn_propensity", "expected 'fresh' or 'inherit_mean'")
        for stage in ("primary", "secondary", "high_school"):
            if stage not in self.graduation_ages:
                raise ConfigError(f"{path}.graduation_ages.{stage}", "missing")


def yearly_to_tick(rate: float) -> float:
    """Complement-compounding: a per-year rate of 1 fires within one year."""
    return 1.0 - (1.0 - min(max(rate, 0.0), 1.0)) ** (1.0 / MONTHS_PER_YEAR)


# -- demography ---------------------------------------------------------------


def step_demography(
    pop: Population,
    graph: MultiplexGraph,
    tables,
    propensity_params: PropensityParams,
    lifecycle: LifecycleConfig,
    tick: int,
    rng: np.random.Generator,
) -> tuple[list[int], list[int]]:
    """Advance ages, apply mortality, then births. Returns (born, died)."""
    alive = sorted(a.id for a in pop.agents.values() if a.alive)
    for aid in alive:
        pop.agents[aid].age_months += 1

    cap = MAX_AGE_YEARS + 1
    rates = {
        "F": tables["mortality_female"].rate_array(cap),
        "M": tables["mortality_male"].rate_array(cap),
    }
    ages = np.fromiter(
        (min(pop.agents[aid].age_years, cap) for aid in alive), dtype=np.int64, count=len(alive)
    )
    male = np.fromiter((pop.agents[aid].gender == "M" for aid in alive), dtype=bool, count=len(alive))
    annual = np.where(male, rates["M"][ages], rates["F"][ages])
    annual[ages >= cap] = 1.0  # hard longevity cap
    p_tick = 1.0 - np.power(1.0 - annual, 1.0 / MONTHS_PER_YEAR)
    hits = rng.random(len(alive)) < p_tick
    died = [aid for aid, hit in zip(alive, hits) if hit]
    for aid in died:
        _bury(pop, graph, pop.agents[aid])

    fertility = tables["fertility_by_age"].rate_array(cap)
    mothers = sorted(
        a.id
        for a in pop.agents.values()
        if a.free
        and a.gender == "F"
        and a.partner_id is not None
        and a.partner_id in pop.agents
        and pop.agents[a.partner_id].alive
        and fertility[min(a.age_years, cap)] > 0
    )
    draws = rng.random(len(mothers))
    born = []
    for mid, u in zip(mothers, draws):
        mother = pop.agents[mid]
        if u < yearly_to_tick(fertility[min(mother.age_years, cap)]):
            born.append(_deliver(pop, graph, tables, propensity_params, lifecycle, mother, rng).id)
    return born, died


def _bury(pop: Population, graph: MultiplexGraph, agent: Agent) -> None:
    agent.alive = False
    agent.employed = False
    graph.remove_node(agent.id)
    household = pop.households.get(agent.household_id)
    if household is not None:
        household.discard(agent.id)
        if not household:
            del pop.households[agent.household_id]
            pop.household_heads.pop(agent.household_id, None)
        elif pop.household_heads.get(agent.household_id) == agent.id:
            pop.household_heads[agent.household_id] = min(household)
    if agent.employer_id is not None:
        employer = pop.employers.get(agent.employer_id)
        if employer:
            employer.workers.discard(agent.id)
        agent.employer_id = None
    if agent.school_id is not None:
        school = pop.schools.get(agent.school_id)
        if school:
            school.pupils.discard(agent.id)
        class_id = pop.agent_class.pop(agent.id, None)
        if class_id is not None and agent.id in pop.classes.get(class_id, ()):
            pop.classes[class_id].remove(agent.id)
        agent.school_id = None
    if agent.partner_id is not None:
        partner = pop.agents.get(agent.partner_id)
        if partner and partner.partner_id == agent.id:
            partner.partner_id = None
        agent.partner_id = None


def _deliver(pop, graph, tables, propensity_params, lifecycle, mother: Agent, rng) -> Agent:
    gender = tables["gender"].sample_label(rng)
    if lifecycle.newborn_propensity == "inherit_mean" and mother.partner_id in pop.agents:
        propensity = (mother.propensity + pop.agents[mother.partner_id].propensity) / 2.0
    else:
        propensity = sample_propensity(propensity_params, rng)
    parent_ids = (mother.id,) if mother.partner_id is None else tuple(sorted((mother.id, mother.partner_id)))
    baby = Agent(
        id=pop.new_agent_id(),
        gender=gender,
        age_months=0,
        education=EducationLevel.NONE,
        wealth_level=mother.wealth_level,
        propensity=float(propensity),
        household_id=mother.household_id,
        parent_ids=parent_ids,
    )
    pop.agents[baby.id] = baby
    graph.add_node(baby.id)
    household = pop.households.setdefault(mother.household_id, {mother.id})
    for other in household:
        if pop.agents[other].alive:
            graph.add_edge(Layer.HOUSEHOLD, baby.id, other)
    household.add(baby.id)
    return baby


# -- social churn ---------------------------------------------------------------


def step_social(
    pop: Population,
    graph: MultiplexGraph,
    lifecycle: LifecycleConfig,
    tables,
    tick: int,
    rng: np.random.Generator,
) -> None:
    _school_year(pop, graph, lifecycle, tick, rng)
    _partnerships(pop, graph, tables, tick, rng)
    _friendship_churn(pop, graph, lifecycle, tick, rng)
    _steer_employment(pop, graph, lifecycle, tables, tick, rng)


def _school_year(pop, graph, lifecycle, tick, rng) -> None:
    """At school-year boundaries: enroll, transfer between stages, graduate
    (awarding attainment), then rebuild every classmate clique."""
    if tick % MONTHS_PER_YEAR != 0:
        return
    diploma_age = lifecycle.graduation_ages["high_school"]
    for aid in sorted(pop.agents):
        agent = pop.agents[aid]
        if not agent.free:
            continue
        age = agent.age_years
        if age >= lifecycle.graduation_ages["primary"]:
            agent.education = max(agent.education, EducationLevel.PRIMARY)
        if age >= lifecycle.graduation_ages["secondary"]:
            agent.education = max(agent.education, EducationLevel.SECONDARY)
        if age >= diploma_age and agent.education_pinned:
            # a pinned track completes even off the regular school path
            agent.education = max(agent.education, EducationLevel.HIGH_SCHOOL)
        stage = school_stage(age)
        current = pop.schools[agent.school_id].stage if agent.school_id is not None else None
        if stage == current:
            continue
        if agent.school_id is not None:
            _leave_school(pop, graph, agent)
            if stage is None and age >= diploma_age:
                if agent.education_pinned or rng.random() < lifecycle.high_school_completion:
                    agent.education = max(agent.education, EducationLevel.HIGH_SCHOOL)
        if stage is not None and agent.employer_id is None:
            _enroll(pop, agent, stage, rng)
    for school in pop.schools.values():
        rebuild_school_classes(pop, graph, school)


def _leave_school(pop, graph, agent) -> None:
    school = pop.schools.get(agent.school_id)
    if school:
        school.pupils.discard(agent.id)
    class_id = pop.agent_class.pop(agent.id, None)
    if class_id is not None and agent.id in pop.classes.get(class_id, ()):
        pop.classes[class_id].remove(agent.id)
    if agent.free:
        for other in list(graph.neighbors(Layer.WORK_SCHOOL, agent.id)):
            graph.remove_edge(Layer.WORK_SCHOOL, agent.id, other)
    agent.school_id = None


def _enroll(pop, agent, stage, rng) -> None:
    candidates = sorted(s.id for s in pop.schools.values() if s.stage == stage)
    if not candidates:
        school = School(id=pop.new_school_id(), stage=stage)
        pop.schools[school.id] = school
        candidates = [school.id]
    school_id = int(candidates[int(rng.integers(0, len(candidates)))])
    pop.schools[school_id].pupils.add(agent.id)
    agent.school_id = school_id


def _partnerships(pop, graph, tables, tick, rng) -> None:
    """Monthly pairing of unpartnered adults within the age-gap bound; the
    new partner (and their minor children) joins the seeker's household."""
    table = tables["partnership_by_age"]
    singles = [
        a
        for a in pop.agents.values()
        if a.free and a.age_years >= 18 and (a.partner_id is None or a.partner_id not in pop.agents or not pop.agents[a.partner_id].alive)
    ]
    singles.sort(key=lambda a: a.id)
    draws = rng.random(len(singles))
    seekers = [a for a, u in zip(singles, draws) if u < yearly_to_tick(table.rate_for_age(a.age_years))]
    available = {a.id for a in singles}
    for seeker in seekers:
        if seeker.id not in available:
            continue
        gap = PARTNER_MAX_AGE_GAP_YEARS * MONTHS_PER_YEAR
        candidates = [
            a
            for a in singles
            if a.id in available
            and a.id != seeker.id
            and a.gender != seeker.gender
            and abs(a.age_months - seeker.age_months) <= gap
            and a.household_id != seeker.household_id
        ]
        if not candidates:
            continue
        partner = candidates[int(rng.integers(0, len(candidates)))]
        available.discard(seeker.id)
        available.discard(partner.id)
        seeker.partner_id = partner.id
        partner.partner_id = seeker.id
        movers = [partner] + [
            pop.agents[c]
            for c in sorted(pop.households.get(partner.household_id, ()))
            if partner.id in pop.agents[c].parent_ids and pop.agents[c].age_years < 18
        ]
        for mover in movers:
            _move_household(pop, graph, mover, seeker.household_id)


def _move_household(pop, graph, agent, new_household_id) -> None:
    old = pop.households.get(agent.household_id)
    if old is not None:
        old.discard(agent.id)
        if not old:
            del pop.households[agent.household_id]
            pop.household_heads.pop(agent.household_id, None)
        elif pop.household_heads.get(agent.household_id) == agent.id:
            pop.household_heads[agent.household_id] = min(old)
    if agent.free:
        for other in list(graph.neighbors(Layer.HOUSEHOLD, agent.id)):
            graph.remove_edge(Layer.HOUSEHOLD, agent.id, other)
    new = pop.households.setdefault(new_household_id, set())
    for other in new:
        if pop.agents[other].free:
            graph.add_edge(Layer.HOUSEHOLD, agent.id, other)
    new.add(agent.id)
    agent.household_id = new_household_id


def _friendship_churn(pop, graph, lifecycle, tick, rng) -> None:
    p_break = yearly_to_tick(lifecycle.friendship_break_rate)
    if p_break > 0:
        edges = [(a, b) for a, b, _ in graph.edges(Layer.FRIENDSHIP)]
        if edges:
            drops = rng.random(len(edges)) < p_break
            for (a, b), drop in zip(edges, drops):
                if drop:
                    graph.remove_edge(Layer.FRIENDSHIP, a, b)

    p_make = yearly_to_tick(lifecycle.friendship_make_rate)
    if p_make <= 0:
        return
    free_ids = sorted(a.id for a in pop.agents.values() if a.free)
    if len(free_ids) < 2:
        return
    draws = rng.random(len(free_ids))
    initiators = [aid for aid, u in zip(free_ids, draws) if u < p_make]
    id_array = np.array(free_ids)
    for aid in initiators:
        agent = pop.agents[aid]
        context = _shared_context(pop, graph, agent)
        strangers = id_array[rng.integers(0, len(id_array), size=FRIEND_STRANGER_SAMPLE)]
        candidates = sorted(set(context) | {int(s) for s in strangers})
        candidates = [
            c
            for c in candidates
            if c != aid
            and pop.agents[c].free
            and not graph.has_edge(Layer.FRIENDSHIP, aid, c)
            and not graph.has_edge(Layer.HOUSEHOLD, aid, c)
        ]
        if not candidates:
            continue
        weights = np.array(
            [
                (FRIEND_CONTEXT_WEIGHT if c in context else 1.0)
                * friendship_age_kernel(agent.age_months, pop.agents[c].age_months)
                for c in candidates
            ]
        )
        total = weights.sum()
        if total <= 0:
            continue
        pick = int(rng.choice(len(candidates), p=weights / total))
        graph.add_edge(Layer.FRIENDSHIP, aid, candidates[pick], tick)


def friendship_age_kernel(age_a_months: int, age_b_months: int) -> float:
    return float(np.exp(-abs(age_a_months - age_b_months) / FRIEND_AGE_SCALE_MONTHS))


def _shared_context(pop, graph, agent) -> set[int]:
    """Classmates, coworkers, and friends of household co-residents."""
    context: set[int] = set()
    class_id = pop.agent_class.get(agent.id)
    if class_id is not None:
        context.update(pop.classes.get(class_id, ()))
    if agent.employer_id is not None:
        employer = pop.employers.get(agent.employer_id)
        if employer:
            context.update(employer.workers)
    for relative in graph.neighbors(Layer.HOUSEHOLD, agent.id):
        context.update(graph.neighbors(Layer.FRIENDSHIP, relative))
    context.discard(agent.id)
    return context


def _steer_employment(pop, graph, lifecycle, tables, tick, rng) -> None:
    """Hire/fire toward the target employment rate; retirement at the top of
    the working-age band."""
    for aid in sorted(pop.agents):
        agent = pop.agents[aid]
        if agent.alive and agent.employed and agent.age_years >= WORKING_AGE[1]:
            _fire(pop, graph, agent)

    eligible = [
        a
        for a in (pop.agents[aid] for aid in sorted(pop.agents))
        if a.free and WORKING_AGE[0] <= a.age_years < WORKING_AGE[1] and a.school_id is None
    ]
    if not eligible:
        return
    employed = [a for a in eligible if a.employed]
    target = int(round((1.0 - lifecycle.unemployment_target) * len(eligible)))
    gap = target - len(employed)
    if gap > 0:
        jobless = [a for a in eligible if not a.employed]
        picks = rng.choice(len(jobless), size=min(gap, len(jobless)), replace=False)
        for i in sorted(int(p) for p in picks):
            _hire(pop, graph, jobless[i], tables, rng, tick)
    elif gap < 0:
        picks = rng.choice(len(employed), size=min(-gap, len(employed)), replace=False)
        for i in sorted(int(p) for p in picks):
            _fire(pop, graph, employed[i])


def _hire(pop, graph, agent, tables, rng, tick, employer_id=None) -> None:
    from ocsim.population import Employer

    if employer_id is None:
        employer_ids = sorted(pop.employers)
        if employer_ids:
            employer_id = int(employer_ids[int(rng.integers(0, len(employer_ids)))])
        else:
            employer = Employer(id=pop.new_employer_id(), facilitator=False)
            pop.employers[employer.id] = employer
            employer_id = employer.id
    employer = pop.employers[employer_id]
    agent.employed = True
    agent.employer_id = employer_id
    agent.facilitator = employer.facilitator
    for other in sorted(employer.workers):
        if pop.agents[other].free:
            graph.add_edge(Layer.WORK_SCHOOL, agent.id, other, tick)
    employer.workers.add(agent.id)


def _fire(pop, graph, agent) -> None:
    if agent.employer_id is not None:
        employer = pop.employers.get(agent.employer_id)
        if employer:
            employer.workers.discard(agent.id)
            for other in employer.workers:
                graph.remove_edge(Layer.WORK_SCHOOL, agent.id, other)
    agent.employed = False
    agent.employer_id = None
    agent.facilitator = False
