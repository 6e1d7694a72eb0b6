"""Synthesis of the initial society: agents, households, schools, jobs, OC seed.

Generation order mirrors the conditioning structure of the input tables:
draw each household head's age, then the household type, then its size,
then fill members by age offsets; afterwards partition school-age children
into classmate cliques and employed adults into firm cliques. All draws
flow from a single seeded generator, so a (config, seed) pair reproduces
the exact same society.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping

import numpy as np

from ocsim.distributions import DistributionTable, validate_bundle
from ocsim.errors import ConfigError
from ocsim.multiplex import Layer, MultiplexGraph

MONTHS_PER_YEAR = 12
SCHOOL_AGE = (6, 18)
WORKING_AGE = (18, 65)
ADULT_AGE = 18
CLASS_SIZE = 25

REQUIRED_TABLES = (
    "gender",
    "age_female",
    "age_male",
    "education_adult",
    "wealth_by_education_none",
    "wealth_by_education_primary",
    "wealth_by_education_secondary",
    "wealth_by_education_high_school",
    "wealth_by_education_higher",
    "household_head_age",
    "household_size_head_18_34",
    "household_size_head_35_64",
    "household_size_head_65_plus",
    "single_parent_share",
    "schools_per_10k",
    "employer_sizes",
    "fertility_by_age",
    "mortality_female",
    "mortality_male",
    "partnership_by_age",
    "co_offending_size",
    "punishment",
    "sentence_months",
    "oc_gender",
    "oc_age",
)


class EducationLevel(IntEnum):
    NONE = 0
    PRIMARY = 1
    SECONDARY = 2
    HIGH_SCHOOL = 3
    HIGHER = 4


EDUCATION_LABELS = {
    "none": EducationLevel.NONE,
    "primary": EducationLevel.PRIMARY,
    "secondary": EducationLevel.SECONDARY,
    "high_school": EducationLevel.HIGH_SCHOOL,
    "higher": EducationLevel.HIGHER,
}

SCHOOL_STAGES = ("primary", "secondary", "high_school")


def school_stage(age_years: int) -> str | None:
    if 6 <= age_years <= 10:
        return "primary"
    if 11 <= age_years <= 13:
        return "secondary"
    if 14 <= age_years <= 18:
        return "high_school"
    return None


@dataclass
class IncarcerationState:
    start_tick: int
    remaining_months: int
    suspended_ties: tuple = ()


@dataclass
class Agent:
    id: int
    gender: str  # "F" | "M"
    age_months: int
    education: EducationLevel = EducationLevel.NONE
    employed: bool = False
    employer_id: int | None = None
    school_id: int | None = None
    wealth_level: int = 1
    propensity: float = 1.0
    crime_history: list = field(default_factory=list)  # (tick, event_id), tick-sorted
    oc_member: bool = False
    incarceration: IncarcerationState | None = None
    alive: bool = True
    household_id: int = -1
    parent_ids: tuple[int, ...] = ()
    partner_id: int | None = None
    facilitator: bool = False
    education_pinned: bool = False  # socialisation policy guarantees completion
    job_promised_at_16: bool = False

    @property
    def age_years(self) -> int:
        return self.age_months // MONTHS_PER_YEAR

    @property
    def incarcerated(self) -> bool:
        return self.incarceration is not None

    @property
    def free(self) -> bool:
        return self.alive and self.incarceration is None

    def record_crime(self, tick: int, event_id: int) -> None:
        self.crime_history.append((tick, event_id))

    def crimes_since(self, tick_floor: int) -> int:
        return sum(1 for t, _ in self.crime_history if t >= tick_floor)


@dataclass(frozen=True)
class PropensityParams:
    mu: float = 0.0
    sigma: float = 0.5
    threshold_percentile: float = 0.9

    def validate(self, path: str = "population.propensity") -> None:
        if self.sigma <= 0:
            raise ConfigError(f"{path}.sigma", "sigma must be > 0")
        if not 0 < self.threshold_percentile < 1:
            raise ConfigError(f"{path}.threshold_percentile", "must be in (0, 1)")

    def threshold(self) -> float:
        """Propensity value marking the configured upper quantile."""
        from scipy.stats import norm

        return float(np.exp(self.mu + self.sigma * norm.ppf(self.threshold_percentile)))


@dataclass(frozen=True)
class OcSeedConfig:
    member_count: int = 30
    topology: str = "clique"  # "clique" | "tree"
    tree_branching: int = 3
    gender_table: str = "oc_gender"
    age_table: str = "oc_age"

    def validate(self, population_size: int, path: str = "population.oc_seed") -> None:
        if self.member_count < 0:
            raise ConfigError(f"{path}.member_count", "must be >= 0")
        if self.member_count >= population_size / 10:
            raise ConfigError(
                f"{path}.member_count",
                f"{self.member_count} is not below population_size/10",
            )
        if self.topology not in ("clique", "tree"):
            raise ConfigError(f"{path}.topology", "expected 'clique' or 'tree'")
        if self.topology == "tree" and self.tree_branching < 1:
            raise ConfigError(f"{path}.tree_branching", "must be >= 1")


@dataclass(frozen=True)
class PopulationConfig:
    population_size: int = 10000
    unemployment_rate: float = 0.12
    facilitator_share: float = 0.05
    propensity: PropensityParams = PropensityParams()
    oc_seed: OcSeedConfig = OcSeedConfig()
    distributions: Mapping[str, DistributionTable] = field(default_factory=dict)
    random_seed: int | None = None

    def validate(self, path: str = "population") -> None:
        if self.population_size < 100:
            raise ConfigError(f"{path}.population_size", "must be >= 100")
        if not 0 <= self.unemployment_rate <= 1:
            raise ConfigError(f"{path}.unemployment_rate", "must be in [0, 1]")
        if not 0 <= self.facilitator_share <= 1:
            raise ConfigError(f"{path}.facilitator_share", "must be in [0, 1]")
        self.propensity.validate(f"{path}.propensity")
        self.oc_seed.validate(self.population_size, f"{path}.oc_seed")
        validate_bundle(self.distributions, REQUIRED_TABLES)


@dataclass
class Employer:
    id: int
    facilitator: bool = False
    workers: set[int] = field(default_factory=set)


@dataclass
class School:
    id: int
    stage: str
    pupils: set[int] = field(default_factory=set)
    class_ids: list[int] = field(default_factory=list)


class Population:
    """Agents plus the registries the dynamics need (households, schools,
    classes, employers) and simulation-wide derived parameters."""

    def __init__(self):
        self.agents: dict[int, Agent] = {}
        self.households: dict[int, set[int]] = {}
        self.household_heads: dict[int, int] = {}
        self.employers: dict[int, Employer] = {}
        self.schools: dict[int, School] = {}
        self.classes: dict[int, list[int]] = {}
        self.agent_class: dict[int, int] = {}
        self.propensity_threshold: float = float("inf")
        self._next_agent_id = 0
        self._next_household_id = 0
        self._next_employer_id = 0
        self._next_school_id = 0
        self._next_class_id = 0

    def new_agent_id(self) -> int:
        self._next_agent_id += 1
        return self._next_agent_id - 1

    def new_household_id(self) -> int:
        self._next_household_id += 1
        return self._next_household_id - 1

    def new_employer_id(self) -> int:
        self._next_employer_id += 1
        return self._next_employer_id - 1

    def new_school_id(self) -> int:
        self._next_school_id += 1
        return self._next_school_id - 1

    def new_class_id(self) -> int:
        self._next_class_id += 1
        return self._next_class_id - 1

    def alive_agents(self) -> list[Agent]:
        return [a for a in self.agents.values() if a.alive]

    def oc_member_ids(self) -> set[int]:
        return {a.id for a in self.agents.values() if a.alive and a.oc_member}

    def incarcerated_ids(self) -> set[int]:
        return {a.id for a in self.agents.values() if a.alive and a.incarcerated}


def sample_propensity(params: PropensityParams, rng: np.random.Generator, n: int | None = None):
    """Log-normal draw(s); the population median is exp(mu)."""
    if params.sigma <= 0:
        raise ConfigError("population.propensity.sigma", "sigma must be > 0")
    if n is None:
        return float(rng.lognormal(params.mu, params.sigma))
    return rng.lognormal(params.mu, params.sigma, size=n)


# -- internal pools -----------------------------------------------------------


class _AgePool:
    """Sorted (age_months, id) pool with nearest-age extraction."""

    def __init__(self, entries):
        self.entries = sorted(entries)

    def __len__(self):
        return len(self.entries)

    def pop_nearest(self, target_months: int) -> int | None:
        if not self.entries:
            return None
        i = bisect_left(self.entries, (target_months, -1))
        if i >= len(self.entries):
            i = len(self.entries) - 1
        elif i > 0:
            before = self.entries[i - 1]
            if target_months - before[0] <= self.entries[i][0] - target_months:
                i -= 1
        return self.entries.pop(i)[1]

    def pop_nearest_below(self, target_months: int, ceiling_months: int) -> int | None:
        """Nearest to target among entries with age <= ceiling."""
        hi = bisect_left(self.entries, (ceiling_months + 1, -1))
        if hi == 0:
            return None
        i = min(bisect_left(self.entries, (target_months, -1)), hi - 1)
        if i > 0 and target_months - self.entries[i - 1][0] <= self.entries[i][0] - target_months:
            i -= 1
        return self.entries.pop(i)[1]

    def add(self, age_months: int, agent_id: int) -> None:
        insort(self.entries, (age_months, agent_id))


def _initial_education(age_years: int, education_table: DistributionTable, rng) -> EducationLevel:
    if age_years >= 19:
        return EDUCATION_LABELS[education_table.sample_label(rng)]
    if age_years >= 14:
        return EducationLevel.SECONDARY
    if age_years >= 11:
        return EducationLevel.PRIMARY
    return EducationLevel.NONE


def _head_age_band(age_years: int) -> str:
    if age_years < 35:
        return "18_34"
    if age_years < 65:
        return "35_64"
    return "65_plus"


# -- synthesis steps ----------------------------------------------------------


def synthesize_population(
    config: PopulationConfig, rng: np.random.Generator | None = None
) -> tuple[Population, MultiplexGraph]:
    """Build the initial society per the configured tables.

    Returns exactly ``population_size`` alive agents with household, school
    and work layers populated, plus the seeded OC group.
    """
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.random_seed)
    tables = config.distributions
    pop = Population()
    graph = MultiplexGraph()

    gender_t = tables["gender"]
    age_tables = {"F": tables["age_female"], "M": tables["age_male"]}
    education_t = tables["education_adult"]
    propensities = sample_propensity(config.propensity, rng, config.population_size)
    pop.propensity_threshold = config.propensity.threshold()

    for i in range(config.population_size):
        gender = gender_t.sample_label(rng)
        age_years = age_tables[gender].sample_age_years(rng)
        age_months = age_years * MONTHS_PER_YEAR + int(rng.integers(0, MONTHS_PER_YEAR))
        agent = Agent(
            id=pop.new_agent_id(),
            gender=gender,
            age_months=age_months,
            education=_initial_education(age_years, education_t, rng),
            propensity=float(propensities[i]),
        )
        wealth_t = tables[f"wealth_by_education_{agent.education.name.lower()}"]
        agent.wealth_level = int(wealth_t.sample_label(rng))
        pop.agents[agent.id] = agent
        graph.add_node(agent.id)

    assign_households(pop, graph, tables, rng)
    assign_schools(pop, graph, tables, rng)
    assign_jobs(pop, graph, tables, config, rng)
    seed_oc_group(pop, graph, config.oc_seed, tables, rng)
    return pop, graph


def assign_households(pop: Population, graph: MultiplexGraph, tables, rng) -> None:
    """Group every agent into exactly one household and wire the household
    layer as a clique per household."""
    head_age_t = tables["household_head_age"]
    size_tables = {
        band: tables[f"household_size_head_{band}"] for band in ("18_34", "35_64", "65_plus")
    }
    single_parent_share = tables["single_parent_share"].scalar

    adults = {"F": _AgePool([]), "M": _AgePool([])}
    minors = _AgePool([])
    for agent in pop.agents.values():
        if agent.age_years >= ADULT_AGE:
            adults[agent.gender].add(agent.age_months, agent.id)
        else:
            minors.add(agent.age_months, agent.id)

    def any_adults() -> bool:
        return len(adults["F"]) + len(adults["M"]) > 0

    while any_adults():
        head_age = head_age_t.sample_age_years(rng)
        size = int(size_tables[_head_age_band(head_age)].sample_value(rng))
        head_gender = "M" if rng.random() < 0.5 else "F"
        if not len(adults[head_gender]):
            head_gender = "F" if head_gender == "M" else "M"
        head_id = adults[head_gender].pop_nearest(head_age * MONTHS_PER_YEAR)
        head = pop.agents[head_id]
        members = [head]

        if size >= 2:
            partner = None
            if rng.random() >= single_parent_share:
                partner_gender = "F" if head.gender == "M" else "M"
                offset = int(np.clip(rng.normal(0, 4), -8, 8)) * MONTHS_PER_YEAR
                pid = adults[partner_gender].pop_nearest(head.age_months + offset)
                if pid is not None:
                    partner = pop.agents[pid]
                    members.append(partner)
                    head.partner_id = partner.id
                    partner.partner_id = head.id
            n_children = size - len(members)
            parent_ids = (head.id,) if partner is None else (head.id, partner.id)
            for _ in range(n_children):
                gap_months = int(rng.uniform(22, 33) * MONTHS_PER_YEAR)
                target = max(0, head.age_months - gap_months)
                child_id = minors.pop_nearest(target) if len(minors) else None
                if child_id is None:
                    # no minors left: allow a grown child still living at home
                    pool = adults[head.gender if rng.random() < 0.5 else ("F" if head.gender == "M" else "M")]
                    alt = pool or adults["F"] or adults["M"]
                    if not len(alt):
                        break
                    child_id = alt.pop_nearest_below(target, head.age_months - ADULT_AGE * MONTHS_PER_YEAR)
                    if child_id is None:
                        break
                child = pop.agents[child_id]
                child.parent_ids = parent_ids
                members.append(child)

        _close_household(pop, graph, members)

    # any minors left attach to existing households as extra children;
    # with no adults at all (degenerate age tables) they live alone
    household_ids = sorted(pop.households)
    if not household_ids:
        while len(minors):
            _, child_id = minors.entries.pop(0)
            _close_household(pop, graph, [pop.agents[child_id]])
        return
    while len(minors):
        _, child_id = minors.entries.pop(0)
        child = pop.agents[child_id]
        hh_id = int(household_ids[int(rng.integers(0, len(household_ids)))])
        head = pop.agents[pop.household_heads[hh_id]]
        child.parent_ids = (
            (head.id,) if head.partner_id is None else (head.id, head.partner_id)
        )
        child.household_id = hh_id
        for other in pop.households[hh_id]:
            graph.add_edge(Layer.HOUSEHOLD, child.id, other)
        pop.households[hh_id].add(child.id)


def _close_household(pop: Population, graph: MultiplexGraph, members) -> None:
    hh_id = pop.new_household_id()
    ids = [m.id for m in members]
    for m in members:
        m.household_id = hh_id
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            graph.add_edge(Layer.HOUSEHOLD, a, b)
    pop.households[hh_id] = set(ids)
    pop.household_heads[hh_id] = ids[0]


def assign_schools(pop: Population, graph: MultiplexGraph, tables, rng) -> None:
    """Enroll school-age children; classmates (classes of <= 25 pupils,
    grouped by age within a school) form work/school-layer cliques."""
    per_10k = tables["schools_per_10k"]
    n = len(pop.agents)
    by_stage: dict[str, list[Agent]] = {stage: [] for stage in SCHOOL_STAGES}
    for agent in pop.agents.values():
        stage = school_stage(agent.age_years)
        if stage is not None:
            by_stage[stage].append(agent)

    for stage in SCHOOL_STAGES:
        pupils = sorted(by_stage[stage], key=lambda a: a.id)
        if not pupils:
            continue
        n_schools = max(1, round(per_10k.rate_for_label(stage) * n / 10000))
        schools = [School(id=pop.new_school_id(), stage=stage) for _ in range(n_schools)]
        for school in schools:
            pop.schools[school.id] = school
        picks = rng.integers(0, n_schools, size=len(pupils))
        for agent, pick in zip(pupils, picks):
            school = schools[int(pick)]
            school.pupils.add(agent.id)
            agent.school_id = school.id
        for school in schools:
            rebuild_school_classes(pop, graph, school)


def rebuild_school_classes(pop: Population, graph: MultiplexGraph, school: School) -> None:
    """(Re)partition one school's pupils into age-ordered classes of at most
    CLASS_SIZE and reset their classmate cliques. Incarcerated pupils stay
    listed in a class but hold no edges until release."""
    members = sorted(
        (pop.agents[i] for i in school.pupils), key=lambda a: (a.age_months, a.id)
    )
    for class_id in school.class_ids:
        for aid in pop.classes.pop(class_id, ()):
            pop.agent_class.pop(aid, None)
    school.class_ids = []
    member_ids = {a.id for a in members}
    for a in members:
        if not a.free:
            continue
        for other in list(graph.neighbors(Layer.WORK_SCHOOL, a.id)):
            if other in member_ids:
                graph.remove_edge(Layer.WORK_SCHOOL, a.id, other)
    for start in range(0, len(members), CLASS_SIZE):
        group = members[start : start + CLASS_SIZE]
        class_id = pop.new_class_id()
        pop.classes[class_id] = [a.id for a in group]
        school.class_ids.append(class_id)
        for a in group:
            pop.agent_class[a.id] = class_id
        present = [a for a in group if a.free]
        for i, a in enumerate(present):
            for b in present[i + 1 :]:
                graph.add_edge(Layer.WORK_SCHOOL, a.id, b.id)


def assign_jobs(pop: Population, graph: MultiplexGraph, tables, config, rng) -> None:
    """Employ working-age adults at (1 - unemployment_rate); firms drawn
    from the employer-size table become co-worker cliques."""
    sizes_t = tables["employer_sizes"]
    candidates = sorted(
        (
            a
            for a in pop.agents.values()
            if WORKING_AGE[0] <= a.age_years < WORKING_AGE[1] and a.school_id is None
        ),
        key=lambda a: a.id,
    )
    draws = rng.random(len(candidates))
    employed = [a for a, d in zip(candidates, draws) if d >= config.unemployment_rate]
    order = rng.permutation(len(employed))
    queue = [employed[i] for i in order]
    pos = 0
    while pos < len(queue):
        size = int(sizes_t.sample_value(rng))
        staff = queue[pos : pos + size]
        pos += size
        employer = Employer(
            id=pop.new_employer_id(),
            facilitator=bool(rng.random() < config.facilitator_share),
        )
        pop.employers[employer.id] = employer
        for a in staff:
            a.employed = True
            a.employer_id = employer.id
            a.facilitator = employer.facilitator
            employer.workers.add(a.id)
        for i, a in enumerate(staff):
            for b in staff[i + 1 :]:
                graph.add_edge(Layer.WORK_SCHOOL, a.id, b.id)


def seed_oc_group(
    pop: Population,
    graph: MultiplexGraph,
    oc_seed: OcSeedConfig,
    tables,
    rng,
) -> None:
    """Flag the initial OC members (sampled to the configured gender and age
    shapes) and wire the OC layer per the configured internal topology."""
    if oc_seed.member_count == 0:
        return
    gender_t = tables[oc_seed.gender_table]
    age_t = tables[oc_seed.age_table]
    pools = {
        "F": _AgePool(
            (a.age_months, a.id) for a in pop.agents.values() if a.gender == "F" and not a.oc_member
        ),
        "M": _AgePool(
            (a.age_months, a.id) for a in pop.agents.values() if a.gender == "M" and not a.oc_member
        ),
    }
    if oc_seed.member_count > len(pools["F"]) + len(pools["M"]):
        raise ConfigError(
            "population.oc_seed.member_count", "exceeds the number of eligible agents"
        )
    members: list[int] = []
    for _ in range(oc_seed.member_count):
        gender = gender_t.sample_label(rng)
        if not len(pools[gender]):
            gender = "F" if gender == "M" else "M"
        target = age_t.sample_age_years(rng) * MONTHS_PER_YEAR
        member_id = pools[gender].pop_nearest(target)
        pop.agents[member_id].oc_member = True
        members.append(member_id)

    if oc_seed.topology == "clique":
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                graph.add_edge(Layer.OC_GROUP, a, b)
    else:  # boss-lieutenant-soldier tree
        for k in range(1, len(members)):
            parent = members[(k - 1) // oc_seed.tree_branching]
            graph.add_edge(Layer.OC_GROUP, members[k], parent)
