"""Crime commission, co-offending, recruitment and incarceration.

The offending engine works in annual probabilities: a gender/age-class
baseline is scaled by the active risk factors (each contributing its odds
ratio minus one), nudged back toward the class baseline when a class mean
drifts out of the +-0.1 band, then compounded down to the tick length.
Committing a crime together is what links agents in the co-offending layer,
and co-offending with an OC member is the one and only recruitment channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ocsim.distributions import DistributionTable
from ocsim.errors import ConfigError
from ocsim.multiplex import (
    Layer,
    MultiplexGraph,
    NON_HOUSEHOLD_LAYERS,
    adjacency_matrix,
    oc_embeddedness,
    proximity_map,
)
from ocsim.population import Agent, Population, WORKING_AGE, EducationLevel

CRIME_WINDOW_MONTHS = 24  # lookback for "criminally active" ties

AGE_CLASS_BOUNDS = ((0, 13), (14, 17), (18, 24), (25, 34), (35, 44), (45, 54), (55, 64), (65, 200))
AGE_CLASS_LABELS = ("0_13", "14_17", "18_24", "25_34", "35_44", "45_54", "55_64", "65_plus")
GENDERS = ("F", "M")
CLASS_KEYS = tuple((g, label) for g in GENDERS for label in AGE_CLASS_LABELS)


def age_class(age_years: int) -> str:
    for (lo, hi), label in zip(AGE_CLASS_BOUNDS, AGE_CLASS_LABELS):
        if lo <= age_years <= hi:
            return label
    raise ValueError(f"age {age_years} outside supported range")


@dataclass(frozen=True)
class BaselineRow:
    gender: str
    age_label: str
    probability: float
    odds_ratio: float


class BaselineTable:
    """Annual offending probability and odds ratio per (gender, age class)."""

    def __init__(self, rows):
        self.rows: dict[tuple[str, str], BaselineRow] = {
            (r.gender, r.age_label): r for r in rows
        }

    def validate(self, path: str = "crime.baseline_table") -> None:
        missing = [k for k in CLASS_KEYS if k not in self.rows]
        if missing:
            raise ConfigError(path, f"missing rows for {missing}")
        if len(self.rows) != 16:
            raise ConfigError(path, f"expected 16 rows, found {len(self.rows)}")
        for row in self.rows.values():
            if not 0 < row.probability < 1:
                raise ConfigError(path, f"probability out of (0,1) for {row.gender}/{row.age_label}")
            implied = row.probability / (1 - row.probability)
            if abs(row.odds_ratio - implied) > 5e-4:
                raise ConfigError(
                    path,
                    f"odds ratio {row.odds_ratio} inconsistent with probability "
                    f"{row.probability} for {row.gender}/{row.age_label}",
                )

    def probability(self, gender: str, age_label: str) -> float:
        return self.rows[(gender, age_label)].probability

    def probability_for_age(self, gender: str, age_years: int) -> float:
        return self.probability(gender, age_class(age_years))

    @classmethod
    def default(cls) -> "BaselineTable":
        return cls(BaselineRow(*r) for r in DEFAULT_BASELINE_ROWS)


DEFAULT_BASELINE_ROWS = (
    ("F", "0_13", 0.0004, 0.0004),
    ("F", "14_17", 0.0223, 0.0229),
    ("F", "18_24", 0.0511, 0.0538),
    ("F", "25_34", 0.0634, 0.0677),
    ("F", "35_44", 0.0643, 0.0687),
    ("F", "45_54", 0.0489, 0.0514),
    ("F", "55_64", 0.0308, 0.0318),
    ("F", "65_plus", 0.0111, 0.0112),
    ("M", "0_13", 0.0022, 0.0022),
    ("M", "14_17", 0.1502, 0.1767),
    ("M", "18_24", 0.3019, 0.4324),
    ("M", "25_34", 0.3036, 0.4359),
    ("M", "35_44", 0.2751, 0.3795),
    ("M", "45_54", 0.1996, 0.2494),
    ("M", "55_64", 0.1268, 0.1453),
    ("M", "65_plus", 0.0537, 0.0567),
)


UNEMPLOYMENT = "unemployment"
EDUCATION = "education"
NATURAL_PROPENSITY = "natural_propensity"
CRIMINAL_HISTORY = "criminal_history"
CRIMINAL_FAMILY = "criminal_family"
CRIMINAL_PEERS = "criminal_friends_coworkers"
OC_MEMBERSHIP = "oc_membership"

FACTOR_NAMES = (
    UNEMPLOYMENT,
    EDUCATION,
    NATURAL_PROPENSITY,
    CRIMINAL_HISTORY,
    CRIMINAL_FAMILY,
    CRIMINAL_PEERS,
    OC_MEMBERSHIP,
)

DEFAULT_ODDS_RATIOS = {
    UNEMPLOYMENT: 1.30,
    EDUCATION: 0.94,  # protective: applies when the agent holds a diploma
    NATURAL_PROPENSITY: 1.97,
    CRIMINAL_HISTORY: 1.62,
    CRIMINAL_FAMILY: 1.45,
    CRIMINAL_PEERS: 1.81,
    OC_MEMBERSHIP: 4.5,
}


class RiskFactorSet:
    """The seven odds-ratio factors modulating the baseline."""

    def __init__(self, odds_ratios: dict[str, float] | None = None):
        self.odds_ratios = dict(odds_ratios or DEFAULT_ODDS_RATIOS)

    def validate(self, path: str = "crime.risk_factors") -> None:
        if set(self.odds_ratios) != set(FACTOR_NAMES):
            raise ConfigError(path, f"expected exactly the factors {sorted(FACTOR_NAMES)}")
        for name, ratio in self.odds_ratios.items():
            if ratio <= 0:
                raise ConfigError(path, f"odds ratio for {name} must be positive")

    def gamma(self, name: str) -> float:
        """Risk increment of one active factor: odds ratio minus one."""
        return self.odds_ratios[name] - 1.0


@dataclass
class TickModifiers:
    """Per-tick policy effects consumed by the crime pipeline."""

    scrutiny: dict[int, float] = field(default_factory=dict)
    repression: dict[int, float] = field(default_factory=dict)
    oc_match_blocked: set[int] = field(default_factory=set)
    edge_masks: dict[int, frozenset] = field(default_factory=dict)

    @classmethod
    def none(cls) -> "TickModifiers":
        return cls()


@dataclass
class CrimeEvent:
    id: int
    tick: int
    participant_ids: tuple[int, ...]
    oc_involved: bool
    initiator_id: int = -1
    sanctioned: dict[int, bool] = field(default_factory=dict)
    sentence_months: dict[int, int] = field(default_factory=dict)


@dataclass
class CalibrationState:
    """Per-class raw means and the correction factors applied this tick."""

    raw_mean: dict[tuple[str, str], float] = field(default_factory=dict)
    factor: dict[tuple[str, str], float] = field(default_factory=dict)
    skipped_empty: list[tuple[str, str]] = field(default_factory=list)
    post_mean: dict[tuple[str, str], float] = field(default_factory=dict)


# -- the offending probability pipeline ----------------------------------------


def active_risk_factors(
    agent: Agent,
    graph: MultiplexGraph,
    pop: Population,
    tick: int,
    propensity_threshold: float,
) -> set[str]:
    """Evaluate the seven factor predicates for one agent."""
    active = set()
    if (
        WORKING_AGE[0] <= agent.age_years < WORKING_AGE[1]
        and not agent.employed
        and agent.school_id is None
    ):
        active.add(UNEMPLOYMENT)
    if agent.education >= EducationLevel.HIGH_SCHOOL:
        active.add(EDUCATION)
    if agent.propensity > propensity_threshold:
        active.add(NATURAL_PROPENSITY)
    if agent.crime_history:
        active.add(CRIMINAL_HISTORY)
    window_floor = tick - (CRIME_WINDOW_MONTHS - 1)
    family = graph.neighbors(Layer.HOUSEHOLD, agent.id)
    if family:
        criminal = sum(1 for f in family if pop.agents[f].crimes_since(window_floor) > 0)
        if criminal / len(family) >= 0.5:
            active.add(CRIMINAL_FAMILY)
    peers = graph.union_neighbors(agent.id, (Layer.FRIENDSHIP, Layer.WORK_SCHOOL))
    if peers:
        criminal = sum(1 for f in peers if pop.agents[f].crimes_since(window_floor) > 0)
        if criminal / len(peers) >= 0.5:
            active.add(CRIMINAL_PEERS)
    if agent.oc_member:
        active.add(OC_MEMBERSHIP)
    return active


def crime_probability(
    baseline: float, active: set[str], factors: RiskFactorSet
) -> float:
    """Pre-calibration annual value: baseline scaled by the summed risk
    increments of the active factors, floored at 0. The [0, 1] clamp is
    calibration's job, so policy multipliers compose exactly."""
    total_gamma = sum(factors.gamma(name) for name in active)
    return float(max(baseline * (1.0 + total_gamma), 0.0))


def annual_to_tick(p_annual, ticks_per_year: int):
    """Complement-compounding conversion of an annual probability."""
    return 1.0 - np.power(1.0 - np.clip(p_annual, 0.0, 1.0), 1.0 / ticks_per_year)


@dataclass
class TickProbabilities:
    """Offending probabilities of every eligible (alive, free) agent."""

    ids: np.ndarray
    annual_raw: np.ndarray   # pre-calibration, post scrutiny/facilitator
    annual: np.ndarray       # post-calibration
    per_tick: np.ndarray
    index: dict[int, int]
    calibration: CalibrationState

    def per_tick_of(self, agent_id: int) -> float:
        pos = self.index.get(agent_id)
        return float(self.per_tick[pos]) if pos is not None else 0.0

    def class_post_means(self) -> dict[tuple[str, str], float]:
        return dict(self.calibration.post_mean)


def compute_tick_probabilities(
    pop: Population,
    graph: MultiplexGraph,
    baseline: BaselineTable,
    factors: RiskFactorSet,
    tick: int,
    ticks_per_year: int,
    modifiers: TickModifiers | None = None,
    facilitator_multiplier: float = 1.0,
) -> TickProbabilities:
    """Vectorized factor evaluation + calibration for the whole population.

    Produces the exact same numbers as the per-agent path
    (``active_risk_factors`` + ``crime_probability``); the equivalence is
    pinned by tests.
    """
    modifiers = modifiers or TickModifiers.none()
    eligible = sorted(a.id for a in pop.agents.values() if a.free)
    n = len(eligible)
    index = {aid: i for i, aid in enumerate(eligible)}
    if n == 0:
        empty = np.zeros(0)
        return TickProbabilities(np.array([], dtype=int), empty, empty, empty, {}, CalibrationState())

    agents = [pop.agents[aid] for aid in eligible]
    age_years = np.fromiter((a.age_years for a in agents), dtype=int, count=n)
    male = np.fromiter((a.gender == "M" for a in agents), dtype=bool, count=n)

    unemployed = np.fromiter(
        (
            WORKING_AGE[0] <= a.age_years < WORKING_AGE[1]
            and not a.employed
            and a.school_id is None
            for a in agents
        ),
        dtype=bool,
        count=n,
    )
    diploma = np.fromiter((a.education >= EducationLevel.HIGH_SCHOOL for a in agents), dtype=bool, count=n)
    propense = np.fromiter(
        (a.propensity > pop.propensity_threshold for a in agents), dtype=bool, count=n
    )
    history = np.fromiter((len(a.crime_history) > 0 for a in agents), dtype=bool, count=n)
    oc = np.fromiter((a.oc_member for a in agents), dtype=bool, count=n)

    # criminally-active shares over household and friendship+work ties;
    # counterparts may be incarcerated (household ties survive prison)
    window_floor = tick - (CRIME_WINDOW_MONTHS - 1)
    all_ids = sorted(a.id for a in pop.agents.values() if a.alive)
    all_index = {aid: i for i, aid in enumerate(all_ids)}
    recent = np.fromiter(
        (pop.agents[aid].crimes_since(window_floor) > 0 for aid in all_ids),
        dtype=np.float64,
        count=len(all_ids),
    )
    house = adjacency_matrix(graph, all_ids, (Layer.HOUSEHOLD,), binary=True)
    peers = adjacency_matrix(graph, all_ids, (Layer.FRIENDSHIP, Layer.WORK_SCHOOL), binary=True)
    rows = np.fromiter((all_index[aid] for aid in eligible), dtype=int, count=n)

    def share_flag(adj):
        counts = np.asarray(adj.sum(axis=1)).ravel()
        criminal = adj @ recent
        flags = np.zeros(len(all_ids), dtype=bool)
        nonzero = counts > 0
        flags[nonzero] = criminal[nonzero] / counts[nonzero] >= 0.5
        return flags[rows]

    family_flag = share_flag(house)
    peers_flag = share_flag(peers)

    gamma = np.zeros(n)
    gamma += unemployed * (factors.odds_ratios[UNEMPLOYMENT] - 1.0)
    gamma += diploma * (factors.odds_ratios[EDUCATION] - 1.0)
    gamma += propense * (factors.odds_ratios[NATURAL_PROPENSITY] - 1.0)
    gamma += history * (factors.odds_ratios[CRIMINAL_HISTORY] - 1.0)
    gamma += family_flag * (factors.odds_ratios[CRIMINAL_FAMILY] - 1.0)
    gamma += peers_flag * (factors.odds_ratios[CRIMINAL_PEERS] - 1.0)
    gamma += oc * (factors.odds_ratios[OC_MEMBERSHIP] - 1.0)

    base = np.empty(n)
    class_labels = np.empty(n, dtype=object)
    for i, a in enumerate(agents):
        label = age_class(age_years[i])
        class_labels[i] = label
        base[i] = baseline.probability(a.gender, label)

    annual_raw = base * (1.0 + gamma)
    if facilitator_multiplier != 1.0:
        fac = np.fromiter((a.facilitator for a in agents), dtype=bool, count=n)
        annual_raw = np.where(fac, annual_raw * facilitator_multiplier, annual_raw)
    if modifiers.scrutiny:
        for aid, mult in modifiers.scrutiny.items():
            pos = index.get(aid)
            if pos is not None:
                annual_raw[pos] = annual_raw[pos] * mult
    annual_raw = np.maximum(annual_raw, 0.0)

    annual, calibration = recalibrate_classes(
        np.minimum(annual_raw, 1.0), male, class_labels, baseline
    )
    per_tick = annual_to_tick(annual, ticks_per_year)
    return TickProbabilities(
        ids=np.array(eligible, dtype=int),
        annual_raw=annual_raw,
        annual=annual,
        per_tick=per_tick,
        index=index,
        calibration=calibration,
    )


def recalibrate_classes(
    annual: np.ndarray,
    male: np.ndarray,
    class_labels: np.ndarray,
    baseline: BaselineTable,
    band: float = 0.1,
) -> tuple[np.ndarray, CalibrationState]:
    """Pull each (gender, age class) mean back to its baseline when it has
    drifted beyond the band. The correction is a uniform multiplicative
    factor per class (then a [0, 1] clamp), so within-class ordering is
    preserved."""
    out = annual.copy()
    state = CalibrationState()
    for gender in GENDERS:
        gender_mask = male if gender == "M" else ~male
        for label in AGE_CLASS_LABELS:
            key = (gender, label)
            mask = gender_mask & (class_labels == label)
            if not mask.any():
                state.skipped_empty.append(key)
                continue
            target = baseline.probability(gender, label)
            mean = float(out[mask].mean())
            state.raw_mean[key] = mean
            if abs(mean - target) > band and mean > 0:
                factor = target / mean
                out[mask] = np.clip(out[mask] * factor, 0.0, 1.0)
                state.factor[key] = factor
            else:
                state.factor[key] = 1.0
            state.post_mean[key] = float(out[mask].mean())
    return out, state


# -- realization: offenders, groups, recruitment -------------------------------


def draw_offenders(probs: TickProbabilities, rng: np.random.Generator) -> list[int]:
    """Independent Bernoulli draw per eligible agent, in ascending id order."""
    if len(probs.ids) == 0:
        return []
    hits = rng.random(len(probs.ids)) < probs.per_tick
    return [int(aid) for aid in probs.ids[hits]]


def sample_group_size(table: DistributionTable, rng: np.random.Generator) -> int:
    """Crime party size; the configured distribution must have mode 1."""
    if table.mode_label() != "1":
        raise ConfigError(
            f"distributions.{table.name}", "co-offending size distribution must have mode 1"
        )
    size = int(table.sample_value(rng))
    return max(size, 1)


def match_co_offenders(
    initiator_id: int,
    size: int,
    graph: MultiplexGraph,
    pop: Population,
    probs: TickProbabilities,
    h: int,
    oc_members: set[int],
    exclude: set[int],
    modifiers: TickModifiers | None = None,
    embeddedness_of=None,
) -> list[int]:
    """Pick the crime party around an initiator.

    Candidates are the free agents socially reachable within h hops; they
    are ranked by proximity times own offending probability, and for OC
    initiators additionally by (1 + candidate embeddedness). Short on
    candidates, the crime proceeds smaller (possibly solo).

    ``embeddedness_of`` lets the caller share one memoized evaluation per
    tick across events; it must equal the direct computation."""
    modifiers = modifiers or TickModifiers.none()
    initiator_oc = pop.agents[initiator_id].oc_member
    if embeddedness_of is None:

        def embeddedness_of(cand_id: int) -> float:
            return oc_embeddedness(
                graph,
                cand_id,
                h,
                oc_members,
                exclude=exclude,
                edge_mask=modifiers.edge_masks.get(cand_id),
            ).value

    pmap = proximity_map(graph, initiator_id, h, exclude=exclude)
    scored = []
    for cand_id, prox in pmap.items():
        agent = pop.agents.get(cand_id)
        if agent is None or not agent.free:
            continue
        if initiator_oc and cand_id in modifiers.oc_match_blocked:
            continue
        score = prox * probs.per_tick_of(cand_id)
        if initiator_oc:
            score *= 1.0 + embeddedness_of(cand_id)
        scored.append((-score, cand_id))
    scored.sort()
    chosen = [cand for _, cand in scored[: max(size - 1, 0)]]
    return [initiator_id] + chosen


def commit_event(
    event_id: int,
    tick: int,
    participants: list[int],
    pop: Population,
    graph: MultiplexGraph,
) -> CrimeEvent:
    """Record the event: histories append, co-offending edges for every pair.

    The first entry of ``participants`` is the initiating offender."""
    oc_involved = any(pop.agents[p].oc_member for p in participants)
    event = CrimeEvent(
        id=event_id,
        tick=tick,
        participant_ids=tuple(sorted(participants)),
        oc_involved=oc_involved,
        initiator_id=participants[0],
    )
    for p in event.participant_ids:
        pop.agents[p].record_crime(tick, event_id)
    for i, a in enumerate(event.participant_ids):
        for b in event.participant_ids[i + 1 :]:
            graph.add_edge(Layer.CO_OFFENDING, a, b, tick)
    return event


def apply_recruitment(
    event: CrimeEvent, pop: Population, graph: MultiplexGraph
) -> list[int]:
    """Every non-member co-offending with a member joins the OC group and
    gains OC-layer edges to the member co-participants."""
    if not event.oc_involved:
        return []
    members_before = [p for p in event.participant_ids if pop.agents[p].oc_member]
    if not members_before:
        return []
    recruits = [p for p in event.participant_ids if not pop.agents[p].oc_member]
    for recruit in recruits:
        pop.agents[recruit].oc_member = True
        for member in members_before:
            graph.add_edge(Layer.OC_GROUP, recruit, member, event.tick)
    return recruits


# -- sanctioning ----------------------------------------------------------------


def sanction(
    event: CrimeEvent,
    pop: Population,
    graph: MultiplexGraph,
    punishment_rate: float,
    sentence_table: DistributionTable,
    rng: np.random.Generator,
    modifiers: TickModifiers | None = None,
) -> list[int]:
    """Independent sanction draw per participant; sanctioned agents draw a
    sentence and enter prison immediately."""
    modifiers = modifiers or TickModifiers.none()
    jailed = []
    for p in event.participant_ids:
        agent = pop.agents[p]
        if not agent.free:  # already jailed via an earlier event this tick
            continue
        p_sanction = min(1.0, punishment_rate * modifiers.repression.get(p, 1.0))
        if rng.random() < p_sanction:
            months = max(1, int(sentence_table.sample_value(rng)))
            event.sanctioned[p] = True
            event.sentence_months[p] = months
            incarcerate(agent, pop, graph, months, event.tick)
            jailed.append(p)
        else:
            event.sanctioned[p] = False
    return jailed


def incarcerate(agent: Agent, pop: Population, graph: MultiplexGraph, months: int, tick: int) -> None:
    """Suspend every non-household tie (snapshotted for release), clear the
    job, start the countdown. Household ties survive."""
    from ocsim.population import IncarcerationState

    if not agent.free:
        raise ValueError(f"agent {agent.id} is not free")
    snapshot = []
    for a, b, layer in graph.incident_edges(agent.id, NON_HOUSEHOLD_LAYERS):
        snapshot.append((a, b, layer, graph.created_tick(layer, a, b)))
        graph.remove_edge(layer, a, b)
    if agent.employer_id is not None:
        employer = pop.employers.get(agent.employer_id)
        if employer:
            employer.workers.discard(agent.id)
    agent.employed = False
    agent.employer_id = None
    agent.facilitator = False
    agent.incarceration = IncarcerationState(
        start_tick=tick, remaining_months=int(months), suspended_ties=tuple(snapshot)
    )


def release(
    agent: Agent,
    pop: Population,
    graph: MultiplexGraph,
    recovery_fraction: float,
    rng: np.random.Generator,
) -> list:
    """Return the agent to society, restoring round(rho * ties) of the
    suspended ties (sampled uniformly); an OC member always gets the OC-layer
    ties back. Ties to dead or still-incarcerated counterparts stay lost."""
    state = agent.incarceration
    if state is None:
        raise ValueError(f"agent {agent.id} is not incarcerated")
    ties = sorted(state.suspended_ties, key=lambda t: (t[0], t[1], t[2].value))
    n_restore = int(np.floor(recovery_fraction * len(ties) + 0.5))
    picked: set[int] = set()
    if ties and n_restore > 0:
        picked = set(int(i) for i in rng.choice(len(ties), size=min(n_restore, len(ties)), replace=False))
    restored = []
    for i, (a, b, layer, created) in enumerate(ties):
        always = layer is Layer.OC_GROUP and agent.oc_member
        if i not in picked and not always:
            continue
        other = b if a == agent.id else a
        counterpart = pop.agents.get(other)
        if counterpart is None or not counterpart.free:
            continue
        graph.add_edge(layer, a, b, created if created is not None else state.start_tick)
        restored.append((a, b, layer))
    agent.incarceration = None
    return restored
