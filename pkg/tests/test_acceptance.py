"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (visible with ``pytest -s`` or on failure).

The heavyweight criteria share a single 10,000-agent, 144-tick baseline
run (module-scoped fixture). Determinism criteria shell through the CLI
entry points exactly like a user would.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from click.testing import CliRunner

from ocsim.cli import main as cli_main
from ocsim.config import default_scenario_payload, parse_scenario
from ocsim.crime import (
    BaselineTable,
    RiskFactorSet,
    TickModifiers,
    UNEMPLOYMENT,
    apply_recruitment,
    commit_event,
    compute_tick_probabilities,
    crime_probability,
    incarcerate,
    release,
    sanction,
)
from ocsim.distributions import Bin, DistributionTable, load_builtin_bundle
from ocsim.engine import run_scenario
from ocsim.exports import write_run_dir
from ocsim.multiplex import (
    Layer,
    MultiplexGraph,
    NON_HOUSEHOLD_LAYERS,
    betweenness,
    h_hop_neighborhood,
    oc_embeddedness,
)
from ocsim.population import Agent, OcSeedConfig, Population, PopulationConfig, synthesize_population

from oracles import oracle_betweenness, oracle_embeddedness

BUNDLE = load_builtin_bundle()


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:2d} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {number:2d} {name}: PASS")


@pytest.fixture(scope="module")
def baseline_run():
    """Default no-policy scenario, 10k agents, 24 burn-in + 120 evaluation ticks."""
    payload = default_scenario_payload()
    payload["horizon_ticks"] = 144
    config = parse_scenario(payload)
    t0 = time.time()
    result = run_scenario(config)
    elapsed = time.time() - t0
    print(f"[baseline run: 144 ticks @10k agents in {elapsed:.0f}s]")
    return result, elapsed


def test_01_baseline_table_consistency():
    with criterion(1, "baseline table odds-ratio consistency"):
        t0 = time.time()
        table = BaselineTable.default()
        table.validate()
        assert len(table.rows) == 16
        for row in table.rows.values():
            assert abs(row.odds_ratio - row.probability / (1 - row.probability)) <= 5e-4
        assert table.probability("M", "18_24") == 0.3019
        assert table.rows[("M", "18_24")].odds_ratio == 0.4324
        assert time.time() - t0 < 1.0


def test_02_worked_single_factor_example():
    with criterion(2, "worked example: baseline 0.15 with OR 1.41"):
        t0 = time.time()
        factors = RiskFactorSet({**RiskFactorSet().odds_ratios, UNEMPLOYMENT: 1.41})
        p = crime_probability(0.15, {UNEMPLOYMENT}, factors)
        assert p == pytest.approx(0.2115, abs=1e-12)
        assert time.time() - t0 < 1.0


def test_03_calibration_band_held_every_tick(baseline_run):
    with criterion(3, "per-class mean stays in the +-0.1 band after burn-in"):
        result, elapsed = baseline_run
        table = BaselineTable.default()
        violations = []
        for frame in result.frames[24:]:
            for key, mean in frame.class_mean_c.items():
                assert mean == mean, f"empty class {key} at tick {frame.tick}"
                target = table.probability(*key)
                if abs(mean - target) > 0.1 + 1e-12:
                    violations.append((frame.tick, key, mean, target))
        assert not violations, violations[:5]
        assert elapsed < 300, f"baseline run took {elapsed:.0f}s (target < 5 min)"


def test_04_stationarity_between_halves(baseline_run):
    with criterion(4, "first-half vs second-half class means differ <= 0.1"):
        result, _ = baseline_run
        frames = result.frames[24:]
        half = len(frames) // 2
        for key in frames[0].class_mean_c:
            first = np.mean([f.class_mean_c[key] for f in frames[:half]])
            second = np.mean([f.class_mean_c[key] for f in frames[half:]])
            assert abs(first - second) <= 0.1


def test_05_embeddedness_oracle_1000_graphs():
    with criterion(5, "embeddedness equals exhaustive oracle on 1000 graphs"):
        t0 = time.time()
        rng = np.random.default_rng(2024)
        for trial in range(1000):
            n = int(rng.integers(3, 51))
            edges = {}
            for layer in Layer:
                p = rng.uniform(0.02, 0.12)
                edges[layer.value] = [
                    (a, b)
                    for a in range(n)
                    for b in range(a + 1, n)
                    if rng.random() < p
                ]
            graph = MultiplexGraph()
            for i in range(n):
                graph.add_node(i)
            for layer_name, layer_edges in edges.items():
                for a, b in layer_edges:
                    graph.add_edge(Layer(layer_name), a, b)
            oc = {int(i) for i in rng.choice(n, size=max(1, n // 5), replace=False)}
            ego = int(rng.integers(0, n))
            h = int(rng.integers(1, 4))
            got = oc_embeddedness(graph, ego, h, oc).value
            expected = oracle_embeddedness(n, edges, ego, h, oc)
            assert abs(got - expected) <= 1e-12, (trial, n, ego, h)
            assert 0.0 <= got <= 1.0
        elapsed = time.time() - t0
        assert elapsed < 30, f"oracle sweep took {elapsed:.1f}s (budget 30s)"


def test_06_betweenness_oracle_200_graphs():
    with criterion(6, "betweenness ranking equals brute-force oracle on 200 graphs"):
        rng = np.random.default_rng(77)
        for trial in range(200):
            n = int(rng.integers(4, 31))
            edges = [
                (a, b)
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.11
            ]
            graph = MultiplexGraph()
            for i in range(n):
                graph.add_node(i)
            for a, b in edges:
                graph.add_edge(Layer.CO_OFFENDING, a, b)
            scores = betweenness(graph, [Layer.CO_OFFENDING], set(range(n)))
            expected = oracle_betweenness(range(n), edges)
            for v in range(n):
                assert abs(scores[v] - expected[v]) <= 1e-9, (trial, v)
            # ranking agreement: every pair separated by more than the score
            # tolerance must be ordered identically (pairs inside the
            # tolerance are genuine ties and either order is correct)
            for u in range(n):
                for v in range(u + 1, n):
                    if abs(expected[u] - expected[v]) > 1e-9:
                        assert (scores[u] > scores[v]) == (expected[u] > expected[v]), (
                            trial,
                            u,
                            v,
                        )


def _tiny_society(n, oc):
    pop = Population()
    graph = MultiplexGraph()
    pop.propensity_threshold = 10.0
    for i in range(n):
        agent = Agent(id=pop.new_agent_id(), gender="M", age_months=30 * 12)
        pop.agents[agent.id] = agent
        graph.add_node(agent.id)
    for i in oc:
        pop.agents[i].oc_member = True
    return pop, graph


def test_07_recruitment_rule_property():
    with criterion(7, "recruitment follows the co-offending-with-member rule"):
        rng = np.random.default_rng(5)
        pop, graph = _tiny_society(40, oc=[0, 1, 2, 3])
        for event_id in range(500):
            party = sorted(set(int(x) for x in rng.integers(0, 40, size=int(rng.integers(1, 5)))))
            before = pop.oc_member_ids()
            event = commit_event(event_id, event_id % 60, party, pop, graph)
            recruits = apply_recruitment(event, pop, graph)
            after = pop.oc_member_ids()
            if event.oc_involved:
                assert all(pop.agents[p].oc_member for p in event.participant_ids)
                assert set(recruits) == set(party) - before
            else:
                assert after == before and recruits == []
            assert before <= after


def test_08_incarceration_roundtrip_and_invisibility():
    with criterion(8, "incarceration round-trip, zero-recovery, invisibility"):
        rng = np.random.default_rng(9)
        for trial in range(60):
            n = 14
            pop, graph = _tiny_society(n, oc=[1])
            for layer in Layer:
                for a in range(n):
                    for b in range(a + 1, n):
                        if rng.random() < 0.15:
                            graph.add_edge(layer, a, b)
            subject = pop.agents[0]
            before = set(graph.incident_edges(0, NON_HOUSEHOLD_LAYERS))
            household_before = set(graph.neighbors(Layer.HOUSEHOLD, 0))
            incarcerate(subject, pop, graph, months=6, tick=trial)
            # invisible to neighborhoods while inside
            assert graph.incident_edges(0, NON_HOUSEHOLD_LAYERS) == []
            for other in range(1, n):
                view = h_hop_neighborhood(graph, other, 3, exclude={0})
                assert 0 not in view.member_ids()
            # full recovery restores the exact non-household edge set
            release(subject, pop, graph, 1.0, rng)
            assert set(graph.incident_edges(0, NON_HOUSEHOLD_LAYERS)) == before
            assert set(graph.neighbors(Layer.HOUSEHOLD, 0)) == household_before
            # zero recovery restores nothing (non-OC subject)
            incarcerate(subject, pop, graph, months=6, tick=trial)
            release(subject, pop, graph, 0.0, rng)
            assert graph.incident_edges(0, NON_HOUSEHOLD_LAYERS) == []


def test_08b_no_incarcerated_participant_in_engine_events():
    with criterion(8, "no incarcerated agent ever enters a crime event (engine)"):
        payload = default_scenario_payload()
        payload["population"]["population_size"] = 1500
        payload["population"]["oc_seed"]["member_count"] = 15
        payload["horizon_ticks"] = 36
        result = run_scenario(parse_scenario(payload))
        # an agent sanctioned at tick t with sentence s is inside during
        # (t, t+s]; it must not appear in any event dated in that span
        jail_spans: dict[int, list[tuple[int, int]]] = {}
        for event in result.crime_log:
            for p, hit in event.sanctioned.items():
                if hit:
                    jail_spans.setdefault(p, []).append(
                        (event.tick, event.tick + event.sentence_months[p])
                    )
        for event in result.crime_log:
            for p in event.participant_ids:
                for start, end in jail_spans.get(p, ()):
                    assert not (start < event.tick <= end), (p, event.tick, start, end)


def test_09_policy_mechanism_exactness():
    with criterion(9, "scrutiny is bitwise multiplicative; repression caps at 1"):
        cfg = PopulationConfig(
            population_size=600,
            distributions=BUNDLE,
            random_seed=3,
            oc_seed=OcSeedConfig(member_count=10),
        )
        pop, graph = synthesize_population(cfg)
        target = sorted(pop.oc_member_ids())[0]
        table, factors = BaselineTable.default(), RiskFactorSet()
        base = compute_tick_probabilities(pop, graph, table, factors, 0, 12)
        for s in (0.25, 0.5, 0.9):
            treated = compute_tick_probabilities(
                pop, graph, table, factors, 0, 12, modifiers=TickModifiers(scrutiny={target: s})
            )
            assert treated.annual_raw[treated.index[target]] == s * base.annual_raw[base.index[target]]
            untouched = [i for aid, i in base.index.items() if aid != target]
            assert (treated.annual_raw[untouched] == base.annual_raw[untouched]).all()

        # repression: frequency of sanction == min(1, m * base) within 3 sigma
        sentence = DistributionTable("s", "categorical", (Bin("3", None, None, 1.0),))
        rng = np.random.default_rng(11)
        m, base_rate, trials = 2.0, 0.04, 10_000
        hits = 0
        for i in range(trials):
            mini_pop, mini_graph = _tiny_society(1, oc=())
            event = commit_event(i, 0, [0], mini_pop, mini_graph)
            hits += len(
                sanction(
                    event, mini_pop, mini_graph, base_rate, sentence, rng,
                    modifiers=TickModifiers(repression={0: m}),
                )
            )
        expected = min(1.0, m * base_rate)
        sigma = np.sqrt(trials * expected * (1 - expected))
        assert abs(hits - expected * trials) <= 3 * sigma
        # cap: enormous multiplier sanctions every participant
        mini_pop, mini_graph = _tiny_society(2, oc=())
        event = commit_event(0, 0, [0, 1], mini_pop, mini_graph)
        jailed = sanction(
            event, mini_pop, mini_graph, base_rate, sentence, np.random.default_rng(0),
            modifiers=TickModifiers(repression={0: 1e9, 1: 1e9}),
        )
        assert jailed == [0, 1]


@pytest.fixture(scope="module")
def default_scenario_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scenario") / "default.json"
    path.write_text(json.dumps(default_scenario_payload()))
    return path


def test_10_determinism_across_runs_and_jobs(default_scenario_file, tmp_path_factory):
    with criterion(10, "same seed -> byte-identical CSVs, independent of --jobs"):
        out = tmp_path_factory.mktemp("determinism")
        runner = CliRunner()
        for name in ("a", "b"):
            res = runner.invoke(
                cli_main,
                ["run", "--scenario", str(default_scenario_file), "--out", str(out / name), "--seed", "1", "--quiet"],
            )
            assert res.exit_code == 0, res.output
        assert (out / "a" / "frames.csv").read_bytes() == (out / "b" / "frames.csv").read_bytes()
        assert (out / "a" / "agents.csv").read_bytes() == (out / "b" / "agents.csv").read_bytes()

        for name, jobs in (("j1", "1"), ("j2", "2")):
            res = runner.invoke(
                cli_main,
                [
                    "batch", "--scenario", str(default_scenario_file), "--out", str(out / name),
                    "--replications", "2", "--jobs", jobs, "--seed", "1", "--quiet",
                ],
            )
            assert res.exit_code == 0, res.output
        assert (out / "j1" / "summary.csv").read_bytes() == (out / "j2" / "summary.csv").read_bytes()
        for r in ("replica_00", "replica_01"):
            assert (out / "j1" / r / "frames.csv").read_bytes() == (out / "j2" / r / "frames.csv").read_bytes()


def test_11_no_policy_neutrality(tmp_path):
    with criterion(11, "empty policy list == policy phase disabled, byte-identical"):
        payload = default_scenario_payload()
        payload["population"]["population_size"] = 1500
        payload["population"]["oc_seed"]["member_count"] = 15
        payload["horizon_ticks"] = 24
        config = parse_scenario(payload)
        with_phase = run_scenario(config, policy_phase_enabled=True)
        without_phase = run_scenario(config, policy_phase_enabled=False)
        dir_a = write_run_dir(with_phase, tmp_path / "with_phase")
        dir_b = write_run_dir(without_phase, tmp_path / "without_phase")
        for name in ("frames.csv", "agents.csv", "crime_log.csv", "interventions.csv") + tuple(
            f"edges_{layer.value}.csv" for layer in Layer
        ):
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name
