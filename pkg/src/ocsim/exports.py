"""On-disk result artifacts: metrics CSV, snapshots, logs, manifest.

Writers are deterministic byte-for-byte for a given result: rows are
id-sorted and floats are serialized with ``repr`` (shortest round-trip
form). ``mean_r`` averages over free alive agents.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ocsim import __version__
from ocsim.engine import BatchResult, METRIC_COLUMNS, MetricsFrame, RunResult
from ocsim.multiplex import Layer


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_frames_csv(frames: list[MetricsFrame], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for frame in frames:
            writer.writerow([_fmt(v) for v in frame.to_row()])


def read_frames_csv(path: Path) -> list[dict[str, float]]:
    with open(path) as fh:
        return [
            {k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)
        ]


def write_population_csv(pop, path: Path) -> None:
    columns = (
        "id",
        "gender",
        "age_months",
        "education",
        "employed",
        "employer_id",
        "school_id",
        "wealth_level",
        "propensity",
        "oc_member",
        "incarcerated",
        "alive",
        "household_id",
        "partner_id",
        "facilitator",
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for aid in sorted(pop.agents):
            a = pop.agents[aid]
            writer.writerow(
                [
                    a.id,
                    a.gender,
                    a.age_months,
                    int(a.education),
                    int(a.employed),
                    "" if a.employer_id is None else a.employer_id,
                    "" if a.school_id is None else a.school_id,
                    a.wealth_level,
                    repr(a.propensity),
                    int(a.oc_member),
                    int(a.incarcerated),
                    int(a.alive),
                    a.household_id,
                    "" if a.partner_id is None else a.partner_id,
                    int(a.facilitator),
                ]
            )


def write_edge_csvs(graph, out_dir: Path) -> list[Path]:
    """One file per layer, schema (source_id, target_id, layer, created_tick)."""
    paths = []
    for layer in Layer:
        path = Path(out_dir) / f"edges_{layer.value}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source_id", "target_id", "layer", "created_tick"])
            for a, b, tick in graph.edges(layer):
                writer.writerow([a, b, layer.value, tick])
        paths.append(path)
    return paths


def write_crime_log_csv(events, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["event_id", "tick", "initiator_id", "participant_ids", "oc_involved", "sanctioned_ids", "sentences_months"]
        )
        for e in events:
            sanctioned = sorted(aid for aid, hit in e.sanctioned.items() if hit)
            writer.writerow(
                [
                    e.id,
                    e.tick,
                    e.initiator_id,
                    "|".join(str(p) for p in e.participant_ids),
                    int(e.oc_involved),
                    "|".join(str(s) for s in sanctioned),
                    "|".join(str(e.sentence_months[s]) for s in sanctioned),
                ]
            )


def write_intervention_log_csv(records, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "policy_kind", "target_id", "actions"])
        for r in records:
            writer.writerow([r.tick, r.kind, r.target, "|".join(r.actions)])


def write_manifest(path: Path, scenario_hash: str, seed, extra: dict | None = None) -> None:
    payload = {"scenario_hash": scenario_hash, "seed": seed, "code_version": __version__}
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_run_dir(result: RunResult, out_dir: Path) -> Path:
    """Standard layout for one finished run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir / "manifest.json", result.scenario_hash, result.seed)
    write_frames_csv(result.frames, out_dir / "frames.csv")
    write_population_csv(result.pop, out_dir / "agents.csv")
    write_edge_csvs(result.graph, out_dir)
    write_crime_log_csv(result.crime_log, out_dir / "crime_log.csv")
    write_intervention_log_csv(result.intervention_log, out_dir / "interventions.csv")
    return out_dir


def write_summary_csv(summary: dict, path: Path) -> None:
    columns = list(summary.keys())
    length = len(summary["tick"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i in range(length):
            writer.writerow([_fmt(float(summary[c][i])) for c in columns])


def write_batch_dir(batch: BatchResult, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(
        out_dir / "manifest.json",
        batch.scenario_hash,
        batch.base_seed,
        extra={"replications": batch.replications},
    )
    write_summary_csv(batch.summary, out_dir / "summary.csv")
    for r, result in enumerate(batch.results):
        write_run_dir(result, out_dir / f"replica_{r:02d}")
    return out_dir


def frame_to_dict(frame: MetricsFrame) -> dict:
    row = frame.to_row()
    return {name: row[i] for i, name in enumerate(METRIC_COLUMNS)}
