"""HTTP control plane for the dashboard.

Scenario CRUD, run lifecycle with poll-based incremental metrics, network
snapshots, and run comparison. One worker thread executes one run at a
time; a bounded number of active (queued + running) runs applies
back-pressure with 429. Finished runs are persisted under the results root
and survive restarts; anything caught mid-flight by a restart is marked
failed, never silently dropped.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ocsim.config import (
    ScenarioConfig,
    ScenarioValidationError,
    default_scenario_payload,
    parse_scenario,
    scenario_hash,
)
from ocsim.engine import RunCancelled, run_scenario
from ocsim.exports import frame_to_dict, read_frames_csv, write_manifest, write_run_dir
from ocsim.multiplex import Layer

SNAPSHOT_CADENCE = 12


@dataclass
class RunRecord:
    run_id: str
    scenario_id: str
    scenario_hash: str
    seed: int
    replications: int
    horizon: int
    status: str = "queued"  # queued -> running -> finished | failed
    tick: int = 0
    error: str | None = None
    frames: list[dict] = field(default_factory=list)
    snapshots: dict[int, list[tuple]] = field(default_factory=dict)
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def handle(self) -> dict:
        payload = {
            "run_id": self.run_id,
            "status": self.status,
            "progress": {"tick": self.tick, "horizon": self.horizon},
            "scenario_id": self.scenario_id,
            "scenario_hash": self.scenario_hash,
            "seed": self.seed,
            "replications": self.replications,
        }
        if self.error:
            payload["error"] = self.error
        return payload


class RunManager:
    """Owns scenario storage, the run registry and the worker pool."""

    def __init__(self, root: Path, max_active_runs: int = 4):
        self.root = Path(root)
        self.scenario_dir = self.root / "scenarios"
        self.runs_dir = self.root / "runs"
        self.scenario_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.max_active_runs = max_active_runs
        self.lock = threading.Lock()
        self.scenarios: dict[str, dict] = {}
        self.runs: dict[str, RunRecord] = {}
        self.pool = ThreadPoolExecutor(max_workers=max_active_runs, thread_name_prefix="ocsim-run")
        self._counter = 0
        self._load_persisted()
        if "default" not in self.scenarios:
            self.register_scenario(default_scenario_payload(), alias="default")

    # -- persistence -------------------------------------------------------

    def _load_persisted(self) -> None:
        for path in sorted(self.scenario_dir.glob("*.json")):
            try:
                payload = json.loads(path.read_text())
                parse_scenario(payload, base_dir=self.scenario_dir)
                self.scenarios[path.stem] = payload
            except (ScenarioValidationError, json.JSONDecodeError):
                continue
        for run_dir in sorted(self.runs_dir.iterdir() if self.runs_dir.exists() else []):
            status_file = run_dir / "status.json"
            if not run_dir.is_dir():
                continue
            if status_file.exists():
                meta = json.loads(status_file.read_text())
                record = RunRecord(
                    run_id=run_dir.name,
                    scenario_id=meta.get("scenario_id", ""),
                    scenario_hash=meta.get("scenario_hash", ""),
                    seed=meta.get("seed", 0),
                    replications=meta.get("replications", 1),
                    horizon=meta.get("horizon", 0),
                    status=meta.get("status", "failed"),
                    tick=meta.get("tick", 0),
                    error=meta.get("error"),
                )
                if record.status == "finished":
                    frames_csv = run_dir / "frames.csv"
                    if frames_csv.exists():
                        record.frames = [
                            {k: (int(v) if k in _INT_COLUMNS else v) for k, v in row.items()}
                            for row in read_frames_csv(frames_csv)
                        ]
            else:
                # interrupted by a restart: re-queueing is not possible
                # without the submitting context, so mark it failed loudly
                record = RunRecord(
                    run_id=run_dir.name,
                    scenario_id="",
                    scenario_hash="",
                    seed=0,
                    replications=1,
                    horizon=0,
                    status="failed",
                    error="interrupted by service restart",
                )
            self.runs[record.run_id] = record

    # -- scenarios -----------------------------------------------------------

    def register_scenario(self, payload: dict, alias: str | None = None) -> tuple[str, str]:
        config = parse_scenario(payload, base_dir=self.scenario_dir)
        digest = scenario_hash(config)
        scenario_id = alias or digest[:12]
        with self.lock:
            self.scenarios[scenario_id] = payload
        (self.scenario_dir / f"{scenario_id}.json").write_text(json.dumps(payload, indent=2))
        return scenario_id, digest

    def get_scenario(self, scenario_id: str) -> dict | None:
        return self.scenarios.get(scenario_id)

    def _config_for(self, scenario_id: str) -> ScenarioConfig:
        return parse_scenario(self.scenarios[scenario_id], base_dir=self.scenario_dir)

    # -- runs ------------------------------------------------------------------

    def active_count(self) -> int:
        return sum(1 for r in self.runs.values() if r.status in ("queued", "running"))

    def submit(self, scenario_id: str, replications: int, seed: int | None) -> RunRecord:
        config = self._config_for(scenario_id)
        with self.lock:
            self._counter += 1
            run_id = f"run{self._counter:05d}"
            record = RunRecord(
                run_id=run_id,
                scenario_id=scenario_id,
                scenario_hash=scenario_hash(config),
                seed=config.seed if seed is None else seed,
                replications=replications,
                horizon=config.horizon_ticks,
            )
            self.runs[run_id] = record
        self.pool.submit(self._execute, record, config)
        return record

    def _execute(self, record: RunRecord, config: ScenarioConfig) -> None:
        if record.cancel_event.is_set():
            record.status = "failed"
            record.error = "cancelled before start"
            self._persist_status(record)
            return
        record.status = "running"
        run_dir = self.runs_dir / record.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        try:
            for replica in range(record.replications):
                seed = record.seed + replica
                streaming = replica == 0

                def on_frame(frame, state):
                    if record.cancel_event.is_set():
                        raise RunCancelled()
                    if streaming:
                        record.frames.append(frame_to_dict(frame))
                        record.tick = frame.tick
                        last = frame.tick == record.horizon
                        if frame.tick % SNAPSHOT_CADENCE == 0 or last:
                            record.snapshots[frame.tick] = list(state.graph.export_edges())
                            # bound memory: newest cadence snapshot + final only
                            for old in sorted(record.snapshots)[:-2]:
                                del record.snapshots[old]

                result = run_scenario(config, seed=seed, on_frame=on_frame)
                target = run_dir if record.replications == 1 else run_dir / f"replica_{replica:02d}"
                write_run_dir(result, target)
                if streaming:
                    if record.replications > 1:
                        write_manifest(
                            run_dir / "manifest.json", record.scenario_hash, record.seed,
                            extra={"replications": record.replications},
                        )
                        from ocsim.exports import write_frames_csv

                        write_frames_csv(result.frames, run_dir / "frames.csv")
            record.status = "finished"
        except RunCancelled:
            record.status = "failed"
            record.error = "cancelled"
        except Exception as exc:  # noqa: BLE001 - run boundary
            record.status = "failed"
            record.error = str(exc)
        self._persist_status(record)

    def _persist_status(self, record: RunRecord) -> None:
        (self.runs_dir / record.run_id).mkdir(parents=True, exist_ok=True)
        (self.runs_dir / record.run_id / "status.json").write_text(
            json.dumps(
                {
                    "status": record.status,
                    "scenario_id": record.scenario_id,
                    "scenario_hash": record.scenario_hash,
                    "seed": record.seed,
                    "replications": record.replications,
                    "horizon": record.horizon,
                    "tick": record.tick,
                    "error": record.error,
                },
                indent=2,
            )
        )

    def cancel(self, run_id: str) -> RunRecord:
        record = self.runs[run_id]
        if record.status in ("finished", "failed"):
            raise ValueError("run already finished")
        record.cancel_event.set()
        return record


_INT_COLUMNS = {"tick", "crimes", "oc_members", "recruits", "incarcerated", "interventions"}


def create_app(results_root: Path, max_active_runs: int = 4) -> FastAPI:
    manager = RunManager(results_root, max_active_runs=max_active_runs)
    app = FastAPI(title="ocsim control service", version="1")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.manager = manager

    @app.post("/scenarios", status_code=201)
    def post_scenario(payload: dict):
        try:
            scenario_id, digest = manager.register_scenario(payload)
        except ScenarioValidationError as exc:
            return JSONResponse(
                status_code=422,
                content={"errors": [{"path": p, "message": m} for p, m in exc.errors]},
            )
        return {"id": scenario_id, "hash": digest}

    @app.get("/scenarios")
    def list_scenarios():
        return {"scenarios": sorted(manager.scenarios)}

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        payload = manager.get_scenario(scenario_id)
        if payload is None:
            raise HTTPException(404, f"unknown scenario {scenario_id}")
        return payload

    @app.post("/runs", status_code=202)
    def post_run(body: dict):
        scenario_id = body.get("scenario_id", "default")
        replications = int(body.get("replications", 1))
        seed = body.get("seed")
        if manager.get_scenario(scenario_id) is None:
            raise HTTPException(404, f"unknown scenario {scenario_id}")
        if replications < 1:
            raise HTTPException(422, "replications must be >= 1")
        if manager.active_count() >= manager.max_active_runs:
            raise HTTPException(429, "run queue is full, retry later")
        record = manager.submit(scenario_id, replications, seed)
        return record.handle()

    @app.get("/runs")
    def list_runs():
        return {"runs": [manager.runs[k].handle() for k in sorted(manager.runs)]}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        record = manager.runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id}")
        return record.handle()

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str, from_tick: int = Query(0, ge=0)):
        record = manager.runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id}")
        frames = [f for f in record.frames if f["tick"] >= from_tick]
        return {"run_id": run_id, "from_tick": from_tick, "frames": frames}

    @app.get("/runs/{run_id}/network")
    def get_network(run_id: str, tick: int = Query(...), layer: str = Query("all")):
        record = manager.runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id}")
        if layer != "all" and layer not in {l.value for l in Layer}:
            raise HTTPException(422, f"unknown layer {layer}")
        if tick > record.tick:
            raise HTTPException(404, f"tick {tick} not finished yet (progress {record.tick})")
        if tick not in record.snapshots:
            raise HTTPException(
                404,
                f"no snapshot stored for tick {tick}; available: {sorted(record.snapshots)}",
            )
        edges = [
            {"source": a, "target": b, "layer": l, "created_tick": t}
            for a, b, l, t in record.snapshots[tick]
            if layer == "all" or l == layer
        ]
        return {"run_id": run_id, "tick": tick, "layer": layer, "edges": edges}

    @app.get("/compare")
    def compare(a: str = Query(...), b: str = Query(...)):
        ra, rb = manager.runs.get(a), manager.runs.get(b)
        if ra is None or rb is None:
            missing = a if ra is None else b
            raise HTTPException(404, f"unknown run {missing}")
        n = min(len(ra.frames), len(rb.frames))
        ticks = [ra.frames[i]["tick"] for i in range(n)]
        metrics = {}
        if n:
            for key in ra.frames[0]:
                if key == "tick":
                    continue
                metrics[key] = [ra.frames[i][key] - rb.frames[i][key] for i in range(n)]
        return {"a": a, "b": b, "ticks": ticks, "differences": metrics}

    @app.delete("/runs/{run_id}")
    def delete_run(run_id: str):
        record = manager.runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id}")
        try:
            manager.cancel(run_id)
        except ValueError:
            raise HTTPException(409, "run already finished")
        return record.handle()

    return app
