"""A full no-policy run with the metric time series on the console.

Runs 5 simulated years over 3,000 agents and prints the headline series:
crime rate per 100k, OC membership, recruits, prison population and mean
embeddedness. Writes the standard artifact directory next to this script.

Run:  python3 demos/04_run_baseline.py
"""

from pathlib import Path

from ocsim.config import default_scenario_payload, parse_scenario
from ocsim.engine import run_scenario
from ocsim.exports import write_run_dir

payload = default_scenario_payload()
payload["population"]["population_size"] = 3000
payload["population"]["oc_seed"]["member_count"] = 20
payload["horizon_ticks"] = 60
config = parse_scenario(payload)

print("tick  crimes  rate/100k  oc  recruits  prison  meanR")
result = run_scenario(
    config,
    on_frame=lambda f, _state: print(
        f"{f.tick:4d}  {f.crimes:6d}  {f.crime_rate_100k:9.0f}  {f.oc_members:3d}"
        f"  {f.recruits:8d}  {f.incarcerated:6d}  {f.mean_r:.4f}"
    )
    if f.tick % 6 == 0
    else None,
)

total_recruits = sum(f.recruits for f in result.frames)
print(f"\n5 years: {sum(f.crimes for f in result.frames)} crimes, "
      f"{total_recruits} recruits, OC {result.frames[0].oc_members} -> {result.frames[-1].oc_members}")

out = Path(__file__).parent / "out" / "baseline"
write_run_dir(result, out)
print(f"artifacts -> {out}")
