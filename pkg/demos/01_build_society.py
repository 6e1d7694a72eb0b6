"""Synthesize a town and look at what came out.

Builds a 5,000-agent society from the packaged synthetic tables, seeds a
30-member OC group, and prints the marginals that the generator is
supposed to hit: age pyramid, household sizes, employment, school
enrollment and layer edge counts.

Run:  python3 demos/01_build_society.py
"""

import numpy as np

from ocsim.distributions import load_builtin_bundle
from ocsim.multiplex import Layer
from ocsim.population import OcSeedConfig, PopulationConfig, synthesize_population

bundle = load_builtin_bundle()
config = PopulationConfig(
    population_size=5000,
    unemployment_rate=0.12,
    distributions=bundle,
    random_seed=7,
    oc_seed=OcSeedConfig(member_count=30, topology="clique"),
)
pop, graph = synthesize_population(config)
agents = pop.alive_agents()
print(f"agents: {len(agents)}")

print("\nage pyramid (decades):")
ages = np.array([a.age_years for a in agents])
for lo in range(0, 100, 10):
    share = ((ages >= lo) & (ages < lo + 10)).mean()
    bar = "#" * int(share * 200)
    print(f"  {lo:3d}-{lo + 9:<3d} {share:6.1%} {bar}")

sizes = np.array([len(m) for m in pop.households.values()])
print(f"\nhouseholds: {len(sizes)}, mean size {sizes.mean():.2f}")
for s in range(1, 7):
    print(f"  size {s}: {(sizes == s).mean():6.1%}")

working = [a for a in agents if 18 <= a.age_years < 65 and a.school_id is None]
employed = sum(a.employed for a in working)
print(f"\nemployment: {employed}/{len(working)} = {employed / len(working):.1%} (target 88.0%)")

pupils = [a for a in agents if a.school_id is not None]
print(f"pupils: {len(pupils)} across {len(pop.schools)} schools, {len(pop.classes)} classes")

print("\nedges per layer:")
for layer in Layer:
    print(f"  {layer.value:<14} {graph.edge_count(layer):6d}")

members = sorted(pop.oc_member_ids())
print(f"\nOC seed: {len(members)} members, {graph.edge_count(Layer.OC_GROUP)} OC-layer edges (clique)")
member_ages = [pop.agents[m].age_years for m in members]
print(f"  member ages {min(member_ages)}-{max(member_ages)}, "
      f"male share {np.mean([pop.agents[m].gender == 'M' for m in members]):.0%}")
