"""Embeddedness and social proximity on a toy multiplex, step by step.

A hand-built 8-person network shows how the distance-discounted weights
come together: parallel ties count twice, second-hop neighbors count
half, and the OC share of that weight mass is the embeddedness value
driving recruitment risk.

Run:  python3 demos/02_embeddedness.py
"""

from ocsim.multiplex import (
    Layer,
    MultiplexGraph,
    h_hop_neighborhood,
    oc_embeddedness,
    social_proximity,
)

# the cast: 0=ego, 1=father (OC), 2=mother, 3=schoolmate, 4=schoolmate,
# 5=father's associate (OC), 6=friend, 7=stranger
graph = MultiplexGraph()
for i in range(8):
    graph.add_node(i)

graph.add_edge(Layer.HOUSEHOLD, 0, 1)
graph.add_edge(Layer.HOUSEHOLD, 0, 2)
graph.add_edge(Layer.HOUSEHOLD, 1, 2)
graph.add_edge(Layer.WORK_SCHOOL, 0, 3)
graph.add_edge(Layer.WORK_SCHOOL, 0, 4)
graph.add_edge(Layer.FRIENDSHIP, 0, 6)
graph.add_edge(Layer.FRIENDSHIP, 0, 3)      # schoolmate 3 is also a friend
graph.add_edge(Layer.OC_GROUP, 1, 5)        # father's criminal tie
graph.add_edge(Layer.FRIENDSHIP, 6, 7)

oc = {1, 5}

view = h_hop_neighborhood(graph, 0, h=2)
print("ego's 2-hop neighborhood (member, hop distance, layer multiplicity):")
for member, dist, mult in view.members:
    tag = " [OC]" if member in oc else ""
    print(f"  agent {member}: distance {dist}, {mult} layer edge(s), weight {mult / dist:.2f}{tag}")
print(f"total weight mass: {view.total_weight:.2f}")

result = oc_embeddedness(graph, 0, 2, oc)
print(f"\nembeddedness of ego: {result.oc_weight_sum:.2f} / {result.total_weight_sum:.2f} "
      f"= {result.value:.3f}")

print("\nsocial proximity from ego (sum of per-layer 1/distance):")
for other in (1, 3, 5, 7):
    print(f"  to agent {other}: {social_proximity(graph, 0, other, h=2):.2f}")

print("\nweakening the father tie (as the primary-socialisation policy does):")
mask = {(0, 1, Layer.HOUSEHOLD)}
damped = oc_embeddedness(graph, 0, 2, oc, edge_mask=mask)
print(f"  embeddedness with the household edge masked: {damped.value:.3f}")
