"""Five-layer multiplex graph and its neighborhood metrics.

All social structure lives here: one shared node set (agent ids) and five
undirected, unweighted layers. Derived quantities:

* h-hop neighborhood views with distance-discounted edge weights,
* OC embeddedness (share of neighborhood weight owned by OC members),
* social proximity between two agents (sum of per-layer inverse distances),
* betweenness centrality on a layer union, for law-enforcement targeting.

Weights follow the 1/hop-distance rule. A neighbor at hop distance ``d``
(shortest path on the union of the selected layers) contributes one weight
entry of ``1/d`` for every distinct layer edge that reaches it from the
previous BFS level, so parallel ties across layers and multiple same-layer
paths both raise a neighbor's pull.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import AbstractSet, Callable, Iterable, Iterator, Mapping

import networkx as nx
import numpy as np
from scipy import sparse

from ocsim.errors import StructuralError


class Layer(str, Enum):
    HOUSEHOLD = "household"
    FRIENDSHIP = "friendship"
    WORK_SCHOOL = "work_school"
    CO_OFFENDING = "co_offending"
    OC_GROUP = "oc_group"


ALL_LAYERS: tuple[Layer, ...] = tuple(Layer)

# Suspended during incarceration rather than destroyed; household ties survive.
NON_HOUSEHOLD_LAYERS: tuple[Layer, ...] = tuple(l for l in Layer if l is not Layer.HOUSEHOLD)

EdgeKey = tuple[int, int, Layer]


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class MultiplexGraph:
    """Shared node set with one adjacency map per layer.

    Nodes are integer agent ids. Edges are undirected, deduplicated per
    layer (the same pair may be linked in several layers) and remember
    their creation tick.
    """

    def __init__(self):
        self.nodes: set[int] = set()
        self._adj: dict[Layer, dict[int, set[int]]] = {l: {} for l in Layer}
        self._created: dict[Layer, dict[tuple[int, int], int]] = {l: {} for l in Layer}

    # -- node & edge mutation ------------------------------------------------

    def add_node(self, node: int) -> None:
        if node not in self.nodes:
            self.nodes.add(node)
            for layer in Layer:
                self._adj[layer][node] = set()

    def remove_node(self, node: int) -> None:
        """Drop a node and every edge it holds in every layer."""
        self._require(node)
        for layer in Layer:
            for other in list(self._adj[layer][node]):
                self.remove_edge(layer, node, other)
            del self._adj[layer][node]
        self.nodes.discard(node)

    def add_edge(self, layer: Layer, a: int, b: int, tick: int = 0) -> None:
        """Idempotent per (layer, pair); re-adding keeps the original tick."""
        if a == b:
            raise ValueError(f"self-loop on node {a}")
        self._require(a)
        self._require(b)
        if b in self._adj[layer][a]:
            return
        self._adj[layer][a].add(b)
        self._adj[layer][b].add(a)
        self._created[layer][_pair(a, b)] = tick

    def remove_edge(self, layer: Layer, a: int, b: int) -> None:
        """No-op when the edge is absent."""
        self._require(a)
        self._require(b)
        self._adj[layer][a].discard(b)
        self._adj[layer][b].discard(a)
        self._created[layer].pop(_pair(a, b), None)

    def _require(self, node: int) -> None:
        if node not in self.nodes:
            raise StructuralError(f"unknown node id {node}")

    # -- queries ---------------------------------------------------------------

    def neighbors(self, layer: Layer, node: int) -> set[int]:
        self._require(node)
        return self._adj[layer][node]

    def has_edge(self, layer: Layer, a: int, b: int) -> bool:
        return a in self.nodes and b in self._adj[layer].get(a, ())

    def created_tick(self, layer: Layer, a: int, b: int) -> int | None:
        return self._created[layer].get(_pair(a, b))

    def union_neighbors(self, node: int, layers: Iterable[Layer] = ALL_LAYERS) -> set[int]:
        self._require(node)
        out: set[int] = set()
        for layer in layers:
            out |= self._adj[layer][node]
        return out

    def degree(self, layer: Layer, node: int) -> int:
        return len(self.neighbors(layer, node))

    def edges(self, layer: Layer) -> Iterator[tuple[int, int, int]]:
        """Yield (a, b, created_tick) with a < b, in sorted order."""
        for (a, b), tick in sorted(self._created[layer].items()):
            yield a, b, tick

    def edge_count(self, layer: Layer) -> int:
        return len(self._created[layer])

    def incident_edges(self, node: int, layers: Iterable[Layer] = ALL_LAYERS) -> list[EdgeKey]:
        self._require(node)
        out = []
        for layer in layers:
            for other in self._adj[layer][node]:
                out.append((*_pair(node, other), layer))
        return sorted(out, key=lambda e: (e[0], e[1], e[2].value))

    def export_edges(self) -> Iterator[tuple[int, int, str, int]]:
        """All edges as (source_id, target_id, layer, created_tick), sorted."""
        for layer in Layer:
            for (a, b), tick in sorted(self._created[layer].items()):
                yield a, b, layer.value, tick


@dataclass(frozen=True)
class NeighborhoodView:
    """h-hop neighborhood of one ego.

    ``members`` holds (agent id, hop distance, layer-edge multiplicity at
    that distance); ``weights`` holds one ``1/distance`` entry per counted
    layer edge, aligned with the members expansion.
    """

    ego: int
    h: int
    members: tuple[tuple[int, int, int], ...]
    weights: tuple[float, ...]

    @property
    def total_weight(self) -> float:
        return sum(self.weights)

    def member_ids(self) -> set[int]:
        return {m[0] for m in self.members}


@dataclass(frozen=True)
class EmbeddednessResult:
    ego: int
    value: float
    oc_weight_sum: float
    total_weight_sum: float


def _edge_masked(mask, u: int, v: int, layer: Layer) -> bool:
    return mask is not None and (*_pair(u, v), layer) in mask


def h_hop_neighborhood(
    graph: MultiplexGraph,
    ego: int,
    h: int,
    layers: Iterable[Layer] | None = None,
    exclude: AbstractSet[int] | None = None,
    edge_mask: AbstractSet[EdgeKey] | None = None,
) -> NeighborhoodView:
    """BFS over the union of ``layers`` out to ``h`` hops.

    Hop distance is the shortest path length on the layer union. A node at
    distance ``d`` gains one multiplicity count per (layer, predecessor)
    pair that reaches it from distance ``d-1``; each count yields a weight
    entry of ``1/d``.

    ``exclude`` hides nodes entirely (used for incarcerated agents);
    ``edge_mask`` hides individual (a, b, layer) edges for this evaluation
    (used by the family-tie weakening policy).
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if ego not in graph.nodes:
        raise StructuralError(f"unknown node id {ego}")
    use_layers = ALL_LAYERS if layers is None else tuple(layers)
    hidden = exclude or frozenset()

    dist: dict[int, int] = {ego: 0}
    frontier: list[int] = [ego]
    members: list[tuple[int, int, int]] = []
    weights: list[float] = []

    for d in range(1, h + 1):
        level: dict[int, int] = {}
        for u in frontier:
            for layer in use_layers:
                for v in graph.neighbors(layer, u):
                    if v == ego or v in hidden:
                        continue
                    if v in dist:  # found at an earlier level
                        continue
                    if _edge_masked(edge_mask, u, v, layer):
                        continue
                    level[v] = level.get(v, 0) + 1
        w = 1.0 / d
        for v in sorted(level):
            dist[v] = d
            members.append((v, d, level[v]))
            weights.extend([w] * level[v])
        frontier = sorted(level)
        if not frontier:
            break

    return NeighborhoodView(ego=ego, h=h, members=tuple(members), weights=tuple(weights))


def oc_embeddedness(
    graph: MultiplexGraph,
    ego: int,
    h: int,
    oc_members: AbstractSet[int],
    exclude: AbstractSet[int] | None = None,
    edge_mask: AbstractSet[EdgeKey] | None = None,
) -> EmbeddednessResult:
    """Share of the ego's neighborhood weight held by OC members.

    Ratio of weight entries whose far endpoint is an OC member over all
    weight entries; 0 for an empty neighborhood, always within [0, 1].
    """
    view = h_hop_neighborhood(graph, ego, h, exclude=exclude, edge_mask=edge_mask)
    total = 0.0
    oc_sum = 0.0
    for member, d, mult in view.members:
        w = mult / d
        total += w
        if member in oc_members:
            oc_sum += w
    value = oc_sum / total if total > 0 else 0.0
    return EmbeddednessResult(ego=ego, value=value, oc_weight_sum=oc_sum, total_weight_sum=total)


def layer_distance(
    graph: MultiplexGraph,
    layer: Layer,
    a: int,
    b: int,
    h: int,
    exclude: AbstractSet[int] | None = None,
) -> int | None:
    """Shortest path length a->b inside one layer, None beyond h hops."""
    if a == b:
        return 0
    hidden = exclude or frozenset()
    seen = {a}
    frontier = [a]
    for d in range(1, h + 1):
        nxt = []
        for u in frontier:
            for v in graph.neighbors(layer, u):
                if v in hidden:
                    continue
                if v == b:
                    return d
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
        if not frontier:
            return None
    return None


def social_proximity(
    graph: MultiplexGraph,
    a: int,
    b: int,
    h: int,
    exclude: AbstractSet[int] | None = None,
) -> float:
    """Sum over layers of 1/d_l(a, b) for layers where b is within h hops.

    0 when unreachable everywhere; symmetric in a and b.
    """
    if a == b:
        raise ValueError("social proximity needs two distinct agents")
    total = 0.0
    for layer in Layer:
        d = layer_distance(graph, layer, a, b, h, exclude)
        if d:
            total += 1.0 / d
    return total


def proximity_map(
    graph: MultiplexGraph,
    ego: int,
    h: int,
    exclude: AbstractSet[int] | None = None,
) -> dict[int, float]:
    """social_proximity(ego, x) for every x with a nonzero value.

    One bounded BFS per layer instead of one per candidate pair.
    """
    hidden = exclude or frozenset()
    out: dict[int, float] = {}
    for layer in Layer:
        seen = {ego}
        frontier = [ego]
        for d in range(1, h + 1):
            nxt = []
            for u in frontier:
                for v in graph.neighbors(layer, u):
                    if v in seen or v in hidden:
                        continue
                    seen.add(v)
                    nxt.append(v)
                    out[v] = out.get(v, 0.0) + 1.0 / d
            frontier = nxt
            if not frontier:
                break
    return out


def betweenness(
    graph: MultiplexGraph,
    layers: Iterable[Layer],
    node_filter: Callable[[int], bool] | AbstractSet[int],
) -> dict[int, float]:
    """Normalized shortest-path betweenness on the induced union subgraph.

    The subgraph is induced by the nodes selected by ``node_filter`` over
    the union of ``layers``; scores are the standard Brandes values scaled
    into [0, 1].
    """
    if callable(node_filter):
        selected = {n for n in graph.nodes if node_filter(n)}
    else:
        selected = set(node_filter) & graph.nodes
    if not selected:
        raise ValueError("node filter selects no nodes")
    g = nx.Graph()
    g.add_nodes_from(selected)
    for layer in layers:
        for a, b, _tick in graph.edges(layer):
            if a in selected and b in selected:
                g.add_edge(a, b)
    return nx.betweenness_centrality(g, normalized=True)


# -- batch embeddedness -------------------------------------------------------
#
# Per-tick metrics need embeddedness for every active agent. Doing 10k
# separate BFS walks per tick dominates the tick budget, so the common case
# runs as sparse matrix products: with U the 0/1 union adjacency and D the
# layer-multiplicity matrix over active nodes, the distance-1 weight mass of
# node i is row-sum(D), the distance-2 mass is row-sum of (U @ D) masked to
# strictly-distance-2 columns, and so on. Egos carrying per-edge masks fall
# back to the exact BFS. Equivalence with the BFS path is enforced by tests.


def adjacency_matrix(
    graph: MultiplexGraph,
    nodes: list[int],
    layers: Iterable[Layer] = ALL_LAYERS,
    binary: bool = False,
) -> sparse.csr_matrix:
    """Adjacency over ``nodes`` (rows/cols in list order) summed across
    ``layers``; entries count parallel layer edges unless ``binary``.

    Ids of excluded neighbors are filtered with a dense lookup array, which
    keeps the per-edge work out of the Python loop."""
    from itertools import repeat

    n = len(nodes)
    if n == 0:
        return sparse.csr_matrix((0, 0))
    max_id = max(graph.nodes) + 1 if graph.nodes else 1
    lookup = np.full(max_id, -1, dtype=np.int64)
    lookup[np.fromiter(nodes, dtype=np.int64, count=n)] = np.arange(n)
    rows: list[int] = []
    cols: list[int] = []
    for layer in layers:
        adj = graph._adj[layer]
        for i, node in enumerate(nodes):
            nbrs = adj.get(node)
            if nbrs:
                cols.extend(nbrs)
                rows.extend(repeat(i, len(nbrs)))
    if not rows:
        return sparse.csr_matrix((n, n))
    row_arr = np.array(rows, dtype=np.int64)
    col_arr = lookup[np.array(cols, dtype=np.int64)]
    keep = col_arr >= 0
    mat = sparse.csr_matrix(
        (np.ones(int(keep.sum())), (row_arr[keep], col_arr[keep])), shape=(n, n)
    )
    mat.sum_duplicates()
    if binary:
        mat.data[:] = 1.0
    return mat


def _layer_matrices(
    graph: MultiplexGraph, active: list[int]
) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    d = adjacency_matrix(graph, active, ALL_LAYERS)
    u = d.copy()
    u.data[:] = 1.0
    return u, d


def batch_embeddedness(
    graph: MultiplexGraph,
    egos: Iterable[int],
    h: int,
    oc_members: AbstractSet[int],
    exclude: AbstractSet[int] | None = None,
    edge_masks: Mapping[int, AbstractSet[EdgeKey]] | None = None,
) -> dict[int, float]:
    """Embeddedness values for many egos at once.

    Matches :func:`oc_embeddedness` exactly. ``edge_masks`` maps an ego to
    the edge set hidden from its own evaluation; those egos are computed by
    the reference BFS.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    hidden = exclude or frozenset()
    ego_list = [e for e in egos]
    masked_egos = set(edge_masks) if edge_masks else set()
    active = sorted(graph.nodes - set(hidden))
    index = {node: i for i, node in enumerate(active)}
    out: dict[int, float] = {}

    plain = [e for e in ego_list if e not in masked_egos and e in index]
    if plain:
        u, d = _layer_matrices(graph, active)
        oc_vec = np.fromiter(
            (1.0 if node in oc_members else 0.0 for node in active), dtype=np.float64, count=len(active)
        )
        total = np.asarray(d.sum(axis=1)).ravel()
        oc_w = d @ oc_vec
        reach = u  # 0/1 indicator of 1 <= distance <= current level
        level_ind = u
        for depth in range(2, h + 1):
            t = (level_ind @ d).tocsr()
            # keep strictly new columns: not the diagonal, not within depth-1
            diag = t.diagonal()
            if diag.any():
                t = (t - sparse.diags(diag)).tocsr()
            t = (t - t.multiply(reach)).tocsr()
            t.eliminate_zeros()
            total += np.asarray(t.sum(axis=1)).ravel() / depth
            oc_w += (t @ oc_vec) / depth
            level_ind = (t > 0).astype(np.float64).tocsr()
            reach = ((reach + level_ind) > 0).astype(np.float64).tocsr()
        for ego in plain:
            i = index[ego]
            out[ego] = float(oc_w[i] / total[i]) if total[i] > 0 else 0.0

    for ego in ego_list:
        if ego not in out:  # masked egos and egos hidden from the matrix
            res = oc_embeddedness(
                graph,
                ego,
                h,
                oc_members,
                exclude=hidden,
                edge_mask=edge_masks.get(ego) if edge_masks else None,
            )
            out[ego] = res.value
    return out
