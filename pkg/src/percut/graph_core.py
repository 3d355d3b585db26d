"""Finite graphs with a horizon vertex set standing in for infinity.

A graph here is simple, connected and undirected, with edges carrying
stable integer ids (their position in the edge list).  The horizon is a
distinguished set of absorbing vertices: "connected to infinity" always
means "reaches some horizon vertex".  Subdivisions, multigraphs and the
two-tree Eulerian construction used by the covering argument live here
as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

from .errors import (
    CapExceededError,
    GraphStructureError,
    ParseError,
    PreconditionError,
    TheoremViolationError,
)


class _HorizonTarget:
    """Sentinel meaning "any horizon vertex" as a connectivity target."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "HORIZON"


HORIZON = _HorizonTarget()


@dataclass(frozen=True)
class Graph:
    """Simple connected graph with ordered edges and a horizon set.

    Edge ids are positions in ``edges``; each pair is stored as
    (min, max).  The horizon may be empty, in which case no vertex is
    connected to infinity and cutset operations are undefined.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    horizon: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.n_vertices < 1:
            raise GraphStructureError("graph needs at least one vertex")
        norm = []
        seen = set()
        for eid, pair in enumerate(self.edges):
            u, v = pair
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphStructureError(f"edge {eid} endpoint out of range: {pair}")
            if u == v:
                raise GraphStructureError(f"edge {eid} is a self-loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphStructureError(f"edge {eid} duplicates {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(norm))
        object.__setattr__(self, "horizon", frozenset(self.horizon))
        for z in self.horizon:
            if not 0 <= z < self.n_vertices:
                raise GraphStructureError(f"horizon vertex {z} out of range")
        if self.n_vertices > 1:
            seen_v = {0}
            stack = [0]
            adj = [[] for _ in range(self.n_vertices)]
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if w not in seen_v:
                        seen_v.add(w)
                        stack.append(w)
            if len(seen_v) != self.n_vertices:
                raise GraphStructureError("graph is not connected")

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per vertex, the tuple of (neighbor, edge id) pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for eid, (u, v) in enumerate(self.edges):
            adj[u].append((v, eid))
            adj[v].append((u, eid))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def interior(self) -> tuple[int, ...]:
        """Non-horizon vertices in ascending order."""
        return tuple(v for v in range(self.n_vertices) if v not in self.horizon)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(w for w, _ in self.adjacency[v])

    def incident_edges(self, v: int) -> tuple[int, ...]:
        return tuple(eid for _, eid in self.adjacency[v])

    def edge_id(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        for eid, pair in enumerate(self.edges):
            if pair == key:
                return eid
        raise PreconditionError(f"no edge {key}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def connected_in(graph: Graph, within: Iterable[int], a: int, b) -> bool:
    """Is there a path from ``a`` to ``b`` with all vertices inside ``within``?

    ``b`` may be a vertex (the whole path, including b, must lie in
    ``within``) or the HORIZON sentinel (the path stays in ``within``
    until its final vertex, which is any horizon vertex).
    """
    allowed = set(within)
    if a not in allowed:
        raise PreconditionError(f"start vertex {a} not in the allowed set")
    if b is HORIZON:
        if a in graph.horizon:
            return True
        passable = allowed - graph.horizon
        seen = {a}
        stack = [a]
        while stack:
            u = stack.pop()
            for w, _ in graph.adjacency[u]:
                if w in graph.horizon:
                    return True
                if w in passable and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False
    if b == a:
        return True
    if b not in allowed:
        return False
    seen = {a}
    stack = [a]
    while stack:
        u = stack.pop()
        for w, _ in graph.adjacency[u]:
            if w == b:
                return True
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def horizon_reachable_within(graph: Graph, within: Iterable[int]) -> frozenset[int]:
    """Vertices of ``within`` joined to the horizon by a path inside ``within``.

    Horizon members of ``within`` are not expanded through (they absorb)
    and are not reported; the result is the set of non-horizon vertices
    with an escape route.
    """
    allowed = set(within) - graph.horizon
    seen = set()
    stack = []
    for u in allowed:
        for w, _ in graph.adjacency[u]:
            if w in graph.horizon:
                seen.add(u)
                stack.append(u)
                break
    while stack:
        u = stack.pop()
        for w, _ in graph.adjacency[u]:
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


# ---- text format ----


def load_graph(text: str) -> Graph:
    """Parse the edge-list text format.

    Lines: ``v <count>``, ``z <id> ...`` (horizon), ``e <u> <v>`` (edge
    id = occurrence index), ``#`` comments.  A ``/`` also separates
    records, so the compact one-line form parses too.
    """
    n: int | None = None
    horizon: set[int] = set()
    edges: list[tuple[int, int]] = []
    seen_pairs: set[tuple[int, int]] = set()
    lineno = 0
    for raw_line in text.replace("/", "\n").split("\n"):
        lineno += 1
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag, args = parts[0], parts[1:]
        try:
            values = [int(a) for a in args]
        except ValueError:
            raise ParseError(f"non-integer argument in {line!r}", lineno) from None
        if tag == "v":
            if n is not None:
                raise ParseError("duplicate vertex-count line", lineno)
            if len(values) != 1 or values[0] < 1:
                raise ParseError("v expects one positive count", lineno)
            n = values[0]
        elif tag == "z":
            if n is None:
                raise ParseError("horizon before vertex count", lineno)
            for z in values:
                if not 0 <= z < n:
                    raise ParseError(f"horizon vertex {z} out of range", lineno)
            horizon.update(values)
        elif tag == "e":
            if n is None:
                raise ParseError("edge before vertex count", lineno)
            if len(values) != 2:
                raise ParseError("e expects two endpoints", lineno)
            u, v = values
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"edge endpoint out of range in {line!r}", lineno)
            if u == v:
                raise ParseError(f"self-loop at {u}", lineno)
            key = (min(u, v), max(u, v))
            if key in seen_pairs:
                raise ParseError(f"duplicate edge {key}", lineno)
            seen_pairs.add(key)
            edges.append(key)
        else:
            raise ParseError(f"unknown directive {tag!r}", lineno)
    if n is None:
        raise ParseError("missing vertex-count line")
    return Graph(n, tuple(edges), frozenset(horizon))


def dump_graph(graph: Graph) -> str:
    lines = [f"v {graph.n_vertices}"]
    if graph.horizon:
        lines.append("z " + " ".join(str(z) for z in sorted(graph.horizon)))
    lines.extend(f"e {u} {v}" for u, v in graph.edges)
    return "\n".join(lines) + "\n"


# ---- subdivision ----


@dataclass(frozen=True)
class SubdivisionMap:
    """Order 2 or 3 subdivision with the base-edge-to-midpoint map.

    Base vertices keep their ids in the derived graph; midpoints are
    appended in base edge order.  For order 3 the first midpoint of an
    edge is adjacent to the smaller base endpoint.
    """

    base: Graph
    derived: Graph
    order: int
    midpoints: tuple[tuple[int, ...], ...]

    def is_midpoint(self, v: int) -> bool:
        return v >= self.base.n_vertices

    def base_edge_of(self, v: int) -> int:
        if not self.is_midpoint(v):
            raise PreconditionError(f"{v} is a base vertex, not a midpoint")
        return (v - self.base.n_vertices) // (self.order - 1)

    def derived_edge_ids(self, base_eid: int) -> tuple[int, ...]:
        k = self.order
        return tuple(range(k * base_eid, k * base_eid + k))

    def mid_edge_id(self, base_eid: int) -> int:
        """Derived id of the middle segment of a base edge (order 3 only)."""
        if self.order != 3:
            raise PreconditionError("mid edges exist only at order 3")
        return 3 * base_eid + 1


def subdivide(graph: Graph, order: int) -> SubdivisionMap:
    """Replace every edge by a path with ``order`` segments (order 2 or 3)."""
    if order not in (2, 3):
        raise PreconditionError("subdivision order must be 2 or 3")
    n = graph.n_vertices
    derived_edges: list[tuple[int, int]] = []
    midpoints: list[tuple[int, ...]] = []
    for eid, (u, v) in enumerate(graph.edges):
        if order == 2:
            m = n + eid
            midpoints.append((m,))
            derived_edges += [(u, m), (m, v)]
        else:
            m1 = n + 2 * eid
            m2 = m1 + 1
            midpoints.append((m1, m2))
            derived_edges += [(u, m1), (m1, m2), (m2, v)]
    derived = Graph(n + (order - 1) * graph.n_edges, tuple(derived_edges), graph.horizon)
    return SubdivisionMap(graph, derived, order, tuple(midpoints))


def contract_subdivision(sd: SubdivisionMap) -> Graph:
    """Undo a subdivision; the round trip must reproduce the base exactly."""
    pairs = []
    for eid in range(sd.base.n_edges):
        ends = []
        for did in sd.derived_edge_ids(eid):
            for x in sd.derived.edges[did]:
                if not sd.is_midpoint(x):
                    ends.append(x)
        if len(ends) != 2:
            raise TheoremViolationError("subdivision path lost its endpoints")
        pairs.append((min(ends), max(ends)))
    return Graph(sd.base.n_vertices, tuple(pairs), sd.base.horizon)


# ---- multigraphs and Eulerian circuits ----


@dataclass(frozen=True)
class Multigraph:
    """Undirected multigraph; loops and parallel edges allowed."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphStructureError(f"edge endpoint out of range: {(u, v)}")

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for eid, (u, v) in enumerate(self.edges):
            adj[u].append((v, eid))
            if u != v:
                adj[v].append((u, eid))
        return tuple(tuple(a) for a in adj)

    def degree(self, v: int) -> int:
        d = 0
        for u, w in self.edges:
            if u == v:
                d += 1
            if w == v:
                d += 1
        return d

    def is_spanning_tree(self, edge_ids: Iterable[int]) -> bool:
        ids = list(edge_ids)
        if len(ids) != self.n_vertices - 1:
            return False
        parent = list(range(self.n_vertices))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for eid in ids:
            u, v = self.edges[eid]
            if u == v:
                return False
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True


def eulerian_from_two_trees(
    mg: Multigraph, tree1: Iterable[int], tree2: Iterable[int]
) -> tuple[int, ...]:
    """Even connected spanning edge set from two edge-disjoint spanning trees.

    Pair up the odd-degree vertices of the first tree and add, over
    GF(2), the second-tree paths joining each pair.  The first tree
    survives intact, so the result is spanning and connected; the path
    endpoints fix the parity, so every degree is even.
    """
    t1 = sorted(set(tree1))
    t2 = sorted(set(tree2))
    if set(t1) & set(t2):
        raise PreconditionError("tree edge id sets must be disjoint")
    if not mg.is_spanning_tree(t1) or not mg.is_spanning_tree(t2):
        raise PreconditionError("both inputs must be spanning trees of the multigraph")

    deg1 = [0] * mg.n_vertices
    for eid in t1:
        u, v = mg.edges[eid]
        deg1[u] += 1
        deg1[v] += 1
    odd = [v for v in range(mg.n_vertices) if deg1[v] % 2 == 1]

    adj2: list[list[tuple[int, int]]] = [[] for _ in range(mg.n_vertices)]
    for eid in t2:
        u, v = mg.edges[eid]
        adj2[u].append((v, eid))
        adj2[v].append((u, eid))

    def tree_path(a: int, b: int) -> list[int]:
        prev: dict[int, tuple[int, int]] = {a: (-1, -1)}
        stack = [a]
        while stack:
            u = stack.pop()
            if u == b:
                break
            for w, eid in adj2[u]:
                if w not in prev:
                    prev[w] = (u, eid)
                    stack.append(w)
        path = []
        x = b
        while x != a:
            x, eid = prev[x]
            path.append(eid)
        return path

    parity: dict[int, int] = {}
    for i in range(0, len(odd), 2):
        for eid in tree_path(odd[i], odd[i + 1]):
            parity[eid] = parity.get(eid, 0) ^ 1
    result = sorted(set(t1) | {eid for eid, bit in parity.items() if bit})

    deg = [0] * mg.n_vertices
    for eid in result:
        u, v = mg.edges[eid]
        deg[u] += 1
        deg[v] += 1
    if any(d == 0 or d % 2 for d in deg):
        raise TheoremViolationError("two-tree sum is not spanning with even degrees")
    return tuple(result)


def euler_circuit_edges(
    mg: Multigraph, edge_ids: Iterable[int], root: int
) -> tuple[list[int], list[int]]:
    """Closed walk from ``root`` using each listed edge exactly once.

    Returns (vertex sequence, edge id sequence); the vertex sequence has
    one more entry than the edge sequence and starts and ends at root.
    """
    ids = sorted(set(edge_ids))
    deg = [0] * mg.n_vertices
    adj: list[list[tuple[int, int]]] = [[] for _ in range(mg.n_vertices)]
    for eid in ids:
        u, v = mg.edges[eid]
        deg[u] += 1
        deg[v] += 1
        adj[u].append((v, eid))
        if u != v:
            adj[v].append((u, eid))
    if any(d % 2 for d in deg):
        raise PreconditionError("odd degree vertex; no Euler circuit")
    if not ids:
        return [root], []
    if deg[root] == 0:
        raise PreconditionError("root touches no chosen edge")

    used = [False] * (max(ids) + 1)
    ptr = [0] * mg.n_vertices
    stack: list[tuple[int, int]] = [(root, -1)]
    out_v: list[int] = []
    out_e: list[int] = []
    while stack:
        v, via = stack[-1]
        found = False
        while ptr[v] < len(adj[v]):
            w, eid = adj[v][ptr[v]]
            if used[eid]:
                ptr[v] += 1
                continue
            used[eid] = True
            stack.append((w, eid))
            found = True
            break
        if not found:
            stack.pop()
            out_v.append(v)
            out_e.append(via)
    out_v.reverse()
    out_e.reverse()
    out_e = [e for e in out_e if e != -1]
    if len(out_e) != len(ids):
        raise PreconditionError("chosen edges are not connected through the root")
    return out_v, out_e


def euler_circuit(mg: Multigraph, edge_ids: Iterable[int], root: int) -> list[int]:
    """Vertex sequence of an Euler circuit on the chosen edges."""
    return euler_circuit_edges(mg, edge_ids, root)[0]


# ---- subset machinery ----


def connected_subsets_containing(
    graph: Graph,
    root: int,
    allowed: Iterable[int] | None = None,
    max_count: int | None = None,
) -> Iterator[frozenset[int]]:
    """All connected vertex sets containing ``root`` inside ``allowed``.

    Each set is produced exactly once (include/exclude branching with a
    banned list).  Raises when more than ``max_count`` sets appear.
    """
    allow = set(range(graph.n_vertices)) if allowed is None else set(allowed)
    if root not in allow:
        raise PreconditionError("root must be allowed")
    produced = 0

    def rec(current: set[int], ext: list[int], banned: set[int]) -> Iterator[frozenset[int]]:
        nonlocal produced
        produced += 1
        if max_count is not None and produced > max_count:
            raise CapExceededError(f"more than {max_count} connected subsets")
        yield frozenset(current)
        local_banned = set(banned)
        while ext:
            v = ext.pop()
            extra = [
                w
                for w, _ in graph.adjacency[v]
                if w in allow and w not in current and w not in local_banned and w not in ext
            ]
            current.add(v)
            yield from rec(current, ext + extra, local_banned)
            current.remove(v)
            local_banned.add(v)

    first_ext = [w for w, _ in graph.adjacency[root] if w in allow]
    yield from rec({root}, first_ext, set())


def boundary_edges(graph: Graph, s: Iterable[int]) -> tuple[int, ...]:
    """Ids of edges with exactly one endpoint in ``s``."""
    inside = set(s)
    return tuple(
        eid for eid, (u, v) in enumerate(graph.edges) if (u in inside) != (v in inside)
    )


def set_weight(graph: Graph, s: Iterable[int]) -> int:
    """Degree-weighted size: the sum of full-graph degrees over the set."""
    return sum(graph.degree(v) for v in s)


def iso_profile(
    graph: Graph,
    n: int,
    connected_only: bool = False,
    max_interior: int = 20,
    max_subsets: int = 2_000_000,
) -> float:
    """Smallest boundary over sets of degree-weighted size at least ``n``.

    Sets range over non-empty proper vertex subsets disjoint from the
    horizon.  With ``connected_only`` the search is restricted to
    connected sets, which scales further but is a different minimum in
    general.  Returns ``inf`` when no admissible set is heavy enough.
    """
    if n < 1:
        raise PreconditionError("weight threshold must be at least 1")
    interior = graph.interior
    best = float("inf")
    if connected_only:
        allow = set(interior)
        for root in interior:
            for s in connected_subsets_containing(
                graph, root, allowed={v for v in allow if v >= root}, max_count=max_subsets
            ):
                if len(s) == graph.n_vertices:
                    continue
                if set_weight(graph, s) >= n:
                    best = min(best, len(boundary_edges(graph, s)))
        return best
    if len(interior) > max_interior:
        raise CapExceededError(
            f"{len(interior)} non-horizon vertices exceed the exhaustive cap {max_interior}"
        )
    degrees = [graph.degree(v) for v in interior]
    for mask in range(1, 1 << len(interior)):
        s = [interior[i] for i in range(len(interior)) if mask >> i & 1]
        if len(s) == graph.n_vertices:
            continue
        if sum(degrees[i] for i in range(len(interior)) if mask >> i & 1) >= n:
            size = len(boundary_edges(graph, s))
            if size < best:
                best = size
    return best


# ---- built-in families ----


def _resolve_horizon(spec, n: int, boundary: Iterable[int]) -> frozenset[int]:
    if spec == "boundary":
        return frozenset(boundary)
    if spec is None:
        return frozenset()
    return frozenset(int(v) for v in spec)


def path_graph(length: int, horizon="boundary") -> Graph:
    """Path on ``length`` vertices; boundary horizon is the two endpoints."""
    if length < 2:
        raise PreconditionError("path needs at least 2 vertices")
    edges = tuple((i, i + 1) for i in range(length - 1))
    return Graph(length, edges, _resolve_horizon(horizon, length, (0, length - 1)))


def cycle_graph(length: int, horizon=None) -> Graph:
    """Cycle on ``length`` vertices; it has no natural boundary."""
    if length < 3:
        raise PreconditionError("cycle needs at least 3 vertices")
    edges = tuple((i, (i + 1) % length) for i in range(length))
    boundary: tuple[int, ...] = ()
    return Graph(length, edges, _resolve_horizon(horizon, length, boundary))


def grid_graph(width: int, height: int, torus: bool = False, horizon="boundary") -> Graph:
    """Rectangular grid, row-major ids; boundary horizon is the outer ring."""
    if width < 1 or height < 1 or width * height < 2:
        raise PreconditionError("grid needs at least 2 vertices")
    if torus and (width < 3 or height < 3):
        raise PreconditionError("torus wrap needs both sides at least 3")
    edges = []
    for y in range(height):
        for x in range(width):
            v = y * width + x
            if x + 1 < width:
                edges.append((v, v + 1))
            elif torus:
                edges.append((v, y * width))
            if y + 1 < height:
                edges.append((v, v + width))
            elif torus:
                edges.append((v, x))
    boundary = () if torus else tuple(
        y * width + x
        for y in range(height)
        for x in range(width)
        if x in (0, width - 1) or y in (0, height - 1)
    )
    return Graph(width * height, tuple(edges), _resolve_horizon(horizon, width * height, boundary))


def box3d_graph(width: int, height: int, depth: int, horizon="boundary") -> Graph:
    """Box grid in three dimensions; boundary horizon is the outer shell."""
    if min(width, height, depth) < 1 or width * height * depth < 2:
        raise PreconditionError("box needs at least 2 vertices")

    def vid(x: int, y: int, z: int) -> int:
        return (z * height + y) * width + x

    edges = []
    for z in range(depth):
        for y in range(height):
            for x in range(width):
                if x + 1 < width:
                    edges.append((vid(x, y, z), vid(x + 1, y, z)))
                if y + 1 < height:
                    edges.append((vid(x, y, z), vid(x, y + 1, z)))
                if z + 1 < depth:
                    edges.append((vid(x, y, z), vid(x, y, z + 1)))
    boundary = tuple(
        vid(x, y, z)
        for z in range(depth)
        for y in range(height)
        for x in range(width)
        if x in (0, width - 1) or y in (0, height - 1) or z in (0, depth - 1)
    )
    n = width * height * depth
    return Graph(n, tuple(edges), _resolve_horizon(horizon, n, boundary))


def star_graph(leaves: int, horizon="boundary") -> Graph:
    """Star with center 0; boundary horizon is the leaf set."""
    if leaves < 1:
        raise PreconditionError("star needs at least one leaf")
    edges = tuple((0, i) for i in range(1, leaves + 1))
    return Graph(leaves + 1, edges, _resolve_horizon(horizon, leaves + 1, range(1, leaves + 1)))


FAMILY_BUILDERS = {
    "path": path_graph,
    "cycle": cycle_graph,
    "grid": grid_graph,
    "box3d": box3d_graph,
    "star": star_graph,
}
