"""Minimal edge cutsets separating a vertex from the horizon.

Two independent enumerations are kept deliberately: a powerset sweep
that tests minimality edge by edge, and a component walk that emits the
exposed boundary of every connected set around the source.  They must
agree exactly; the agreement is one of the package's core checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .errors import CapExceededError, PreconditionError, TheoremViolationError
from .graph_core import (
    Graph,
    connected_subsets_containing,
    boundary_edges,
    horizon_reachable_within,
)


@dataclass(frozen=True)
class Cutset:
    """A minimal cutset: sorted edge ids whose removal strands the source."""

    edge_ids: tuple[int, ...]
    source: int

    def __post_init__(self):
        object.__setattr__(self, "edge_ids", tuple(sorted(self.edge_ids)))

    @property
    def size(self) -> int:
        return len(self.edge_ids)


@dataclass(frozen=True)
class CutsetDecomposition:
    """Component and inner-vertex data attached to a minimal cutset."""

    cutset: Cutset
    component_a: frozenset[int]
    inner_b: frozenset[int]


def _require_cutset_context(graph: Graph, v: int) -> None:
    if not graph.horizon:
        raise PreconditionError("cutsets need a non-empty horizon")
    if v in graph.horizon:
        raise PreconditionError(f"source {v} lies on the horizon")


def _reaches_horizon_without(graph: Graph, v: int, removed: frozenset[int]) -> bool:
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w, eid in graph.adjacency[u]:
            if eid in removed:
                continue
            if w in graph.horizon:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def exposed_boundary(graph: Graph, s: Iterable[int]) -> tuple[int, ...]:
    """Edges out of ``s`` whose far endpoint still reaches the horizon.

    The far endpoint may itself be a horizon vertex.  ``s`` must not
    touch the horizon.
    """
    inside = set(s)
    if inside & graph.horizon:
        raise PreconditionError("set under study intersects the horizon")
    complement = set(range(graph.n_vertices)) - inside
    escaping = horizon_reachable_within(graph, complement) | graph.horizon
    out = [
        eid
        for eid, (u, v) in enumerate(graph.edges)
        if (u in inside and v in escaping) or (v in inside and u in escaping)
    ]
    return tuple(sorted(out))


def is_minimal_cutset(graph: Graph, edge_ids: Iterable[int], v: int) -> bool:
    """Does removing exactly this edge set, and no proper subset, strand v?"""
    _require_cutset_context(graph, v)
    removed = frozenset(edge_ids)
    if _reaches_horizon_without(graph, v, removed):
        return False
    for eid in removed:
        if not _reaches_horizon_without(graph, v, removed - {eid}):
            return False
    return True


def verified_cutset(graph: Graph, edge_ids: Iterable[int], source: int) -> Cutset:
    """Construct a Cutset, refusing anything that is not minimal."""
    ids = tuple(sorted(edge_ids))
    if not is_minimal_cutset(graph, ids, source):
        raise PreconditionError(f"{ids} is not a minimal cutset from {source}")
    return Cutset(ids, source)


def decompose(graph: Graph, cutset: Cutset) -> CutsetDecomposition:
    """Component of the source after removal, plus the inner endpoints.

    Also re-derives the component's boundary both ways (all boundary
    edges, and boundary edges with an escaping far endpoint) and demands
    that both coincide with the cutset.
    """
    if not is_minimal_cutset(graph, cutset.edge_ids, cutset.source):
        raise PreconditionError("decompose needs a minimal cutset")
    removed = frozenset(cutset.edge_ids)
    comp = {cutset.source}
    stack = [cutset.source]
    while stack:
        u = stack.pop()
        for w, eid in graph.adjacency[u]:
            if eid in removed or w in comp:
                continue
            comp.add(w)
            stack.append(w)
    inner = set()
    for eid in cutset.edge_ids:
        u, v = graph.edges[eid]
        side = (u in comp) + (v in comp)
        if side != 1:
            raise TheoremViolationError(f"cutset edge {eid} does not straddle the component")
        inner.add(u if u in comp else v)
    if tuple(sorted(boundary_edges(graph, comp))) != cutset.edge_ids:
        raise TheoremViolationError("component boundary differs from the cutset")
    if exposed_boundary(graph, comp) != cutset.edge_ids:
        raise TheoremViolationError("exposed component boundary differs from the cutset")
    return CutsetDecomposition(cutset, frozenset(comp), frozenset(inner))


# ---- enumeration ----


@dataclass(frozen=True)
class QnTable:
    """Minimal cutsets of each size, per source vertex.

    ``cutsets[v][n]`` is the sorted tuple of all size-n minimal cutsets
    from v; counts derive from it.  The growth estimate is the largest
    count^(1/n) over recorded sizes.
    """

    cutsets: dict[int, dict[int, tuple[Cutset, ...]]]

    @cached_property
    def counts(self) -> dict[int, dict[int, int]]:
        return {
            v: {n: len(items) for n, items in by_size.items()}
            for v, by_size in self.cutsets.items()
        }

    @cached_property
    def kappa_estimate(self) -> float:
        best = 0.0
        for by_size in self.cutsets.values():
            for n, items in by_size.items():
                if items:
                    best = max(best, len(items) ** (1.0 / n))
        return best

    def count(self, v: int, n: int) -> int:
        return len(self.cutsets.get(v, {}).get(n, ()))

    def all_cutsets(self, v: int | None = None) -> Iterator[Cutset]:
        for vertex, by_size in sorted(self.cutsets.items()):
            if v is not None and vertex != v:
                continue
            for n in sorted(by_size):
                yield from by_size[n]

    def merged_with(self, other: "QnTable") -> "QnTable":
        data = {v: dict(by_size) for v, by_size in self.cutsets.items()}
        for v, by_size in other.cutsets.items():
            if v in data and data[v] and by_size:
                raise PreconditionError(f"both tables already cover vertex {v}")
            data.setdefault(v, {}).update(by_size)
        return QnTable(data)


def _pack_table(v: int, found: dict[int, list[Cutset]]) -> QnTable:
    packed = {
        n: tuple(sorted(items, key=lambda c: c.edge_ids))
        for n, items in sorted(found.items())
        if items
    }
    return QnTable({v: packed})


def enumerate_minimal_cutsets_bruteforce(
    graph: Graph, v: int, n_max: int, max_edges: int = 20
) -> QnTable:
    """Powerset sweep: test every edge subset of size up to ``n_max``."""
    _require_cutset_context(graph, v)
    if graph.n_edges > max_edges:
        raise CapExceededError(f"{graph.n_edges} edges exceed the powerset cap {max_edges}")
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    found: dict[int, list[Cutset]] = {}
    ids = range(graph.n_edges)
    for size in range(1, min(n_max, graph.n_edges) + 1):
        for combo in itertools.combinations(ids, size):
            if is_minimal_cutset(graph, combo, v):
                found.setdefault(size, []).append(Cutset(combo, v))
    return _pack_table(v, found)


def enumerate_minimal_cutsets_by_components(
    graph: Graph, v: int, n_max: int, max_subsets: int = 2_000_000
) -> QnTable:
    """Component walk: exposed boundaries of connected sets around v.

    Every minimal cutset is the exposed boundary of the source component
    it cuts out, so sweeping connected sets and deduplicating boundaries
    by edge ids recovers the same table as the powerset sweep.
    """
    _require_cutset_context(graph, v)
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    seen: set[tuple[int, ...]] = set()
    found: dict[int, list[Cutset]] = {}
    for s in connected_subsets_containing(graph, v, allowed=graph.interior, max_count=max_subsets):
        ids = exposed_boundary(graph, s)
        if len(ids) > n_max or ids in seen:
            continue
        seen.add(ids)
        found.setdefault(len(ids), []).append(Cutset(ids, v))
    return _pack_table(v, found)


# ---- randomized global minimum cuts ----


@dataclass(frozen=True)
class KargerResult:
    min_cut_size: int
    cuts: frozenset[frozenset[int]]
    trials: int

    @property
    def distinct_count(self) -> int:
        return len(self.cuts)


def default_karger_trials(n_vertices: int) -> int:
    pairs = n_vertices * (n_vertices - 1) // 2
    if pairs <= 1:
        return 1
    return math.ceil(10 * pairs * math.log(pairs))


def karger_count_min_cuts(
    graph: Graph, rng: np.random.Generator, trials: int | None = None
) -> KargerResult:
    """Repeated random contraction; collect the distinct best cuts seen.

    The horizon plays no role here.  Each trial contracts edges in a
    uniformly random order until two super-vertices remain, which is
    equivalent to contracting a uniform surviving edge at every step.
    A strictly better cut size flushes the found set.
    """
    n = graph.n_vertices
    if n < 2:
        raise PreconditionError("global cuts need at least two vertices")
    if trials is None:
        trials = default_karger_trials(n)
    if trials < 1:
        raise PreconditionError("trials must be positive")
    m = graph.n_edges
    best: int | None = None
    cuts: set[frozenset[int]] = set()
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for _ in range(trials):
        for i in range(n):
            parent[i] = i
        components = n
        for ei in rng.permutation(m):
            if components == 2:
                break
            u, v = graph.edges[ei]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                components -= 1
        cut = frozenset(
            eid for eid, (u, v) in enumerate(graph.edges) if find(u) != find(v)
        )
        size = len(cut)
        if best is None or size < best:
            best = size
            cuts = {cut}
        elif size == best:
            cuts.add(cut)
    assert best is not None
    return KargerResult(best, frozenset(cuts), trials)
