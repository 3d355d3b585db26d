"""Bernoulli bond percolation on horizon graphs.

Exact probabilities come from sweeping all edge configurations, grouped
by open-edge count so one sweep prices every p.  Monte Carlo estimates
carry Wilson 99% intervals.  Horizon vertices absorb: open paths may
end on them but never pass through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ._util import wilson_interval
from .errors import CapExceededError, PreconditionError, TheoremViolationError
from .cutsets import Cutset, QnTable, exposed_boundary
from .graph_core import (
    HORIZON,
    Graph,
    connected_subsets_containing,
    iso_profile,
    set_weight,
)


@dataclass(frozen=True)
class PercConfig:
    """One open/closed assignment, indexed by edge id."""

    open_bits: tuple[bool, ...]

    def is_open(self, eid: int) -> bool:
        return self.open_bits[eid]

    @property
    def n_open(self) -> int:
        return sum(self.open_bits)


@dataclass(frozen=True)
class ClusterReport:
    """Open cluster of a source vertex; exposed boundary only when finite."""

    source: int
    cluster: frozenset[int]
    finite: bool
    exposed: tuple[int, ...] | None

    def __post_init__(self):
        if self.finite != (self.exposed is not None):
            raise PreconditionError("exposed boundary present iff the cluster is finite")


@dataclass(frozen=True)
class EventProbability:
    value: float
    method: str
    trials: int | None = None
    ci_low: float | None = None
    ci_high: float | None = None

    def __post_init__(self):
        if self.method not in ("exact", "monte_carlo"):
            raise PreconditionError(f"unknown method {self.method!r}")
        if (self.method == "monte_carlo") != (self.trials is not None):
            raise PreconditionError("trial count present iff monte_carlo")


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"p={p} outside [0, 1]")


def sample_config(graph: Graph, p: float, rng: np.random.Generator) -> PercConfig:
    _check_p(p)
    bits = rng.random(graph.n_edges) < p
    return PercConfig(tuple(bool(b) for b in bits))


def config_from_mask(graph: Graph, mask: int) -> PercConfig:
    return PercConfig(tuple(bool(mask >> i & 1) for i in range(graph.n_edges)))


def cluster_report(graph: Graph, config: PercConfig, v: int) -> ClusterReport:
    """BFS over open edges from v; membership stops at horizon contact."""
    if v in graph.horizon:
        raise PreconditionError("cluster source must be off the horizon")
    finite = True
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w, eid in graph.adjacency[u]:
            if not config.open_bits[eid]:
                continue
            if w in graph.horizon:
                finite = False
                continue
            if w not in seen:
                seen.add(w)
                stack.append(w)
    cluster = frozenset(seen)
    exposed = exposed_boundary(graph, cluster) if finite else None
    return ClusterReport(v, cluster, finite, exposed)


def config_connects(graph: Graph, config: PercConfig, a: int, b) -> bool:
    """Open-path connectivity; horizon vertices absorb rather than relay."""
    if b is HORIZON:
        if a in graph.horizon:
            return True
        seen = {a}
        stack = [a]
        while stack:
            u = stack.pop()
            for w, eid in graph.adjacency[u]:
                if not config.open_bits[eid]:
                    continue
                if w in graph.horizon:
                    return True
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False
    if a == b:
        return True
    seen = {a}
    stack = [a]
    while stack:
        u = stack.pop()
        for w, eid in graph.adjacency[u]:
            if not config.open_bits[eid] or w in seen:
                continue
            if w == b:
                return True
            if w not in graph.horizon:
                seen.add(w)
                stack.append(w)
    return False


def connection_event(graph: Graph, a: int, b) -> Callable[[PercConfig], bool]:
    return lambda config: config_connects(graph, config, a, b)


def finite_cluster_event(graph: Graph, v: int) -> Callable[[PercConfig], bool]:
    return lambda config: not config_connects(graph, config, v, HORIZON)


# ---- exact enumeration ----


def event_popcount_profile(
    graph: Graph, event: Callable[[PercConfig], bool], max_edges: int = 20
) -> np.ndarray:
    """Count satisfying configurations grouped by number of open edges.

    One sweep of all 2^m configurations; the resulting profile prices
    the event at any p via a short polynomial sum.
    """
    m = graph.n_edges
    if m > max_edges:
        raise CapExceededError(f"{m} edges exceed the exact enumeration cap {max_edges}")
    profile = np.zeros(m + 1, dtype=np.int64)
    for mask in range(1 << m):
        if event(config_from_mask(graph, mask)):
            profile[mask.bit_count()] += 1
    return profile


def profile_probability(profile: np.ndarray, p: float) -> float:
    _check_p(p)
    m = len(profile) - 1
    total = 0.0
    for k in range(m + 1):
        if profile[k]:
            total += float(profile[k]) * p**k * (1.0 - p) ** (m - k)
    return total


def exact_prob(
    graph: Graph, p: float, event: Callable[[PercConfig], bool], max_edges: int = 20
) -> EventProbability:
    profile = event_popcount_profile(graph, event, max_edges)
    return EventProbability(profile_probability(profile, p), "exact")


def mc_prob(
    graph: Graph,
    p: float,
    event: Callable[[PercConfig], bool],
    trials: int,
    seed: int,
) -> EventProbability:
    _check_p(p)
    if trials < 1:
        raise PreconditionError("trials must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    hits = 0
    block = 10_000
    done = 0
    while done < trials:
        take = min(block, trials - done)
        bits = rng.random((take, graph.n_edges)) < p
        for row in bits:
            if event(PercConfig(tuple(bool(b) for b in row))):
                hits += 1
        done += take
    lo, hi = wilson_interval(hits, trials)
    return EventProbability(hits / trials, "monte_carlo", trials, lo, hi)


# ---- named quantities ----


def theta(
    graph: Graph,
    p: float,
    v: int,
    exact: bool | None = None,
    trials: int = 100_000,
    seed: int | None = None,
) -> EventProbability:
    """Probability that v reaches the horizon through open edges."""
    if v in graph.horizon:
        return EventProbability(1.0, "exact")
    event = connection_event(graph, v, HORIZON)
    use_exact = exact if exact is not None else graph.n_edges <= 20
    if use_exact:
        return exact_prob(graph, p, event)
    if seed is None:
        raise PreconditionError("monte carlo theta needs a seed")
    return mc_prob(graph, p, event, trials, seed)


def peierls_bound(table: QnTable, p: float, v: int | None = None) -> float:
    """Sum of (cutset count) x (all-closed probability) over recorded sizes."""
    _check_p(p)
    if v is None:
        vertices = list(table.cutsets)
        if len(vertices) != 1:
            raise PreconditionError("table covers several vertices; name one")
        v = vertices[0]
    by_size = table.cutsets.get(v, {})
    return sum(len(items) * (1.0 - p) ** n for n, items in by_size.items())


def boundary_hit_event(graph: Graph, cutset: Cutset) -> Callable[[PercConfig], bool]:
    def event(config: PercConfig) -> bool:
        report = cluster_report(graph, config, cutset.source)
        return report.finite and report.exposed == cutset.edge_ids

    return event


def boundary_hit_probability(
    graph: Graph,
    p: float,
    cutset: Cutset,
    exact: bool | None = None,
    trials: int = 100_000,
    seed: int | None = None,
) -> EventProbability:
    """Probability that the source cluster's exposed boundary is this cutset."""
    event = boundary_hit_event(graph, cutset)
    use_exact = exact if exact is not None else graph.n_edges <= 20
    if use_exact:
        return exact_prob(graph, p, event)
    if seed is None:
        raise PreconditionError("monte carlo boundary hit needs a seed")
    return mc_prob(graph, p, event, trials, seed)


def boundary_census_exact(
    graph: Graph, v: int, max_edges: int = 20
) -> tuple[dict[tuple[int, ...], np.ndarray], np.ndarray]:
    """Popcount profile of every realized exposed boundary, in one sweep.

    Returns (per-boundary profiles, profile of the infinite-cluster
    event).  Summing a boundary profile at p gives the exact hit
    probability of that boundary.
    """
    m = graph.n_edges
    if m > max_edges:
        raise CapExceededError(f"{m} edges exceed the exact enumeration cap {max_edges}")
    profiles: dict[tuple[int, ...], np.ndarray] = {}
    infinite = np.zeros(m + 1, dtype=np.int64)
    for mask in range(1 << m):
        config = config_from_mask(graph, mask)
        report = cluster_report(graph, config, v)
        if report.finite:
            profile = profiles.get(report.exposed)
            if profile is None:
                profile = profiles.setdefault(report.exposed, np.zeros(m + 1, dtype=np.int64))
            profile[mask.bit_count()] += 1
        else:
            infinite[mask.bit_count()] += 1
    return profiles, infinite


def boundary_census_mc(
    graph: Graph, v: int, p: float, trials: int, seed: int
) -> tuple[dict[tuple[int, ...], int], int]:
    """Sampled tally of realized exposed boundaries from one source.

    Returns (hit counts per boundary, count of horizon-touching
    clusters); the two sides add up to the trial count.
    """
    _check_p(p)
    if trials < 1:
        raise PreconditionError("trials must be positive")
    counts: dict[tuple[int, ...], int] = {}
    infinite = 0
    rng = np.random.Generator(np.random.PCG64(seed))
    m = graph.n_edges
    done = 0
    while done < trials:
        size = min(10_000, trials - done)
        block = rng.random((size, m)) < p
        for row in block:
            report = cluster_report(graph, PercConfig(tuple(map(bool, row))), v)
            if report.finite:
                counts[report.exposed] = counts.get(report.exposed, 0) + 1
            else:
                infinite += 1
        done += size
    return counts, infinite


# ---- positive association spot checks ----


@dataclass(frozen=True)
class FkgCheck:
    joint: float
    product: float


def fkg_spot_check(
    graph: Graph,
    p: float,
    event_pairs: Iterable[tuple[tuple[int, object], tuple[int, object]]],
    max_edges: int = 20,
) -> list[FkgCheck]:
    """Exact P(A and B) >= P(A) P(B) for pairs of connection events.

    Events are (a, b) descriptors with b a vertex or HORIZON.  Both are
    increasing, so a violation beyond float noise is an implementation
    bug and raises.
    """
    checks = []
    for (a1, b1), (a2, b2) in event_pairs:
        e1 = connection_event(graph, a1, b1)
        e2 = connection_event(graph, a2, b2)
        joint = exact_prob(graph, p, lambda c: e1(c) and e2(c), max_edges).value
        product = exact_prob(graph, p, e1, max_edges).value * exact_prob(
            graph, p, e2, max_edges
        ).value
        if joint < product - 1e-12:
            raise TheoremViolationError(
                f"positive association failed: {joint} < {product} for "
                f"({a1},{b1}) vs ({a2},{b2})"
            )
        checks.append(FkgCheck(joint, product))
    return checks


# ---- strong percolation experiment ----


@dataclass(frozen=True)
class StrongPercRow:
    vertices: tuple[int, ...]
    weight: int
    psi: float
    miss_probability: float
    minus_log: float
    satisfied: bool


@dataclass(frozen=True)
class StrongPercReport:
    p: float
    c_fit: float
    rows: tuple[StrongPercRow, ...]
    all_satisfied: bool


def strong_percolation_experiment(
    graph: Graph,
    p: float,
    c_fit: float,
    sets: Iterable[Iterable[int]] | None = None,
    max_edges: int = 20,
    max_set_size: int = 6,
) -> StrongPercReport:
    """Compare -ln P(S misses the horizon) against c_fit x boundary profile.

    By default S ranges over connected horizon-free sets of bounded
    size.  Rows with miss probability zero are omitted (their log
    diverges).
    """
    if not graph.horizon:
        raise PreconditionError("experiment needs a horizon to miss")
    _check_p(p)
    if sets is None:
        pool: set[frozenset[int]] = set()
        for root in graph.interior:
            for s in connected_subsets_containing(
                graph, root, allowed={u for u in graph.interior if u >= root}
            ):
                if len(s) <= max_set_size:
                    pool.add(s)
        chosen: list[tuple[int, ...]] = sorted(tuple(sorted(s)) for s in pool)
    else:
        chosen = [tuple(sorted(s)) for s in sets]
    rows = []
    for s in chosen:
        members = list(s)

        def miss(config: PercConfig, members=members) -> bool:
            return all(not config_connects(graph, config, u, HORIZON) for u in members)

        prob = exact_prob(graph, p, miss, max_edges).value
        if prob == 0.0:
            continue
        weight = set_weight(graph, members)
        psi = iso_profile(graph, weight)
        minus_log = -math.log(prob)
        rows.append(
            StrongPercRow(s, weight, psi, prob, minus_log, minus_log >= c_fit * psi - 1e-12)
        )
    return StrongPercReport(p, c_fit, tuple(rows), all(r.satisfied for r in rows))
