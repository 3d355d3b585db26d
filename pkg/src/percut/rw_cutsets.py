"""Random walks that discover minimal cutsets.

On the order-2 subdivision of a uniformly transient horizon graph, run
the simple random walk from a fixed midpoint neighbor of the origin
until absorption, keep the range up to the last visit to the start, and
read off the inner endpoints of its exposed boundary.  When those are
all midpoints of a minimal base cutset, the walk has certified that
cutset.  The crossing matrix of excursion probabilities between the
relevant midpoints is symmetric sub-stochastic with a guaranteed cut
lower bound, which feeds the covering machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import UniformBuffer, checked_solve, trial_generator, wilson_interval
from .errors import CapExceededError, PreconditionError, TheoremViolationError
from .cutsets import Cutset, QnTable, decompose, exposed_boundary, is_minimal_cutset
from .graph_core import Graph, SubdivisionMap
from .percolation import EventProbability

DECODED = "decoded"
NON_MIDPOINT = "non_midpoint"
NOT_MINIMAL = "not_minimal"
ABORTED = "aborted"


# ---- escape probabilities ----


def fundamental_matrix(graph: Graph) -> tuple[tuple[int, ...], np.ndarray]:
    """Expected visit counts between interior vertices before absorption."""
    if not graph.horizon:
        raise PreconditionError("walks need a horizon to be absorbed at")
    interior = graph.interior
    index = {v: i for i, v in enumerate(interior)}
    k = len(interior)
    q = np.zeros((k, k))
    for v in interior:
        for w, _ in graph.adjacency[v]:
            if w in index:
                q[index[v], index[w]] += 1.0 / graph.degree(v)
    n = checked_solve(np.eye(k) - q, np.eye(k), "fundamental matrix")
    return interior, n


def escape_probabilities(graph: Graph, method: str = "fundamental") -> dict[int, float]:
    """P_v(never return to v before absorption), for every interior vertex.

    The fundamental route inverts one interior system and uses
    1 / (expected visits to the start).  The absorbing route solves, per
    vertex, for the probability of reaching the horizon before the
    vertex; the two must agree to solver precision.
    """
    if method == "fundamental":
        interior, n = fundamental_matrix(graph)
        return {v: 1.0 / float(n[i, i]) for i, v in enumerate(interior)}
    if method != "absorbing":
        raise PreconditionError(f"unknown method {method!r}")
    if not graph.horizon:
        raise PreconditionError("walks need a horizon to be absorbed at")
    out = {}
    for v in graph.interior:
        others = [x for x in graph.interior if x != v]
        index = {x: i for i, x in enumerate(others)}
        k = len(others)
        q = np.zeros((k, k))
        b = np.zeros(k)
        for x in others:
            for w, _ in graph.adjacency[x]:
                if w in index:
                    q[index[x], index[w]] += 1.0 / graph.degree(x)
                elif w in graph.horizon:
                    b[index[x]] += 1.0 / graph.degree(x)
        u = checked_solve(np.eye(k) - q, b, "escape system") if k else b
        total = 0.0
        for w, _ in graph.adjacency[v]:
            if w in graph.horizon:
                total += 1.0
            elif w != v:
                total += float(u[index[w]])
        out[v] = total / graph.degree(v)
    return out


def escape_constant(graph: Graph, method: str = "fundamental") -> float:
    """Smallest degree-weighted no-return probability over the interior."""
    probs = escape_probabilities(graph, method)
    if not probs:
        raise PreconditionError("graph has no interior vertices")
    return min(graph.degree(v) * p for v, p in probs.items())


def escape_probability_mc(
    graph: Graph, v: int, trials: int, seed: int, max_steps: int = 10_000_000
) -> EventProbability:
    """Simulated no-return frequency with a Wilson interval."""
    if v in graph.horizon:
        raise PreconditionError("escape is defined for interior vertices")
    hits = 0
    for t in range(trials):
        buf = UniformBuffer(trial_generator(seed, t))
        x = v
        for _ in range(max_steps):
            nbrs = graph.adjacency[x]
            x = nbrs[buf.index(len(nbrs))][0]
            if x == v:
                break
            if x in graph.horizon:
                hits += 1
                break
        else:
            raise CapExceededError("walk exceeded the step cap")
    lo, hi = wilson_interval(hits, trials)
    return EventProbability(hits / trials, "monte_carlo", trials, lo, hi)


# ---- subdivision transience report ----


@dataclass(frozen=True)
class SubdivisionEscapeReport:
    eps_base: float
    eps_derived_floor: float
    weighted_escape: dict[int, float]
    min_over_midpoints: float
    min_over_originals: float
    max_identity_residual: float


def subdivision_escape_check(sd: SubdivisionMap) -> SubdivisionEscapeReport:
    """Degree-weighted escape on an order-2 subdivision, with the floors.

    Every derived vertex must clear 2 eps / (4 + eps); original vertices
    must clear eps / 2 (their walk is the lazy base walk).  Midpoint
    no-return is also re-derived through the visit-count identity
    E[visits to z] = 1 + E[visits to u]/d_u + E[visits to v]/d_v, which
    must hold to 1e-9.
    """
    if sd.order != 2:
        raise PreconditionError("escape check runs on order-2 subdivisions")
    eps = escape_constant(sd.base)
    floor_all = 2.0 * eps / (4.0 + eps)
    floor_orig = eps / 2.0
    probs = escape_probabilities(sd.derived)
    weighted = {v: sd.derived.degree(v) * p for v, p in probs.items()}

    interior, n = fundamental_matrix(sd.derived)
    index = {v: i for i, v in enumerate(interior)}
    worst = 0.0
    for eid in range(sd.base.n_edges):
        (z,) = sd.midpoints[eid]
        u, v = sd.base.edges[eid]
        lhs = float(n[index[z], index[z]])
        rhs = 1.0
        for end in (u, v):
            if end in index:
                rhs += float(n[index[z], index[end]]) / sd.derived.degree(end)
        worst = max(worst, abs(lhs - rhs))
    if worst > 1e-9:
        raise TheoremViolationError(f"midpoint visit identity residual {worst:.3e}")

    mins_mid = min(weighted[v] for v in weighted if sd.is_midpoint(v))
    originals = [v for v in weighted if not sd.is_midpoint(v)]
    mins_orig = min((weighted[v] for v in originals), default=float("inf"))
    for v, value in weighted.items():
        floor = floor_orig if not sd.is_midpoint(v) else floor_all
        if value < floor - 1e-12:
            raise TheoremViolationError(
                f"derived vertex {v}: weighted escape {value} below floor {floor}"
            )
    return SubdivisionEscapeReport(eps, floor_all, weighted, mins_mid, mins_orig, worst)


# ---- crossing matrices ----


@dataclass(frozen=True)
class CrossingMatrix:
    """Excursion probabilities between the watched midpoints.

    ``vertices``: midpoints of the cutset edges in edge order, then the
    start midpoint if distinct.  ``p[i, j]`` is the probability that the
    walk from vertices[i] reaches vertices[j] while keeping every
    strictly intermediate vertex inside the component region.
    """

    vertices: tuple[int, ...]
    region: frozenset[int]
    p: np.ndarray
    eps_base: float
    eps1: float
    eps2: float
    min_cut_value: float


def origin_midpoint(sd: SubdivisionMap, origin: int) -> int:
    """Midpoint of the origin's lowest-id incident base edge."""
    eid = min(sd.base.incident_edges(origin))
    return sd.midpoints[eid][0]


def _excursion_probability(graph: Graph, region: set[int], u: int, v: int) -> float:
    """P(walk from u reaches v before leaving region - {u} or dying)."""
    inner = sorted((region - {u, v}) - graph.horizon)
    index = {x: i for i, x in enumerate(inner)}
    k = len(inner)
    q = np.zeros((k, k))
    b = np.zeros(k)
    for x in inner:
        for w, _ in graph.adjacency[x]:
            if w == v:
                b[index[x]] += 1.0 / graph.degree(x)
            elif w in index:
                q[index[x], index[w]] += 1.0 / graph.degree(x)
    f = checked_solve(np.eye(k) - q, b, "excursion system") if k else b
    total = 0.0
    for w, _ in graph.adjacency[u]:
        if w == v:
            total += 1.0
        elif w in index:
            total += float(f[index[w]])
    return total / graph.degree(u)


def crossing_matrix(sd: SubdivisionMap, cutset: Cutset) -> CrossingMatrix:
    """Build and certify the excursion matrix for one base cutset.

    The watched set is the cutset's midpoints plus the start midpoint;
    the allowed region is the cut-off component with its internal
    midpoints.  Degrees are all 2, so the matrix must come out symmetric
    to solver precision, and every nontrivial split must cross with mass
    at least eps1^2 / 64.
    """
    if sd.order != 2:
        raise PreconditionError("crossing matrices live on order-2 subdivisions")
    base = sd.base
    if not is_minimal_cutset(base, cutset.edge_ids, cutset.source):
        raise PreconditionError("crossing matrix needs a minimal cutset")
    decomp = decompose(base, cutset)
    region = set(decomp.component_a)
    for eid, (u, v) in enumerate(base.edges):
        if u in decomp.component_a and v in decomp.component_a:
            region.add(sd.midpoints[eid][0])
    o_prime = origin_midpoint(sd, cutset.source)
    watched = [sd.midpoints[eid][0] for eid in cutset.edge_ids]
    if o_prime not in watched:
        watched.append(o_prime)

    k = len(watched)
    p = np.zeros((k, k))
    for i, u in enumerate(watched):
        for j, v in enumerate(watched):
            p[i, j] = _excursion_probability(sd.derived, region, u, v)
    gap = float(np.max(np.abs(p - p.T)))
    if gap > 1e-9:
        raise TheoremViolationError(f"crossing matrix asymmetry {gap:.3e}")

    from .cover_lemma import SubStochasticMatrix, min_cut

    sub = SubStochasticMatrix(p)
    eps = escape_constant(base)
    eps1 = 2.0 * eps / (4.0 + eps)
    eps2 = eps1 * eps1 / 64.0
    cut = min_cut(sub) if k > 1 else float("inf")
    if cut < eps2 - 1e-12:
        raise TheoremViolationError(f"crossing cut {cut} below the floor {eps2}")
    return CrossingMatrix(tuple(watched), frozenset(region), sub.p, eps, eps1, eps2, cut)


# ---- walk sampling ----


@dataclass(frozen=True)
class WalkTrace:
    """A walk to absorption: vertices, last start revisit, early range."""

    vertices: tuple[int, ...]
    tau: int
    range_c: frozenset[int]


@dataclass(frozen=True)
class BoundarySample:
    trace: WalkTrace
    boundary: frozenset[int]
    outcome: str
    decoded: Cutset | None


def sample_walk(
    graph: Graph, start: int, rng: np.random.Generator, max_steps: int = 10_000_000
) -> WalkTrace:
    """Simple random walk from start until it lands on the horizon."""
    if start in graph.horizon:
        raise PreconditionError("walk must start off the horizon")
    buf = UniformBuffer(rng)
    adjacency = graph.adjacency
    horizon = graph.horizon
    path = [start]
    x = start
    tau = 0
    for step in range(1, max_steps + 1):
        nbrs = adjacency[x]
        x = nbrs[buf.index(len(nbrs))][0]
        path.append(x)
        if x == start:
            tau = step
        if x in horizon:
            return WalkTrace(tuple(path), tau, frozenset(path[: tau + 1]))
    raise CapExceededError("walk exceeded the step cap without absorption")


def sample_cluster_boundary(
    sd: SubdivisionMap,
    origin: int,
    rng: np.random.Generator,
    max_steps: int = 10_000_000,
) -> BoundarySample:
    """One walk from the start midpoint, decoded to a base cutset if possible.

    The inner endpoints of the range's exposed boundary are collected;
    when all of them are midpoints whose base edges form a minimal
    cutset from the origin, the sample decodes.  Mixed or non-minimal
    boundaries are distinct outcomes, never dropped.
    """
    if sd.order != 2:
        raise PreconditionError("boundary sampling runs on order-2 subdivisions")
    if origin in sd.base.horizon:
        raise PreconditionError("origin must be off the horizon")
    start = origin_midpoint(sd, origin)
    trace = sample_walk(sd.derived, start, rng, max_steps)
    c = trace.range_c
    exposed = exposed_boundary(sd.derived, c)
    inner = set()
    for eid in exposed:
        u, v = sd.derived.edges[eid]
        inner.add(u if u in c else v)
    boundary = frozenset(inner)
    if all(sd.is_midpoint(x) for x in boundary):
        base_ids = tuple(sorted(sd.base_edge_of(x) for x in boundary))
        if is_minimal_cutset(sd.base, base_ids, origin):
            return BoundarySample(trace, boundary, DECODED, Cutset(base_ids, origin))
        return BoundarySample(trace, boundary, NOT_MINIMAL, None)
    return BoundarySample(trace, boundary, NON_MIDPOINT, None)


@dataclass(frozen=True)
class RwCensus:
    """Aggregated walk census: hit counts per decoded cutset and outcome."""

    origin: int
    trials: int
    outcome_counts: dict[str, int]
    hits: dict[Cutset, int]

    @property
    def table(self) -> QnTable:
        by_size: dict[int, list[Cutset]] = {}
        for cs in self.hits:
            by_size.setdefault(cs.size, []).append(cs)
        packed = {
            n: tuple(sorted(items, key=lambda c: c.edge_ids))
            for n, items in sorted(by_size.items())
        }
        return QnTable({self.origin: packed})

    def frequency(self, cutset: Cutset) -> float:
        return self.hits.get(cutset, 0) / self.trials


def qn_census_rw(
    sd: SubdivisionMap,
    origin: int,
    trials: int,
    seed: int,
    max_steps: int = 10_000_000,
) -> RwCensus:
    """Repeat the boundary sampler and tabulate every outcome.

    Each trial gets its own derived seed.  Step-capped walks are counted
    under their own outcome rather than raising.
    """
    if trials < 1:
        raise PreconditionError("trials must be positive")
    outcomes = {DECODED: 0, NON_MIDPOINT: 0, NOT_MINIMAL: 0, ABORTED: 0}
    hits: dict[Cutset, int] = {}
    for t in range(trials):
        rng = trial_generator(seed, t)
        try:
            sample = sample_cluster_boundary(sd, origin, rng, max_steps)
        except CapExceededError:
            outcomes[ABORTED] += 1
            continue
        outcomes[sample.outcome] += 1
        if sample.decoded is not None:
            hits[sample.decoded] = hits.get(sample.decoded, 0) + 1
    return RwCensus(origin, trials, outcomes, hits)
