"""Gaussian free fields with an absorbing horizon.

The field's covariance is the degree-normalized visit-count matrix of
the killed walk, so variances are reciprocal degree-weighted escape
probabilities.  On order-3 subdivisions, clamping the two midpoints of
every cutset edge to opposite signs and connecting the origin to the
inner midpoints inside the excursion set forces the cluster boundary to
be exactly the subdivided cutset; the pipeline here samples those
events and checks the implication on every hit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import checked_solve, derive_seed, trial_generator, wilson_interval
from .errors import NumericalError, PreconditionError, TheoremViolationError
from .cutsets import Cutset, decompose, exposed_boundary, is_minimal_cutset
from .graph_core import Graph, SubdivisionMap, subdivide
from .percolation import EventProbability
from .rw_cutsets import escape_probabilities, fundamental_matrix

_BLOCK = 4096


class GreenMatrix:
    """Covariance of the field: expected visits over target degree.

    Symmetric within 1e-9 (then symmetrized), positive definite, and on
    the diagonal the reciprocal of degree times no-return probability.
    The Cholesky factor is computed once; a single 1e-12 diagonal jitter
    is attempted before giving up.
    """

    def __init__(self, graph: Graph, interior: tuple[int, ...], g: np.ndarray):
        g = np.asarray(g, dtype=float)
        if g.shape != (len(interior), len(interior)):
            raise PreconditionError("matrix shape does not match the interior")
        gap = float(np.max(np.abs(g - g.T))) if g.size else 0.0
        if gap > 1e-9:
            raise TheoremViolationError(f"green matrix asymmetry {gap:.3e}")
        self.graph = graph
        self.interior = interior
        self.g = (g + g.T) / 2.0
        self._index = {v: i for i, v in enumerate(interior)}
        self.jitter_used = False
        try:
            self.factor = np.linalg.cholesky(self.g)
        except np.linalg.LinAlgError:
            try:
                bumped = self.g + 1e-12 * np.eye(len(interior))
                self.factor = np.linalg.cholesky(bumped)
                self.jitter_used = True
            except np.linalg.LinAlgError as exc:
                raise NumericalError("covariance is not positive definite") from exc

    def index(self, v: int) -> int:
        if v not in self._index:
            raise PreconditionError(f"vertex {v} is not interior")
        return self._index[v]

    def entry(self, x: int, y: int) -> float:
        return float(self.g[self.index(x), self.index(y)])

    def variance(self, x: int) -> float:
        return self.entry(x, x)

    def sample_block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, len(self.interior)))
        return z @ self.factor.T


def green(graph: Graph) -> GreenMatrix:
    """Covariance matrix of the field absorbed at the horizon.

    One interior solve gives the visit counts; the diagonal is then
    cross-checked against per-vertex escape probabilities computed by
    the independent absorbing route (skipped above 64 interior vertices,
    where the check would dwarf the assembly).
    """
    interior, n = fundamental_matrix(graph)
    degrees = np.array([graph.degree(v) for v in interior], dtype=float)
    gm = GreenMatrix(graph, interior, n / degrees[None, :])
    method = "absorbing" if len(interior) <= 64 else "fundamental"
    escape = escape_probabilities(graph, method)
    for i, v in enumerate(interior):
        product = gm.g[i, i] * graph.degree(v) * escape[v]
        if abs(product - 1.0) > 1e-9:
            raise TheoremViolationError(
                f"diagonal identity off at vertex {v}: {product}"
            )
    return gm


@dataclass(frozen=True)
class GaussianField:
    """One sampled field; values align with the generator's interior."""

    values: tuple[float, ...]
    generator: GreenMatrix
    seed: int | None

    def value(self, v: int) -> float:
        return self.values[self.generator.index(v)]

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.generator.interior, self.values))


def sample_field(gm: GreenMatrix, rng: np.random.Generator | int) -> GaussianField:
    """Draw one field; an integer is treated as a recorded seed."""
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.Generator(np.random.PCG64(seed))
    row = gm.sample_block(rng, 1)[0]
    return GaussianField(tuple(float(x) for x in row), gm, seed)


def excursion_cluster(field: GaussianField, origin: int, level: float = 0.0) -> frozenset[int]:
    """Component of the origin among interior vertices at or above level."""
    gm = field.generator
    gm.index(origin)
    if not field.value(origin) >= level:
        return frozenset()
    graph = gm.graph
    seen = {origin}
    stack = [origin]
    while stack:
        x = stack.pop()
        for w, _ in graph.adjacency[x]:
            if w in seen or w in graph.horizon:
                continue
            if field.values[gm.index(w)] >= level:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


def markov_check(gm: GreenMatrix, conditioned: set[int] | frozenset[int]) -> float:
    """Conditional covariance given a vertex set, against the slit domain.

    Conditioning the field on a vertex set must leave the covariance of
    the killed walk that treats those vertices as additional horizon.
    Returns the max entrywise residual; above 1e-9 raises.
    """
    conditioned = set(conditioned)
    extra = conditioned - set(gm.interior)
    if extra:
        raise PreconditionError(f"conditioning on non-interior vertices {sorted(extra)}")
    keep = [v for v in gm.interior if v not in conditioned]
    if not keep:
        return 0.0
    ki = [gm.index(v) for v in keep]
    ci = [gm.index(v) for v in sorted(conditioned)]
    g_kk = gm.g[np.ix_(ki, ki)]
    if ci:
        g_kc = gm.g[np.ix_(ki, ci)]
        g_cc = gm.g[np.ix_(ci, ci)]
        schur = g_kk - g_kc @ checked_solve(g_cc, g_kc.T, "conditioning block")
    else:
        schur = g_kk
    slit = Graph(
        gm.graph.n_vertices, gm.graph.edges, gm.graph.horizon | frozenset(conditioned)
    )
    other = green(slit)
    if other.interior != tuple(keep):
        raise TheoremViolationError("interior mismatch in the conditioned graph")
    residual = float(np.max(np.abs(schur - other.g)))
    if residual > 1e-9:
        raise TheoremViolationError(f"markov residual {residual:.3e}")
    return residual


# ---- order-3 cutset frame ----


@dataclass(frozen=True)
class CutsetFrame:
    """The order-3 subdivision data attached to one base cutset.

    ``x_vertices`` are the midpoints on the component side of each
    cutset edge, ``y_vertices`` their mates across the mid-edge,
    ``inner_vertices`` the original endpoints next to each x, and
    ``component`` the origin's side of the derived graph once the
    mid-edges are removed.
    """

    sd: SubdivisionMap
    cutset: Cutset
    mid_edge_ids: tuple[int, ...]
    x_vertices: tuple[int, ...]
    y_vertices: tuple[int, ...]
    inner_vertices: tuple[int, ...]
    component: frozenset[int]


def cutset_frame(base: Graph, cutset: Cutset) -> CutsetFrame:
    sd = subdivide(base, 3)
    decomp = decompose(base, cutset)
    a_base = set(decomp.component_a)
    xs, ys, inners, mids = [], [], [], []
    for eid in cutset.edge_ids:
        u, v = base.edges[eid]
        inner = u if u in a_base else v
        m_u, m_v = sd.midpoints[eid]
        xs.append(m_u if inner == u else m_v)
        ys.append(m_v if inner == u else m_u)
        inners.append(inner)
        mids.append(sd.mid_edge_id(eid))
    region = set(a_base)
    for eid, (u, v) in enumerate(base.edges):
        if u in a_base and v in a_base:
            region.update(sd.midpoints[eid])
    region.update(xs)
    if not is_minimal_cutset(sd.derived, tuple(mids), cutset.source):
        raise TheoremViolationError("mid-edges fail to form a minimal cutset")
    seen = {cutset.source}
    stack = [cutset.source]
    blocked = set(mids)
    while stack:
        x = stack.pop()
        for w, eid in sd.derived.adjacency[x]:
            if eid not in blocked and w not in seen:
                seen.add(w)
                stack.append(w)
    if seen != region:
        raise TheoremViolationError("component reconstruction mismatch")
    return CutsetFrame(
        sd, cutset, tuple(mids), tuple(xs), tuple(ys), tuple(inners), frozenset(region)
    )


# ---- the sampling pipeline ----


@dataclass(frozen=True)
class Section8Report:
    cutset: Cutset
    mid_edge_ids: tuple[int, ...]
    trials: int
    f_count: int
    e_count: int
    fe_count: int
    boundary_count: int

    def _prob(self, count: int) -> EventProbability:
        lo, hi = wilson_interval(count, self.trials)
        return EventProbability(count / self.trials, "monte_carlo", self.trials, lo, hi)

    @property
    def f_prob(self) -> EventProbability:
        return self._prob(self.f_count)

    @property
    def e_prob(self) -> EventProbability:
        return self._prob(self.e_count)

    @property
    def fe_prob(self) -> EventProbability:
        return self._prob(self.fe_count)

    @property
    def boundary_prob(self) -> EventProbability:
        return self._prob(self.boundary_count)


def _interior_adjacency(
    gm: GreenMatrix, allowed: frozenset[int] | None = None
) -> list[list[int]]:
    """Neighbor lists in interior-index space, optionally restricted."""
    out: list[list[int]] = [[] for _ in gm.interior]
    for i, v in enumerate(gm.interior):
        if allowed is not None and v not in allowed:
            continue
        for w, _ in gm.graph.adjacency[v]:
            if w in gm.graph.horizon:
                continue
            if allowed is not None and w not in allowed:
                continue
            out[i].append(gm.index(w))
    return out


def _component(adj: list[list[int]], ok: np.ndarray, start: int) -> set[int]:
    if not ok[start]:
        return set()
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for w in adj[x]:
            if w not in seen and ok[w]:
                seen.add(w)
                stack.append(w)
    return seen


def _field_blocks(gm: GreenMatrix, seed: int, trials: int):
    done = 0
    block = 0
    while done < trials:
        size = min(_BLOCK, trials - done)
        yield gm.sample_block(trial_generator(seed, block), size)
        done += size
        block += 1


def section8_pipeline(
    base: Graph, cutset: Cutset, trials: int, seed: int
) -> Section8Report:
    """Sample fields on the order-3 subdivision and tally the events.

    Per sample: F clamps every outer midpoint into [-2,-1] and every
    inner midpoint into [1,2]; E connects the origin to each inner
    midpoint inside the non-negative excursion restricted to the
    component side; the boundary event asks for the exposed boundary of
    the full non-negative cluster to be exactly the mid-edges.  Every
    F-and-E sample must satisfy the boundary event or the run aborts.
    Fields are drawn in blocks of 4096, one derived seed per block, so
    block-parallel runs agree with serial ones.
    """
    if trials < 1:
        raise PreconditionError("trials must be positive")
    frame = cutset_frame(base, cutset)
    gm = green(frame.sd.derived)
    o_idx = gm.index(cutset.source)
    x_idx = np.array([gm.index(v) for v in frame.x_vertices])
    y_idx = np.array([gm.index(v) for v in frame.y_vertices])
    x_set = set(int(i) for i in x_idx)
    adj_full = _interior_adjacency(gm)
    adj_a = _interior_adjacency(gm, frame.component)
    pair_idx = [(gm.index(x), gm.index(y)) for x, y in zip(frame.x_vertices, frame.y_vertices)]
    mids = frame.mid_edge_ids
    derived = frame.sd.derived
    interior = gm.interior

    f_count = e_count = fe_count = boundary_count = 0
    for block in _field_blocks(gm, seed, trials):
        fx = block[:, x_idx]
        fy = block[:, y_idx]
        f_mask = (
            (fx >= 1.0).all(axis=1)
            & (fx <= 2.0).all(axis=1)
            & (fy >= -2.0).all(axis=1)
            & (fy <= -1.0).all(axis=1)
        )
        f_count += int(f_mask.sum())
        for t in range(block.shape[0]):
            ok = block[t] >= 0.0
            comp_a = _component(adj_a, ok, o_idx)
            e_hit = x_set <= comp_a
            if e_hit:
                e_count += 1
            hit = False
            cluster = _component(adj_full, ok, o_idx)
            if cluster and all(xi in cluster or yi in cluster for xi, yi in pair_idx):
                vertices = {interior[i] for i in cluster}
                hit = exposed_boundary(derived, vertices) == mids
            if hit:
                boundary_count += 1
            if f_mask[t] and e_hit:
                fe_count += 1
                if not hit:
                    raise TheoremViolationError(
                        "clamped and connected sample missed the target boundary"
                    )
    return Section8Report(
        cutset, mids, trials, f_count, e_count, fe_count, boundary_count
    )


# ---- the two endpoints around stochastic domination ----


@dataclass(frozen=True)
class SignBoundReport:
    """Connection frequency versus mean sign at the -1 level.

    ``margin_mean`` is the per-sample mean of indicator minus sign; the
    inequality predicts it is non-negative up to sampling error.
    """

    trials: int
    connect_count: int
    sign_mean: float
    margin_mean: float
    margin_se: float

    @property
    def connect_prob(self) -> EventProbability:
        lo, hi = wilson_interval(self.connect_count, self.trials)
        return EventProbability(
            self.connect_count / self.trials, "monte_carlo", self.trials, lo, hi
        )


def sign_bound_check(graph: Graph, origin: int, trials: int, seed: int) -> SignBoundReport:
    """Compare P(origin reaches the horizon side at level -1) to E[sgn].

    The horizon plays the killed boundary, whose field value is zero and
    so always clears the -1 level; the connection event therefore asks
    the origin's level-set cluster to touch a horizon-adjacent vertex.
    Both quantities come from the same samples.
    """
    if trials < 1:
        raise PreconditionError("trials must be positive")
    gm = green(graph)
    o_idx = gm.index(origin)
    adj = _interior_adjacency(gm)
    fringe = {
        gm.index(v)
        for v in gm.interior
        if any(w in graph.horizon for w, _ in graph.adjacency[v])
    }
    connect = 0
    sign_total = 0.0
    margins: list[np.ndarray] = []
    for block in _field_blocks(gm, seed, trials):
        signs = np.sign(block[:, o_idx] + 1.0)
        sign_total += float(signs.sum())
        hits = np.zeros(block.shape[0])
        for t in range(block.shape[0]):
            ok = block[t] >= -1.0
            cluster = _component(adj, ok, o_idx)
            if cluster & fringe:
                hits[t] = 1.0
        connect += int(hits.sum())
        margins.append(hits - signs)
    margin = np.concatenate(margins)
    se = float(margin.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("inf")
    return SignBoundReport(
        trials, connect, sign_total / trials, float(margin.mean()), se
    )


@dataclass(frozen=True)
class DominationReport:
    """The two measurable ends of the conditioned-field comparison.

    ``conditional`` is the connection frequency among clamped samples on
    the full subdivision; ``killed`` is the same connection frequency
    under the field killed at the inner midpoints, shifted to level -1.
    Domination predicts conditional >= killed; with no clamped samples
    the comparison is vacuous.
    """

    f_count: int
    fe_count: int
    conditional: EventProbability | None
    killed: EventProbability
    vacuous: bool

    @property
    def ordering_consistent(self) -> bool:
        if self.vacuous:
            return True
        return self.conditional.ci_high >= self.killed.ci_low


def domination_endpoint_check(
    base: Graph,
    cutset: Cutset,
    trials: int,
    seed: int,
    killed_trials: int | None = None,
) -> DominationReport:
    """Estimate both sides of the domination step and compare their CIs."""
    report = section8_pipeline(base, cutset, trials, seed)
    frame = cutset_frame(base, cutset)
    derived = frame.sd.derived
    x_set = frozenset(frame.x_vertices)
    killed_horizon = (
        frozenset(range(derived.n_vertices)) - frame.component
    ) | x_set
    killed_graph = Graph(derived.n_vertices, derived.edges, killed_horizon)
    gm = green(killed_graph)
    o_idx = gm.index(cutset.source)
    adj = _interior_adjacency(gm)
    targets = {gm.index(v) for v in frame.inner_vertices}
    k_trials = killed_trials if killed_trials is not None else trials
    k_seed = derive_seed(seed, 1 << 32)
    hits = 0
    for block in _field_blocks(gm, k_seed, k_trials):
        for t in range(block.shape[0]):
            ok = block[t] >= -1.0
            cluster = _component(adj, ok, o_idx)
            if targets <= cluster:
                hits += 1
    lo, hi = wilson_interval(hits, k_trials)
    killed = EventProbability(hits / k_trials, "monte_carlo", k_trials, lo, hi)
    if report.f_count == 0:
        return DominationReport(0, 0, None, killed, True)
    lo, hi = wilson_interval(report.fe_count, report.f_count)
    conditional = EventProbability(
        report.fe_count / report.f_count, "monte_carlo", report.f_count, lo, hi
    )
    return DominationReport(
        report.f_count, report.fe_count, conditional, killed, False
    )
