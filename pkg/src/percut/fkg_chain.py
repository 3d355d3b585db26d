"""Chained vertex sequences and connection lower bounds.

Given percolation on an induced region where every vertex reaches a
target set B with probability at least theta, a short greedy chain of
vertices certifies that the origin connects to all of B simultaneously
with probability at least ((p theta / 2)^(3/theta))^|B|.  This module
builds such chains, carries the exact/Monte-Carlo connection oracle
they query, and re-verifies the lower bounds by enumeration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._util import Z99
from .errors import CapExceededError, PreconditionError, TheoremViolationError
from .cutsets import Cutset, decompose
from .percolation import PercConfig, boundary_hit_event, profile_probability
from .graph_core import Graph


class ConnectivityOracle:
    """Answers P(u <-> X) inside one induced subgraph at one p.

    Exact mode sweeps all configurations of the induced edges once and
    caches per-configuration component labels, so each query is a
    vectorized scan.  Monte Carlo mode does the same over sampled
    configurations and reports a noise half-width.
    """

    def __init__(
        self,
        graph: Graph,
        region: Iterable[int],
        p: float,
        mode: str = "exact",
        trials: int = 20_000,
        seed: int | None = None,
        max_edges: int = 20,
    ):
        if not 0.0 <= p <= 1.0:
            raise PreconditionError(f"p={p} outside [0, 1]")
        if mode not in ("exact", "monte_carlo"):
            raise PreconditionError(f"unknown oracle mode {mode!r}")
        self.graph = graph
        self.region = tuple(sorted(set(region)))
        self.p = p
        self.mode = mode
        self._index = {v: i for i, v in enumerate(self.region)}
        self.induced_edges = tuple(
            eid
            for eid, (u, v) in enumerate(graph.edges)
            if u in self._index and v in self._index
        )
        k = len(self.region)
        m = len(self.induced_edges)
        ends = [
            (self._index[graph.edges[eid][0]], self._index[graph.edges[eid][1]])
            for eid in self.induced_edges
        ]
        if mode == "exact":
            if m > max_edges:
                raise CapExceededError(f"{m} induced edges exceed the exact cap {max_edges}")
            n_cfg = 1 << m
            labels = np.empty((n_cfg, k), dtype=np.int16)
            for mask in range(n_cfg):
                labels[mask] = self._labels_for(ends, k, lambda i: mask >> i & 1)
            pop = np.bitwise_count(np.arange(n_cfg, dtype=np.uint64)).astype(np.int64)
            self._labels = labels
            self._weights = p**pop * (1.0 - p) ** (m - pop)
            self.noise = 0.0
        else:
            if seed is None:
                raise PreconditionError("monte carlo oracle needs a seed")
            if trials < 1:
                raise PreconditionError("trials must be positive")
            rng = np.random.Generator(np.random.PCG64(seed))
            bits = rng.random((trials, m)) < p
            labels = np.empty((trials, k), dtype=np.int16)
            for t in range(trials):
                row = bits[t]
                labels[t] = self._labels_for(ends, k, lambda i: row[i])
            self._labels = labels
            self._weights = np.full(trials, 1.0 / trials)
            self.noise = Z99 * 0.5 / np.sqrt(trials)

    @staticmethod
    def _labels_for(ends, k, is_open) -> list[int]:
        parent = list(range(k))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, (a, b) in enumerate(ends):
            if is_open(i):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
        return [find(x) for x in range(k)]

    def _idx(self, v: int) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise PreconditionError(f"vertex {v} outside the oracle region") from None

    def connect_prob(self, u: int, targets: Iterable[int]) -> float:
        """P(u <-> targets) within the region; membership connects trivially."""
        tset = {self._idx(t) for t in targets}
        ui = self._idx(u)
        if not tset:
            raise PreconditionError("empty target set")
        if ui in tset:
            return 1.0
        cols = self._labels[:, sorted(tset)]
        hit = (cols == self._labels[:, [ui]]).any(axis=1)
        return float(self._weights @ hit)

    def all_connected_prob(self, origin: int, targets: Iterable[int]) -> float:
        """P(origin <-> every target simultaneously)."""
        tset = {self._idx(t) for t in targets}
        oi = self._idx(origin)
        tset.discard(oi)
        if not tset:
            return 1.0
        cols = self._labels[:, sorted(tset)]
        hit = (cols == self._labels[:, [oi]]).all(axis=1)
        return float(self._weights @ hit)

    def region_connected(self) -> bool:
        """Is the induced region connected when every edge is open?"""
        ends = [
            (self._index[self.graph.edges[eid][0]], self._index[self.graph.edges[eid][1]])
            for eid in self.induced_edges
        ]
        labels = self._labels_for(ends, len(self.region), lambda i: True)
        return len(set(labels)) == 1


@dataclass(frozen=True)
class ChainedSequence:
    """Greedy chain certificate.

    ``probs[i]`` is the connection probability of ``vertices[i]`` to the
    preceding prefix (1.0 by convention at index 0).  The three recorded
    guarantees: each appended step lands in [p theta/2, theta/2]; at
    termination every region vertex connects to the chain with
    probability at least theta/2; the length respects 2|B|/theta.
    """

    vertices: tuple[int, ...]
    probs: tuple[float, ...]
    theta: float
    p_min: float
    n_targets: int
    p2_certificate: float

    @property
    def length(self) -> int:
        return len(self.vertices)


def fkg_lower_bound(theta: float, p: float, n: int) -> float:
    """((p theta / 2) ** (3 / theta)) ** n."""
    if not 0.0 < theta <= 1.0:
        raise PreconditionError(f"theta={theta} outside (0, 1]")
    if not 0.0 < p <= 1.0:
        raise PreconditionError(f"p={p} outside (0, 1]")
    if n < 0:
        raise PreconditionError("n must be non-negative")
    c = (p * theta / 2.0) ** (3.0 / theta)
    return c**n


def build_chain(
    graph: Graph,
    region: Iterable[int],
    targets: Iterable[int],
    origin: int,
    theta: float | None = None,
    p: float = 0.5,
    oracle: ConnectivityOracle | None = None,
    mode: str = "exact",
    trials: int = 20_000,
    seed: int | None = None,
) -> ChainedSequence:
    """Grow the greedy chain from the origin until no vertex is isolated.

    While some vertex connects to the chain with probability below
    theta/2, append the bad endpoint of the lexicographically smallest
    (bad, good) adjacent pair.  With theta omitted, the largest valid
    hypothesis level min_u P(u <-> B) is used.
    """
    region = tuple(sorted(set(region)))
    targets = tuple(sorted(set(targets)))
    if origin not in region:
        raise PreconditionError("origin must lie in the region")
    if not targets or not set(targets) <= set(region):
        raise PreconditionError("targets must be a non-empty subset of the region")
    if oracle is None:
        oracle = ConnectivityOracle(graph, region, p, mode=mode, trials=trials, seed=seed)
    p = oracle.p
    if not oracle.region_connected():
        raise PreconditionError("induced region is not connected")
    tol = 1e-12 + oracle.noise

    hypothesis = min(oracle.connect_prob(u, targets) for u in region)
    if theta is None:
        theta = hypothesis
        if theta <= 0:
            raise PreconditionError("hypothesis fails: some vertex never reaches the targets")
    else:
        if not 0.0 < theta <= 1.0:
            raise PreconditionError(f"theta={theta} outside (0, 1]")
        if hypothesis < theta - tol:
            raise PreconditionError(
                f"hypothesis violation: min_u P(u <-> B) = {hypothesis} below theta = {theta}"
            )

    chain = [origin]
    probs = [1.0]
    half = theta / 2.0
    adjacency = {
        v: sorted(w for w, _ in graph.adjacency[v] if w in set(region)) for v in region
    }
    while True:
        connect = {v: oracle.connect_prob(v, chain) for v in region}
        bad = [v for v in region if connect[v] < half]
        if not bad:
            p2 = min(connect.values())
            break
        pair = None
        for v in sorted(bad):
            for u in adjacency[v]:
                if connect[u] >= half:
                    pair = (v, u)
                    break
            if pair:
                break
        if pair is None:
            raise TheoremViolationError(
                "no crossing edge from the well-connected set; region connectivity broken"
            )
        v, u = pair
        step = connect[v]
        lower = p * half
        if step < lower - tol:
            message = (
                f"step probability {step} below p theta/2 = {lower} when appending {v}"
            )
            if oracle.mode == "exact":
                raise TheoremViolationError(message)
            warnings.warn(message)
        chain.append(v)
        probs.append(step)
        if len(chain) > len(region):
            raise TheoremViolationError("chain exceeded the region size without terminating")

    n = len(targets)
    k_bound = 2.0 * n / theta
    if len(chain) > k_bound + 1e-9:
        message = f"chain length {len(chain)} exceeds 2|B|/theta = {k_bound}"
        if oracle.mode == "exact":
            raise TheoremViolationError(message)
        warnings.warn(message)
    if p2 < half - tol:
        message = f"termination certificate {p2} below theta/2 = {half}"
        if oracle.mode == "exact":
            raise TheoremViolationError(message)
        warnings.warn(message)
    return ChainedSequence(tuple(chain), tuple(probs), theta, p, n, p2)


@dataclass(frozen=True)
class FullConnectivityResult:
    exact: float
    bound: float
    theta: float


def verify_full_connectivity(
    graph: Graph,
    region: Iterable[int],
    targets: Iterable[int],
    origin: int,
    p: float,
    max_edges: int = 20,
) -> FullConnectivityResult:
    """Exact P(origin <-> all targets) against the chain lower bound."""
    region = tuple(sorted(set(region)))
    targets = tuple(sorted(set(targets)))
    oracle = ConnectivityOracle(graph, region, p, mode="exact", max_edges=max_edges)
    if not oracle.region_connected():
        raise PreconditionError("induced region is not connected")
    theta = min(oracle.connect_prob(u, targets) for u in region)
    if theta <= 0.0:
        raise PreconditionError("hypothesis fails: theta = 0")
    exact = oracle.all_connected_prob(origin, targets)
    bound = fkg_lower_bound(theta, p, len(targets))
    if exact < bound - 1e-12:
        raise TheoremViolationError(f"connection bound failed: {exact} < {bound}")
    return FullConnectivityResult(exact, bound, theta)


@dataclass(frozen=True)
class Theorem1Report:
    exact: float
    bound: float
    theta: float
    n: int
    configs_checked: int
    implication_failures: int


def theorem1_lower_bound_check(
    graph: Graph,
    p: float,
    cutset: Cutset,
    theta: float | None = None,
    max_edges: int = 20,
) -> Theorem1Report:
    """Boundary-hit probability against the closed-ring lower bound.

    Decomposes the cutset, prices P(exposed boundary = cutset) exactly,
    and checks it is at least (c (1-p))^n with c from the chain bound at
    the computed (or supplied, if weaker) hypothesis level.  Also sweeps
    every configuration and confirms the defining implication: targets
    all reached inside the component and the cutset fully closed force
    the exposed boundary to be exactly the cutset.
    """
    if not 0.0 < p < 1.0:
        raise PreconditionError("theorem check needs p strictly inside (0, 1)")
    if graph.n_edges > max_edges:
        raise CapExceededError(f"{graph.n_edges} edges exceed the exact cap {max_edges}")
    decomp = decompose(graph, cutset)
    region = tuple(sorted(decomp.component_a))
    targets = tuple(sorted(decomp.inner_b))
    origin = cutset.source
    oracle = ConnectivityOracle(graph, region, p, mode="exact", max_edges=max_edges)
    computed = min(oracle.connect_prob(u, targets) for u in region)
    if theta is None:
        theta = computed
    elif theta > computed + 1e-12:
        raise PreconditionError(
            f"supplied theta {theta} exceeds the valid hypothesis level {computed}"
        )
    if theta <= 0.0:
        raise PreconditionError("hypothesis fails: theta = 0")

    n = cutset.size
    bound = fkg_lower_bound(theta, p, n) * (1.0 - p) ** n

    region_set = set(region)
    induced = set(oracle.induced_edges)
    cut_ids = set(cutset.edge_ids)
    hit = boundary_hit_event(graph, cutset)
    m = graph.n_edges
    profile = np.zeros(m + 1, dtype=np.int64)
    failures = 0
    checked = 0
    adjacency = graph.adjacency
    for mask in range(1 << m):
        config = PercConfig(tuple(bool(mask >> i & 1) for i in range(m)))
        if hit(config):
            profile[mask.bit_count()] += 1
        if any(mask >> e & 1 for e in cut_ids):
            continue
        seen = {origin}
        stack = [origin]
        while stack:
            x = stack.pop()
            for w, eid in adjacency[x]:
                if eid in induced and mask >> eid & 1 and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if not set(targets) <= seen:
            continue
        checked += 1
        if not hit(config):
            failures += 1
    exact = profile_probability(profile, p)
    if failures:
        raise TheoremViolationError(
            f"{failures} configurations broke the closed-ring implication"
        )
    if exact < bound - 1e-15:
        raise TheoremViolationError(f"boundary-hit bound failed: {exact} < {bound}")
    return Theorem1Report(exact, bound, theta, n, checked, failures)


def clusters_meeting_both(
    graph: Graph,
    region: Iterable[int],
    open_edges: Iterable[int],
    first: Iterable[int],
    second: Iterable[int],
) -> int:
    """Number of open clusters of the induced region meeting both sets."""
    region = sorted(set(region))
    index = {v: i for i, v in enumerate(region)}
    parent = list(range(len(region)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    open_set = set(open_edges)
    for eid in open_set:
        u, v = graph.edges[eid]
        if u in index and v in index:
            ru, rv = find(index[u]), find(index[v])
            if ru != rv:
                parent[ru] = rv
    roots_first = {find(index[v]) for v in first if v in index}
    roots_second = {find(index[v]) for v in second if v in index}
    return len(roots_first & roots_second)
