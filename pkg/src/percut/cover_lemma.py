"""Cover-and-return sums for symmetric sub-stochastic matrices.

The central quantity: starting from state 0, the total weight of killed
chains that visit every state and end at their first return to 0 after
coverage is complete.  Whenever every nontrivial state split has
crossing mass at least epsilon, this sum is at least
(epsilon^2 / (16 e^2))^n.  Three routes compute or bound it: an exact
dynamic program over (state, visited) with linear solves, a vectorized
simulation, and an explicit small-case enumeration.  The two-tree
sampling construction behind the bound's proof is also implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._util import checked_solve, wilson_interval
from .errors import CapExceededError, PreconditionError
from .graph_core import Multigraph, euler_circuit_edges, eulerian_from_two_trees


class SubStochasticMatrix:
    """Symmetric non-negative matrix with row sums at most one.

    Input asymmetry up to ``tol`` is averaged away; anything larger is
    refused.  Entries are clipped to zero from tiny negatives.
    """

    def __init__(self, matrix, tol: float = 1e-9):
        p = np.asarray(matrix, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise PreconditionError("matrix must be square and non-empty")
        gap = float(np.max(np.abs(p - p.T))) if p.size else 0.0
        if gap > tol:
            raise PreconditionError(f"asymmetry {gap:.3e} above tolerance {tol:.1e}")
        p = (p + p.T) / 2.0
        if float(p.min(initial=0.0)) < -1e-12:
            raise PreconditionError("negative entry")
        p = np.clip(p, 0.0, None)
        sums = p.sum(axis=1)
        if float(sums.max(initial=0.0)) > 1.0 + 1e-12:
            raise PreconditionError(f"row sum {sums.max():.12g} exceeds 1")
        self.p = p
        self.n = p.shape[0]

    def kill_probability(self, state: int) -> float:
        return max(0.0, 1.0 - float(self.p[state].sum()))


def load_matrix_file(text: str) -> SubStochasticMatrix:
    """Parse a matrix file: first line the order, then that many rows."""
    lines = [ln for ln in (raw.split("#", 1)[0].strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise PreconditionError("empty matrix file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise PreconditionError(f"bad matrix order {lines[0]!r}") from exc
    if len(lines) != n + 1:
        raise PreconditionError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        try:
            row = [float(x) for x in ln.split()]
        except ValueError as exc:
            raise PreconditionError(f"bad matrix row {ln!r}") from exc
        if len(row) != n:
            raise PreconditionError(f"row of length {len(row)}, expected {n}")
        rows.append(row)
    return SubStochasticMatrix(np.array(rows))


def min_cut(sub: SubStochasticMatrix, max_n: int = 16) -> float:
    """Smallest one-directional crossing mass over nontrivial state splits.

    For each non-empty proper subset I, sum p(i, j) over i in I, j
    outside.  A single state has no nontrivial split; the minimum over
    the empty collection is infinity.
    """
    n = sub.n
    if n > max_n:
        raise CapExceededError(f"{n} states exceed the exhaustive cut cap {max_n}")
    if n == 1:
        return float("inf")
    best = float("inf")
    p = sub.p
    for mask in range(1, (1 << n) - 1):
        inside = [i for i in range(n) if mask >> i & 1]
        outside = [j for j in range(n) if not mask >> j & 1]
        best = min(best, float(p[np.ix_(inside, outside)].sum()))
    return best


def delta_bound(epsilon: float, n: int) -> float:
    """(epsilon^2 / (16 e^2)) ** n."""
    if not 0.0 < epsilon <= 1.0:
        raise PreconditionError(f"epsilon={epsilon} outside (0, 1]")
    if n < 1:
        raise PreconditionError("n must be at least 1")
    return (epsilon**2 / (16.0 * math.e**2)) ** n


# ---- exact dynamic program ----


def _positive_adjacency(p: np.ndarray) -> list[list[int]]:
    n = p.shape[0]
    return [[j for j in range(n) if p[i, j] > 0.0] for i in range(n)]


def _reaches(adj: list[list[int]], inside: list[int], seeds: list[int]) -> set[int]:
    """States of ``inside`` with a positive-probability path to a seed."""
    inside_set = set(inside)
    seen = set(seeds) & inside_set
    stack = list(seen)
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w in inside_set and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def covering_sum_exact(sub: SubStochasticMatrix, max_n: int = 12) -> float:
    """Exact cover-and-return weight by a (state, visited-set) recursion.

    With the visited set complete the remaining weight is the hitting
    probability of state 0, a single linear solve; incomplete sets feed
    on the completed ones.  States that cannot leak out of the current
    set contribute zero, which also keeps every solve non-singular.
    """
    n = sub.n
    if n > max_n:
        raise CapExceededError(f"{n} states exceed the exact covering cap {max_n}")
    p = sub.p
    full = (1 << n) - 1
    adj = _positive_adjacency(p)

    # Hitting state 0 before death, from every state, ignoring coverage.
    others = [v for v in range(n) if v != 0]
    gate = [v for v in others if p[v, 0] > 0.0]
    reach = _reaches(adj, others, gate) if others else set()
    x = np.zeros(n)
    order = sorted(reach)
    if order:
        sul = np.eye(len(order)) - p[np.ix_(order, order)]
        sol = checked_solve(sul, p[order, 0], "covering hit system")
        for i, v in enumerate(order):
            x[v] = sol[i]
    g_full = p[:, 0] + p[:, others] @ x[others] if others else p[:, 0].copy()

    h: dict[tuple[int, int], float] = {(u, full): float(g_full[u]) for u in range(n)}
    masks = sorted(
        (m for m in range(1, full) if m & 1), key=lambda m: -m.bit_count()
    )
    for mask in masks:
        states = [u for u in range(n) if mask >> u & 1]
        outside = [v for v in range(n) if not mask >> v & 1]
        b = np.zeros(len(states))
        for i, u in enumerate(states):
            b[i] = sum(p[u, v] * h[(v, mask | (1 << v))] for v in outside if p[u, v] > 0.0)
        leaking = [
            u
            for u in states
            if p[u].sum() < 1.0 - 1e-12 or any(p[u, v] > 0.0 for v in outside)
        ]
        live = _reaches(adj, states, leaking)
        order = sorted(live)
        vals = np.zeros(len(states))
        if order:
            idx = {u: i for i, u in enumerate(states)}
            sul = np.eye(len(order)) - p[np.ix_(order, order)]
            sol = checked_solve(sul, np.array([b[idx[u]] for u in order]), "covering set system")
            for i, u in enumerate(order):
                vals[idx[u]] = sol[i]
        for i, u in enumerate(states):
            h[(u, mask)] = float(vals[i])
    return h[(0, 1)] if n > 1 else float(g_full[0])


# ---- simulation ----


@dataclass(frozen=True)
class CoveringEstimate:
    value: float
    trials: int
    ci_low: float
    ci_high: float
    aborted: int


def covering_sum_mc(
    sub: SubStochasticMatrix,
    trials: int,
    seed: int,
    max_steps: int = 10_000_000,
) -> CoveringEstimate:
    """Simulate killed chains from state 0 and count cover-and-return hits.

    Trials still alive at the per-trial step cap are counted as misses
    and reported in ``aborted``.
    """
    if trials < 1:
        raise PreconditionError("trials must be positive")
    n = sub.n
    if n > 62:
        raise CapExceededError("visited bitmask supports at most 62 states")
    rng = np.random.Generator(np.random.PCG64(seed))
    cum = np.cumsum(sub.p, axis=1)
    full = (1 << n) - 1
    state = np.zeros(trials, dtype=np.int64)
    visited = np.ones(trials, dtype=np.int64)
    alive = np.ones(trials, dtype=bool)
    success = np.zeros(trials, dtype=bool)
    steps = 0
    while steps < max_steps:
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        steps += 1
        u = rng.random(idx.size)
        rows = cum[state[idx]]
        nxt = (u[:, None] >= rows).sum(axis=1)
        died = nxt >= n
        alive[idx[died]] = False
        surv = idx[~died]
        arrived = nxt[~died]
        vis = visited[surv]
        wins = (arrived == 0) & (vis == full)
        success[surv[wins]] = True
        alive[surv[wins]] = False
        rest = surv[~wins]
        state[rest] = arrived[~wins]
        visited[rest] = vis[~wins] | np.left_shift(np.int64(1), arrived[~wins])
    aborted = int(alive.sum())
    hits = int(success.sum())
    lo, hi = wilson_interval(hits, trials)
    return CoveringEstimate(hits / trials, trials, lo, hi, aborted)


# ---- explicit small-case enumeration ----


@dataclass(frozen=True)
class GammaPath:
    """A cover-and-return state sequence starting at 0, with its weight."""

    states: tuple[int, ...]
    weight: float


def is_gamma_sequence(n: int, states) -> bool:
    """Definitional membership test for cover-and-return sequences.

    Among indices i >= 1 where the state is 0 and the prefix through i
    covers all n states, there must be exactly one, and it must be the
    final index.  Pre-coverage visits to 0 are allowed.
    """
    seq = tuple(states)
    if len(seq) < 2 or seq[0] != 0:
        return False
    if any(not 0 <= s < n for s in seq):
        return False
    covered = {0}
    qualifying = []
    for i, s in enumerate(seq):
        covered.add(s)
        if i >= 1 and s == 0 and len(covered) == n:
            qualifying.append(i)
    return qualifying == [len(seq) - 1]


def gamma_sequences(
    sub: SubStochasticMatrix, k_max: int, max_n: int = 4
) -> Iterator[GammaPath]:
    """Positive-weight cover-and-return sequences of at most k_max steps.

    Depth-first over transitions with positive weight; a branch stops at
    its first qualifying return, since any extension would make that
    return non-unique.
    """
    n = sub.n
    if n > max_n:
        raise CapExceededError(f"{n} states exceed the enumeration cap {max_n}")
    if k_max < 1 or k_max > 20:
        raise PreconditionError("k_max must be in [1, 20]")
    p = sub.p
    full = (1 << n) - 1

    def rec(seq: list[int], mask: int, weight: float) -> Iterator[GammaPath]:
        u = seq[-1]
        if len(seq) > k_max:
            return
        for v in range(n):
            w = weight * p[u, v]
            if w <= 0.0:
                continue
            new_mask = mask | (1 << v)
            if v == 0 and mask == full:
                yield GammaPath(tuple(seq + [v]), w)
                continue
            yield from rec(seq + [v], new_mask, w)

    yield from rec([0], 1, 1.0)


def covering_sum_bruteforce(sub: SubStochasticMatrix, k_max: int, max_n: int = 4) -> float:
    """Partial covering sum over sequences of at most k_max steps."""
    return sum(g.weight for g in gamma_sequences(sub, k_max, max_n))


def bruteforce_tail_bound(sub: SubStochasticMatrix, k_max: int) -> float:
    """Weight unaccounted for by length-limited enumeration.

    All mass still alive after k_max steps is at most (largest row
    sum)^k_max.
    """
    return float(sub.p.sum(axis=1).max()) ** k_max


# ---- the two-tree sampling construction ----


@dataclass(frozen=True)
class HGraphSample:
    """One sample of the paired random edge multisets.

    ``slots`` holds 2n-2 independent draws: an ordered pair (u, v) with
    probability p(u, v)/n each, or None for the leftover mass.  When the
    first n-1 and last n-1 slots both connect all states, the two-tree
    Eulerian construction produces a cover-and-return sequence whose
    steps use distinct slots.
    """

    slots: tuple[tuple[int, int] | None, ...]
    h1_connected: bool
    h2_connected: bool
    gamma: GammaPath | None
    gamma_slots: tuple[int, ...] | None


def _slots_connect(n: int, slots) -> bool:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merges = 0
    for pair in slots:
        if pair is None or pair[0] == pair[1]:
            continue
        ra, rb = find(pair[0]), find(pair[1])
        if ra != rb:
            parent[ra] = rb
            merges += 1
    return merges == n - 1


def sample_h_graphs(sub: SubStochasticMatrix, rng: np.random.Generator) -> HGraphSample:
    """Draw the 2n-2 edge slots and, when both halves connect, the sequence."""
    n = sub.n
    if n == 1:
        return HGraphSample((), True, True, None, None)
    flat = (sub.p / n).reshape(-1)
    cum = np.cumsum(flat)
    slots: list[tuple[int, int] | None] = []
    for u in rng.random(2 * n - 2):
        k = int(np.searchsorted(cum, u, side="right"))
        slots.append((k // n, k % n) if k < n * n else None)
    h1 = _slots_connect(n, slots[: n - 1])
    h2 = _slots_connect(n, slots[n - 1 :])
    gamma = None
    gamma_slots = None
    if h1 and h2:
        mg = Multigraph(n, tuple(slots))  # type: ignore[arg-type]
        t1 = tuple(range(n - 1))
        t2 = tuple(range(n - 1, 2 * n - 2))
        even = eulerian_from_two_trees(mg, t1, t2)
        verts, eids = euler_circuit_edges(mg, even, 0)
        covered = {0}
        cut = None
        for i in range(1, len(verts)):
            covered.add(verts[i])
            if verts[i] == 0 and len(covered) == n:
                cut = i
                break
        assert cut is not None, "full circuit must qualify"
        seq = tuple(verts[: cut + 1])
        weight = 1.0
        for i in range(1, len(seq)):
            weight *= float(sub.p[seq[i - 1], seq[i]])
        gamma = GammaPath(seq, weight)
        gamma_slots = tuple(eids[:cut])
    return HGraphSample(tuple(slots), h1, h2, gamma, gamma_slots)
