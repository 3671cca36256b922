"""Common-neighbourhood statistics, bad sets, K_{s,t} search, bounds and oracles."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CapExceeded, PreconditionFailed, StaleReport, check_work
from .graphgen import SIDES, BipartiteGraph, _check_side

MAX_MOMENT_DEGREE = 30


def default_degree(s: int) -> int:
    return s * s - s + 2


# --- subset scans ---------------------------------------------------------

def _scan_blocks(G: BipartiteGraph, s: int, side: str, work_cap=None):
    """Yield (subsets, sizes) blocks covering every s-subset of ``side`` in lex order.

    ``subsets`` is an (m, s) int array of sorted index tuples and ``sizes`` the
    matching common-neighbourhood sizes.
    """
    _check_side(side)
    n = G.side_size(side)
    if s < 1:
        raise PreconditionFailed("subset size must be >= 1")
    if s > n:
        return
    check_work(math.comb(n, s), work_cap, f"scan of all {s}-subsets of {n} vertices")
    rows = G.side_matrix(side)
    if s == 1:
        yield np.arange(n)[:, None], rows.sum(axis=1).astype(np.int64)
        return
    if s == 2:
        a = rows.astype(np.int32)
        co = a @ a.T
        for i in range(n - 1):
            js = np.arange(i + 1, n)
            yield np.column_stack([np.full(len(js), i), js]), co[i, i + 1:].astype(np.int64)
        return
    bits = G.bits(side)
    buf_sets, buf_sizes = [], []
    # depth-first over sorted tuples, reusing the prefix intersection
    stack = [((i,), bits[i]) for i in range(n - 1, -1, -1)]
    while stack:
        prefix, acc = stack.pop()
        if len(prefix) == s:
            buf_sets.append(prefix)
            buf_sizes.append(acc.bit_count())
            if len(buf_sets) >= 4096:
                yield np.array(buf_sets), np.array(buf_sizes, dtype=np.int64)
                buf_sets, buf_sizes = [], []
            continue
        last = prefix[-1]
        for j in range(n - 1, last, -1):
            if n - j >= s - len(prefix):
                stack.append((prefix + (j,), acc & bits[j]))
    if buf_sets:
        yield np.array(buf_sets), np.array(buf_sizes, dtype=np.int64)


def _sample_subsets(n: int, s: int, count: int, rng) -> list[tuple]:
    """Uniform s-subsets by rejection: draw s indices, keep only if distinct, sort."""
    if s > n:
        raise PreconditionFailed(f"cannot draw {s}-subsets from {n} vertices")
    out = []
    while len(out) < count:
        draw = [int(v) for v in rng.integers(0, n, size=s)]
        if len(set(draw)) == s:
            out.append(tuple(sorted(draw)))
    return out


def subset_neighborhood_size(G: BipartiteGraph, U, side: str) -> int:
    bits = G.bits(side)
    acc = bits[U[0]]
    for u in U[1:]:
        acc &= bits[u]
    return acc.bit_count()


# --- distribution of |N(U)| -----------------------------------------------

@dataclass
class NeighborhoodReport:
    side: str
    s: int
    mode: str
    histogram: dict
    d: int
    samples: int | None = None

    @property
    def total(self) -> int:
        return sum(self.histogram.values())

    @property
    def max_value(self) -> int:
        return max(self.histogram, default=0)

    @property
    def empirical_moment_d(self) -> float:
        if not self.total:
            return 0.0
        return float(Fraction(sum(v**self.d * c for v, c in self.histogram.items()), self.total))

    @property
    def moment_bound_M(self) -> int:
        return moment_bound(self.d)

    def histogram_csv(self) -> str:
        rows = ["value,count"] + [f"{v},{c}" for v, c in sorted(self.histogram.items())]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        return {"side": self.side, "s": self.s, "mode": self.mode, "samples": self.samples,
                "d": self.d, "histogram": {str(v): c for v, c in sorted(self.histogram.items())},
                "max_value": self.max_value, "empirical_moment_d": self.empirical_moment_d,
                "moment_bound_M": self.moment_bound_M}


def neighborhood_distribution(G: BipartiteGraph, s: int, side: str = "left",
                              mode: str = "exhaustive", rng=None, samples: int = 1000,
                              d: int | None = None, work_cap=None) -> NeighborhoodReport:
    d = default_degree(s) if d is None else d
    hist: Counter = Counter()
    if mode == "exhaustive":
        for _, sizes in _scan_blocks(G, s, side, work_cap):
            vals, counts = np.unique(sizes, return_counts=True)
            hist.update(dict(zip(vals.tolist(), counts.tolist())))
        return NeighborhoodReport(side, s, mode, dict(sorted(hist.items())), d)
    if mode == "sampled":
        if rng is None:
            raise PreconditionFailed("sampled mode needs an rng")
        _check_side(side)
        for U in _sample_subsets(G.side_size(side), s, samples, rng):
            hist[subset_neighborhood_size(G, U, side)] += 1
        return NeighborhoodReport(side, s, mode, dict(sorted(hist.items())), d, samples)
    raise ValueError(f"unknown mode {mode!r}")


def empirical_moment(values, d: int) -> float:
    values = [int(v) for v in values]
    if not values:
        return 0.0
    return float(Fraction(sum(v**d for v in values), len(values)))


# --- moment method --------------------------------------------------------

def surjection_count(d: int, r: int) -> int:
    """Number of surjections from a d-set onto an r-set, by inclusion-exclusion."""
    if d > MAX_MOMENT_DEGREE:
        raise CapExceeded(f"d = {d} exceeds {MAX_MOMENT_DEGREE}")
    if not 0 <= r <= d:
        raise PreconditionFailed("need 0 <= r <= d")
    return sum((-1) ** i * math.comb(r, i) * (r - i) ** d for i in range(r + 1))


def moment_bound(d: int) -> int:
    """M = sum over r <= d of the surjection counts M_r (an ordered Bell number)."""
    return sum(surjection_count(d, r) for r in range(d + 1))


def exact_moment(q: int, s: int, d: int) -> Fraction:
    """sum_r C(q^s, r) M_r q^(-rs): the d-th moment when every joint-vanishing probability is exact."""
    n = q**s
    return sum((Fraction(math.comb(n, r) * surjection_count(d, r), q ** (r * s))
                for r in range(d + 1)), Fraction(0))


def tail_bound(lam: float, d: int) -> float:
    """Markov bound on the d-th moment: Pr[|N(U)| >= lam] <= M / lam^d (not clamped)."""
    if lam <= 0:
        raise PreconditionFailed("lambda must be positive")
    lam = Fraction(lam) if isinstance(lam, int) else lam
    return float(moment_bound(d) / lam**d)


def expected_bad_bound(n: int, s: int, q: int, d: int) -> float:
    """2 C(n, s) M / (q/2)^d, computed exactly then rendered as float."""
    return float(2 * math.comb(n, s) * moment_bound(d) / Fraction(q, 2) ** d)


# --- bad sets and purging -------------------------------------------------

@dataclass
class BadSetReport:
    threshold: int
    s: int
    bad_sets: list
    graph_digest: str
    mode: str = "exhaustive"

    @property
    def count(self) -> int:
        return len(self.bad_sets)

    def to_dict(self, limit: int | None = 100) -> dict:
        shown = self.bad_sets if limit is None else self.bad_sets[:limit]
        return {"threshold": self.threshold, "s": self.s, "mode": self.mode, "count": self.count,
                "by_side": {side: sum(1 for b in self.bad_sets if b[0] == side) for side in SIDES},
                "bad_sets": [{"side": sd, "vertices": list(u), "size": sz} for sd, u, sz in shown],
                "truncated": limit is not None and self.count > limit}


def find_bad_sets(G: BipartiteGraph, s: int, C: int, mode: str = "exhaustive", rng=None,
                  samples: int = 1000, work_cap=None) -> BadSetReport:
    """Every s-subset (both sides) whose common neighbourhood has more than C vertices."""
    found = []
    for side in SIDES:
        if mode == "exhaustive":
            for subsets, sizes in _scan_blocks(G, s, side, work_cap):
                hit = np.nonzero(sizes > C)[0]
                found.extend((side, tuple(subsets[h].tolist()), int(sizes[h])) for h in hit)
        elif mode == "sampled":
            if rng is None:
                raise PreconditionFailed("sampled mode needs an rng")
            seen = set()
            for U in _sample_subsets(G.side_size(side), s, samples, rng):
                size = subset_neighborhood_size(G, U, side)
                if size > C and U not in seen:
                    seen.add(U)
                    found.append((side, U, size))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    found.sort(key=lambda b: (b[0], b[1]))
    return BadSetReport(C, s, found, G.digest(), mode)


def purge_bad_sets(G: BipartiteGraph, report: BadSetReport) -> tuple[BipartiteGraph, int]:
    """Delete the smallest-index vertex of every bad set not already hit.

    Deleting a vertex clears all its edges.  Returns the new graph and the
    number of vertices removed.
    """
    if report.graph_digest != G.digest():
        raise StaleReport("bad-set report was computed for a different graph")
    if report.mode != "exhaustive":
        raise PreconditionFailed("purging needs an exhaustive report")
    removed = {side: set() for side in SIDES}
    for side, U, _ in report.bad_sets:
        if removed[side].isdisjoint(U):
            removed[side].add(min(U))
    if not removed["left"] and not removed["right"]:
        return G, 0
    out = G.without_vertices(sorted(removed["left"]), sorted(removed["right"]))
    out.provenance["purged"] = {side: sorted(v) for side, v in removed.items()}
    return out, len(removed["left"]) + len(removed["right"])


# --- K_{s,t} search --------------------------------------------------------

@dataclass(frozen=True)
class KstWitness:
    left: tuple
    right: tuple

    @property
    def sizes(self) -> tuple:
        return len(self.left), len(self.right)

    def verify(self, G: BipartiteGraph) -> bool:
        return bool(G.adj[np.ix_(list(self.left), list(self.right))].all())

    def to_dict(self) -> dict:
        return {"left": list(self.left), "right": list(self.right)}


def contains_kst(G: BipartiteGraph, s: int, t: int, work_cap=None) -> KstWitness | None:
    """A copy of K_{s,t} with the s-side in either part, or None.

    In a bipartite host this exists iff some same-side s-subset has at least
    t common neighbours.
    """
    if t < 1:
        raise PreconditionFailed("t must be >= 1")
    for side in SIDES:
        for subsets, sizes in _scan_blocks(G, s, side, work_cap):
            hit = np.nonzero(sizes >= t)[0]
            if len(hit):
                U = tuple(subsets[hit[0]].tolist())
                common = np.nonzero(np.logical_and.reduce(G.side_matrix(side)[list(U)], axis=0))[0]
                T = tuple(common[:t].tolist())
                w = KstWitness(U, T) if side == "left" else KstWitness(T, U)
                if not w.verify(G):
                    raise AssertionError("witness failed the pairwise edge check")
                return w
    return None


# --- Kővári–Sós–Turán double count ----------------------------------------

def star_count_identity(G: BipartiteGraph, s: int) -> tuple[int, list[int]]:
    """Stars K_{1,s} with apex on the left and leaves on the right: sum of C(deg v, s)."""
    terms = [math.comb(int(dv), s) for dv in G.degrees("left")]
    return sum(terms), terms


def star_count_bound(n: int, s: int, t: int) -> int:
    """(t - 1) C(n, s): the star count ceiling when every s-set has fewer than t common neighbours."""
    return (t - 1) * math.comb(n, s)


def kst_upper_bound(n: int, s: int, t: int) -> float:
    """2 (t-1)^(1/s) n^(2-1/s), the constant that falls out of the double count.

    An asymptotic ceiling; used for context and as a sanity dominator over
    exact values at tiny n.
    """
    if s < 1 or t < 2:
        raise PreconditionFailed("need s >= 1 and t >= 2")
    return 2 * (t - 1) ** (1 / s) * n ** (2 - 1 / s)


# --- exact Turán numbers for tiny n ----------------------------------------

def _has_kst_through(adj, n, s, t, verts) -> bool:
    """Does some s-set containing a vertex of ``verts`` have >= t common neighbours?"""
    for v in verts:
        others = [u for u in range(n) if u != v]
        for rest in itertools.combinations(others, s - 1):
            acc = adj[v]
            for u in rest:
                acc &= adj[u]
            if acc.bit_count() >= t:
                return True
    return False


def brute_force_ex(n: int, s: int, t: int) -> int:
    """Maximum edge count of a K_{s,t}-free simple graph on n vertices (n <= 8).

    Branch and bound over edges in lexicographic order; a branch dies as soon
    as it creates a K_{s,t} or cannot beat the best count found so far.
    """
    if n > 8:
        raise CapExceeded("brute_force_ex is limited to n <= 8")
    if n < 2:
        return 0
    edges = list(itertools.combinations(range(n), 2))
    m = len(edges)
    adj = [0] * n
    best = 0

    def extend(idx, count):
        nonlocal best
        if count > best:
            best = count
        if idx == m or count + (m - idx) <= best:
            return
        i, j = edges[idx]
        adj[i] |= 1 << j
        adj[j] |= 1 << i
        if not _has_kst_through(adj, n, s, t, (i, j)):
            extend(idx + 1, count + 1)
        adj[i] &= ~(1 << j)
        adj[j] &= ~(1 << i)
        extend(idx + 1, count)

    extend(0, 0)
    return best


def brute_force_ex_masks(n: int, s: int, t: int, chunk: int = 2**20) -> int:
    """Same quantity as :func:`brute_force_ex`, by scanning every edge mask.

    Independent route: all 2^C(n,2) graphs are materialised in vectorised
    chunks and tested against every s-subset.
    """
    if n > 8:
        raise CapExceeded("brute_force_ex_masks is limited to n <= 8")
    if n < 2:
        return 0
    edges = list(itertools.combinations(range(n), 2))
    m = len(edges)
    subsets = list(itertools.combinations(range(n), s)) if s <= n else []
    best = 0
    for lo in range(0, 2**m, chunk):
        masks = np.arange(lo, min(2**m, lo + chunk), dtype=np.int64)
        rows = np.zeros((n, len(masks)), dtype=np.int64)
        for e, (i, j) in enumerate(edges):
            present = (masks >> e) & 1
            rows[i] |= present << j
            rows[j] |= present << i
        ok = np.ones(len(masks), dtype=bool)
        for S in subsets:
            acc = rows[S[0]].copy()
            for u in S[1:]:
                acc &= rows[u]
            ok &= np.bitwise_count(acc) < t
        if ok.any():
            best = max(best, int(np.bitwise_count(masks[ok]).max()))
    return best
