"""Bipartite graphs from polynomials (algebraic construction) or coin flips (baseline).

Both parts are indexed canonically.  For the algebraic graph a vertex index i
corresponds to the point of GF(q)^s whose coordinate j has rank
``(i // q**j) % q`` (coordinate 0 least significant).
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import IndexOutOfRange, MixedSides, PreconditionFailed, check_work
from .ffield import FieldContext, make_field
from .mpoly import BiPoly, _monomial_values, block_basis, sample_uniform
from .rng import make_rng

SIDES = ("left", "right")
MAX_PART_SIZE = 2**22


def point_to_index(ctx: FieldContext, pt) -> int:
    idx = 0
    for coord in reversed(list(pt)):
        c = ctx.rank(coord)
        if not 0 <= c < ctx.q:
            raise IndexOutOfRange(f"coordinate {c} outside the field")
        idx = idx * ctx.q + c
    return idx


def index_to_point(ctx: FieldContext, s: int, i: int) -> tuple:
    if not 0 <= i < ctx.q**s:
        raise IndexOutOfRange(f"index {i} outside [0, {ctx.q ** s})")
    out = []
    for _ in range(s):
        i, r = divmod(i, ctx.q)
        out.append(r)
    return tuple(out)


def all_points(ctx: FieldContext, s: int) -> np.ndarray:
    """(q**s, s) array of every point, row i being index_to_point(ctx, s, i)."""
    idx = np.arange(ctx.q**s, dtype=np.int64)
    return np.stack([(idx // ctx.q**j) % ctx.q for j in range(s)], axis=1)


@dataclass(frozen=True)
class ConstructionParams:
    p: int
    k: int = 1
    s: int = 2
    d: int | None = None
    seed: int = 0
    convention: str = "block-total"
    modulus: tuple | None = None

    def __post_init__(self):
        if self.d is None:
            object.__setattr__(self, "d", self.s * self.s - self.s + 2)
        if self.s < 2:
            raise PreconditionFailed("the construction needs s >= 2")
        if self.d < 0:
            raise PreconditionFailed("degree bound must be >= 0")
        if (self.p**self.k) ** self.s > MAX_PART_SIZE:
            raise PreconditionFailed(f"n = q^s exceeds the cap {MAX_PART_SIZE}")

    @cached_property
    def field(self) -> FieldContext:
        return make_field(self.p, self.k, self.modulus)

    @property
    def q(self) -> int:
        return self.p**self.k

    @property
    def n(self) -> int:
        return self.q**self.s

    @property
    def in_proven_regime(self) -> bool:
        return self.s >= 4

    def as_dict(self) -> dict:
        return {"p": self.p, "k": self.k, "s": self.s, "d": self.d, "seed": self.seed,
                "convention": self.convention, "modulus": list(self.field.modulus)}


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Adjacency matrix ``adj[i, j]`` for left vertex i and right vertex j.

    Rows double as per-left-vertex bitsets; ``row_bits``/``col_bits`` give the
    same data as Python ints for subset-intersection scans.
    """

    adj: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.adj, dtype=bool, copy=True)
        if a.ndim != 2:
            raise ValueError("adjacency must be a 2-D matrix")
        a.flags.writeable = False
        object.__setattr__(self, "adj", a)

    def __eq__(self, other):
        return isinstance(other, BipartiteGraph) and np.array_equal(self.adj, other.adj)

    __hash__ = None

    @property
    def n_left(self) -> int:
        return self.adj.shape[0]

    @property
    def n_right(self) -> int:
        return self.adj.shape[1]

    def side_size(self, side: str) -> int:
        return self.n_left if side == "left" else self.n_right

    def edge_count(self) -> int:
        return int(self.adj.sum())

    def degree(self, v: int, side: str = "left") -> int:
        return int(self.adj[v].sum() if side == "left" else self.adj[:, v].sum())

    def degrees(self, side: str = "left") -> np.ndarray:
        return self.adj.sum(axis=1 if side == "left" else 0)

    def side_matrix(self, side: str) -> np.ndarray:
        """Rows indexed by vertices of ``side``, columns by the opposite side."""
        _check_side(side)
        return self.adj if side == "left" else self.adj.T

    @cached_property
    def row_bits(self) -> tuple:
        return _to_bitsets(self.adj)

    @cached_property
    def col_bits(self) -> tuple:
        return _to_bitsets(self.adj.T)

    def bits(self, side: str) -> tuple:
        _check_side(side)
        return self.row_bits if side == "left" else self.col_bits

    def edges(self):
        rows, cols = np.nonzero(self.adj)
        return zip(rows.tolist(), cols.tolist())

    def edge_list_text(self) -> str:
        lines = [f"# bipartite {self.n_left} {self.n_right}"]
        lines.extend(f"{i} {j}" for i, j in self.edges())
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.edge_list_text().encode()).hexdigest()

    def without_vertices(self, left=(), right=()) -> "BipartiteGraph":
        """Copy with every edge at the given vertices cleared (vertex count unchanged)."""
        a = self.adj.copy()
        a[list(left), :] = False
        a[:, list(right)] = False
        prov = dict(self.provenance)
        prov["parent_digest"] = self.digest()
        return BipartiteGraph(a, prov)


def _to_bitsets(matrix) -> tuple:
    packed = np.packbits(matrix, axis=1, bitorder="little")
    return tuple(int.from_bytes(row.tobytes(), "little") for row in packed)


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def parse_edge_list(text: str) -> BipartiteGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    tag, kind, nl, nr = lines[0].split()
    if tag != "#" or kind != "bipartite":
        raise ValueError("missing '# bipartite' header")
    adj = np.zeros((int(nl), int(nr)), dtype=bool)
    for ln in lines[1:]:
        i, j = ln.split()
        adj[int(i), int(j)] = True
    return BipartiteGraph(adj)


def graph_from_polynomial(f: BiPoly, workers: int = 1, work_cap=None,
                          provenance: dict | None = None,
                          chunk_rows: int | None = None) -> BipartiteGraph:
    """Edge (i, j) iff f(point_i, point_j) = 0, over all q^s x q^s pairs.

    Left rows are split into chunks evaluated independently, so the result
    does not depend on ``workers``.
    """
    ctx, s = f.ctx, f.s
    n = ctx.q**s
    check_work(n * n, work_cap, "algebraic graph evaluation")
    pts = all_points(ctx, s)
    block = block_basis(s, f.d, f.convention)
    mono = _monomial_values(ctx, block, pts)          # (n, |block|)
    partial = ctx.dot(mono, f.coeff_matrix())         # row i: coefficients of f(x_i, .)
    mono_t = np.ascontiguousarray(mono.T)

    if chunk_rows is None:
        chunk_rows = -(-n // max(1, workers))
    chunk = max(1, min(chunk_rows, 2**22 // max(n, 1)))
    bounds = [(lo, min(n, lo + chunk)) for lo in range(0, n, chunk)]

    def rows(bound):
        lo, hi = bound
        return ctx.dot(partial[lo:hi], mono_t) == 0

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(rows, bounds))
    else:
        parts = [rows(b) for b in bounds]
    adj = np.concatenate(parts, axis=0) if parts else np.zeros((0, 0), dtype=bool)
    prov = {"kind": "algebraic", "p": ctx.p, "k": ctx.k, "s": s, "d": f.d,
            "convention": f.convention, "polynomial_digest": f.digest()}
    prov.update(provenance or {})
    return BipartiteGraph(adj, prov)


def build_algebraic_graph(params: ConstructionParams, rng=None, workers: int = 1,
                          work_cap=None) -> tuple[BipartiteGraph, BiPoly]:
    """Sample f uniformly from the class and build its graph."""
    check_work(params.n * params.n, work_cap, "algebraic graph evaluation")
    if rng is None:
        rng = make_rng(params.seed)
    f = sample_uniform(params.field, params.s, params.d, rng, params.convention)
    g = graph_from_polynomial(f, workers=workers, work_cap=work_cap,
                              provenance={"seed": params.seed})
    return g, f


def build_random_graph(n: int, s: int, rng=None, seed: int | None = None) -> BipartiteGraph:
    """Each of the n*n pairs is an edge independently with probability n**(-1/s).

    One uniform draw per pair in row-major order, whatever the probability.
    """
    if n < 1 or s < 1:
        raise PreconditionFailed("need n >= 1 and s >= 1")
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    prob = min(1.0, max(0.0, n ** (-1.0 / s)))
    adj = rng.random((n, n)) < prob
    return BipartiteGraph(adj, {"kind": "random", "n": n, "s": s, "edge_probability": prob,
                                "seed": seed})


def _resolve_vertices(U, side):
    out = []
    for u in U:
        if isinstance(u, tuple):
            u_side, u = u
            if u_side != side:
                raise MixedSides(f"vertex {u} is on the {u_side} side, expected {side}")
        out.append(int(u))
    return out


def common_neighborhood(G: BipartiteGraph, U, side: str = "left") -> np.ndarray:
    """Boolean mask over the opposite side of vertices adjacent to all of U.

    Members of U may be plain indices (on ``side``) or ``(side, index)`` pairs;
    a pair naming the other side raises MixedSides.
    """
    _check_side(side)
    idx = _resolve_vertices(U, side)
    if not idx:
        raise PreconditionFailed("U must be nonempty")
    rows = G.side_matrix(side)
    for i in idx:
        if not 0 <= i < rows.shape[0]:
            raise IndexOutOfRange(f"vertex {i} outside the {side} side")
    return np.logical_and.reduce(rows[idx], axis=0)


def edge_count(G: BipartiteGraph) -> int:
    return G.edge_count()


def degree(G: BipartiteGraph, v: int, side: str = "left") -> int:
    return G.degree(v, side)
