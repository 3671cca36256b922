"""Polynomials over GF(q) in two blocks of s variables.

``BiPoly`` is a polynomial f(X, Y) with X = (X_1..X_s), Y = (Y_1..Y_s) whose
degree is bounded by d in each block.  Two readings of "degree at most d in
each block" are supported:

* ``"block-total"`` (default): total degree of the X part <= d and total
  degree of the Y part <= d.  Basis size C(s+d, d)**2.
* ``"per-variable"``: every single exponent <= d.  Basis size (d+1)**(2s).

Coefficients are stored as field ranks.  Sampling draws one rank per basis
monomial, in basis order, from a single ``rng.integers`` call.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DuplicateNode, PreconditionFailed
from .ffield import FieldContext, make_field

CONVENTIONS = ("block-total", "per-variable")


class Monomial(NamedTuple):
    x_exps: tuple
    y_exps: tuple

    def degree(self):
        return sum(self.x_exps), sum(self.y_exps)


def _grlex_key(exps):
    return (sum(exps), tuple(-e for e in exps))


def block_basis(s: int, d: int, convention: str = "block-total") -> list[tuple]:
    """Exponent vectors of one block, in graded-lex order (X_1 > X_2 > ...)."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown degree convention {convention!r}")
    if s < 0 or d < 0:
        raise PreconditionFailed("need s >= 0 and d >= 0")
    exps = itertools.product(range(d + 1), repeat=s)
    if convention == "block-total":
        exps = (e for e in exps if sum(e) <= d)
    return sorted(exps, key=_grlex_key)


def monomial_basis(s: int, d: int, convention: str = "block-total") -> list[Monomial]:
    """Basis of the polynomial class, x-block major."""
    block = block_basis(s, d, convention)
    return [Monomial(x, y) for x in block for y in block]


def _monomial_values(ctx: FieldContext, exps: list[tuple], points) -> np.ndarray:
    """Matrix V[i, b] = value of monomial exps[b] at points[i]."""
    points = np.asarray(points, dtype=np.int64).reshape(-1, len(exps[0]) if exps else 0)
    m = points.shape[0]
    if not exps:
        return np.zeros((m, 0), dtype=np.int64)
    nvars = len(exps[0])
    max_e = max((max(e) for e in exps if e), default=0)
    powers = [ctx.vpowers(points[:, i], max_e) for i in range(nvars)]
    out = np.ones((m, len(exps)), dtype=np.int64)
    for b, e in enumerate(exps):
        col = np.ones(m, dtype=np.int64)
        for i, ei in enumerate(e):
            if ei:
                col = ctx.vmul(col, powers[i][:, ei])
        out[:, b] = col
    return out


@dataclass(frozen=True)
class SPoly:
    """Polynomial in ``nvars`` variables; ``terms`` maps exponent tuples to nonzero ranks."""

    ctx: FieldContext
    nvars: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {tuple(e): int(c) for e, c in self.terms.items() if int(c) % self.ctx.q}
        object.__setattr__(self, "terms", dict(sorted(clean.items(), key=lambda t: _grlex_key(t[0]))))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, point):
        return evaluate_s(self, point)

    def evaluate_many(self, points) -> np.ndarray:
        """Values at each row of a (m, nvars) array of ranks."""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.nvars)
        if not self.terms:
            return np.zeros(points.shape[0], dtype=np.int64)
        exps = list(self.terms)
        vals = _monomial_values(self.ctx, exps, points)
        coeffs = np.array(list(self.terms.values()), dtype=np.int64)[:, None]
        return self.ctx.dot(vals, coeffs)[:, 0]

    def __add__(self, other):
        return SPoly(self.ctx, self.nvars, _add_terms(self.ctx, self.terms, other.terms))

    def __mul__(self, other):
        if isinstance(other, SPoly):
            return SPoly(self.ctx, self.nvars, _mul_terms(self.ctx, self.terms, other.terms))
        c = int(other)
        return SPoly(self.ctx, self.nvars, {e: self.ctx.mul(v, c) for e, v in self.terms.items()})

    def __neg__(self):
        return SPoly(self.ctx, self.nvars, {e: self.ctx.neg(v) for e, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)


def _add_terms(ctx, a, b):
    out = dict(a)
    for e, c in b.items():
        out[e] = ctx.add(out.get(e, 0), c)
    return out


def _mul_terms(ctx, a, b):
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = ctx.add(out.get(e, 0), ctx.mul(ca, cb))
    return out


def spoly_variable(ctx, nvars, i) -> SPoly:
    e = [0] * nvars
    e[i] = 1
    return SPoly(ctx, nvars, {tuple(e): 1})


def spoly_constant(ctx, nvars, c) -> SPoly:
    return SPoly(ctx, nvars, {(0,) * nvars: int(c)})


def evaluate_s(g: SPoly, y) -> int:
    ctx = g.ctx
    total = 0
    for e, c in g.terms.items():
        term = c
        for yi, ei in zip(y, e):
            if ei:
                term = ctx.mul(term, ctx.pow(int(yi), ei))
        total = ctx.add(total, term)
    return total


@dataclass(frozen=True)
class BiPoly:
    """f(X, Y) with coefficients indexed by :class:`Monomial`.

    Stored terms are nonzero and kept in basis order; ``coeff_vector`` gives
    the dense coefficient vector over ``monomial_basis(s, d, convention)``.
    """

    ctx: FieldContext
    s: int
    d: int
    terms: dict = field(default_factory=dict)
    convention: str = "block-total"

    def __post_init__(self):
        order = _cached_index(self.s, self.d, self.convention)
        clean = {}
        for m, c in self.terms.items():
            m = Monomial(tuple(m[0]), tuple(m[1]))
            if m not in order:
                raise PreconditionFailed(f"monomial {m} outside the class (s={self.s}, d={self.d})")
            if int(c) % self.ctx.q:
                clean[m] = int(c)
        object.__setattr__(self, "terms", dict(sorted(clean.items(), key=lambda t: order[t[0]])))

    @property
    def basis(self) -> list[Monomial]:
        return _cached_basis(self.s, self.d, self.convention)

    @classmethod
    def from_vector(cls, ctx, s, d, vector, convention="block-total"):
        basis = _cached_basis(s, d, convention)
        return cls(ctx, s, d, {m: int(c) for m, c in zip(basis, vector) if c}, convention)

    def coeff_vector(self) -> np.ndarray:
        index = _cached_index(self.s, self.d, self.convention)
        out = np.zeros(len(index), dtype=np.int64)
        for m, c in self.terms.items():
            out[index[m]] = c
        return out

    def coeff_matrix(self) -> np.ndarray:
        """Coefficients as a (|x-block|, |y-block|) matrix."""
        nb = len(block_basis(self.s, self.d, self.convention))
        return self.coeff_vector().reshape(nb, nb)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def to_text(self) -> str:
        """Canonical text form: header line, then one term per line in basis order."""
        head = f"{self.ctx.p} {self.ctx.k} {self.s} {self.d} " + " ".join(str(c) for c in self.ctx.modulus)
        lines = [head]
        for m, c in self.terms.items():
            lines.append(f"{c} | {' '.join(map(str, m.x_exps))} | {' '.join(map(str, m.y_exps))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


@lru_cache(maxsize=None)
def _cached_basis(s, d, convention):
    return monomial_basis(s, d, convention)


@lru_cache(maxsize=None)
def _cached_index(s, d, convention):
    return {m: i for i, m in enumerate(_cached_basis(s, d, convention))}


def parse_bipoly(text: str, convention: str = "block-total") -> BiPoly:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = [int(t) for t in lines[0].split()]
    p, k, s, d = head[:4]
    ctx = make_field(p, k, head[4:])
    terms = {}
    for ln in lines[1:]:
        c, xs, ys = (part.split() for part in ln.split("|"))
        terms[Monomial(tuple(map(int, xs)), tuple(map(int, ys)))] = int(c[0])
    return BiPoly(ctx, s, d, terms, convention)


def sample_uniform(ctx: FieldContext, s: int, d: int, rng, convention: str = "block-total") -> BiPoly:
    """Uniform element of the class: one independent uniform coefficient per basis monomial.

    Consumes exactly ``len(monomial_basis(s, d, convention))`` draws from ``rng``, in basis order.
    """
    basis = _cached_basis(s, d, convention)
    vec = np.asarray(rng.integers(0, ctx.q, size=len(basis)), dtype=np.int64)
    return BiPoly.from_vector(ctx, s, d, vec, convention)


def sample_coefficients(ctx: FieldContext, s: int, d: int, rng, count: int,
                        convention: str = "block-total") -> np.ndarray:
    """``count`` coefficient vectors at once; row i equals the i-th sequential sample_uniform draw."""
    size = len(_cached_basis(s, d, convention))
    return np.asarray(rng.integers(0, ctx.q, size=(count, size)), dtype=np.int64)


def basis_values(ctx: FieldContext, s: int, d: int, x_points, y_points,
                 convention: str = "block-total") -> np.ndarray:
    """Matrix of basis monomial values, one column per pair (x_points[i], y_points[i])."""
    block = block_basis(s, d, convention)
    xv = _monomial_values(ctx, block, x_points)
    yv = _monomial_values(ctx, block, y_points)
    # column ordering matches monomial_basis: x-block major
    out = ctx.vmul(xv[:, :, None], yv[:, None, :]).reshape(xv.shape[0], -1)
    return out.T


def evaluate(f: BiPoly, x, y) -> int:
    ctx = f.ctx
    total = 0
    for m, c in f.terms.items():
        term = c
        for v, e in itertools.chain(zip(x, m.x_exps), zip(y, m.y_exps)):
            if e:
                term = ctx.mul(term, ctx.pow(int(v), e))
        total = ctx.add(total, term)
    return total


def restrict_left(f: BiPoly, u) -> SPoly:
    """The Y-block polynomial y -> f(u, y)."""
    ctx = f.ctx
    out: dict = {}
    for m, c in f.terms.items():
        coef = c
        for v, e in zip(u, m.x_exps):
            if e:
                coef = ctx.mul(coef, ctx.pow(int(v), e))
        out[m.y_exps] = ctx.add(out.get(m.y_exps, 0), coef)
    return SPoly(ctx, f.s, out)


def restrict_left_many(f: BiPoly, points) -> np.ndarray:
    """Y-block coefficient vectors of f(u, .) for each row u of ``points``.

    Returns an array of shape (len(points), |y-block|) indexed like ``block_basis``.
    """
    ctx = f.ctx
    block = block_basis(f.s, f.d, f.convention)
    xv = _monomial_values(ctx, block, points)
    return ctx.dot(xv, f.coeff_matrix())


def interpolate_univariate(ctx: FieldContext, nodes, values) -> list[int]:
    """Coefficients (low-to-high, length len(nodes)) of the Lagrange interpolant."""
    nodes = [int(a) for a in nodes]
    if len(set(nodes)) != len(nodes):
        raise DuplicateNode(f"interpolation nodes repeat: {nodes}")
    n = len(nodes)
    out = [0] * n
    for i, xi in enumerate(nodes):
        if not values[i]:
            continue
        basis = [1]
        denom = 1
        for j, xj in enumerate(nodes):
            if j == i:
                continue
            # basis *= (X - xj)
            nxt = [0] * (len(basis) + 1)
            for t, c in enumerate(basis):
                nxt[t + 1] = ctx.add(nxt[t + 1], c)
                nxt[t] = ctx.sub(nxt[t], ctx.mul(c, xj))
            basis = nxt
            denom = ctx.mul(denom, ctx.sub(xi, xj))
        scale = ctx.div(int(values[i]), denom)
        for t, c in enumerate(basis):
            out[t] = ctx.add(out[t], ctx.mul(c, scale))
    return out


def bivariate_interpolate(ctx: FieldContext, U, V, targets) -> SPoly:
    """Unique h(X_1, Y_1) with deg_X < |U|, deg_Y < |V| and h(u, v) = targets[i][j].

    Lagrange interpolation twice: first in Y for each u, then in X for each
    Y-coefficient.  The result is an SPoly in the two variables (X_1, Y_1).
    """
    U, V = [int(a) for a in U], [int(b) for b in V]
    if len(set(U)) != len(U) or len(set(V)) != len(V):
        raise DuplicateNode("interpolation nodes repeat")
    per_u = [interpolate_univariate(ctx, V, [int(t) for t in row]) for row in targets]
    terms = {}
    for j in range(len(V)):
        coeffs_x = interpolate_univariate(ctx, U, [per_u[i][j] for i in range(len(U))])
        for i, c in enumerate(coeffs_x):
            terms[(i, j)] = c
    return SPoly(ctx, 2, terms)


def vanishing_completion(f: BiPoly, U, V) -> BiPoly:
    """Replace the X_1^i Y_1^j part (i < |U|, j < |V|) of f so the result vanishes on U x V.

    U and V must be simple (distinct first coordinates).  Writing f = g + h
    with h supported on those monomials, the returned polynomial is g + h'
    where h' is the unique solution of h'(u, v) = -g(u, v).
    """
    ctx, s = f.ctx, f.s
    r_u, r_v = len(U), len(V)
    if r_u > f.d + 1 or r_v > f.d + 1:
        raise PreconditionFailed("too many points for the degree bound")

    def support(m):
        return (m.x_exps[0] < r_u and not any(m.x_exps[1:])
                and m.y_exps[0] < r_v and not any(m.y_exps[1:]))

    g = BiPoly(ctx, s, f.d, {m: c for m, c in f.terms.items() if not support(m)}, f.convention)
    targets = [[ctx.neg(evaluate(g, u, v)) for v in V] for u in U]
    h = bivariate_interpolate(ctx, [u[0] for u in U], [v[0] for v in V], targets)
    terms = dict(g.terms)
    zero = (0,) * (s - 1)
    for (i, j), c in h.terms.items():
        terms[Monomial((i,) + zero, (j,) + zero)] = c
    return BiPoly(ctx, s, f.d, terms, f.convention)
