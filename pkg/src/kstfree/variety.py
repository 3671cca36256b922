"""Zero sets of polynomial systems over GF(q)^s, checked by point enumeration.

The size dichotomy for common zero sets (small, or at least q - C*sqrt(q))
is probed empirically here; the constant C is an input, never derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import PreconditionFailed, check_work
from .ffield import FieldContext, is_prime, make_field
from .graphgen import all_points, index_to_point
from .mpoly import (SPoly, _monomial_values, block_basis, restrict_left_many, sample_uniform,
                    spoly_constant, spoly_variable)
from .rng import substream

HIGH_RULES = ("sqrt", "half")


class Verdict(str, Enum):
    ZERO_DIMENSIONAL = "ZeroDimensional"
    HIGHER_DIMENSIONAL = "HigherDimensional"
    GAP_VIOLATION = "GapViolation"


def _zero_mask(polys, ctx, s, work_cap=None) -> np.ndarray:
    check_work(ctx.q**s, work_cap, "common-zero enumeration")
    pts = all_points(ctx, s)
    mask = np.ones(len(pts), dtype=bool)
    for g in polys:
        if g.nvars != s:
            raise PreconditionFailed(f"polynomial in {g.nvars} variables, expected {s}")
        mask &= g.evaluate_many(pts) == 0
    return mask


def common_zeros(polys, ctx: FieldContext, s: int, work_cap=None) -> set:
    """All points of GF(q)^s where every polynomial vanishes."""
    mask = _zero_mask(polys, ctx, s, work_cap)
    return {index_to_point(ctx, s, int(i)) for i in np.nonzero(mask)[0]}


def count_common_zeros(polys, ctx: FieldContext, s: int, work_cap=None) -> int:
    return int(_zero_mask(polys, ctx, s, work_cap).sum())


def high_floor(q: int, C: float, rule: str = "sqrt") -> float:
    if rule == "sqrt":
        return q - C * math.sqrt(q)
    if rule == "half":
        return q / 2
    raise ValueError(f"unknown high-side rule {rule!r}")


@dataclass(frozen=True)
class ZeroSetClassification:
    size: int
    verdict: Verdict
    low_ceiling: float
    high_floor: float

    def to_dict(self):
        return {"size": self.size, "verdict": self.verdict.value,
                "bounds": [self.low_ceiling, self.high_floor]}


def classify_size(size: int, q: int, C: float, rule: str = "sqrt") -> ZeroSetClassification:
    hi = high_floor(q, C, rule)
    if size <= C:
        verdict = Verdict.ZERO_DIMENSIONAL
    elif size >= hi:
        verdict = Verdict.HIGHER_DIMENSIONAL
    else:
        verdict = Verdict.GAP_VIOLATION
    return ZeroSetClassification(size, verdict, C, hi)


def classify_variety(polys, ctx: FieldContext, s: int, C: float, rule: str = "sqrt",
                     work_cap=None) -> ZeroSetClassification:
    return classify_size(count_common_zeros(polys, ctx, s, work_cap), ctx.q, C, rule)


@dataclass
class DichotomyReport:
    q: int
    s: int
    d: int
    C: float
    rule: str
    sizes: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    digests: list = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.sizes)

    @property
    def violations(self) -> list:
        return [(i, self.sizes[i], self.digests[i]) for i, v in enumerate(self.verdicts)
                if v is Verdict.GAP_VIOLATION]

    @property
    def max_low(self):
        low = [sz for sz, v in zip(self.sizes, self.verdicts) if v is Verdict.ZERO_DIMENSIONAL]
        return max(low, default=None)

    @property
    def min_high(self):
        high = [sz for sz, v in zip(self.sizes, self.verdicts) if v is Verdict.HIGHER_DIMENSIONAL]
        return min(high, default=None)

    def suggested_threshold(self) -> int:
        """Largest size observed on the low side, plus one (C itself if none)."""
        return int(self.C) if self.max_low is None else self.max_low + 1

    def to_csv(self) -> str:
        rows = ["trial,size,verdict"]
        rows += [f"{i},{sz},{v.value}" for i, (sz, v) in enumerate(zip(self.sizes, self.verdicts))]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        counts = {v.value: sum(1 for x in self.verdicts if x is v) for v in Verdict}
        return {"q": self.q, "s": self.s, "d": self.d, "C": self.C, "high_rule": self.rule,
                "high_floor": high_floor(self.q, self.C, self.rule), "trials": self.trials,
                "verdict_counts": counts, "max_low": self.max_low, "min_high": self.min_high,
                "size_histogram": {str(k): self.sizes.count(k) for k in sorted(set(self.sizes))},
                "violations": [{"trial": i, "size": sz, "polynomial_digest": dg}
                               for i, sz, dg in self.violations]}


def sample_simple_points(ctx: FieldContext, s: int, count: int, rng) -> np.ndarray:
    """``count`` points of GF(q)^s with pairwise distinct first coordinates."""
    if count > ctx.q:
        raise PreconditionFailed(f"cannot pick {count} distinct first coordinates in GF({ctx.q})")
    first = rng.choice(ctx.q, size=count, replace=False)
    rest = rng.integers(0, ctx.q, size=(count, s - 1))
    return np.column_stack([first, rest]).astype(np.int64)


def dichotomy_scan(ctx: FieldContext, s: int, d: int, C: float, trials: int, rng=0,
                   rule: str = "sqrt", convention: str = "block-total",
                   work_cap=None) -> DichotomyReport:
    """Sample f and a simple U of size s per trial; classify the zeros of {f(u, .) : u in U}.

    ``rng`` is either an integer seed (trial i then uses the substream
    (seed, i), so trials are independent of each other and of scheduling)
    or a generator object consumed sequentially.
    """
    check_work(ctx.q**s, work_cap, "common-zero enumeration")
    report = DichotomyReport(ctx.q, s, d, C, rule)
    if trials <= 0:
        return report
    pts = all_points(ctx, s)
    ymono = _monomial_values(ctx, block_basis(s, d, convention), pts).T   # (|block|, q^s)
    for trial in range(trials):
        gen = substream(rng, trial) if isinstance(rng, (int, np.integer)) else rng
        f = sample_uniform(ctx, s, d, gen, convention)
        U = sample_simple_points(ctx, s, s, gen)
        restricted = restrict_left_many(f, U)        # (s, |block|)
        vals = ctx.dot(restricted, ymono)             # (s, q^s)
        size = int((vals == 0).all(axis=0).sum())
        report.sizes.append(size)
        report.verdicts.append(classify_size(size, ctx.q, C, rule).verdict)
        report.digests.append(f.digest())
    return report


# --- simple-set transform ---------------------------------------------------

@dataclass(frozen=True)
class LinearMap:
    """s x s matrix of field ranks acting on column vectors."""

    ctx: FieldContext
    matrix: tuple

    def apply(self, pt) -> tuple:
        ctx = self.ctx
        out = []
        for row in self.matrix:
            acc = 0
            for a, x in zip(row, pt):
                acc = ctx.add(acc, ctx.mul(a, int(x)))
            out.append(acc)
        return tuple(out)

    def determinant(self) -> int:
        """Determinant by Gaussian elimination."""
        ctx = self.ctx
        m = [list(r) for r in self.matrix]
        n = len(m)
        det = 1
        for col in range(n):
            piv = next((r for r in range(col, n) if m[r][col]), None)
            if piv is None:
                return 0
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                det = ctx.neg(det)
            det = ctx.mul(det, m[col][col])
            inv = ctx.inv(m[col][col])
            for r in range(col + 1, n):
                if m[r][col]:
                    factor = ctx.mul(m[r][col], inv)
                    m[r] = [ctx.sub(a, ctx.mul(factor, b)) for a, b in zip(m[r], m[col])]
        return det

    @property
    def invertible(self) -> bool:
        return self.determinant() != 0


def is_simple(points) -> bool:
    firsts = [int(p[0]) for p in points]
    return len(set(firsts)) == len(firsts)


def simplify_points(ctx: FieldContext, U, rng, s: int | None = None,
                    max_tries: int = 10_000) -> LinearMap:
    """Invertible T whose first row is injective on U, so T(U) is simple.

    The first row is sampled uniformly until it separates U (each pair
    collides with probability 1/q), then completed to an invertible matrix
    with standard basis rows.
    """
    U = [tuple(int(c) for c in u) for u in U]
    if s is None:
        s = len(U[0]) if U else 1
    if math.comb(len(U), 2) >= ctx.q:
        raise PreconditionFailed(f"C({len(U)}, 2) >= q = {ctx.q}: no separating row guaranteed")
    if len(set(U)) <= 1:
        return LinearMap(ctx, tuple(tuple(int(i == j) for j in range(s)) for i in range(s)))
    for _ in range(max_tries):
        row = tuple(int(a) for a in rng.integers(0, ctx.q, size=s))
        images = [LinearMap(ctx, (row,)).apply(u)[0] for u in U]
        if len(set(images)) == len(set(U)):
            pivot = next(i for i, a in enumerate(row) if a)
            rows = [row] + [tuple(int(i == j) for j in range(s)) for i in range(s) if i != pivot]
            return LinearMap(ctx, tuple(rows))
    raise PreconditionFailed("no separating linear form found")


# --- counterexample to a Bezout-type count -----------------------------------

def tsimerman_fixture(p: int, d: int) -> tuple[list[SPoly], int]:
    """Three polynomials in (x, y, z) over GF(p) with d(d-1) common zeros.

    f1 = (a g(x) + h(y)) (a^p g(x) + h(y)) for a in GF(p^2) outside GF(p),
    g = prod_{i<d} (x - i), h = prod_{j<d-1} (y - j); f2 = f3 = z.  The
    product is expanded over GF(p^2), checked to be Frobenius invariant, and
    projected to GF(p).  Its degree is 2d, so prod deg f_i = 2d < d(d-1) once
    d >= 4.
    """
    if not is_prime(p):
        raise PreconditionFailed(f"{p} is not prime")
    if d < 1 or p < d + 1:
        raise PreconditionFailed("need d >= 1 and p >= d + 1")
    big = make_field(p, 2)
    a = p                      # the element X of GF(p^2), i.e. coefficients (0, 1)
    a_conj = big.frobenius(a)
    x, y = spoly_variable(big, 3, 0), spoly_variable(big, 3, 1)
    g = spoly_constant(big, 3, 1)
    for i in range(d):
        g = g * (x - spoly_constant(big, 3, i))
    h = spoly_constant(big, 3, 1)
    for j in range(d - 1):
        h = h * (y - spoly_constant(big, 3, j))
    f1 = (g * a + h) * (g * a_conj + h)
    for e, c in f1.terms.items():
        if big.frobenius(c) != c or not big.in_prime_field(c):
            raise AssertionError(f"coefficient of {e} is not Frobenius invariant")
    small = make_field(p, 1)
    f1p = SPoly(small, 3, dict(f1.terms))
    z = spoly_variable(small, 3, 2)
    return [f1p, z, z], d * (d - 1)
