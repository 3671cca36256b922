import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kstfree.errors import PreconditionFailed
from kstfree.ffield import make_field
from kstfree.mpoly import restrict_left, sample_uniform, spoly_constant, spoly_variable
from kstfree.rng import make_rng, substream
from kstfree.variety import (LinearMap, Verdict, classify_size, classify_variety, common_zeros,
                             count_common_zeros, dichotomy_scan, is_simple, simplify_points,
                             sample_simple_points, tsimerman_fixture)


class StubRng:
    """Deterministic stand-in: integer draws are zero, choices are 0, 1, 2, ..."""

    def integers(self, low, high=None, size=None):
        return np.zeros(size, dtype=np.int64)

    def choice(self, a, size=None, replace=True):
        return np.arange(size)


def test_common_zeros_examples():
    F = make_field(5)
    x, y = spoly_variable(F, 2, 0), spoly_variable(F, 2, 1)
    one = spoly_constant(F, 2, 1)
    assert common_zeros([x - y, x * x - one], F, 2) == {(1, 1), (4, 4)}
    assert count_common_zeros([x - y], F, 2) == 5
    assert count_common_zeros([], F, 2) == 25
    assert common_zeros([one], F, 2) == set()


def test_common_zeros_wrong_arity():
    F = make_field(3)
    with pytest.raises(PreconditionFailed):
        common_zeros([spoly_variable(F, 3, 0)], F, 2)


def test_classify_examples():
    assert classify_size(0, 49, 4).verdict is Verdict.ZERO_DIMENSIONAL
    assert classify_size(4, 49, 4).verdict is Verdict.ZERO_DIMENSIONAL
    assert classify_size(21, 49, 4).verdict is Verdict.HIGHER_DIMENSIONAL   # 49 - 4*7
    assert classify_size(20, 49, 4).verdict is Verdict.GAP_VIOLATION
    assert classify_size(5, 49, 4, rule="half").verdict is Verdict.GAP_VIOLATION
    assert classify_size(25, 49, 4, rule="half").verdict is Verdict.HIGHER_DIMENSIONAL
    F = make_field(7)
    x = spoly_variable(F, 2, 0)
    assert classify_variety([x], F, 2, 4).verdict is Verdict.HIGHER_DIMENSIONAL


def test_scan_with_no_trials():
    rep = dichotomy_scan(make_field(7), 2, 2, 4, 0)
    assert rep.trials == 0 and rep.violations == [] and rep.max_low is None
    assert rep.to_csv() == "trial,size,verdict\n"


def test_scan_with_stub_rng():
    F = make_field(5)
    rep = dichotomy_scan(F, 2, 2, 4, 3, rng=StubRng())
    assert rep.sizes == [25, 25, 25]
    assert all(v is Verdict.HIGHER_DIMENSIONAL for v in rep.verdicts)


def test_scan_sizes_match_common_zeros():
    F = make_field(5)
    rep = dichotomy_scan(F, 2, 2, 4, 20, rng=3)
    # recompute trials from their substreams by direct enumeration
    for trial in (0, 7, 19):
        gen = substream(3, trial)
        f = sample_uniform(F, 2, 2, gen)
        U = sample_simple_points(F, 2, 2, gen)
        assert is_simple(U)
        polys = [restrict_left(f, tuple(u)) for u in U]
        assert count_common_zeros(polys, F, 2) == rep.sizes[trial]


def test_scan_is_deterministic():
    F = make_field(7)
    a = dichotomy_scan(F, 2, 2, 4, 30, rng=5)
    b = dichotomy_scan(F, 2, 2, 4, 30, rng=5)
    assert a.sizes == b.sizes and a.digests == b.digests


def test_suggested_threshold():
    rep = dichotomy_scan(make_field(7), 2, 2, 4, 50, rng=1)
    assert rep.suggested_threshold() == rep.max_low + 1


# --- linear maps and simple sets --------------------------------------------

def det_by_permutations(F, m):
    n = len(m)
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = 1
        for i in range(n):
            term = F.mul(term, m[i][perm[i]])
        total = F.sub(total, term) if inversions % 2 else F.add(total, term)
    return total


@pytest.mark.parametrize("p,k", [(5, 1), (2, 2), (3, 2)])
def test_determinant_matches_permutation_expansion(p, k):
    F = make_field(p, k)
    rng = np.random.default_rng(p * 10 + k)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        m = tuple(tuple(int(v) for v in row) for row in rng.integers(0, F.q, (n, n)))
        assert LinearMap(F, m).determinant() == det_by_permutations(F, m)


def test_simplify_examples():
    F = make_field(11)
    U = [(1, 0), (1, 5), (1, 7)]
    assert not is_simple(U)
    T = simplify_points(F, U, make_rng(0))
    assert T.invertible
    assert is_simple([T.apply(u) for u in U])


def test_simplify_trivial_sets():
    F = make_field(5)
    assert simplify_points(F, [(2, 3)], make_rng(0)).matrix == ((1, 0), (0, 1))
    assert simplify_points(F, [], make_rng(0), s=3).invertible


def test_simplify_precondition():
    F = make_field(5)
    U = [(0, i) for i in range(4)]        # C(4, 2) = 6 >= 5
    with pytest.raises(PreconditionFailed):
        simplify_points(F, U, make_rng(0))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), size=st.integers(2, 4), s=st.integers(2, 3))
def test_simplify_property(seed, size, s):
    F = make_field(3, 2) if seed % 2 else make_field(13)
    gen = np.random.default_rng(seed)
    U = {tuple(int(c) for c in gen.integers(0, F.q, s)) for _ in range(size)}
    T = simplify_points(F, sorted(U), make_rng(seed))
    assert T.invertible
    assert is_simple([T.apply(u) for u in U])


# --- the counterexample -------------------------------------------------------

def zero_count_2d(p, d, modulus):
    """Oracle: f1(x, y, 0) is the norm m0 g^2 - m1 g h + h^2 of a g + h."""
    m0, m1 = modulus[0], modulus[1]
    count = 0
    for x, y in itertools.product(range(p), repeat=2):
        g = math.prod(x - i for i in range(d)) % p
        h = math.prod(y - j for j in range(d - 1)) % p
        if (m0 * g * g - m1 * g * h + h * h) % p == 0:
            count += 1
    return count


def test_tsimerman_p5_d4():
    polys, expected = tsimerman_fixture(5, 4)
    F = make_field(5)
    W = common_zeros(polys, F, 3)
    assert len(W) == expected == 12
    assert math.prod(g.degree for g in polys) == 8
    assert W == {(i, j, 0) for i in range(4) for j in range(3)}


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_tsimerman_exhaustive(p, d):
    if p < d + 1:
        with pytest.raises(PreconditionFailed):
            tsimerman_fixture(p, d)
        return
    polys, expected = tsimerman_fixture(p, d)
    F = make_field(p)
    assert count_common_zeros(polys, F, 3) == expected == d * (d - 1)
    assert zero_count_2d(p, d, make_field(p, 2).modulus) == expected
    assert polys[0].degree == 2 * d


def test_tsimerman_rejects_composite():
    with pytest.raises(PreconditionFailed):
        tsimerman_fixture(4, 2)
