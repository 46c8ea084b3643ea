from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy import Matrix, eye

from hodge_convolution.errors import PreconditionError, UnknownFieldError
from hodge_convolution.hypergeometric import jordan_h_table, make_kummer, make_rank_one
from hodge_convolution.invariants import block_tables, differences
from hodge_convolution.models import (
    INFINITY,
    Aggregate,
    Blocks,
    GradedVector,
    JordanBlock,
    ModuleData,
    Point,
    ResidueTable,
)
from hodge_convolution.tensor import (
    block_tensor,
    generic_shift,
    kummer_twist,
    tensor_at_infinity,
    tensor_blocks,
    tensor_global,
    tensor_module,
)

ZERO = Point(Fraction(0))

residues = st.fractions(min_value=0, max_value=Fraction(29, 30), max_denominator=30)
blocks = st.builds(
    JordanBlock,
    p=st.integers(-3, 3),
    a=residues,
    l=st.integers(1, 5),
    mult=st.integers(1, 3),
)


def block(p, a, l, mult=1):
    return JordanBlock(p, Fraction(a), l, mult)


def nilpotent(n):
    return Matrix(n, n, lambda i, j: 1 if j == i + 1 else 0)


def kron(a, b):
    n, m = a.shape[0], b.shape[0]
    return Matrix(n * m, n * m, lambda r, c: a[r // m, c // m] * b[r % m, c % m])


def jordan_sizes(nil):
    """Block sizes of a nilpotent matrix from the ranks of its powers."""
    n = nil.shape[0]
    ranks = [n]
    power = eye(n)
    while ranks[-1]:
        power = power * nil
        ranks.append(power.rank())
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))] + [0]
    sizes = []
    for k in range(1, len(at_least)):
        sizes += [k] * (at_least[k - 1] - at_least[k])
    return sorted(sizes, reverse=True)


def single_block_module(m, a):
    return ModuleData.build(
        f"S{m}", {p: 1 for p in range(m)}, {}, [(INFINITY, Blocks((JordanBlock(m - 1, Fraction(a), m),)))]
    )


def test_identity_block():
    b = block(2, "2/3", 3)
    assert block_tensor(block(0, 0, 1), b) == (b,)


def test_block_tensor_examples():
    assert block_tensor(block(1, "1/3", 2), block(1, "1/2", 2)) == (block(2, "5/6", 3), block(1, "5/6", 1))
    assert block_tensor(block(2, "2/3", 3), block(1, "3/4", 2)) == (block(3, "5/12", 4), block(2, "5/12", 2))
    assert block_tensor(block(0, "2/3", 1), block(0, "3/5", 1)) == (block(0, "4/15", 1),)


def test_tensor_blocks_per_pair():
    out = tensor_blocks([block(1, 0, 2)], [block(0, "1/2", 1), block(1, "1/2", 1)])
    assert set(out) == {block(1, "1/2", 2), block(2, "1/2", 2)}


@pytest.mark.parametrize("l", range(1, 7))
@pytest.mark.parametrize("m", range(1, 7))
def test_block_tensor_matches_kronecker_sum(l, m):
    nil = kron(nilpotent(l), eye(m)) + kron(eye(l), nilpotent(m))
    out = block_tensor(block(0, 0, l), block(0, 0, m))
    sizes = sorted((b.l for b in out for _ in range(b.mult)), reverse=True)
    assert sizes == list(range(l + m - 1, abs(l - m), -2))
    assert sizes == jordan_sizes(nil)
    assert sum(sizes) == l * m


@given(blocks, blocks)
def test_block_tensor_dimension_and_symmetry(b1, b2):
    out = block_tensor(b1, b2)
    assert sum(b.l * b.mult for b in out) == b1.l * b2.l * b1.mult * b2.mult
    assert out == block_tensor(b2, b1)


@pytest.mark.parametrize("m", range(1, 7))
@pytest.mark.parametrize("n", range(1, 7))
def test_h_table_of_single_block_tensors(m, n):
    v, l = single_block_module(m, "1/7"), single_block_module(n, "1/7")
    assert tensor_global(v, l).h == jordan_h_table(m, n)
    assert block_tables(tensor_at_infinity(v, l).blocks).nu_total == jordan_h_table(m, n)


def test_h_table_two_by_three():
    assert jordan_h_table(2, 3).as_dict() == {0: 1, 1: 2, 2: 2, 3: 1}


def test_tensor_global_kummers():
    tp = tensor_global(make_kummer("1/3"), make_kummer("2/5"))
    assert tp.h.as_dict() == {0: 1}
    assert tp.delta.as_dict() == {0: -1}
    assert list(tp.o_terms) == [INFINITY]
    assert tp.o_terms[INFINITY].as_dict() == {0: 1}


def test_tensor_global_is_symmetric():
    v, l = make_rank_one({0: "1/3", 1: "1/4"}), make_kummer("3/5")
    a, b = tensor_global(v, l), tensor_global(l, v)
    assert (a.h, a.delta) == (b.h, b.delta)


def test_relocation_separates_finite_points():
    v, l = make_kummer("1/3"), make_kummer("2/5")
    t = generic_shift(v, l)
    assert t == 1
    tp = tensor_global(v, l, t)
    assert list(tp.o_terms) == [INFINITY]
    assert tp.delta.as_dict() == {0: -1}
    tm = tensor_module(v, l, t)
    assert [x.label for x, _ in tm.points] == ["0", "1", "inf"]
    assert tm.infinity == Blocks((block(0, "4/15", 1),))


def test_kummer_twist_of_kummer():
    w = kummer_twist(make_kummer("1/3"), Fraction(2, 5))
    assert w.at(ZERO) == Blocks((block(0, "11/15", 1),))
    assert w.infinity == Blocks((block(0, "4/15", 1),))
    assert w.delta.as_dict() == {0: -1}


@pytest.mark.parametrize("v", [make_kummer("1/3"), make_rank_one({1: "1/4"}), make_rank_one({-1: "1/2", 2: "1/6"}, degree=1)])
def test_kummer_twist_inverse(v):
    mu = Fraction(2, 5)
    back = kummer_twist(kummer_twist(v, mu, 1), mu, -1)
    assert differences(back, v) == []


def test_kummer_twist_adds_zero():
    v = make_rank_one({1: "1/4"})
    w = kummer_twist(v, Fraction(2, 5))
    assert w.at(ZERO) == Blocks((block(0, "2/5", 1),))
    assert w.infinity == Blocks((block(0, "7/20", 1),))


@pytest.mark.parametrize("mu, sign", [(Fraction(0), 1), (Fraction(1), 1), (Fraction(1, 2), 2)])
def test_kummer_twist_rejects(mu, sign):
    with pytest.raises(PreconditionError):
        kummer_twist(make_kummer("1/3"), mu, sign)


def aggregate_kummer(mu):
    mu = Fraction(mu)
    return ModuleData.build(
        f"A({mu})",
        {0: 1},
        {0: -1},
        [
            (ZERO, Aggregate(ResidueTable.of({(0, mu): 1}))),
            (INFINITY, Blocks((block(0, 1 - mu, 1),))),
        ],
    )


def test_kummer_twist_round_trip_on_aggregate_data():
    v = aggregate_kummer("1/3")
    mu = Fraction(2, 5)
    w = kummer_twist(v, mu, 1)
    assert w.at(ZERO) == Aggregate(ResidueTable.of({(0, Fraction(11, 15)): 1}))
    assert differences(w, kummer_twist(make_kummer("1/3"), mu, 1)) == []
    assert differences(kummer_twist(w, mu, -1), v) == []


def test_kummer_twist_rejects_aggregate_unipotent_part():
    v = ModuleData.build(
        "U",
        {0: 1, 1: 1},
        {0: -1, 1: -1},
        [
            (ZERO, Aggregate(ResidueTable(), GradedVector.of({1: 1}))),
            (INFINITY, Blocks((block(1, "1/2", 2),))),
        ],
    )
    with pytest.raises(UnknownFieldError, match="unipotent part"):
        kummer_twist(v, Fraction(2, 5))
