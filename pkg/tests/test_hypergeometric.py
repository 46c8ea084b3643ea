from fractions import Fraction

import pytest

from hodge_convolution.convolution import conv_infinity, conv_rank
from hodge_convolution.errors import NonGenericResidue, PreconditionError
from hodge_convolution.hypergeometric import (
    HypergeometricSpec,
    falt_hyp2_expected,
    falt_hyp_expected,
    make_hypergeometric,
    make_kummer,
    make_rank_one,
)
from hodge_convolution.invariants import derive_tables, h1par_hodge, validate_module
from hodge_convolution.models import INFINITY, Absent, Blocks, GradedVector, JordanBlock, Point

SEVENTHS = [Fraction(i, 7) for i in range(1, 7)]


def block(p, a, l, mult=1):
    return JordanBlock(p, Fraction(a), l, mult)


def hyp(m, a):
    return make_hypergeometric(HypergeometricSpec(m, Fraction(a)))


def test_make_kummer():
    m = make_kummer("2/5")
    assert validate_module(m).ok
    assert derive_tables(m).omega_scalar == 2
    assert h1par_hodge(m).total() == 0


@pytest.mark.parametrize("mu", ["0", "1", "3/2", "-1/3"])
def test_make_kummer_rejects(mu):
    with pytest.raises(PreconditionError):
        make_kummer(mu)


def test_make_rank_one_closes_residues():
    m = make_rank_one({0: "1/3", 1: "1/4"})
    assert m.infinity == Blocks((block(0, "5/12", 1),))
    assert m.delta.as_dict() == {0: -1}
    assert validate_module(m).ok


def test_make_rank_one_integral_sum_is_smooth_at_infinity():
    m = make_rank_one({0: "1/2", 1: "1/2"}, degree=2)
    assert m.infinity == Blocks((block(2, 0, 1),))
    assert m.delta.as_dict() == {2: -1}


def test_make_hypergeometric_rank_one():
    m = hyp(1, "2/7")
    assert m.rank == 1
    assert m.at(Point(Fraction(0))) is None
    assert m.infinity == Blocks((block(0, "2/7", 1),))


def test_make_hypergeometric_three():
    m = hyp(3, "1/4")
    assert m.h.as_dict() == {0: 1, 1: 1, 2: 1}
    assert m.infinity == Blocks((block(2, "1/4", 3),))
    assert m.at(Point(Fraction(0))) == Absent(2)
    assert m.delta is None
    assert validate_module(m).ok


def test_hypergeometric_parameter_checks():
    with pytest.raises(PreconditionError):
        HypergeometricSpec(0, Fraction(1, 3))
    with pytest.raises(PreconditionError):
        HypergeometricSpec(2, Fraction(0))


def test_falt_hyp_examples():
    assert falt_hyp_expected(2, 2, "1/3", "1/2") == Blocks((block(2, "5/6", 3), block(1, "5/6", 1)))
    assert falt_hyp_expected(1, 1, "2/3", "3/5") == Blocks((block(1, "4/15", 1),))
    assert falt_hyp_expected(1, 1, "1/3", "2/5") == Blocks((block(0, "11/15", 1),))


def test_falt_hyp_integral_sum():
    with pytest.raises(NonGenericResidue):
        falt_hyp_expected(2, 3, "2/7", "5/7")


@pytest.mark.parametrize("m", range(1, 6))
@pytest.mark.parametrize("n", range(1, 6))
def test_falt_hyp_grid(m, n):
    branches = set()
    for a in SEVENTHS:
        for b in SEVENTHS:
            if (a + b).denominator == 1:
                continue
            mm, nn = hyp(m, a), hyp(n, b)
            got = conv_infinity(mm, nn, GradedVector(), GradedVector())
            assert got == falt_hyp_expected(m, n, a, b)
            assert sum(x.l * x.mult for x in got.blocks) == conv_rank(mm, nn) == m * n
            branches.add(a + b > 1)
    assert branches == {True, False}


def test_falt_hyp2():
    l = make_kummer("1/3")
    m = hyp(2, "1/7")
    expected = falt_hyp2_expected(l, 2, "1/7")
    assert expected == Blocks((block(1, "17/21", 2),))
    assert conv_infinity(l, m, GradedVector(), GradedVector()) == expected


def test_falt_hyp2_twisted_branch():
    l = make_kummer("1/3")
    assert falt_hyp2_expected(l, 3, "3/7") == Blocks((block(3, "2/21", 3),))


def test_falt_hyp2_rejects_unipotent():
    l = make_rank_one({0: "1/2", 1: "1/2"})
    with pytest.raises(NonGenericResidue):
        falt_hyp2_expected(l, 2, "1/7")


def test_infinity_is_singular_block():
    m = hyp(4, "3/7")
    assert m.has_infinity
    assert m.infinity_blocks() == (block(3, "3/7", 4),)
    assert m.at(INFINITY) == m.infinity
