from fractions import Fraction

import pytest

from hodge_convolution.errors import PreconditionError, UnknownFieldError, ValidationFailed
from hodge_convolution.hypergeometric import HypergeometricSpec, make_hypergeometric, make_kummer, make_rank_one
from hodge_convolution.invariants import (
    InvertCoordinate,
    Reflect,
    TateTwist,
    Translate,
    block_tables,
    derive_tables,
    differences,
    dual_module,
    h1par_hodge,
    h1par_of,
    project_module,
    reframe,
    validate_module,
)
from hodge_convolution.models import INFINITY, Aggregate, Blocks, Flags, JordanBlock, ModuleData, Point, ResidueTable

ZERO = Point(Fraction(0))


def block(p, a, l, mult=1):
    return JordanBlock(p, Fraction(a), l, mult)


def codes(m):
    return [v.code for v in validate_module(m).violations]


def test_unipotent_block_tables():
    t = block_tables((block(1, 0, 2),))
    assert t.nu.as_dict() == {(0, 0): 1, (1, 0): 1}
    assert t.mu_zero.as_dict() == {1: 1}
    assert t.kappa.as_dict() == {1: 1}
    assert t.omega.as_dict() == {0: 1}
    assert t.omega_u.as_dict() == {0: 1}
    assert t.omega_ss.is_zero()


def test_semisimple_block_tables():
    t = block_tables((block(2, "1/3", 3),))
    assert t.nu.as_dict() == {(q, Fraction(1, 3)): 1 for q in range(3)}
    assert t.omega.as_dict() == {0: 1, 1: 1, 2: 1}
    assert t.kappa.is_zero()
    assert t.omega_by_residue.as_dict() == t.nu.as_dict()


def test_kummer_tables():
    tables = derive_tables(make_kummer("2/5"))
    assert tables.at(ZERO).omega.as_dict() == {0: 1}
    assert tables.infinity.omega.as_dict() == {0: 1}
    assert tables.infinity.kappa.is_zero()
    assert tables.omega_scalar == 2
    assert tables.omega_total.as_dict() == {0: 2}


def test_aggregate_matches_blocks():
    blocks = Blocks((block(1, 0, 2), block(0, "1/2", 1)))
    m = ModuleData.build("M", {0: 2, 1: 1}, {0: -1, 1: 0}, [(ZERO, blocks), (INFINITY, blocks)])
    before = derive_tables(m).at(ZERO)
    after = derive_tables(project_module(m)).at(ZERO)
    assert isinstance(project_module(m).at(ZERO), Aggregate)
    assert (before.nu, before.mu_zero, before.omega, before.kappa) == (after.nu, after.mu_zero, after.omega, after.kappa)


def test_validate_kummer_passes():
    report = validate_module(make_kummer("2/5"))
    assert report.ok
    assert report.warnings == []


def test_validate_limit_dimension():
    m = ModuleData.build("M", {1: 1}, {1: -1}, [(ZERO, Blocks((block(0, "1/3", 1),))), (INFINITY, Blocks((block(1, "2/3", 1),)))])
    report = validate_module(m)
    assert not report.ok
    assert any("Σ_a ν^p ≠ h^p" in v.message for v in report.violations)


def test_validate_delta_support():
    k = make_kummer("2/5")
    m = ModuleData.build("M", {0: 1}, {1: -1}, k.points)
    report = validate_module(m)
    assert any("δ^p nonzero where h^p=0" in v.message for v in report.violations)
    with pytest.raises(ValidationFailed):
        report.raise_if_failed()


def test_validate_negative_kappa():
    agg = Aggregate(ResidueTable.of({(0, Fraction(1, 3)): 2}))
    m = ModuleData.build("M", {0: 1}, {0: -1}, [(ZERO, agg), (INFINITY, Blocks((block(0, "2/3", 1),)))])
    assert "kappa-negative" in codes(m)


def test_validate_warns_without_infinity():
    m = ModuleData.build("M", {0: 1}, {0: -1}, [(ZERO, Blocks((block(0, "2/5", 1),)))])
    report = validate_module(m)
    assert report.ok
    assert "missing Infinity entry" in report.warnings


def test_h1par_kummer_vanishes():
    assert h1par_hodge(make_kummer("2/5")).is_zero()


def test_h1par_three_points():
    m = make_rank_one({0: "4/15", 1: "1/3"})
    out = h1par_hodge(m)
    assert out.as_dict() == {1: 1}
    assert out.total() == derive_tables(m).omega_scalar - 2 * m.rank


def test_h1par_hypergeometric_is_stored_zero():
    m = make_hypergeometric(HypergeometricSpec(3, Fraction(1, 4)))
    assert h1par_of(m).is_zero()
    with pytest.raises(UnknownFieldError):
        h1par_hodge(m)


def test_h1par_needs_admissible_flags():
    m = make_kummer("1/3")
    bad = ModuleData.build(m.name, m.h, m.delta, m.points, None, Flags(nonconstant=False))
    with pytest.raises(PreconditionError):
        h1par_hodge(bad)


def test_tate_twist():
    m = reframe(make_kummer("2/5"), TateTwist(1))
    assert m.h.as_dict() == {1: 1}
    assert m.delta.as_dict() == {1: -1}
    assert m.at(ZERO) == Blocks((block(1, "2/5", 1),))
    assert m.infinity == Blocks((block(1, "3/5", 1),))


def test_translate():
    m = make_rank_one({0: "1/3", 1: "1/4"})
    moved = reframe(m, Translate(Fraction(3)))
    assert [x.label for x, _ in moved.points] == ["3", "4", "inf"]
    assert reframe(moved, Translate(Fraction(-3))) == m


def test_reflect():
    m = make_rank_one({1: "1/3", 2: "1/4"})
    assert [x.label for x, _ in reframe(m, Reflect(Fraction(1))).points] == ["-1", "0", "inf"]


def test_invert_coordinate():
    m = make_rank_one({1: "1/3", 2: "1/4"})
    inv = reframe(m, InvertCoordinate())
    assert [x.label for x, _ in inv.points] == ["0", "1/2", "1", "inf"]
    assert inv.at(ZERO) == m.infinity
    assert inv.infinity.is_trivial
    assert reframe(inv, InvertCoordinate()) == m


def test_invert_needs_free_slot():
    with pytest.raises(PreconditionError):
        reframe(make_kummer("1/3"), InvertCoordinate())
    swapped = reframe(make_kummer("1/3"), InvertCoordinate(allow_singular_zero=True))
    assert swapped.at(ZERO) == Blocks((block(0, "2/3", 1),))


def test_dual_of_kummer():
    d = dual_module(make_kummer("2/5"))
    assert d.delta.as_dict() == {0: -1}
    assert differences(d, make_kummer("3/5")) == []


def test_dual_twice_is_identity_numerically():
    m = make_rank_one({0: "1/3", 1: "1/4"}, degree=1)
    assert differences(dual_module(dual_module(m)), m) == []


def test_differences_report_fields():
    diff = differences(make_kummer("1/3"), make_kummer("2/5"))
    assert diff == ["local data at 0", "local data at inf"]
    assert differences(make_kummer("1/3"), reframe(make_kummer("1/3"), TateTwist(1)))[0].startswith("h:")
