from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Any, List, Mapping, Optional

from .errors import NonGenericResidue, PreconditionError
from .models import (
    INFINITY,
    Absent,
    Blocks,
    GradedVector,
    JordanBlock,
    LocalData,
    ModuleData,
    Point,
    as_rational,
    merge_blocks,
    mod1,
    trivial_orbit,
)
from .tensor import block_tensor

ZERO = Point(Fraction(0))
ONE_POINT = Point(Fraction(1))


def _open_residue(value: Any, what: str) -> Fraction:
    q = as_rational(value)
    if not (0 < q < 1):
        raise PreconditionError(f"{what} must lie in (0,1), got {q}")
    return q


def make_kummer(mu: Any) -> ModuleData:
    """L_χ: rank one, residue μ at 0 and 1−μ at ∞, Hodge degree 0."""
    mu = _open_residue(mu, "Kummer residue")
    return ModuleData.build(
        f"L({mu})",
        {0: 1},
        {0: -1},
        [
            (ZERO, Blocks((JordanBlock(0, mu, 1),))),
            (INFINITY, Blocks((JordanBlock(0, 1 - mu, 1),))),
        ],
        {},
    )


def make_rank_one(points: Mapping[Any, Any], degree: int = 0, name: Optional[str] = None) -> ModuleData:
    """
    Rank-one module with the given residues at finite points. The residue at ∞
    closes the sum to an integer, and δ is minus that integer.
    """
    local: List[tuple] = []
    total = Fraction(0)
    for x, a in points.items():
        a = _open_residue(a, f"residue at {x}")
        local.append((Point.finite(x), Blocks((JordanBlock(degree, a, 1),))))
        total += a
    a_inf = mod1(-total)
    total += a_inf
    if a_inf:
        local.append((INFINITY, Blocks((JordanBlock(degree, a_inf, 1),))))
    else:
        local.append((INFINITY, trivial_orbit(GradedVector.of({degree: 1}))))
    label = name or "R(" + ",".join(f"{Point.finite(x).label}:{as_rational(a)}" for x, a in points.items()) + ")"
    return ModuleData.build(label, {degree: 1}, {degree: -int(total)}, local)


@dataclass(frozen=True)
class HypergeometricSpec:
    m: int
    a_m: Fraction

    def __post_init__(self) -> None:
        if self.m < 1:
            raise PreconditionError(f"hypergeometric rank must be >= 1, got {self.m}")
        object.__setattr__(self, "a_m", _open_residue(self.a_m, "hypergeometric residue a_m"))


def make_hypergeometric(spec: HypergeometricSpec) -> ModuleData:
    """
    Partial data of the irreducible hypergeometric module M_m with a single
    Jordan block at ∞. Graded detail at 0 and 1 is unknown; only ω_0 = m−1 and
    ω_1 = 1 are recorded. δ is unknown.
    """
    m, a = spec.m, spec.a_m
    points: List[tuple[Point, LocalData]] = [
        (ONE_POINT, Absent(omega=1)),
        (INFINITY, Blocks((JordanBlock(m - 1, a, m),))),
    ]
    if m > 1:
        points.append((ZERO, Absent(omega=m - 1)))
    return ModuleData.build(f"M{m}({a})", {p: 1 for p in range(m)}, None, points, {})


def jordan_h_table(m: int, n: int) -> GradedVector:
    """h^p(M_m ⊗ N_n): p+1 up to min(m,n), flat at min(m,n), then m+n−p−1."""
    k = min(m, n)
    out = {}
    for p in range(m + n - 1):
        if p < k:
            out[p] = p + 1
        elif p < m + n - k:
            out[p] = k
        else:
            out[p] = m + n - p - 1
    return GradedVector.of(out)


def falt_hyp_expected(m: int, n: int, a_m: Any, b_n: Any) -> Blocks:
    """ψ_∞(M_m⋆̃N_n): the tensor of the two ∞-blocks, twisted by (−1) when a_m + b_n > 1."""
    a = _open_residue(a_m, "a_m")
    b = _open_residue(b_n, "b_n")
    if (a + b).denominator == 1:
        raise NonGenericResidue(f"a_m + b_n = {a + b} is an integer")
    twist = 1 if a + b > 1 else 0
    blocks = block_tensor(JordanBlock(m - 1, a, m), JordanBlock(n - 1, b, n))
    return Blocks(tuple(x.shifted(twist) for x in blocks))


def falt_hyp2_expected(l: ModuleData, m: int, a_m: Any) -> Blocks:
    """ψ_∞(L⋆̃M_m) for L without unipotent blocks at ∞, block by block."""
    a = _open_residue(a_m, "a_m")
    top = JordanBlock(m - 1, a, m)
    out: List[JordanBlock] = []
    for b in l.infinity_blocks():
        if b.a == 0:
            raise NonGenericResidue(f"{l.name} has a unipotent Jordan block at ∞: {b}")
        if (b.a + a).denominator == 1:
            raise NonGenericResidue(f"{l.name} ⊗ M{m}({a}) has a unipotent Jordan block at ∞ (residue {b.a})")
        out.extend(x.shifted(floor(b.a + a)) for x in block_tensor(b, top))
    return Blocks(merge_blocks(out))
