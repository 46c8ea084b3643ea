from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import PreconditionError, UnknownFieldError, UnrealizableDataError
from .invariants import Reflect, derive_tables, reframe
from .models import (
    INFINITY,
    Absent,
    Aggregate,
    Blocks,
    Flags,
    GradedVector,
    JordanBlock,
    LocalData,
    ModuleData,
    Point,
    ResidueTable,
    merge_blocks,
    mod1,
    trivial_orbit,
)

logger = logging.getLogger(__name__)

ZERO = Point(Fraction(0))


def block_tensor(b1: JordanBlock, b2: JordanBlock) -> Tuple[JordanBlock, ...]:
    """
    J^i(a,l) ⊗ J^j(b,m): residue (a+b) mod 1, sizes l+m−1, l+m−3, ... paired with top
    degrees i+j, i+j−1, ... (min(l,m) summands). Degrees add with no twist.
    """
    c = mod1(b1.a + b2.a)
    n = b1.mult * b2.mult
    return merge_blocks(
        JordanBlock(b1.p + b2.p - r, c, b1.l + b2.l - 1 - 2 * r, n) for r in range(min(b1.l, b2.l))
    )


def tensor_blocks(left: Iterable[JordanBlock], right: Iterable[JordanBlock]) -> Tuple[JordanBlock, ...]:
    right = tuple(right)
    out: List[JordanBlock] = []
    for b1 in left:
        for b2 in right:
            out.extend(block_tensor(b1, b2))
    return merge_blocks(out)


def tensor_at_infinity(v: ModuleData, l: ModuleData) -> Blocks:
    return Blocks(tensor_blocks(v.infinity_blocks(), l.infinity_blocks()))


def scale_local(data: LocalData, h: GradedVector) -> LocalData:
    """data ⊗ (a smooth factor with Hodge numbers h)."""
    if isinstance(data, Blocks):
        return Blocks(tuple(b.shifted(j).times(n) for b in data.blocks for j, n in h.items()))
    if isinstance(data, Aggregate):
        nu = ResidueTable()
        mu = GradedVector()
        for j, n in h.items():
            nu = nu + data.nu_nonzero.shift(j).scale(n)
            mu = mu + data.mu_zero.shift(j).scale(n)
        return Aggregate(nu, mu)
    return Absent(None if data.omega is None else data.omega * h.total())


def tensor_local(d1: LocalData, h1: GradedVector, d2: LocalData, h2: GradedVector, where: str = "") -> LocalData:
    if isinstance(d1, Blocks) and d1.is_trivial:
        return scale_local(d2, h1)
    if isinstance(d2, Blocks) and d2.is_trivial:
        return scale_local(d1, h2)
    if isinstance(d1, Blocks) and isinstance(d2, Blocks):
        return Blocks(tensor_blocks(d1.blocks, d2.blocks))
    raise UnknownFieldError(f"field unknown: Jordan blocks of both factors at common point {where or '?'}")


# ---------------------------------------------------------------------------
# global data


@dataclass(frozen=True)
class TensorProduct:
    h: GradedVector
    delta: GradedVector
    o_terms: Dict[Point, GradedVector] = field(default_factory=dict)


def o_term(nu_v: ResidueTable, nu_l: ResidueTable) -> GradedVector:
    """o^l_x = Σ_p Σ_{a+b≥1} ν^p_{x,a}(V)·ν^{l−p}_{x,b}(L)"""
    return GradedVector.summed(
        (p + q, m * n) for (p, a), m in nu_v.items() for (q, b), n in nu_l.items() if a + b >= 1
    )


def common_points(v: ModuleData, l: ModuleData) -> List[Point]:
    mine = {x for x, _ in v.points}
    return [x for x, _ in l.points if x in mine]


def tensor_global(v: ModuleData, l: ModuleData, relocation: Optional[Fraction] = None) -> TensorProduct:
    """h, δ and o-terms of V⊗L, or of V⊗L(t−x) when a relocation t is given."""
    if relocation is not None:
        l = reframe(l, Reflect(Fraction(relocation)))
    tv, tl = derive_tables(v), derive_tables(l)
    o_terms: Dict[Point, GradedVector] = {}
    for x in common_points(v, l):
        o = o_term(tv.at(x).nu, tl.at(x).nu)
        if o:
            o_terms[x] = o
    h = v.h.convolve(l.h)
    delta = v.require_delta().convolve(l.h) + v.h.convolve(l.require_delta())
    for o in o_terms.values():
        delta = delta + o
    for p, d in delta.items():
        if d and h[p] == 0:
            raise UnrealizableDataError(f"tensor degree {d} in Hodge degree {p} where h^{p}=0")
    logger.debug("tensor_global %s ⊗ %s: o-terms at %s", v.name, l.name, [x.label for x in o_terms])
    return TensorProduct(h=h, delta=delta, o_terms=o_terms)


def generic_shift(v: ModuleData, l: ModuleData) -> Fraction:
    """Smallest integer strictly above every x + y; 1 when either side has no finite point."""
    sums = [x.coord + y.coord for x in v.finite_points() for y in l.finite_points()]
    if not sums:
        return Fraction(1)
    return Fraction(floor(max(sums)) + 1)


def tensor_module(v: ModuleData, l: ModuleData, relocation: Optional[Fraction] = None) -> ModuleData:
    """The full numeric data of V⊗L, or of V⊗L(t−x)."""
    if relocation is not None:
        l = reframe(l, Reflect(Fraction(relocation)))
    g = tensor_global(v, l)
    xs = sorted({x for x, _ in v.points} | {x for x, _ in l.points}, key=Point.sort_key)
    points: List[Tuple[Point, LocalData]] = []
    for x in xs:
        dv = v.at(x)
        dl = l.at(x)
        if dv is None and not x.is_infinity:
            dv = trivial_orbit(v.h)
        if dl is None and not x.is_infinity:
            dl = trivial_orbit(l.h)
        if dv is None or dl is None:
            continue
        points.append((x, tensor_local(dv, v.h, dl, l.h, x.label)))
    return ModuleData.build(
        f"{v.name}⊗{l.name}",
        g.h,
        g.delta,
        points,
        None,
        Flags(irreducible=False, irreducibility_waived=True),
    )


# ---------------------------------------------------------------------------
# Kummer twist


def _rank_one(name: str, at_zero: Fraction, at_inf: Fraction) -> ModuleData:
    return ModuleData.build(
        name,
        {0: 1},
        {0: -1},
        [(ZERO, Blocks((JordanBlock(0, at_zero, 1),))), (INFINITY, Blocks((JordanBlock(0, at_inf, 1),)))],
        {},
    )


def _shift_residues(data: LocalData, s: Fraction, h: GradedVector, where: str) -> LocalData:
    if isinstance(data, Blocks):
        return Blocks(tuple(JordanBlock(b.p, mod1(b.a + s), b.l, b.mult) for b in data.blocks))
    if isinstance(data, Aggregate):
        if not data.mu_zero.is_zero():
            raise UnknownFieldError(
                f"field unknown: Jordan structure at {where} (a unipotent part with μ_0 moves to residue {s})"
            )
        moved = data.nu_nonzero.map_keys(lambda k: (k[0], mod1(k[1] + s)))
        if any(a == 0 for _, a in moved.keys()):
            raise UnknownFieldError(
                f"field unknown: Jordan structure at {where} (a nonzero residue lands on 0 under the twist)"
            )
        nu0 = h - data.nu_nonzero.by_degree()
        extra = ResidueTable.summed(((p, s), n) for p, n in nu0.items())
        return Aggregate(moved + extra, GradedVector())
    return data


def kummer_twist(v: ModuleData, mu: Fraction, sign: int = 1) -> ModuleData:
    """V ⊗ L_χ (sign +1) or V ⊗ L_χ̄ (sign −1), for the Kummer character with residue μ at 0."""
    mu = Fraction(mu)
    if not (0 < mu < 1):
        raise PreconditionError(f"Kummer residue must lie in (0,1), got {mu}")
    if sign not in (1, -1):
        raise PreconditionError(f"twist sign must be +1 or -1, got {sign}")
    s0 = mu if sign == 1 else 1 - mu
    s_inf = 1 - s0
    factor = _rank_one(f"L({s0})", s0, s_inf)
    points: List[Tuple[Point, LocalData]] = []
    for x, d in v.points:
        if x == ZERO:
            d = _shift_residues(d, s0, v.h, "0")
        elif x.is_infinity:
            d = _shift_residues(d, s_inf, v.h, "inf")
        points.append((x, d))
    if v.at(ZERO) is None:
        points.append((ZERO, Blocks(tuple(JordanBlock(p, s0, 1, n) for p, n in v.h.items()))))
    g = tensor_global(v, factor)
    return ModuleData.build(f"{v.name}⊗{factor.name}", v.h, g.delta, points, None, v.flags)
