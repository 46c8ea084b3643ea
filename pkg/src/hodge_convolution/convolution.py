from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import floor, lcm
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from .errors import (
    HodgeDataError,
    NonGenericResidue,
    PreconditionError,
    PunctualConvolution,
    UndeclaredSkyscraper,
    UnrealizableDataError,
)
from .hypergeometric import make_kummer
from .invariants import (
    InvertCoordinate,
    Reflect,
    TateTwist,
    block_tables,
    derive_tables,
    differences,
    dual_module,
    h1par_hodge,
    h1par_of,
    parabolic_numbers,
    reframe,
    validate_module,
)
from .models import (
    INFINITY,
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
)
from .schema import dumps, module_to_obj
from .tensor import block_tensor, generic_shift, kummer_twist, o_term, tensor_at_infinity, tensor_module

logger = logging.getLogger(__name__)

ZERO = Point(Fraction(0))
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# report types


@dataclass(frozen=True)
class SkyscraperCandidate:
    """A possible summand δ_c(−q−1) of V⋆L. Numeric data can only say "possible"."""

    c: Point
    q: int
    verdict: str = "possible"

    @property
    def epsilon(self) -> GradedVector:
        return GradedVector.of({self.q: 1})


@dataclass(frozen=True)
class AssumeNoSkyscraper:
    pass


@dataclass(frozen=True)
class DeclaredSkyscraper:
    c: Fraction
    q: int


SkyscraperMode = Union[AssumeNoSkyscraper, DeclaredSkyscraper]


@dataclass(frozen=True)
class NearOne:
    """Kummer residue μ taken closer to 1 than every residue gap of the input."""


NEAR_ONE = NearOne()


@dataclass
class CrossCheck:
    name: str
    passed: bool
    details: str = ""


@dataclass
class ConvolutionReport:
    left: str
    right: str
    result: Optional[ModuleData] = None
    skyscraper: Optional[SkyscraperCandidate] = None
    cross_checks: List[CrossCheck] = field(default_factory=list)
    genericity: List[str] = field(default_factory=list)

    @property
    def epsilon(self) -> GradedVector:
        return self.skyscraper.epsilon if self.skyscraper is not None else GradedVector()

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.cross_checks)

    def check(self, name: str, passed: bool, details: str = "") -> None:
        self.cross_checks.append(CrossCheck(name, bool(passed), details))
        if not passed:
            logger.warning("%s ⋆ %s: cross-check %s failed: %s", self.left, self.right, name, details)


# ---------------------------------------------------------------------------
# finite points


def _phi_graded(tables) -> List[Tuple[Tuple[int, Fraction], int]]:
    """grφ in the (0,1] convention: residue 0 becomes 1, read off μ_0."""
    out = [((p, a), n) for (p, a), n in tables.nu.items() if a != 0]
    out.extend(((p, ONE), n) for p, n in tables.mu_zero.items())
    return out


def ts_finite(v: ModuleData, l: ModuleData) -> Dict[Point, Aggregate]:
    """Graded vanishing-cycle numbers of V⋆L at every t = x + y."""
    tv, tl = derive_tables(v), derive_tables(l)
    acc: Dict[Fraction, Dict[Tuple[int, Fraction], int]] = {}
    right = [(y, _phi_graded(t)) for y, t in tl.finite()]
    for x, txs in tv.finite():
        left = _phi_graded(txs)
        for y, phi_l in right:
            cell = acc.setdefault(x.coord + y.coord, {})
            for (i, a1), m in left:
                for (k, a2), n in phi_l:
                    s = a1 + a2
                    key = (i + k + 1, s) if s <= 1 else (i + k, s - 1)
                    cell[key] = cell.get(key, 0) + m * n

    out: Dict[Point, Aggregate] = {}
    for t in sorted(acc):
        nu = ResidueTable.summed(((p, a), n) for (p, a), n in acc[t].items() if a < 1)
        mu = GradedVector.summed((p, n) for (p, a), n in acc[t].items() if a == 1)
        agg = Aggregate(nu, mu)
        if not agg.is_trivial:
            out[Point(t)] = agg
            logger.debug("ts_finite %s ⋆ %s at %s: ν=%s μ0=%s", v.name, l.name, t, nu.as_dict(), mu.as_dict())
    return out


def omega_transport(v: ModuleData, l: ModuleData) -> GradedVector:
    """ω^p_{≠∞}(V⋆L) from the ω-by-residue tables: a+b ≥ 1 lands in degree i+j, a+b < 1 in i+j+1."""
    rv = derive_tables(v).omega_by_residue_not_infty
    rl = derive_tables(l).omega_by_residue_not_infty
    return GradedVector.summed(
        (i + j if a + b >= 1 else i + j + 1, m * n) for (i, a), m in rv.items() for (j, b), n in rl.items()
    )


# ---------------------------------------------------------------------------
# global data


def _conv_h_raw(v: ModuleData, l: ModuleData) -> GradedVector:
    t = generic_shift(v, l)
    tm = tensor_module(v, l, t)
    omega = derive_tables(tm).omega_total
    return parabolic_numbers(tm.h, tm.require_delta(), omega)


def conv_h(v: ModuleData, l: ModuleData) -> GradedVector:
    """Hodge numbers of V⋆̃L, read off the parabolic cohomology of V⊗L(t−x) at a generic t."""
    out = _conv_h_raw(v, l)
    if out.is_zero():
        raise PunctualConvolution(f"punctual convolution: {v.name} ⋆ {l.name} vanishes")
    if not out.nonnegative():
        raise UnrealizableDataError(f"unrealizable data: negative Hodge number in {v.name} ⋆ {l.name}: {out.as_dict()}")
    return out


def conv_rank(v: ModuleData, l: ModuleData) -> int:
    """rk(V⋆̃L) from scalar ω data alone; works on partial data with ω annotations."""
    tv, tl = derive_tables(v), derive_tables(l)
    rv, rl = v.rank, l.rank
    inf = block_tables(tensor_at_infinity(v, l).blocks).omega.total()
    return rl * tv.omega_not_infty_scalar + rv * tl.omega_not_infty_scalar + inf - 2 * rv * rl


def conv_delta(v: ModuleData, l: ModuleData) -> GradedVector:
    tv, tl = derive_tables(v), derive_tables(l)
    dv, dl = v.require_delta(), l.require_delta()
    wv, wl = tv.omega_not_infty, tl.omega_not_infty
    return (
        wv.convolve(dl).shift(1)
        + dv.convolve(wl).shift(1)
        + dv.convolve(dl).shift(1)
        - dv.convolve(dl)
        + o_term(tv.omega_by_residue_not_infty, tl.omega_by_residue_not_infty).shift(1)
        + o_term(tv.infinity.omega_by_residue, tl.infinity.omega_by_residue)
    )


# ---------------------------------------------------------------------------
# infinity


def _expand(b: JordanBlock) -> JordanBlock:
    return JordanBlock(b.p + 1, b.a, b.l + 1, b.mult)


def _trim(b: JordanBlock) -> Optional[JordanBlock]:
    if b.a != 0:
        return b
    if b.l == 1:
        return None
    return JordanBlock(b.p - 1, b.a, b.l - 1, b.mult)


def _trimmed(blocks: Iterable[JordanBlock]) -> List[JordanBlock]:
    return [t for t in (_trim(b) for b in blocks) if t is not None]


def _cross_term(blocks: Iterable[JordanBlock], h1par: GradedVector) -> List[JordanBlock]:
    return [b.shifted(k).times(n) for b in blocks for k, n in h1par.items() if n > 0]


def conv_infinity(v: ModuleData, l: ModuleData, h1par_v: GradedVector, h1par_l: GradedVector) -> Blocks:
    """Nilpotent orbit of V⋆̃L at ∞ from the ∞-orbits of the factors and their H^1_par numbers."""
    left, right = v.infinity_blocks(), l.infinity_blocks()
    out: List[JordanBlock] = []
    for bv in left:
        for bl in right:
            a, b = bv.a, bl.a
            if a and b:
                if a + b != 1:
                    out.extend(x.shifted(floor(a + b)) for x in block_tensor(bv, bl))
                else:
                    out.extend(x.shifted(1) for x in _trimmed(block_tensor(bv, bl)))
            elif b:
                out.extend(block_tensor(_expand(bv), bl))
            elif a:
                out.extend(block_tensor(bv, _expand(bl)))
            else:
                out.extend(_trimmed(block_tensor(_expand(bv), _expand(bl))))
    out.extend(_cross_term(left, h1par_l))
    out.extend(_cross_term(right, h1par_v))
    return Blocks(merge_blocks(out))


def kummer_infinity(v: ModuleData, mu: Fraction, h1par_v: GradedVector) -> Blocks:
    """∞-orbit of V⋆L_χ for a generic Kummer residue μ, block by block."""
    out: List[JordanBlock] = []
    for b in v.infinity_blocks():
        if b.a == 0:
            out.append(JordanBlock(b.p + 1, 1 - mu, b.l + 1, b.mult))
        elif b.a < mu:
            out.append(JordanBlock(b.p, b.a + 1 - mu, b.l, b.mult))
        elif b.a == mu:
            if b.l > 1:
                out.append(JordanBlock(b.p, Fraction(0), b.l - 1, b.mult))
        else:
            out.append(JordanBlock(b.p + 1, b.a - mu, b.l, b.mult))
    out.extend(JordanBlock(k, 1 - mu, 1, n) for k, n in h1par_v.items() if n > 0)
    return Blocks(merge_blocks(out))


# ---------------------------------------------------------------------------
# skyscrapers


def _candidate_shift(v: ModuleData, l: ModuleData) -> Optional[int]:
    sv, sl = v.h.span(), l.h.span()
    if sv is None or sl is None:
        return None
    return sv[1] + sl[0]


def skyscraper_check(v: ModuleData, l: ModuleData) -> Optional[SkyscraperCandidate]:
    """
    Searches for (c, q) with L numerically equal to the dual of V(q) pulled back
    along x ↦ c − x. Only necessary conditions are tested.
    """
    if v.rank != l.rank:
        return None
    q = _candidate_shift(v, l)
    if q is None:
        return None
    sums = sorted({x.coord + y.coord for x in v.finite_points() for y in l.finite_points()})
    try:
        base = dual_module(reframe(v, TateTwist(-q)))
    except HodgeDataError as e:
        logger.debug("skyscraper search %s ⋆ %s skipped: %s", v.name, l.name, e)
        return None
    for c in sums:
        try:
            diff = differences(reframe(base, Reflect(c)), l)
        except HodgeDataError as e:
            logger.debug("skyscraper candidate c=%s for %s ⋆ %s not comparable: %s", c, v.name, l.name, e)
            continue
        if not diff:
            logger.debug("skyscraper candidate for %s ⋆ %s: c=%s q=%s", v.name, l.name, c, q)
            return SkyscraperCandidate(Point(c), q)
    return None


# ---------------------------------------------------------------------------
# middle convolution


def _require_admissible(m: ModuleData) -> None:
    if not m.flags.admissible:
        raise PreconditionError(
            f"{m.name}: middle convolution needs the minimal extension of an irreducible nonconstant variation"
        )


def _remove_skyscraper(finite: Dict[Point, Aggregate], sky: SkyscraperCandidate) -> Dict[Point, Aggregate]:
    agg = finite.get(sky.c)
    if agg is None or agg.mu_zero[sky.q + 1] < 1:
        raise PreconditionError(
            f"declared skyscraper at c={sky.c.label}, q={sky.q} has no μ^{sky.q + 1}_0 at that point to remove"
        )
    out = dict(finite)
    out[sky.c] = Aggregate(agg.nu_nonzero, agg.mu_zero - GradedVector.of({sky.q + 1: 1}))
    return out


def middle_convolution(
    v: ModuleData,
    l: ModuleData,
    mode: Optional[SkyscraperMode] = None,
) -> ConvolutionReport:
    for m in (v, l):
        _require_admissible(m)
        validate_module(m).raise_if_failed()

    report = ConvolutionReport(left=v.name, right=l.name)
    candidate = skyscraper_check(v, l)
    sums = sorted({x.coord + y.coord for x in v.finite_points() for y in l.finite_points()})
    report.genericity.append(f"sum set: {[str(s) for s in sums]}")
    report.genericity.append(
        "skyscraper candidate: none"
        if candidate is None
        else f"skyscraper candidate: c={candidate.c.label}, q={candidate.q} ({candidate.verdict}; isomorphism not decided)"
    )

    h = _conv_h_raw(v, l)
    if h.is_zero():
        report.skyscraper = candidate
        msg = "punctual convolution"
        if candidate is not None:
            msg += f": skyscraper at c={candidate.c.label}, q={candidate.q}"
        raise PunctualConvolution(msg, report)
    if not h.nonnegative():
        raise UnrealizableDataError(f"unrealizable data: negative Hodge number in {v.name} ⋆ {l.name}: {h.as_dict()}")

    if isinstance(mode, DeclaredSkyscraper):
        sky: Optional[SkyscraperCandidate] = SkyscraperCandidate(Point(Fraction(mode.c)), mode.q, "declared")
    elif isinstance(mode, AssumeNoSkyscraper):
        sky = None
    elif candidate is not None:
        raise UndeclaredSkyscraper(
            f"undeclared skyscraper: candidate at c={candidate.c.label}, q={candidate.q}; declare it or assume it absent",
            candidate,
        )
    else:
        sky = None
    report.skyscraper = sky

    delta = conv_delta(v, l)
    inf = conv_infinity(v, l, h1par_of(v), h1par_of(l))
    finite = ts_finite(v, l)
    if sky is not None:
        finite = _remove_skyscraper(finite, sky)

    points: List[Tuple[Point, LocalData]] = list(finite.items())
    points.append((INFINITY, inf))
    flags = Flags(irreducible=v.flags.irreducible and l.flags.irreducible, irreducibility_waived=True)
    result = ModuleData.build(f"{v.name}⋆{l.name}", h, delta, points, None, flags)
    try:
        result = ModuleData.build(result.name, result.h, result.delta, result.points, h1par_hodge(result), flags)
        report.check("euler", True, f"Σ h1par = ω − 2·rank = {result.h1par.total()}")
    except UnrealizableDataError as e:
        report.check("euler", False, str(e))
    report.result = result

    inf_h = block_tables(inf.blocks).nu_total
    report.check("infinity_coherence", inf_h == h, f"Σ_a ν_∞ = {inf_h.as_dict()}, h = {h.as_dict()}")
    report.check(
        "nonnegativity",
        h.nonnegative() and (result.h1par is None or result.h1par.nonnegative()),
        "",
    )
    outside = [x.label for x in result.finite_points() if x.coord not in sums]
    report.check("support", not outside, f"points outside x⋆y: {outside}" if outside else "")
    validation = validate_module(result)
    report.check("validates", validation.ok, "; ".join(x.message for x in validation.violations))
    report.cross_checks.append(kunneth_check(v, l, report))
    return report


# ---------------------------------------------------------------------------
# Kummer convolution


def near_one(v: ModuleData) -> Fraction:
    """1 − 1/(D+1), D the lcm of all residue denominators occurring in V."""
    tables = derive_tables(v)
    dens = [a.denominator for _, t in tables.points for (_, a) in t.nu.keys()]
    d = lcm(*dens) if dens else 1
    return 1 - Fraction(1, d + 1)


def _residues(v: ModuleData) -> List[Fraction]:
    tables = derive_tables(v)
    return sorted({a for _, t in tables.points for (_, a) in t.nu.keys() if a != 0})


def sum_complements(residues: Iterable[Fraction]) -> List[Fraction]:
    """(1 − (a + b)) mod 1 over pairs of distinct residues, without 0 and the residues themselves."""
    rs = sorted(set(residues))
    found = {mod1(1 - a - b) for a, b in combinations(rs, 2)}
    return sorted(found - set(rs) - {Fraction(0)})


def avoided_residues(v: ModuleData) -> List[Fraction]:
    """Every value a generic Kummer residue μ (and 1 − μ) must miss for V."""
    rs = _residues(v)
    return sorted(set(rs) | set(sum_complements(rs)))


def genericity_guard(v: ModuleData, mu: Fraction) -> List[str]:
    notes: List[str] = []
    rs = _residues(v)
    for a in rs:
        notes.append(f"μ={mu} vs a={a}: μ≠a, μ≠1−a")
        if mu == a or mu == 1 - a:
            raise NonGenericResidue(f"non-generic Kummer residue: μ={mu} meets residue {a} of {v.name}")
    for c in sum_complements(rs):
        notes.append(f"μ={mu} vs 1−(a+b)={c}: μ≠c, μ≠1−c")
        if mu == c or mu == 1 - c:
            raise NonGenericResidue(f"non-generic Kummer residue: μ={mu} meets residue-sum complement {c} of {v.name}")
    return notes


def _kummer_near_one(v: ModuleData) -> ConvolutionReport:
    mu = near_one(v)
    tables = derive_tables(v)
    d = v.require_delta()
    w = tables.omega_not_infty
    wu = tables.omega_u_not_infty
    h = d.shift(1) - d + w.shift(1)
    delta = d - wu.shift(1)

    points: List[Tuple[Point, LocalData]] = []
    for x, t in tables.finite():
        nu = ResidueTable.summed(((p, a + mu - 1), n) for (p, a), n in t.nu.items() if a != 0)
        nu = nu + ResidueTable.summed(((p, mu), n) for p, n in t.mu_zero.items())
        points.append((x, Aggregate(nu, GradedVector())))
    h1 = h1par_of(v)
    points.append((INFINITY, kummer_infinity(v, mu, h1)))

    report = ConvolutionReport(left=v.name, right=f"L({mu})")
    report.genericity.append(f"near-one surrogate μ={mu}")
    flags = Flags(irreducible=v.flags.irreducible, irreducibility_waived=True)
    result = ModuleData.build(f"{v.name}⋆L(1−ε)", h, delta, points, None, flags)
    rigid = h1par_hodge(result)
    result = ModuleData.build(result.name, h, delta, result.points, rigid, flags)
    report.result = result
    report.check("rigidity", rigid.is_zero(), f"h1par = {rigid.as_dict()}")
    report.check("rank", h.total() == w.total(), f"rank {h.total()} vs ω_≠∞ {w.total()}")
    return report


def kummer_mc(
    v: ModuleData,
    mu: Union[Fraction, NearOne],
    require_generic: bool = True,
) -> ConvolutionReport:
    """V⋆̃L_χ for the Kummer module with residue μ at 0."""
    if isinstance(mu, NearOne):
        return _kummer_near_one(v)
    mu = Fraction(mu)
    notes = genericity_guard(v, mu) if require_generic else [f"genericity not required for μ={mu}"]
    kummer = make_kummer(mu)
    report = middle_convolution(v, kummer)
    report.genericity.extend(notes)
    if require_generic and report.result is not None:
        h1 = report.result.h1par
        report.check("rigidity", h1 is not None and h1.is_zero(), f"h1par = {None if h1 is None else h1.as_dict()}")
        expected = kummer_infinity(v, mu, h1par_of(v))
        report.check("kummer_infinity", report.result.infinity == expected, "")
        if h1 is None or not h1.is_zero():
            raise UnrealizableDataError(f"unrealizable data: {report.result.name} is not parabolically rigid")
    return report


def mobius_kummer_mc(v: ModuleData, mu: Fraction) -> ModuleData:
    """
    The Kummer convolution computed through the exchange of 0 and ∞:
    invert((invert(V ⊗ L_χ) ⋆ L_χ) ⊗ L_χ̄). Needs V smooth at 0.
    """
    mu = Fraction(mu)
    if v.at(ZERO) is not None:
        raise PreconditionError(f"{v.name}: the coordinate exchange needs a module smooth at 0")
    inverted = reframe(kummer_twist(v, mu, 1), InvertCoordinate(allow_singular_zero=True))
    conv = middle_convolution(inverted, make_kummer(mu)).result
    back = reframe(kummer_twist(conv, mu, -1), InvertCoordinate(allow_singular_zero=True))
    return back.renamed(f"{v.name}⋆L({mu})")


# ---------------------------------------------------------------------------
# identities


def kunneth_check(v: ModuleData, l: ModuleData, report: ConvolutionReport) -> CrossCheck:
    """Cohomology of V⋆L against the Künneth side, degree by degree."""
    kt = block_tables(tensor_at_infinity(v, l).blocks).kappa
    result = report.result
    if result is not None:
        h1w = result.h1par if result.h1par is not None else h1par_hodge(result)
        kw = derive_tables(result).infinity.kappa
    else:
        h1w, kw = GradedVector(), GradedVector()
    lhs = h1w.shift(-1) + kw + report.epsilon - kt

    kv = derive_tables(v).infinity.kappa
    kl = derive_tables(l).infinity.kappa
    left = h1par_of(v) + kv.shift(1)
    right = h1par_of(l) + kl.shift(1)
    rhs = left.convolve(right).shift(-1)
    return CrossCheck("kunneth", lhs == rhs, f"lhs={lhs.as_dict()} rhs={rhs.as_dict()}")


def _unipotent_at_infinity(blocks: Iterable[JordanBlock]) -> bool:
    return any(b.a == 0 for b in blocks)


def kappa_associativity_hypotheses(v: ModuleData, l: ModuleData, m: ModuleData) -> Tuple[ModuleData, ModuleData]:
    """
    Checks that the triple carries the hypotheses of the κ_∞ identity and returns
    (V⋆̃L, L⋆̃M). The factors must be parabolically rigid without unipotent ∞ blocks,
    and so must V⊗L, (V⋆̃L)⊗M and V⊗(L⋆̃M) at ∞.
    """
    for x in (v, l, m):
        h1 = h1par_of(x)
        if not h1.is_zero():
            raise PreconditionError(f"{x.name} is not parabolically rigid: h1par = {h1.as_dict()}")
        if _unipotent_at_infinity(x.infinity_blocks()):
            raise PreconditionError(f"{x.name} has a unipotent block at ∞")
    if _unipotent_at_infinity(tensor_at_infinity(v, l).blocks):
        raise PreconditionError(f"{v.name}⊗{l.name} has a unipotent block at ∞")
    vl = middle_convolution(v, l).result
    lm = middle_convolution(l, m).result
    if _unipotent_at_infinity(tensor_at_infinity(vl, m).blocks):
        raise PreconditionError(f"{vl.name}⊗{m.name} has a unipotent block at ∞")
    if _unipotent_at_infinity(tensor_at_infinity(v, lm).blocks):
        raise PreconditionError(f"{v.name}⊗{lm.name} has a unipotent block at ∞")
    return vl, lm


def kappa_associativity_check(v: ModuleData, l: ModuleData, m: ModuleData) -> CrossCheck:
    vl, lm = kappa_associativity_hypotheses(v, l, m)
    left = block_tables(tensor_at_infinity(vl, m).blocks).kappa
    right = block_tables(tensor_at_infinity(v, lm).blocks).kappa
    return CrossCheck("kappa_associativity", left == right, f"{left.as_dict()} vs {right.as_dict()}")


# ---------------------------------------------------------------------------
# serialization


def report_to_obj(report: ConvolutionReport) -> Dict[str, Any]:
    sky = report.skyscraper
    return {
        "report": {
            "left": report.left,
            "right": report.right,
            "result": None if report.result is None else module_to_obj(report.result),
            "skyscraper": None if sky is None else {"c": sky.c.label, "q": sky.q, "verdict": sky.verdict},
            "epsilon": {str(p): n for p, n in report.epsilon.items()},
            "cross_checks": [{"name": c.name, "passed": c.passed, "details": c.details} for c in report.cross_checks],
            "genericity": list(report.genericity),
        }
    }


def serialize_report(report: ConvolutionReport) -> str:
    return dumps(report_to_obj(report))
