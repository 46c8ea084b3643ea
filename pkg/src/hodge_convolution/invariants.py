from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple, Union

from .errors import (
    MissingInfinityError,
    PreconditionError,
    UnknownFieldError,
    UnrealizableDataError,
    ValidationFailed,
)
from .models import (
    INFINITY,
    Absent,
    Aggregate,
    Blocks,
    GradedVector,
    JordanBlock,
    LocalData,
    ModuleData,
    Point,
    ResidueTable,
    mod1,
    trivial_orbit,
)

logger = logging.getLogger(__name__)

ZERO = Point(Fraction(0))


# ---------------------------------------------------------------------------
# derived tables


@dataclass(frozen=True)
class PointTables:
    """
    Local invariants at one point:
      nu[(p, a)]     = ν^p_{x,a}
      mu_zero[p]     = μ^p_{x,0}
      omega_ss[p]    = ν^p_{x,≠0}
      omega_u[p]     = μ^{p+1}_{x,0}
      kappa[p]       = ν^p_{x,0,prim}
      omega          = omega_ss + omega_u
      omega_by_residue[(p, a)] = ν^p_{x,a} for a != 0, μ^{p+1}_{x,0} for a = 0
    """

    nu: ResidueTable
    mu_zero: GradedVector
    omega_ss: GradedVector
    omega_u: GradedVector
    kappa: GradedVector
    omega: GradedVector
    omega_by_residue: ResidueTable

    @property
    def nu_total(self) -> GradedVector:
        return self.nu.by_degree()


def _assemble(nu: ResidueTable, mu_zero: GradedVector, kappa: GradedVector) -> PointTables:
    omega_ss = nu.filter(lambda k: k[1] != 0).by_degree()
    omega_u = mu_zero.shift(-1)
    by_residue = nu.filter(lambda k: k[1] != 0) + ResidueTable.summed(((p, Fraction(0)), v) for p, v in omega_u.items())
    return PointTables(
        nu=nu,
        mu_zero=mu_zero,
        omega_ss=omega_ss,
        omega_u=omega_u,
        kappa=kappa,
        omega=omega_ss + omega_u,
        omega_by_residue=by_residue,
    )


def block_tables(blocks: Tuple[JordanBlock, ...]) -> PointTables:
    nu: List[Tuple[Tuple[int, Fraction], int]] = []
    mu: List[Tuple[int, int]] = []
    kappa: List[Tuple[int, int]] = []
    for b in blocks:
        for q in b.degrees():
            nu.append(((q, b.a), b.mult))
        if b.a == 0:
            # μ_{0,l} = ν_{0,l+1}: the block loses its lowest degree
            for q in range(b.p - b.l + 2, b.p + 1):
                mu.append((q, b.mult))
            kappa.append((b.p, b.mult))
    return _assemble(ResidueTable.summed(nu), GradedVector.summed(mu), GradedVector.summed(kappa))


def aggregate_tables(data: Aggregate, h: GradedVector, where: str = "") -> PointTables:
    omega_ss = data.nu_nonzero.by_degree()
    omega = omega_ss + data.mu_zero.shift(-1)
    kappa = h - omega
    if not kappa.nonnegative():
        raise UnrealizableDataError(f"negative κ at {where or 'point'}: aggregate data exceeds h ({kappa.as_dict()})")
    nu0 = h - omega_ss
    nu = data.nu_nonzero + ResidueTable.summed(((p, Fraction(0)), v) for p, v in nu0.items())
    return _assemble(nu, data.mu_zero, kappa)


def local_tables(data: LocalData, h: GradedVector, where: str = "") -> PointTables:
    if isinstance(data, Blocks):
        return block_tables(data.blocks)
    if isinstance(data, Aggregate):
        return aggregate_tables(data, h, where)
    raise UnknownFieldError(f"field unknown: local data at {where or 'point'}")


@dataclass(frozen=True)
class InvariantTables:
    module: str
    rank: int
    points: Tuple[Tuple[Point, PointTables], ...]
    absent: Tuple[Tuple[Point, Optional[int]], ...] = ()

    def _lookup(self) -> Dict[Point, PointTables]:
        return dict(self.points)

    def at(self, x: Point) -> PointTables:
        found = self._lookup().get(x)
        if found is not None:
            return found
        if any(p == x for p, _ in self.absent):
            raise UnknownFieldError(f"field unknown: local data of {self.module} at {x.label}")
        if x.is_infinity:
            raise MissingInfinityError(f"{self.module}: missing Infinity entry")
        raise KeyError(x)

    @property
    def infinity(self) -> PointTables:
        return self.at(INFINITY)

    def finite(self) -> Iterator[Tuple[Point, PointTables]]:
        for x, _ in self.absent:
            if not x.is_infinity:
                raise UnknownFieldError(f"field unknown: local data of {self.module} at {x.label}")
        return ((x, t) for x, t in self.points if not x.is_infinity)

    def _sum_finite(self, attr: str) -> GradedVector:
        acc = GradedVector()
        for _, t in self.finite():
            acc = acc + getattr(t, attr)
        return acc

    @property
    def omega_not_infty(self) -> GradedVector:
        return self._sum_finite("omega")

    @property
    def omega_ss_not_infty(self) -> GradedVector:
        return self._sum_finite("omega_ss")

    @property
    def omega_u_not_infty(self) -> GradedVector:
        return self._sum_finite("omega_u")

    @property
    def omega_by_residue_not_infty(self) -> ResidueTable:
        acc = ResidueTable()
        for _, t in self.finite():
            acc = acc + t.omega_by_residue
        return acc

    @property
    def omega_total(self) -> GradedVector:
        return self.omega_not_infty + self.infinity.omega

    @property
    def omega_ss_total(self) -> GradedVector:
        return self.omega_ss_not_infty + self.infinity.omega_ss

    @property
    def omega_scalar(self) -> int:
        """ω(V) as one number; unknown points contribute their ω annotation."""
        total = sum(t.omega.total() for _, t in self.points)
        for x, omega in self.absent:
            if omega is None:
                raise UnknownFieldError(f"field unknown: ω at {x.label} of {self.module}")
            total += omega
        if not any(x.is_infinity for x, _ in self.points) and not any(x.is_infinity for x, _ in self.absent):
            raise MissingInfinityError(f"{self.module}: missing Infinity entry")
        return total

    @property
    def omega_not_infty_scalar(self) -> int:
        total = sum(t.omega.total() for x, t in self.points if not x.is_infinity)
        for x, omega in self.absent:
            if x.is_infinity:
                continue
            if omega is None:
                raise UnknownFieldError(f"field unknown: ω at {x.label} of {self.module}")
            total += omega
        return total


def derive_tables(m: ModuleData) -> InvariantTables:
    points: List[Tuple[Point, PointTables]] = []
    absent: List[Tuple[Point, Optional[int]]] = []
    for x, data in m.points:
        if isinstance(data, Absent):
            absent.append((x, data.omega))
            continue
        points.append((x, local_tables(data, m.h, f"{m.name}@{x.label}")))
    return InvariantTables(module=m.name, rank=m.rank, points=tuple(points), absent=tuple(absent))


def to_aggregate(data: LocalData) -> LocalData:
    """Forget the Jordan structure, keeping ν for a != 0 and μ_0."""
    if isinstance(data, Blocks):
        t = block_tables(data.blocks)
        return Aggregate(t.nu.filter(lambda k: k[1] != 0), t.mu_zero)
    return data


def project_module(m: ModuleData) -> ModuleData:
    return m.with_points([(x, to_aggregate(d)) for x, d in m.points])


def tables_or_trivial(m: ModuleData, tables: InvariantTables, x: Point) -> PointTables:
    """Tables at x, reading a point the module does not list as smooth."""
    if m.at(x) is None and not x.is_infinity:
        return block_tables(trivial_orbit(m.h).blocks)
    return tables.at(x)


# ---------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    code: str
    message: str


@dataclass
class ValidationReport:
    module: str
    violations: List[Violation] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))

    def raise_if_failed(self) -> None:
        if not self.ok:
            first = self.violations[0].message
            raise ValidationFailed(f"{self.module}: {first}", report=self)


def validate_module(m: ModuleData) -> ValidationReport:
    """Structured list of violations; never raises on a well-formed ModuleData."""
    report = ValidationReport(module=m.name)

    if m.rank < 1:
        report.add("rank", f"rank must be >= 1, got {m.rank}")
    if not m.h.nonnegative():
        report.add("h-negative", f"h has a negative entry: {m.h.as_dict()}")

    if m.delta is not None:
        for p, d in m.delta.items():
            if d and m.h[p] == 0:
                report.add("delta-support", f"δ^p nonzero where h^p=0 (p={p}, δ^p={d})")
    if m.h1par is not None and not m.h1par.nonnegative():
        report.add("h1par-negative", f"h1par has a negative entry: {m.h1par.as_dict()}")

    if not m.has_infinity:
        report.warnings.append("missing Infinity entry")

    for x, data in m.points:
        if isinstance(data, Blocks):
            for b in data.blocks:
                if not (0 <= b.a < 1):
                    report.add("residue", f"residue out of range at {x.label}: {b.a}")
            nu = block_tables(data.blocks).nu_total
            for p in sorted(set(nu.degrees()) | set(m.h.degrees())):
                if nu[p] != m.h[p]:
                    report.add("limit-dimension", f"Σ_a ν^p ≠ h^p at {x.label}, p={p}: {nu[p]} != {m.h[p]}")
        elif isinstance(data, Aggregate):
            try:
                aggregate_tables(data, m.h, x.label)
            except UnrealizableDataError as e:
                report.add("kappa-negative", str(e))

    if report.ok and m.has_infinity:
        try:
            tables = derive_tables(m)
            surplus = tables.omega_scalar - 2 * m.rank
            if surplus < 0:
                report.warnings.append(f"ω(M) − 2·rank(M) = {surplus} < 0")
        except (UnknownFieldError, MissingInfinityError):
            pass

    for w in report.warnings:
        logger.debug("%s: %s", m.name, w)
    return report


def ensure_valid(m: ModuleData) -> ModuleData:
    validate_module(m).raise_if_failed()
    return m


# ---------------------------------------------------------------------------
# parabolic cohomology


def parabolic_numbers(h: GradedVector, delta: GradedVector, omega: GradedVector) -> GradedVector:
    """p ↦ δ^{p−1} − δ^p − h^p − h^{p−1} + ω^{p−1}"""
    degrees = set(h.degrees()) | set(delta.degrees()) | set(omega.degrees())
    if not degrees:
        return GradedVector()
    lo, hi = min(degrees), max(degrees) + 1
    return GradedVector.of(
        {p: delta[p - 1] - delta[p] - h[p] - h[p - 1] + omega[p - 1] for p in range(lo, hi + 1)}
    )


def h1par_hodge(m: ModuleData) -> GradedVector:
    if not m.flags.admissible:
        raise PreconditionError(
            f"{m.name}: Hodge numbers of H^1_par need a minimal extension of an irreducible nonconstant variation"
        )
    if m.flags.irreducibility_waived and not m.flags.irreducible:
        logger.debug("%s: irreducibility hypothesis waived for H^1_par", m.name)
    tables = derive_tables(m)
    omega = tables.omega_total
    out = parabolic_numbers(m.h, m.require_delta(), omega)
    expected = omega.total() - 2 * m.rank
    if out.total() != expected:
        raise UnrealizableDataError(f"unrealizable data: Σ h^p(H^1_par) = {out.total()} but ω − 2·rank = {expected}")
    if not out.nonnegative():
        raise UnrealizableDataError(f"unrealizable data: negative H^1_par Hodge number in {out.as_dict()}")
    return out


def h1par_of(m: ModuleData) -> GradedVector:
    """Stored H^1_par numbers when present, otherwise computed."""
    return m.h1par if m.h1par is not None else h1par_hodge(m)


# ---------------------------------------------------------------------------
# reframing


@dataclass(frozen=True)
class TateTwist:
    """M(−k): every Hodge degree moves up by k."""

    k: int


@dataclass(frozen=True)
class Translate:
    c: Fraction


@dataclass(frozen=True)
class Reflect:
    """Pullback along x ↦ c − x."""

    c: Fraction


@dataclass(frozen=True)
class InvertCoordinate:
    allow_singular_zero: bool = False


FrameAction = Union[TateTwist, Translate, Reflect, InvertCoordinate]


def _move_finite(m: ModuleData, fn) -> List[Tuple[Point, LocalData]]:
    return [(x if x.is_infinity else Point(fn(x.coord)), d) for x, d in m.points]


def reframe(m: ModuleData, action: FrameAction) -> ModuleData:
    if isinstance(action, TateTwist):
        k = action.k
        return ModuleData.build(
            m.name,
            m.h.shift(k),
            None if m.delta is None else m.delta.shift(k),
            [(x, d.shifted(k)) for x, d in m.points],
            None if m.h1par is None else m.h1par.shift(k),
            m.flags,
        )
    if isinstance(action, Translate):
        c = Fraction(action.c)
        return m.with_points(_move_finite(m, lambda q: q + c))
    if isinstance(action, Reflect):
        c = Fraction(action.c)
        return m.with_points(_move_finite(m, lambda q: c - q))
    if isinstance(action, InvertCoordinate):
        return _invert(m, action.allow_singular_zero)
    raise TypeError(f"unknown frame action: {action!r}")


def _invert(m: ModuleData, allow_singular_zero: bool) -> ModuleData:
    at_zero = m.at(ZERO)
    at_inf = m.infinity
    inf_free = isinstance(at_inf, (Blocks, Aggregate)) and at_inf.is_trivial
    if at_zero is not None and not inf_free and not allow_singular_zero:
        raise PreconditionError(f"{m.name}: InvertCoordinate with a singular point at 0 and no ∞-slot free")
    moved: List[Tuple[Point, LocalData]] = []
    for x, d in m.points:
        if x.is_infinity or x == ZERO:
            continue
        moved.append((Point(1 / x.coord), d))
    moved.append((INFINITY, at_zero if at_zero is not None else trivial_orbit(m.h)))
    moved.append((ZERO, at_inf))
    return m.with_points(moved)


# ---------------------------------------------------------------------------
# duality and numeric comparison


def dual_local(data: LocalData) -> LocalData:
    if isinstance(data, Blocks):
        return Blocks(tuple(JordanBlock(b.l - 1 - b.p, mod1(-b.a), b.l, b.mult) for b in data.blocks))
    if isinstance(data, Aggregate):
        return Aggregate(
            data.nu_nonzero.map_keys(lambda k: (-k[0], mod1(-k[1]))),
            data.mu_zero.map_keys(lambda p: 1 - p),
        )
    return data


def dual_module(m: ModuleData) -> ModuleData:
    """
    Numeric data of the dual variation. Hodge degrees are mirrored; the Deligne
    lattice changes on nonzero-residue parts, so
    δ^{−p}(M^∨) = −δ^p(M) − Σ_x ν^p_{x,≠0}(M).
    """
    delta = None
    if m.delta is not None:
        ss = derive_tables(m).omega_ss_total
        delta = (-(m.delta) - ss).mirror()
    return ModuleData.build(
        f"{m.name}^dual",
        m.h.mirror(),
        delta,
        [(x, dual_local(d)) for x, d in m.points],
        None,
        m.flags,
    )


def _comparable(m: ModuleData, tables: InvariantTables, x: Point):
    data = m.at(x)
    if isinstance(data, Absent):
        return ("absent", data.omega)
    t = tables_or_trivial(m, tables, x)
    return (t.nu, t.mu_zero)


def differences(m: ModuleData, n: ModuleData) -> List[str]:
    """Field names where two modules' numeric data disagree (names and flags ignored)."""
    out: List[str] = []
    if m.h != n.h:
        out.append(f"h: {m.h.as_dict()} != {n.h.as_dict()}")
    if m.delta != n.delta:
        out.append(f"delta: {_show(m.delta)} != {_show(n.delta)}")
    if m.h1par is not None and n.h1par is not None and m.h1par != n.h1par:
        out.append(f"h1par: {m.h1par.as_dict()} != {n.h1par.as_dict()}")
    if out:
        return out
    tm, tn = derive_tables(m), derive_tables(n)
    xs = sorted({x for x, _ in m.points} | {x for x, _ in n.points}, key=Point.sort_key)
    for x in xs:
        if _comparable(m, tm, x) != _comparable(n, tn, x):
            out.append(f"local data at {x.label}")
    return out


def numerically_equal(m: ModuleData, n: ModuleData) -> bool:
    return not differences(m, n)


def _show(v: Optional[GradedVector]) -> object:
    return "unknown" if v is None else v.as_dict()
