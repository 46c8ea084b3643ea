from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from math import floor
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

from .errors import DescriptorParseError, MissingInfinityError, UnknownFieldError, UnrealizableDataError

MAX_MULT = 2**63 - 1

# Residues are plain Fractions in [0, 1); the eigenvalue is exp(-2*pi*i*a).
Residue = Fraction


def as_rational(value: Any) -> Fraction:
    """Exact rational from "n/d", an integer or decimal string, an int or a Fraction. Floats are rejected."""
    if isinstance(value, bool) or isinstance(value, float):
        raise DescriptorParseError(f"malformed rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise DescriptorParseError(f"malformed rational: {value!r}") from None
    raise DescriptorParseError(f"malformed rational: {value!r}")


def as_residue(value: Any) -> Fraction:
    q = as_rational(value)
    if not (0 <= q < 1):
        raise DescriptorParseError(f"residue out of range: {q} not in [0,1)")
    return q


def mod1(q: Fraction) -> Fraction:
    return q - floor(q)


def check_mult(n: int, what: str = "multiplicity") -> int:
    if n > MAX_MULT:
        raise UnrealizableDataError(f"{what} overflow: {n} exceeds {MAX_MULT}")
    return n


def fmt_rational(q: Fraction) -> str:
    return str(q)


# ---------------------------------------------------------------------------
# sparse tables


@dataclass(frozen=True)
class _SparseTable:
    entries: Tuple[Tuple[Any, int], ...] = ()

    @staticmethod
    def _key(k: Any) -> Any:
        return k

    @staticmethod
    def _sort_key(k: Any) -> Any:
        return k

    @classmethod
    def of(cls, data: Optional[Mapping[Any, int]] = None):
        acc: Dict[Any, int] = {}
        for k, v in (data or {}).items():
            key = cls._key(k)
            acc[key] = acc.get(key, 0) + int(v)
        for v in acc.values():
            check_mult(abs(v), "table entry")
        return cls(tuple(sorted(((k, v) for k, v in acc.items() if v), key=lambda kv: cls._sort_key(kv[0]))))

    @classmethod
    def summed(cls, items: Iterable[Tuple[Any, int]]):
        acc: Dict[Any, int] = {}
        for k, v in items:
            acc[k] = acc.get(k, 0) + v
        return cls.of(acc)

    @cached_property
    def _lookup(self) -> Dict[Any, int]:
        return dict(self.entries)

    def __getitem__(self, key: Any) -> int:
        return self._lookup.get(self._key(key), 0)

    def items(self) -> Tuple[Tuple[Any, int], ...]:
        return self.entries

    def keys(self) -> Tuple[Any, ...]:
        return tuple(k for k, _ in self.entries)

    def as_dict(self) -> Dict[Any, int]:
        return dict(self.entries)

    def is_zero(self) -> bool:
        return not self.entries

    def nonnegative(self) -> bool:
        return all(v >= 0 for _, v in self.entries)

    def total(self) -> int:
        return sum(v for _, v in self.entries)

    def scale(self, n: int):
        return type(self).of({k: v * n for k, v in self.entries})

    def map_keys(self, fn: Callable[[Any], Any]):
        return type(self).summed((fn(k), v) for k, v in self.entries)

    def filter(self, pred: Callable[[Any], bool]):
        return type(self)(tuple((k, v) for k, v in self.entries if pred(k)))

    def __add__(self, other):
        return type(self).summed(list(self.entries) + list(other.entries))

    def __sub__(self, other):
        return type(self).summed(list(self.entries) + [(k, -v) for k, v in other.entries])

    def __neg__(self):
        return self.scale(-1)

    def __bool__(self) -> bool:
        return bool(self.entries)


@dataclass(frozen=True)
class GradedVector(_SparseTable):
    """Integer table over Hodge degrees (h, δ, ω, κ, ε, H^1_par numbers)."""

    @staticmethod
    def _key(k: Any) -> int:
        return int(k)

    def degrees(self) -> Tuple[int, ...]:
        return self.keys()

    def span(self) -> Optional[Tuple[int, int]]:
        if not self.entries:
            return None
        return self.entries[0][0], self.entries[-1][0]

    def shift(self, k: int) -> GradedVector:
        return GradedVector(tuple((p + k, v) for p, v in self.entries))

    def mirror(self) -> GradedVector:
        return GradedVector.of({-p: v for p, v in self.entries})

    def convolve(self, other: GradedVector) -> GradedVector:
        """(f*g)^l = sum_p f^(l-p) g^p"""
        return GradedVector.summed((p + q, v * w) for p, v in self.entries for q, w in other.entries)


@dataclass(frozen=True)
class ResidueTable(_SparseTable):
    """Integer table keyed by (Hodge degree p, residue a)."""

    @staticmethod
    def _key(k: Any) -> Tuple[int, Fraction]:
        p, a = k
        return int(p), Fraction(a)

    @staticmethod
    def _sort_key(k: Tuple[int, Fraction]) -> Tuple[int, Fraction]:
        return k

    def residues(self) -> Tuple[Fraction, ...]:
        return tuple(sorted({a for (_, a), _ in self.entries}))

    def shift(self, k: int) -> ResidueTable:
        return ResidueTable(tuple(((p + k, a), v) for (p, a), v in self.entries))

    def by_degree(self) -> GradedVector:
        return GradedVector.summed((p, v) for (p, _), v in self.entries)

    def at_residue(self, a: Fraction) -> GradedVector:
        return GradedVector.summed((p, v) for (p, b), v in self.entries if b == a)


# ---------------------------------------------------------------------------
# blocks and points


@dataclass(frozen=True)
class JordanBlock:
    """One summand J^p(a, l)^mult of a nilpotent orbit; p is the top Hodge degree."""

    p: int
    a: Fraction
    l: int
    mult: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", as_residue(self.a))
        if self.l < 1:
            raise DescriptorParseError(f"block size must be >= 1, got {self.l}")
        if self.mult < 1:
            raise DescriptorParseError(f"block multiplicity must be >= 1, got {self.mult}")
        check_mult(self.mult)

    @property
    def key(self) -> Tuple[int, Fraction, int]:
        return self.p, self.a, self.l

    @property
    def unipotent(self) -> bool:
        return self.a == 0

    def degrees(self) -> range:
        return range(self.p - self.l + 1, self.p + 1)

    def shifted(self, k: int) -> JordanBlock:
        return replace(self, p=self.p + k)

    def times(self, n: int) -> JordanBlock:
        return replace(self, mult=check_mult(self.mult * n))

    def sort_key(self) -> Tuple[Fraction, int, int]:
        return self.a, -self.l, -self.p

    def __str__(self) -> str:
        s = f"J^{self.p}({self.a},{self.l})"
        return s if self.mult == 1 else f"{s}^{self.mult}"


def merge_blocks(blocks: Iterable[JordanBlock]) -> Tuple[JordanBlock, ...]:
    acc: Dict[Tuple[int, Fraction, int], int] = {}
    for b in blocks:
        acc[b.key] = check_mult(acc.get(b.key, 0) + b.mult)
    merged = [JordanBlock(p, a, l, m) for (p, a, l), m in acc.items() if m > 0]
    return tuple(sorted(merged, key=JordanBlock.sort_key))


@dataclass(frozen=True)
class Point:
    """A point of the projective line; `coord is None` is infinity."""

    coord: Optional[Fraction] = None

    @classmethod
    def finite(cls, q: Any) -> Point:
        return cls(as_rational(q))

    @classmethod
    def parse(cls, text: Any) -> Point:
        if isinstance(text, str) and text.strip().lower() in {"inf", "infinity", "∞"}:
            return INFINITY
        return cls.finite(text)

    @property
    def is_infinity(self) -> bool:
        return self.coord is None

    @property
    def label(self) -> str:
        return "inf" if self.coord is None else fmt_rational(self.coord)

    def sort_key(self) -> Tuple[int, Fraction]:
        return (1, Fraction(0)) if self.coord is None else (0, self.coord)

    def __str__(self) -> str:
        return self.label


INFINITY = Point(None)


# ---------------------------------------------------------------------------
# local data


@dataclass(frozen=True)
class Blocks:
    blocks: Tuple[JordanBlock, ...] = ()

    known = "full"

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", merge_blocks(self.blocks))

    @property
    def is_trivial(self) -> bool:
        return all(b.a == 0 and b.l == 1 for b in self.blocks)

    def shifted(self, k: int) -> Blocks:
        return Blocks(tuple(b.shifted(k) for b in self.blocks))

    def times(self, n: int) -> Blocks:
        return Blocks(tuple(b.times(n) for b in self.blocks))


@dataclass(frozen=True)
class Aggregate:
    """Graded dimensions only: nu_nonzero[(p, a)] = ν^p_{x,a} (a != 0), mu_zero[p] = μ^p_{x,0}."""

    nu_nonzero: ResidueTable = field(default_factory=ResidueTable)
    mu_zero: GradedVector = field(default_factory=GradedVector)

    known = "aggregate"

    def __post_init__(self) -> None:
        for (p, a), v in self.nu_nonzero.items():
            if a == 0:
                raise DescriptorParseError(f"aggregate nu_nonzero has residue 0 at degree {p}")
            as_residue(a)
            if v < 0:
                raise DescriptorParseError(f"aggregate nu_nonzero entry negative at ({p},{a})")
        if not self.mu_zero.nonnegative():
            raise DescriptorParseError("aggregate mu_zero has a negative entry")

    @property
    def is_trivial(self) -> bool:
        return self.nu_nonzero.is_zero() and self.mu_zero.is_zero()

    def shifted(self, k: int) -> Aggregate:
        return Aggregate(self.nu_nonzero.shift(k), self.mu_zero.shift(k))

    def times(self, n: int) -> Aggregate:
        return Aggregate(self.nu_nonzero.scale(n), self.mu_zero.scale(n))


@dataclass(frozen=True)
class Absent:
    """Local data not known; `omega` optionally carries the ungraded count ω_x."""

    omega: Optional[int] = None

    known = "absent"
    is_trivial = False

    def shifted(self, k: int) -> Absent:
        return self

    def times(self, n: int) -> Absent:
        return Absent(None if self.omega is None else self.omega * n)


LocalData = Union[Blocks, Aggregate, Absent]


def trivial_orbit(h: GradedVector) -> Blocks:
    """Local data of a smooth point: J^p(0,1)^{h^p}."""
    return Blocks(tuple(JordanBlock(p, Fraction(0), 1, m) for p, m in h.items() if m > 0))


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True)
class Flags:
    irreducible: bool = True
    nonconstant: bool = True
    minimal_extension: bool = True
    irreducibility_waived: bool = False

    @property
    def admissible(self) -> bool:
        return self.minimal_extension and self.nonconstant and (self.irreducible or self.irreducibility_waived)


@dataclass(frozen=True)
class ModuleData:
    name: str
    h: GradedVector
    delta: Optional[GradedVector]
    points: Tuple[Tuple[Point, LocalData], ...]
    h1par: Optional[GradedVector] = None
    flags: Flags = field(default_factory=Flags)

    @classmethod
    def build(
        cls,
        name: str,
        h: Mapping[int, int] | GradedVector,
        delta: Optional[Mapping[int, int] | GradedVector],
        points: Mapping[Point, LocalData] | Iterable[Tuple[Point, LocalData]],
        h1par: Optional[Mapping[int, int] | GradedVector] = None,
        flags: Optional[Flags] = None,
    ) -> ModuleData:
        """
        Normalizing constructor: sorts points and drops finite points whose data is
        trivial (smooth points). Infinity is always kept.
        """
        pairs = list(points.items()) if isinstance(points, Mapping) else list(points)
        seen: Dict[Point, LocalData] = {}
        for x, data in pairs:
            if x in seen:
                raise DescriptorParseError(f"duplicate point entry: {x.label}")
            seen[x] = data
        kept = [(x, d) for x, d in seen.items() if x.is_infinity or not d.is_trivial]
        kept.sort(key=lambda xd: xd[0].sort_key())
        return cls(
            name=name,
            h=_graded(h),
            delta=None if delta is None else _graded(delta),
            points=tuple(kept),
            h1par=None if h1par is None else _graded(h1par),
            flags=flags or Flags(),
        )

    @cached_property
    def _local(self) -> Dict[Point, LocalData]:
        return dict(self.points)

    @property
    def rank(self) -> int:
        return self.h.total()

    @property
    def has_infinity(self) -> bool:
        return INFINITY in self._local

    @property
    def infinity(self) -> LocalData:
        if INFINITY not in self._local:
            raise MissingInfinityError(f"{self.name}: missing Infinity entry")
        return self._local[INFINITY]

    def at(self, x: Point) -> Optional[LocalData]:
        return self._local.get(x)

    def finite_points(self) -> Tuple[Point, ...]:
        return tuple(x for x, _ in self.points if not x.is_infinity)

    def require_delta(self) -> GradedVector:
        if self.delta is None:
            raise UnknownFieldError(f"field unknown: delta of {self.name}")
        return self.delta

    def infinity_blocks(self) -> Tuple[JordanBlock, ...]:
        data = self.infinity
        if not isinstance(data, Blocks):
            raise UnknownFieldError(f"field unknown: Jordan blocks at infinity of {self.name} ({data.known} data)")
        return data.blocks

    def with_points(self, points: Mapping[Point, LocalData] | Iterable[Tuple[Point, LocalData]]) -> ModuleData:
        return ModuleData.build(self.name, self.h, self.delta, points, self.h1par, self.flags)

    def renamed(self, name: str) -> ModuleData:
        return replace(self, name=name)


def _graded(v: Mapping[int, int] | GradedVector) -> GradedVector:
    return v if isinstance(v, GradedVector) else GradedVector.of(v)
