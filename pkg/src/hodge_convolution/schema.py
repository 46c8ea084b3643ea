from __future__ import annotations

import json
import logging
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import DescriptorParseError
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
    as_rational,
    as_residue,
    fmt_rational,
)

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _rational_text(v: Any) -> Any:
    # rationals travel as strings; bare JSON integers are accepted too
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    return v


class BlockEntry(_Strict):
    p: int
    a: str
    l: int = Field(ge=1)
    mult: int = Field(default=1, ge=1)

    @field_validator("a", mode="before")
    @classmethod
    def coerce_a(cls, v: Any) -> Any:
        return _rational_text(v)


class NuEntry(_Strict):
    p: int
    a: str
    mult: int = Field(ge=0)

    @field_validator("a", mode="before")
    @classmethod
    def coerce_a(cls, v: Any) -> Any:
        return _rational_text(v)


class MuEntry(_Strict):
    p: int
    mult: int = Field(ge=0)


class AggregateEntry(_Strict):
    nu_nonzero: List[NuEntry] = Field(default_factory=list)
    mu_zero: List[MuEntry] = Field(default_factory=list)


class PointEntry(_Strict):
    at: str
    blocks: Optional[List[BlockEntry]] = None
    aggregate: Optional[AggregateEntry] = None
    unknown: bool = False
    omega: Optional[int] = None

    @field_validator("at", mode="before")
    @classmethod
    def coerce_at(cls, v: Any) -> Any:
        return _rational_text(v)

    @model_validator(mode="after")
    def one_form(self) -> PointEntry:
        forms = [self.blocks is not None, self.aggregate is not None, self.unknown]
        if sum(forms) != 1:
            raise ValueError(f"point {self.at}: exactly one of blocks / aggregate / unknown is required")
        if self.omega is not None and not self.unknown:
            raise ValueError(f"point {self.at}: omega annotation only allowed on unknown points")
        return self


class FlagsEntry(_Strict):
    irreducible: bool = True
    nonconstant: bool = True
    minimal_extension: bool = True
    irreducibility_waived: bool = False


class ModuleDocument(_Strict):
    name: str
    h: Dict[int, int]
    delta: Union[Literal["unknown"], Dict[int, int]]
    points: List[PointEntry]
    h1par: Optional[Dict[int, int]] = None
    flags: FlagsEntry = Field(default_factory=FlagsEntry)


# ---------------------------------------------------------------------------
# document <-> ModuleData


def _local_from_entry(e: PointEntry) -> LocalData:
    if e.blocks is not None:
        return Blocks(tuple(JordanBlock(b.p, as_residue(b.a), b.l, b.mult) for b in e.blocks))
    if e.aggregate is not None:
        nu = ResidueTable.summed(((n.p, as_residue(n.a)), n.mult) for n in e.aggregate.nu_nonzero)
        mu = GradedVector.summed((m.p, m.mult) for m in e.aggregate.mu_zero)
        return Aggregate(nu, mu)
    return Absent(e.omega)


def module_from_document(doc: ModuleDocument) -> ModuleData:
    points = []
    seen = set()
    for e in doc.points:
        x = Point.parse(e.at)
        if x in seen:
            raise DescriptorParseError(f"duplicate point entries at {x.label}")
        seen.add(x)
        points.append((x, _local_from_entry(e)))
    if INFINITY not in seen:
        logger.warning("%s: descriptor has no Infinity entry; operations needing it will fail", doc.name)
    f = doc.flags
    return ModuleData.build(
        name=doc.name,
        h=doc.h,
        delta=None if doc.delta == "unknown" else doc.delta,
        points=points,
        h1par=doc.h1par,
        flags=Flags(f.irreducible, f.nonconstant, f.minimal_extension, f.irreducibility_waived),
    )


def parse_module(document: Union[bytes, str]) -> ModuleData:
    """Descriptor bytes → ModuleData. Every failure is a DescriptorParseError."""
    try:
        raw = json.loads(document)
    except (ValueError, UnicodeDecodeError) as e:
        raise DescriptorParseError(f"invalid JSON: {e}") from e
    return parse_module_obj(raw)


def parse_module_obj(raw: Any) -> ModuleData:
    try:
        doc = ModuleDocument.model_validate(raw)
    except ValidationError as e:
        raise DescriptorParseError(_first_error(e)) from e
    return module_from_document(doc)


def _first_error(e: ValidationError) -> str:
    errs = e.errors()
    if not errs:
        return str(e)
    first = errs[0]
    loc = ".".join(str(p) for p in first.get("loc", ()))
    msg = first.get("msg", "invalid")
    if first.get("type") == "extra_forbidden":
        msg = "unknown field"
    return f"{loc}: {msg}" if loc else msg


def _graded_obj(v: GradedVector) -> Dict[str, int]:
    return {str(p): n for p, n in v.items()}


def _local_obj(x: Point, data: LocalData) -> Dict[str, Any]:
    if isinstance(data, Blocks):
        return {
            "at": x.label,
            "blocks": [{"p": b.p, "a": fmt_rational(b.a), "l": b.l, "mult": b.mult} for b in data.blocks],
        }
    if isinstance(data, Aggregate):
        return {
            "at": x.label,
            "aggregate": {
                "nu_nonzero": [{"p": p, "a": fmt_rational(a), "mult": n} for (p, a), n in data.nu_nonzero.items()],
                "mu_zero": [{"p": p, "mult": n} for p, n in data.mu_zero.items()],
            },
        }
    out: Dict[str, Any] = {"at": x.label, "unknown": True}
    if data.omega is not None:
        out["omega"] = data.omega
    return out


def module_to_obj(m: ModuleData) -> Dict[str, Any]:
    obj: Dict[str, Any] = {
        "name": m.name,
        "h": _graded_obj(m.h),
        "delta": "unknown" if m.delta is None else _graded_obj(m.delta),
        "points": [_local_obj(x, d) for x, d in m.points],
    }
    if m.h1par is not None:
        obj["h1par"] = _graded_obj(m.h1par)
    obj["flags"] = {
        "irreducible": m.flags.irreducible,
        "nonconstant": m.flags.nonconstant,
        "minimal_extension": m.flags.minimal_extension,
        "irreducibility_waived": m.flags.irreducibility_waived,
    }
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def serialize_module(m: ModuleData) -> str:
    return dumps(module_to_obj(m))


def rational_text(q: Any) -> str:
    """Normalized text of a rational ("n/d" or "n")."""
    return fmt_rational(as_rational(q))
