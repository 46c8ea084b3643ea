"""Human tables (rich) and JSON views for CLI output."""

from __future__ import annotations

from typing import Any, Dict, Iterable, List, Optional

from rich.table import Table

from .convolution import ConvolutionReport
from .errors import HodgeDataError
from .invariants import InvariantTables, PointTables, ValidationReport
from .models import Aggregate, Blocks, GradedVector, LocalData, ModuleData, ResidueTable
from .selfcheck import SelfcheckResult
from .tensor import TensorProduct


def graded_obj(v: Optional[GradedVector]) -> Any:
    return "unknown" if v is None else {str(p): n for p, n in v.items()}


def residue_obj(t: ResidueTable) -> List[Dict[str, Any]]:
    return [{"p": p, "a": str(a), "mult": n} for (p, a), n in t.items()]


def _local_text(data: LocalData) -> str:
    if isinstance(data, Blocks):
        return " ⊕ ".join(str(b) for b in data.blocks) or "smooth"
    if isinstance(data, Aggregate):
        nu = ", ".join(f"ν^{p}_{a}={n}" for (p, a), n in data.nu_nonzero.items())
        mu = ", ".join(f"μ^{p}_0={n}" for p, n in data.mu_zero.items())
        return "; ".join(s for s in (nu, mu) if s) or "smooth"
    return "unknown" if data.omega is None else f"unknown (ω={data.omega})"


def graded_table(title: str, columns: Dict[str, Optional[GradedVector]]) -> Table:
    table = Table(title=title)
    table.add_column("p", justify="right")
    for name in columns:
        table.add_column(name, justify="right")
    degrees = sorted({p for v in columns.values() if v is not None for p in v.degrees()})
    for p in degrees:
        table.add_row(str(p), *("?" if v is None else str(v[p]) for v in columns.values()))
    return table


# ---------------------------------------------------------------------------
# modules


def module_tables(m: ModuleData) -> List[Table]:
    summary = graded_table(f"{m.name} (rank {m.rank})", {"h": m.h, "δ": m.delta, "h1par": m.h1par})
    points = Table(title="local data")
    points.add_column("point")
    points.add_column("data")
    for x, data in m.points:
        points.add_row(x.label, _local_text(data))
    return [summary, points]


def validation_obj(report: ValidationReport) -> Dict[str, Any]:
    return {
        "module": report.module,
        "ok": report.ok,
        "violations": [{"code": v.code, "message": v.message} for v in report.violations],
        "warnings": list(report.warnings),
    }


def validation_table(report: ValidationReport) -> Table:
    table = Table(title=f"{report.module}: {'pass' if report.ok else 'fail'}")
    table.add_column("kind")
    table.add_column("message")
    for v in report.violations:
        table.add_row(f"[red]{v.code}[/red]", v.message)
    for w in report.warnings:
        table.add_row("[yellow]warning[/yellow]", w)
    return table


# ---------------------------------------------------------------------------
# derived tables


def _point_obj(t: PointTables) -> Dict[str, Any]:
    return {
        "nu": residue_obj(t.nu),
        "mu_zero": graded_obj(t.mu_zero),
        "omega": graded_obj(t.omega),
        "omega_ss": graded_obj(t.omega_ss),
        "omega_u": graded_obj(t.omega_u),
        "kappa": graded_obj(t.kappa),
        "omega_by_residue": residue_obj(t.omega_by_residue),
    }


def _totals(tables: InvariantTables) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, read in (
        ("omega_not_infty", lambda: graded_obj(tables.omega_not_infty)),
        ("omega_total", lambda: graded_obj(tables.omega_total)),
        ("omega", lambda: tables.omega_scalar),
    ):
        try:
            out[key] = read()
        except HodgeDataError:
            out[key] = "unknown"
    return out


def tables_obj(tables: InvariantTables) -> Dict[str, Any]:
    return {
        "module": tables.module,
        "rank": tables.rank,
        "points": [{"at": x.label, **_point_obj(t)} for x, t in tables.points],
        "absent": [{"at": x.label, "omega": w} for x, w in tables.absent],
        "totals": _totals(tables),
    }


def derived_tables(tables: InvariantTables) -> List[Table]:
    out = []
    for x, t in tables.points:
        table = graded_table(
            f"{tables.module} at {x.label}",
            {"ν": t.nu_total, "μ_0": t.mu_zero, "ω_ss": t.omega_ss, "ω_u": t.omega_u, "ω": t.omega, "κ": t.kappa},
        )
        out.append(table)
        if t.nu:
            residues = Table(title=f"ν by residue at {x.label}")
            residues.add_column("p", justify="right")
            residues.add_column("a", justify="right")
            residues.add_column("mult", justify="right")
            for (p, a), n in sorted(t.nu.items(), key=lambda kv: (kv[0][1], kv[0][0])):
                residues.add_row(str(p), str(a), str(n))
            out.append(residues)
    totals = Table(title="totals")
    totals.add_column("name")
    totals.add_column("value")
    for key, value in _totals(tables).items():
        totals.add_row(key, str(value))
    out.append(totals)
    return out


# ---------------------------------------------------------------------------
# tensor


def tensor_obj(tp: TensorProduct, infinity: Optional[Blocks]) -> Dict[str, Any]:
    return {
        "h": graded_obj(tp.h),
        "delta": graded_obj(tp.delta),
        "o_terms": {x.label: graded_obj(o) for x, o in tp.o_terms.items()},
        "infinity": None
        if infinity is None
        else [{"p": b.p, "a": str(b.a), "l": b.l, "mult": b.mult} for b in infinity.blocks],
    }


def tensor_tables(tp: TensorProduct, infinity: Optional[Blocks]) -> List[Table]:
    columns: Dict[str, Optional[GradedVector]] = {"h": tp.h, "δ": tp.delta}
    columns.update({f"o@{x.label}": o for x, o in tp.o_terms.items()})
    out = [graded_table("tensor product", columns)]
    if infinity is not None:
        inf = Table(title="ψ_∞")
        inf.add_column("blocks")
        inf.add_row(_local_text(infinity))
        out.append(inf)
    return out


# ---------------------------------------------------------------------------
# reports


def report_tables(report: ConvolutionReport) -> List[Table]:
    out: List[Table] = []
    if report.result is not None:
        out.extend(module_tables(report.result))
    checks = Table(title=f"{report.left} ⋆ {report.right}: cross-checks")
    checks.add_column("check")
    checks.add_column("result")
    checks.add_column("details")
    for c in report.cross_checks:
        checks.add_row(c.name, "[green]pass[/green]" if c.passed else "[red]FAIL[/red]", c.details)
    out.append(checks)
    notes = Table(title="genericity and skyscraper")
    notes.add_column("note")
    if report.skyscraper is not None:
        s = report.skyscraper
        notes.add_row(f"skyscraper δ_{s.c.label}(−{s.q}−1), ε={graded_obj(report.epsilon)} ({s.verdict})")
    for note in report.genericity:
        notes.add_row(note)
    out.append(notes)
    return out


def selfcheck_obj(result: SelfcheckResult) -> Dict[str, Any]:
    return {
        "cases": result.cases,
        "seed": result.seed,
        "identities": {
            name: {"passed": t.passed, "total": t.total, "discarded": t.discarded} for name, t in result.tallies.items()
        },
        "skyscraper_pairs": result.skyscraper_pairs,
        "failures": list(result.failures),
        "discarded": list(result.discarded),
    }


def lines(items: Iterable[str]) -> str:
    return "\n".join(items) + "\n"
