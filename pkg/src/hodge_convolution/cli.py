from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import typer
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .config import AppConfig, load_config
from .convolution import (
    NEAR_ONE,
    AssumeNoSkyscraper,
    ConvolutionReport,
    DeclaredSkyscraper,
    kummer_mc,
    middle_convolution,
    serialize_report,
)
from .errors import DescriptorParseError, HodgeDataError, PunctualConvolution, ValidationFailed
from .hypergeometric import HypergeometricSpec, make_hypergeometric
from .invariants import derive_tables, h1par_hodge, validate_module
from .models import Blocks, ModuleData, as_rational
from .render import (
    graded_obj,
    derived_tables,
    graded_table,
    lines,
    module_tables,
    report_tables,
    selfcheck_obj,
    tables_obj,
    tensor_obj,
    tensor_tables,
    validation_obj,
    validation_table,
)
from .schema import dumps, parse_module, serialize_module
from .selfcheck import run_selfcheck
from .tensor import tensor_at_infinity, tensor_global

app = typer.Typer(add_completion=False, help="Exact Hodge data of tensor products and middle convolutions")

out = Console()
err = Console(stderr=True)

FormatOpt = typer.Option(None, "--format", help="table | json (default from config / HODGE_FORMAT)")
LogLevelOpt = typer.Option(None, "--log-level", help="logging level for diagnostics on stderr")


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=err, show_path=False)],
        force=True,
    )


def _fail(message: str, code: int) -> None:
    err.print(f"error: {message}", style="red", markup=False, highlight=False)
    raise typer.Exit(code=code)


@contextmanager
def guard() -> Iterator[None]:
    """Maps engine and I/O errors onto exit codes."""
    try:
        yield
    except HodgeDataError as e:
        _fail(str(e), e.exit_code)
    except OSError as e:
        _fail(f"I/O error: {e}", 3)
    except ValueError as e:
        _fail(f"configuration error: {e}", 3)


def _setup(fmt: Optional[str], log_level: Optional[str]) -> Tuple[AppConfig, str]:
    cfg = load_config()
    setup_logging(log_level or cfg.log_level)
    chosen = fmt or cfg.output_format
    if chosen not in ("table", "json"):
        raise ValueError(f"--format must be table or json, got {chosen!r}")
    return cfg, chosen


def read_module(path: Path) -> ModuleData:
    return parse_module(path.read_bytes())


def _emit_json(obj) -> None:
    typer.echo(dumps(obj), nl=False)


def _emit_tables(tables) -> None:
    for t in tables:
        out.print(t)


def _checked(m: ModuleData) -> ModuleData:
    report = validate_module(m)
    if not report.ok:
        raise ValidationFailed(f"refusing to emit {m.name}: {report.violations[0].message}", report)
    return m


def _emit_report(report: ConvolutionReport, fmt: str) -> None:
    if report.result is not None:
        _checked(report.result)
    if fmt == "json":
        typer.echo(serialize_report(report), nl=False)
    else:
        _emit_tables(report_tables(report))


@app.command("version")
def version() -> None:
    """
    Print the package version.
    """
    typer.echo(__version__)


@app.command("validate")
def validate(
    path: Path = typer.Argument(..., help="module descriptor (JSON)"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Check a module descriptor against the structural identities of Hodge data.
    """
    with guard():
        _, fmt = _setup(fmt, log_level)
        report = validate_module(read_module(path))
        if fmt == "json":
            _emit_json(validation_obj(report))
        else:
            out.print(validation_table(report))
        if not report.ok:
            raise typer.Exit(code=ValidationFailed.exit_code)


@app.command("derive")
def derive(
    path: Path = typer.Argument(..., help="module descriptor (JSON)"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Derived local tables ν, μ_0, ω, ω_ss, ω_u, κ per point, with totals.
    """
    with guard():
        _, fmt = _setup(fmt, log_level)
        m = read_module(path)
        validate_module(m).raise_if_failed()
        tables = derive_tables(m)
        if fmt == "json":
            _emit_json(tables_obj(tables))
        else:
            _emit_tables(derived_tables(tables))


@app.command("tensor")
def tensor(
    left: Path = typer.Argument(..., help="descriptor of V"),
    right: Path = typer.Argument(..., help="descriptor of L"),
    shift: Optional[str] = typer.Option(None, "--shift", help="relocate L along x ↦ t − x first"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    h, δ and o-terms of V⊗L (or V⊗L(t−x)), plus the ∞ orbit when both have Jordan blocks there.
    """
    with guard():
        _, fmt = _setup(fmt, log_level)
        v, l = read_module(left), read_module(right)
        for m in (v, l):
            validate_module(m).raise_if_failed()
        t = None if shift is None else as_rational(shift)
        tp = tensor_global(v, l, t)
        infinity: Optional[Blocks] = None
        if v.has_infinity and l.has_infinity and isinstance(v.infinity, Blocks) and isinstance(l.infinity, Blocks):
            infinity = tensor_at_infinity(v, l)
        if fmt == "json":
            _emit_json(tensor_obj(tp, infinity))
        else:
            _emit_tables(tensor_tables(tp, infinity))


def parse_skyscraper(text: str) -> DeclaredSkyscraper:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise DescriptorParseError(f"--skyscraper expects c,q, got {text!r}")
    try:
        q = int(parts[1])
    except ValueError:
        raise DescriptorParseError(f"--skyscraper expects an integer q, got {parts[1]!r}") from None
    return DeclaredSkyscraper(as_rational(parts[0]), q)


@app.command("convolve")
def convolve(
    left: Path = typer.Argument(..., help="descriptor of V"),
    right: Path = typer.Argument(..., help="descriptor of L"),
    skyscraper: Optional[str] = typer.Option(None, "--skyscraper", help="declare δ_c(−q−1) as c,q"),
    assume_no_skyscraper: bool = typer.Option(False, "--assume-no-skyscraper", help="treat any candidate as absent"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Middle convolution V⋆̃L with its cross-checks.
    """
    if skyscraper is not None and assume_no_skyscraper:
        raise typer.BadParameter("choose one of --skyscraper / --assume-no-skyscraper")
    with guard():
        _, fmt = _setup(fmt, log_level)
        mode = parse_skyscraper(skyscraper) if skyscraper is not None else None
        if assume_no_skyscraper:
            mode = AssumeNoSkyscraper()
        v, l = read_module(left), read_module(right)
        try:
            report = middle_convolution(v, l, mode)
        except PunctualConvolution as e:
            if fmt == "json" and e.report is not None:
                typer.echo(serialize_report(e.report), nl=False)
            raise
        _emit_report(report, fmt)


@app.command("kummer")
def kummer(
    path: Path = typer.Argument(..., help="descriptor of V"),
    mu: Optional[str] = typer.Option(None, "--mu", help="Kummer residue μ as p/q"),
    near_one: bool = typer.Option(False, "--near-one", help="μ closer to 1 than every residue gap"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Kummer convolution V⋆̃L_χ, exact μ or the near-one closed forms.
    """
    if (mu is None) == (not near_one):
        raise typer.BadParameter("give exactly one of --mu / --near-one")
    with guard():
        _, fmt = _setup(fmt, log_level)
        v = read_module(path)
        validate_module(v).raise_if_failed()
        report = kummer_mc(v, NEAR_ONE if near_one else as_rational(mu))
        _emit_report(report, fmt)


@app.command("h1par")
def h1par(
    path: Path = typer.Argument(..., help="module descriptor (JSON)"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Hodge numbers of parabolic cohomology H^1_par.
    """
    with guard():
        _, fmt = _setup(fmt, log_level)
        m = read_module(path)
        validate_module(m).raise_if_failed()
        vec = h1par_hodge(m)
        if fmt == "json":
            _emit_json({"module": m.name, "h1par": graded_obj(vec)})
        else:
            out.print(graded_table(f"H^1_par({m.name})", {"h^p": vec}))


@app.command("hyper")
def hyper(
    m: int = typer.Option(..., "--m", help="rank of the hypergeometric module"),
    a: str = typer.Option(..., "--a", help="residue of the ∞ block"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Descriptor of the hypergeometric module M_m (partial data).
    """
    with guard():
        _, fmt = _setup(fmt, log_level)
        module = make_hypergeometric(HypergeometricSpec(m, as_rational(a)))
        if fmt == "json":
            typer.echo(serialize_module(_checked(module)), nl=False)
        else:
            _emit_tables(module_tables(_checked(module)))


@app.command("selfcheck")
def selfcheck(
    cases: Optional[int] = typer.Option(None, "--cases", min=0, help="number of seeded cases"),
    seed: Optional[int] = typer.Option(None, "--seed", help="seed of the case generator"),
    fmt: Optional[str] = FormatOpt,
    log_level: Optional[str] = LogLevelOpt,
) -> None:
    """
    Run the identity suite on generated modules; one line per identity.
    """
    with guard():
        cfg, fmt = _setup(fmt, log_level)
        result = run_selfcheck(cfg.selfcheck, cases=cases, seed=seed)
        if fmt == "json":
            _emit_json(selfcheck_obj(result))
        else:
            typer.echo(lines(result.lines()), nl=False)
        if not result.ok:
            raise typer.Exit(code=1)


def main(argv: Optional[List[str]] = None) -> None:
    app(args=argv)


if __name__ == "__main__":
    main()
