"""
Seeded property suite over generated modules.

Each case index gets its own random stream, so a case can be replayed alone and the
whole run is byte-identical for equal settings. A check first draws its inputs under
``Generator.hypotheses()``; a draw that misses a hypothesis is discarded and redrawn
from the next attempt stream. Anything raised after that point fails the identity.
"""

from __future__ import annotations

import logging
import random
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from .config import SelfcheckSettings
from .convolution import (
    NEAR_ONE,
    DeclaredSkyscraper,
    avoided_residues,
    conv_h,
    conv_infinity,
    conv_rank,
    genericity_guard,
    kappa_associativity_check,
    kappa_associativity_hypotheses,
    kummer_mc,
    kunneth_check,
    middle_convolution,
    mobius_kummer_mc,
    near_one,
    skyscraper_check,
)
from .errors import HodgeDataError, NonGenericResidue, PreconditionError, PunctualConvolution, UnrealizableDataError
from .hypergeometric import HypergeometricSpec, falt_hyp_expected, make_hypergeometric, make_rank_one
from .invariants import (
    InvertCoordinate,
    Reflect,
    TateTwist,
    Translate,
    derive_tables,
    differences,
    dual_module,
    h1par_hodge,
    project_module,
    reframe,
)
from .models import ModuleData

logger = logging.getLogger(__name__)

IDENTITIES = (
    "euler",
    "projection",
    "reframe",
    "specialization",
    "rigidity",
    "inversion",
    "infinity_coherence",
    "kunneth",
    "commutativity",
    "associativity",
    "kappa_associativity",
    "mobius",
    "hypergeometric",
)

MAX_ATTEMPTS = 40
MU_ATTEMPTS = 200


class IdentityFailed(AssertionError):
    pass


class CaseDiscarded(Exception):
    """The drawn inputs miss a hypothesis of the identity."""


def expect(condition: bool, message: str) -> None:
    if not condition:
        raise IdentityFailed(message)


def expect_equal(left: ModuleData, right: ModuleData, what: str) -> None:
    diff = differences(left, right)
    expect(not diff, f"{what}: " + "; ".join(diff))


# ---------------------------------------------------------------------------
# generator


class Generator:
    def __init__(self, settings: SelfcheckSettings, rng: random.Random) -> None:
        self.settings = settings
        self.rng = rng
        self.skyscraper_pairs = 0

    @contextmanager
    def hypotheses(self) -> Iterator[None]:
        """Turns precondition and realizability errors of the drawn inputs into a discard."""
        try:
            yield
        except (PreconditionError, UnrealizableDataError) as e:
            raise CaseDiscarded(str(e)) from e

    def residue(self) -> Fraction:
        d = self.rng.choice(self.settings.denominators)
        return Fraction(self.rng.randint(1, d - 1), d)

    def rank_one(self, n_points: Optional[int] = None, avoid: Sequence[int] = (), degree: int = 0) -> ModuleData:
        pool = [x for x in range(-3, 4) if x not in avoid]
        k = n_points or self.rng.randint(1, min(self.settings.max_points, len(pool)))
        while True:
            xs = sorted(self.rng.sample(pool, k))
            residues = {x: self.residue() for x in xs}
            if sum(residues.values()).denominator != 1:
                return make_rank_one(residues, degree)

    def generic_mu(self, *modules: ModuleData) -> Fraction:
        """A residue μ with μ and 1 − μ off every residue and residue-sum complement of the modules."""
        avoid = set()
        for m in modules:
            avoid.update(avoided_residues(m))
        for _ in range(MU_ATTEMPTS):
            mu = self.residue()
            if mu not in avoid and 1 - mu not in avoid:
                return mu
        names = ", ".join(m.name for m in modules)
        raise NonGenericResidue(f"no generic Kummer residue for {names} in {MU_ATTEMPTS} draws")

    def rank_two(self) -> ModuleData:
        base = self.rank_one(n_points=2)
        return kummer_mc(base, self.generic_mu(base)).result

    def module(self) -> ModuleData:
        if self.settings.max_rank >= 2 and self.rng.random() < 0.3:
            return self.rank_two()
        return self.rank_one()

    def rigid_module(self) -> ModuleData:
        """A parabolically rigid module: one finite point in rank one, a Kummer convolution in rank two."""
        if self.settings.max_rank >= 2 and self.rng.random() < 0.3:
            return self.rank_two()
        return self.rank_one(n_points=1)

    def skyscraper_partner(self, v: ModuleData) -> Tuple[ModuleData, Fraction, int]:
        """L = reflect(dual(V(q)), c), so V ⋆ L carries δ_c(−q−1)."""
        q = self.rng.randint(-1, 1)
        c = Fraction(self.rng.randint(-2, 2))
        partner = reframe(dual_module(reframe(v, TateTwist(-q))), Reflect(c))
        return partner.renamed(f"{v.name}^dual[c={c},q={q}]"), c, q


def generic_pair(v: ModuleData, l: ModuleData) -> None:
    """V ⋆ L and L ⋆ V are non-punctual, realizable and carry no skyscraper candidate."""
    for a, b in ((v, l), (l, v)):
        candidate = skyscraper_check(a, b)
        if candidate is not None:
            raise PreconditionError(f"{a.name} ⋆ {b.name}: skyscraper candidate at c={candidate.c.label}")
        conv_h(a, b)


# ---------------------------------------------------------------------------
# identities


def check_euler(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
    out = h1par_hodge(v)
    expect(out.total() == derive_tables(v).omega_scalar - 2 * v.rank, f"{v.name}: Euler identity")


def check_projection(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
    before = derive_tables(v)
    after = derive_tables(project_module(v))
    for x, t in before.points:
        u = after.at(x)
        expect((t.nu, t.mu_zero, t.omega, t.kappa) == (u.nu, u.mu_zero, u.omega, u.kappa), f"{v.name}: tables at {x}")


def check_reframe(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
    k = gen.rng.randint(-2, 2)
    c = Fraction(gen.rng.randint(-3, 3), gen.rng.choice((1, 2)))
    expect(reframe(reframe(v, TateTwist(k)), TateTwist(-k)) == v, "TateTwist round trip")
    expect(reframe(reframe(v, Translate(c)), Translate(-c)) == v, "Translate round trip")
    inv = InvertCoordinate(allow_singular_zero=True)
    expect_equal(reframe(reframe(v, inv), inv), v, "double inversion")
    expect(h1par_hodge(reframe(v, TateTwist(k))) == h1par_hodge(v).shift(k), "H^1_par under TateTwist")


def check_specialization(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
        mu = near_one(v)
        genericity_guard(v, mu)
    closed = kummer_mc(v, NEAR_ONE).result
    general = kummer_mc(v, mu).result
    expect_equal(general, closed, f"{v.name} near-one closed form")


def check_rigidity(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
        mu = gen.generic_mu(v)
    w = kummer_mc(v, mu).result
    expect(w.h1par is not None and w.h1par.is_zero(), f"{w.name}: H^1_par = {w.h1par}")


def check_inversion(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
        mu = gen.generic_mu(v)
    w = kummer_mc(v, mu).result
    back = kummer_mc(w, 1 - mu, require_generic=False).result
    expect_equal(back, reframe(v, TateTwist(1)), f"{v.name} inversion with μ={mu}")


def check_infinity_coherence(gen: Generator) -> None:
    with gen.hypotheses():
        v, l = gen.module(), gen.module()
        generic_pair(v, l)
    report = middle_convolution(v, l)
    for c in report.cross_checks:
        if c.name == "infinity_coherence":
            expect(c.passed, c.details)


def check_kunneth(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.module()
        skyscraper = gen.rng.random() < 0.4
        if skyscraper:
            l, c, q = gen.skyscraper_partner(v)
            try:
                conv_h(v, l)
            except PunctualConvolution:
                pass
        else:
            l = gen.module()
            generic_pair(v, l)
    if skyscraper:
        try:
            report = middle_convolution(v, l, DeclaredSkyscraper(c, q))
        except PunctualConvolution as e:
            report = e.report
        expect(report.skyscraper is not None, f"{v.name} ⋆ {l.name}: skyscraper not seen")
    else:
        report = middle_convolution(v, l)
    verdict = kunneth_check(v, l, report)
    expect(verdict.passed, verdict.details)
    if skyscraper:
        gen.skyscraper_pairs += 1


def check_commutativity(gen: Generator) -> None:
    with gen.hypotheses():
        v, l = gen.module(), gen.module()
        generic_pair(v, l)
    expect_equal(middle_convolution(v, l).result, middle_convolution(l, v).result, f"{v.name} ⋆ {l.name}")


def check_associativity(gen: Generator) -> None:
    with gen.hypotheses():
        v, l, m = gen.module(), gen.rank_one(), gen.rank_one()
        generic_pair(v, l)
        generic_pair(l, m)
    vl = middle_convolution(v, l).result
    lm = middle_convolution(l, m).result
    with gen.hypotheses():
        generic_pair(vl, m)
        generic_pair(v, lm)
    left = middle_convolution(vl, m).result
    right = middle_convolution(v, lm).result
    expect_equal(left, right, f"({v.name} ⋆ {l.name}) ⋆ {m.name}")


def check_kappa_associativity(gen: Generator) -> None:
    with gen.hypotheses():
        v, l, m = gen.rigid_module(), gen.rank_one(n_points=1), gen.rank_one(n_points=1)
        generic_pair(v, l)
        generic_pair(l, m)
        kappa_associativity_hypotheses(v, l, m)
    verdict = kappa_associativity_check(v, l, m)
    expect(verdict.passed, verdict.details)


def check_mobius(gen: Generator) -> None:
    with gen.hypotheses():
        v = gen.rank_one(avoid=(0,))
        mu = gen.generic_mu(v)
    expect_equal(mobius_kummer_mc(v, mu), kummer_mc(v, mu).result, f"{v.name} through the exchange of 0 and ∞")


def check_hypergeometric(gen: Generator) -> None:
    m, n = gen.rng.randint(1, 5), gen.rng.randint(1, 5)
    i = gen.rng.randint(1, 6)
    j = gen.rng.choice([k for k in range(1, 7) if k != 7 - i])
    a, b = Fraction(i, 7), Fraction(j, 7)
    mm = make_hypergeometric(HypergeometricSpec(m, a))
    nn = make_hypergeometric(HypergeometricSpec(n, b))
    got = conv_infinity(mm, nn, mm.h1par, nn.h1par)
    expected = falt_hyp_expected(m, n, a, b)
    expect(got == expected, f"M{m}({a}) ⋆ M{n}({b}) at ∞")
    size = sum(x.l * x.mult for x in got.blocks)
    expect(size == conv_rank(mm, nn), f"rank {size} vs {conv_rank(mm, nn)}")


CHECKS: Dict[str, Callable[[Generator], None]] = {
    "euler": check_euler,
    "projection": check_projection,
    "reframe": check_reframe,
    "specialization": check_specialization,
    "rigidity": check_rigidity,
    "inversion": check_inversion,
    "infinity_coherence": check_infinity_coherence,
    "kunneth": check_kunneth,
    "commutativity": check_commutativity,
    "associativity": check_associativity,
    "kappa_associativity": check_kappa_associativity,
    "mobius": check_mobius,
    "hypergeometric": check_hypergeometric,
}


# ---------------------------------------------------------------------------
# runner


@dataclass
class Tally:
    passed: int = 0
    total: int = 0
    discarded: int = 0


@dataclass
class SelfcheckResult:
    cases: int
    seed: int
    tallies: Dict[str, Tally] = field(default_factory=lambda: {name: Tally() for name in IDENTITIES})
    failures: List[str] = field(default_factory=list)
    discarded: List[str] = field(default_factory=list)
    skyscraper_pairs: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> List[str]:
        out = [f"selfcheck cases={self.cases} seed={self.seed}"]
        out.extend(f"{name} {t.passed}/{t.total} discarded={t.discarded}" for name, t in self.tallies.items())
        out.append(f"kunneth skyscraper pairs: {self.skyscraper_pairs}")
        if self.failures:
            out.append("failures:")
            out.extend(f"  {f}" for f in self.failures)
        out.append(f"discarded: {len(self.discarded)}")
        return out


def case_rng(seed: int, index: int, name: str, attempt: int = 0) -> random.Random:
    key = f"{seed}:{index}:{name}" if attempt == 0 else f"{seed}:{index}:{name}:{attempt}"
    return random.Random(key)


def run_case(settings: SelfcheckSettings, seed: int, index: int, name: str, result: SelfcheckResult) -> None:
    tally = result.tallies[name]
    for attempt in range(MAX_ATTEMPTS):
        gen = Generator(settings, case_rng(seed, index, name, attempt))
        try:
            CHECKS[name](gen)
        except CaseDiscarded as e:
            tally.discarded += 1
            result.discarded.append(f"case {index} {name} attempt {attempt}: {e}")
            logger.debug("selfcheck case %d %s attempt %d discarded: %s", index, name, attempt, e)
            continue
        except IdentityFailed as e:
            tally.total += 1
            result.failures.append(f"case {index} {name}: {e}")
            return
        except HodgeDataError as e:
            tally.total += 1
            result.failures.append(f"case {index} {name}: {type(e).__name__}: {e}")
            return
        tally.passed += 1
        tally.total += 1
        result.skyscraper_pairs += gen.skyscraper_pairs
        return
    tally.total += 1
    result.failures.append(f"case {index} {name}: no admissible draw in {MAX_ATTEMPTS} attempts")
    logger.warning("selfcheck case %d %s: every attempt discarded", index, name)


def run_selfcheck(settings: SelfcheckSettings, cases: Optional[int] = None, seed: Optional[int] = None) -> SelfcheckResult:
    cases = settings.cases if cases is None else cases
    seed = settings.seed if seed is None else seed
    result = SelfcheckResult(cases=cases, seed=seed)
    for index in range(cases):
        for name in IDENTITIES:
            run_case(settings, seed, index, name, result)
    return result
