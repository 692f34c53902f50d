"""Growth- and oscillation-index prediction from Newton polyhedron data.

The decision tree combines the exact polyhedron invariants (d, k, central
face) with the per-face torus zero diagnoses.  Two dimensions is an exact
trichotomy; three dimensions produces exact values, brackets or one-sided
bounds depending on how degenerate the faces are, with every step recorded
in a theorem trail and a certainty tag that goes numeric-dependent as soon
as any consumed diagnosis does.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .faces import (
    EXACT,
    NUMERIC,
    FaceDiagnosis,
    TorusSearchConfig,
    attach_pointwise_indices,
    face_max_zero_order,
)
from .geometry import (
    CentralFaceReport,
    NewtonPolyhedron,
    build_polyhedron,
    newton_distance,
    restrict_to_face,
)
from .poly import SparsePoly, array_evaluator

NUMERIC_INDEX_TOL = 0.05


@dataclass
class IndexPrediction:
    """Predicted growth exponent (value or bracket) with provenance.

    growth_exponent is a Fraction when kind is Exact, a (low, high) pair for
    Bracket/UpperBoundOnly/LowerBoundOnly, or None when the vanishing
    assumptions fail.  log_multiplicity follows the same convention with
    ints.  upper_strict marks a strictly-less-than upper end.
    """

    kind: str
    growth_exponent: object
    log_multiplicity: object
    theorem_trail: list[str]
    certainty: str
    upper_strict: bool = False
    notes: list[str] = field(default_factory=list)
    assumption_violations: list[str] = field(default_factory=list)
    d: Fraction | None = None
    k: int | None = None
    d_prime: int | None = None
    oscillation_status: str | None = None
    oscillation_exponent: object = None
    sign_class: str | None = None

    def exponent_bounds(self) -> tuple[float, float]:
        value = self.growth_exponent
        if value is None:
            return (math.nan, math.nan)
        if isinstance(value, tuple):
            return (float(value[0]), float(value[1]))
        return (float(value), float(value))

    def contains_exponent(self, value: float, tol: float = 1e-9) -> bool:
        lo, hi = self.exponent_bounds()
        if math.isnan(lo):
            return False
        upper_ok = value < hi + tol if not self.upper_strict else value < hi + tol
        return lo - tol <= value and upper_ok


@dataclass
class GrowthContext:
    """Everything the tree consumed: reusable by reports and oscillation."""

    poly: SparsePoly
    polyhedron: NewtonPolyhedron
    central: CentralFaceReport
    diagnoses: list[FaceDiagnosis]
    d_prime: int
    d_prime_certainty: str


def build_context(p: SparsePoly, cfg: TorusSearchConfig | None = None) -> GrowthContext:
    polyhedron = build_polyhedron(p)
    central = newton_distance(polyhedron)
    if p.dimension in (2, 3):
        d_prime, diagnoses = face_max_zero_order(p, polyhedron, cfg)
        certainty = (
            EXACT if all(diag.certainty == EXACT for diag in diagnoses) else NUMERIC
        )
    else:
        d_prime, diagnoses, certainty = 0, [], NUMERIC
    return GrowthContext(
        poly=p,
        polyhedron=polyhedron,
        central=central,
        diagnoses=diagnoses,
        d_prime=d_prime,
        d_prime_certainty=certainty,
    )


def varchenko_nondegenerate(
    p: SparsePoly, context: GrowthContext | None = None
) -> tuple[bool, str]:
    """True when no compact face polynomial vanishes on the torus."""
    context = context or build_context(p)
    degenerate = any(diag.has_torus_zero for diag in context.diagnoses)
    certainty = (
        EXACT
        if all(diag.certainty == EXACT for diag in context.diagnoses)
        else NUMERIC
    )
    return (not degenerate, certainty)


def _check_vanishing_assumptions(p: SparsePoly) -> list[str]:
    violations = []
    n = p.dimension
    constant = p.terms.get((0,) * n)
    if constant:
        violations.append("S(0) != 0")
    for i in range(n):
        unit = tuple(1 if j == i else 0 for j in range(n))
        if p.terms.get(unit):
            violations.append("grad S(0) != 0")
            break
    return violations


def _central_subface_order_hits_d(context: GrowthContext) -> bool:
    """Is there a compact face inside C(S) whose zero order equals d exactly?"""
    d = context.central.d
    if d.denominator != 1:
        return False
    central = context.central.central_face
    for diag in context.diagnoses:
        face = diag.face
        inside = set(face.exponents_on_face) <= set(central.exponents_on_face) and set(
            face.recession
        ) <= set(central.recession)
        if inside and diag.max_zero_order == int(d):
            return True
    return False


def _pointwise_floor(context: GrowthContext) -> tuple[float | None, str]:
    """Min pointwise growth index over faces with torus zeros (n = 3)."""
    best = None
    certainty = EXACT
    for diag in context.diagnoses:
        if not diag.zero_witnesses:
            continue
        if diag.min_pointwise_growth_index is None:
            continue
        if best is None or diag.min_pointwise_growth_index < best:
            best = diag.min_pointwise_growth_index
        if diag.pointwise_certainty == NUMERIC:
            certainty = NUMERIC
    return best, certainty


def predict_growth(
    p: SparsePoly,
    context: GrowthContext | None = None,
    cfg: TorusSearchConfig | None = None,
    seed: int = 0,
) -> IndexPrediction:
    """The decision tree for the growth index of |S| at the origin."""
    violations = _check_vanishing_assumptions(p)
    if "S(0) != 0" in violations:
        return IndexPrediction(
            kind="Exact",
            growth_exponent=None,
            log_multiplicity=None,
            theorem_trail=[],
            certainty=EXACT,
            assumption_violations=violations,
            notes=["sublevel sets are empty near 0 for small eps; no finite index"],
        )
    if "grad S(0) != 0" in violations:
        return IndexPrediction(
            kind="Exact",
            growth_exponent=Fraction(1),
            log_multiplicity=0,
            theorem_trail=["Eq. (1.3) shortcut"],
            certainty=EXACT,
            assumption_violations=violations,
            notes=["nonvanishing gradient at 0: measure of the sublevel set is ~ eps"],
        )

    context = context or build_context(p, cfg)
    n = p.dimension
    d = context.central.d
    k = context.central.k
    base = dict(d=d, k=k, d_prime=context.d_prime)

    if n not in (2, 3):
        nondeg, tag = varchenko_nondegenerate(p, context) if n < 2 else (False, NUMERIC)
        trail = ["Thm 1.2a"]
        if n == 1:
            # single-variable monomial-led phase: the vertex monomial never
            # vanishes off 0, so the polyhedron bound is attained
            return IndexPrediction(
                kind="Exact",
                growth_exponent=Fraction(1, 1) / d,
                log_multiplicity=0,
                theorem_trail=["Thm 1.2a", "Thm 1.2b"],
                certainty=EXACT,
                **base,
            )
        return IndexPrediction(
            kind="UpperBoundOnly",
            growth_exponent=(Fraction(0), Fraction(1, 1) / d),
            log_multiplicity=None,
            theorem_trail=trail,
            certainty=NUMERIC,
            notes=["dimension outside {2,3}: polyhedron-only output"],
            **base,
        )

    if n == 2:
        return _predict_growth_2d(context, base)
    return _predict_growth_3d(context, base, cfg, seed)


def _predict_growth_2d(context: GrowthContext, base: dict) -> IndexPrediction:
    d = context.central.d
    central = context.central.central_face
    k = context.central.k
    central_diag = None
    for diag in context.diagnoses:
        if diag.face.key() == central.key():
            central_diag = diag
            break
    degenerate_edge = (
        central.compact
        and central.dim == 1
        and central_diag is not None
        and Fraction(central_diag.max_zero_order) > d
    )
    if degenerate_edge:
        lower = (
            Fraction(1, context.d_prime) if context.d_prime > 0 else Fraction(0)
        )
        return IndexPrediction(
            kind="UpperBoundOnly",
            growth_exponent=(lower, Fraction(1, 1) / d),
            upper_strict=True,
            log_multiplicity=None,
            theorem_trail=["Thm 1.5a", "Thm 1.2c", "Thm 1.2a"],
            certainty=EXACT,
            notes=[
                "central edge polynomial vanishes on the torus to order "
                f"{central_diag.max_zero_order} > d"
            ],
            **base,
        )
    multiplicity = 1 - k
    trail = ["Thm 1.5a", "Thm 1.5b", "Thm 1.2a"]
    if (
        central.compact
        and central_diag is not None
        and d.denominator == 1
        and central_diag.max_zero_order == int(d)
    ):
        multiplicity = 1
        trail.insert(2, "Thm 1.4b")
    return IndexPrediction(
        kind="Exact",
        growth_exponent=Fraction(1, 1) / d,
        log_multiplicity=multiplicity,
        theorem_trail=trail,
        certainty=EXACT,
        **base,
    )


def _predict_growth_3d(
    context: GrowthContext, base: dict, cfg: TorusSearchConfig | None, seed: int
) -> IndexPrediction:
    d = context.central.d
    k = context.central.k
    n = 3
    one_over_d = Fraction(1, 1) / d
    certainty = context.d_prime_certainty

    if Fraction(context.d_prime) <= d:
        # every face order is at most d: reciprocal Newton distance is exact
        mult_low = n - k - 1
        mult_high = n - k
        trail = ["Thm 1.2a", "Thm 1.2b"]
        if not _central_subface_order_hits_d(context):
            mult_high = mult_low
        multiplicity = mult_low if mult_low == mult_high else (mult_low, mult_high)
        return IndexPrediction(
            kind="Exact",
            growth_exponent=one_over_d,
            log_multiplicity=multiplicity,
            theorem_trail=trail,
            certainty="exact" if certainty == EXACT else "numeric-dependent",
            **base,
        )

    # degenerate: some face order d' > d
    attach_pointwise_indices(context.diagnoses, cfg, seed=seed)
    floor, floor_tag = _pointwise_floor(context)
    trail = ["Thm 1.2a", "Thm 1.2c"]
    lower = Fraction(1, context.d_prime)
    upper = one_over_d
    upper_strict = False
    notes = []
    overall = EXACT if (certainty == EXACT and floor_tag == EXACT) else NUMERIC

    if floor is not None:
        near = NUMERIC_INDEX_TOL if floor_tag == NUMERIC else 0
        if floor >= float(one_over_d) - near:
            strict = floor > float(one_over_d) + near
            trail.append("Thm 1.3b")
            multiplicity = (n - k - 1, 2) if not strict else n - k - 1
            return IndexPrediction(
                kind="Exact",
                growth_exponent=one_over_d,
                log_multiplicity=multiplicity,
                theorem_trail=trail,
                certainty="exact" if overall == EXACT else "numeric-dependent",
                notes=["pointwise growth indices of all faces reach 1/d"],
                **base,
            )
        trail.append("Thm 1.3c")
        refined = Fraction(floor).limit_denominator(1_000_000) if floor_tag == EXACT else floor
        if float(refined) > float(lower):
            lower = refined
            notes.append("bracket lower end from the pointwise index floor")
        central_diag = next(
            (
                diag
                for diag in context.diagnoses
                if diag.face.key() == context.central.central_face.key()
            ),
            None,
        )
        if (
            context.central.central_compact
            and central_diag is not None
            and central_diag.min_pointwise_growth_index is not None
            and central_diag.min_pointwise_growth_index < float(one_over_d) - near
        ):
            trail.append("Thm 1.4a")
            upper_strict = True
            notes.append(
                "central face has a torus zero with pointwise index below 1/d: "
                "the exponent sits strictly below 1/d"
            )

    return IndexPrediction(
        kind="Bracket",
        growth_exponent=(lower, upper),
        upper_strict=upper_strict,
        log_multiplicity=(0, 2),
        theorem_trail=trail,
        certainty="exact" if overall == EXACT else "numeric-dependent",
        notes=notes,
        **base,
    )


# -- sign classification and oscillation transfer ------------------------------

def _fraction_sqrt(value: Fraction) -> Fraction | None:
    if value < 0:
        return None
    num = math.isqrt(value.numerator)
    den = math.isqrt(value.denominator)
    if num * num == value.numerator and den * den == value.denominator:
        return Fraction(num, den)
    return None


def poly_exact_sqrt(p: SparsePoly) -> SparsePoly | None:
    """q with q*q == p, or None.  Exact, term-by-term elimination in lex order."""
    if p.is_zero():
        return SparsePoly.zero(p.dimension)
    if not p.has_integer_exponents():
        return None

    def lead(poly: SparsePoly):
        return max(poly.terms, key=lambda e: tuple(e))

    lt = lead(p)
    if any(int(c) % 2 for c in lt):
        return None
    root_coeff = _fraction_sqrt(p.terms[lt])
    if root_coeff is None:
        return None
    q = SparsePoly(p.dimension, {tuple(c // 2 for c in lt): root_coeff})
    limit = 4 * len(p.terms) + 8
    for _ in range(limit):
        remainder = p - q * q
        if remainder.is_zero():
            return q
        r_lt = lead(remainder)
        q_lt = lead(q)
        step = tuple(int(a) - int(b) for a, b in zip(r_lt, q_lt))
        if any(c < 0 for c in step):
            return None
        coeff = remainder.terms[r_lt] / (2 * q.terms[q_lt])
        q = q + SparsePoly(p.dimension, {step: coeff})
    return None


def classify_sign(p: SparsePoly, samples: int = 100_000, seed: int = 0) -> str:
    """'nonnegative' / 'nonpositive' / 'indefinite' / 'undetermined' near 0.

    Syntactic certificates first (same-signed terms with even exponents, or a
    perfect square), then a sampling fallback over (-1/4, 1/4)^n.
    """
    if p.is_zero():
        return "nonnegative"
    if p.has_integer_exponents():
        even = all(int(c) % 2 == 0 for e in p.terms for c in e)
        if even and all(c > 0 for c in p.terms.values()):
            return "nonnegative"
        if even and all(c < 0 for c in p.terms.values()):
            return "nonpositive"
        if poly_exact_sqrt(p) is not None:
            return "nonnegative"
        if poly_exact_sqrt(-p) is not None:
            return "nonpositive"
    rng = np.random.default_rng((seed, 71993))
    evaluate = array_evaluator(p)
    points = rng.uniform(-0.25, 0.25, size=(samples, p.dimension))
    values = evaluate(points)
    if (values > 0).any() and (values < 0).any():
        return "indefinite"
    return "undetermined"


def _bracket_contains_odd_integer(lo: float, hi: float, upper_strict: bool) -> bool:
    first = math.ceil(lo - 1e-12)
    if first % 2 == 0:
        first += 1
    if upper_strict:
        return first < hi - 1e-12
    return first <= hi + 1e-12


def predict_oscillation(
    p: SparsePoly,
    growth: IndexPrediction,
    seed: int = 0,
) -> IndexPrediction:
    """Sublevel-to-oscillatory transfer per the leading-term cancellation rule.

    The decay exponent of the oscillatory integral equals the growth exponent
    when d > 1, when the phase is single-signed near 0, or when the known
    growth exponent is not an odd integer; cancellation of the two leading
    sublevel terms is only possible at odd integer exponents with an
    indefinite phase.  The one-way bound (decay at least as fast as every
    sublevel upper bound) always holds and is recorded on the trail.
    """
    sign_class = classify_sign(p, seed=seed)
    growth.sign_class = sign_class
    trail = list(growth.theorem_trail)
    notes = list(growth.notes)
    notes.append(
        "one-way bound (Thm 1.6b): the oscillatory integral decays at least "
        "as fast as every sublevel upper bound"
    )
    notes.append(
        "transfer rule implemented: growth exponent not an odd integer; the "
        "companion phrasing (d not the reciprocal of an odd integer) is "
        "surfaced here for comparison"
    )
    status = None
    if growth.growth_exponent is None:
        status = "Unknown"
    elif growth.d is not None and growth.d > 1:
        status = "Transfers"
        trail.append("Thm 1.6a (d > 1)")
    elif sign_class in ("nonnegative", "nonpositive"):
        status = "Transfers"
        trail.append("Thm 1.6a (single-signed phase)")
    else:
        lo, hi = growth.exponent_bounds()
        odd_possible = _bracket_contains_odd_integer(lo, hi, growth.upper_strict)
        if not odd_possible:
            status = "Transfers"
            trail.append("Thm 1.6a (no odd integer in the exponent range)")
        elif sign_class == "undetermined":
            status = "TransfersConditionally"
            trail.append("Thm 1.6a (pending sign determination)")
        else:
            status = "Unknown"
            notes.append(
                "indefinite phase with a possibly odd-integer growth exponent: "
                "leading-term cancellation cannot be ruled out"
            )
    result = IndexPrediction(
        kind=growth.kind,
        growth_exponent=growth.growth_exponent,
        log_multiplicity=growth.log_multiplicity,
        theorem_trail=trail,
        certainty=growth.certainty,
        upper_strict=growth.upper_strict,
        notes=notes,
        assumption_violations=list(growth.assumption_violations),
        d=growth.d,
        k=growth.k,
        d_prime=growth.d_prime,
        oscillation_status=status,
        oscillation_exponent=growth.growth_exponent if status == "Transfers" else None,
        sign_class=sign_class,
    )
    return result
