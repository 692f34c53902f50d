"""Torus zero diagnosis of compact-face polynomials.

Every compact-face restriction is quasi-homogeneous, so its torus zero set is
a union of scaling rays and it suffices to look on the compact slice where
the largest coordinate has absolute value 1.  Three routes are combined:

* exact quadrant reduction for faces supported on a segment (any dimension):
  positive-root multiplicities of a univariate polynomial are the zero orders;
* exact syntactic certificates for 2-faces (same-signed even terms have no
  torus zeros; a single-monomial partial derivative bounds every zero order
  by 1, and a rational sign change inside one open orthant certifies a zero);
* seeded multi-start numerical minimization over the slice otherwise, with
  derivative-tensor order estimation, always tagged "numeric".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize

from .geometry import Face, GeometryError, NewtonPolyhedron, restrict_to_face
from .poly import SparsePoly, array_evaluator
from .univariate import PositiveRoot, positive_roots

EXACT = "exact"
NUMERIC = "numeric"


@dataclass(frozen=True)
class TorusZero:
    point: tuple[float, ...]
    order: int
    certainty: str
    point_exact: tuple[Fraction, ...] | None = None


@dataclass
class FaceDiagnosis:
    face: Face
    face_poly: SparsePoly
    max_zero_order: int
    certainty: str
    zero_witnesses: list[TorusZero] = field(default_factory=list)
    min_pointwise_growth_index: float | None = None
    pointwise_certainty: str | None = None
    note: str = ""

    @property
    def nondegenerate(self) -> bool:
        """Gradient of the face polynomial nonvanishing on the torus."""
        return self.max_zero_order <= 1 and not any(
            z.order > 1 for z in self.zero_witnesses
        )

    @property
    def has_torus_zero(self) -> bool:
        return self.max_zero_order >= 1


@dataclass
class TorusSearchConfig:
    mu_floor: float = 1e-3
    starts_per_patch: int = 40
    seed: int = 0
    zero_tol: float = 1e-9
    max_order: int = 8
    deriv_small: float = 1e-6
    deriv_large: float = 1e-3
    local_index_samples: int = 200_000
    local_index_radius: float = 0.05


# -- exact certificates ------------------------------------------------------

def sign_certificate(p: SparsePoly) -> str | None:
    """'positive' / 'negative' when p is provably one-signed on the torus.

    Certificate: every term has an even integer exponent vector and all
    coefficients share one sign.  Such a polynomial cannot vanish off the
    coordinate hyperplanes.
    """
    if p.is_zero() or not p.has_integer_exponents():
        return None
    if not all(int(c) % 2 == 0 for e in p.terms for c in e):
        return None
    signs = {c > 0 for c in p.terms.values()}
    if signs == {True}:
        return "positive"
    if signs == {False}:
        return "negative"
    return None


def has_single_monomial_partial(p: SparsePoly) -> bool:
    """True when some partial derivative of p is a single nonzero monomial.

    Such a partial never vanishes on the torus, so every torus zero of p has
    order at most 1.
    """
    if not p.has_integer_exponents():
        return False
    return any(len(g.terms) == 1 for g in p.gradient())


def orthant_sign_change(p: SparsePoly, grid=None) -> tuple[Fraction, ...] | None:
    """Search a rational grid for a sign change of p inside one open orthant.

    Returns an interior point of the segment certificate (the midpoint of two
    same-orthant points with opposite exact signs) or None.  A sign change
    within a single open orthant proves a torus zero exists, exactly.
    """
    if not p.has_integer_exponents():
        return None
    grid = grid or [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)]
    n = p.dimension
    for signs in itertools.product((1, -1), repeat=n):
        positive = None
        negative = None
        for magnitudes in itertools.product(grid, repeat=n):
            point = tuple(s * m for s, m in zip(signs, magnitudes))
            value = p.evaluate_exact(point)
            if value > 0:
                positive = point
            elif value < 0:
                negative = point
            else:
                return point  # exact zero on the grid
            if positive is not None and negative is not None:
                return tuple((a + b) / 2 for a, b in zip(positive, negative))
    return None


# -- exact analysis of segment faces ----------------------------------------

def _segment_direction(face: Face) -> tuple[tuple[int, ...], tuple[Fraction, ...]]:
    exps = sorted(face.exponents_on_face)
    if len(exps) < 2:
        raise GeometryError("face polynomial is a single monomial, not a segment")
    base = exps[0]
    delta = [Fraction(a) - Fraction(b) for a, b in zip(exps[-1], base)]
    denom = 1
    for d in delta:
        denom = denom * d.denominator // math.gcd(denom, d.denominator)
    ints = [int(d * denom) for d in delta]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    step = tuple(v // g for v in ints)
    return step, tuple(map(Fraction, base))


def _quadrant_polynomials(face_poly: SparsePoly, face: Face):
    """Reduce a segment-supported face polynomial to univariate quadrant polys.

    On the orthant with signs sigma the polynomial is a unit monomial times
    Q_sigma(w) with w = prod |x_i|^{step_i} ranging over (0, inf).  Yields
    (sigma, coefficient list of Q_sigma, step, base).
    """
    step, base = _segment_direction(face)
    slots: dict[int, Fraction] = {}
    for e, c in face_poly.terms.items():
        js = set()
        for i in range(len(step)):
            if step[i] != 0:
                js.add((Fraction(e[i]) - Fraction(base[i])) / step[i])
        if len(js) != 1:
            raise GeometryError("face exponents are not collinear")
        j = js.pop()
        if j.denominator != 1 or j < 0:
            raise GeometryError("face exponent off the primitive lattice")
        slots[int(j)] = c
    degree = max(slots)
    n = face_poly.dimension
    for sigma in itertools.product((1, -1), repeat=n):
        coeffs = [Fraction(0)] * (degree + 1)
        for j, c in slots.items():
            exponent = [int(b) + j * s for b, s in zip(base, step)]
            sign = 1
            for s, a in zip(sigma, exponent):
                if s < 0 and a % 2 == 1:
                    sign = -sign
            coeffs[j] = c * sign
        yield sigma, coeffs, step, base


def _witness_from_root(sigma, root: PositiveRoot, step) -> TorusZero:
    """Reconstruct a slice point with w = root from the quadrant data."""
    # put all of w on the first coordinate with a nonzero step
    pivot = next(i for i, s in enumerate(step) if s != 0)
    coords = [1.0] * len(step)
    coords[pivot] = root.value ** (1.0 / step[pivot])
    point = tuple(s * c for s, c in zip(sigma, coords))
    exact = None
    if root.exact_value is not None and step[pivot] in (1, -1):
        value = (
            root.exact_value if step[pivot] == 1 else Fraction(1, 1) / root.exact_value
        )
        exact = tuple(
            Fraction(s) * (value if i == pivot else 1) for i, s in enumerate(sigma)
        )
    return TorusZero(
        point=point, order=root.multiplicity, certainty=EXACT, point_exact=exact
    )


def edge_zero_analysis(face_poly: SparsePoly, face: Face) -> FaceDiagnosis:
    """Exact torus zero orders for a compact 1-face (any ambient dimension)."""
    if face.dim != 1 or not face.compact:
        raise GeometryError("edge analysis requires a compact 1-face")
    witnesses: list[TorusZero] = []
    max_order = 0
    seen: set = set()
    for sigma, coeffs, step, _base in _quadrant_polynomials(face_poly, face):
        if all(c == 0 for c in coeffs):
            continue
        for root in positive_roots(coeffs):
            witness = _witness_from_root(sigma, root, step)
            key = tuple(round(c, 9) for c in witness.point)
            if key in seen:
                continue
            seen.add(key)
            witnesses.append(witness)
            max_order = max(max_order, root.multiplicity)
    return FaceDiagnosis(
        face=face,
        face_poly=face_poly,
        max_zero_order=max_order,
        certainty=EXACT,
        zero_witnesses=witnesses,
    )


def edge_zero_analysis_2d(face_poly: SparsePoly, edge: Face) -> FaceDiagnosis:
    """Spec surface: the exact 2D edge analysis (Theorem 1.5 machinery)."""
    if face_poly.dimension != 2:
        raise GeometryError("edge_zero_analysis_2d requires n = 2")
    return edge_zero_analysis(face_poly, edge)


# -- numeric search (n = 3) --------------------------------------------------

def _derivative_tensor_norms(p: SparsePoly, point, max_order: int) -> list[float]:
    """Max-norms of the derivative tensors of p at the point, order 0..max_order."""
    norms = []
    layer = [p]
    norms.append(abs(layer[0].evaluate(point)))
    for _ in range(max_order):
        next_layer = []
        for q in layer:
            next_layer.extend(q.gradient())
        layer = next_layer
        if not layer:
            norms.append(0.0)
            continue
        norms.append(max(abs(q.evaluate(point)) for q in layer))
    return norms


def estimate_zero_order(
    p: SparsePoly, point, cfg: TorusSearchConfig
) -> tuple[int, str] | None:
    """Order of vanishing at a numeric witness.

    Exact when the point rationalizes to an exact zero; otherwise the first
    derivative order whose tensor norm exceeds deriv_large while all lower
    orders stay under deriv_small.  None when no order separates cleanly.
    """
    rational = tuple(Fraction(c).limit_denominator(1000) for c in point)
    if all(x != 0 for x in rational) and p.evaluate_exact(rational) == 0:
        order = p.vanishing_order_at(rational, cfg.max_order)
        if order is not None:
            return order, EXACT
    norms = _derivative_tensor_norms(p, point, cfg.max_order)
    for order in range(1, len(norms)):
        if norms[order] > cfg.deriv_large and all(
            v < cfg.deriv_small for v in norms[:order]
        ):
            return order, NUMERIC
    return None


def torus_zero_search(
    face_poly: SparsePoly,
    cfg: TorusSearchConfig | None = None,
    weights=None,
) -> list[TorusZero]:
    """Multi-start minimization of |S_F| over the slice max|x_i| = 1 (n = 3).

    Quasi-homogeneity of a compact-face polynomial sends every torus zero ray
    through the slice, so zeros found here represent all of them.  ``weights``
    are the quasi-homogeneous weights (the face's supporting normal), used to
    pull stray minimizers back onto the slice.  Points with a coordinate
    ratio beyond 1/mu_floor are not searched.  Results are deterministic for
    a fixed seed: every start has its own RNG stream.
    """
    cfg = cfg or TorusSearchConfig()
    n = face_poly.dimension
    if n != 3:
        raise GeometryError("torus_zero_search requires n = 3")
    evaluate = array_evaluator(face_poly)
    w = np.array([float(c) for c in weights], dtype=float) if weights else None

    def objective(free, patch_axis, patch_sign):
        x = np.empty(3)
        x[patch_axis] = patch_sign
        others = [i for i in range(3) if i != patch_axis]
        x[others[0]], x[others[1]] = free
        return float(evaluate(x[None, :])[0]) ** 2

    found: list[TorusZero] = []
    seen: set = set()
    start_index = 0
    for patch_axis in range(3):
        for patch_sign in (1.0, -1.0):
            others = [i for i in range(3) if i != patch_axis]
            for _ in range(cfg.starts_per_patch):
                rng = np.random.default_rng((cfg.seed, 9176, start_index))
                start_index += 1
                start = rng.uniform(-1.0, 1.0, size=2)
                result = optimize.minimize(
                    objective,
                    start,
                    args=(patch_axis, patch_sign),
                    method="Nelder-Mead",
                    options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 400},
                )
                if result.fun > cfg.zero_tol**2:
                    continue
                x = np.empty(3)
                x[patch_axis] = patch_sign
                x[others[0]], x[others[1]] = result.x
                if np.max(np.abs(x)) > 1.0 and w is not None and np.all(w > 0):
                    # quasi-homogeneity: rescale the zero ray back onto the slice
                    lam = np.min(np.abs(x) ** (-1.0 / w))
                    x = np.sign(x) * np.abs(x) * lam**w
                    if float(evaluate(x[None, :])[0]) ** 2 > cfg.zero_tol:
                        continue
                if np.min(np.abs(x)) < cfg.mu_floor or np.max(np.abs(x)) > 1.0 + 1e-9:
                    continue
                key = tuple(np.round(x, 4))
                if key in seen:
                    continue
                seen.add(key)
                estimate = estimate_zero_order(face_poly, tuple(x), cfg)
                if estimate is None:
                    continue
                order, certainty = estimate
                found.append(
                    TorusZero(point=tuple(x), order=order, certainty=NUMERIC if certainty == NUMERIC else certainty)
                )
    found.sort(key=lambda z: z.point)
    return found


# -- per-face diagnosis ------------------------------------------------------

def diagnose_face(
    p: SparsePoly,
    polyhedron: NewtonPolyhedron,
    face: Face,
    cfg: TorusSearchConfig | None = None,
) -> FaceDiagnosis:
    cfg = cfg or TorusSearchConfig()
    face_poly = restrict_to_face(p, face)
    if face.dim == 0 or len(face_poly.terms) == 1:
        return FaceDiagnosis(
            face=face,
            face_poly=face_poly,
            max_zero_order=0,
            certainty=EXACT,
            note="monomial: nonvanishing on the torus",
        )
    certificate = sign_certificate(face_poly)
    if certificate is not None:
        return FaceDiagnosis(
            face=face,
            face_poly=face_poly,
            max_zero_order=0,
            certainty=EXACT,
            note=f"{certificate} definite on the torus",
        )
    if face.dim == 1:
        return edge_zero_analysis(face_poly, face)

    # 2-face in 3D: order <= 1 certificate, then existence, then numerics
    if has_single_monomial_partial(face_poly):
        change = orthant_sign_change(face_poly)
        if change is not None:
            witness = TorusZero(
                point=tuple(float(c) for c in change),
                order=1,
                certainty=EXACT,
                point_exact=change if p.evaluate_exact(change) == 0 else None,
            )
            return FaceDiagnosis(
                face=face,
                face_poly=face_poly,
                max_zero_order=1,
                certainty=EXACT,
                zero_witnesses=[witness],
                note="single-monomial partial bounds order by 1; sign change certifies a zero",
            )
        zeros = torus_zero_search(face_poly, cfg, weights=face.normal)
        return FaceDiagnosis(
            face=face,
            face_poly=face_poly,
            max_zero_order=1 if zeros else 0,
            certainty=NUMERIC,
            zero_witnesses=zeros,
            note="single-monomial partial bounds order by 1; existence searched numerically",
        )
    zeros = torus_zero_search(face_poly, cfg, weights=face.normal)
    return FaceDiagnosis(
        face=face,
        face_poly=face_poly,
        max_zero_order=max((z.order for z in zeros), default=0),
        certainty=NUMERIC,
        zero_witnesses=zeros,
        note=f"numeric slice search, floor {cfg.mu_floor:g}",
    )


def face_max_zero_order(
    p: SparsePoly,
    polyhedron: NewtonPolyhedron,
    cfg: TorusSearchConfig | None = None,
) -> tuple[int, list[FaceDiagnosis]]:
    """d' = max torus zero order over all compact faces, with per-face reports."""
    if p.dimension not in (2, 3):
        raise GeometryError("face diagnosis supports n in {2, 3} only")
    diagnoses = [
        diagnose_face(p, polyhedron, face, cfg)
        for face in polyhedron.compact_faces()
    ]
    d_prime = max((d.max_zero_order for d in diagnoses), default=0)
    return d_prime, diagnoses


# -- pointwise growth index --------------------------------------------------

def growth_index_at_point(
    face_poly: SparsePoly, point, cfg: TorusSearchConfig | None = None, seed: int = 0
) -> tuple[float, str]:
    """Growth index of |S_F| at a torus point.

    Infinity when S_F does not vanish there, exactly 1 at a simple zero, and
    otherwise a numeric estimate from local sublevel measurement in a small
    box around the point.
    """
    cfg = cfg or TorusSearchConfig()
    if any(abs(float(c)) == 0.0 for c in point):
        raise GeometryError("pointwise growth index requires a torus point")
    # floats are approximate witnesses; only int/Fraction coordinates are exact
    exact_point = None
    if face_poly.has_integer_exponents() and all(
        isinstance(c, (int, Fraction)) for c in point
    ):
        exact_point = tuple(Fraction(c) for c in point)

    if exact_point is not None:
        value = face_poly.evaluate_exact(exact_point)
        if value != 0:
            return math.inf, EXACT
        gradient = [g.evaluate_exact(exact_point) for g in face_poly.gradient()]
        if any(g != 0 for g in gradient):
            return 1.0, EXACT
    else:
        value = face_poly.evaluate(point)
        if abs(value) > cfg.zero_tol:
            return math.inf, NUMERIC
        gradient_norm = max(abs(g.evaluate(point)) for g in face_poly.gradient())
        if gradient_norm > cfg.deriv_large:
            return 1.0, NUMERIC

    # degenerate zero: measure |{u in box : |S_F(point + u)| < eps}| ~ eps^a
    rng = np.random.default_rng((seed, 40417))
    evaluate = array_evaluator(face_poly)
    rho = cfg.local_index_radius
    samples = rng.uniform(-rho, rho, size=(cfg.local_index_samples, face_poly.dimension))
    values = np.abs(evaluate(np.asarray(point, dtype=float)[None, :] + samples))
    eps = np.geomspace(1e-3, 1e-7, 9) * max(np.median(values), 1e-12)
    fractions = np.array([(values < e).mean() for e in eps])
    keep = fractions > 0
    if keep.sum() < 3:
        return float("nan"), NUMERIC
    slope = np.polyfit(np.log(eps[keep]), np.log(fractions[keep]), 1)[0]
    return float(slope), NUMERIC


def attach_pointwise_indices(
    diagnoses: list[FaceDiagnosis],
    cfg: TorusSearchConfig | None = None,
    seed: int = 0,
) -> None:
    """Fill min_pointwise_growth_index for faces with witnesses (n = 3)."""
    cfg = cfg or TorusSearchConfig()
    for diagnosis in diagnoses:
        if not diagnosis.zero_witnesses:
            continue
        if diagnosis.face_poly.dimension != 3:
            continue
        best = None
        certainty = EXACT
        for witness in diagnosis.zero_witnesses:
            if witness.order <= 1:
                index, tag = 1.0, witness.certainty
            else:
                index, tag = growth_index_at_point(
                    diagnosis.face_poly, witness.point, cfg, seed=seed
                )
            if math.isnan(index):
                continue
            if best is None or index < best:
                best = index
            if tag == NUMERIC:
                certainty = NUMERIC
        diagnosis.min_pointwise_growth_index = best
        diagnosis.pointwise_certainty = certainty if best is not None else None
