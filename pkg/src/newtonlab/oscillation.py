"""Oscillatory integral evaluation and decay-exponent fitting.

J(lambda) = integral of e^{i lambda S(x)} phi(x) dx with phi the smooth
product bump.  Quadrature is iterated tensor Gauss-Legendre with the node
count per axis tied to the number of oscillation periods of lambda*S across
the box (at least points_per_period nodes per period), and the error
estimated by comparing two resolutions.  A declared rotational symmetry in a
coordinate pair reduces the dimension with the exact angular weight
w(r) = r * integral of phi over the circle of radius r, computed once per
sweep on the radial nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .measure import FitResult, _weighted_lstsq, smooth_bump
from .poly import SparsePoly, array_evaluator, evaluate_tensor
from .predictor import IndexPrediction, classify_sign


class OscillationError(ValueError):
    pass


@dataclass(frozen=True)
class OscConfig:
    lambdas: tuple[float, ...] = tuple(np.geomspace(10.0, 1e4, 10))
    eta: float = 0.5
    points_per_period: float = 10.0
    min_nodes: int = 48
    max_evals: float = 6e8
    radial: tuple[int, int] | None = None  # variable indices with circular symmetry
    richardson_factor: float = 1.5
    theta_nodes: int = 512

    def __post_init__(self):
        lams = tuple(self.lambdas)
        if sorted(lams) != list(lams):
            raise OscillationError("lambda list must be increasing")
        if self.max_evals <= 0:
            raise OscillationError("quadrature budget must be positive")

    def semantic_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "eta": self.eta,
            "points_per_period": self.points_per_period,
            "min_nodes": self.min_nodes,
            "max_evals": self.max_evals,
            "radial": list(self.radial) if self.radial else None,
            "theta_nodes": self.theta_nodes,
        }


@dataclass
class OscPoint:
    lam: float
    value: complex
    error: float
    reliable: bool
    nodes_per_axis: int


def _phase_range(p: SparsePoly, cfg: OscConfig) -> float:
    evaluate = array_evaluator(p)
    grids = [np.linspace(-cfg.eta, cfg.eta, 9)] * p.dimension
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, p.dimension)
    rng = np.random.default_rng(11717)
    extra = rng.uniform(-cfg.eta, cfg.eta, size=(4096, p.dimension))
    values = evaluate(np.concatenate([mesh, extra]))
    return float(values.max() - values.min())


def _gauss_nodes(count: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(min(max(count, 2), 96))
    panels = max(1, math.ceil(count / len(x)))
    edges = np.linspace(lo, hi, panels + 1)
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _bump1d(x: np.ndarray, eta: float) -> np.ndarray:
    u = np.asarray(x, dtype=float) / eta
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def _radial_weight(r: np.ndarray, cfg: OscConfig) -> np.ndarray:
    """w(r) = r * oint bump(r cos t) bump(r sin t) dt (trapezoid on the circle)."""
    theta = np.linspace(0.0, 2 * np.pi, cfg.theta_nodes, endpoint=False)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    ys = r[:, None] * cos_t[None, :]
    zs = r[:, None] * sin_t[None, :]
    vals = _bump1d(ys, cfg.eta) * _bump1d(zs, cfg.eta)
    return r * vals.mean(axis=1) * 2 * np.pi


def _check_radial_symmetry(p: SparsePoly, pair: tuple[int, int]):
    evaluate = array_evaluator(p)
    rng = np.random.default_rng(90011)
    pts = rng.uniform(-0.5, 0.5, size=(64, p.dimension))
    i, j = pair
    rotated = pts.copy()
    radius = np.hypot(pts[:, i], pts[:, j])
    angle = rng.uniform(0, 2 * np.pi, size=64)
    rotated[:, i] = radius * np.cos(angle)
    rotated[:, j] = radius * np.sin(angle)
    if not np.allclose(evaluate(pts), evaluate(rotated), rtol=1e-9, atol=1e-12):
        raise OscillationError(
            f"declared rotational symmetry in variables {pair} does not hold"
        )


def _integrate_on_grid(
    p: SparsePoly, lam: float, cfg: OscConfig, nodes_per_axis: int
) -> complex:
    """Tensor-grid quadrature; phase values come from broadcast 1D powers."""
    n = p.dimension
    coords: list = [None] * n
    weights: list[np.ndarray] = []
    if cfg.radial is not None:
        if n < 2:
            raise OscillationError("radial reduction needs at least two variables")
        i, j = cfg.radial
        for a in range(n):
            if a == j:
                coords[a] = 0.0
            elif a == i:
                r_nodes, r_w = _gauss_nodes(nodes_per_axis, 0.0, cfg.eta * math.sqrt(2))
                coords[a] = r_nodes
                weights.append(r_w * _radial_weight(r_nodes, cfg))
            else:
                x, w = _gauss_nodes(nodes_per_axis, -cfg.eta, cfg.eta)
                coords[a] = x
                weights.append(w * _bump1d(x, cfg.eta))
    else:
        for a in range(n):
            x, w = _gauss_nodes(nodes_per_axis, -cfg.eta, cfg.eta)
            coords[a] = x
            weights.append(w * _bump1d(x, cfg.eta))
    grid_axes = [a for a in range(n) if isinstance(coords[a], np.ndarray)]
    if len(grid_axes) == 1:
        values = evaluate_tensor(p, coords)
        return complex(np.sum(weights[0] * np.exp(1j * lam * values)))
    if len(grid_axes) == 2:
        first = grid_axes[0]
        xs = coords[first]
        rows = max(1, int(2e7 // max(len(coords[grid_axes[1]]), 1)))
        total = 0.0 + 0.0j
        for start in range(0, len(xs), rows):
            block = list(coords)
            block[first] = xs[start : start + rows]
            kernel = np.exp(1j * lam * evaluate_tensor(p, block))
            total += weights[0][start : start + rows] @ kernel @ weights[1]
        return complex(total)
    if len(grid_axes) == 3:
        total = 0.0 + 0.0j
        first = grid_axes[0]
        xs = coords[first]
        for idx, x0 in enumerate(xs):
            sliced = list(coords)
            sliced[first] = float(x0)
            kernel = np.exp(1j * lam * evaluate_tensor(p, sliced))
            total += weights[0][idx] * (weights[1] @ kernel @ weights[2])
        return complex(total)
    raise OscillationError("quadrature supports up to three grid axes")


def oscillatory_integral(
    p: SparsePoly, lam: float, cfg: OscConfig | None = None
) -> OscPoint:
    """J(lambda) with a Richardson-style error estimate.

    The node count per axis targets points_per_period nodes per oscillation
    period of lambda*S across the box; when that exceeds the evaluation
    budget the result is computed at the budget cap and flagged unreliable.
    """
    cfg = cfg or OscConfig()
    if lam <= 0:
        raise OscillationError("lambda must be positive")
    if cfg.radial is not None:
        _check_radial_symmetry(p, cfg.radial)
    periods = lam * _phase_range(p, cfg) / (2 * math.pi)
    target = max(cfg.min_nodes, int(math.ceil(cfg.points_per_period * periods)))
    dims = p.dimension if cfg.radial is None else p.dimension - 1
    cap = int(cfg.max_evals ** (1.0 / max(dims, 1)))
    reliable = target <= cap
    nodes = min(target, cap)
    coarse = _integrate_on_grid(p, lam, cfg, nodes)
    finer_nodes = min(int(nodes * cfg.richardson_factor) + 1, cap)
    if finer_nodes > nodes:
        fine = _integrate_on_grid(p, lam, cfg, finer_nodes)
        error = abs(fine - coarse)
        value = fine
        used = finer_nodes
    else:
        fine = _integrate_on_grid(p, lam, cfg, max(nodes - 7, 2))
        error = abs(fine - coarse)
        value = coarse
        used = nodes
    return OscPoint(lam=lam, value=value, error=error, reliable=reliable, nodes_per_axis=used)


def oscillation_sweep(p: SparsePoly, cfg: OscConfig | None = None) -> list[OscPoint]:
    cfg = cfg or OscConfig()
    return [oscillatory_integral(p, lam, cfg) for lam in cfg.lambdas]


def decay_sweep_and_fit(
    p: SparsePoly, cfg: OscConfig | None = None, max_drops: int = 3,
    curvature_threshold: float = 0.05,
) -> FitResult:
    """Fit log|J| against [-log lambda, log log lambda, 1] over the sweep.

    Small-lambda points are dropped while their local decay slope drifts from
    the large-lambda tail slope by more than the threshold (pre-asymptotic
    regime); drops are recorded on the result.
    """
    cfg = cfg or OscConfig()
    points = oscillation_sweep(p, cfg)
    reliable = [q for q in points if q.reliable and abs(q.value) > 0]
    if len(reliable) < 6:
        raise OscillationError("fewer than 6 reliable lambda points")
    reliable.sort(key=lambda q: q.lam)
    head_dropped = []
    for _ in range(max_drops):
        if len(reliable) < 6:
            break
        tail = reliable[-5:]
        tx = np.log([q.lam for q in tail])
        ty = np.log([abs(q.value) for q in tail])
        tail_slope = np.polyfit(tx, ty, 1)[0]
        head_slope = (math.log(abs(reliable[1].value)) - math.log(abs(reliable[0].value))) / (
            math.log(reliable[1].lam) - math.log(reliable[0].lam)
        )
        if abs(head_slope - tail_slope) > curvature_threshold:
            head_dropped.append(reliable[0].lam)
            reliable = reliable[1:]
        else:
            break
    lam = np.array([q.lam for q in reliable])
    mag = np.array([abs(q.value) for q in reliable])
    err = np.array([max(q.error, 1e-300) for q in reliable])
    se_log = np.sqrt((err / mag) ** 2 + 0.01**2)
    weights = 1.0 / se_log**2
    design = np.column_stack(
        [-np.log(lam), np.log(np.log(lam)), np.ones_like(lam)]
    )
    coeffs, resid, errors = _weighted_lstsq(design, np.log(mag), weights)
    pinned = {}
    for beta in range(0, p.dimension):
        design2 = np.column_stack([-np.log(lam), np.ones_like(lam)])
        target2 = np.log(mag) - beta * np.log(np.log(lam))
        c2, r2, _ = _weighted_lstsq(design2, target2, weights)
        pinned[beta] = (float(c2[0]), r2)
    best_beta = 0
    for candidate in sorted(pinned, key=lambda b: pinned[b][1]):
        if all(pinned[candidate][1] < 0.45 * pinned[b][1] for b in pinned if b < candidate):
            best_beta = candidate
            break
    return FitResult(
        alpha=float(coeffs[0]),
        beta=float(coeffs[1]),
        intercept=float(coeffs[2]),
        alpha_se=float(errors[0]),
        beta_se=float(errors[1]),
        residual_norm=resid,
        pinned_beta=best_beta,
        alpha_pinned=pinned[best_beta][0],
        pinned_residuals={b: r for b, (_, r) in pinned.items()},
        points=[(q.lam, abs(q.value), q.error) for q in points],
        dropped_points=head_dropped + [q.lam for q in points if not q.reliable],
        note="decay fit of |J(lambda)|",
    )


# -- transfer verdicts ---------------------------------------------------------

@dataclass
class TransferReport:
    verdict: str  # MATCH | EXPECTED-MISMATCH | VIOLATION
    alpha_growth: float
    alpha_osc: float
    tolerance: float
    conditions_hold: bool
    condition_detail: str
    one_way_ok: bool
    note: str = ""


def transfer_check(
    growth,
    osc: FitResult,
    p: SparsePoly,
    d: Fraction | None = None,
    tolerance: float = 0.15,
    seed: int = 0,
) -> TransferReport:
    """Compare the measured decay exponent with the growth exponent.

    MATCH when they agree within tolerance and the transfer conditions hold;
    EXPECTED-MISMATCH when the conditions fail (indefinite phase with an
    odd-integer growth exponent and d <= 1); VIOLATION when the conditions
    hold but the fits disagree.  The one-way bound (decay at least as fast as
    the sublevel upper bound) is always asserted alongside.

    ``growth`` may be a measured FitResult or an IndexPrediction; with a
    prediction, the transfer conditions come from its oscillation status and
    agreement means the decay exponent lands in the predicted range.
    """
    alpha_osc = osc.alpha_pinned
    if isinstance(growth, IndexPrediction):
        if growth.oscillation_status is None:
            from .predictor import predict_oscillation

            growth = predict_oscillation(p, growth, seed=seed)
        lo, hi = growth.exponent_bounds()
        point = (
            float(growth.growth_exponent)
            if not isinstance(growth.growth_exponent, tuple)
            else 0.5 * (lo + hi)
        )
        conditions = growth.oscillation_status == "Transfers"
        agree = lo - tolerance <= alpha_osc <= hi + tolerance
        detail = (
            f"prediction {growth.kind} [{lo:.4g}, {hi:.4g}] "
            f"status {growth.oscillation_status}; sign: {growth.sign_class}"
        )
        alpha_growth = point
        upper = hi
    elif isinstance(growth, FitResult):
        alpha_growth = growth.alpha_pinned
        upper = alpha_growth
        sign_class = classify_sign(p, seed=seed)
        d_big = d is not None and d > 1
        nearest_odd = round(alpha_growth)
        odd_nearby = nearest_odd % 2 == 1 and abs(alpha_growth - nearest_odd) <= tolerance
        single_signed = sign_class in ("nonnegative", "nonpositive")
        conditions = d_big or single_signed or not odd_nearby
        detail = (
            f"d>1: {d_big}; sign: {sign_class}; "
            f"growth exponent near odd integer: {odd_nearby}"
        )
        agree = abs(alpha_growth - alpha_osc) <= tolerance
    else:
        raise OscillationError("growth must be a FitResult or IndexPrediction")
    if conditions and agree:
        verdict = "MATCH"
    elif not conditions:
        verdict = "EXPECTED-MISMATCH"
    else:
        verdict = "VIOLATION"
    one_way = alpha_osc >= upper - tolerance
    return TransferReport(
        verdict=verdict,
        alpha_growth=alpha_growth,
        alpha_osc=alpha_osc,
        tolerance=tolerance,
        conditions_hold=conditions,
        condition_detail=detail,
        one_way_ok=one_way,
    )
