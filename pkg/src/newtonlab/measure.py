"""Sublevel-set volume measurement and exponent fitting.

The estimator stratifies the sampling cube into dyadic max-norm shells:
uniform Monte Carlo cannot resolve volumes like eps^{3/2} at eps = 1e-6, but
conditioned on a shell the sublevel fraction is O(1)-estimable wherever the
phase is origin-dominated.  One sample set per shell serves every eps in a
sweep, which makes V(eps) exactly monotone for a fixed seed.

The exact oracle for monomial phases comes from the identity that
|{x in (0,1)^n : prod x_i^{m_i} < delta}| is the upper tail of a weighted sum
of standard exponentials in y_i = ln(1/x_i); symbolic convolution over
Fraction yields the closed form as terms delta^{1/m_i} * (polynomial in
ln(1/delta)), evaluated in high precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .poly import SparsePoly, array_evaluator


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    eta: float = 0.5
    eps: tuple[float, ...] = tuple(np.geomspace(1e-1, 1e-6, 11))
    samples_per_shell: int = 200_000
    shells: int = 24
    seed: int = 0
    weight: str = "indicator"  # or "bump"

    def __post_init__(self):
        if not (0 < self.eta <= 1):
            raise MeasureError("eta must lie in (0, 1]")
        eps = tuple(self.eps)
        if sorted(eps, reverse=True) != list(eps):
            raise MeasureError("eps must be strictly decreasing")
        if self.shells < 4:
            raise MeasureError("need at least 4 shells")
        if self.samples_per_shell < 1:
            raise MeasureError("need at least one sample per shell")
        if self.weight not in ("indicator", "bump"):
            raise MeasureError("weight must be 'indicator' or 'bump'")

    def semantic_dict(self) -> dict:
        return {
            "eta": self.eta,
            "eps": list(self.eps),
            "samples_per_shell": self.samples_per_shell,
            "shells": self.shells,
            "seed": self.seed,
            "weight": self.weight,
        }


@dataclass
class FitResult:
    alpha: float
    beta: float
    intercept: float
    alpha_se: float
    beta_se: float
    residual_norm: float
    pinned_beta: int
    alpha_pinned: float
    pinned_residuals: dict[int, float]
    points: list[tuple[float, float, float]]  # (eps, estimate, stderr)
    dropped_points: list[float] = field(default_factory=list)
    note: str = ""


def smooth_bump(x: np.ndarray, eta: float) -> np.ndarray:
    """Product bump exp(1 - 1/(1 - (x_i/eta)^2)), zero outside |x_i| < eta."""
    u = np.asarray(x, dtype=float) / eta
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return np.prod(out, axis=-1) if out.ndim > 1 else out


def _shell_samples(rng: np.random.Generator, count: int, radius: float, dimension: int,
                   inner_fraction: float) -> np.ndarray:
    """Uniform samples from {inner_fraction * radius <= max|x_i| < radius}."""
    accepted = []
    need = count
    while need > 0:
        batch = rng.uniform(-radius, radius, size=(max(need * 2, 64), dimension))
        norms = np.max(np.abs(batch), axis=1)
        good = batch[norms >= inner_fraction * radius]
        accepted.append(good[:need])
        need -= len(good[:need])
    return np.concatenate(accepted, axis=0)


class _ShellData:
    """Per-shell samples with |S| values sorted for fast sublevel counting."""

    def __init__(self, volume: float, values: np.ndarray, weights: np.ndarray | None):
        order = np.argsort(values)
        self.volume = volume
        self.values = values[order]
        self.count = len(values)
        if weights is None:
            self.weight_prefix = None
            self.weight_sq_prefix = None
            self.weight_total = float(self.count)
        else:
            w = weights[order]
            self.weight_prefix = np.concatenate([[0.0], np.cumsum(w)])
            self.weight_sq_prefix = np.concatenate([[0.0], np.cumsum(w**2)])
            self.weight_total = float(np.sum(w))

    def contribution(self, eps: float) -> tuple[float, float]:
        """(mean weighted indicator, variance of that mean) at level eps."""
        idx = int(np.searchsorted(self.values, eps, side="left"))
        n = self.count
        if self.weight_prefix is None:
            # add-half keeps the variance honest when no sample lands below eps
            p = idx / n
            p_var = (idx + 0.5) / (n + 1.0)
            return p, p_var * (1.0 - p_var) / n
        s1 = self.weight_prefix[idx]
        s2 = self.weight_sq_prefix[idx]
        mean = s1 / n
        var = max(s2 / n - mean**2, (0.5 / (n + 1.0)) / n)
        return mean, var / n


def _build_shells(p: SparsePoly, cfg: SweepConfig) -> list[_ShellData]:
    evaluate = array_evaluator(p)
    n = p.dimension
    shells = []
    for j in range(cfg.shells + 1):
        radius = cfg.eta * 2.0**-j
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 52121, j)))
        if j < cfg.shells:
            volume = (2 * radius) ** n * (1 - 2.0**-n)
            samples = _shell_samples(rng, cfg.samples_per_shell, radius, n, 0.5)
        else:
            volume = (2 * radius) ** n  # residual inner cube
            samples = rng.uniform(-radius, radius, size=(cfg.samples_per_shell, n))
        values = np.abs(evaluate(samples))
        weights = smooth_bump(samples, cfg.eta) if cfg.weight == "bump" else None
        shells.append(_ShellData(volume, values, weights))
    return shells


def _estimate(shells: list[_ShellData], eps: float) -> tuple[float, float, float]:
    total = 0.0
    variance = 0.0
    inner = 0.0
    for index, shell in enumerate(shells):
        mean, var = shell.contribution(eps)
        total += shell.volume * mean
        variance += shell.volume**2 * var
        if index == len(shells) - 1:
            inner = shell.volume * mean
    return total, math.sqrt(variance), inner


def measure_sweep(
    p: SparsePoly, cfg: SweepConfig
) -> list[tuple[float, float, float]]:
    """[(eps, estimate, stderr)] for every eps in cfg, sharing shell samples."""
    shells = _build_shells(p, cfg)
    out = []
    for eps in cfg.eps:
        estimate, stderr, _ = _estimate(shells, eps)
        out.append((float(eps), estimate, stderr))
    return out


def sublevel_volume(
    p: SparsePoly, eps: float, cfg: SweepConfig | None = None
) -> tuple[float, float]:
    """Stratified estimate of |{x in (-eta, eta)^n : |S(x)| < eps}| (phi-weighted).

    Emits a warning string on the returned tuple's companion channel when the
    innermost cube contributes more than 1% of the total (increase shells).
    """
    cfg = cfg or SweepConfig()
    if eps <= 0:
        raise MeasureError("eps must be positive")
    shells = _build_shells(p, cfg)
    estimate, stderr, inner = _estimate(shells, eps)
    if estimate > 0 and inner > 0.01 * estimate:
        import warnings

        warnings.warn(
            f"innermost cube holds {inner / estimate:.1%} of the estimate; "
            "increase cfg.shells",
            stacklevel=2,
        )
    return estimate, stderr


# -- exact monomial volume oracle ---------------------------------------------

Terms = dict[tuple[Fraction, int], Fraction]  # (decay rate a, log power j) -> coeff
# value represented: sum coeff * L^j * exp(-a L), i.e. sum coeff * ln(1/d)^j * d^a


def _integral_power_exp(j: int, gamma: Fraction) -> tuple[Terms, Fraction]:
    """Exact ∫_0^L u^j e^{gamma u} du as (terms in (gamma_part, power), constant).

    Returned terms use rate -gamma (they multiply e^{gamma L}); the constant
    is the boundary value at 0 to subtract.
    """
    if gamma == 0:
        return {(Fraction(0), j + 1): Fraction(1, j + 1)}, Fraction(0)
    terms: Terms = {}
    for i in range(j + 1):
        coeff = Fraction((-1) ** (j - i) * math.factorial(j), math.factorial(i))
        terms[(-gamma, i)] = coeff / gamma ** (j - i + 1)
    constant = Fraction((-1) ** j * math.factorial(j)) / gamma ** (j + 1)
    return terms, constant


def _density_terms(rates: list[Fraction]) -> Terms:
    """Density of sum_i E_i / rate_i as terms c * t^j * e^{-a t}."""
    a0 = rates[0]
    density: Terms = {(a0, 0): a0}
    for b in rates[1:]:
        new: Terms = {}
        for (a, j), c in density.items():
            # conv(c t^j e^{-a t}, b e^{-b t})
            if a == b:
                key = (a, j + 1)
                new[key] = new.get(key, Fraction(0)) + c * b / (j + 1)
                continue
            inner, constant = _integral_power_exp(j, b - a)
            for (rate_part, i), coeff in inner.items():
                # rate_part = a - b; the outer factor is e^{-bL}
                key = (rate_part + b, i)
                new[key] = new.get(key, Fraction(0)) + c * b * coeff
            key = (b, 0)
            new[key] = new.get(key, Fraction(0)) - c * b * constant
        density = new
    return density


def _survival_terms(density: Terms) -> Terms:
    """Exact upper tail: ∫_L^∞ of each c * t^j * e^{-a t}."""
    survival: Terms = {}
    for (a, j), c in density.items():
        if a <= 0:
            raise MeasureError("nonpositive rate in density")
        for i in range(j + 1):
            coeff = c * Fraction(math.factorial(j), math.factorial(i)) / a ** (j - i + 1)
            key = (a, i)
            survival[key] = survival.get(key, Fraction(0)) + coeff
    return survival


def monomial_volume_terms(m: list) -> Terms:
    """Closed form of |{x in (0,1)^n : prod x_i^{m_i} < delta}|.

    Terms (a, j) -> c mean c * delta^a * ln(1/delta)^j.  Exponents m_i may be
    rational; zero entries drop out (their coordinate is unconstrained).
    """
    ms = [Fraction(v) for v in m]
    if any(v < 0 for v in ms):
        raise MeasureError("exponents must be nonnegative")
    ms = [v for v in ms if v != 0]
    if not ms:
        raise MeasureError("exponents must not all be zero")
    rates = [Fraction(1, 1) / v for v in ms]
    return _survival_terms(_density_terms(rates))


def evaluate_terms(terms: Terms, delta, dps: int = 50) -> mpmath.mpf:
    with mpmath.workdps(dps):
        d = mpmath.mpf(str(delta)) if not isinstance(delta, (int, float)) else mpmath.mpf(delta)
        L = -mpmath.log(d)
        total = mpmath.mpf(0)
        for (a, j), c in terms.items():
            total += (
                mpmath.mpf(c.numerator)
                / c.denominator
                * L**j
                * mpmath.e ** (-(mpmath.mpf(a.numerator) / a.denominator) * L)
            )
        return total


def monomial_box_volume_exact(m: list, delta) -> float:
    """High-precision value of the exact monomial sublevel volume on (0,1)^n."""
    if not (0 < float(delta) < 1):
        raise MeasureError("delta must lie in (0, 1)")
    return float(evaluate_terms(monomial_volume_terms(m), delta))


def weighted_tail_terms(m: list) -> Terms:
    """Closed form of ∫_{{x in (0,1)^n : prod x^m > delta}} delta / prod x^m dx.

    Returned terms are relative to delta * G(ln(1/delta)): the extra delta
    factor is folded in by shifting every rate by 1.
    """
    ms = [Fraction(v) for v in m]
    if any(v < 0 for v in ms):
        raise MeasureError("exponents must be nonnegative")
    active = [v for v in ms if v != 0]
    if not active:
        raise MeasureError("exponents must not all be zero")
    g: Terms = {(Fraction(0), 0): Fraction(1)}
    for mk in active:
        new: Terms = {}
        outer = (mk - 1) / mk
        for (c_exp, j), coeff in g.items():
            # ∫_0^{L/mk} e^{(mk-1)t} (L - mk t)^j e^{-c_exp (L - mk t)} dt
            gamma = -c_exp - outer
            inner, constant = _integral_power_exp(j, gamma)
            for (rate_part, i), c2 in inner.items():
                # e^{gamma L} terms multiplied by e^{outer L}: rate_part = -gamma
                key = (rate_part - outer, i)
                new[key] = new.get(key, Fraction(0)) + coeff * c2 / mk
            key = (-outer, 0)
            new[key] = new.get(key, Fraction(0)) - coeff * constant / mk
        g = new
    # multiply by delta: shift rates by +1 (delta * e^{-cL} = e^{-(c+1)L})
    return {(a + 1, j): c for (a, j), c in g.items()}


def weighted_tail_integral(m: list, delta) -> float:
    return float(evaluate_terms(weighted_tail_terms(m), delta))


@dataclass
class EnvelopeReport:
    case: str
    m: list
    deltas: list[float]
    ratios: list[float]
    ratio_inf: float
    ratio_sup: float
    last_decade_drift: float
    passed: bool


def lemma31_envelope_check(
    m: list, delta_range=(1e-8, 1e-2), case: str = "a", points: int = 25,
    drift_tolerance: float = 0.05,
) -> EnvelopeReport:
    """Ratio of the exact quantity to its asymptotic envelope over a delta range.

    Case a compares the sublevel volume to |ln d|^{l-1} d^{1/M}; cases b-d
    compare the weighted tail integral to d, |ln d|^l d, and the sublevel
    volume respectively.  PASS means the ratio stays in (0, inf) and its
    drift over the last decade is under drift_tolerance.
    """
    ms = [Fraction(v) for v in m]
    active = [v for v in ms if v != 0]
    big_m = max(active)
    l = sum(1 for v in active if v == big_m)
    if case == "b" and not big_m < 1:
        raise MeasureError("case b requires M < 1")
    if case == "c" and big_m != 1:
        raise MeasureError("case c requires M = 1")
    if case == "d" and not big_m > 1:
        raise MeasureError("case d requires M > 1")
    lo, hi = min(delta_range), max(delta_range)
    deltas = list(np.geomspace(hi, lo, points))
    volume_terms = monomial_volume_terms(ms)
    tail_terms = weighted_tail_terms(ms) if case in "bcd" else None
    ratios = []
    for d in deltas:
        ln = math.log(1.0 / d)
        if case == "a":
            envelope = ln ** (l - 1) * float(d) ** float(1 / big_m)
            value = float(evaluate_terms(volume_terms, d))
        elif case == "b":
            envelope = float(d)
            value = float(evaluate_terms(tail_terms, d))
        elif case == "c":
            envelope = float(d) * ln**l
            value = float(evaluate_terms(tail_terms, d))
        else:
            envelope = float(evaluate_terms(volume_terms, d))
            value = float(evaluate_terms(tail_terms, d))
        ratios.append(value / envelope)
    decade = [r for d, r in zip(deltas, ratios) if d <= lo * 10]
    mean = sum(decade) / len(decade)
    drift = (max(decade) - min(decade)) / mean if mean > 0 else math.inf
    finite = all(math.isfinite(r) and r > 0 for r in ratios)
    return EnvelopeReport(
        case=case,
        m=[str(v) for v in ms],
        deltas=deltas,
        ratios=ratios,
        ratio_inf=min(ratios),
        ratio_sup=max(ratios),
        last_decade_drift=drift,
        passed=finite and drift < drift_tolerance,
    )


# -- exponent fitting ---------------------------------------------------------

def _weighted_lstsq(design: np.ndarray, target: np.ndarray, weights: np.ndarray):
    w = np.sqrt(weights)
    a = design * w[:, None]
    b = target * w
    coeffs, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = a @ coeffs - b
    dof = max(len(b) - design.shape[1], 1)
    scale = float(residual @ residual) / dof
    cov = np.linalg.inv(a.T @ a) * scale
    return coeffs, math.sqrt(float(residual @ residual)), np.sqrt(np.diag(cov))


def fit_sweep(points: list[tuple[float, float, float]], dimension: int,
              curvature_threshold: float = 0.05, se_floor: float = 0.01,
              max_drops: int = 2) -> FitResult:
    """Weighted fit of log V against [log eps, log log(1/eps), 1].

    Nonpositive estimates are excluded; up to ``max_drops`` of the largest eps
    are dropped while the log-log slope drift at the large end exceeds the
    threshold (pre-asymptotic regime), and any drop is reported, never
    silent.  The statistical weights carry an se floor so that
    sharply-measured pre-asymptotic points cannot drown out the asymptotic
    tail.
    """
    usable = [(e, v, s) for e, v, s in points if v > 0]
    if len(usable) < 4:
        raise MeasureError(
            "not enough positive volume estimates to fit (degenerate input or "
            "eps too small for the sampling budget)"
        )
    usable.sort(key=lambda t: -t[0])

    def tail_slope(rows) -> float:
        tail = rows[-min(5, len(rows)) :]
        x = np.array([math.log(e) for e, _, _ in tail])
        y = np.array([math.log(v) for _, v, _ in tail])
        w = np.array([1.0 / ((s / v) ** 2 + se_floor**2) for _, v, s in tail])
        xm = np.average(x, weights=w)
        ym = np.average(y, weights=w)
        return float(np.sum(w * (x - xm) * (y - ym)) / np.sum(w * (x - xm) ** 2))

    dropped = []
    for _ in range(max_drops):
        if len(usable) < 5:
            break
        x = [math.log(e) for e, _, _ in usable[:2]]
        y = [math.log(v) for _, v, _ in usable[:2]]
        slope_head = (y[1] - y[0]) / (x[1] - x[0])
        if abs(slope_head - tail_slope(usable)) > curvature_threshold:
            dropped.append(usable[0][0])
            usable = usable[1:]
        else:
            break
    eps = np.array([e for e, _, _ in usable])
    est = np.array([v for _, v, _ in usable])
    se = np.array([max(s, 1e-300) for _, _, s in usable])
    log_v = np.log(est)
    se_log = np.sqrt((se / est) ** 2 + se_floor**2)
    weights = 1.0 / se_log**2
    ll = np.log(np.log(1.0 / eps))
    design = np.column_stack([np.log(eps), ll, np.ones_like(eps)])
    coeffs, resid, errors = _weighted_lstsq(design, log_v, weights)
    pinned = {}
    for beta in range(0, max(dimension, 1)):
        design2 = np.column_stack([np.log(eps), np.ones_like(eps)])
        target2 = log_v - beta * ll
        c2, r2, _ = _weighted_lstsq(design2, target2, weights)
        pinned[beta] = (float(c2[0]), r2)
    # an extra log factor must earn its keep: slow power corrections mimic
    # mild logs, so a higher log power is chosen only when its residual
    # decisively beats every lower one
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
        points=[(float(e), float(v), float(s)) for e, v, s in points],
        dropped_points=dropped,
    )


def sweep_and_fit(p: SparsePoly, cfg: SweepConfig | None = None) -> FitResult:
    """Measure V(eps) over the sweep and fit the leading exponent and log power."""
    cfg = cfg or SweepConfig()
    if len(cfg.eps) < 6:
        raise MeasureError("need at least 6 eps points to fit")
    points = measure_sweep(p, cfg)
    return fit_sweep(points, p.dimension)
