"""Machine-readable analysis reports.

One JSON document ties the exact invariants, the prediction with its theorem
trail, and any measured fits together, with provenance (seed, semantic config
hash, tool version) so runs are reproducible.  Fractions serialize as "p/q"
strings; floats print with 12 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction

from . import __version__
from .faces import FaceDiagnosis
from .geometry import CentralFaceReport, Face, NewtonPolyhedron
from .measure import FitResult
from .oscillation import OscPoint, TransferReport
from .poly import SparsePoly, format_poly
from .predictor import GrowthContext, IndexPrediction


def _frac(value) -> str:
    return str(Fraction(value))


def _number(value):
    if value is None:
        return None
    if isinstance(value, Fraction):
        return _frac(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return float(f"{value:.12g}")
    return value


def _exponent_field(value):
    if value is None:
        return None
    if isinstance(value, tuple):
        return [_number(value[0]), _number(value[1])]
    return _number(value)


def face_dict(face: Face) -> dict:
    return {
        "normal": list(face.normal),
        "offset": _frac(face.offset),
        "exponents": [[_number(c) for c in e] for e in face.exponents_on_face],
        "recession": list(face.recession),
        "dim": face.dim,
        "compact": face.compact,
    }


def polyhedron_dict(polyhedron: NewtonPolyhedron, central: CentralFaceReport) -> dict:
    return {
        "dimension": polyhedron.dimension,
        "vertices": [[_number(c) for c in v] for v in polyhedron.vertices],
        "newton_distance": _frac(central.d),
        "central_face_dim": central.k,
        "central_compact": central.central_compact,
        "central_face": face_dict(central.central_face),
        "faces": [face_dict(f) for f in polyhedron.faces],
    }


def diagnosis_dict(diag: FaceDiagnosis) -> dict:
    return {
        "face_normal": list(diag.face.normal),
        "face_dim": diag.face.dim,
        "max_zero_order": diag.max_zero_order,
        "certainty": diag.certainty,
        "nondegenerate": diag.nondegenerate,
        "witnesses": [
            {
                "point": [_number(c) for c in z.point],
                "point_exact": (
                    [_frac(c) for c in z.point_exact] if z.point_exact else None
                ),
                "order": z.order,
                "certainty": z.certainty,
            }
            for z in diag.zero_witnesses
        ],
        "min_pointwise_growth_index": _number(diag.min_pointwise_growth_index),
        "pointwise_certainty": diag.pointwise_certainty,
        "note": diag.note,
    }


def prediction_dict(pred: IndexPrediction) -> dict:
    return {
        "kind": pred.kind,
        "growth_exponent": _exponent_field(pred.growth_exponent),
        "upper_strict": pred.upper_strict,
        "log_multiplicity": _exponent_field(pred.log_multiplicity),
        "theorem_trail": list(pred.theorem_trail),
        "certainty": pred.certainty,
        "notes": list(pred.notes),
        "assumption_violations": list(pred.assumption_violations),
        "d": _number(pred.d),
        "k": pred.k,
        "d_prime": pred.d_prime,
        "oscillation_status": pred.oscillation_status,
        "oscillation_exponent": _exponent_field(pred.oscillation_exponent),
        "sign_class": pred.sign_class,
    }


def fit_dict(fit: FitResult) -> dict:
    return {
        "alpha": _number(fit.alpha),
        "beta": _number(fit.beta),
        "intercept": _number(fit.intercept),
        "alpha_se": _number(fit.alpha_se),
        "beta_se": _number(fit.beta_se),
        "residual_norm": _number(fit.residual_norm),
        "pinned_beta": fit.pinned_beta,
        "alpha_pinned": _number(fit.alpha_pinned),
        "pinned_residuals": {str(k): _number(v) for k, v in fit.pinned_residuals.items()},
        "points": [
            {"x": _number(e), "estimate": _number(v), "stderr": _number(s)}
            for e, v, s in fit.points
        ],
        "dropped_points": [_number(v) for v in fit.dropped_points],
        "note": fit.note,
    }


def transfer_dict(report: TransferReport) -> dict:
    return {
        "verdict": report.verdict,
        "alpha_growth": _number(report.alpha_growth),
        "alpha_osc": _number(report.alpha_osc),
        "tolerance": _number(report.tolerance),
        "conditions_hold": report.conditions_hold,
        "condition_detail": report.condition_detail,
        "one_way_bound_ok": report.one_way_ok,
    }


def config_hash(semantic: dict) -> str:
    canonical = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def build_report(
    text: str,
    variables: list[str],
    poly: SparsePoly,
    context: GrowthContext,
    prediction: IndexPrediction,
    growth_fit: FitResult | None = None,
    osc_fit: FitResult | None = None,
    osc_points: list[OscPoint] | None = None,
    transfer: TransferReport | None = None,
    seed: int = 0,
    semantic_config: dict | None = None,
) -> dict:
    semantic = semantic_config or {}
    report = {
        "input": {
            "text": text,
            "variables": variables,
            "canonical": format_poly(poly, variables),
            "dimension": poly.dimension,
            "terms": [
                {"exponent": [_number(c) for c in e], "coefficient": _frac(c2)}
                for e, c2 in sorted(poly.terms.items())
            ],
        },
        "polyhedron": polyhedron_dict(context.polyhedron, context.central),
        "face_diagnoses": [diagnosis_dict(d) for d in context.diagnoses],
        "d_prime": context.d_prime,
        "d_prime_certainty": context.d_prime_certainty,
        "prediction": prediction_dict(prediction),
        "provenance": {
            "seed": seed,
            "config": semantic,
            "config_hash": config_hash(semantic),
            "tool_version": __version__,
        },
    }
    if growth_fit is not None:
        report["growth_fit"] = fit_dict(growth_fit)
    if osc_fit is not None:
        report["oscillation_fit"] = fit_dict(osc_fit)
    if osc_points is not None:
        report["oscillation_points"] = [
            {
                "lambda": _number(q.lam),
                "re": _number(q.value.real),
                "im": _number(q.value.imag),
                "abs": _number(abs(q.value)),
                "error": _number(q.error),
                "reliable": q.reliable,
            }
            for q in osc_points
        ]
    if transfer is not None:
        report["transfer"] = transfer_dict(transfer)
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)


def sweep_csv(points: list[tuple[float, float, float]], shells: int) -> str:
    lines = ["eps,estimate,stderr,shells_used"]
    for e, v, s in points:
        lines.append(f"{e:.12g},{v:.12g},{s:.12g},{shells}")
    return "\n".join(lines) + "\n"


def oscillation_csv(points: list[OscPoint]) -> str:
    lines = ["lambda,re,im,abs,error"]
    for q in points:
        lines.append(
            f"{q.lam:.12g},{q.value.real:.12g},{q.value.imag:.12g},"
            f"{abs(q.value):.12g},{q.error:.12g}"
        )
    return "\n".join(lines) + "\n"
