"""Exact positive-root analysis for univariate rational polynomials.

Quadrant reduction turns every compact-edge face polynomial into a univariate
polynomial whose positive real roots (with multiplicities) carry the torus
zero structure.  sympy does the exact square-free decomposition and real-root
counting/isolation; this module adapts it to coefficient lists over Fraction.
"""

from __future__ import annotations

from fractions import Fraction

import sympy
from sympy.abc import w as _w


def _to_sympy(coeffs: list[Fraction]) -> sympy.Poly:
    expr = sum(sympy.Rational(c.numerator, c.denominator) * _w**i for i, c in enumerate(coeffs))
    return sympy.Poly(expr, _w, domain="QQ")


class PositiveRoot:
    """A positive real root with exact multiplicity and an exact flag."""

    __slots__ = ("value", "multiplicity", "exact_value")

    def __init__(self, value: float, multiplicity: int, exact_value: Fraction | None):
        self.value = value
        self.multiplicity = multiplicity
        self.exact_value = exact_value

    def __repr__(self):
        shown = self.exact_value if self.exact_value is not None else f"{self.value:.12g}"
        return f"PositiveRoot({shown}, mult={self.multiplicity})"


def positive_roots(coeffs: list[Fraction]) -> list[PositiveRoot]:
    """Positive real roots of sum(coeffs[i] * w^i) with exact multiplicities.

    The zero polynomial is rejected; a polynomial with no positive root
    returns an empty list.  Root values are floats (12+ significant digits);
    rational roots carry their exact value as well.
    """
    if all(c == 0 for c in coeffs):
        raise ValueError("zero polynomial")
    poly = _to_sympy([Fraction(c) for c in coeffs])
    roots = []
    for factor, multiplicity in poly.sqf_list()[1]:
        if factor.degree() == 0:
            continue
        for root in sympy.real_roots(factor):
            if root.is_positive:
                exact = None
                if root.is_rational:
                    rat = sympy.Rational(root)
                    exact = Fraction(int(rat.p), int(rat.q))
                roots.append(PositiveRoot(float(root.evalf(20)), multiplicity, exact))
    roots.sort(key=lambda r: r.value)
    return roots


def max_positive_root_multiplicity(coeffs: list[Fraction]) -> int:
    """Largest multiplicity among positive real roots; 0 when there are none."""
    best = 0
    poly = _to_sympy([Fraction(c) for c in coeffs])
    if poly.degree() <= 0:
        return 0
    for factor, multiplicity in poly.sqf_list()[1]:
        if factor.degree() == 0 or multiplicity <= best:
            continue
        if factor.count_roots(0, None) - factor.count_roots(0, 0) > 0:
            best = multiplicity
    return best
