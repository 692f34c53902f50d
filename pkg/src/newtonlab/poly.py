"""Exact sparse multivariate polynomials over the rationals.

A polynomial in n variables is a finite map from exponent vectors to nonzero
Fraction coefficients.  Exponents are tuples of nonnegative rationals: plain
integers for ordinary phases, Fractions with a common denominator after
monomial coordinate changes introduce fractional powers.  All structural
operations (parsing, differentiation, translation, face restriction) are
exact; floating point enters only through the evaluation helpers.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[Fraction | int, ...]


class PolyError(ValueError):
    """Base class for polynomial input errors."""


class PolyParseError(PolyError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class PolyDomainError(PolyError):
    """Operation outside the domain it is defined on (e.g. fractional powers)."""


def _exp_component(value) -> Fraction | int:
    f = Fraction(value)
    return int(f) if f.denominator == 1 else f


def make_exponent(components: Iterable) -> Exponent:
    exp = tuple(_exp_component(c) for c in components)
    if any(c < 0 for c in exp):
        raise PolyError(f"negative exponent component in {exp}")
    return exp


class SparsePoly:
    """Sparse polynomial: dimension + canonical {exponent: coefficient} map.

    Value semantics: instances are treated as immutable and are safe to share.
    Zero coefficients are never stored; the zero polynomial has an empty map.
    """

    __slots__ = ("dimension", "terms")

    def __init__(self, dimension: int, terms: Mapping[Exponent, Fraction] | None = None):
        if dimension < 1:
            raise PolyError("dimension must be at least 1")
        self.dimension = dimension
        clean: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            c = Fraction(coeff)
            if c == 0:
                continue
            e = make_exponent(exp)
            if len(e) != dimension:
                raise PolyError(f"exponent {e} has length {len(e)}, expected {dimension}")
            if e in clean:
                raise PolyError(f"duplicate exponent key {e}")
            clean[e] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dimension: int) -> "SparsePoly":
        return cls(dimension, {})

    @classmethod
    def constant(cls, dimension: int, value) -> "SparsePoly":
        return cls(dimension, {(0,) * dimension: Fraction(value)})

    @classmethod
    def variable(cls, dimension: int, index: int) -> "SparsePoly":
        exp = [0] * dimension
        exp[index] = 1
        return cls(dimension, {tuple(exp): Fraction(1)})

    @classmethod
    def monomial(cls, exponent: Iterable, coefficient=1) -> "SparsePoly":
        exp = make_exponent(exponent)
        return cls(len(exp), {exp: Fraction(coefficient)})

    # -- basic structure ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def support(self) -> list[Exponent]:
        return sorted(self.terms)

    def has_integer_exponents(self) -> bool:
        return all(isinstance(c, int) or c.denominator == 1 for e in self.terms for c in e)

    def exponent_denominator(self) -> int:
        """Least common denominator N of all exponent components (the global 1/N)."""
        n = 1
        for e in self.terms:
            for c in e:
                if not isinstance(c, int):
                    n = n * c.denominator // math.gcd(n, c.denominator)
        return n

    def total_degree(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        return max(sum(Fraction(c) for c in e) for e in self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparsePoly)
            and self.dimension == other.dimension
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dimension, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"SparsePoly({self.dimension}, {format_poly(self)!r})"

    # -- arithmetic --------------------------------------------------------

    def _check_same_space(self, other: "SparsePoly"):
        if self.dimension != other.dimension:
            raise PolyError("dimension mismatch")

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        self._check_same_space(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return SparsePoly(self.dimension, out)

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.dimension, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return self + (-other)

    def __mul__(self, other) -> "SparsePoly":
        if not isinstance(other, SparsePoly):
            return self.scale(other)
        self._check_same_space(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(_exp_component(Fraction(a) + Fraction(b)) for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return SparsePoly(self.dimension, out)

    __rmul__ = __mul__

    def scale(self, factor) -> "SparsePoly":
        f = Fraction(factor)
        return SparsePoly(self.dimension, {e: c * f for e, c in self.terms.items()})

    def __pow__(self, k: int) -> "SparsePoly":
        if k < 0:
            raise PolyError("negative power")
        result = SparsePoly.constant(self.dimension, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- evaluation --------------------------------------------------------

    def evaluate_exact(self, point: Sequence) -> Fraction:
        """Exact rational value; requires integer exponents and rational point."""
        if not self.has_integer_exponents():
            raise PolyDomainError("exact evaluation requires integer exponents")
        pt = [Fraction(x) for x in point]
        if len(pt) != self.dimension:
            raise PolyError("point dimension mismatch")
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for x, a in zip(pt, e):
                if a:
                    term *= x ** int(a)
            total += term
        return total

    def evaluate(self, point: Sequence) -> float:
        """Floating-point value; fractional powers require nonnegative coordinates."""
        if len(point) != self.dimension:
            raise PolyError("point dimension mismatch")
        total = 0.0
        for e, c in self.terms.items():
            term = float(c)
            for x, a in zip(point, e):
                if a == 0:
                    continue
                if isinstance(a, int) or a.denominator == 1:
                    term *= float(x) ** int(a)
                else:
                    if x < 0:
                        raise PolyDomainError(
                            f"negative base {x} with fractional exponent {a}"
                        )
                    term *= float(x) ** float(a)
            total += term
        return total

    # -- calculus and rearrangement ----------------------------------------

    def gradient(self) -> list["SparsePoly"]:
        """Componentwise formal partial derivatives (integer exponents only)."""
        if not self.has_integer_exponents():
            raise PolyDomainError("gradient requires integer exponents")
        parts = []
        for i in range(self.dimension):
            out: dict[Exponent, Fraction] = {}
            for e, c in self.terms.items():
                a = int(e[i])
                if a == 0:
                    continue
                de = list(e)
                de[i] = a - 1
                key = tuple(de)
                out[key] = out.get(key, Fraction(0)) + c * a
            parts.append(SparsePoly(self.dimension, out))
        return parts

    def translate(self, shift: Sequence) -> "SparsePoly":
        """Exact binomial expansion of p(x + a)."""
        if not self.has_integer_exponents():
            raise PolyDomainError("translate requires integer exponents")
        a = [Fraction(s) for s in shift]
        if len(a) != self.dimension:
            raise PolyError("shift dimension mismatch")
        result = SparsePoly.zero(self.dimension)
        for e, c in self.terms.items():
            term = SparsePoly.constant(self.dimension, c)
            for i, power in enumerate(e):
                factor = SparsePoly(
                    self.dimension,
                    {
                        make_exponent([0] * i + [1] + [0] * (self.dimension - i - 1)): Fraction(1),
                        (0,) * self.dimension: a[i],
                    },
                )
                term = term * factor ** int(power)
            result = result + term
        return result

    def vanishing_order_at(self, point: Sequence, max_order: int) -> int | None:
        """Smallest total degree with a nonzero coefficient in p(x + a).

        Returns None when every coefficient up to ``max_order`` vanishes
        (order exceeds the bound, or p is identically zero).
        """
        if max_order < 0:
            raise PolyError("max_order must be nonnegative")
        shifted = self.translate(point)
        best: Fraction | None = None
        for e in shifted.terms:
            deg = sum(Fraction(c) for c in e)
            if best is None or deg < best:
                best = deg
        if best is None or best > max_order:
            return None
        return int(best)

    def map_exponents(self, transform: Callable[[Exponent], Iterable]) -> "SparsePoly":
        """Rebuild the polynomial with every exponent replaced by transform(e)."""
        out: dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            key = make_exponent(transform(e))
            out[key] = out.get(key, Fraction(0)) + c
        return SparsePoly(self.dimension, out)

    def permute_variables(self, perm: Sequence[int]) -> "SparsePoly":
        return self.map_exponents(lambda e: tuple(e[perm[i]] for i in range(len(e))))


# -- parsing and printing ---------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|([()^*/+-]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start():
            raise PolyParseError(f"unexpected character {text[pos]!r}", pos)
        if m.group(1) is not None:
            tokens.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        else:
            tokens.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over: expr := ['-'] term (('+'|'-') term)*;
    term := factor ('*'|'/' factor)*; factor := atom ['^' int];
    atom := int | var | '(' expr ')'.
    """

    def __init__(self, text: str, variables: Sequence[str]):
        self.tokens = _tokenize(text)
        self.index = 0
        self.variables = list(variables)
        self.var_index = {v: i for i, v in enumerate(self.variables)}
        self.dimension = len(self.variables)

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect_op(self, symbol: str):
        kind, value, pos = self.peek()
        if kind != "op" or value != symbol:
            raise PolyParseError(f"expected {symbol!r}", pos)
        return self.advance()

    def parse(self) -> SparsePoly:
        result = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise PolyParseError(f"unexpected token {value!r}", pos)
        return result

    def expr(self) -> SparsePoly:
        sign = 1
        kind, value, _ = self.peek()
        if kind == "op" and value in "+-":
            self.advance()
            sign = -1 if value == "-" else 1
        result = self.term()
        if sign < 0:
            result = -result
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                result = result + rhs if value == "+" else result - rhs
            else:
                return result

    def term(self) -> SparsePoly:
        result = self.factor()
        while True:
            kind, value, pos = self.peek()
            if kind == "op" and value == "*":
                self.advance()
                result = result * self.factor()
            elif kind == "op" and value == "/":
                # rational coefficients only: the divisor must be a constant
                self.advance()
                divisor = self.factor()
                if divisor.terms and set(divisor.terms) != {(0,) * self.dimension}:
                    raise PolyParseError("division only by integer constants", pos)
                if divisor.is_zero():
                    raise PolyParseError("division by zero", pos)
                result = result.scale(Fraction(1, 1) / divisor.terms[(0,) * self.dimension])
            else:
                return result

    def factor(self) -> SparsePoly:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            kind, value, pos = self.peek()
            if kind != "int":
                raise PolyParseError("expected integer exponent after '^'", pos)
            self.advance()
            return base ** int(value)
        return base

    def atom(self) -> SparsePoly:
        kind, value, pos = self.advance()
        if kind == "int":
            return SparsePoly.constant(self.dimension, int(value))
        if kind == "name":
            if value not in self.var_index:
                raise PolyParseError(f"unknown variable {value!r}", pos)
            return SparsePoly.variable(self.dimension, self.var_index[value])
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise PolyParseError(f"unexpected token {value!r}", pos)


def parse_poly(text: str, variables: Sequence[str]) -> SparsePoly:
    """Parse ``text`` over the ordered variable list into canonical form.

    Grammar: terms joined by + and -, each term a *-joined product of an
    optional rational coefficient (p/q or integer) and powers var^int.
    Parenthesized subexpressions raised to integer powers are accepted as
    well (they expand exactly).  Whitespace is insignificant.
    """
    if not variables:
        raise PolyError("zero-dimension input: no variables declared")
    if len(set(variables)) != len(list(variables)):
        raise PolyError("duplicate variable names")
    if not text.strip():
        raise PolyParseError("empty input", 0)
    return _Parser(text, variables).parse()


def _format_exponent_component(c) -> str:
    # fractional powers are display-only; parenthesize so they cannot be
    # misread as (x^p)/q
    return str(c) if isinstance(c, int) or c.denominator == 1 else f"({c})"


def format_poly(p: SparsePoly, variables: Sequence[str] | None = None) -> str:
    """Canonical text form; parse(format(p)) reproduces the term map."""
    names = list(variables) if variables else [f"x{i+1}" for i in range(p.dimension)]
    if len(names) != p.dimension:
        raise PolyError("variable list does not match dimension")
    if p.is_zero():
        return "0"
    pieces = []
    for e in sorted(p.terms, key=lambda e: (-sum(Fraction(c) for c in e), tuple(map(Fraction, e)))):
        c = p.terms[e]
        factors = []
        for name, a in zip(names, e):
            if a == 0:
                continue
            if a == 1:
                factors.append(name)
            else:
                factors.append(f"{name}^{_format_exponent_component(a)}")
        coeff = abs(c)
        if coeff != 1 or not factors:
            if coeff.denominator == 1:
                factors.insert(0, str(coeff.numerator))
            else:
                factors.insert(0, f"{coeff.numerator}/{coeff.denominator}")
        body = "*".join(factors)
        if not pieces:
            pieces.append(body if c > 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(pieces)


def infer_variables(text: str) -> list[str]:
    """Variables of an expression in first-appearance order (CLI default)."""
    seen: list[str] = []
    for m in re.finditer(r"[A-Za-z_][A-Za-z_0-9]*", text):
        name = m.group(0)
        if name not in seen:
            seen.append(name)
    return seen


# -- vectorized evaluation ---------------------------------------------------

def evaluate_tensor(p: SparsePoly, coords: Sequence) -> np.ndarray:
    """Evaluate p on a tensor grid given per-variable 1D arrays or scalars.

    Each array coordinate contributes one output axis, in variable order.
    Powers are taken on the 1D arrays and combined by broadcasting, so the
    cost per term on an N x M grid is one multiply-add instead of a power.
    """
    if len(coords) != p.dimension:
        raise PolyError("coordinate count mismatch")
    axes = [i for i, c in enumerate(coords) if isinstance(c, np.ndarray)]
    shape = tuple(len(coords[i]) for i in axes)
    total = np.zeros(shape)
    for e, c in p.terms.items():
        term = float(c)
        grid_factors = []
        for var, a in enumerate(e):
            if a == 0:
                continue
            base = coords[var]
            power = float(a) if not (isinstance(a, int) or a.denominator == 1) else int(a)
            if isinstance(base, np.ndarray):
                values = np.power(base, power)
                reshape = [1] * len(axes)
                reshape[axes.index(var)] = len(base)
                grid_factors.append(values.reshape(reshape))
            else:
                term *= float(base) ** power
        product = term
        for factor in grid_factors:
            product = product * factor
        total += product
    return total


def array_evaluator(p: SparsePoly) -> Callable[[np.ndarray], np.ndarray]:
    """Compile p into a numpy evaluator mapping points of shape (N, n) to (N,).

    Fractional exponents are evaluated with |x|^a, which matches the exact
    value on the nonnegative orthant where such polynomials live.
    """
    exps = np.array([[float(c) for c in e] for e in p.terms], dtype=float)
    coeffs = np.array([float(c) for c in p.terms.values()], dtype=float)
    fractional = bool(p.terms) and not p.has_integer_exponents()

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if not len(coeffs):
            return np.zeros(pts.shape[0])
        base = np.abs(pts) if fractional else pts
        total = np.zeros(pts.shape[0])
        for c, e in zip(coeffs, exps):
            term = np.full(pts.shape[0], c)
            for i, a in enumerate(e):
                if a == 0.0:
                    continue
                if a == 1.0:
                    term = term * base[:, i]
                elif fractional:
                    term = term * np.power(base[:, i], a)
                else:
                    term = term * np.power(base[:, i], int(a))
            total += term
        return total

    return evaluate
