"""Monomial coordinate changes and vertex normal-cone maps.

A monomial map is stored through its exponent matrix B: row i is the exponent
vector of the i-th new coordinate as a monomial in the old ones.  Monomials
transform by the row-replacement determinant ratio (Cramer), and for
constant-Jacobian maps equivalently by intersecting shifted row hyperplanes
with the diagonal; the two routes are kept separate so they can check each
other.  Vertex maps come from triangulated normal cones with rays normalized
to coordinate sum 1, which makes the Jacobian constant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import (
    CentralFaceReport,
    Face,
    GeometryError,
    NewtonPolyhedron,
    _null_vector,
    _primitive,
    _rank,
)
from .poly import SparsePoly

Matrix = tuple[tuple[Fraction, ...], ...]


class MonomialMapError(ValueError):
    pass


def _as_matrix(rows) -> Matrix:
    mat = tuple(tuple(Fraction(v) for v in row) for row in rows)
    n = len(mat)
    if n == 0 or any(len(row) != n for row in mat):
        raise MonomialMapError("matrix must be square")
    return mat


def det(matrix) -> Fraction:
    mat = _as_matrix(matrix)
    n = len(mat)
    total = Fraction(0)
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):  # parity by counting inversions
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = Fraction(1)
        for i in range(n):
            term *= mat[i][perm[i]]
        total += sign * term
    return total


def _replace_row(matrix: Matrix, index: int, row) -> Matrix:
    rows = list(matrix)
    rows[index] = tuple(Fraction(v) for v in row)
    return tuple(rows)


def matrix_inverse(matrix) -> Matrix:
    mat = _as_matrix(matrix)
    n = len(mat)
    d = det(mat)
    if d == 0:
        raise MonomialMapError("singular matrix")
    rows = []
    for j in range(n):
        unit = [Fraction(1 if i == j else 0) for i in range(n)]
        # Cramer on mat^T x = e_j: the solution is row j of mat^{-1}
        rows.append(tuple(det(_replace_row(mat, i, unit)) / d for i in range(n)))
    return tuple(rows)


def column_sums(matrix) -> tuple[Fraction, ...]:
    mat = _as_matrix(matrix)
    return tuple(sum(row[j] for row in mat) for j in range(len(mat)))


@dataclass(frozen=True)
class MonomialMap:
    """Coordinate change new_i = old^{B_i} with det(B) != 0.

    ``substitution_matrix`` gives the reverse reading old_i = new^{row_i};
    its rows are what a cone construction produces.  ``jacobian_exponent``
    is the exponent vector of det D(old -> new) in the old coordinates
    (column sums of B minus the all-ones vector).
    """

    B: Matrix
    rays: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "B", _as_matrix(self.B))
        if det(self.B) == 0:
            raise MonomialMapError("singular exponent matrix")

    @classmethod
    def from_forward(cls, rows, rays=None) -> "MonomialMap":
        return cls(_as_matrix(rows), rays)

    @classmethod
    def from_substitution(cls, rows, rays=None) -> "MonomialMap":
        """Build from the old-in-terms-of-new reading (x_i = z^{rows_i})."""
        return cls(matrix_inverse(rows), rays)

    @property
    def dimension(self) -> int:
        return len(self.B)

    @property
    def substitution_matrix(self) -> Matrix:
        return matrix_inverse(self.B)

    @property
    def jacobian_exponent(self) -> tuple[Fraction, ...]:
        return tuple(s - 1 for s in column_sums(self.B))

    @property
    def constant_jacobian(self) -> bool:
        return all(s == 1 for s in column_sums(self.B))

    @property
    def root_denominator(self) -> int:
        """N such that transformed exponents live in (1/N) * Z."""
        n = 1
        inv = matrix_inverse(self.B)
        for row in inv:
            for v in row:
                n = n * v.denominator // math.gcd(n, v.denominator)
        return n

    def serialize(self) -> dict:
        as_strings = lambda m: [[str(v) for v in row] for row in m]
        return {
            "matrix": as_strings(self.B),
            "substitution_matrix": as_strings(self.substitution_matrix),
            "jacobian_exponent": [str(v) for v in self.jacobian_exponent],
            "constant_jacobian": self.constant_jacobian,
            "root_denominator": self.root_denominator,
            "rays": [list(r) for r in self.rays] if self.rays else None,
        }


def jacobian_exponent(matrix) -> tuple[Fraction, ...]:
    """Exponent vector of the Jacobian determinant of the map z -> z^{rows}."""
    mat = _as_matrix(matrix.B if isinstance(matrix, MonomialMap) else matrix)
    if det(mat) == 0:
        raise MonomialMapError("singular exponent matrix")
    return tuple(s - 1 for s in column_sums(mat))


def normalize_constant_jacobian(matrix) -> MonomialMap:
    """Rescale columns by k_j = 1/(column sum j) so the Jacobian is constant.

    Requires nonnegative entries and positive column sums (the setting where
    composing with a power map makes sense).
    """
    mat = _as_matrix(matrix.B if isinstance(matrix, MonomialMap) else matrix)
    if any(v < 0 for row in mat for v in row):
        raise MonomialMapError("normalization requires nonnegative entries")
    sums = column_sums(mat)
    if any(s <= 0 for s in sums):
        raise MonomialMapError("zero column sum: map is not invertible")
    scaled = tuple(tuple(v / s for v, s in zip(row, sums)) for row in mat)
    return MonomialMap(scaled)


def transform_exponent_cramer(mmap: MonomialMap | Matrix, alpha) -> tuple[Fraction, ...]:
    """Transformed exponent by row replacement: component i is det(B_{i,a})/det(B)."""
    mat = _as_matrix(mmap.B if isinstance(mmap, MonomialMap) else mmap)
    d = det(mat)
    if d == 0:
        raise MonomialMapError("singular exponent matrix")
    a = [Fraction(v) for v in alpha]
    return tuple(det(_replace_row(mat, i, a)) / d for i in range(len(mat)))


def transform_exponent_geometric(mmap: MonomialMap | Matrix, alpha) -> tuple[Fraction, ...]:
    """Transformed exponent as hyperplane-diagonal intersections.

    Component i is the diagonal parameter t where the hyperplane spanned by
    the rows other than i, shifted by alpha, meets {(t,...,t)}.  Only valid
    for constant-Jacobian maps; the denominators det(B_{i,1}) then all equal
    det(B), which is what makes this agree with the Cramer route.
    """
    mat = _as_matrix(mmap.B if isinstance(mmap, MonomialMap) else mmap)
    if any(s != 1 for s in column_sums(mat)):
        raise MonomialMapError("geometric transform requires a constant-Jacobian map")
    a = [Fraction(v) for v in alpha]
    ones = [Fraction(1)] * len(mat)
    out = []
    for i in range(len(mat)):
        denominator = det(_replace_row(mat, i, ones))
        if denominator == 0:
            raise MonomialMapError(
                "hyperplane parallel to the diagonal: internal inconsistency"
            )
        out.append(det(_replace_row(mat, i, a)) / denominator)
    return tuple(out)


def substitute_monomial_map(p: SparsePoly, mmap: MonomialMap) -> SparsePoly:
    """Rewrite p in the new coordinates; coefficients are unchanged."""
    if mmap.dimension != p.dimension:
        raise MonomialMapError("map/polynomial dimension mismatch")
    return p.map_exponents(lambda e: transform_exponent_cramer(mmap, e))


# -- vertex normal-cone maps --------------------------------------------------

def normal_cone_rays(polyhedron: NewtonPolyhedron, vertex) -> list[tuple[int, ...]]:
    """Primitive extreme rays of {a >= 0 : a.vertex <= a.w for all support w}."""
    v = tuple(Fraction(c) for c in vertex)
    n = polyhedron.dimension
    if tuple(int(c) if Fraction(c).denominator == 1 else c for c in vertex) not in set(
        polyhedron.vertices
    ):
        raise GeometryError(f"{vertex} is not a vertex of the polyhedron")
    constraints = [
        tuple(Fraction(w_i) - v_i for w_i, v_i in zip(w, v))
        for w in polyhedron.source_exponents
        if tuple(w) != tuple(vertex)
    ]
    constraints += [
        tuple(Fraction(1 if j == i else 0) for j in range(n)) for i in range(n)
    ]

    def feasible(ray) -> bool:
        return all(sum(r * c for r, c in zip(ray, con)) >= 0 for con in constraints)

    rays: set[tuple[int, ...]] = set()
    if n == 1:
        return [(1,)]
    for subset in itertools.combinations(range(len(constraints)), n - 1):
        rows = [constraints[i] for i in subset]
        if _rank([tuple(r) for r in rows]) != n - 1:
            continue
        ray = _null_vector([tuple(r) for r in rows], n)
        if ray is None:
            continue
        for candidate in (ray, tuple(-x for x in ray)):
            if feasible(candidate):
                rays.add(_primitive(candidate))
    result = sorted(rays)
    if _rank([tuple(map(Fraction, r)) for r in result]) != n:
        raise GeometryError("degenerate (non-full-dimensional) normal cone")
    return result


def _cone_facet_pairs(rays: list[tuple[int, ...]]) -> list[tuple[int, int]]:
    """Adjacent ray pairs spanning 2-faces of a full-dimensional 3D cone."""
    pairs = []
    for i, j in itertools.combinations(range(len(rays)), 2):
        rows = [tuple(map(Fraction, rays[i])), tuple(map(Fraction, rays[j]))]
        if _rank(rows) != 2:
            continue
        normal = _null_vector(rows, 3)
        if normal is None:
            continue
        others = [r for k, r in enumerate(rays) if k not in (i, j)]
        side = [sum(Fraction(a) * b for a, b in zip(normal, r)) for r in others]
        if all(s > 0 for s in side) or all(s < 0 for s in side):
            pairs.append((i, j))
    return pairs


def triangulate_cone(rays: list[tuple[int, ...]]) -> list[list[tuple[int, ...]]]:
    """Deterministic stellar triangulation from the lexicographically least ray."""
    n = len(rays[0])
    if n == 1:
        return [[rays[0]]]
    if n == 2:
        if len(rays) != 2:
            raise GeometryError("2D cone must have exactly two extreme rays")
        return [list(rays)]
    if n != 3:
        raise GeometryError("cone triangulation supports n <= 3")
    if len(rays) == 3:
        return [list(rays)]
    apex = rays[0]  # rays are sorted, so this is the lex-least
    simplices = []
    for i, j in _cone_facet_pairs(list(rays)):
        if 0 in (i, j):
            continue
        simplices.append([apex, rays[i], rays[j]])
    return simplices


def vertex_cone_maps(polyhedron: NewtonPolyhedron, vertex) -> list[MonomialMap]:
    """One constant-Jacobian map per simplicial subcone of the vertex's normal cone.

    Each subcone's rays, scaled to coordinate sum 1, become the columns of the
    substitution matrix (old coordinates as monomials in the new).  The images
    of the unit cube under these maps tile the orthant near 0 up to measure
    zero, because the normal cones of all vertices tile the orthant.
    """
    if polyhedron.dimension > 3:
        raise GeometryError("vertex cone maps support n <= 3")
    rays = normal_cone_rays(polyhedron, vertex)
    maps = []
    for simplex in triangulate_cone(rays):
        normalized = [
            tuple(Fraction(c, sum(ray)) for c in ray) for ray in simplex
        ]
        # substitution matrix M: old_i = new^{M_i}, column l = normalized ray l
        m = tuple(
            tuple(normalized[l][i] for l in range(len(simplex)))
            for i in range(polyhedron.dimension)
        )
        maps.append(MonomialMap.from_substitution(m, rays=tuple(simplex)))
    return maps


# -- Lemma 2.6 style property checks ------------------------------------------

@dataclass(frozen=True)
class ConeMapCheck:
    bounded_by_d: bool
    count_at_d_bounded: bool
    count_at_d_implies_central: bool
    central_face_all_at_d: bool
    sigma_blocks: dict
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def _face_subset(inner: Face, outer: Face) -> bool:
    return set(inner.exponents_on_face) <= set(outer.exponents_on_face) and set(
        inner.recession
    ) <= set(outer.recession)


def check_lemma26(
    mmap: MonomialMap,
    face: Face,
    report: CentralFaceReport,
    p: SparsePoly,
    polyhedron: NewtonPolyhedron | None = None,
) -> ConeMapCheck:
    """Verify the sigma-block bounds of transformed vertex exponents.

    For every vertex v of the polyhedron on the face, with sigma-block the
    first n - dim(face) components of the transformed exponent: (a) every
    component lies in [0, d]; (b) at most n - k components equal d; (c) if
    exactly n - k do, the face is contained in the central face; (d) if the
    face is the central face, all n - k components equal d.
    """
    from .geometry import build_polyhedron

    polyhedron = polyhedron or build_polyhedron(p)
    n = polyhedron.dimension
    block = n - face.dim
    d = report.d
    k = report.k
    face_vertices = polyhedron.face_vertices(face)
    if not face_vertices:
        raise MonomialMapError("map/face mismatch: face carries no vertex")
    failures = []
    blocks = {}
    for v in face_vertices:
        transformed = transform_exponent_cramer(mmap, v)
        sigma = transformed[:block]
        blocks[tuple(v)] = sigma
        if not all(0 <= value <= d for value in sigma):
            failures.append(f"clause a at vertex {v}: block {sigma} leaves [0, {d}]")
        at_d = sum(1 for value in sigma if value == d)
        if at_d > n - k:
            failures.append(f"clause b at vertex {v}: {at_d} components equal d")
        if at_d == n - k and not _face_subset(face, report.central_face):
            failures.append(
                f"clause c at vertex {v}: {at_d} = n-k components but face not in C(S)"
            )
        if face.key() == report.central_face.key() and at_d != n - k:
            failures.append(
                f"clause d at vertex {v}: central face block has {at_d} != n-k at d"
            )
    bounded = not any(f.startswith("clause a") for f in failures)
    count_ok = not any(f.startswith("clause b") for f in failures)
    central_ok = not any(f.startswith("clause c") for f in failures)
    all_at_d = not any(f.startswith("clause d") for f in failures)
    return ConeMapCheck(
        bounded_by_d=bounded,
        count_at_d_bounded=count_ok,
        count_at_d_implies_central=central_ok,
        central_face_all_at_d=all_at_d,
        sigma_blocks=blocks,
        failures=tuple(failures),
    )
