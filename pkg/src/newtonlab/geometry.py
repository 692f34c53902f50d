"""Exact Newton polyhedron construction.

The polyhedron of a nonzero polynomial is conv(support) + nonnegative orthant.
Everything here is rational arithmetic: candidate facet hyperplanes are
spanned by support points together with recession directions (the coordinate
rays), faces are meets of facets, and the Newton distance comes from the
facet description directly.  No floating-point hulls.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .poly import Exponent, PolyError, SparsePoly, make_exponent


class GeometryError(ValueError):
    pass


def _dot(a, b) -> Fraction:
    return sum(Fraction(x) * Fraction(y) for x, y in zip(a, b))


def _primitive(vec) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers with positive first nonzero."""
    fracs = [Fraction(v) for v in vec]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // math.gcd(denom, f.denominator)
    ints = [int(f * denom) for f in fracs]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        raise GeometryError("zero vector has no primitive form")
    ints = [v // g for v in ints]
    for v in ints:
        if v != 0:
            if v < 0:
                ints = [-x for x in ints]
            break
    return tuple(ints)


def _rank(rows: list[tuple[Fraction, ...]]) -> int:
    """Rank over the rationals by fraction-free Gaussian elimination."""
    mat = [list(map(Fraction, r)) for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    row = 0
    for col in range(ncols):
        pivot = None
        for r in range(row, len(mat)):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        mat[row], mat[pivot] = mat[pivot], mat[row]
        for r in range(len(mat)):
            if r != row and mat[r][col] != 0:
                factor = mat[r][col] / mat[row][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[row])]
        row += 1
        rank += 1
        if row == len(mat):
            break
    return rank


def _null_vector(rows: list[tuple[Fraction, ...]], dimension: int) -> tuple[Fraction, ...] | None:
    """One nonzero rational vector orthogonal to all rows, or None if full rank."""
    mat = [list(map(Fraction, r)) for r in rows]
    pivots: list[int] = []
    row = 0
    for col in range(dimension):
        pivot = None
        for r in range(row, len(mat)):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        mat[row], mat[pivot] = mat[pivot], mat[row]
        for r in range(len(mat)):
            if r != row and mat[r][col] != 0:
                factor = mat[r][col] / mat[row][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(dimension) if c not in pivots]
    if not free:
        return None
    target = free[0]
    vec = [Fraction(0)] * dimension
    vec[target] = Fraction(1)
    for r, col in enumerate(pivots):
        vec[col] = -mat[r][target] / mat[r][col]
    return tuple(vec)


@dataclass(frozen=True)
class Face:
    """A proper face of the polyhedron with exact supporting data.

    ``normal . x >= offset`` holds on the whole polyhedron, with equality
    exactly on the face.  ``exponents_on_face`` are the source exponents on
    the face; ``recession`` are the coordinate directions the face contains.
    """

    normal: tuple[int, ...]
    offset: Fraction
    exponents_on_face: tuple[Exponent, ...]
    recession: tuple[int, ...]
    dim: int
    compact: bool

    def contains_exponent(self, exponent) -> bool:
        return _dot(self.normal, exponent) == self.offset

    def key(self):
        return (frozenset(self.exponents_on_face), frozenset(self.recession))


@dataclass(frozen=True)
class NewtonPolyhedron:
    dimension: int
    source_exponents: tuple[Exponent, ...]
    vertices: tuple[Exponent, ...]
    facets: tuple[Face, ...]
    faces: tuple[Face, ...]

    def contains(self, point) -> bool:
        """Exact membership of a rational point in conv(vertices) + orthant."""
        pt = [Fraction(x) for x in point]
        if len(pt) != self.dimension:
            raise GeometryError("point dimension mismatch")
        return all(_dot(f.normal, pt) >= f.offset for f in self.facets)

    def compact_faces(self) -> list[Face]:
        return [f for f in self.faces if f.compact]

    def face_vertices(self, face: Face) -> list[Exponent]:
        """Vertices of the polyhedron lying on the given face."""
        return [v for v in self.vertices if face.contains_exponent(v)]


@dataclass(frozen=True)
class CentralFaceReport:
    d: Fraction
    central_face: Face
    k: int
    central_compact: bool


def _face_from_normal(normal, support: list[Exponent], dimension: int) -> Face:
    """Build the contact face of a nonnegative supporting normal."""
    norm = _primitive(normal)
    if any(c < 0 for c in norm):
        raise GeometryError("supporting normal must be nonnegative")
    offset = min(_dot(norm, e) for e in support)
    on_face = tuple(sorted(e for e in support if _dot(norm, e) == offset))
    recession = tuple(i for i in range(dimension) if norm[i] == 0)
    # dim = affine dimension of (points on face) + recession span
    base = on_face[0]
    rows = [tuple(Fraction(a) - Fraction(b) for a, b in zip(e, base)) for e in on_face[1:]]
    rows += [tuple(Fraction(1 if j == i else 0) for j in range(dimension)) for i in recession]
    dim = _rank(rows)
    return Face(
        normal=norm,
        offset=offset,
        exponents_on_face=on_face,
        recession=recession,
        dim=dim,
        compact=not recession,
    )


def _candidate_facets(support: list[Exponent], dimension: int) -> list[Face]:
    """All facets: supporting hyperplanes with contact of dimension n-1.

    Every facet's affine hull is spanned by support points lying on it plus
    the coordinate rays it contains, so enumerating those spanning sets finds
    every facet of conv(support) + orthant.
    """
    seen: dict = {}
    n = dimension
    indices = range(len(support))
    for n_points in range(1, n + 1):
        n_rays = n - n_points
        for pts in itertools.combinations(indices, n_points):
            base = support[pts[0]]
            point_rows = [
                tuple(Fraction(a) - Fraction(b) for a, b in zip(support[i], base))
                for i in pts[1:]
            ]
            for rays in itertools.combinations(range(n), n_rays):
                rows = point_rows + [
                    tuple(Fraction(1 if j == i else 0) for j in range(n)) for i in rays
                ]
                if _rank(rows) != n - 1:
                    continue
                normal = _null_vector(rows, n)
                if normal is None:
                    continue
                # orient so the support lies on the >= side
                c0 = _dot(normal, base)
                side = [_dot(normal, e) - c0 for e in support]
                if all(s >= 0 for s in side):
                    oriented = normal
                elif all(s <= 0 for s in side):
                    oriented = tuple(-x for x in normal)
                else:
                    continue
                if any(x < 0 for x in oriented):
                    continue  # recession cone forces nonnegative facet normals
                face = _face_from_normal(oriented, support, n)
                if face.dim == n - 1:
                    seen[face.normal] = face
    return sorted(seen.values(), key=lambda f: (f.normal, f.offset))


def build_polyhedron(p: SparsePoly) -> NewtonPolyhedron:
    """Exact Newton polyhedron of a nonzero polynomial with integer exponents."""
    if p.is_zero():
        raise GeometryError("Newton polyhedron of the zero polynomial is undefined")
    if not p.has_integer_exponents():
        raise GeometryError("polyhedron construction requires integer exponents")
    if p.dimension > 4:
        raise GeometryError("dimension > 4 not supported")
    support = sorted(p.terms)
    n = p.dimension
    facets = _candidate_facets(support, n)

    # vertex = support point whose active facet normals span R^n
    vertices = []
    for e in support:
        active = [f.normal for f in facets if f.contains_exponent(e)]
        if _rank([tuple(map(Fraction, a)) for a in active]) == n:
            vertices.append(e)
    vertices = tuple(sorted(vertices))

    # face lattice: meet-closure of the facets
    by_key = {f.key(): f for f in facets}
    frontier = list(facets)
    while frontier:
        new_faces = []
        for face, facet in itertools.product(frontier, facets):
            exps = tuple(sorted(set(face.exponents_on_face) & set(facet.exponents_on_face)))
            if not exps:
                continue
            rec = tuple(sorted(set(face.recession) & set(facet.recession)))
            key = (frozenset(exps), frozenset(rec))
            if key in by_key:
                continue
            normal = tuple(
                a + b for a, b in zip(face.normal, facet.normal)
            )  # interior of the meet's normal cone
            meet = _face_from_normal(normal, support, n)
            if meet.key() != key:
                # the intersection of the two contact sets is not a face on
                # its own (the summed normal exposes something larger)
                continue
            by_key[key] = meet
            new_faces.append(meet)
        frontier = new_faces

    faces = sorted(by_key.values(), key=lambda f: (f.dim, f.normal, f.offset))
    facet_faces = tuple(f for f in faces if f.dim == n - 1)
    return NewtonPolyhedron(
        dimension=n,
        source_exponents=tuple(support),
        vertices=vertices,
        facets=facet_faces,
        faces=tuple(faces),
    )


def newton_distance(polyhedron: NewtonPolyhedron) -> CentralFaceReport:
    """Newton distance d and the central face whose relative interior holds (d,...,d).

    With the exact facet description, minimizing t subject to (t,...,t) in the
    polyhedron gives d = max over facets of offset / (normal . 1), and the
    central face is the meet of the facets active at (d,...,d).
    """
    d = Fraction(0)
    for f in polyhedron.facets:
        weight = sum(f.normal)
        if weight <= 0:
            raise GeometryError("facet normal with nonpositive weight")
        d = max(d, Fraction(f.offset, weight))
    diag = [d] * polyhedron.dimension
    active = [f for f in polyhedron.facets if _dot(f.normal, diag) == f.offset]
    exps = set(active[0].exponents_on_face)
    rec = set(active[0].recession)
    for f in active[1:]:
        exps &= set(f.exponents_on_face)
        rec &= set(f.recession)
    key = (frozenset(exps), frozenset(rec))
    central = None
    for face in polyhedron.faces:
        if face.key() == key:
            central = face
            break
    if central is None:
        raise GeometryError("central face not found in the face lattice")
    return CentralFaceReport(
        d=d, central_face=central, k=central.dim, central_compact=central.compact
    )


def enumerate_compact_faces(polyhedron: NewtonPolyhedron) -> list[Face]:
    """All faces admitting a strictly positive supporting normal, vertices included."""
    return sorted(polyhedron.compact_faces(), key=lambda f: (f.dim, f.normal))


def contains(polyhedron: NewtonPolyhedron, point) -> bool:
    return polyhedron.contains(point)


def restrict_to_face(p: SparsePoly, face: Face) -> SparsePoly:
    """Face polynomial: keep exactly the terms whose exponents lie on the face."""
    if len(face.normal) != p.dimension:
        raise PolyError("face/polynomial dimension mismatch")
    kept = {e: c for e, c in p.terms.items() if face.contains_exponent(e)}
    return SparsePoly(p.dimension, kept)


def vertex_face(polyhedron: NewtonPolyhedron, vertex) -> Face:
    v = make_exponent(vertex)
    for face in polyhedron.faces:
        if face.dim == 0 and face.exponents_on_face == (v,):
            return face
    raise GeometryError(f"{vertex} is not a vertex of the polyhedron")
