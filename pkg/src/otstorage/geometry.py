"""Convex polygon arithmetic and additively-weighted (power) cell diagrams.

Polygons are (m, 2) float arrays of counterclockwise vertices; an empty
polygon has zero rows.  The diagram for sites y_i and dual weights psi_i
assigns to site i the region where |x - y_i|^2 + psi_i attains the minimum
over all sites, intersected with a convex polygonal domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels

# Relative tolerance (times domain diameter) for vertex merging and facet
# pruning; clip chains generate near-duplicate vertices at this scale.
MERGE_REL_TOL = 1e-12


class GeometryError(Exception):
    pass


class DuplicateSites(GeometryError):
    pass


class EmptyCell(GeometryError):
    pass


def as_polygon(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    if v.size == 0:
        return np.zeros((0, 2))
    if v.ndim != 2 or v.shape[1] != 2:
        raise GeometryError(f"polygon must be (m, 2), got {v.shape}")
    return v


@dataclass(frozen=True)
class ConvexPolygon:
    """Counterclockwise convex polygon; may be empty."""

    vertices: np.ndarray

    def __init__(self, vertices):
        object.__setattr__(self, "vertices", as_polygon(vertices))

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def centroid(self) -> np.ndarray:
        return polygon_centroid(self.vertices)

    def diameter(self) -> float:
        v = self.vertices
        if len(v) == 0:
            return 0.0
        d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))

    def contains(self, point, tol: float = 1e-12) -> bool:
        v = self.vertices
        if len(v) < 3:
            return False
        p = np.asarray(point, float)
        nxt = np.roll(v, -1, axis=0)
        cross = (nxt[:, 0] - v[:, 0]) * (p[1] - v[:, 1]) - (nxt[:, 1] - v[:, 1]) * (p[0] - v[:, 0])
        return bool((cross >= -tol).all())


def polygon_area(v) -> float:
    v = as_polygon(v)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    return float(0.5 * np.sum(x * y2 - x2 * y))


def polygon_centroid(v) -> np.ndarray:
    v = as_polygon(v)
    if len(v) < 3:
        raise EmptyCell("centroid of an empty polygon")
    x, y = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    cr = x * y2 - x2 * y
    a = 0.5 * cr.sum()
    if a <= 0:
        raise GeometryError("polygon is degenerate or not counterclockwise")
    cx = np.sum((x + x2) * cr) / (6.0 * a)
    cy = np.sum((y + y2) * cr) / (6.0 * a)
    return np.array([cx, cy])


def is_convex_ccw(v, tol: float = 1e-9) -> bool:
    v = as_polygon(v)
    if len(v) < 3:
        return len(v) == 0
    a = np.roll(v, -1, axis=0) - v
    b = np.roll(a, -1, axis=0)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return bool((cross >= -tol).all())


def clip_halfplane(poly, normal, offset: float):
    """Intersect a convex CCW polygon with {x : <normal, x> <= offset}."""
    wrap = isinstance(poly, ConvexPolygon)
    v = poly.vertices if wrap else as_polygon(poly)
    nx, ny = float(normal[0]), float(normal[1])
    out = []
    n = len(v)
    for k in range(n):
        s = v[k]
        e = v[(k + 1) % n]
        ds = nx * s[0] + ny * s[1] - offset
        de = nx * e[0] + ny * e[1] - offset
        if ds <= 0.0:
            out.append(s)
        if (ds <= 0.0) != (de <= 0.0):
            t = ds / (ds - de)
            out.append(s + t * (e - s))
    res = _dedupe(np.array(out) if out else np.zeros((0, 2)))
    return ConvexPolygon(res) if wrap else res


def _dedupe(v, tol: float | None = None):
    if len(v) == 0:
        return v
    if tol is None:
        span = v.max(0) - v.min(0)
        tol = MERGE_REL_TOL * max(float(np.hypot(*span)), 1.0)
    keep = [v[0]]
    for p in v[1:]:
        if np.hypot(*(p - keep[-1])) >= tol:
            keep.append(p)
    if len(keep) > 1 and np.hypot(*(keep[-1] - keep[0])) < tol:
        keep.pop()
    if len(keep) < 3:
        return np.zeros((0, 2))
    return np.array(keep)


def polygon_intersection(a, b):
    """Intersection of two convex CCW polygons (possibly empty)."""
    wrap = isinstance(a, ConvexPolygon)
    va = a.vertices if wrap else as_polygon(a)
    vb = b.vertices if isinstance(b, ConvexPolygon) else as_polygon(b)
    if len(va) < 3 or len(vb) < 3:
        res = np.zeros((0, 2))
        return ConvexPolygon(res) if wrap else res
    res = va
    n = len(vb)
    for k in range(n):
        p = vb[k]
        q = vb[(k + 1) % n]
        # interior of b is left of p->q: (qy-py) x - (qx-px) y <= b
        normal = (q[1] - p[1], -(q[0] - p[0]))
        offset = normal[0] * p[0] + normal[1] * p[1]
        res = clip_halfplane(res, normal, offset)
        if len(res) == 0:
            break
    return ConvexPolygon(res) if wrap else res


def point_polygon_distance(point, poly) -> float:
    v = poly.vertices if isinstance(poly, ConvexPolygon) else as_polygon(poly)
    if len(v) < 3:
        raise EmptyCell("distance to an empty polygon")
    p = np.asarray(point, float)
    nxt = np.roll(v, -1, axis=0)
    edge = nxt - v
    cross = edge[:, 0] * (p[1] - v[:, 1]) - edge[:, 1] * (p[0] - v[:, 0])
    if (cross >= 0).all():
        return 0.0
    # min distance over edges
    rel = p - v
    ee = (edge**2).sum(1)
    t = np.clip((rel * edge).sum(1) / np.where(ee > 0, ee, 1.0), 0.0, 1.0)
    proj = v + t[:, None] * edge
    return float(np.sqrt(((p - proj) ** 2).sum(1).min()))


def hausdorff_distance(a, b) -> float:
    """Exact Hausdorff distance between two nonempty convex polygons.

    The supremum of distance-to-a-convex-set over a convex set is attained at
    a vertex, so scanning vertices of each polygon against the other is exact.
    """
    va = a.vertices if isinstance(a, ConvexPolygon) else as_polygon(a)
    vb = b.vertices if isinstance(b, ConvexPolygon) else as_polygon(b)
    if len(va) < 3 or len(vb) < 3:
        raise EmptyCell("Hausdorff distance requires nonempty polygons")
    d = 0.0
    for p in va:
        d = max(d, point_polygon_distance(p, vb))
    for p in vb:
        d = max(d, point_polygon_distance(p, va))
    return d


@dataclass(frozen=True)
class Facet:
    """Shared boundary segment between cells i < j, on their bisector line."""

    i: int
    j: int
    segment: np.ndarray  # (2, 2): endpoints
    length: float


@dataclass
class PowerDiagram:
    """Cells and shared facets of a dual vector over fixed sites and domain."""

    psi: np.ndarray
    sites: np.ndarray
    domain: ConvexPolygon
    _verts: np.ndarray = field(repr=False)
    _labels: np.ndarray = field(repr=False)
    _counts: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @cached_property
    def cells(self) -> list[ConvexPolygon]:
        return [
            ConvexPolygon(self._verts[i, : self._counts[i]].copy())
            for i in range(self.n_sites)
        ]

    @cached_property
    def facets(self) -> list[Facet]:
        tol = MERGE_REL_TOL * self.domain.diameter()
        seen: dict[tuple[int, int], Facet] = {}
        for i in range(self.n_sites):
            m = self._counts[i]
            for k in range(m):
                j = int(self._labels[i, k])
                if j < 0:
                    continue
                key = (min(i, j), max(i, j))
                if key in seen:
                    continue
                p = self._verts[i, k]
                q = self._verts[i, (k + 1) % m]
                length = float(np.hypot(*(q - p)))
                if length <= tol:
                    continue
                seen[key] = Facet(key[0], key[1], np.array([p, q]), length)
        return [seen[k] for k in sorted(seen)]

    def cell_areas(self) -> np.ndarray:
        return np.array([
            polygon_area(self._verts[i, : self._counts[i]])
            for i in range(self.n_sites)
        ])

    def with_psi(self, psi: np.ndarray) -> "PowerDiagram":
        """Re-tag the diagram with an equivalent shifted dual vector.

        Valid only for psi differing from the stored one by a multiple of the
        all-ones vector, which leaves every cell unchanged.
        """
        return PowerDiagram(np.asarray(psi, float).copy(), self.sites,
                            self.domain, self._verts, self._labels, self._counts)


def site_ordering(sites: np.ndarray):
    """Distance-sorted competitor table reused across diagram builds."""
    n = len(sites)
    if n == 1:
        return np.zeros((1, 0), np.int64), np.zeros((1, 0))
    diff = sites[:, None, :] - sites[None, :, :]
    dmat = np.sqrt((diff**2).sum(-1))
    np.fill_diagonal(dmat, np.inf)
    if dmat.min() < 1e-15 * (1.0 + np.abs(sites).max()):
        raise DuplicateSites("two sites coincide")
    order = np.argsort(dmat, axis=1, kind="stable")[:, : n - 1]
    dist = np.take_along_axis(dmat, order, axis=1)
    return order.astype(np.int64), dist


def laguerre_cells(domain, sites, psi, order=None, dist=None) -> PowerDiagram:
    """Build the full cell diagram of psi over the given convex domain."""
    dom = domain if isinstance(domain, ConvexPolygon) else ConvexPolygon(domain)
    if dom.is_empty:
        raise GeometryError("domain polygon is empty")
    sites = np.asarray(sites, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if sites.ndim != 2 or sites.shape[1] != 2:
        raise GeometryError("sites must be (N, 2)")
    if psi.shape != (len(sites),):
        raise GeometryError("psi length must match number of sites")
    if order is None or dist is None:
        order, dist = site_ordering(sites)
    verts, labels, counts = _kernels.build_cells(
        np.ascontiguousarray(dom.vertices), np.ascontiguousarray(sites),
        np.ascontiguousarray(psi), order, dist)
    _kernels.canonicalize_cells(verts, labels, counts,
                                MERGE_REL_TOL * dom.diameter())
    return PowerDiagram(psi.copy(), sites, dom, verts, labels, counts)
