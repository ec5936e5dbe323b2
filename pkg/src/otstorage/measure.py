"""Piecewise linear densities on triangle meshes and cell-wise integrals.

A density is given by a triangulation (vertices, triangles, per-vertex
values) and is affine on each triangle.  All cell integrals are evaluated
exactly by clipping each cell against each triangle: polynomials of degree
at most three over convex polygons, so closed quadrature suffices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .geometry import ConvexPolygon, GeometryError, PowerDiagram

FACET_EDGE_TOL = 1e-12


def _cross2(u, v):
    """z component of the cross product of stacked planar vectors."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


class MeshError(GeometryError):
    pass


@dataclass(frozen=True)
class DensityMesh:
    """Nonnegative piecewise linear density on a conforming triangle mesh."""

    points: np.ndarray     # (P, 2)
    triangles: np.ndarray  # (T, 3) int, CCW
    values: np.ndarray     # (P,) >= 0

    def __init__(self, points, triangles, values):
        points = np.asarray(points, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise MeshError("points must be (P, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError("triangles must be (T, 3)")
        if values.shape != (len(points),):
            raise MeshError("values length must match points")
        if (values < 0).any():
            raise MeshError("density values must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "values", values)
        # fix orientation, reject degenerate triangles
        tp = points[triangles]
        cr = _cross2(tp[:, 1] - tp[:, 0], tp[:, 2] - tp[:, 0])
        scale = (points.max(0) - points.min(0)).prod() + 1.0
        if (np.abs(cr) < 1e-14 * scale).any():
            raise MeshError("mesh contains a degenerate triangle")
        flip = cr < 0
        if flip.any():
            t = triangles.copy()
            t[flip] = t[flip][:, [0, 2, 1]]
            object.__setattr__(self, "triangles", t)

    @cached_property
    def _tri_pts(self) -> np.ndarray:
        """(T, 3, 2) triangle vertex coordinates, CCW."""
        return np.ascontiguousarray(self.points[self.triangles])

    @cached_property
    def _tri_lin(self) -> np.ndarray:
        """(T, 3) coefficients (a, b, c) with rho(x, y) = a + b x + c y."""
        tp = self._tri_pts
        T = len(tp)
        A = np.concatenate([np.ones((T, 3, 1)), tp], axis=2)
        rhs = self.values[self.triangles][..., None]
        return np.ascontiguousarray(np.linalg.solve(A, rhs)[..., 0])

    @cached_property
    def _tri_bbox(self) -> np.ndarray:
        """(T, 4) per-triangle (xmin, ymin, xmax, ymax) for cheap rejection."""
        tp = self._tri_pts
        return np.ascontiguousarray(
            np.concatenate([tp.min(1), tp.max(1)], axis=1))

    def total_mass(self) -> float:
        tp = self._tri_pts
        area = 0.5 * _cross2(tp[:, 1] - tp[:, 0], tp[:, 2] - tp[:, 0])
        return float((area * self.values[self.triangles].mean(1)).sum())

    def evaluate(self, points) -> np.ndarray:
        """Density at the given points; zero outside the mesh."""
        p = np.atleast_2d(np.asarray(points, float))
        out = np.zeros(len(p))
        tp, lin = self._tri_pts, self._tri_lin
        for t in range(len(tp)):
            a, b, c = tp[t]
            d = _cross2(b - a, c - a)
            l1 = _cross2(p - a, c - a) / d
            l2 = _cross2(b - a, p - a) / d
            inside = (l1 >= -1e-12) & (l2 >= -1e-12) & (l1 + l2 <= 1 + 1e-12)
            out[inside] = (lin[t, 0] + lin[t, 1] * p[inside, 0]
                           + lin[t, 2] * p[inside, 1])
        return out if np.asarray(points).ndim == 2 else out[:1]


def integrate_density(mesh: DensityMesh, polygon) -> float:
    """Mass of the density restricted to one convex polygon, exactly."""
    v = polygon.vertices if isinstance(polygon, ConvexPolygon) else np.asarray(polygon, float)
    verts = np.zeros((1, _kernels.MAX_VERTS, 2))
    counts = np.array([len(v)], np.int64)
    if len(v) >= 3:
        verts[0, : len(v)] = v
    out = _kernels.cell_masses(verts, counts, mesh._tri_pts, mesh._tri_lin,
                               mesh._tri_bbox)
    return float(out[0])


def mass_vector(mesh: DensityMesh, diagram: PowerDiagram) -> np.ndarray:
    """Density mass of every cell of the diagram."""
    return _kernels.cell_masses(diagram._verts, diagram._counts,
                                mesh._tri_pts, mesh._tri_lin, mesh._tri_bbox)


def facet_density_integral(mesh: DensityMesh, segment) -> float:
    """Line integral of the density along one segment."""
    seg = np.asarray(segment, float).reshape(1, 2, 2)
    out = _kernels.segment_density_integrals(
        np.ascontiguousarray(seg), mesh._tri_pts, mesh._tri_lin,
        FACET_EDGE_TOL * (1.0 + np.abs(mesh.points).max()))
    return float(out[0])


def mass_jacobian(mesh: DensityMesh, diagram: PowerDiagram) -> np.ndarray:
    """Derivative of the cell mass vector with respect to the dual vector.

    Symmetric with zero row sums: entry (i, j), i != j, is the facet density
    line integral divided by twice the distance between the two sites; the
    diagonal is minus the row sum.
    """
    n = diagram.n_sites
    J = np.zeros((n, n))
    facets = diagram.facets
    if facets:
        segs = np.ascontiguousarray(
            np.array([f.segment for f in facets]))
        vals = _kernels.segment_density_integrals(
            segs, mesh._tri_pts, mesh._tri_lin,
            FACET_EDGE_TOL * (1.0 + np.abs(mesh.points).max()))
        for f, val in zip(facets, vals):
            d = np.hypot(*(diagram.sites[f.j] - diagram.sites[f.i]))
            J[f.i, f.j] += val / (2.0 * d)
            J[f.j, f.i] += val / (2.0 * d)
    J[np.diag_indices(n)] = -J.sum(1)
    return J


def transport_second_moments(mesh: DensityMesh, diagram: PowerDiagram) -> np.ndarray:
    """Per-cell integral of squared distance to the owning site times density."""
    return _kernels.cell_second_moments(
        diagram._verts, diagram._counts, np.ascontiguousarray(diagram.sites),
        mesh._tri_pts, mesh._tri_lin, mesh._tri_bbox)


def transport_cost(mesh: DensityMesh, diagram: PowerDiagram) -> float:
    """Quadratic transport cost of the cell-to-site assignment."""
    return float(transport_second_moments(mesh, diagram).sum())


def dual_functional(mesh: DensityMesh, diagram: PowerDiagram) -> float:
    """Value of the concave dual objective sum_i int_cell (-|x-y_i|^2 - psi_i)."""
    moments = transport_second_moments(mesh, diagram)
    masses = mass_vector(mesh, diagram)
    return float(-(moments.sum() + diagram.psi @ masses))
