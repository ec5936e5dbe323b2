"""Stability and convergence diagnostics over solved transport partitions.

Two partitions of the same domain are compared cell by cell: by the density
mass of the symmetric difference and by the Hausdorff distance.  A separate
probe checks convexity of the map from capacity vectors to transport cost,
and a trace fit estimates the observed convergence order of the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import measure
from .geometry import hausdorff_distance, polygon_intersection
from .solver import (Instance, IterationRecord, MismatchedN, Solution,
                     SolverConfig, SolverError, newton_solve)
from .storage import StorageParams


class InsufficientTrace(Exception):
    pass


@dataclass(frozen=True)
class PartitionDistanceReport:
    per_cell_sym_diff: np.ndarray
    total_sym_diff: float
    per_cell_hausdorff: list  # float per index, None where a cell is empty
    l1_weight_gap: float


def hausdorff_partitions(a, b) -> list:
    """Per-cell Hausdorff distances; None where either cell is empty."""
    if a.n_sites != b.n_sites:
        raise MismatchedN("diagrams have different site counts")
    out = []
    for ca, cb in zip(a.cells, b.cells):
        if ca.is_empty or cb.is_empty:
            out.append(None)
        else:
            out.append(hausdorff_distance(ca, cb))
    return out


def sym_diff_partitions(a, b, mesh) -> PartitionDistanceReport:
    """Mass of the cell-wise symmetric differences between two diagrams.

    Per index: mu(A) + mu(B) - 2 mu(A and B), with the intersection of two
    convex cells again convex.
    """
    if a.n_sites != b.n_sites:
        raise MismatchedN("diagrams have different site counts")
    ga = measure.mass_vector(mesh, a)
    gb = measure.mass_vector(mesh, b)
    sym = np.zeros(a.n_sites)
    for i, (ca, cb) in enumerate(zip(a.cells, b.cells)):
        if ca.is_empty or cb.is_empty:
            inter = 0.0
        else:
            p = polygon_intersection(ca, cb)
            inter = 0.0 if p.is_empty else measure.integrate_density(mesh, p)
        sym[i] = max(ga[i] + gb[i] - 2.0 * inter, 0.0)
    return PartitionDistanceReport(
        per_cell_sym_diff=sym,
        total_sym_diff=float(sym.sum()),
        per_cell_hausdorff=hausdorff_partitions(a, b),
        l1_weight_gap=float(np.abs(ga - gb).sum()))


@dataclass(frozen=True)
class StabilityReport:
    """Computable pieces of the a-priori mass-gap bound, reported separately.

    The bound combines these with an unknown universal constant, so no
    inequality is asserted; the sqrt(h) term only carries the trend.
    """

    n_sites: int
    n_eps: float
    wbar_gap_l1: float
    sqrt_h: float
    mass_gap_l1: float
    classical_mode: bool


def stability_report(solution: Solution, reference_w) -> StabilityReport:
    w = np.asarray(reference_w, float)
    n = len(solution.psi)
    if w.shape != (n,):
        raise MismatchedN("reference capacities length must match solution")
    return StabilityReport(
        n_sites=n,
        n_eps=n * solution.params.eps,
        wbar_gap_l1=float(np.abs(solution.wbar - w).sum()),
        sqrt_h=float(np.sqrt(solution.params.h)),
        mass_gap_l1=float(np.abs(solution.masses - w).sum()),
        classical_mode=bool(abs(w.sum() - 1.0) <= 1e-9))


@dataclass(frozen=True)
class ConvexityProbe:
    lambda1: np.ndarray
    lambda2: np.ndarray
    t: float
    lhs: float  # t C(l1) + (1-t) C(l2)
    rhs: float  # C(t l1 + (1-t) l2)
    gap: float  # lhs - rhs, nonnegative under convexity


def _transport_cost_at(instance: Instance, lam, params, config) -> float:
    inst = replace(instance, capacities=np.asarray(lam, float))
    sol = newton_solve(inst, params, config)
    if not sol.converged:
        raise SolverError(f"probe solve failed: {sol.failure}")
    return measure.transport_cost(instance.mesh, inst.diagram(sol.psi))


def convexity_probe(instance_base: Instance, lambda1, lambda2, t,
                    h_small: float = 0.02,
                    eps_small: float | None = None) -> ConvexityProbe:
    """Check convexity of the capacity-to-transport-cost map by three solves.

    The cost of a capacity vector lam is evaluated by solving the problem in
    classical mode (sum lam = 1) with small regularization scales and taking
    the transport cost of the resulting partition.
    """
    l1 = np.asarray(lambda1, float)
    l2 = np.asarray(lambda2, float)
    t = float(t)
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie strictly between 0 and 1")
    for lam in (l1, l2):
        if (lam <= 0).any() or abs(lam.sum() - 1.0) > 1e-9:
            raise ValueError("probe weights must be strictly positive "
                             "simplex vectors")
    n = instance_base.n_sites
    if eps_small is None:
        eps_small = min(1e-4, 1.0 / (4.0 * n))
    params = StorageParams(h=h_small, eps=eps_small)
    config = SolverConfig()
    c1 = _transport_cost_at(instance_base, l1, params, config)
    c2 = _transport_cost_at(instance_base, l2, params, config)
    cm = _transport_cost_at(instance_base, t * l1 + (1.0 - t) * l2,
                            params, config)
    lhs = t * c1 + (1.0 - t) * c2
    return ConvexityProbe(l1, l2, t, lhs, cm, lhs - cm)


def rate_fit(trace: list[IterationRecord]):
    """Estimate the convergence order and worst linear factor from a trace.

    Order: least-squares slope of log residual_{k+1} against log residual_k
    over the trailing run of full (undamped) steps.  Linear factor: largest
    single-step residual ratio anywhere in the trace.
    """
    res = [rec.residual_norm for rec in trace]
    if len(res) < 2 or any(r <= 0 for r in res):
        raise InsufficientTrace("need at least two positive residuals")
    ratios = [res[k + 1] / res[k] for k in range(len(res) - 1)]
    linear_factor = float(max(ratios))

    tail_start = len(trace)
    while tail_start > 0 and trace[tail_start - 1].ell == 0:
        tail_start -= 1
    tail = res[tail_start:]
    if len(tail) < 3:
        raise InsufficientTrace("need at least three full-step residuals")
    x = np.log(np.asarray(tail[:-1]))
    y = np.log(np.asarray(tail[1:]))
    order = float(np.polyfit(x, y, 1)[0])
    return order, linear_factor
