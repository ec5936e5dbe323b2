"""Capacity regularization: the map from dual vectors to constrained masses.

The scalar profile g(t) = 2 (1 + t^2 - t sqrt(1 + t^2)) decreases from
+infinity to 1, with g(0) = 2.  Scaled by a length h it modulates the mass
a site may receive:
the regularized mass of site i is (G_i - eps) * g(psi_i / h) where G_i is
the plain cell mass.  All evaluations below use forms that avoid the
catastrophic cancellation of the textbook expressions for large |t|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class StorageError(Exception):
    pass


class NotInKEps(StorageError):
    """A mass vector left the region where the regularized map is usable."""


class BoundaryDegenerate(StorageError):
    """A square-root argument hit the boundary of its domain."""


class DomainError(StorageError):
    pass


@dataclass(frozen=True)
class StorageParams:
    """Regularization scales: length h > 0 and mass floor eps >= 0."""

    h: float = 0.5
    eps: float = 1e-6

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("h must be positive")
        if self.eps < 0:
            raise DomainError("eps must be nonnegative")


def g_eval(t):
    """g(t) = 2 (1 + t^2 - t sqrt(1 + t^2)), cancellation-free for t > 0."""
    t = np.asarray(t, dtype=float)
    s = np.sqrt(1.0 + t * t)
    # for t >= 0: 1 + t^2 - t s = s (s - t) = s / (s + t) after rationalizing
    pos = 2.0 * s / (s + np.abs(t))
    out = np.where(t >= 0, pos, 2.0 * (s * s + np.abs(t) * s))
    return out if out.ndim else float(out)


def g_prime(t):
    """g'(t) = -2 (t - sqrt(1 + t^2))^2 / sqrt(1 + t^2), stably."""
    t = np.asarray(t, dtype=float)
    s = np.sqrt(1.0 + t * t)
    # (s - t)^2 = 1 / (s + t)^2 for t >= 0
    sq = np.where(t >= 0, 1.0 / (s + np.abs(t)) ** 2, (s + np.abs(t)) ** 2)
    out = -2.0 * sq / s
    return out if out.ndim else float(out)


def g_inverse(a):
    """Unique t with g(t) = a, for a > 1."""
    a = np.asarray(a, dtype=float)
    if (a <= 1).any():
        raise DomainError("g takes values in (1, inf) only")
    out = (2.0 - a) / (2.0 * np.sqrt(a - 1.0))
    return out if out.ndim else float(out)


def capacity_map(masses, psi, params: StorageParams):
    """Regularized masses (G_i - eps) g(psi_i / h)."""
    masses = np.asarray(masses, float)
    psi = np.asarray(psi, float)
    return (masses - params.eps) * g_eval(psi / params.h)


def capacity_jacobian(masses, psi, mass_jac, params: StorageParams):
    """Derivative of the regularized mass vector in the dual vector.

    Equal to diag(g) @ DG + (1/h) diag((G - eps) g'), where DG is the plain
    mass Jacobian.  Negative definite whenever all masses exceed eps.
    """
    masses = np.asarray(masses, float)
    psi = np.asarray(psi, float)
    t = psi / params.h
    g = g_eval(t)
    gp = g_prime(t)
    J = g[:, None] * np.asarray(mass_jac, float)
    J[np.diag_indices(len(psi))] += (masses - params.eps) * gp / params.h
    return J


def normalize_project(masses, psi, target_total, params: StorageParams,
                      tol_rel: float = 1e-13, max_iter: int = 200):
    """Shift r with sum_i (G_i - eps) g((psi_i - r) / h) = target_total.

    Subtracting a constant from every dual entry leaves the cells, hence the
    plain masses, unchanged, so the left side is a strictly increasing
    function of r and the root is unique.  Returns (psi - r, r).
    """
    masses = np.asarray(masses, float)
    psi = np.asarray(psi, float)
    if (masses <= params.eps).any():
        raise NotInKEps("projection needs every mass above eps")
    total = float(target_total)
    cap = (masses - params.eps)
    if not total > cap.sum():
        # g > 1 everywhere, so the shifted sum can never drop this low
        raise DomainError("target total outside the attainable range")

    h = params.h

    def phi(r):
        t = (psi - r) / h
        return float(cap @ g_eval(t)) - total, float(cap @ g_prime(t)) * (-1.0 / h)

    span = abs(h * float(g_inverse(total / cap.sum())))
    lo = float(psi.min()) - span - h
    hi = float(psi.max()) + span + h
    step = h
    while phi(lo)[0] > 0:
        lo -= step
        step *= 2.0
    step = h
    while phi(hi)[0] < 0:
        hi += step
        step *= 2.0

    r = 0.5 * (lo + hi)
    tol = tol_rel * total
    for _ in range(max_iter):
        f, fp = phi(r)
        if abs(f) <= tol:
            break
        if f > 0:
            hi = r
        else:
            lo = r
        step = f / fp if fp > 0 else np.inf
        cand = r - step
        r = cand if lo < cand < hi else 0.5 * (lo + hi)
    else:
        raise StorageError("normalization root-find did not converge")
    return psi - r, r


def storage_fee(landed, capacities, params: StorageParams):
    """Fee -h sum_i sqrt((l_i - eps)(w_i - l_i + eps)) of a landed mass vector.

    Finite only for probability vectors inside the box
    eps <= l_i <= w_i + eps; +inf outside (a value, not an error).
    """
    landed = np.asarray(landed, float)
    w = np.asarray(capacities, float)
    if abs(landed.sum() - 1.0) > 1e-9 or (landed < 0).any():
        return float("inf")
    lo = landed - params.eps
    hi = w - landed + params.eps
    if (lo < -1e-15).any() or (hi < -1e-15).any():
        return float("inf")
    return float(-params.h * np.sum(np.sqrt(np.maximum(lo, 0.0)
                                            * np.maximum(hi, 0.0))))


def optimality_residual(masses, capacities, psi, params: StorageParams):
    """Stationarity gap: fee gradient at the landed masses minus psi.

    Zero at a solution; entries are h (2 (G_i - eps) - w_i) /
    (2 sqrt((G_i - eps)(w_i - G_i + eps))) - psi_i.
    """
    masses = np.asarray(masses, float)
    wbar = np.asarray(capacities, float)
    psi = np.asarray(psi, float)
    lo = masses - params.eps
    hi = wbar - masses + params.eps
    if (lo <= 0).any() or (hi <= 0).any():
        raise BoundaryDegenerate("residual undefined at the slab boundary")
    return params.h * (2.0 * lo - wbar) / (2.0 * np.sqrt(lo * hi)) - psi


@dataclass(frozen=True)
class CapacityState:
    """Regularized masses and their Jacobian at one dual vector."""

    wbar: np.ndarray
    jac: np.ndarray   # full derivative of the regularized mass vector
    g: np.ndarray     # g(psi_i / h), for the symmetrized solve


def capacity_state(masses, psi, mass_jac, params: StorageParams) -> CapacityState:
    g = g_eval(np.asarray(psi, float) / params.h)
    return CapacityState(
        wbar=capacity_map(masses, psi, params),
        jac=capacity_jacobian(masses, psi, mass_jac, params),
        g=np.asarray(g, float))
