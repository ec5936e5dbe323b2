"""Damped Newton solver for capacity-constrained semi-discrete transport.

Unknown: one dual value per site.  The solver drives the regularized mass
vector to the prescribed capacities, rebuilding the cell diagram at every
trial point and shifting each trial back onto the fixed-total-mass slice
by a scalar root-find that costs no diagram rebuild.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from . import measure, storage
from .geometry import ConvexPolygon, laguerre_cells, site_ordering
from .measure import DensityMesh
from .storage import StorageParams


class SolverError(Exception):
    pass


class InitFailed(SolverError):
    """No usable starting dual vector: some initial cell carries no mass."""


class SingularJacobian(SolverError):
    pass


class MismatchedN(SolverError):
    pass


@dataclass(frozen=True)
class Instance:
    """A transport problem: domain, sites, density, per-site capacities."""

    domain: ConvexPolygon
    sites: np.ndarray
    mesh: DensityMesh
    capacities: np.ndarray

    def __post_init__(self):
        sites = np.ascontiguousarray(np.asarray(self.sites, float))
        caps = np.asarray(self.capacities, float)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "capacities", caps)
        if sites.ndim != 2 or sites.shape[1] != 2:
            raise MismatchedN("sites must be (N, 2)")
        if caps.shape != (len(sites),):
            raise MismatchedN("capacities length must match sites")
        if (caps <= 0).any():
            raise SolverError("capacities must be positive")
        order, dist = site_ordering(sites)
        object.__setattr__(self, "_order", order)
        object.__setattr__(self, "_dist", dist)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def diagram(self, psi):
        return laguerre_cells(self.domain, self.sites, psi,
                              self._order, self._dist)


@dataclass(frozen=True)
class SolverConfig:
    zeta: float = 1e-10        # stopping tolerance on the mass mismatch norm
    max_iter: int = 500
    ell_max: int = 40          # deepest step halving tried per iteration
    fd_check: bool = False     # cross-check the Jacobian by finite differences
    fd_tol: float = 1e-4


@dataclass(frozen=True)
class IterationRecord:
    k: int
    residual_norm: float   # euclidean norm of wbar - w after the step
    residual_l1: float
    residual_linf: float
    ell: int
    tau: float
    r: float
    min_wbar: float


@dataclass(frozen=True)
class Solution:
    psi: np.ndarray
    masses: np.ndarray          # plain cell masses at the final iterate
    wbar: np.ndarray            # regularized masses at the final iterate
    eps0: float
    initial_residual: float
    trace: list[IterationRecord]
    converged: bool
    failure: str | None
    params: StorageParams

    @property
    def iterations(self) -> int:
        return len(self.trace)


def default_init(instance: Instance, params: StorageParams) -> np.ndarray:
    """Starting dual vector with every cell mass above the floor.

    Tries the zero vector; if some cell starves, inverts the capacity
    profile per site so larger capacities get lower duals, then perturbs
    with seeded noise as a last resort.  The returned vector is shifted
    onto the correct total regularized mass.
    """
    total = float(instance.capacities.sum())
    n = instance.n_sites

    def project_if_feasible(psi):
        masses = measure.mass_vector(instance.mesh, instance.diagram(psi))
        if masses.min() <= params.eps:
            return None
        out, _ = storage.normalize_project(masses, psi, total, params)
        return out

    psi = project_if_feasible(np.zeros(n))
    if psi is not None:
        return psi

    masses0 = measure.mass_vector(instance.mesh,
                                  instance.diagram(np.zeros(n)))
    ratio = np.clip(instance.capacities
                    / np.maximum(masses0 - params.eps, 1e-6), 1.01, 2.0 * n)
    guess = params.h * storage.g_inverse(ratio)
    psi = project_if_feasible(guess)
    if psi is not None:
        return psi
    rng = np.random.default_rng(0)
    scale = 0.1 * instance.domain.diameter()
    for _ in range(10):
        psi = project_if_feasible(guess + rng.uniform(-scale, scale, n))
        if psi is not None:
            return psi
    raise InitFailed("no admissible starting vector found")


def newton_direction(state: storage.CapacityState, w):
    """Solve the linearized mass-matching system for the update direction.

    Uses the symmetrized form of the regularized Jacobian, which is negative
    definite away from the mass floor, via a Cholesky factorization; falls
    back to a pivoted LU of the raw Jacobian if that fails.
    """
    g = state.g
    rhs = state.wbar - np.asarray(w, float)
    M = state.jac / g[:, None]
    M = 0.5 * (M + M.T)
    try:
        c = cho_factor(-M, lower=True)
        d = cho_solve(c, rhs / g)
        # one refinement pass against the unsymmetrized system
        d += cho_solve(c, (rhs + state.jac @ d) / g)
        return d
    except (np.linalg.LinAlgError, ValueError):
        pass
    try:
        lu = lu_factor(state.jac)
        return lu_solve(lu, -rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularJacobian(str(exc)) from exc


def _fd_jacobian(instance, params, psi, delta=1e-6):
    n = instance.n_sites
    J = np.zeros((n, n))
    for i in range(n):
        for sign in (1.0, -1.0):
            p = psi.copy()
            p[i] += sign * delta
            d = instance.diagram(p)
            m = measure.mass_vector(instance.mesh, d)
            J[:, i] += sign * storage.capacity_map(m, p, params) / (2 * delta)
    return J


def newton_solve(instance: Instance, params: StorageParams | None = None,
                 config: SolverConfig | None = None,
                 psi0=None) -> Solution:
    """Damped Newton iteration on the dual vector.

    Each iteration solves for the Newton direction, then takes the largest
    step of the form 2^-ell that keeps every regularized mass above the
    floor eps0 and contracts the mismatch norm by at least the factor
    1 - 2^-(ell+1), after shifting the trial back onto the slice where the
    regularized masses sum to the total capacity.
    """
    params = params or StorageParams()
    config = config or SolverConfig()
    w = instance.capacities
    total = float(w.sum())
    if params.eps <= 0:
        raise storage.DomainError("the solver requires eps > 0")

    if psi0 is None:
        psi = default_init(instance, params)
    else:
        psi = np.asarray(psi0, float).copy()
        if psi.shape != (instance.n_sites,):
            raise MismatchedN("psi0 length must match sites")

    diagram = instance.diagram(psi)
    masses = measure.mass_vector(instance.mesh, diagram)
    if (masses <= params.eps).any():
        raise InitFailed("initial cell mass at or below eps")
    psi, _ = storage.normalize_project(masses, psi, total, params)
    diagram = diagram.with_psi(psi)
    wbar = storage.capacity_map(masses, psi, params)

    eps0 = 0.5 * min(float(wbar.min()), float(w.min()))
    res = float(np.linalg.norm(wbar - w))
    initial_residual = res
    trace: list[IterationRecord] = []

    def finish(converged, failure):
        return Solution(psi, masses, wbar, eps0, initial_residual, trace,
                        converged, failure, params)

    for k in range(config.max_iter):
        if res <= config.zeta:
            return finish(True, None)
        jac = measure.mass_jacobian(instance.mesh, diagram)
        state = storage.capacity_state(masses, psi, jac, params)
        if config.fd_check and k == 0:
            fd = _fd_jacobian(instance, params, psi)
            gap = np.abs(fd - state.jac).max() / (1.0 + np.abs(state.jac).max())
            if gap > config.fd_tol:
                raise SolverError(f"Jacobian cross-check failed: gap {gap:.2e}")
        d = newton_direction(state, w)

        accepted = False
        for ell in range(config.ell_max + 1):
            tau = 2.0 ** (-ell)
            trial = psi + tau * d
            try:
                trial_diag = instance.diagram(trial)
                trial_masses = measure.mass_vector(instance.mesh, trial_diag)
                if (trial_masses <= params.eps).any():
                    continue
                trial_psi, r = storage.normalize_project(
                    trial_masses, trial, total, params)
            except storage.StorageError:
                continue
            trial_wbar = storage.capacity_map(trial_masses, trial_psi, params)
            trial_res = float(np.linalg.norm(trial_wbar - w))
            if (trial_wbar.min() >= eps0
                    and trial_res <= (1.0 - 0.5 * tau) * res):
                psi = trial_psi
                diagram = trial_diag.with_psi(trial_psi)
                masses = trial_masses
                wbar = trial_wbar
                res = trial_res
                gap = trial_wbar - w
                trace.append(IterationRecord(
                    k, res, float(np.abs(gap).sum()),
                    float(np.abs(gap).max()), ell, tau, r,
                    float(wbar.min())))
                accepted = True
                break
        if not accepted:
            return finish(False, "line_search_stalled")

    return finish(res <= config.zeta, None if res <= config.zeta
                  else "max_iterations")
