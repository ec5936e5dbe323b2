import numpy as np
import pytest

import otstorage as ot
from otstorage.storage import StorageParams


def test_g_values():
    assert ot.g_eval(0.0) == pytest.approx(2.0, abs=1e-15)
    assert ot.g_eval(1.0) == pytest.approx(2.0 * (2.0 - np.sqrt(2.0)),
                                           abs=1e-14)


@pytest.mark.parametrize("t", [0.3, 1.0, 7.0])
def test_g_reflection_identity(t):
    assert ot.g_eval(t) * ot.g_eval(-t) == pytest.approx(
        4.0 * (1.0 + t * t), rel=1e-12)


def test_g_monotone_and_limits():
    grid = np.linspace(-50.0, 50.0, 1000)
    vals = ot.g_eval(grid)
    assert (np.diff(vals) < 0).all()
    assert (vals > 1.0).all()
    big = ot.g_eval(np.array([1e3, 1e5]))
    assert big[1] < big[0]
    assert big[1] == pytest.approx(1.0, abs=1e-9)


def test_g_prime_values():
    assert ot.g_prime(0.0) == pytest.approx(-2.0, abs=1e-15)
    assert ot.g_prime(1.0) == pytest.approx(
        -2.0 * (3.0 - 2.0 * np.sqrt(2.0)) / np.sqrt(2.0), abs=1e-14)
    assert (ot.g_prime(np.linspace(-30, 30, 200)) < 0).all()


@pytest.mark.parametrize("t", [-2.0, 0.5, 3.0])
def test_g_prime_matches_fd(t):
    step = 1e-6
    fd = (ot.g_eval(t + step) - ot.g_eval(t - step)) / (2 * step)
    assert ot.g_prime(t) == pytest.approx(fd, abs=1e-7)


def test_g_inverse_values():
    assert ot.g_inverse(2.0) == pytest.approx(0.0, abs=1e-15)
    assert ot.g_inverse(4.0) == pytest.approx(-1.0 / np.sqrt(3.0), abs=1e-14)
    assert ot.g_eval(-1.0 / np.sqrt(3.0)) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("a", [1.01, 1.5, 50.0])
def test_g_inverse_round_trip(a):
    assert ot.g_eval(ot.g_inverse(a)) == pytest.approx(a, rel=1e-10)


def test_g_inverse_domain_error():
    with pytest.raises(ot.DomainError):
        ot.g_inverse(1.0)
    with pytest.raises(ot.DomainError):
        ot.g_inverse(0.5)


def test_capacity_map_symmetric_two_point():
    masses = np.array([0.5, 0.5])
    psi = np.zeros(2)
    assert np.allclose(
        ot.capacity_map(masses, psi, StorageParams(h=1.0, eps=0.0)),
        [1.0, 1.0], atol=1e-15)
    assert np.allclose(
        ot.capacity_map(masses, psi, StorageParams(h=1.0, eps=0.01)),
        [0.98, 0.98], atol=1e-15)


def test_capacity_map_inverse_composition():
    psi = ot.g_inverse(1.5)
    out = ot.capacity_map(np.array([1.0]), np.array([psi]),
                          StorageParams(h=1.0, eps=0.0))
    assert out[0] == pytest.approx(1.5, rel=1e-12)


def test_capacity_jacobian_two_point():
    params = StorageParams(h=1.0, eps=0.01)
    DG = np.array([[-1.0, 1.0], [1.0, -1.0]])
    J = ot.capacity_jacobian(np.array([0.5, 0.5]), np.zeros(2), DG, params)
    assert np.allclose(J, [[-2.98, 2.0], [2.0, -2.98]], atol=1e-12)


def test_capacity_jacobian_single_site():
    params = StorageParams(h=0.7, eps=0.01)
    psi = np.array([0.3])
    J = ot.capacity_jacobian(np.array([1.0]), psi, np.zeros((1, 1)), params)
    expected = (1.0 - 0.01) * ot.g_prime(0.3 / 0.7) / 0.7
    assert J[0, 0] == pytest.approx(expected, rel=1e-12)
    assert J[0, 0] < 0


def test_capacity_jacobian_matches_fd(two_point_instance):
    inst = two_point_instance
    params = StorageParams(h=0.5, eps=0.01)
    psi = np.array([0.03, -0.04])

    def wbar_at(p):
        m = ot.mass_vector(inst.mesh, inst.diagram(p))
        return ot.capacity_map(m, p, params)

    m = ot.mass_vector(inst.mesh, inst.diagram(psi))
    DG = ot.mass_jacobian(inst.mesh, inst.diagram(psi))
    J = ot.capacity_jacobian(m, psi, DG, params)
    step = 1e-6
    fd = np.zeros((2, 2))
    for j in range(2):
        p, q = psi.copy(), psi.copy()
        p[j] += step
        q[j] -= step
        fd[:, j] = (wbar_at(p) - wbar_at(q)) / (2 * step)
    assert np.abs(J - fd).max() <= 1e-5


def test_normalize_project_exact_root_at_start():
    params = StorageParams(h=1.0, eps=0.0)
    psi, r = ot.normalize_project(np.array([1.0]), np.array([0.0]), 2.0,
                                  params)
    assert r == pytest.approx(0.0, abs=1e-13)
    assert psi[0] == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("w,eps,h,start", [(1.5, 0.0, 1.0, 0.0),
                                           (2.0, 0.01, 0.5, -1.2),
                                           (1.2, 1e-6, 0.25, 3.0)])
def test_normalize_project_single_site_closed_form(w, eps, h, start):
    params = StorageParams(h=h, eps=eps)
    psi, r = ot.normalize_project(np.array([1.0]), np.array([start]), w,
                                  params)
    expected_r = start - h * ot.g_inverse(w / (1.0 - eps))
    assert r == pytest.approx(expected_r, abs=1e-10)


@pytest.mark.parametrize("s", [-3.0, 0.7])
def test_normalize_project_equivariance(s):
    params = StorageParams(h=0.5, eps=0.001)
    masses = np.array([0.3, 0.45, 0.25])
    psi = np.array([0.2, -0.1, 0.4])
    base, r0 = ot.normalize_project(masses, psi, 1.4, params)
    shifted, rs = ot.normalize_project(masses, psi + s, 1.4, params)
    assert np.allclose(base, shifted, atol=1e-10)
    assert rs == pytest.approx(r0 + s, abs=1e-10)


def test_normalize_project_total_and_idempotent():
    params = StorageParams(h=0.5, eps=0.001)
    rng = np.random.default_rng(4)
    for _ in range(5):
        masses = rng.uniform(0.1, 0.5, 4)
        psi = rng.normal(0, 1.0, 4)
        total = rng.uniform(1.0, 2.0)
        out, r = ot.normalize_project(masses, psi, total, params)
        wbar = ot.capacity_map(masses, out, params)
        assert wbar.sum() == pytest.approx(total, abs=1e-12 * total)
        again, r2 = ot.normalize_project(masses, out, total, params)
        assert np.allclose(again, out, atol=1e-12)
        assert abs(r2) <= 1e-12


def test_normalize_project_needs_masses_above_eps():
    params = StorageParams(h=0.5, eps=0.01)
    with pytest.raises(ot.NotInKEps):
        ot.normalize_project(np.array([0.005, 0.9]), np.zeros(2), 1.0,
                             params)


def test_storage_fee_midpoint():
    # capacities summing to 2 make the box midpoints a probability vector
    w = np.array([0.9, 1.1])
    lam = w / 2.0
    assert ot.storage_fee(lam, w, StorageParams(h=0.8, eps=0.0)) == \
        pytest.approx(-(0.8 / 2.0) * w.sum(), abs=1e-12)


def test_storage_fee_outside_box_is_inf():
    params = StorageParams(h=1.0, eps=0.01)
    lam = np.array([0.9, 0.1])
    w = np.array([0.5, 0.6])
    assert ot.storage_fee(lam, w, params) == np.inf
    assert ot.storage_fee(np.array([0.3, 0.3]), w, params) == np.inf


def test_storage_fee_zero_at_floor():
    params = StorageParams(h=1.0, eps=0.5)
    lam = np.array([0.5, 0.5])
    w = np.array([0.6, 0.6])
    assert ot.storage_fee(lam, w, params) == pytest.approx(0.0, abs=1e-12)


def test_storage_fee_convex_along_segments():
    params = StorageParams(h=0.5, eps=0.01)
    w = np.array([0.8, 0.9, 0.7])
    rng = np.random.default_rng(6)
    for _ in range(10):
        a = rng.dirichlet(np.ones(3)) * 0.9 + 0.02
        b = rng.dirichlet(np.ones(3)) * 0.9 + 0.02
        a, b = a / a.sum(), b / b.sum()
        fa, fb = ot.storage_fee(a, w, params), ot.storage_fee(b, w, params)
        fm = ot.storage_fee(0.5 * (a + b), w, params)
        if np.isfinite(fa) and np.isfinite(fb):
            assert fm <= 0.5 * (fa + fb) + 1e-12


def test_optimality_residual_symmetric_root():
    params = StorageParams(h=1.0, eps=0.01)
    res = ot.optimality_residual(np.array([0.5, 0.5]), np.array([0.98, 0.98]),
                                 np.zeros(2), params)
    assert np.allclose(res, 0.0, atol=1e-14)


def test_optimality_residual_single_site_root():
    for w, eps, h in [(1.5, 0.01, 1.0), (2.0, 0.001, 0.5)]:
        params = StorageParams(h=h, eps=eps)
        psi = h * ot.g_inverse(w / (1.0 - eps))
        res = ot.optimality_residual(np.array([1.0]), np.array([w]),
                                     np.array([psi]), params)
        assert abs(res[0]) <= 1e-9


def test_optimality_residual_sensitive_off_root():
    params = StorageParams(h=1.0, eps=0.01)
    res = ot.optimality_residual(np.array([0.5, 0.5]), np.array([0.98, 0.98]),
                                 np.array([0.1, 0.0]), params)
    assert np.abs(res).max() > 0.01


def test_optimality_residual_boundary_raises():
    params = StorageParams(h=1.0, eps=0.01)
    with pytest.raises(ot.BoundaryDegenerate):
        ot.optimality_residual(np.array([0.01, 0.9]), np.array([1.0, 1.0]),
                               np.zeros(2), params)


def test_storage_params_validation():
    with pytest.raises(ot.DomainError):
        StorageParams(h=0.0)
    with pytest.raises(ot.DomainError):
        StorageParams(h=1.0, eps=-0.1)


def test_capacity_state_consistency(two_point_instance):
    inst = two_point_instance
    params = StorageParams(h=0.5, eps=0.01)
    psi = np.array([0.02, -0.05])
    m = ot.mass_vector(inst.mesh, inst.diagram(psi))
    DG = ot.mass_jacobian(inst.mesh, inst.diagram(psi))
    state = ot.capacity_state(m, psi, DG, params)
    assert np.allclose(state.wbar, ot.capacity_map(m, psi, params),
                       atol=1e-12)
    # symmetrized Jacobian is symmetric negative definite
    M = state.jac / state.g[:, None]
    assert np.abs(M - M.T).max() <= 1e-9
    assert np.linalg.eigvalsh(0.5 * (M + M.T)).max() < 0
