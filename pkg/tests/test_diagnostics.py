import numpy as np
import pytest

import otstorage as ot
from otstorage.diagnostics import (ConvexityProbe, InsufficientTrace,
                                   convexity_probe, hausdorff_partitions,
                                   rate_fit, stability_report,
                                   sym_diff_partitions)
from otstorage.solver import IterationRecord
from otstorage.storage import StorageParams


def rec(k, res, ell=0):
    return IterationRecord(k=k, residual_norm=res, residual_l1=res,
                           residual_linf=res, ell=ell, tau=2.0 ** (-ell),
                           r=0.0, min_wbar=0.5)


def test_sym_diff_identical(unit_square, uniform_mesh, two_point_sites):
    d = ot.laguerre_cells(unit_square, two_point_sites, np.zeros(2))
    rep = sym_diff_partitions(d, d, uniform_mesh)
    assert np.allclose(rep.per_cell_sym_diff, 0.0, atol=1e-12)
    assert rep.total_sym_diff == pytest.approx(0.0, abs=1e-12)
    assert rep.l1_weight_gap == pytest.approx(0.0, abs=1e-12)


def test_sym_diff_two_point_shift(unit_square, uniform_mesh,
                                  two_point_sites):
    a = ot.laguerre_cells(unit_square, two_point_sites, np.zeros(2))
    b = ot.laguerre_cells(unit_square, two_point_sites, [0.1, 0.0])
    rep = sym_diff_partitions(a, b, uniform_mesh)
    assert np.allclose(rep.per_cell_sym_diff, [0.1, 0.1], atol=1e-12)
    assert rep.total_sym_diff == pytest.approx(
        rep.per_cell_sym_diff.sum(), abs=1e-12)
    assert rep.l1_weight_gap == pytest.approx(0.2, abs=1e-12)
    assert ((rep.per_cell_sym_diff >= 0)
            & (rep.per_cell_sym_diff <= 2)).all()


def test_sym_diff_mismatched_n(unit_square, uniform_mesh, two_point_sites):
    a = ot.laguerre_cells(unit_square, two_point_sites, np.zeros(2))
    b = ot.laguerre_cells(unit_square, [[0.5, 0.5]], [0.0])
    with pytest.raises(ot.MismatchedN):
        sym_diff_partitions(a, b, uniform_mesh)


def test_hausdorff_partitions_shift(unit_square, two_point_sites):
    a = ot.laguerre_cells(unit_square, two_point_sites, np.zeros(2))
    b = ot.laguerre_cells(unit_square, two_point_sites, [0.1, 0.0])
    vals = hausdorff_partitions(a, b)
    assert vals == pytest.approx([0.1, 0.1], abs=1e-12)
    assert hausdorff_partitions(a, a) == pytest.approx([0.0, 0.0], abs=0)


def test_hausdorff_partitions_empty_flag(unit_square, two_point_sites):
    a = ot.laguerre_cells(unit_square, two_point_sites, np.zeros(2))
    # large weight on site 0 empties its cell
    b = ot.laguerre_cells(unit_square, two_point_sites, [10.0, 0.0])
    assert b.cells[0].is_empty
    vals = hausdorff_partitions(a, b)
    assert vals[0] is None
    assert vals[1] is not None


def test_sym_diff_triangle_inequality(unit_square, uniform_mesh):
    rng = np.random.default_rng(7)
    sites = rng.uniform(0.1, 0.9, (4, 2))
    for _ in range(10):
        psis = rng.normal(0, 0.05, (3, 4))
        d = [ot.laguerre_cells(unit_square, sites, p) for p in psis]
        ab = sym_diff_partitions(d[0], d[1], uniform_mesh).per_cell_sym_diff
        bc = sym_diff_partitions(d[1], d[2], uniform_mesh).per_cell_sym_diff
        ac = sym_diff_partitions(d[0], d[2], uniform_mesh).per_cell_sym_diff
        assert (ac <= ab + bc + 1e-10).all()


def test_both_distances_shrink_along_path(unit_square, uniform_mesh,
                                          two_point_sites):
    base = ot.laguerre_cells(unit_square, two_point_sites, np.zeros(2))
    prev_sym, prev_h = np.inf, np.inf
    for shift in (0.2, 0.1, 0.05, 0.025):
        other = ot.laguerre_cells(unit_square, two_point_sites, [shift, 0.0])
        rep = sym_diff_partitions(base, other, uniform_mesh)
        h = max(hausdorff_partitions(base, other))
        assert rep.total_sym_diff < prev_sym
        assert h < prev_h
        prev_sym, prev_h = rep.total_sym_diff, h


def test_stability_report_fields(two_point_instance):
    params = StorageParams(h=1.0, eps=0.01)
    sol = ot.newton_solve(two_point_instance, params, ot.SolverConfig(),
                          psi0=np.array([0.05, -0.05]))
    rep = stability_report(sol, two_point_instance.capacities)
    assert rep.n_eps == pytest.approx(2 * 0.01, abs=1e-15)
    assert rep.wbar_gap_l1 <= np.sqrt(2) * 1e-10
    assert rep.sqrt_h == pytest.approx(1.0, abs=1e-15)
    assert not rep.classical_mode
    # halving h halves the squared reported term
    sol2 = ot.newton_solve(two_point_instance, StorageParams(h=0.5, eps=0.01),
                           ot.SolverConfig())
    rep2 = stability_report(sol2, two_point_instance.capacities)
    assert rep2.sqrt_h == pytest.approx(rep.sqrt_h / np.sqrt(2), rel=1e-12)


def test_convexity_probe_gap_positive(unit_square, uniform_mesh,
                                      two_point_sites):
    inst = ot.Instance(unit_square, two_point_sites, uniform_mesh,
                       np.array([0.5, 0.5]))
    pr = convexity_probe(inst, [0.3, 0.7], [0.7, 0.3], 0.5)
    assert isinstance(pr, ConvexityProbe)
    assert pr.gap > 0
    assert pr.gap == pytest.approx(pr.lhs - pr.rhs, abs=1e-15)
    # swap symmetry
    pr2 = convexity_probe(inst, [0.7, 0.3], [0.3, 0.7], 0.5)
    assert pr2.gap == pytest.approx(pr.gap, abs=2e-8)


def test_convexity_probe_equal_weights_zero(unit_square, uniform_mesh,
                                            two_point_sites):
    inst = ot.Instance(unit_square, two_point_sites, uniform_mesh,
                       np.array([0.5, 0.5]))
    pr = convexity_probe(inst, [0.4, 0.6], [0.4, 0.6], 0.5)
    assert abs(pr.gap) <= 2e-8


def test_convexity_probe_input_validation(two_point_instance):
    with pytest.raises(ValueError):
        convexity_probe(two_point_instance, [0.3, 0.7], [0.7, 0.3], 1.5)
    with pytest.raises(ValueError):
        convexity_probe(two_point_instance, [0.3, 0.8], [0.7, 0.3], 0.5)


def test_rate_fit_quadratic_sequence():
    trace = [rec(k, r) for k, r in enumerate([1e-1, 1e-2, 1e-4, 1e-8])]
    order, factor = rate_fit(trace)
    assert order == pytest.approx(2.0, abs=1e-9)


def test_rate_fit_geometric_sequence():
    trace = [rec(k, r) for k, r in enumerate([1e-1, 5e-2, 2.5e-2])]
    order, factor = rate_fit(trace)
    assert factor == pytest.approx(0.5, abs=1e-12)


def test_rate_fit_insufficient():
    with pytest.raises(InsufficientTrace):
        rate_fit([rec(0, 1e-3)])
    with pytest.raises(InsufficientTrace):
        rate_fit([rec(0, 1e-1, ell=2), rec(1, 1e-2, ell=1)])
