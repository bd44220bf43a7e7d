import json
import math

import numpy as np
import pytest

from bubblequad.compress import (
    CompressedRule,
    compress,
    qmc_moments,
    select_surface_basis,
    validate_rule,
    write_rule_json,
)
from bubblequad.errors import ResidualNotMet
from bubblequad.geometry import THREE_BALLS, Ball, Box3, MultiBubble
from bubblequad.lowdisc import WeightedPointSet, sample_surface, sample_volume
from bubblequad.polybasis import ChebBasis, cheb_vandermonde, dim_poly
from bubblequad.quadrature import apply, random_linear_power


@pytest.fixture(scope="module")
def unit_ball_volume():
    return sample_volume(MultiBubble((Ball((0, 0, 0), 1),)), 100_000)


def test_moment_of_constant_is_mass(three_ball_volume_small):
    pts = three_ball_volume_small
    basis = ChebBasis.full(pts.box, 3)
    p = qmc_moments(pts, basis)
    assert math.isclose(p[0], pts.measure_estimate, rel_tol=1e-12)
    # direct evaluation oracle
    V = cheb_vandermonde(basis, pts.points)
    np.testing.assert_allclose(p, V.T @ pts.weights, rtol=1e-12, atol=1e-12)


def test_moment_single_point():
    pts = WeightedPointSet(np.array([[0.1, 0.2, 0.3]]), np.array([2.0]), np.array([-1]), 1, 2.0,
                           box=Box3((-1, -1, -1), (1, 1, 1)))
    assert qmc_moments(pts, ChebBasis.full(pts.box, 0)).tolist() == [2.0]


def test_odd_moments_vanish_on_ball(unit_ball_volume):
    pts = unit_ball_volume
    p = qmc_moments(pts, ChebBasis.full(pts.box, 1))
    assert np.all(np.abs(p[1:]) <= 1e-2 * p[0])


def test_select_basis_volume_is_full(three_ball_volume_small):
    basis = select_surface_basis(three_ball_volume_small, 3)
    assert basis.ncols == 20
    assert basis.column_mask.tolist() == list(range(20))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_select_basis_sphere_collapses(unit_sphere_surface, n):
    basis = select_surface_basis(unit_sphere_surface, n)
    assert basis.ncols == (n + 1) ** 2
    assert np.all(np.diff(basis.column_mask) > 0)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_compress_volume_postconditions(three_ball_volume_small, n):
    pts = three_ball_volume_small
    rule, report = compress(pts, n)
    assert np.all(rule.weights > 0)
    assert len(rule) <= rule.basis_rank == dim_poly(n)
    assert rule.residual < 1e-10
    ms = [it.m for it in report.iterations]
    assert ms[0] == 2 * dim_poly(n)
    assert all(a < b for a, b in zip(ms, ms[1:])) and ms[-1] <= len(pts)
    assert math.isclose(rule.weights.sum(), pts.measure_estimate, rel_tol=1e-10)
    np.testing.assert_array_equal(rule.nodes, pts.points[rule.indices])
    assert report.compression_ratio == len(pts) / len(rule)


def test_exactness_transfer_volume(three_ball_volume_small):
    pts = three_ball_volume_small
    n = 5
    rule, _ = compress(pts, n)
    rng = np.random.default_rng(11)
    for a, b, c, d in rng.random((100, 4)):
        g = random_linear_power(a, b, c, d, n)
        ref = apply(pts, g)
        assert abs(apply(rule, g) - ref) / abs(ref) <= 1e-8


def test_exactness_transfer_surface():
    pts = sample_surface(THREE_BALLS, 4_000)
    n = 4
    rule, _ = compress(pts, n)
    assert rule.basis_rank == dim_poly(n)
    rng = np.random.default_rng(12)
    for a, b, c, d in rng.random((30, 4)):
        g = random_linear_power(a, b, c, d, n)
        ref = apply(pts, g)
        assert abs(apply(rule, g) - ref) / abs(ref) <= 1e-8


def test_square_system_recovers_weights():
    # 4 affinely independent points in the unit ball, degree 1: V is 4x4 invertible
    P = np.array([[0.1, 0.0, 0.0], [0.0, 0.5, 0.1], [-0.3, 0.2, 0.4], [0.2, -0.4, -0.3]])
    w = np.array([0.1, 0.2, 0.3, 0.4])
    pts = WeightedPointSet(P, w, np.full(4, -1), 4, w.sum(), box=Box3((-1, -1, -1), (1, 1, 1)))
    rule, report = compress(pts, 1)
    basis = ChebBasis.full(pts.box, 1)
    direct = np.linalg.solve(cheb_vandermonde(basis, P).T, qmc_moments(pts, basis))
    np.testing.assert_allclose(direct, w, rtol=1e-13)
    np.testing.assert_array_equal(rule.indices, [0, 1, 2, 3])
    np.testing.assert_allclose(rule.weights, w, rtol=1e-12)
    assert rule.residual < 1e-14
    assert report.iterations[0].m == 4


def test_degree_zero_single_node(three_ball_volume_small):
    rule, _ = compress(three_ball_volume_small, 0)
    assert len(rule) == 1
    assert math.isclose(rule.weights[0], three_ball_volume_small.measure_estimate, rel_tol=1e-12)


def test_residual_not_met_carries_report(three_ball_volume_small):
    with pytest.raises(ResidualNotMet) as info:
        compress(three_ball_volume_small, 3, eps=1e-30)
    report = info.value.report
    assert report.iterations[-1].m == len(three_ball_volume_small)
    assert all(a.m < b.m for a, b in zip(report.iterations, report.iterations[1:]))


def test_permutation_robustness(three_ball_volume_small):
    pts = three_ball_volume_small
    perm = np.random.default_rng(5).permutation(len(pts))
    shuffled = WeightedPointSet(pts.points[perm], pts.weights[perm], pts.owner[perm],
                                pts.total_generated, pts.measure_estimate, box=pts.box)
    rule_a, _ = compress(pts, 4)
    rule_b, _ = compress(shuffled, 4)
    basis = select_surface_basis(pts, 4)
    assert rule_b.residual < 1e-10
    assert validate_rule(rule_a, pts, basis) <= 1e-8
    assert validate_rule(rule_b, shuffled, basis) <= 1e-8


def test_validate_rule_identity_and_linearity(three_ball_volume_small):
    pts = three_ball_volume_small
    basis = select_surface_basis(pts, 3)
    assert validate_rule(pts, pts, basis) <= 1e-14
    rule, _ = compress(pts, 3)
    assert validate_rule(rule, pts, basis) <= 1e-8
    growth = []
    for delta in (1e-6, 1e-4, 1e-2):
        w = rule.weights.copy()
        w[0] += delta
        bumped = CompressedRule(rule.nodes, w, 3, rule.residual, rule.basis_rank, rule.indices)
        growth.append(validate_rule(bumped, pts, basis) / delta)
    np.testing.assert_allclose(growth, growth[0], rtol=1e-3)


def test_rule_serialization(tmp_path, three_ball_volume_small):
    rule, report = compress(three_ball_volume_small, 2)
    rule.write_csv(tmp_path / "r.csv")
    write_rule_json(tmp_path / "r.json", rule, report)
    back = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1, ndmin=2)
    assert np.array_equal(back[:, :3], rule.nodes) and np.array_equal(back[:, 3], rule.weights)
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["degree"] == 2 and doc["basis_rank"] == 10
    assert doc["report"]["iterations"][-1]["residual"] == rule.residual
