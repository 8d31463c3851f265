import numpy as np
import pytest

from wmmtree.estimate import wmm_estimate
from wmmtree.moments import (
    analytic_path_moments,
    beta_inverse_moment,
    dirichlet_path_betas,
)
from wmmtree.tree import EdgeRecord, RootPath, build_tree, path_to_leaf

from oracles import beta_inverse_moments_quad


def test_beta_inverse_moments():
    assert beta_inverse_moment(4, 8, 1) == pytest.approx(11 / 3)
    assert beta_inverse_moment(2, 1, 2) is None


def test_single_edge_against_quadrature():
    path = RootPath("A", (("Z", "A"),), 33)
    got = analytic_path_moments(path, [(4, 8)])
    mean, var = beta_inverse_moments_quad(33, 4, 8)
    assert got.mean == pytest.approx(121)
    assert got.variance == pytest.approx(5324)
    assert got.mean == pytest.approx(mean, rel=1e-6)
    assert got.variance == pytest.approx(var, rel=1e-6)


def test_undefined_variance():
    got = analytic_path_moments(RootPath("A", (("Z", "A"),), 10), [(2, 1)])
    assert got.mean == pytest.approx(20)
    assert got.variance is None


def test_two_edge_path_monte_carlo():
    tree = build_tree([
        EdgeRecord("Z", "A", 9, 10), EdgeRecord("Z", "B", 1, 10),
        EdgeRecord("A", "C", 9, 10, 64), EdgeRecord("A", "D", 1, 10),
    ])
    path = path_to_leaf(tree, "C")
    betas = dirichlet_path_betas(tree, path)
    assert betas == [(9, 1), (9, 1)]
    got = analytic_path_moments(path, betas)
    assert got.mean == pytest.approx(81)
    report = wmm_estimate(tree, 40000, seed=5)
    samples = report.per_leaf["C"].samples
    assert samples.mean() == pytest.approx(81, rel=0.01)
    assert samples.var(ddof=1) == pytest.approx(got.variance, rel=0.1)


def test_arity_mismatch():
    with pytest.raises(ValueError):
        analytic_path_moments(RootPath("A", (("Z", "A"),), 1), [])
