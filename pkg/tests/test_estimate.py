import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmmtree.errors import EstimationError
from wmmtree.estimate import (
    SampleMatrix,
    back_calculate,
    build_sample_matrix,
    combination_weights,
    dump_samples,
    estimate_from_matrix,
    load_report,
    min_variance_weights,
    two_stage_estimate,
    wmm_estimate,
)
from wmmtree.tree import EdgeRecord, build_tree

from helpers import random_estimation_tree
from oracles import pinv_weights_eig


class TestBackCalculate:
    def test_examples(self):
        assert back_calculate(500, [0.5]) == 1000
        assert back_calculate(50, [0.4, 0.9]) == pytest.approx(50 / 0.36)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            back_calculate(10, [0.5, 0.0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            back_calculate(10, [])


class TestWeights:
    def test_diagonal(self):
        w = combination_weights(np.zeros((3, 2)) + [0, 0], None)
        assert w.degenerate
        rng = np.random.default_rng(0)
        cols = rng.standard_normal((200000, 2)) * [1.0, 2.0]
        w = combination_weights(cols)
        np.testing.assert_allclose(w.values, [0.8, 0.2], rtol=0.02)

    def test_single_column(self):
        w = combination_weights(np.arange(10.0))
        assert w.values.tolist() == [1.0]

    def test_duplicated_columns_match_eig_oracle(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(500)
        y = rng.standard_normal(500)
        cols = np.column_stack([x, x, y])
        w = combination_weights(cols)
        np.testing.assert_allclose(
            w.values, pinv_weights_eig(np.cov(cols, rowvar=False)), atol=1e-8
        )
        assert w.values[0] == pytest.approx(w.values[1], abs=1e-10)

    def test_identical_columns_split_evenly(self):
        x = np.random.default_rng(1).standard_normal(100)
        w = combination_weights(np.column_stack([x, x]))
        np.testing.assert_allclose(w.values, [0.5, 0.5], atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 6))
    def test_sum_and_permutation(self, seed, k):
        rng = np.random.default_rng(seed)
        mix = rng.standard_normal((k, k))
        cols = rng.standard_normal((300, k)) @ mix
        w = combination_weights(cols)
        assert w.values.sum() == pytest.approx(1.0, abs=1e-9)
        perm = rng.permutation(k)
        wp = combination_weights(cols[:, perm])
        np.testing.assert_allclose(wp.values, w.values[perm], atol=1e-7)

    def test_row_weights_use_weighted_covariance(self):
        rng = np.random.default_rng(2)
        cols = rng.standard_normal((1000, 2)) * [1.0, 3.0]
        v = rng.random(1000)
        w = combination_weights(cols, v)
        cov = np.cov(cols, rowvar=False, aweights=v)
        np.testing.assert_allclose(w.values, pinv_weights_eig(cov), atol=1e-10)


class TestSampleMatrix:
    def test_example_shape(self, example_tree):
        m = build_sample_matrix(example_tree, 15, seed=0)
        assert m.shape == (15, 2)
        assert m.leaf_order == ("B", "D")
        assert np.all(m.values > 0)
        assert m.row_weights.max() == 1.0

    def test_dirichlet_leaf_mean(self):
        tree = build_tree([EdgeRecord("Z", "A", 9, 10, 45), EdgeRecord("Z", "B", 1, 10)])
        report = wmm_estimate(tree, 20000, seed=1)
        assert report.per_leaf["A"].mean_estimate == pytest.approx(50.625, rel=0.01)

    def test_errors(self, example_tree):
        with pytest.raises(EstimationError, match="at least 2"):
            build_sample_matrix(example_tree, 1)
        tree = build_tree([EdgeRecord("Z", "A", 1, 2), EdgeRecord("Z", "B", 1, 2)])
        with pytest.raises(EstimationError, match="no informative"):
            build_sample_matrix(tree, 10)
        tree = build_tree([EdgeRecord("Z", "A", 1, 2, 0), EdgeRecord("Z", "B")])
        with pytest.raises(EstimationError, match="count 0"):
            build_sample_matrix(tree, 10)

    def test_zero_estimate_path(self):
        tree = build_tree([
            EdgeRecord("Z", "A", 0, 5, 10, population=True), EdgeRecord("Z", "B")
        ])
        with pytest.raises(EstimationError, match="zero"):
            build_sample_matrix(tree, 10)


class TestEstimate:
    def test_single_path_exact(self, single_path_tree):
        for kind in ("percentile", "var", "cox"):
            r = wmm_estimate(single_path_tree, 50, interval_type=kind)
            assert r.root_estimate == 1000.0
            assert r.rounded_estimate == 1000
            assert r.interval == (1000.0, 1000.0)

    def test_identity(self, example_tree):
        r = wmm_estimate(example_tree, 500, seed=3)
        assert sum(r.weights.values) == pytest.approx(1.0, abs=1e-12)
        assert r.root_estimate == pytest.approx(math.exp(r.theta_hat), rel=1e-12)

    def test_deterministic(self, example_tree):
        a = wmm_estimate(example_tree, 200, seed=9).to_json()
        b = wmm_estimate(example_tree, 200, seed=9).to_json()
        assert a == b
        assert a != wmm_estimate(example_tree, 200, seed=10).to_json()

    def test_unknown_interval(self, example_tree):
        with pytest.raises(ValueError, match="interval"):
            wmm_estimate(example_tree, 20, interval_type="bootstrap")

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.sampled_from([2, 3, 10]))
    def test_scaling_counts_scales_root(self, seed, c):
        tree = random_estimation_tree(np.random.default_rng(seed), 3)
        scaled = build_tree(
            EdgeRecord(r.parent, r.child, r.estimate, r.total,
                       None if r.count is None else r.count * c)
            for r in (tree.records[n] for n in tree.nodes[1:])
        )
        a = wmm_estimate(tree, 200, seed=1)
        b = wmm_estimate(scaled, 200, seed=1)
        assert b.root_estimate == pytest.approx(c * a.root_estimate, rel=1e-9)
        np.testing.assert_allclose(b.weights.values, a.weights.values, atol=1e-8)

    def test_report_round_trip(self, example_tree):
        r = wmm_estimate(example_tree, 40)
        data = json.loads(r.to_json())
        assert data["per_leaf"]["B"]["count"] == 500
        assert set(data["per_edge"]) == {"Z->A", "Z->B", "Z->C", "A->D", "A->E"}
        loaded = load_report(data)
        assert loaded.rounded_estimate == r.rounded_estimate
        assert loaded.edge_means()[("Z", "A")] == pytest.approx(
            r.edge_means()[("Z", "A")]
        )
        slim = json.loads(r.to_json(include_samples=False))
        assert "samples" not in slim["per_leaf"]["B"]

    def test_malformed_report(self):
        with pytest.raises(ValueError, match="malformed"):
            load_report({"root_estimate": 1})

    def test_dump_samples(self, example_tree):
        r = wmm_estimate(example_tree, 7)
        buf = io.StringIO()
        dump_samples(r, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "B,D,Z->A,Z->B,Z->C,A->D,A->E,row_weight"
        assert len(lines) == 8

    def test_from_matrix(self):
        m = SampleMatrix.from_values([[10.0, 20.0], [12.0, 18.0], [11.0, 21.0]])
        r = estimate_from_matrix(m)
        assert r.weights.labels == ("L1", "L2")
        assert min_variance_weights(m).values.sum() == pytest.approx(1.0)


class TestTwoStage:
    def test_single_combination_is_bitwise(self, example_tree):
        base = wmm_estimate(example_tree, 300, seed=4)
        two = two_stage_estimate(example_tree, {("Z", "A"): [(4, 11)]}, 300, seed=4)
        assert two.root_estimate == base.root_estimate
        assert two.interval == base.interval

    def test_identical_sources_agree(self, example_tree):
        base = wmm_estimate(example_tree, 400, seed=4)
        two = two_stage_estimate(
            example_tree, {("Z", "A"): [(4, 11), (4, 11)]}, 400, seed=4
        )
        assert two.root_estimate == pytest.approx(base.root_estimate, rel=0.01)

    def test_four_combinations(self, example_tree):
        r = two_stage_estimate(
            example_tree,
            {("Z", "A"): [(4, 11), (5, 12)], ("A", "D"): [(9, 10), (17, 20)]},
            300,
            seed=2,
        )
        assert len(r.stage_two["combinations"]) == 4
        assert sum(r.stage_two["weights"].values()) == pytest.approx(1.0, abs=1e-9)
        assert r.root_estimate > 0

    def test_cap(self, example_tree):
        with pytest.raises(EstimationError, match="cap"):
            two_stage_estimate(
                example_tree,
                {("Z", "A"): [(4, 11), (5, 12)], ("A", "D"): [(9, 10), (17, 20)]},
                20,
                max_combinations=3,
            )

    def test_unknown_edge(self, example_tree):
        with pytest.raises(KeyError):
            two_stage_estimate(example_tree, {("Z", "Q"): [(1, 2)]}, 20)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), importance=st.booleans())
def test_report_invariants(seed, importance):
    tree = random_estimation_tree(np.random.default_rng(seed), 3,
                                  allow_importance=importance)
    pct = wmm_estimate(tree, 400, seed=seed % 1000)
    lo, hi = pct.interval
    assert lo <= pct.rounded_estimate <= hi
    assert pct.weights.values.sum() == pytest.approx(1.0, abs=1e-9)
    assert pct.row_weights.max() == 1.0
    var = wmm_estimate(tree, 400, interval_type="var", seed=seed % 1000)
    assert var.interval[0] <= var.root_estimate <= var.interval[1]
    assert var.root_estimate == pct.root_estimate
