import math

import numpy as np
import pytest

import edaexplain as e
from edaexplain.evalharness import evaluate_once, reports_to_csv, run_eval
from edaexplain.measures import score_all_columns


def scores(**kv):
    return [e.InterestingnessScore(a, v, "exceptionality") for a, v in kv.items()]


class TestCompareRankings:
    def test_identical_rankings_are_perfect(self):
        exact = scores(a=3.0, b=2.0, c=1.0)
        r = e.compare_rankings(exact, list(exact), k=3)
        assert r.precision_at_k == 1.0
        assert r.kendall_tau_distance == 0
        assert r.ndcg == 1.0
        assert r.n_attributes == 3

    def test_single_swap(self):
        exact = scores(a=3.0, b=2.0, c=1.0)
        sampled = scores(a=3.0, b=1.0, c=2.0)  # order a, c, b
        r = e.compare_rankings(exact, sampled, k=2)
        assert r.precision_at_k == 0.5
        assert r.kendall_tau_distance == 1
        rel = [1 / math.log2(2), 1 / math.log2(3), 1 / math.log2(4)]
        idcg = sum(rel[i] / math.log2(i + 2) for i in range(3))
        dcg = (rel[0] / math.log2(2) + rel[2] / math.log2(3)
               + rel[1] / math.log2(4))
        assert abs(r.ndcg - dcg / idcg) < 1e-12

    def test_full_reversal_tau(self):
        vals = {f"a{i}": float(i) for i in range(6)}
        exact = scores(**vals)
        sampled = scores(**{k: -v for k, v in vals.items()})
        r = e.compare_rankings(exact, sampled, k=3)
        assert r.kendall_tau_distance == 6 * 5 // 2
        assert r.precision_at_k == 0.0

    def test_equal_values_order_by_attribute(self):
        exact = scores(b=1.0, a=1.0)
        sampled = scores(a=1.0, b=1.0)
        r = e.compare_rankings(exact, sampled, k=1)
        # both orderings resolve ties the same way, so they agree
        assert r.precision_at_k == 1.0
        assert r.kendall_tau_distance == 0

    def test_k_larger_than_set(self):
        exact = scores(a=2.0, b=1.0)
        r = e.compare_rankings(exact, list(exact), k=10)
        assert r.precision_at_k == 1.0

    def test_mismatched_sets_rejected(self):
        with pytest.raises(e.MismatchedAttributeSetsError):
            e.compare_rankings(scores(a=1.0), scores(b=1.0), k=1)

    def test_ndcg_never_exceeds_one(self):
        rng = np.random.default_rng(3)
        names = [f"c{i}" for i in range(8)]
        for _ in range(50):
            exact = [e.InterestingnessScore(n, float(v), "m")
                     for n, v in zip(names, rng.random(8))]
            sampled = [e.InterestingnessScore(n, float(v), "m")
                       for n, v in zip(names, rng.random(8))]
            r = e.compare_rankings(exact, sampled, k=3)
            assert r.ndcg <= 1.0 + 1e-12
            assert 0.0 <= r.precision_at_k <= 1.0

    def test_report_carries_run_metadata(self):
        exact = scores(a=1.0)
        r = e.compare_rankings(exact, list(exact), k=1, sample_size=500, seed=7,
                               wall_time_exact=1.5, wall_time_sampled=0.25)
        assert (r.sample_size, r.seed) == (500, 7)
        assert (r.wall_time_exact, r.wall_time_sampled) == (1.5, 0.25)


class TestGenerateSynthetic:
    def test_shape_and_op(self):
        frame, op = e.generate_synthetic(200, 4, seed=1)
        assert frame.row_count == 200
        assert frame.column_names == ["signal", "col_1", "col_2", "col_3"]
        assert op == e.FilterOp("signal", ">=", 5.0)

    def test_deterministic(self):
        f1, _ = e.generate_synthetic(300, 3, seed=9)
        f2, _ = e.generate_synthetic(300, 3, seed=9)
        for name in f1.column_names:
            assert np.array_equal(f1.column(name).data, f2.column(name).data)
        f3, _ = e.generate_synthetic(300, 3, seed=10)
        assert not all(np.array_equal(f1.column(n).data, f3.column(n).data)
                       for n in f1.column_names)

    def test_planted_column_rename(self):
        frame, op = e.generate_synthetic(150, 2, planted={"column": "pop"})
        assert frame.column_names[0] == "pop"
        assert op.column == "pop"

    def test_exact_ranking_is_the_ladder(self):
        frame, op = e.generate_synthetic(20000, 6, seed=4)
        step = e.make_step(op, [frame])
        ranked = sorted(score_all_columns(step), key=lambda s: -s.value)
        assert [s.attribute for s in ranked] == \
            ["signal", "col_1", "col_2", "col_3", "col_4", "col_5"]

    def test_zero_shift_scores_nothing(self):
        frame, op = e.generate_synthetic(500, 3, planted={"shift_strength": 0.0})
        assert op.literal == 0.0
        step = e.make_step(op, [frame])
        assert step.output.row_count == frame.row_count
        assert all(s.value == 0.0 for s in score_all_columns(step))

    def test_input_validation(self):
        with pytest.raises(ValueError):
            e.generate_synthetic(99, 3)
        with pytest.raises(ValueError):
            e.generate_synthetic(200, 0)
        with pytest.raises(ValueError):
            e.generate_synthetic(200, 3, planted={"shift_strength": 1.5})


class TestHarness:
    def test_evaluate_once_fields(self):
        frame, op = e.generate_synthetic(5000, 5, seed=2)
        r = evaluate_once(frame, op, sample_size=1000, seed=0)
        assert r.n_attributes == 5
        assert 0.0 <= r.precision_at_k <= 1.0
        assert r.ndcg <= 1.0 + 1e-12
        assert r.wall_time_exact > 0 and r.wall_time_sampled > 0

    def test_run_eval_grid(self):
        reports = run_eval(1000, 3, sample_sizes=[200, 400], seeds=[0, 1], k=2)
        assert [(r.sample_size, r.seed) for r in reports] == \
            [(200, 0), (200, 1), (400, 0), (400, 1)]

    def test_reports_to_csv(self):
        reports = run_eval(1000, 3, sample_sizes=[200], seeds=[0], k=2)
        text = reports_to_csv(reports)
        lines = text.splitlines()
        assert lines[0].startswith("sample_size,seed,n_attributes,precision_at_k")
        assert len(lines) == 2
        assert text.endswith("\n")
        assert lines[1].split(",")[0] == "200"
