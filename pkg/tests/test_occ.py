import numpy as np
import pytest

from chaosvae.errors import EmptyTestSet, InputError, InvalidPercentile, MissingTrainScores, ShapeMismatch
from chaosvae.occ import (DecisionReport, ThresholdStrategy, classification_rate, classify,
                          decision_scores, resolve_threshold)


def loop_scores(X, Xr):
    out = []
    for row, rec in zip(X.tolist(), Xr.tolist()):
        total = 0.0
        for a, b in zip(row, rec):
            total += (a - b) ** 2
        out.append(total / len(row))
    return out


def loop_percentile(values, p):
    # linear interpolation between closest ranks, rank = p/100 * (n - 1)
    v = sorted(values)
    rank = p / 100.0 * (len(v) - 1)
    lo = int(rank)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (rank - lo) * (v[hi] - v[lo])


class TestScores:
    def test_perfect_reconstruction(self):
        X = np.random.default_rng(0).uniform(size=(4, 3))
        np.testing.assert_array_equal(decision_scores(X, X), np.zeros(4))

    def test_half(self):
        assert decision_scores([[1.0, 0.0]], [[0.0, 0.0]])[0] == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            decision_scores(np.zeros((2, 3)), np.zeros((2, 2)))


class TestThreshold:
    def test_literal_medicare(self):
        assert resolve_threshold(ThresholdStrategy.parse("literal_n_scaled"), n=895) == pytest.approx(8.95)

    def test_percentile_max(self):
        assert resolve_threshold(ThresholdStrategy("train_percentile", 100), [1, 2, 3]) == 3

    def test_percentile_median(self):
        assert resolve_threshold(ThresholdStrategy("train_percentile", 50), [1, 2, 3, 4]) == 2.5

    @pytest.mark.parametrize("p", [0, 1, 37.5, 90, 99, 100])
    def test_percentile_matches_loop(self, p):
        values = np.random.default_rng(int(p)).exponential(size=57)
        got = resolve_threshold(ThresholdStrategy("train_percentile", p), values)
        assert got == pytest.approx(loop_percentile(values.tolist(), p), rel=1e-12)

    def test_constant(self):
        assert resolve_threshold(ThresholdStrategy.parse("constant(0.2)")) == 0.2

    def test_errors(self):
        with pytest.raises(InvalidPercentile):
            resolve_threshold(ThresholdStrategy("train_percentile", 101), [1.0])
        with pytest.raises(MissingTrainScores):
            resolve_threshold(ThresholdStrategy("train_percentile", 99), None)
        with pytest.raises(InputError):
            ThresholdStrategy.parse("median")

    @pytest.mark.parametrize("text", ["train_percentile(99)", "constant(0.125)", "literal_n_scaled"])
    def test_parse_round_trip(self, text):
        assert str(ThresholdStrategy.parse(text)) == text


class TestClassify:
    def test_examples(self):
        np.testing.assert_array_equal(classify([0.5, 1.5], 1.0), [0, 1])
        assert classify([1.0], 1.0)[0] == 0
        assert not classify(np.zeros(5), 0.0).any()

    def test_rates(self):
        assert classification_rate([1, 1, 0, 1]) == 75.0
        assert classification_rate([1, 1]) == 100.0
        with pytest.raises(EmptyTestSet):
            classification_rate([])

    def test_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            m, nf = rng.integers(1, 30), rng.integers(1, 10)
            X, Xr = rng.uniform(size=(m, nf)), rng.uniform(size=(m, nf))
            scores = decision_scores(X, Xr)
            np.testing.assert_allclose(scores, loop_scores(X, Xr), rtol=1e-12)
            t = float(rng.uniform(0, 0.3))
            preds = classify(scores, t)
            expected = [1 if s > t else 0 for s in scores.tolist()]
            assert preds.tolist() == expected
            assert classification_rate(preds) == pytest.approx(100.0 * sum(expected) / m)
            sweep = [classification_rate(classify(scores, u)) for u in np.linspace(0, 1, 25)]
            assert all(a >= b for a, b in zip(sweep, sweep[1:]))


class TestReport:
    def make(self):
        return DecisionReport(np.array([0.1, 0.30000000000000004, 2.5e-7]), 0.2,
                              ThresholdStrategy.parse("constant(0.2)"))

    def test_fields(self):
        report = self.make()
        assert report.predictions.tolist() == [0, 1, 0]
        assert report.cr == pytest.approx(100 / 3)

    def test_golden_format(self):
        assert self.make().to_text() == (
            "index,score,prediction\n"
            "0,0.1,0\n"
            "1,0.30000000000000004,1\n"
            "2,2.5e-07,0\n"
            "\n"
            "# strategy,constant(0.2)\n"
            "# threshold,0.2\n"
            "# n,3\n"
            "# cr,33.333333333333336\n")

    def test_round_trip(self):
        report = self.make()
        back = DecisionReport.from_text(report.to_text())
        assert back.scores.tobytes() == report.scores.tobytes()
        assert back.threshold == report.threshold and back.cr == report.cr
        assert back.strategy == report.strategy

    def test_evaluate_needs_train(self):
        class Ident:
            def reconstruct(self, X):
                return X * 0.5

        X = np.ones((4, 2))
        with pytest.raises(MissingTrainScores):
            DecisionReport.evaluate(Ident(), X, ThresholdStrategy())
        report = DecisionReport.evaluate(Ident(), X, ThresholdStrategy.parse("literal_n_scaled"))
        assert report.threshold == pytest.approx(0.04) and report.cr == 100.0
