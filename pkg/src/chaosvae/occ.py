"""One-class decisions from reconstruction error.

A test row is flagged positive when its decision score (mean squared
reconstruction error) is strictly above a threshold.  The classification
rate is the percentage of an all-positive test set that gets flagged.
"""

from dataclasses import dataclass, field
import io

import numpy as np

from .errors import EmptyTestSet, InputError, InvalidPercentile, MissingTrainScores, ShapeMismatch

LITERAL_SCALE = 0.01


@dataclass(frozen=True)
class ThresholdStrategy:
    """``literal_n_scaled``, ``train_percentile`` (uses ``value`` as p) or ``constant``."""

    kind: str = "train_percentile"
    value: float = 99.0

    def __post_init__(self):
        if self.kind not in ("literal_n_scaled", "train_percentile", "constant"):
            raise InputError(f"unknown threshold strategy {self.kind!r}")

    @classmethod
    def parse(cls, text):
        """Parse ``"train_percentile(99)"``, ``"constant(0.2)"`` or ``"literal_n_scaled"``."""
        text = str(text).strip()
        if "(" in text:
            kind, arg = text.rstrip(")").split("(", 1)
            return cls(kind.strip(), float(arg))
        if text == "train_percentile":
            return cls(text, 99.0)
        if text == "literal_n_scaled":
            return cls(text, LITERAL_SCALE)
        raise InputError(f"cannot parse threshold strategy {text!r}")

    def __str__(self):
        if self.kind == "literal_n_scaled":
            return self.kind
        return f"{self.kind}({self.value:g})"


def decision_scores(X_test, X_recon):
    """Per-row mean squared difference between inputs and reconstructions."""
    X_test = np.asarray(X_test, dtype=float)
    X_recon = np.asarray(X_recon, dtype=float)
    if X_test.shape != X_recon.shape or X_test.ndim != 2:
        raise ShapeMismatch(f"shapes differ: {X_test.shape} vs {X_recon.shape}")
    return np.mean((X_test - X_recon) ** 2, axis=1)


def resolve_threshold(strategy, train_scores=None, n=None):
    if strategy.kind == "constant":
        return float(strategy.value)
    if strategy.kind == "literal_n_scaled":
        if n is None:
            raise InputError("literal_n_scaled needs the sample count n")
        return n * LITERAL_SCALE
    p = strategy.value
    if not 0.0 <= p <= 100.0:
        raise InvalidPercentile(f"percentile {p} outside [0, 100]")
    if train_scores is None or len(train_scores) == 0:
        raise MissingTrainScores("train_percentile needs training scores")
    return float(np.percentile(np.asarray(train_scores, dtype=float), p))


def classify(scores, threshold):
    """1 where ``score > threshold`` (strict), else 0."""
    if not np.isfinite(threshold):
        raise InputError("threshold must be finite")
    return (np.asarray(scores) > threshold).astype(np.int64)


def classification_rate(predictions):
    predictions = np.asarray(predictions)
    if predictions.size == 0:
        raise EmptyTestSet("classification rate of an empty test set")
    return 100.0 * np.count_nonzero(predictions == 1) / predictions.size


@dataclass
class DecisionReport:
    scores: np.ndarray
    threshold: float
    strategy: ThresholdStrategy
    predictions: np.ndarray = field(init=False)
    cr: float = field(init=False)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.predictions = classify(self.scores, self.threshold)
        self.cr = classification_rate(self.predictions)

    @classmethod
    def evaluate(cls, model, X_test, strategy, X_train=None):
        """Score an all-positive test set with a trained model."""
        test_scores = decision_scores(X_test, model.reconstruct(X_test))
        train_scores = None
        if strategy.kind == "train_percentile":
            if X_train is None:
                raise MissingTrainScores("train_percentile needs X_train")
            train_scores = decision_scores(X_train, model.reconstruct(X_train))
        threshold = resolve_threshold(strategy, train_scores, n=len(test_scores))
        return cls(test_scores, threshold, strategy)

    def to_text(self):
        """Delimited report: ``index,score,prediction`` rows, then a summary block.

        Floats use ``repr`` so the file round-trips exactly.
        """
        out = io.StringIO()
        out.write("index,score,prediction\n")
        for i, (s, p) in enumerate(zip(self.scores, self.predictions)):
            out.write(f"{i},{float(s)!r},{int(p)}\n")
        out.write("\n")
        out.write(f"# strategy,{self.strategy}\n")
        out.write(f"# threshold,{float(self.threshold)!r}\n")
        out.write(f"# n,{len(self.scores)}\n")
        out.write(f"# cr,{float(self.cr)!r}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text):
        rows, summary = [], {}
        for line in text.splitlines():
            if not line or line.startswith("index,"):
                continue
            if line.startswith("# "):
                key, value = line[2:].split(",", 1)
                summary[key] = value
            else:
                rows.append(float(line.split(",")[1]))
        return cls(np.array(rows), float(summary["threshold"]),
                   ThresholdStrategy.parse(summary["strategy"]))
