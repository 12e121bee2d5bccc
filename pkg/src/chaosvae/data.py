"""Tabular ingestion and one-class splitting.

A YAML schema names the label column and the kind of every feature column:

.. code-block:: yaml

    label: exclusion
    positive: ["1"]            # label values meaning fraud (optional)
    negative: ["0"]            # label values meaning genuine (optional)
    keep_identifiers: false
    columns:
      - {name: npi, kind: identifier}
      - {name: provider_type, kind: categorical}
      - {name: line_srvc_cnt, kind: numerical}
      - {name: Vehicle Price, kind: ordinal,
         categories: [less than 20000, 20000 to 29000, more than 69000]}

Numerical columns are min-max scaled, categorical columns one-hot encoded,
ordinal columns mapped to ``index / (k - 1)`` and identifier columns
dropped.  All statistics are fitted on the genuine (label 0) rows only.
"""

from dataclasses import asdict, dataclass, field
import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .errors import DataError, EmptyTraining, MissingClass, UnknownColumn

KINDS = ("numerical", "categorical", "ordinal", "identifier")
DEFAULT_POSITIVE = ("1", "1.0", "yes", "y", "true", "fraud")
DEFAULT_NEGATIVE = ("0", "0.0", "no", "n", "false", "genuine")


@dataclass
class FeatureSpec:
    name: str
    kind: str
    categories: list = field(default_factory=list)
    min: float = None
    max: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        self.categories = [str(c) for c in self.categories]
        if len(set(self.categories)) != len(self.categories):
            raise DataError(f"column {self.name!r}: duplicate categories")
        if self.kind == "ordinal" and not self.categories:
            raise DataError(f"ordinal column {self.name!r} needs its category order")

    @property
    def width(self):
        if self.kind == "categorical":
            return len(self.categories)
        return 0 if self.kind == "identifier" else 1

    def encoded_names(self):
        if self.kind == "categorical":
            return [f"{self.name}={c}" for c in self.categories]
        return [] if self.kind == "identifier" else [self.name]


@dataclass
class Schema:
    label: str
    columns: list
    positive: tuple = DEFAULT_POSITIVE
    negative: tuple = DEFAULT_NEGATIVE
    keep_identifiers: bool = False

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict) or "label" not in doc or "columns" not in doc:
            raise DataError("schema needs 'label' and 'columns' entries")
        columns = []
        for entry in doc["columns"]:
            if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
                raise DataError(f"bad column entry {entry!r}")
            columns.append(FeatureSpec(str(entry["name"]), str(entry["kind"]),
                                       list(entry.get("categories") or [])))
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise DataError("schema lists a column twice")
        lower = lambda vals: tuple(str(v).strip().lower() for v in vals)
        return cls(str(doc["label"]), columns,
                   lower(doc.get("positive", DEFAULT_POSITIVE)),
                   lower(doc.get("negative", DEFAULT_NEGATIVE)),
                   bool(doc.get("keep_identifiers", False)))

    def to_dict(self):
        return {"label": self.label, "positive": list(self.positive),
                "negative": list(self.negative),
                "keep_identifiers": self.keep_identifiers,
                "columns": [{"name": c.name, "kind": c.kind,
                             "categories": list(c.categories)} for c in self.columns]}

    def digest(self):
        return _digest(self.to_dict())


def load_schema(path):
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise DataError(f"schema {path}: {exc}") from exc
    return Schema.from_dict(doc)


def _digest(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TabularDataset:
    """Raw feature columns plus binary labels (1 = fraud).

    ``frame`` keeps the CSV line number of each row as its index so that
    transform errors can point at the offending line.
    """

    frame: pd.DataFrame
    labels: np.ndarray
    schema: Schema
    provenance: str = ""

    def __len__(self):
        return len(self.labels)

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return TabularDataset(self.frame[mask], self.labels[mask], self.schema,
                              self.provenance)


def _parse_labels(values, schema, lines):
    labels = np.empty(len(values), dtype=np.int64)
    for i, (raw, line) in enumerate(zip(values, lines)):
        key = str(raw).strip().lower()
        if key in schema.positive:
            labels[i] = 1
        elif key in schema.negative:
            labels[i] = 0
        else:
            raise DataError(f"label {raw!r} is neither positive nor negative", line)
    return labels


def read_csv(path, schema):
    """Load a labelled CSV with a header row against ``schema``."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False,
                            skipinitialspace=True)
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: file is empty") from exc
    frame.columns = [c.strip() for c in frame.columns]
    frame.index = pd.RangeIndex(2, len(frame) + 2)
    if schema.label not in frame.columns:
        raise UnknownColumn(f"label column {schema.label!r} not found in {path}")
    declared = {c.name for c in schema.columns}
    extra = [c for c in frame.columns if c != schema.label and c not in declared]
    if extra:
        raise UnknownColumn(f"columns not described by the schema: {extra}")
    missing = [c for c in declared if c not in frame.columns]
    if missing:
        raise UnknownColumn(f"schema columns missing from {path}: {missing}")
    labels = _parse_labels(frame[schema.label], schema, frame.index)
    return TabularDataset(frame.drop(columns=[schema.label]), labels, schema, str(path))


class Pipeline:
    """Fitted encoder from raw columns to a [0, 1] feature matrix."""

    def __init__(self, specs):
        self.specs = specs

    @classmethod
    def fit(cls, dataset):
        """Fit on the label-0 rows of ``dataset``."""
        genuine = dataset.frame[dataset.labels == 0]
        if len(genuine) == 0:
            raise EmptyTraining("no genuine rows to fit the pipeline on")
        specs = []
        for col in dataset.schema.columns:
            kind = col.kind
            if kind == "identifier" and dataset.schema.keep_identifiers:
                kind = "categorical"
            if col.name not in genuine.columns:
                raise UnknownColumn(f"column {col.name!r} not in dataset")
            values = genuine[col.name]
            if kind == "numerical":
                nums = _to_numeric(values, col.name)
                specs.append(FeatureSpec(col.name, kind, [], float(nums.min()),
                                         float(nums.max())))
            elif kind == "categorical":
                cats = col.categories or sorted({str(v).strip() for v in values})
                specs.append(FeatureSpec(col.name, kind, cats))
            else:
                specs.append(FeatureSpec(col.name, kind, list(col.categories)))
        return cls(specs)

    @property
    def width(self):
        return sum(s.width for s in self.specs)

    def feature_names(self):
        return [n for s in self.specs for n in s.encoded_names()]

    def transform(self, frame):
        if isinstance(frame, TabularDataset):
            frame = frame.frame
        blocks = []
        for spec in self.specs:
            if spec.kind == "identifier":
                continue
            if spec.name not in frame.columns:
                raise UnknownColumn(f"column {spec.name!r} not in data")
            values = frame[spec.name]
            if spec.kind == "numerical":
                nums = _to_numeric(values, spec.name)
                span = spec.max - spec.min
                if span > 0:
                    scaled = np.clip((nums - spec.min) / span, 0.0, 1.0)
                else:
                    scaled = np.zeros(len(nums))
                blocks.append(scaled.reshape(-1, 1))
            elif spec.kind == "categorical":
                index = {c: i for i, c in enumerate(spec.categories)}
                onehot = np.zeros((len(values), len(spec.categories)))
                for r, v in enumerate(values):
                    j = index.get(str(v).strip())
                    if j is not None:
                        onehot[r, j] = 1.0
                blocks.append(onehot)
            else:
                index = {c: i for i, c in enumerate(spec.categories)}
                k = len(spec.categories)
                col = np.empty(len(values))
                for r, (line, v) in enumerate(values.items()):
                    j = index.get(str(v).strip())
                    if j is None:
                        raise DataError(
                            f"column {spec.name!r}: unknown ordinal level {v!r}", line)
                    col[r] = j / (k - 1) if k > 1 else 0.0
                blocks.append(col.reshape(-1, 1))
        if not blocks:
            return np.zeros((len(frame), 0))
        return np.hstack(blocks)

    def to_dict(self):
        return {"specs": [asdict(s) for s in self.specs]}

    @classmethod
    def from_dict(cls, doc):
        return cls([FeatureSpec(**s) for s in doc["specs"]])

    @property
    def pipeline_id(self):
        return _digest(self.to_dict())

    def __eq__(self, other):
        return isinstance(other, Pipeline) and self.to_dict() == other.to_dict()


def fit_pipeline(dataset):
    """Fit encoders on the genuine rows of ``dataset``; see :meth:`Pipeline.fit`."""
    return Pipeline.fit(dataset)


def _to_numeric(values, name):
    if pd.api.types.is_numeric_dtype(values):
        nums = values.to_numpy(dtype=float)
    else:
        nums = pd.to_numeric(values.map(lambda v: str(v).strip()),
                             errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(nums)
    if bad.any():
        line = values.index[np.argmax(bad)]
        raise DataError(f"column {name!r}: non-numeric value "
                        f"{values.iloc[np.argmax(bad)]!r}", line)
    return nums


@dataclass
class OneClassSplit:
    X_train: np.ndarray
    X_test: np.ndarray
    pipeline: Pipeline
    feature_names: list


def split_one_class(dataset):
    """Genuine rows become the training set, fraud rows the test set."""
    n_neg = int(np.count_nonzero(dataset.labels == 0))
    n_pos = int(np.count_nonzero(dataset.labels == 1))
    if n_neg == 0 or n_pos == 0:
        raise MissingClass(f"need both classes, got {n_neg} genuine / {n_pos} fraud")
    pipeline = Pipeline.fit(dataset)
    X_train = pipeline.transform(dataset.frame[dataset.labels == 0])
    X_test = pipeline.transform(dataset.frame[dataset.labels == 1])
    return OneClassSplit(X_train, X_test, pipeline, pipeline.feature_names())


def synth_occ(seed, n_neg, n_pos, nf, shift):
    """Gaussian blobs for desk-scale checks.

    Genuine rows centre on 0.3 in every feature, fraud rows on
    ``0.3 + shift``; both have per-feature std 0.05 and are clipped to [0, 1].
    """
    if min(n_neg, n_pos, nf) < 1 or shift < 0:
        raise ValueError("n_neg, n_pos, nf must be >= 1 and shift >= 0")
    rng = np.random.default_rng(seed)
    neg = np.clip(rng.normal(0.3, 0.05, size=(n_neg, nf)), 0.0, 1.0)
    pos = np.clip(rng.normal(0.3 + shift, 0.05, size=(n_pos, nf)), 0.0, 1.0)
    names = [f"f{j}" for j in range(nf)]
    frame = pd.DataFrame(np.vstack([neg, pos]), columns=names)
    labels = np.r_[np.zeros(n_neg, dtype=np.int64), np.ones(n_pos, dtype=np.int64)]
    schema = Schema("label", [FeatureSpec(n, "numerical") for n in names])
    return TabularDataset(frame, labels, schema,
                          f"synth_occ(seed={seed},n_neg={n_neg},n_pos={n_pos},"
                          f"nf={nf},shift={shift})")


def save_splits(directory, split, schema, provenance=""):
    """Write ``splits.npz`` and ``pipeline.json`` into ``directory``.

    The npz holds ``X_train``, ``X_test`` and a JSON ``header`` with the
    schema digest, pipeline id, feature names and provenance.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = {"format_version": 1, "schema_digest": schema.digest(),
              "pipeline_id": split.pipeline.pipeline_id,
              "feature_names": split.feature_names, "provenance": provenance}
    with open(directory / "splits.npz", "wb") as fh:
        np.savez(fh, X_train=split.X_train, X_test=split.X_test,
                 header=np.frombuffer(json.dumps(header, sort_keys=True).encode(),
                                      dtype=np.uint8))
    (directory / "pipeline.json").write_text(
        json.dumps({"schema": schema.to_dict(), **split.pipeline.to_dict()},
                   indent=2, sort_keys=True))
    return header


def load_splits(directory):
    """Inverse of :func:`save_splits`; verifies the pipeline id matches."""
    directory = Path(directory)
    try:
        with np.load(directory / "splits.npz", allow_pickle=False) as data:
            header = json.loads(bytes(data["header"]).decode())
            X_train, X_test = np.array(data["X_train"]), np.array(data["X_test"])
        doc = json.loads((directory / "pipeline.json").read_text())
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot load splits from {directory}: {exc}") from exc
    pipeline = Pipeline.from_dict(doc)
    if pipeline.pipeline_id != header["pipeline_id"]:
        raise DataError("pipeline.json does not match splits.npz")
    return OneClassSplit(X_train, X_test, pipeline, header["feature_names"]), header
