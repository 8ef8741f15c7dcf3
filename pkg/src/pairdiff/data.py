"""CSV ingestion, schema handling, preprocessing and class-prior estimation.

The pipeline standardizes numeric columns, one-hot encodes nominal columns
and rank-encodes ordinal columns (the rank is then standardized like any
numeric column).  All fitted state comes from the training split only, so
transforming a held-out split never leaks its statistics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MISSING_MARKERS = {"", "?", "NA", "NaN", "nan"}


class DataError(Exception):
    """Base class for dataset ingestion/preprocessing failures."""


class EmptyFileError(DataError):
    pass


class MissingTargetError(DataError):
    pass


class RaggedRowError(DataError):
    def __init__(self, line_number: int, expected: int, got: int):
        self.line_number = line_number
        super().__init__(
            f"row at line {line_number} has {got} cells, expected {expected}"
        )


class SchemaMismatchError(DataError):
    pass


class UnseenLabelError(DataError):
    pass


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # numeric | nominal | ordinal
    ordered_categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("numeric", "nominal", "ordinal"):
            raise ValueError(f"unknown column kind: {self.kind!r}")
        if self.kind == "ordinal" and not self.ordered_categories:
            raise ValueError(f"ordinal column {self.name!r} needs ordered categories")


@dataclass
class RawDataset:
    rows: list[list[str]]
    schema: list[ColumnSchema]
    target_column: str

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_index(self, name: str) -> int:
        for i, col in enumerate(self.schema):
            if col.name == name:
                return i
        raise SchemaMismatchError(f"no column named {name!r}")

    def subset(self, indices) -> "RawDataset":
        return RawDataset(
            rows=[self.rows[i] for i in indices],
            schema=self.schema,
            target_column=self.target_column,
        )

    def raw_labels(self) -> list[str]:
        t = self.column_index(self.target_column)
        return [row[t] for row in self.rows]


def _is_numeric_cell(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_csv(path, target: str, schema_hints: dict | None = None) -> RawDataset:
    """Load a comma-delimited file with a header row.

    ``schema_hints`` maps a column name to ``"numeric"``, ``"nominal"`` or a
    list of ordered categories (which makes the column ordinal).  Columns
    without a hint are numeric when every non-missing cell parses as a
    number, nominal otherwise.
    """
    hints = schema_hints or {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        table = list(reader)
    if not table:
        raise EmptyFileError(f"{path}: file is empty")
    header = table[0]
    rows = table[1:]
    for offset, row in enumerate(rows):
        if len(row) != len(header):
            raise RaggedRowError(offset + 2, len(header), len(row))
    if target not in header:
        raise MissingTargetError(f"target column {target!r} not found in header")
    if len(set(header)) != len(header):
        raise SchemaMismatchError("duplicate column names in header")

    schema = []
    for j, name in enumerate(header):
        hint = hints.get(name)
        if hint is None:
            cells = [row[j] for row in rows if row[j] not in MISSING_MARKERS]
            kind = "numeric" if cells and all(_is_numeric_cell(c) for c in cells) else "nominal"
            schema.append(ColumnSchema(name, kind))
        elif isinstance(hint, (list, tuple)):
            schema.append(ColumnSchema(name, "ordinal", tuple(hint)))
        else:
            schema.append(ColumnSchema(name, str(hint)))
    return RawDataset(rows=rows, schema=schema, target_column=target)


@dataclass
class ProcessedDataset:
    X: np.ndarray  # N x F, float64, no missing values
    y: np.ndarray  # N integer labels in {0..K-1}
    class_names: list[str]

    @property
    def K(self) -> int:
        return len(self.class_names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


@dataclass
class ClassPrior:
    p: np.ndarray  # K probabilities, sum 1

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0) or abs(self.p.sum() - 1.0) > 1e-12:
            raise ValueError("prior must be nonnegative and sum to 1")


@dataclass
class Preprocessor:
    """Fitted per-column transform state plus the label encoding.

    Numeric columns store (mean, population std); a constant column stores
    std 1 so scaling is a no-op.  Nominal columns store their category list
    (with a dedicated "missing" category when missing cells were seen at fit
    time); unseen categories at transform time map to an all-zero block.
    Ordinal columns store the category->rank map and the mean/std of the
    ranks observed at fit time.
    """

    schema: list[ColumnSchema] = field(default_factory=list)
    target_column: str = ""
    numeric_stats: dict = field(default_factory=dict)  # name -> (mean, std)
    nominal_categories: dict = field(default_factory=dict)  # name -> [cat, ...]
    ordinal_ranks: dict = field(default_factory=dict)  # name -> {cat: rank}
    classes: list[str] = field(default_factory=list)  # first-occurrence order

    MISSING_CATEGORY = "__missing__"

    def feature_width(self) -> int:
        width = 0
        for col in self.schema:
            if col.name == self.target_column:
                continue
            if col.kind == "nominal":
                width += len(self.nominal_categories[col.name])
            else:
                width += 1
        return width

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": [
                {"name": c.name, "kind": c.kind, "ordered_categories": list(c.ordered_categories)}
                for c in self.schema
            ],
            "target_column": self.target_column,
            "numeric_stats": {k: [repr(float(m)), repr(float(s))] for k, (m, s) in self.numeric_stats.items()},
            "nominal_categories": self.nominal_categories,
            "ordinal_ranks": self.ordinal_ranks,
            "classes": self.classes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessor":
        return cls(
            schema=[
                ColumnSchema(c["name"], c["kind"], tuple(c["ordered_categories"]))
                for c in d["schema"]
            ],
            target_column=d["target_column"],
            numeric_stats={k: (float(m), float(s)) for k, (m, s) in d["numeric_stats"].items()},
            nominal_categories={k: list(v) for k, v in d["nominal_categories"].items()},
            ordinal_ranks={k: {c: int(r) for c, r in v.items()} for k, v in d["ordinal_ranks"].items()},
            classes=list(d["classes"]),
        )


def fit_preprocessor(train: RawDataset) -> Preprocessor:
    if train.n_rows == 0:
        raise EmptyFileError("cannot fit a preprocessor on zero rows")
    pre = Preprocessor(schema=list(train.schema), target_column=train.target_column)

    for j, col in enumerate(train.schema):
        cells = [row[j] for row in train.rows]
        if col.name == train.target_column:
            for c in cells:  # label order: first occurrence in training data
                if c not in pre.classes:
                    pre.classes.append(c)
            continue
        if col.kind == "numeric":
            values = np.array([float(c) for c in cells if c not in MISSING_MARKERS])
            if values.size == 0:
                raise DataError(f"numeric column {col.name!r} has no observed values")
            mean = float(values.mean())
            std = float(values.std())  # population std
            if std == 0.0:
                std = 1.0
            pre.numeric_stats[col.name] = (mean, std)
        elif col.kind == "ordinal":
            ranks = {cat: r for r, cat in enumerate(col.ordered_categories)}
            pre.ordinal_ranks[col.name] = ranks
            observed = []
            for c in cells:
                if c in MISSING_MARKERS:
                    continue
                if c not in ranks:
                    raise DataError(f"value {c!r} not in declared order of {col.name!r}")
                observed.append(ranks[c])
            values = np.array(observed, dtype=float)
            if values.size == 0:
                raise DataError(f"ordinal column {col.name!r} has no observed values")
            mean = float(values.mean())
            std = float(values.std())
            if std == 0.0:
                std = 1.0
            pre.numeric_stats[col.name] = (mean, std)
        else:  # nominal
            cats = []
            saw_missing = False
            for c in cells:
                if c in MISSING_MARKERS:
                    saw_missing = True
                elif c not in cats:
                    cats.append(c)
            if saw_missing:
                cats.append(Preprocessor.MISSING_CATEGORY)
            pre.nominal_categories[col.name] = cats
    return pre


def transform(pre: Preprocessor, data: RawDataset, with_labels: bool = True):
    """Apply a fitted preprocessor.

    Returns a ProcessedDataset when ``with_labels`` is true, else the bare
    feature matrix.  Labels unseen at fit time raise UnseenLabelError.
    """
    fitted_features = [(c.name, c.kind) for c in pre.schema if c.name != pre.target_column]
    data_features = [(c.name, c.kind) for c in data.schema if c.name != data.target_column]
    if fitted_features != data_features:
        raise SchemaMismatchError(
            f"schema mismatch: fitted on {fitted_features}, got {data_features}"
        )

    n = data.n_rows
    blocks = []
    for j, col in enumerate(data.schema):
        if col.name == data.target_column:
            continue
        cells = [row[j] for row in data.rows]
        if col.kind in ("numeric", "ordinal"):
            mean, std = pre.numeric_stats[col.name]
            if col.kind == "numeric":
                raw = np.array(
                    [mean if c in MISSING_MARKERS else float(c) for c in cells]
                )
            else:
                ranks = pre.ordinal_ranks[col.name]
                raw = np.empty(n)
                for i, c in enumerate(cells):
                    if c in MISSING_MARKERS:
                        raw[i] = mean
                    elif c in ranks:
                        raw[i] = ranks[c]
                    else:
                        raise SchemaMismatchError(
                            f"value {c!r} not in declared order of {col.name!r}"
                        )
            blocks.append(((raw - mean) / std).reshape(n, 1))
        else:
            cats = pre.nominal_categories[col.name]
            block = np.zeros((n, len(cats)))
            index = {cat: k for k, cat in enumerate(cats)}
            for i, c in enumerate(cells):
                if c in MISSING_MARKERS:
                    c = Preprocessor.MISSING_CATEGORY
                k = index.get(c)
                if k is not None:  # unseen category stays an all-zero block
                    block[i, k] = 1.0
            blocks.append(block)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))

    if not with_labels:
        return X

    t = data.column_index(data.target_column)
    label_index = {c: k for k, c in enumerate(pre.classes)}
    y = np.empty(n, dtype=int)
    for i, row in enumerate(data.rows):
        c = row[t]
        if c not in label_index:
            raise UnseenLabelError(f"label {c!r} was not present in the training data")
        y[i] = label_index[c]
    return ProcessedDataset(X=X, y=y, class_names=list(pre.classes))


def class_prior(data: ProcessedDataset, smoothing: bool = False) -> ClassPrior:
    """Relative class frequencies; add-one (Laplace) smoothing optional."""
    if data.n < 1:
        raise DataError("cannot estimate a prior from zero rows")
    counts = np.bincount(data.y, minlength=data.K).astype(float)
    if smoothing:
        p = (counts + 1.0) / (data.n + data.K)
    else:
        p = counts / data.n
    return ClassPrior(p=p)
