"""Dataset ingestion, preprocessing, split protocol, and the synthetic generator.

Weakly labeled training/validation groups are built by planting exactly
one anomalous instance among otherwise normal instances.  Test data
keeps exact labels (singleton groups).
"""

import csv as _csv
import json
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files or infeasible split requests."""


DEFAULT_ANOMALY_VALUES = frozenset({"anomaly", "anomalous", "1", "1.0", "true", "yes"})
DEFAULT_NORMAL_VALUES = frozenset({"normal", "0", "0.0", "false", "no"})


@dataclass
class Dataset:
    X: np.ndarray  # (n, D) float64
    is_anomaly: np.ndarray  # (n,) bool
    name: str = "dataset"
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.is_anomaly = np.asarray(self.is_anomaly, dtype=bool)
        if self.X.shape[0] != self.is_anomaly.shape[0]:
            raise DataError(
                f"{self.X.shape[0]} rows but {self.is_anomaly.shape[0]} labels"
            )

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]


@dataclass
class InexactAnomalySet:
    """Row indices of one weakly labeled group (exactly one anomaly inside)."""

    member_indices: list

    def __post_init__(self):
        idx = [int(i) for i in self.member_indices]
        if not idx:
            raise DataError("a weakly labeled set must be nonempty")
        if len(set(idx)) != len(idx):
            raise DataError(f"duplicate indices in set: {idx}")
        self.member_indices = idx


@dataclass
class SplitSpec:
    """Index-level description of one train/val/test split; JSON serializable."""

    train_normals: list
    val_normals: list
    test_normals: list
    train_sets: list  # of InexactAnomalySet
    val_sets: list  # of InexactAnomalySet
    test_anomalies: list

    def to_json(self):
        return json.dumps(
            {
                "train_normals": self.train_normals,
                "val_normals": self.val_normals,
                "test_normals": self.test_normals,
                "train_sets": [s.member_indices for s in self.train_sets],
                "val_sets": [s.member_indices for s in self.val_sets],
                "test_anomalies": self.test_anomalies,
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            train_normals=d["train_normals"],
            val_normals=d["val_normals"],
            test_normals=d["test_normals"],
            train_sets=[InexactAnomalySet(m) for m in d["train_sets"]],
            val_sets=[InexactAnomalySet(m) for m in d["val_sets"]],
            test_anomalies=d["test_anomalies"],
        )


def _parse_label(raw, row_num, anomaly_values, normal_values):
    val = raw.strip().lower()
    if val in anomaly_values:
        return True
    if val in normal_values:
        return False
    raise DataError(f"row {row_num}: unknown label value {raw!r}")


def load_csv(path, label_column="label", anomaly_values=DEFAULT_ANOMALY_VALUES,
             normal_values=DEFAULT_NORMAL_VALUES, name=None):
    """Read a numeric CSV with one label column into a Dataset.

    label_column may be a header name or a 0-based column index.  A
    header row is detected by attempting to parse the first row's
    attribute cells as numbers.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        rows = [r for r in _csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: no data rows")

    header = None
    first = rows[0]
    if isinstance(label_column, str):
        label_idx_guess = None
    else:
        label_idx_guess = int(label_column)
    try:
        for j, cell in enumerate(first):
            if j != label_idx_guess:
                float(cell)
        has_header = False
    except ValueError:
        has_header = True
    if has_header:
        header = [c.strip() for c in first]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header only, no data rows")

    if isinstance(label_column, str):
        if header is None:
            raise DataError(
                f"label column {label_column!r} requested by name but "
                f"{path} has no header row"
            )
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DataError(
                f"label column {label_column!r} not found in header {header}"
            ) from None
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < len(first):
            raise DataError(f"label column index {label_idx} out of range")

    X, flags = [], []
    for r, row in enumerate(rows):
        row_num = r + (2 if has_header else 1)
        if len(row) != len(first):
            raise DataError(
                f"row {row_num}: expected {len(first)} cells, got {len(row)}"
            )
        feats = []
        for j, cell in enumerate(row):
            if j == label_idx:
                continue
            try:
                feats.append(float(cell))
            except ValueError:
                raise DataError(
                    f"row {row_num}, column {j}: non-numeric cell {cell!r}"
                ) from None
        X.append(feats)
        flags.append(_parse_label(row[label_idx], row_num, anomaly_values,
                                  normal_values))

    feature_names = []
    if header is not None:
        feature_names = [h for j, h in enumerate(header) if j != label_idx]
    return Dataset(X=np.array(X), is_anomaly=np.array(flags),
                   name=name or str(path), feature_names=feature_names)


def preprocess(ds):
    """Min-max scale each attribute to [0, 1], then drop exact duplicate rows.

    Scaling statistics come from the whole dataset; constant columns map
    to zero.  Duplicates are bitwise-equal rows after scaling; the first
    occurrence is kept.
    """
    if ds.n < 2:
        raise DataError(f"need at least 2 rows to preprocess, got {ds.n}")
    lo = ds.X.min(axis=0)
    hi = ds.X.max(axis=0)
    span = hi - lo
    scaled = np.where(span > 0, (ds.X - lo) / np.where(span > 0, span, 1.0), 0.0)
    _, keep = np.unique(scaled, axis=0, return_index=True)
    keep = np.sort(keep)
    return Dataset(X=scaled[keep], is_anomaly=ds.is_anomaly[keep],
                   name=ds.name, feature_names=list(ds.feature_names))


def make_splits(ds, rng, n_train_sets=10, n_val_sets=5, set_size=5,
                set_anomaly_pool=None):
    """Build a 70/15/15 normal split plus planted weakly labeled sets.

    Each train/val set gets one distinct anomaly and set_size-1 normals
    taken out of that split's normal pool.  Anomalies not planted in any
    set become exact test anomalies.  set_anomaly_pool optionally
    restricts which anomaly indices may be planted in train/val sets.
    """
    normal_idx = np.flatnonzero(~ds.is_anomaly)
    anomaly_idx = np.flatnonzero(ds.is_anomaly)
    eligible = (np.asarray(set_anomaly_pool, dtype=int)
                if set_anomaly_pool is not None else anomaly_idx)

    n_sets = n_train_sets + n_val_sets
    if eligible.size < n_sets or anomaly_idx.size < n_sets + 1:
        raise DataError(
            f"need at least {n_sets} eligible anomalies for sets plus one for "
            f"test; have {eligible.size} eligible of {anomaly_idx.size} total"
        )

    n_norm = normal_idx.size
    n_tr = int(round(0.70 * n_norm))
    n_va = int(round(0.15 * n_norm))
    need_norm = (n_train_sets + n_val_sets) * (set_size - 1)
    if n_tr <= n_train_sets * (set_size - 1) or n_va <= n_val_sets * (set_size - 1):
        raise DataError(
            f"normal pools too small: train {n_tr}, val {n_va}, but sets "
            f"consume {need_norm} normals in total"
        )

    perm = rng.permutation(normal_idx)
    pool_tr = list(perm[:n_tr])
    pool_va = list(perm[n_tr:n_tr + n_va])
    pool_te = list(perm[n_tr + n_va:])

    set_anoms = rng.permutation(eligible)[:n_sets]
    test_anoms = sorted(set(anomaly_idx.tolist()) - set(set_anoms.tolist()))

    def build_sets(anoms, pool):
        sets = []
        for a in anoms:
            members = [int(a)] + [int(pool.pop()) for _ in range(set_size - 1)]
            sets.append(InexactAnomalySet(members))
        return sets

    train_sets = build_sets(set_anoms[:n_train_sets], pool_tr)
    val_sets = build_sets(set_anoms[n_train_sets:], pool_va)

    return SplitSpec(
        train_normals=[int(i) for i in pool_tr],
        val_normals=[int(i) for i in pool_va],
        test_normals=[int(i) for i in pool_te],
        train_sets=train_sets,
        val_sets=val_sets,
        test_anomalies=[int(i) for i in test_anoms],
    )


# Synthetic two-dimensional mixture: two unit-variance normal modes at
# (+-2, 0); anomalies from a tight cluster at (0, -1.5) seen at train
# time inside weak sets, and a spread-out cloud at (0, 3) that appears
# only in the test data.  The cloud's std trades off overlap with the
# normal modes; much larger values push the best attainable test AUC
# below what reconstruction-error methods are known to reach here.
SYNTH_NORMAL_MEANS = ((-2.0, 0.0), (2.0, 0.0))
SYNTH_ANOM_TRAIN_MEAN = (0.0, -1.5)
SYNTH_ANOM_TRAIN_STD = 0.35
SYNTH_ANOM_TEST_MEAN = (0.0, 3.0)
SYNTH_ANOM_TEST_STD = 0.8
SYNTH_N_NORMAL = 500
SYNTH_N_ANOM = 200


def gen_synthetic(rng, n_train_sets=10, n_val_sets=5, set_size=5):
    """Draw the 2-d mixture dataset and split it; returns (Dataset, SplitSpec).

    The wide-variance anomaly component is excluded from the weakly
    labeled train/val sets, so it is only ever seen in the test data.
    """
    per_mode = SYNTH_N_NORMAL // 2
    per_comp = SYNTH_N_ANOM // 2
    blocks = [
        rng.normal(loc=m, scale=1.0, size=(per_mode, 2))
        for m in SYNTH_NORMAL_MEANS
    ]
    blocks.append(rng.normal(loc=SYNTH_ANOM_TRAIN_MEAN,
                             scale=SYNTH_ANOM_TRAIN_STD, size=(per_comp, 2)))
    blocks.append(rng.normal(loc=SYNTH_ANOM_TEST_MEAN,
                             scale=SYNTH_ANOM_TEST_STD, size=(per_comp, 2)))
    X = np.vstack(blocks)
    flags = np.zeros(X.shape[0], dtype=bool)
    flags[SYNTH_N_NORMAL:] = True
    ds = Dataset(X=X, is_anomaly=flags, name="synthetic",
                 feature_names=["x1", "x2"])
    trainable_anoms = np.arange(SYNTH_N_NORMAL, SYNTH_N_NORMAL + per_comp)
    split = make_splits(ds, rng, n_train_sets=n_train_sets,
                        n_val_sets=n_val_sets, set_size=set_size,
                        set_anomaly_pool=trainable_anoms)
    return ds, split


@dataclass
class TrainData:
    """Materialized training or validation half of a split."""

    sets: list  # of (set_size, D) arrays
    normals: np.ndarray  # (n, D)


@dataclass
class TestData:
    anomalies: np.ndarray  # (m, D)
    normals: np.ndarray  # (n, D)


def materialize(ds, split):
    """Resolve a SplitSpec into instance arrays: (train, val, test)."""
    train = TrainData(
        sets=[ds.X[s.member_indices] for s in split.train_sets],
        normals=ds.X[split.train_normals],
    )
    val = TrainData(
        sets=[ds.X[s.member_indices] for s in split.val_sets],
        normals=ds.X[split.val_normals],
    )
    test = TestData(
        anomalies=ds.X[split.test_anomalies],
        normals=ds.X[split.test_normals],
    )
    return train, val, test
