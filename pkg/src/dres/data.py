"""Core domain types and on-disk formats: feature views, labels, datasets,
and stratified cross-validation split plans with a DSEL carve-out.

On-disk formats
---------------
DMAT (binary, bit-exact): magic ``DMAT``, version u32 LE = 1, rows u32 LE,
cols u32 LE, rows*cols float32 LE row-major, then an optional trailing
name block (u32 LE byte length + UTF-8 bytes). No padding anywhere.

View CSV: optional header row; every cell parses as a decimal float.
Labels CSV: header ``id,label``; label is a non-negative integer.
"""

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

DMAT_MAGIC = b"DMAT"
DMAT_VERSION = 1


class DataFormatError(ValueError):
    """Malformed or inconsistent input data (bad file, shape mismatch, bad labels)."""


@dataclass(frozen=True)
class ViewMatrix:
    """One feature representation of the corpus: a dense (rows x dim) matrix.

    ``data`` is float32 (the DMAT payload type) and read-only; all values
    must be finite.
    """

    name: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise DataFormatError(f"view {self.name!r}: data must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DataFormatError(f"view {self.name!r}: empty matrix {arr.shape}")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            raise DataFormatError(
                f"view {self.name!r}: non-finite value at (row {r}, col {c})"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MultiViewDataset:
    """Several views of the same instances plus dense integer labels."""

    views: tuple
    labels: np.ndarray
    ids: tuple

    @property
    def num_views(self) -> int:
        return len(self.views)

    @property
    def num_instances(self) -> int:
        return len(self.labels)

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def view_names(self):
        return [v.name for v in self.views]


@dataclass(frozen=True)
class FoldSplit:
    train: np.ndarray
    dsel: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple
    seed: int
    dsel_fraction: float


def _validate_labels(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise DataFormatError("labels must be a non-empty 1-D sequence")
    if not np.issubdtype(labels.dtype, np.integer):
        as_int = labels.astype(np.int64)
        if not np.array_equal(as_int, labels):
            raise DataFormatError("labels must be integers")
        labels = as_int
    labels = labels.astype(np.int64)
    if labels.min() < 0:
        raise DataFormatError("labels must be non-negative")
    num_classes = int(labels.max()) + 1
    present = np.unique(labels)
    if num_classes < 2:
        raise DataFormatError("need at least 2 classes")
    if len(present) != num_classes:
        missing = sorted(set(range(num_classes)) - set(present.tolist()))
        raise DataFormatError(f"non-dense labels: classes {missing} absent")
    return labels


def assemble_dataset(views, labels, ids=None) -> MultiViewDataset:
    """Validate and bundle views + labels into a dataset.

    All views must have the same row count as the label vector; view names
    must be unique; labels must be a dense 0..L-1 encoding with L >= 2.
    """
    if not views:
        raise DataFormatError("need at least one view")
    labels = _validate_labels(labels)
    n = len(labels)
    for v in views:
        if v.rows != n:
            raise DataFormatError(
                f"row count mismatch: view {v.name!r} has {v.rows} rows, expected {n}"
            )
    names = [v.name for v in views]
    if len(set(names)) != len(names):
        dupes = sorted({x for x in names if names.count(x) > 1})
        raise DataFormatError(f"duplicate view names: {dupes}")
    if ids is None:
        ids = tuple(str(i) for i in range(n))
    else:
        ids = tuple(str(x) for x in ids)
        if len(ids) != n:
            raise DataFormatError(f"got {len(ids)} ids for {n} instances")
    labels = labels.copy()
    labels.flags.writeable = False
    return MultiViewDataset(views=tuple(views), labels=labels, ids=ids)


def make_splits(dataset: MultiViewDataset, folds: int = 5,
                dsel_fraction: float = 0.25, seed: int = 0) -> SplitPlan:
    """Label-stratified k-fold plan; each fold's non-test part is further
    stratified into train and DSEL by ``dsel_fraction``.

    Deterministic for a given (dataset, seed). Raises if any class has
    fewer instances than ``folds``.
    """
    if folds < 2:
        raise DataFormatError(f"folds must be >= 2, got {folds}")
    if not 0.0 < dsel_fraction < 1.0:
        raise DataFormatError(f"dsel_fraction must be in (0, 1), got {dsel_fraction}")
    labels = dataset.labels
    num_classes = dataset.num_classes

    counts = np.bincount(labels, minlength=num_classes)
    too_small = [int(c) for c in range(num_classes) if counts[c] < folds]
    if too_small:
        raise DataFormatError(
            f"classes {too_small} have fewer instances than folds={folds}"
        )

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5F01]))
    test_sets = [[] for _ in range(folds)]
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        for f in range(folds):
            test_sets[f].extend(idx[f::folds].tolist())

    out = []
    for f in range(folds):
        test = np.array(sorted(test_sets[f]), dtype=np.int64)
        rest_mask = np.ones(len(labels), dtype=bool)
        rest_mask[test] = False
        train_parts, dsel_parts = [], []
        for c in range(num_classes):
            idx = np.flatnonzero(rest_mask & (labels == c))
            idx = idx[rng.permutation(len(idx))]
            n_dsel = int(np.floor(len(idx) * dsel_fraction + 0.5))
            n_dsel = min(n_dsel, len(idx) - 1)  # keep >=1 train instance per class
            n_dsel = max(n_dsel, 0)
            dsel_parts.extend(idx[:n_dsel].tolist())
            train_parts.extend(idx[n_dsel:].tolist())
        out.append(FoldSplit(
            train=np.array(sorted(train_parts), dtype=np.int64),
            dsel=np.array(sorted(dsel_parts), dtype=np.int64),
            test=test,
        ))
    return SplitPlan(folds=tuple(out), seed=int(seed), dsel_fraction=float(dsel_fraction))


# ---------------------------------------------------------------------------
# DMAT binary format
# ---------------------------------------------------------------------------

def write_dmat(path, view: ViewMatrix) -> None:
    payload = view.data.astype("<f4", copy=False).tobytes(order="C")
    name_bytes = view.name.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(DMAT_MAGIC)
        fh.write(struct.pack("<III", DMAT_VERSION, view.rows, view.dim))
        fh.write(payload)
        fh.write(struct.pack("<I", len(name_bytes)))
        fh.write(name_bytes)


def read_dmat(path) -> ViewMatrix:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != DMAT_MAGIC:
        got = raw[:4]
        raise DataFormatError(
            f"{path}: bad magic at byte 0: expected {DMAT_MAGIC!r}, got {got!r}"
        )
    if len(raw) < 16:
        raise DataFormatError(f"{path}: truncated header at byte {len(raw)} (need 16)")
    version, rows, cols = struct.unpack_from("<III", raw, 4)
    if version != DMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version} at byte 4")
    if rows == 0 or cols == 0:
        raise DataFormatError(f"{path}: zero dimension ({rows} x {cols}) at byte 8")
    need = rows * cols * 4
    if len(raw) < 16 + need:
        raise DataFormatError(
            f"{path}: truncated payload at byte {len(raw)} (need {16 + need})"
        )
    data = np.frombuffer(raw, dtype="<f4", count=rows * cols, offset=16).reshape(rows, cols)
    name = None
    pos = 16 + need
    if len(raw) > pos:
        if len(raw) < pos + 4:
            raise DataFormatError(f"{path}: truncated name length at byte {pos}")
        (name_len,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        if len(raw) < pos + name_len:
            raise DataFormatError(f"{path}: truncated name at byte {pos}")
        if len(raw) > pos + name_len:
            raise DataFormatError(f"{path}: {len(raw) - pos - name_len} trailing bytes at byte {pos + name_len}")
        name = raw[pos:pos + name_len].decode("utf-8")
    if name is None:
        name = _stem(path)
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        r, c = bad[0]
        offset = 16 + (int(r) * cols + int(c)) * 4
        raise DataFormatError(
            f"{path}: non-finite value at (row {r}, col {c}), byte {offset}"
        )
    return ViewMatrix(name=name, data=data.copy())


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

def _stem(path) -> str:
    s = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return s.rsplit(".", 1)[0] if "." in s else s


def _looks_like_header(cells) -> bool:
    for cell in cells:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def read_view_csv(path, name=None) -> ViewMatrix:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataFormatError(f"{path}: empty CSV")
    start = 1 if _looks_like_header(rows[0]) else 0
    body = rows[start:]
    if not body:
        raise DataFormatError(f"{path}: header but no data rows")
    width = len(body[0])
    data = np.empty((len(body), width), dtype=np.float64)
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataFormatError(
                f"{path}: row {i + start} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                val = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: unparseable cell at (row {i + start}, col {j}): {cell!r}"
                ) from None
            if not np.isfinite(val):
                raise DataFormatError(
                    f"{path}: non-finite value at (row {i + start}, col {j})"
                )
            data[i, j] = val
    return ViewMatrix(name=name or _stem(path), data=data)


def write_view_csv(path, view: ViewMatrix) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(view.dim)])
        for row in np.asarray(view.data, dtype=np.float64):
            writer.writerow([repr(float(x)) for x in row])


def load_view(path, name=None) -> ViewMatrix:
    """Load a view from DMAT or CSV; sniffs the DMAT magic, else parses CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == DMAT_MAGIC:
        vm = read_dmat(path)
        return ViewMatrix(name=name, data=vm.data) if name else vm
    return read_view_csv(path, name=name)


def save_view(path, view: ViewMatrix) -> None:
    if str(path).endswith(".dmat"):
        write_dmat(path, view)
    else:
        write_view_csv(path, view)


def read_labels_csv(path):
    """Read `id,label` CSV; returns (ids, labels array). Labels are raw ints
    here; density is validated at dataset assembly."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataFormatError(f"{path}: empty labels file")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["id", "label"]:
        raise DataFormatError(f"{path}: labels header must be 'id,label', got {rows[0]!r}")
    ids, labels = [], []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != 2:
            raise DataFormatError(f"{path}: row {i} has {len(row)} cells, expected 2")
        ids.append(row[0])
        try:
            lab = int(row[1])
        except ValueError:
            raise DataFormatError(f"{path}: row {i}: label {row[1]!r} is not an integer") from None
        if lab < 0:
            raise DataFormatError(f"{path}: row {i}: negative label {lab}")
        labels.append(lab)
    return ids, np.array(labels, dtype=np.int64)


def write_labels_csv(path, ids, labels) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for i, lab in zip(ids, labels):
            writer.writerow([i, int(lab)])


def load_dataset(view_paths, labels_path, view_names=None) -> MultiViewDataset:
    ids, labels = read_labels_csv(labels_path)
    views = []
    for k, p in enumerate(view_paths):
        name = view_names[k] if view_names else None
        views.append(load_view(p, name=name))
    return assemble_dataset(views, labels, ids=ids)
