"""Embedding matrices, image attributes and viewpoint bins.

Binary embedding format (little endian):

    offset 0   4 bytes   magic b"FCEM"
    offset 4   uint32    version (1)
    offset 8   uint64    N (rows / images)
    offset 16  uint64    D (columns / units)
    offset 24  N*D float32, row major
    then       UTF-8 image ids, one per line, newline terminated

CSV embedding format: header ``image_id,<unit 0>,...,<unit D-1>`` and one row
per image. Attribute CSV: columns ``image_id,identity,gender,yaw``.
"""
import logging
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.errors import DataError

logger = logging.getLogger(__name__)

MAGIC = b"FCEM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

ATTRIBUTE_COLUMNS = ("image_id", "identity", "gender", "yaw")
GENDER_TOKENS = ("F", "M")
MAX_ABS_YAW = 150.0

PathLike = Union[str, Path]


class ViewBin(str, Enum):
    """Viewpoint category of ``|yaw|``; the first bin is closed at both ends."""

    FRONTAL = "frontal"
    NEAR_FRONTAL = "near-frontal"
    HALF_PROFILE = "half-profile"
    NEAR_PROFILE = "near-profile"
    PROFILE = "profile"

    @property
    def bounds(self) -> Tuple[float, float]:
        """(lower, upper) in degrees of |yaw|; upper is always inclusive."""
        return _BIN_BOUNDS[self]


_VIEW_EDGES = np.array([18.0, 36.0, 54.0, 72.0, MAX_ABS_YAW])
_VIEW_BINS = list(ViewBin)
_BIN_BOUNDS = {
    ViewBin.FRONTAL: (0.0, 18.0),
    ViewBin.NEAR_FRONTAL: (18.0, 36.0),
    ViewBin.HALF_PROFILE: (36.0, 54.0),
    ViewBin.NEAR_PROFILE: (54.0, 72.0),
    ViewBin.PROFILE: (72.0, MAX_ABS_YAW),
}


def bin_viewpoint(yaw: float) -> ViewBin:
    """Bin one yaw angle (degrees) by its absolute value."""
    magnitude = abs(float(yaw))
    if not np.isfinite(magnitude) or magnitude > MAX_ABS_YAW:
        raise DataError(f"Yaw {yaw} outside [-{MAX_ABS_YAW:g}, {MAX_ABS_YAW:g}] degrees")
    return _VIEW_BINS[int(np.searchsorted(_VIEW_EDGES, magnitude, side="left"))]


def bin_viewpoints(yaws: Iterable[float]) -> np.ndarray:
    """Vectorized :func:`bin_viewpoint`; returns an array of bin labels."""
    magnitude = np.abs(np.asarray(list(yaws) if not isinstance(yaws, np.ndarray) else yaws,
                                  dtype=np.float64))
    bad = ~np.isfinite(magnitude) | (magnitude > MAX_ABS_YAW)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataError(f"Yaw out of range at row {row}: |yaw| must be <= {MAX_ABS_YAW:g}", row=row)
    labels = np.array([b.value for b in _VIEW_BINS], dtype=object)
    return labels[np.searchsorted(_VIEW_EDGES, magnitude, side="left")]


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """N x D descriptor matrix with row-aligned image ids."""

    descriptors: np.ndarray
    image_ids: Tuple[str, ...]

    def __post_init__(self):
        matrix = np.array(self.descriptors, dtype=np.float64, copy=True)
        ids = tuple(str(i) for i in self.image_ids)
        if matrix.ndim != 2:
            raise DataError(f"Descriptors must be a 2-D matrix, got shape {matrix.shape}")
        n, d = matrix.shape
        if n < 2 or d < 2:
            raise DataError(f"Need at least 2 images and 2 units, got {n}x{d}")
        if len(ids) != n:
            raise DataError(f"Got {len(ids)} image ids for {n} descriptor rows")
        finite = np.isfinite(matrix).all(axis=1)
        if not finite.all():
            row = int(np.flatnonzero(~finite)[0])
            raise DataError(f"Non-finite value at row {row} (image {ids[row]!r})", row=row, ids=[ids[row]])
        _check_unique(ids)
        matrix.setflags(write=False)
        object.__setattr__(self, "descriptors", matrix)
        object.__setattr__(self, "image_ids", ids)

    @classmethod
    def derived(cls, descriptors: np.ndarray, image_ids: Sequence[str]) -> "EmbeddingSet":
        """Wrap a matrix computed from an already validated set.

        Skips validation, so column subsets of a single unit are allowed.
        """
        matrix = np.array(descriptors, dtype=np.float64)
        matrix.setflags(write=False)
        derived = object.__new__(cls)
        object.__setattr__(derived, "descriptors", matrix)
        object.__setattr__(derived, "image_ids", tuple(image_ids))
        return derived

    @property
    def n_images(self) -> int:
        return self.descriptors.shape[0]

    @property
    def n_units(self) -> int:
        return self.descriptors.shape[1]

    def row_index(self) -> Dict[str, int]:
        return {image_id: i for i, image_id in enumerate(self.image_ids)}

    def rows(self, image_ids: Sequence[str]) -> np.ndarray:
        """Descriptor rows for ``image_ids`` in the given order."""
        index = self.row_index()
        missing = [i for i in image_ids if i not in index]
        if missing:
            raise DataError(f"{len(missing)} image ids not in embedding set", ids=missing)
        return self.descriptors[[index[i] for i in image_ids]]


def _check_unique(ids: Sequence[str]) -> None:
    seen: Dict[str, int] = {}
    for row, image_id in enumerate(ids):
        if image_id in seen:
            raise DataError(
                f"Duplicate image_id {image_id!r} at row {row} (first seen at row {seen[image_id]})",
                row=row, ids=[image_id],
            )
        seen[image_id] = row


def _resolve_format(path: Path, fmt: Optional[str]) -> str:
    fmt = (fmt or ("csv" if path.suffix.lower() == ".csv" else "binary")).lower()
    if fmt not in ("binary", "csv"):
        raise DataError(f"Unknown embedding format: {fmt!r} (expected 'binary' or 'csv')")
    return fmt


def load_embeddings(path: PathLike, format: Optional[str] = None) -> EmbeddingSet:
    """Load an embedding matrix, preserving file row order.

    Args:
        path: File location
        format: ``"binary"`` or ``"csv"``; inferred from the suffix when omitted

    Raises:
        FileNotFoundError: If the file does not exist
        DataError: Malformed header, non-finite value or duplicate id
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"Embeddings file not found at {file_path}")

    fmt = _resolve_format(file_path, format)
    emb = _read_binary(file_path) if fmt == "binary" else _read_csv(file_path)
    logger.info(f"Loaded {emb.n_images}x{emb.n_units} embeddings from {file_path} ({fmt})")
    return emb


def _read_binary(path: Path) -> EmbeddingSet:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"Malformed header in {path}: file shorter than {_HEADER.size} bytes")
    magic, version, n, d = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise DataError(f"Malformed header in {path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataError(f"Malformed header in {path}: unsupported version {version}")
    payload_end = _HEADER.size + 4 * n * d
    if len(raw) < payload_end:
        raise DataError(f"Malformed header in {path}: header declares {n}x{d} but payload is truncated")

    matrix = np.frombuffer(raw, dtype="<f4", count=n * d, offset=_HEADER.size).reshape(n, d)
    try:
        ids = raw[payload_end:].decode("utf-8").split("\n")
    except UnicodeDecodeError as e:
        raise DataError(f"Malformed id block in {path}: not valid UTF-8 ({e.reason} at byte {e.start})") from e
    if ids and ids[-1] == "":
        ids = ids[:-1]
    if len(ids) != n:
        raise DataError(f"Malformed id block in {path}: expected {n} ids, found {len(ids)}")
    return EmbeddingSet(matrix.astype(np.float64), tuple(ids))


def _read_csv(path: Path) -> EmbeddingSet:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    columns = list(df.columns)
    if not columns or columns[0] != "image_id":
        raise DataError(f"Malformed header in {path}: first column must be 'image_id', got {columns[:1]}")
    unit_columns = columns[1:]
    if len(unit_columns) < 2:
        raise DataError(f"Malformed header in {path}: need at least 2 unit columns")

    values = df[unit_columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    finite = np.isfinite(values).all(axis=1)
    if not finite.all():
        row = int(np.flatnonzero(~finite)[0])
        raise DataError(f"Non-finite or non-numeric value at row {row} of {path}", row=row)
    return EmbeddingSet(values, tuple(df["image_id"].str.strip()))


def save_embeddings(emb: EmbeddingSet, path: PathLike, format: Optional[str] = None,
                    float_format: str = "%.9g") -> Path:
    """Write ``emb`` in binary (float32) or CSV format."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    fmt = _resolve_format(file_path, format)

    if fmt == "binary":
        if any("\n" in i for i in emb.image_ids):
            raise DataError("Image ids may not contain newlines in the binary format")
        header = _HEADER.pack(MAGIC, VERSION, emb.n_images, emb.n_units)
        payload = np.ascontiguousarray(emb.descriptors, dtype="<f4").tobytes()
        ids = "".join(f"{i}\n" for i in emb.image_ids).encode("utf-8")
        file_path.write_bytes(header + payload + ids)
    else:
        df = pd.DataFrame(emb.descriptors, columns=[f"u{j}" for j in range(emb.n_units)])
        df.insert(0, "image_id", list(emb.image_ids))
        df.to_csv(file_path, index=False, float_format=float_format)

    logger.info(f"Saved {emb.n_images}x{emb.n_units} embeddings to {file_path} ({fmt})")
    return file_path


@dataclass(frozen=True, eq=False)
class AttributeTable:
    """Per-image identity, gender and yaw, indexed by image id."""

    frame: pd.DataFrame = field(repr=False)

    @property
    def image_ids(self) -> Tuple[str, ...]:
        return tuple(self.frame.index)

    @property
    def identities(self) -> np.ndarray:
        return self.frame["identity"].to_numpy(dtype=object)

    @property
    def genders(self) -> np.ndarray:
        return self.frame["gender"].to_numpy(dtype=object)

    @property
    def yaws(self) -> np.ndarray:
        return self.frame["yaw"].to_numpy(dtype=np.float64)

    @property
    def view_bins(self) -> np.ndarray:
        return self.frame["view_bin"].to_numpy(dtype=object)

    @property
    def n_identities(self) -> int:
        return int(self.frame["identity"].nunique())

    def __len__(self) -> int:
        return len(self.frame)

    def labels(self, attribute: str) -> np.ndarray:
        """Grouping labels for ``identity``, ``gender`` or ``viewpoint``."""
        if attribute == "identity":
            return self.identities
        if attribute == "gender":
            return self.genders
        if attribute == "viewpoint":
            return self.view_bins
        raise ValueError(f"Unknown attribute: {attribute!r}")

    def select(self, image_ids: Sequence[str]) -> "AttributeTable":
        """Rows for ``image_ids`` in the given order."""
        missing = [i for i in image_ids if i not in self.frame.index]
        if missing:
            raise DataError(
                f"{len(missing)} image ids have no attribute row: {missing[:10]}",
                ids=missing,
            )
        return AttributeTable(self.frame.loc[list(image_ids)])

    def align(self, emb: EmbeddingSet) -> "AttributeTable":
        """Reorder to the embedding row order, failing on missing ids."""
        return self.select(emb.image_ids)

    def with_column(self, name: str, values: Sequence) -> "AttributeTable":
        frame = self.frame.copy()
        frame[name] = list(values)
        if name == "yaw":
            frame["view_bin"] = bin_viewpoints(frame["yaw"].to_numpy(dtype=np.float64))
        return AttributeTable(frame)


def load_attributes(path: PathLike, embeddings: Optional[EmbeddingSet] = None) -> AttributeTable:
    """Load and validate the attribute CSV.

    Args:
        path: CSV with columns image_id, identity, gender, yaw
        embeddings: When given, every embedding id must have a row and the
            table is returned in embedding row order

    Raises:
        FileNotFoundError: If the file does not exist
        DataError: Missing column, unknown gender token, |yaw| > 150,
            duplicate image id or ids missing for ``embeddings``
    """
    csv_path = Path(path)
    if not csv_path.exists():
        raise FileNotFoundError(f"Attributes file not found at {csv_path}")

    df = pd.read_csv(csv_path, dtype=str, keep_default_na=False)
    df.columns = [c.strip() for c in df.columns]

    missing = [c for c in ATTRIBUTE_COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"Missing required columns: {missing}")

    df = df[list(ATTRIBUTE_COLUMNS)].copy()
    for col in ("image_id", "identity", "gender"):
        df[col] = df[col].str.strip()
        empty = df[col] == ""
        if empty.any():
            row = int(np.flatnonzero(empty.to_numpy())[0])
            raise DataError(f"Empty {col} at row {row} of {csv_path}", row=row)

    df["gender"] = df["gender"].str.upper()
    bad_gender = ~df["gender"].isin(GENDER_TOKENS)
    if bad_gender.any():
        row = int(np.flatnonzero(bad_gender.to_numpy())[0])
        raise DataError(
            f"Unknown gender token {df['gender'].iloc[row]!r} at row {row} (expected M or F)",
            row=row,
        )

    df["yaw"] = pd.to_numeric(df["yaw"], errors="coerce")
    df["view_bin"] = bin_viewpoints(df["yaw"].to_numpy(dtype=np.float64))

    _check_unique(list(df["image_id"]))
    table = AttributeTable(df.set_index("image_id"))

    if embeddings is not None:
        table = table.align(embeddings)

    logger.info(
        f"Loaded attributes for {len(table)} images of {table.n_identities} identities from {csv_path}"
    )
    return table


def make_attributes(image_ids: Sequence[str], identities: Sequence, genders: Sequence[str],
                    yaws: Sequence[float]) -> AttributeTable:
    """Build a validated table from in-memory columns."""
    df = pd.DataFrame({
        "image_id": [str(i) for i in image_ids],
        "identity": [str(i) for i in identities],
        "gender": [str(g).strip().upper() for g in genders],
        "yaw": np.asarray(yaws, dtype=np.float64),
    })
    bad_gender = ~df["gender"].isin(GENDER_TOKENS)
    if bad_gender.any():
        row = int(np.flatnonzero(bad_gender.to_numpy())[0])
        raise DataError(f"Unknown gender token at row {row}", row=row)
    df["view_bin"] = bin_viewpoints(df["yaw"].to_numpy())
    _check_unique(list(df["image_id"]))
    return AttributeTable(df.set_index("image_id"))


def save_attributes(attrs: AttributeTable, path: PathLike) -> Path:
    """Write the attribute CSV (view bins are derived, not stored)."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    out = attrs.frame[["identity", "gender", "yaw"]].reset_index()
    out.to_csv(file_path, index=False, float_format="%.17g")
    return file_path


__all__: List[str] = [
    'ViewBin', 'bin_viewpoint', 'bin_viewpoints',
    'EmbeddingSet', 'load_embeddings', 'save_embeddings',
    'AttributeTable', 'load_attributes', 'make_attributes', 'save_attributes'
]
