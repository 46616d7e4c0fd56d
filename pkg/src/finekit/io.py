"""Bit-exact file formats: binary feature files, selection files, CSV import.

Feature file layout (little-endian throughout):

    offset  size  field
    0       5     magic "FINEF"
    5       2     version, unsigned 16-bit, currently 1
    7       4     n, number of samples, unsigned 32-bit
    11      4     d, feature dimension, unsigned 32-bit
    15      4     k, number of classes, unsigned 32-bit
    19      2     flags, unsigned 16-bit; bit 0 = true labels present
    21      4nd   features, 32-bit floats, row-major
    .       4n    observed labels, unsigned 32-bit
    .       4n    true labels, unsigned 32-bit, only when flag bit 0 is set

Features are stored as 32-bit floats (all in-memory computation is 64-bit;
this is the only narrowing point). A selection file is a bare sequence of
21-byte records (index u32, fine_score f64, clean_prob f64, clean u8) with
indices running 0..n-1 in order.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import (
    CorruptLabelsError,
    FormatError,
    ParseError,
    TruncatedFileError,
)

MAGIC = b"FINEF"
VERSION = 1
_HEADER = struct.Struct("<5sHIIIH")
HEADER_SIZE = _HEADER.size  # 21
FLAG_TRUE_LABELS = 0x0001
_KNOWN_FLAGS = FLAG_TRUE_LABELS

_SELECTION_DTYPE = np.dtype(
    [("index", "<u4"), ("fine_score", "<f8"), ("clean_prob", "<f8"), ("clean", "u1")]
)
SELECTION_RECORD_SIZE = _SELECTION_DTYPE.itemsize  # 21


def write_features(dataset: Dataset, path) -> None:
    """Serialize a dataset; features narrow to 32-bit floats here."""
    n, d = dataset.features.shape
    flags = FLAG_TRUE_LABELS if dataset.true_labels is not None else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d, dataset.num_classes, flags))
        fh.write(dataset.features.astype("<f4").tobytes(order="C"))
        fh.write(dataset.observed_labels.astype("<u4").tobytes())
        if dataset.true_labels is not None:
            fh.write(dataset.true_labels.astype("<u4").tobytes())


def _checked_file_labels(raw: np.ndarray, k: int, which: str) -> np.ndarray:
    if raw.size and int(raw.max()) >= k:
        raise CorruptLabelsError(
            f"{which} label {int(raw.max())} outside [0, {k})"
        )
    return raw.astype(np.int64)


def read_features(path) -> Dataset:
    """Parse a feature file, validating the header and payload length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"file has {len(blob)} bytes, shorter than the magic")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"bad magic {blob[:len(MAGIC)]!r}")
    if len(blob) < HEADER_SIZE:
        raise TruncatedFileError(
            f"file has {len(blob)} bytes, header needs {HEADER_SIZE}"
        )
    _, version, n, d, k, flags = _HEADER.unpack_from(blob)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if d < 1:
        raise FormatError("d must be >= 1")
    if k < 1:
        raise FormatError("k must be >= 1")
    if flags & ~_KNOWN_FLAGS:
        raise FormatError(f"unknown flag bits 0x{flags & ~_KNOWN_FLAGS:x}")
    has_true = bool(flags & FLAG_TRUE_LABELS)

    expected = HEADER_SIZE + 4 * n * d + 4 * n + (4 * n if has_true else 0)
    if len(blob) < expected:
        raise TruncatedFileError(f"file has {len(blob)} bytes, layout needs {expected}")
    if len(blob) > expected:
        raise FormatError(
            f"file has {len(blob) - expected} trailing bytes beyond the declared payload"
        )

    offset = HEADER_SIZE
    feats = np.frombuffer(blob, dtype="<f4", count=n * d, offset=offset)
    feats = feats.reshape(n, d).astype(np.float64)
    offset += 4 * n * d
    observed = np.frombuffer(blob, dtype="<u4", count=n, offset=offset)
    observed = _checked_file_labels(observed, k, "observed")
    offset += 4 * n
    true_labels = None
    if has_true:
        raw = np.frombuffer(blob, dtype="<u4", count=n, offset=offset)
        true_labels = _checked_file_labels(raw, k, "true")
    return Dataset(
        features=feats,
        observed_labels=observed,
        true_labels=true_labels,
        num_classes=k,
        allow_missing_classes=True,
    )


@dataclass
class SelectionTable:
    """Selection-file contents in column form."""

    fine_scores: np.ndarray
    clean_prob: np.ndarray
    clean_mask: np.ndarray


def write_selection(fine_scores, clean_prob, clean_mask, path) -> None:
    scores = np.asarray(fine_scores, dtype=np.float64)
    probs = np.asarray(clean_prob, dtype=np.float64)
    mask = np.asarray(clean_mask, dtype=bool)
    n = scores.shape[0]
    records = np.empty(n, dtype=_SELECTION_DTYPE)
    records["index"] = np.arange(n, dtype=np.uint32)
    records["fine_score"] = scores
    records["clean_prob"] = probs
    records["clean"] = mask.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(records.tobytes())


def read_selection(path) -> SelectionTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) % SELECTION_RECORD_SIZE != 0:
        raise TruncatedFileError(
            f"selection file length {len(blob)} is not a multiple of "
            f"{SELECTION_RECORD_SIZE}"
        )
    records = np.frombuffer(blob, dtype=_SELECTION_DTYPE)
    n = records.shape[0]
    if not np.array_equal(records["index"], np.arange(n, dtype=np.uint32)):
        raise FormatError("record indices must run 0..n-1 in order")
    clean = records["clean"]
    if clean.size and int(clean.max()) > 1:
        raise FormatError("clean byte must be 0 or 1")
    return SelectionTable(
        fine_scores=records["fine_score"].astype(np.float64),
        clean_prob=records["clean_prob"].astype(np.float64),
        clean_mask=clean.astype(bool),
    )


def _parse_cell(text: str, row_num: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ParseError(f"row {row_num}: non-numeric {col} cell {text!r}") from exc
    if not np.isfinite(value):
        raise ParseError(f"row {row_num}: non-finite {col} cell {text!r}")
    return value


def _parse_label(text: str, row_num: int, col: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ParseError(f"row {row_num}: non-integer {col} cell {text!r}") from exc


def read_csv_features(path, has_true_labels: bool = False) -> Dataset:
    """Parse "f0,...,f{d-1},label[,true_label]" CSV into a Dataset.

    The class count is not stored in CSV, so it is inferred as
    max(all labels) + 1.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file, expected a header row") from None
        tail = ["label", "true_label"] if has_true_labels else ["label"]
        d = len(header) - len(tail)
        if d < 1 or header != [f"f{i}" for i in range(d)] + tail:
            raise FormatError(
                f"bad header {header!r}; expected f0..f{{d-1}},{','.join(tail)}"
            )
        feats = []
        observed = []
        true_labels = []
        for row_num, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(
                    f"row {row_num}: {len(row)} cells, header has {len(header)}"
                )
            feats.append([_parse_cell(c, row_num, f"f{i}") for i, c in enumerate(row[:d])])
            observed.append(_parse_label(row[d], row_num, "label"))
            if has_true_labels:
                true_labels.append(_parse_label(row[d + 1], row_num, "true_label"))

    features = np.asarray(feats, dtype=np.float64).reshape(len(feats), d)
    observed_arr = np.asarray(observed, dtype=np.int64)
    true_arr = np.asarray(true_labels, dtype=np.int64) if has_true_labels else None
    all_labels = [observed_arr] if true_arr is None else [observed_arr, true_arr]
    if observed_arr.size:
        low = min(int(a.min()) for a in all_labels)
        high = max(int(a.max()) for a in all_labels)
        if low < 0:
            raise ParseError("labels must be nonnegative")
        k = high + 1
    else:
        k = 1
    return Dataset(
        features=features,
        observed_labels=observed_arr,
        true_labels=true_arr,
        num_classes=k,
        allow_missing_classes=True,
    )
