"""Sparse dataset pipeline: read, normalize, project, code, one-hot expand, write.

Files use the whitespace-separated ``label idx:val ...`` convention of
linear-solver tools, with 1-based feature indices. In memory indices are
0-based.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coding import CodingScheme, Scheme, code_range, code_space_size, encode_values
from .projection import ProjectionStream

log = logging.getLogger(__name__)


class SparseFormatError(ValueError):
    pass


class CodeRangeError(ValueError):
    pass


@dataclass
class SparseDataset:
    labels: list[float]
    rows: list[tuple[np.ndarray, np.ndarray]]
    dim: int

    def __len__(self):
        return len(self.rows)


@dataclass
class EncodedDataset:
    """One-hot coded projections: each row lists the 0-based positions of its ones."""

    labels: list[float]
    rows: list[np.ndarray]
    dim: int
    k: int
    skipped: int = 0
    kept: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def to_csr(self) -> sp.csr_matrix:
        indptr = np.cumsum([0] + [r.size for r in self.rows])
        indices = np.concatenate(self.rows) if self.rows else np.empty(0, dtype=np.int64)
        data = np.ones(indices.size)
        return sp.csr_matrix((data, indices, indptr), shape=(len(self.rows), self.dim))


def _parse_line(line: str, lineno: int):
    parts = line.split()
    try:
        label = float(parts[0])
        idx = np.empty(len(parts) - 1, dtype=np.int64)
        val = np.empty(len(parts) - 1)
        for j, tok in enumerate(parts[1:]):
            i, v = tok.split(":", 1)
            idx[j] = int(i) - 1
            val[j] = float(v)
    except ValueError as exc:
        raise SparseFormatError(f"line {lineno}: {exc}") from None
    if idx.size and idx[0] < 0:
        raise SparseFormatError(f"line {lineno}: feature indices start at 1")
    if np.any(np.diff(idx) <= 0):
        raise SparseFormatError(f"line {lineno}: feature indices must be strictly increasing")
    return label, idx, val


def read_sparse(path, dim: int | None = None) -> SparseDataset:
    """Parse a sparse text file; ``dim`` defaults to the largest index seen."""
    labels, rows = [], []
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            label, idx, val = _parse_line(line, lineno)
            if idx.size:
                max_index = max(max_index, int(idx[-1]) + 1)
            labels.append(label)
            rows.append((idx, val))
    if dim is None:
        dim = max_index
    elif dim < max_index:
        raise SparseFormatError(f"feature index {max_index} exceeds declared dimension {dim}")
    return SparseDataset(labels, rows, dim)


def expand(codes, scheme: CodingScheme) -> np.ndarray:
    """0-based positions of the ones: projection ``j`` with code ``c`` maps to ``j*S + c - c_min``."""
    codes = np.asarray(codes, dtype=np.int64)
    lo, hi = code_range(scheme)
    if codes.size and (codes.min() < lo or codes.max() > hi):
        raise CodeRangeError(f"codes outside [{lo}, {hi}] for {scheme.label}")
    size = code_space_size(scheme)
    return np.arange(codes.size, dtype=np.int64) * size + (codes - lo)


def encode_dataset(data: SparseDataset, scheme: CodingScheme, stream: ProjectionStream) -> EncodedDataset:
    """Normalize, project with one shared matrix, code and one-hot expand every example.

    Zero-norm examples are skipped and counted in ``skipped``; ``kept`` holds
    the input positions of the rows that were encoded.
    """
    if data.dim > stream.dim:
        raise ValueError(f"dataset dimension {data.dim} exceeds projection dimension {stream.dim}")
    kept = [i for i, (_, val) in enumerate(data.rows) if np.any(val != 0)]
    skipped = len(data.rows) - len(kept)
    if skipped:
        log.warning("skipped %d zero-norm example(s)", skipped)

    size = code_space_size(scheme)
    out_dim = size * stream.k
    if not kept:
        return EncodedDataset([], [], out_dim, stream.k, skipped, [])

    used = np.unique(np.concatenate([data.rows[i][0] for i in kept]))
    r = stream.rows(used)
    indptr = np.cumsum([0] + [data.rows[i][0].size for i in kept])
    cols = np.searchsorted(used, np.concatenate([data.rows[i][0] for i in kept]))
    vals = np.concatenate([data.rows[i][1] / np.linalg.norm(data.rows[i][1]) for i in kept])
    x = sp.csr_matrix((vals, cols, indptr), shape=(len(kept), used.size)) @ r

    offsets = stream.offsets(scheme.w) if scheme.kind is Scheme.OFFSET else None
    codes = encode_values(np.asarray(x), scheme, offsets)
    rows = [expand(c, scheme) for c in codes]
    return EncodedDataset([data.labels[i] for i in kept], rows, out_dim, stream.k, skipped, kept)


def _fmt_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_sparse(data, path) -> None:
    """Write a :class:`SparseDataset` or :class:`EncodedDataset`, 1-based indices."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, row in zip(data.labels, data.rows):
            if isinstance(row, tuple):
                idx, val = row
                feats = " ".join(f"{i + 1}:{_fmt_number(v)}" for i, v in zip(idx, val))
            else:
                feats = " ".join(f"{i + 1}:1" for i in row)
            fh.write(f"{_fmt_number(label)} {feats}".rstrip() + "\n")
