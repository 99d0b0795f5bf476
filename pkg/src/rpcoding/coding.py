"""Coding functions that map projected values to small integer codes.

All coders are vectorized: they accept scalars or arrays and return
``int64`` codes of the same shape. Bin edges are left-closed and
right-open, so a value of exactly 0 lands in the non-negative bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

DEFAULT_CUTOFF = 6.0


class Scheme(str, Enum):
    UNIFORM = "uniform"
    OFFSET = "offset"
    TWO_BIT = "twobit"
    SIGN = "sign"


@dataclass(frozen=True)
class CodingScheme:
    """A coding scheme together with its bin width and cutoff.

    ``w`` is ignored (and normalized to ``None``) for the sign scheme. For
    the two-bit scheme ``w = 0`` is allowed and degenerates to signs.
    """

    kind: Scheme
    w: float | None = None
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        kind = Scheme(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Scheme.SIGN:
            object.__setattr__(self, "w", None)
        else:
            if self.w is None:
                raise ValueError(f"scheme {kind.value!r} needs a bin width w")
            w = float(self.w)
            if not math.isfinite(w) or w < 0 or (w == 0 and kind is not Scheme.TWO_BIT):
                raise ValueError(f"invalid bin width w={self.w!r}")
            object.__setattr__(self, "w", w)
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        object.__setattr__(self, "cutoff", float(self.cutoff))

    @classmethod
    def uniform(cls, w, cutoff=DEFAULT_CUTOFF):
        return cls(Scheme.UNIFORM, w, cutoff)

    @classmethod
    def offset(cls, w, cutoff=DEFAULT_CUTOFF):
        return cls(Scheme.OFFSET, w, cutoff)

    @classmethod
    def two_bit(cls, w):
        return cls(Scheme.TWO_BIT, w)

    @classmethod
    def sign(cls):
        return cls(Scheme.SIGN)

    @property
    def label(self) -> str:
        if self.w is None:
            return self.kind.value
        return f"{self.kind.value}(w={self.w:g})"


def _as_codes(v):
    out = np.asarray(v, dtype=np.int64)
    return out if out.ndim else np.int64(out)


def _bins_per_side(w, cutoff):
    return math.ceil(cutoff / w)


def code_uniform(x, w: float, cutoff: float | None = DEFAULT_CUTOFF):
    """``floor(x / w)``, clamped to ``[-ceil(C/w), ceil(C/w) - 1]`` when a cutoff is set."""
    if not w > 0:
        raise ValueError("w must be positive")
    codes = np.floor(np.asarray(x, dtype=float) / w)
    if cutoff is not None:
        m = _bins_per_side(w, cutoff)
        codes = np.clip(codes, -m, m - 1)
    return _as_codes(codes)


def code_offset(x, w: float, q, cutoff: float | None = DEFAULT_CUTOFF):
    """``floor((x + q) / w)`` with offsets ``q`` in ``[0, w)``.

    The cutoff clamps ``x`` to ``[-C, C)`` before the shift, so codes lie in
    ``[-ceil(C/w), ceil(C/w)]``. Clamping in code space instead would merge
    neighbouring windows whenever ``q`` pushes a value over the last edge.
    """
    if not w > 0:
        raise ValueError("w must be positive")
    q = np.asarray(q, dtype=float)
    if np.any(q < 0) or np.any(q >= w):
        raise ValueError("offset q must lie in [0, w)")
    x = np.asarray(x, dtype=float)
    if cutoff is not None:
        x = np.clip(x, -cutoff, np.nextafter(cutoff, -np.inf))
    codes = np.floor((x + q) / w)
    if cutoff is not None:
        m = _bins_per_side(w, cutoff)
        codes = np.clip(codes, -m, m)
    return _as_codes(codes)


def code_two_bit(x, w: float):
    """Regions ``(-inf, -w), [-w, 0), [0, w), [w, inf)`` map to 0, 1, 2, 3."""
    if w < 0:
        raise ValueError("w must be non-negative")
    edges = np.array([-w, 0.0, w])
    return _as_codes(np.searchsorted(edges, np.asarray(x, dtype=float), side="right"))


def code_sign(x):
    return _as_codes(np.asarray(x, dtype=float) >= 0)


def code_range(scheme: CodingScheme) -> tuple[int, int]:
    """Smallest and largest code the scheme can emit (inclusive)."""
    if scheme.kind is Scheme.SIGN:
        return 0, 1
    if scheme.kind is Scheme.TWO_BIT:
        return 0, 3
    m = _bins_per_side(scheme.w, scheme.cutoff)
    if scheme.kind is Scheme.OFFSET:
        return -m, m
    return -m, m - 1


def code_space_size(scheme: CodingScheme) -> int:
    lo, hi = code_range(scheme)
    return hi - lo + 1


def encode_values(x, scheme: CodingScheme, offsets=None):
    """Code an array of projected values under ``scheme``.

    For the offset scheme ``offsets`` must broadcast against ``x`` (one
    offset per projection index, shared by every vector).
    """
    if scheme.kind is Scheme.UNIFORM:
        return code_uniform(x, scheme.w, scheme.cutoff)
    if scheme.kind is Scheme.OFFSET:
        if offsets is None:
            raise ValueError("the offset scheme needs per-projection offsets")
        return code_offset(x, scheme.w, offsets, scheme.cutoff)
    if scheme.kind is Scheme.TWO_BIT:
        return code_two_bit(x, scheme.w)
    return code_sign(x)
