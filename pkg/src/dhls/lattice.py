"""Problem parameters, finite lattice boxes and nonnegative fields on them."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

# 'normalized' means |f|_p = 1 to this accuracy
NORMALIZED_TOL = 1e-12


class DegenerateInputError(ValueError):
    """Raised when an input has no mass (zero field, single-point box)."""


class Mode(enum.Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL_BENCHMARK = "critical"
    # any r, s > 1 and 0 <= alpha < dim: only finite-box constants are meaningful
    TRUNCATED = "truncated"


def _gap(dim, r, s, alpha):
    return 1.0 / r + 1.0 / s + (dim - alpha) / dim - 2.0


@dataclass(frozen=True)
class ProblemParams:
    """Exponents of the discrete HLS problem on Z^dim.

    The kernel is |i - j|^-(dim - alpha). In supercritical mode the gap
    1/r + 1/s + (dim - alpha)/dim - 2 must be strictly positive; the
    critical benchmark mode requires it to vanish (to 1e-12) and is the
    only mode that admits alpha = 0. Truncated mode skips the gap condition
    so that subcritical exponents can be used on finite boxes (e.g. the
    r = s = 2 spectral cross-checks).
    """

    dim: int
    r: float
    s: float
    alpha: float
    mode: Mode = Mode.SUPERCRITICAL

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        if not (self.r > 1 and self.s > 1):
            raise ValueError(f"exponents must satisfy r > 1 and s > 1, got r={self.r}, s={self.s}")
        if not (0 <= self.alpha < self.dim):
            raise ValueError(f"alpha must lie in [0, dim), got alpha={self.alpha}")
        g = _gap(self.dim, self.r, self.s, self.alpha)
        if self.mode is Mode.SUPERCRITICAL:
            if g <= 0:
                raise ValueError(f"gap <= 0 in supercritical mode (gap = {g:.6g})")
            if self.alpha == 0:
                raise ValueError("alpha = 0 is admitted only in critical mode")
            if not (0 < self.s * g < 1):
                raise ValueError(f"epsilon = s * gap must lie in (0, 1), got {self.s * g:.6g}")
        elif self.mode is Mode.CRITICAL_BENCHMARK and abs(g) > 1e-12:
            raise ValueError(f"gap != 0 in critical mode (gap = {g:.6g})")

    @property
    def beta(self) -> float:
        """Kernel exponent dim - alpha."""
        return self.dim - self.alpha

    def to_dict(self):
        return {"dim": self.dim, "r": self.r, "s": self.s, "alpha": self.alpha,
                "mode": self.mode.value}


def gap(params: ProblemParams) -> float:
    return _gap(params.dim, params.r, params.s, params.alpha)


def epsilon(params: ProblemParams) -> float:
    """The exponent s * gap used in the concentration estimate.

    Only defined in supercritical mode, where it lies in (0, 1).
    """
    if params.mode is not Mode.SUPERCRITICAL:
        raise ValueError(f"epsilon is only defined in supercritical mode, not {params.mode.value}")
    return params.s * gap(params)


@dataclass(frozen=True)
class LatticeBox:
    """Axis-aligned box {lo <= i <= hi} in Z^dim, enumerated lexicographically."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(int(x) for x in np.atleast_1d(self.lo))
        hi = tuple(int(x) for x in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be nonempty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, dim: int, radius: int) -> "LatticeBox":
        """The l^inf ball [-radius, radius]^dim."""
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        return cls((-radius,) * dim, (radius,) * dim)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "LatticeBox":
        return cls((lo,), (hi,))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def count(self) -> int:
        return int(np.prod(self.shape))

    def contains(self, index: Sequence[int]) -> bool:
        return all(a <= i <= b for a, i, b in zip(self.lo, index, self.hi))

    def offset(self, index: Sequence[int]) -> int:
        """Position of a lattice point in the lexicographic enumeration."""
        if len(index) != self.dim or not self.contains(index):
            raise IndexError(f"{tuple(index)} not in box {self.lo}..{self.hi}")
        return int(np.ravel_multi_index(tuple(i - a for i, a in zip(index, self.lo)), self.shape))

    def index(self, offset: int) -> tuple[int, ...]:
        local = np.unravel_index(offset, self.shape)
        return tuple(int(k) + a for k, a in zip(local, self.lo))

    def indices(self):
        return itertools.product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    @cached_property
    def points(self) -> np.ndarray:
        """(count, dim) integer array of lattice points in enumeration order."""
        grids = np.meshgrid(*(np.arange(a, b + 1) for a, b in zip(self.lo, self.hi)),
                            indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def shifted(self, shift: Sequence[int]) -> "LatticeBox":
        return LatticeBox(tuple(a + d for a, d in zip(self.lo, shift)),
                          tuple(b + d for b, d in zip(self.hi, shift)))

    def union(self, other: "LatticeBox") -> "LatticeBox":
        """Smallest box containing both."""
        return LatticeBox(tuple(map(min, self.lo, other.lo)), tuple(map(max, self.hi, other.hi)))

    def center_slices(self) -> tuple[slice, ...]:
        """Middle point per axis (middle two for even sides)."""
        out = []
        for n in self.shape:
            out.append(slice((n - 1) // 2, n // 2 + 1))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class Field:
    """Nonnegative values on a box, stored as an array of the box's shape."""

    box: LatticeBox
    values: np.ndarray
    norm_exponent: float = 2.0
    normalized: bool = field(default=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.box.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if np.any(v < 0):
            raise ValueError("field values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.normalized:
            nrm = lp_norm(self, self.norm_exponent)
            if abs(nrm - 1.0) > NORMALIZED_TOL:
                raise ValueError(f"field flagged normalized but |f|_p = {nrm!r}")

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def on_box(self, box: LatticeBox) -> "Field":
        """Zero-extend (and restrict) to another box of the same dimension."""
        out = np.zeros(box.shape)
        src, dst = [], []
        for a, b, c, d in zip(self.box.lo, self.box.hi, box.lo, box.hi):
            lo, hi = max(a, c), min(b, d)
            if lo > hi:
                return Field(box, out, self.norm_exponent)
            src.append(slice(lo - a, hi - a + 1))
            dst.append(slice(lo - c, hi - c + 1))
        out[tuple(dst)] = self.values[tuple(src)]
        return Field(box, out, self.norm_exponent)

    def translated(self, shift: Sequence[int]) -> "Field":
        return Field(self.box.shifted(shift), self.values, self.norm_exponent, self.normalized)

    def argmax(self) -> tuple[int, ...]:
        # np.argmax returns the first hit in C order, i.e. the lexicographically smallest index
        return self.box.index(int(np.argmax(self.flat)))

    def max(self) -> float:
        return float(self.values.max())


def lp_norm(f: Field | np.ndarray, p: float) -> float:
    """(sum |v|^p)^(1/p), pairwise summed after scaling by the max entry."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.abs(np.asarray(f.values if isinstance(f, Field) else f, dtype=float)).ravel()
    m = v.max(initial=0.0)
    if m == 0:
        return 0.0
    # numpy's sum over a contiguous array is pairwise
    return float(m * np.sum((v / m) ** p) ** (1.0 / p))


def normalize(values: np.ndarray, p: float) -> np.ndarray:
    nrm = lp_norm(values, p)
    if nrm == 0:
        raise DegenerateInputError("cannot normalize an identically zero field")
    out = np.asarray(values, dtype=float) / nrm
    # one correction pass so that |out|_p == 1 to rounding
    return out / lp_norm(out, p)


def check_embedding(a: Field | np.ndarray, p: float, q: float) -> bool:
    """Whether |a|_q <= |a|_p (+1e-12), which always holds for 1 <= p <= q."""
    if q < p:
        raise ValueError(f"embedding needs p <= q, got p={p}, q={q}")
    return lp_norm(a, q) <= lp_norm(a, p) + 1e-12


def recenter(f: Field, g: Field) -> tuple[Field, Field, tuple[int, ...]]:
    """Translate f and g together so that argmax f lands on the origin.

    The returned fields live on the shifted box, so no values are lost;
    use Field.on_box to compare them on a common box.
    """
    if f.box != g.box:
        raise ValueError("f and g must live on the same box")
    if f.max() <= 0:
        raise DegenerateInputError("cannot recenter an identically zero field")
    shift = tuple(-i for i in f.argmax())
    return f.translated(shift), g.translated(shift), shift
