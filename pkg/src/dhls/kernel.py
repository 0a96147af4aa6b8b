"""Lattice Riesz kernel |d|^-beta and the operator (Tf)_i = sum_{j != i} f_j |i-j|^-beta."""

from __future__ import annotations

import enum
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from .lattice import Field, LatticeBox, ProblemParams


class Backend(enum.Enum):
    DIRECT = "direct"
    FAST = "fast"


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


class Kernel:
    """Tabulated Riesz weights over all differences realizable in ``box``.

    ``weights`` has shape (2*side_k - 1, ...) and ``weights[d + side - 1]``
    holds |d|^-beta, with the zero difference set to 0.
    """

    def __init__(self, box: LatticeBox, beta: float, weights: np.ndarray | None = None):
        self.box = box
        self.dim = box.dim
        self.beta = float(beta)
        half = [n - 1 for n in box.shape]
        self.diff_box = LatticeBox(tuple(-h for h in half), tuple(half))
        if weights is None:
            grids = np.meshgrid(*(np.arange(-h, h + 1) for h in half), indexing="ij")
            dist2 = sum(g.astype(float) ** 2 for g in grids)
            with np.errstate(divide="ignore"):
                weights = dist2 ** (-0.5 * self.beta)
            weights[tuple(half)] = 0.0
        weights = np.asarray(weights, dtype=float)
        if weights.shape != self.diff_box.shape:
            raise ValueError("weight table does not match the difference box")
        weights.setflags(write=False)
        self.weights = weights

    def weight(self, d) -> float:
        d = tuple(np.atleast_1d(d))
        return float(self.weights[tuple(k + n - 1 for k, n in zip(d, self.box.shape))])

    @cached_property
    def dense(self) -> np.ndarray:
        """Full (count, count) matrix K[i, j] = weight(i - j)."""
        pts = self.box.points
        diff = pts[:, None, :] - pts[None, :, :] + (np.array(self.box.shape) - 1)
        return self.weights[tuple(diff[..., k] for k in range(self.dim))]

    @cached_property
    def pad_shape(self) -> tuple[int, ...]:
        return tuple(_next_pow2(2 * n - 1) for n in self.box.shape)

    @cached_property
    def _spectrum(self) -> np.ndarray:
        # circulant embedding: weight(d) sits at d mod P, no overlap since P >= 2*side - 1
        padded = np.zeros(self.pad_shape)
        padded[tuple(slice(0, 2 * n - 1) for n in self.box.shape)] = self.weights
        padded = np.roll(padded, [-(n - 1) for n in self.box.shape],
                         axis=tuple(range(self.dim)))
        return sp_fft.rfftn(padded)

    def __repr__(self):
        return f"Kernel(box={self.box.lo}..{self.box.hi}, beta={self.beta})"


def build_kernel(params: ProblemParams, box: LatticeBox) -> Kernel:
    if box.dim != params.dim:
        raise ValueError(f"box dimension {box.dim} != problem dimension {params.dim}")
    beta = params.beta
    if not (0 < beta <= params.dim):
        raise ValueError(f"kernel exponent must lie in (0, dim], got {beta}")
    return Kernel(box, beta)


def _check_box(kernel: Kernel, f: Field):
    if f.box.shape != kernel.box.shape:
        raise ValueError(f"field box {f.box.lo}..{f.box.hi} does not match kernel box")


def apply_T_direct(kernel: Kernel, f: Field) -> Field:
    """Dense O(M^2) evaluation of T f."""
    _check_box(kernel, f)
    out = kernel.dense @ f.flat
    return Field(f.box, out)


def apply_T_fft(kernel: Kernel, f: Field) -> Field:
    """T f as an acyclic convolution on a zero-padded power-of-two grid."""
    _check_box(kernel, f)
    spec = sp_fft.rfftn(f.values, s=kernel.pad_shape)
    full = sp_fft.irfftn(spec * kernel._spectrum, s=kernel.pad_shape)
    out = full[tuple(slice(0, n) for n in kernel.box.shape)]
    # clip rounding noise; T preserves nonnegativity
    return Field(f.box, np.maximum(out, 0.0))


def apply_T(kernel: Kernel, f: Field, backend: Backend | str = Backend.DIRECT) -> Field:
    backend = Backend(backend)
    if backend is Backend.DIRECT:
        return apply_T_direct(kernel, f)
    return apply_T_fft(kernel, f)


def dhls_value(kernel: Kernel, f: Field, g: Field, backend: Backend | str = Backend.DIRECT) -> float:
    """J(f, g) = sum_{i != j} f_i g_j |i-j|^-beta, evaluated as <f, T g>."""
    _check_box(kernel, f)
    return float(np.dot(f.flat, apply_T(kernel, g, backend).flat))
