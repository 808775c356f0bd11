"""Delayed snapshot extraction and covariance conditioning.

The estimation pipeline per focal point and sound speed: extract a
phase-aligned snapshot across the array, split it into overlapping
subarrays, average the outer products, then forward-backward average and
diagonally load the result.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import ArrayGeometry, FocalPoint, TWO_PI, travel_times
from .cube import BasebandCube
from .interp import sample_rows

STAGE_RAW = "raw"
STAGE_FB = "fb"
STAGE_DL = "dl"

NORM_SNAPSHOTS = "n_sub"           # divide by the snapshot count (conventional)
NORM_SUBARRAY_LENGTH = "length"    # divide by the subarray length


class SnapshotWarning(UserWarning):
    """Raised when focal delays fall outside the recorded data."""


@dataclass(frozen=True)
class SnapshotSet:
    """Overlapping subarray snapshots: shape (n_snapshots, subarray_length)."""

    snapshots: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.snapshots, dtype=complex)
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError("snapshots must be a non-empty 2-D array")
        object.__setattr__(self, "snapshots", s)

    @property
    def n_snapshots(self) -> int:
        return self.snapshots.shape[0]

    @property
    def subarray_length(self) -> int:
        return self.snapshots.shape[1]

    def mean_snapshot(self) -> np.ndarray:
        return self.snapshots.mean(axis=0)


@dataclass(frozen=True)
class HermitianMatrix:
    """Hermitian covariance estimate tagged with its conditioning stage."""

    entries: np.ndarray
    stage: str = STAGE_RAW

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance must be square")
        scale = max(float(np.abs(m).max()), 1.0)
        if float(np.abs(m - m.conj().T).max()) > 1e-12 * scale:
            raise ValueError("matrix is not Hermitian to 1e-12 relative")
        object.__setattr__(self, "entries", m)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def delayed_snapshot(cube: BasebandCube, p: FocalPoint, c: float,
                     geom: ArrayGeometry) -> np.ndarray:
    """Per-sensor baseband samples at the focal round-trip delays.

    Each entry is the band-limited interpolation of sensor n at t(p, c, n),
    rotated by exp(+j*2*pi*carrier*t) to strip the residual carrier phase,
    so a matched echo yields a phase-aligned (all-ones steering) snapshot.
    Entries whose delay leaves the record are zero-filled with a warning.
    """
    t = travel_times(p.x, p.y, c, geom)
    values, valid = _sample_at_times(cube, t)
    if not np.all(valid):
        warnings.warn(f"{int((~valid).sum())} sensor delays outside the record at "
                      f"p=({p.x:g}, {p.y:g}), c={c:g}", SnapshotWarning)
    return values


def _sample_at_times(cube: BasebandCube, t: np.ndarray):
    """Interpolate each sensor row at times t[..., sensor]; carrier-rotated."""
    pos = (t - cube.time_origin) * cube.sample_rate
    values, valid = sample_rows(cube.samples, pos)
    values = values * np.exp(1j * TWO_PI * cube.carrier * t)
    return np.where(valid, values, 0.0), valid


def subarray_snapshots(x: np.ndarray, length: int) -> SnapshotSet:
    """Split a length-N snapshot into N - length + 1 overlapping windows."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("snapshot must be 1-D")
    if not 1 <= length <= x.size:
        raise ValueError(f"subarray length {length} out of range [1, {x.size}]")
    return SnapshotSet(snapshots=sliding_window_view(x, length).copy())


def sample_covariance(s: SnapshotSet, normalization: str = NORM_SNAPSHOTS) -> HermitianMatrix:
    """Average of snapshot outer products.

    normalization picks the divisor: the snapshot count (default) or the
    subarray length.
    """
    if normalization == NORM_SNAPSHOTS:
        divisor = s.n_snapshots
    elif normalization == NORM_SUBARRAY_LENGTH:
        divisor = s.subarray_length
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    x = s.snapshots
    cov = np.einsum("li,lj->ij", x, x.conj()) / divisor
    cov = 0.5 * (cov + cov.conj().T)  # shave off rounding asymmetry
    return HermitianMatrix(entries=cov, stage=STAGE_RAW)


def forward_backward(m: HermitianMatrix) -> HermitianMatrix:
    """Forward-backward averaging: 0.5 * (S + J S^T J) with J the exchange matrix."""
    s = m.entries
    fb = 0.5 * (s + s.T[::-1, ::-1])
    return HermitianMatrix(entries=fb, stage=STAGE_FB)


def diagonal_load(m: HermitianMatrix, eps: float) -> HermitianMatrix:
    """Add eps * trace(S) to the diagonal, guaranteeing invertibility for eps > 0."""
    if eps < 0:
        raise ValueError("loading factor must be >= 0")
    s = m.entries
    loaded = s + eps * np.trace(s).real * np.eye(s.shape[0])
    return HermitianMatrix(entries=loaded, stage=STAGE_DL)
