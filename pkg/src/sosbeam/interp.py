"""Windowed-sinc fractional-delay interpolation.

Shared by the simulator (sub-sample echo placement) and the beamformers
(delayed snapshot extraction). 8 taps, Hann-windowed, exact at integer
offsets so integer delays reproduce samples bit-for-bit.
"""

from __future__ import annotations

import numpy as np

TAPS = 8
_HALF = TAPS // 2
_OFFSETS = np.arange(-_HALF + 1, _HALF + 1)  # -3 .. +4


_SIGN = (-1.0) ** _OFFSETS
_COS_M = np.cos(np.pi * _OFFSETS / _HALF)
_SIN_M = np.sin(np.pi * _OFFSETS / _HALF)


def delay_kernel(frac) -> np.ndarray:
    """Interpolation taps for fractional offsets frac in [0, 1).

    Returns shape frac.shape + (TAPS,); convolving a sequence with the taps
    evaluates it at (integer index + frac). Taps are normalized to unit sum
    so constant signals pass through unchanged.

    Uses sin(pi*(m - f)) = -(-1)^m sin(pi*f) and the cosine addition rule so
    only two trig evaluations per offset are needed instead of two per tap.
    """
    frac = np.asarray(frac, dtype=float)[..., None]
    u = _OFFSETS - frac
    # Hann window over the 8-tap span
    w = 0.5 + 0.5 * (_COS_M * np.cos(np.pi * frac / _HALF)
                     + _SIN_M * np.sin(np.pi * frac / _HALF))
    w[np.abs(u) >= _HALF] = 0.0
    sin_pf = np.sin(np.pi * frac)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -_SIGN * sin_pf / (np.pi * u)
    h = np.where(u == 0.0, 1.0, s) * w
    return h / h.sum(axis=-1, keepdims=True)


def sample_rows(rows: np.ndarray, pos: np.ndarray):
    """Band-limited sampling of each row of `rows` at fractional positions.

    Args:
        rows: (n_rows, m) array, real or complex.
        pos: (..., n_rows) fractional sample positions, one per row.

    Returns:
        (values, valid): values has pos.shape, zero where the interpolation
        stencil would leave [0, m); valid is the matching boolean mask.
    """
    n_rows, m = rows.shape
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    h = delay_kernel(frac)
    lo = base - (_HALF - 1)
    valid = (lo >= 0) & (base + _HALF <= m - 1)
    lo_safe = np.clip(lo, 0, max(m - TAPS, 0))
    row_idx = np.arange(n_rows)
    idx = lo_safe[..., None] + np.arange(TAPS)
    gathered = rows[row_idx[..., None], idx]
    values = np.einsum("...t,...t->...", gathered, h.astype(rows.dtype, copy=False))
    values = np.where(valid, values, 0.0)
    return values, valid


def place_fractional(out: np.ndarray, waveform: np.ndarray, position: float,
                     amplitude: float) -> bool:
    """Add amplitude * waveform delayed by `position` samples into `out`.

    The waveform's first sample lands at fractional index `position`. Returns
    False (and writes nothing) when any part of the shifted waveform would
    fall outside `out`.
    """
    base = int(np.floor(position))
    frac = position - base
    shifted = np.convolve(waveform, delay_kernel(frac))
    start = base - (_HALF - 1)
    stop = start + shifted.size
    if start < 0 or stop > out.size:
        return False
    out[start:stop] += amplitude * shifted
    return True
