"""Receive signal chain: quantization, time-varying gain, quadrature
demodulation with decimation, and matched-filter range compression.

Every stage is a pure per-sensor transformation; the whole chain is
deterministic for a given cube and settings.
"""

from __future__ import annotations

import numpy as np
from scipy import signal as sp_signal

from .core import LfmPulse, TWO_PI
from .cube import BasebandCube, RawDataCube
from .simulate import lfm_pulse_samples

LOWPASS_TAPS = 64

TVG_TWO_WAY = "two_way"
TVG_PI_RANGE = "pi_range"
TVG_VARIANTS = (TVG_TWO_WAY, TVG_PI_RANGE)


def quantize(cube: RawDataCube, bits: int) -> RawDataCube:
    """Uniform mid-tread quantization to 2**bits levels, full scale = max |sample|.

    Codes follow the two's-complement ADC convention (-2**(bits-1) ..
    2**(bits-1) - 1), so zero maps to zero and the quantization error is at
    most half an LSB except at the saturating positive rail, where it reaches
    one LSB. Output is rescaled back to the input's units. An all-zero cube
    is returned unchanged.
    """
    if not 2 <= bits <= 24:
        raise ValueError("bits must be in [2, 24]")
    full_scale = float(np.max(np.abs(cube.samples)))
    if full_scale == 0.0:
        return RawDataCube(samples=cube.samples.copy(), sample_rate=cube.sample_rate)
    step = 2.0 * full_scale / (2 ** bits)
    top = 2 ** (bits - 1) - 1
    codes = np.clip(np.round(cube.samples / step), -(top + 1), top)
    return RawDataCube(samples=codes * step, sample_rate=cube.sample_rate)


def tvg(cube: RawDataCube, c: float, variant: str = TVG_TWO_WAY,
        t_min: float = 0.0) -> RawDataCube:
    """Time-varying gain compensating spherical spreading loss.

    Sample at time t is multiplied by 10**(G(t)/20) with G(t) = 20*log10(r):
    two_way uses r = c*t/2, pi_range uses r = pi*t*c. Times below t_min
    (typically one pulse duration) reuse the gain at t_min, avoiding the
    log singularity at t = 0.
    """
    if c <= 0:
        raise ValueError("propagation speed must be > 0")
    if variant not in TVG_VARIANTS:
        raise ValueError(f"unknown TVG variant {variant!r}")
    t = np.arange(cube.n_samples) / cube.sample_rate
    t_floor = max(t_min, 1.0 / cube.sample_rate)
    t = np.maximum(t, t_floor)
    r = 0.5 * c * t if variant == TVG_TWO_WAY else np.pi * t * c
    return RawDataCube(samples=cube.samples * r, sample_rate=cube.sample_rate)


def _lowpass_taps(fs: float, carrier: float, decim: int) -> np.ndarray:
    """Hamming-windowed sinc low-pass for the demodulator.

    Cutoff is the anti-alias bound fs/(2*decim), tightened to the carrier
    when that is lower so the 2*carrier mixing image always lands in the
    stop band.
    """
    cutoff = min(fs / (2.0 * decim), carrier)
    n = np.arange(LOWPASS_TAPS)
    center = (LOWPASS_TAPS - 1) / 2.0
    h = np.sinc(2.0 * cutoff / fs * (n - center)) * np.hamming(LOWPASS_TAPS)
    return h / h.sum()


def demodulate(cube: RawDataCube, carrier: float, decim: int) -> BasebandCube:
    """Quadrature demodulation to complex baseband with decimation.

    Mixes with 2*exp(-j*2*pi*carrier*t), low-pass filters (linear-phase FIR,
    group delay compensated), and keeps every decim-th sample. A unit
    carrier tone maps to baseband magnitude 1 in steady state.
    """
    if decim < 1:
        raise ValueError("decimation must be >= 1")
    fs = cube.sample_rate
    if not 0 < carrier < fs / 2:
        raise ValueError("carrier must lie in (0, sample_rate/2)")
    if cube.n_samples < LOWPASS_TAPS:
        raise ValueError(f"record shorter than the {LOWPASS_TAPS}-tap low-pass filter")
    samples, t0 = _demodulate_samples(cube.samples, fs, carrier, decim)
    return BasebandCube(samples=samples, sample_rate=fs / decim, carrier=carrier,
                        decimation=decim, time_origin=t0)


def _demodulate_samples(x: np.ndarray, fs: float, carrier: float, decim: int):
    """Demodulate rows of x; returns (baseband rows, time origin in seconds).

    The filter's 31.5-sample group delay is compensated by a 32-sample shift;
    the residual half raw sample is reported through the time origin.
    """
    x = np.atleast_2d(x)
    n = x.shape[1]
    t = np.arange(n) / fs
    mixed = x * (2.0 * np.exp(-1j * TWO_PI * carrier * t))
    taps = _lowpass_taps(fs, carrier, decim)
    full = sp_signal.fftconvolve(mixed, taps[None, :], mode="full", axes=1)
    shift = LOWPASS_TAPS // 2
    compensated = full[:, shift:shift + n]
    t0 = (shift - (LOWPASS_TAPS - 1) / 2.0) / fs
    return compensated[:, ::decim], t0


def baseband_replica(pulse: LfmPulse, fs: float, carrier: float,
                     decim: int) -> BasebandCube:
    """The transmit pulse pushed through the same demodulation as the data.

    The pulse is zero-padded so the filter transient is fully captured; the
    replica's sample 0 corresponds to the pulse leading edge at t = 0.
    """
    wave = lfm_pulse_samples(pulse, fs)
    padded = np.zeros(wave.size + 2 * LOWPASS_TAPS)
    padded[:wave.size] = wave
    samples, t0 = _demodulate_samples(padded, fs, carrier, decim)
    return BasebandCube(samples=samples, sample_rate=fs / decim, carrier=carrier,
                        decimation=decim, time_origin=t0)


def matched_filter(cube: BasebandCube, pulse: LfmPulse) -> BasebandCube:
    """Range compression by correlation with the baseband pulse replica.

    The replica is demodulated and decimated exactly like the data. The
    output time axis is aligned so an echo whose leading edge arrives at
    delay tau peaks at sample round((tau - time_origin) * sample_rate).
    """
    replica = baseband_replica(pulse, cube.raw_sample_rate, cube.carrier,
                               cube.decimation)
    r = replica.samples[0]
    if r.size > cube.n_samples:
        raise ValueError("matched-filter replica is longer than the data record")
    kernel = np.conj(r[::-1])
    full = sp_signal.fftconvolve(cube.samples, kernel[None, :], mode="full", axes=1)
    out = full[:, r.size - 1:r.size - 1 + cube.n_samples]
    return BasebandCube(samples=out, sample_rate=cube.sample_rate,
                        carrier=cube.carrier, decimation=cube.decimation,
                        time_origin=cube.time_origin - replica.time_origin)
