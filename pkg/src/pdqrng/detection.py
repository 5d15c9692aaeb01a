"""Detection chain: finite-bandwidth photodetection and digitization.

The detector does not resolve pulses perfectly; its output is a causal
convolution of the pulse powers with an impulse response G,

    V_i = sum_j G_j p_{i-j} + V_el,

where V_el is optional electronic noise.  The digitizer then maps V to a
b-bit code.  An ideal digitizer uses the uniform staircase floor(V 2^b);
real converters misplace transition levels (integral nonlinearity) and add
bounded jitter, so a given code can be produced by inputs outside its ideal
bin.  Out-of-range inputs clip to the end codes.

Powers, detector output and thresholds are all in full-scale units [0, 1).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

STREAM_MAGIC = b"PDQRNGSY"
STREAM_VERSION = 1
_STREAM_HEADER = "<8sHBBQ"

ORIGIN_CODES = {"interference": 0, "short-arm-only": 1, "long-arm-only": 2}
_ORIGIN_NAMES = {v: k for k, v in ORIGIN_CODES.items()}


class DetectionError(ValueError):
    """Raised for inadmissible detection-chain parameters or files."""


@dataclass(frozen=True)
class ImpulseResponse:
    """Causal detector impulse response, taps G_0, G_1, ...

    The leading tap is the prompt response; later taps describe hangover
    from earlier pulses.  G_0 must dominate and be positive.
    """

    taps: np.ndarray

    def __post_init__(self) -> None:
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float))
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1 or taps.size == 0 or not np.all(np.isfinite(taps)):
            raise DetectionError("taps must be a finite 1-d array")
        if taps[0] <= 0.0:
            raise DetectionError("leading tap must be positive")
        if taps.size > 1 and np.max(np.abs(taps[1:])) >= taps[0]:
            raise DetectionError("leading tap must dominate the tail")

    def normalized(self) -> "ImpulseResponse":
        """Same shape with unit prompt gain."""
        return ImpulseResponse(self.taps / self.taps[0])


def convolve_train(
    powers: np.ndarray,
    response: ImpulseResponse,
    electronic_noise_rms: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """Detector output for a sequence of pulse powers.

    Causal convolution with zero prehistory: the first len(taps) - 1
    samples see a truncated tail.  Electronic noise, when enabled, is
    additive white Gaussian with the given rms.
    """
    powers = np.asarray(powers, dtype=float)
    out = np.convolve(powers, response.taps)[: powers.size]
    if electronic_noise_rms < 0.0:
        raise DetectionError("electronic_noise_rms must be nonnegative")
    if electronic_noise_rms > 0.0:
        rng = np.random.Generator(np.random.PCG64(seed))
        out = out + rng.normal(0.0, electronic_noise_rms, size=out.size)
    return out


@dataclass(frozen=True)
class DigitizerErrorModel:
    """b-bit digitizer with misplaced transition levels and bounded jitter.

    thresholds holds the 2^b - 1 interior transition levels in full scale,
    strictly increasing.  An input v is compared against the levels after
    adding a uniform jitter draw from [-jitter, +jitter], so code d can be
    produced exactly for inputs in

        [t_{d-1} - jitter, t_d + jitter)

    (with t_{-1} = -inf and t_{2^b - 1} = +inf for the clipping end codes).
    Those are the declared ranges; by construction the digitizer never
    emits d outside them, and every ideal bin intersects its declared
    range.
    """

    bits: int
    thresholds: np.ndarray
    jitter: float = 0.0

    def __post_init__(self) -> None:
        if not 1 <= self.bits <= 8:
            raise DetectionError("bits must lie in 1..8")
        t = np.asarray(self.thresholds, dtype=float)
        object.__setattr__(self, "thresholds", t)
        n = 1 << self.bits
        if t.shape != (n - 1,):
            raise DetectionError(f"expected {n - 1} thresholds, got {t.shape}")
        if np.any(np.diff(t) <= 0.0):
            raise DetectionError("thresholds must be strictly increasing")
        if self.jitter < 0.0:
            raise DetectionError("jitter must be nonnegative")
        # every ideal bin [d, d+1)/2^b must intersect the declared range
        lo, hi = self.declared_ranges()
        ideal_lo = np.arange(n) / n
        ideal_hi = np.arange(1, n + 1) / n
        if np.any(lo >= ideal_hi) or np.any(hi <= ideal_lo):
            raise DetectionError("a code's declared range misses its ideal bin")

    def declared_ranges(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-code input ranges (v_min, v_max) that can produce each code."""
        n = 1 << self.bits
        lo = np.empty(n)
        hi = np.empty(n)
        lo[0] = -np.inf
        lo[1:] = self.thresholds - self.jitter
        hi[-1] = np.inf
        hi[:-1] = self.thresholds + self.jitter
        return lo, hi


def ideal_thresholds(bits: int) -> np.ndarray:
    n = 1 << bits
    return np.arange(1, n) / n


def default_error_model(bits: int = 8) -> DigitizerErrorModel:
    """Synthetic 8-bit-flavored error model used throughout the demos.

    Transition-level displacement in code units combines a slow cubic
    integral-nonlinearity curve, a period-2 alternation and a period-16
    ripple; bounded jitter is added on top.  Amplitudes are tuned so a
    full-scale calibration ramp sees an rms code error near 0.8 codes.
    """
    n = 1 << bits
    k = np.arange(1, n)
    u = k / n
    inl = 2.1 * np.sin(np.pi * u) * (u - 0.45)
    period2 = 0.30 * np.where(k % 2 == 0, 1.0, -1.0)
    period16 = 0.66 * np.sin(2.0 * np.pi * k / 16.0)
    offsets = inl + period2 + period16
    thresholds = (k + offsets) / n
    return DigitizerErrorModel(bits=bits, thresholds=thresholds, jitter=0.50 / n)


@dataclass
class SymbolStream:
    """Digitized output symbols with their provenance.

    origin names the optical configuration that produced the stream:
    interference (both arms), short-arm-only or long-arm-only.
    n_clipped counts inputs outside [0, 1) that were clamped to end codes.
    """

    bits: int
    origin: str
    symbols: np.ndarray
    n_clipped: int = 0

    def __post_init__(self) -> None:
        if self.origin not in ORIGIN_CODES:
            raise DetectionError(f"unknown origin {self.origin!r}")
        if not 1 <= self.bits <= 8:
            raise DetectionError("bits must lie in 1..8")
        sym = np.asarray(self.symbols, dtype=np.uint8)
        self.symbols = sym
        if sym.size and int(sym.max()) >= (1 << self.bits):
            raise DetectionError("symbol exceeds the declared bit depth")

    @property
    def count(self) -> int:
        return int(self.symbols.size)

    def counts(self) -> np.ndarray:
        return np.bincount(self.symbols, minlength=1 << self.bits)

    def frequencies(self) -> np.ndarray:
        if self.count == 0:
            raise DetectionError("empty stream has no frequencies")
        return self.counts() / self.count

    def coarsen(self, bits: int) -> "SymbolStream":
        """Re-bin to a lower depth by dropping least significant bits.

        Equivalent to digitizing the same inputs with 2^bits uniform bins,
        since the coarse ideal bins are unions of fine ones.
        """
        if bits > self.bits:
            raise DetectionError("can only coarsen to fewer bits")
        shift = self.bits - bits
        return SymbolStream(
            bits=bits,
            origin=self.origin,
            symbols=(self.symbols >> shift).astype(np.uint8),
            n_clipped=self.n_clipped,
        )


def digitize(
    values: np.ndarray,
    bits: int | None = None,
    mode: str = "ideal",
    model: DigitizerErrorModel | None = None,
    origin: str = "interference",
    seed: int = 0,
) -> SymbolStream:
    """Digitize detector output to a symbol stream.

    mode "ideal" applies the uniform staircase floor(v 2^bits); mode
    "injected-errors" draws jitter and compares against the model's
    displaced transition levels, so errors are correlated with the input
    rather than additive noise.  Inputs outside [0, 1) clip to the end
    codes and are tallied in n_clipped.
    """
    values = np.asarray(values, dtype=float)
    if mode == "ideal":
        if bits is None:
            if model is None:
                raise DetectionError("ideal mode needs bits or a model")
            bits = model.bits
        n = 1 << bits
        codes = np.floor(values * n).astype(np.int64)
        clipped = int(np.count_nonzero((values < 0.0) | (values >= 1.0)))
        codes = np.clip(codes, 0, n - 1)
    elif mode == "injected-errors":
        if model is None:
            raise DetectionError("injected-errors mode needs an error model")
        if bits is not None and bits != model.bits:
            raise DetectionError("bits disagrees with the error model")
        bits = model.bits
        probe = values
        if model.jitter > 0.0:
            rng = np.random.Generator(np.random.PCG64(seed))
            probe = values + rng.uniform(-model.jitter, model.jitter, size=values.size)
        codes = np.searchsorted(model.thresholds, probe, side="right")
        clipped = int(np.count_nonzero((values < 0.0) | (values >= 1.0)))
    else:
        raise DetectionError(f"unknown digitizer mode {mode!r}")
    return SymbolStream(
        bits=bits, origin=origin, symbols=codes.astype(np.uint8), n_clipped=clipped
    )


def write_symbol_stream(path, stream: SymbolStream) -> None:
    """Write a symbol stream: 20-byte header then one byte per symbol.

    Header fields, little endian: magic "PDQRNGSY", u16 version, u8 bits,
    u8 origin code, u64 count.
    """
    header = struct.pack(
        _STREAM_HEADER,
        STREAM_MAGIC,
        STREAM_VERSION,
        stream.bits,
        ORIGIN_CODES[stream.origin],
        stream.count,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(stream.symbols.tobytes())


def read_symbol_stream(path) -> SymbolStream:
    size = struct.calcsize(_STREAM_HEADER)
    with open(path, "rb") as fh:
        header = fh.read(size)
        if len(header) < size:
            raise DetectionError("truncated symbol-stream header")
        magic, version, bits, origin_code, count = struct.unpack(_STREAM_HEADER, header)
        if magic != STREAM_MAGIC:
            raise DetectionError(f"bad symbol-stream magic {magic!r}")
        if version != STREAM_VERSION:
            raise DetectionError(f"unsupported symbol-stream version {version}")
        if origin_code not in _ORIGIN_NAMES:
            raise DetectionError(f"unknown origin code {origin_code}")
        payload = fh.read(count)
    if len(payload) != count:
        raise DetectionError("truncated symbol-stream payload")
    return SymbolStream(
        bits=bits,
        origin=_ORIGIN_NAMES[origin_code],
        symbols=np.frombuffer(payload, dtype=np.uint8).copy(),
    )
