"""Seeded randomness extraction sized by a certified entropy rate.

The certified bits per symbol k fix how much nearly uniform output a
block of N symbols supports: a Toeplitz hash over GF(2) with

    l = floor(N k - 2 log2(1/epsilon))

output bits leaves the result within trace distance epsilon of uniform
conditioned on the quantum side information, for any input distribution
meeting the entropy bound.  The hash family is two-universal; the seed
is reusable public randomness of length (input bits) + l - 1.

Bit vectors are numpy uint8 arrays of 0/1 values.  Symbols unpack to
bits least significant first.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .detection import SymbolStream

__all__ = [
    "ExtractorError",
    "ExtractorSpec",
    "draw_seed",
    "extract",
    "hash_bits",
    "output_length",
    "read_bit_file",
    "symbol_bits",
    "toeplitz_extract",
    "write_bit_file",
]

_BIT_MAGIC = b"PDQRNGBT"
_BIT_VERSION = 1


class ExtractorError(ValueError):
    """Raised for inconsistent extraction parameters or files."""


def output_length(
    n_symbols: int, entropy_bits_per_symbol: float, epsilon: float
) -> int:
    """Largest safe output size for a block at the given failure bound."""
    if n_symbols < 1:
        raise ExtractorError("need at least one symbol")
    if not 0.0 < epsilon < 1.0:
        raise ExtractorError("epsilon must lie in (0, 1)")
    if entropy_bits_per_symbol < 0.0:
        raise ExtractorError("entropy rate must be nonnegative")
    budget = n_symbols * entropy_bits_per_symbol - 2.0 * math.log2(1.0 / epsilon)
    return max(0, math.floor(budget))


@dataclass(frozen=True)
class ExtractorSpec:
    """Block geometry of one extraction run."""

    n_symbols: int
    bits_per_symbol: int
    entropy_bits_per_symbol: float
    epsilon: float

    def __post_init__(self) -> None:
        if not 1 <= self.bits_per_symbol <= 8:
            raise ExtractorError("bits per symbol must lie in 1..8")
        if self.entropy_bits_per_symbol > self.bits_per_symbol:
            raise ExtractorError("entropy rate cannot exceed the symbol width")
        # delegates the remaining range checks
        output_length(self.n_symbols, self.entropy_bits_per_symbol, self.epsilon)

    @property
    def input_bits(self) -> int:
        return self.n_symbols * self.bits_per_symbol

    @property
    def output_bits(self) -> int:
        return output_length(
            self.n_symbols, self.entropy_bits_per_symbol, self.epsilon
        )

    @property
    def seed_bits(self) -> int:
        length = self.output_bits
        return self.input_bits + length - 1 if length else 0


def symbol_bits(stream: SymbolStream) -> np.ndarray:
    """Unpack a symbol stream to its raw bit sequence."""
    unpacked = np.unpackbits(
        stream.symbols.reshape(-1, 1), axis=1, bitorder="little"
    )
    return unpacked[:, : stream.bits].reshape(-1)


def draw_seed(n_bits: int, seed: int) -> np.ndarray:
    """Deterministic stand-in for the stored public extractor seed."""
    if n_bits < 0:
        raise ExtractorError("seed length must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)


def _as_bits(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 1 or not np.issubdtype(arr.dtype, np.integer):
        raise ExtractorError(f"{name} must be a 1-d integer bit array")
    if arr.size and int(arr.max(initial=0)) > 1:
        raise ExtractorError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


def toeplitz_extract(
    input_bits: np.ndarray, seed_bits: np.ndarray, n_out: int
) -> np.ndarray:
    """Multiply by the seed's Toeplitz matrix over GF(2).

    Row j of the matrix reads the seed window s[j + n_in - 1], ...,
    s[j], so the product is a slice of the carryless convolution of the
    input with the seed.  The convolution runs in floating point over
    the reals and reduces mod 2 afterwards; integer counts this size are
    far inside the exactly representable range, and the distance of the
    raw transform output from the nearest integers is checked so silent
    rounding damage cannot pass.
    """
    x = _as_bits(input_bits, "input")
    s = _as_bits(seed_bits, "seed")
    if n_out < 0:
        raise ExtractorError("output length must be nonnegative")
    if n_out == 0:
        return np.zeros(0, dtype=np.uint8)
    if x.size == 0:
        raise ExtractorError("input must not be empty")
    if s.size != x.size + n_out - 1:
        raise ExtractorError(
            f"seed must hold {x.size + n_out - 1} bits, got {s.size}"
        )
    full = x.size + s.size - 1
    length = 1 << max(1, (full - 1).bit_length())
    spectrum = np.fft.rfft(x, length) * np.fft.rfft(s, length)
    conv = np.fft.irfft(spectrum, length)[: full]
    window = conv[x.size - 1 : x.size - 1 + n_out]
    rounded = np.rint(window)
    drift = float(np.abs(window - rounded).max(initial=0.0))
    if drift > 0.25:
        raise RuntimeError(f"convolution rounding margin exhausted ({drift:.3f})")
    return (rounded.astype(np.int64) & 1).astype(np.uint8)


def extract(
    stream: SymbolStream, spec: ExtractorSpec, seed_bits: np.ndarray
) -> np.ndarray:
    """Hash a symbol stream down to its certified entropy content."""
    if stream.bits != spec.bits_per_symbol:
        raise ExtractorError("stream and spec disagree on symbol width")
    if stream.count != spec.n_symbols:
        raise ExtractorError(
            f"spec covers {spec.n_symbols} symbols, stream has {stream.count}"
        )
    return toeplitz_extract(symbol_bits(stream), seed_bits, spec.output_bits)


def hash_bits(bits: np.ndarray) -> str:
    """Content hash of a bit vector (length plus packed payload)."""
    bits = _as_bits(bits, "bits")
    digest = hashlib.sha256()
    digest.update(struct.pack("<Q", bits.size))
    digest.update(np.packbits(bits).tobytes())
    return digest.hexdigest()


def write_bit_file(path, bits: np.ndarray) -> None:
    """Write bits packed eight per byte under a small sized header."""
    bits = _as_bits(bits, "bits")
    with open(path, "wb") as handle:
        handle.write(_BIT_MAGIC)
        handle.write(struct.pack("<HQ", _BIT_VERSION, bits.size))
        handle.write(np.packbits(bits).tobytes())


def read_bit_file(path) -> np.ndarray:
    with open(path, "rb") as handle:
        magic = handle.read(8)
        if magic != _BIT_MAGIC:
            raise ExtractorError(f"not a bit file: magic {magic!r}")
        version, n_bits = struct.unpack("<HQ", handle.read(10))
        if version != _BIT_VERSION:
            raise ExtractorError(f"unsupported bit file version {version}")
        payload = handle.read()
    if len(payload) != (n_bits + 7) // 8:
        raise ExtractorError("bit file payload truncated")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:n_bits]
    return bits.astype(np.uint8)
