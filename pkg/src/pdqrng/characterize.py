"""Characterization of the detection chain from calibration and stream data.

Three measured ingredients feed the entropy certification:

* Per-code digitization limits.  A calibration sweep records which known
  input values produce each code; the per-code observed minima and maxima
  (the "dig" limits) bound where the real transition levels sit, including
  nonlinearity and jitter.
* The detector impulse response, recovered from the autocorrelation of the
  digitized output.  Correlations between successive samples are produced
  by the convolution tail, so the tap sequence can be reconstructed
  perturbatively from the measured autocorrelation when the prompt tap
  dominates.
* Hangover bounds.  Once the tail taps are known, the contribution of
  earlier pulses to the current sample is bracketed by evaluating the tail
  convolution against the per-symbol power intervals and taking the extreme
  endpoints; the resulting [zeta_minus, zeta_plus] widen the digitization
  limits into the "d+h" limits used by the certifier.

Powers and limits are full-scale [0, 1) floats everywhere in this module's
API.  The calibration file interface uses code units (value 1.0 equals one
least significant bit); conversion happens exactly once, when a CodeLimits
is built from calibration pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .detection import DigitizerErrorModel, ImpulseResponse, SymbolStream, digitize


class CharacterizationError(ValueError):
    """Raised when calibration data cannot support the requested limits."""


class NonperturbativeInputError(ValueError):
    """Raised when an autocorrelation violates the prompt-tap dominance guard."""


@dataclass(frozen=True)
class CodeLimits:
    """Per-code digitization limits measured by calibration.

    dig_lo/dig_hi are the observed minimum and maximum full-scale inputs
    that produced each code; counts are the per-code calibration tallies.
    min_samples is the per-code requirement the calibration was held to,
    and sets the coverage confidence 1 - 1/min_samples per event.

    For certification semantics the outer edges of the end codes are
    infinite in every limit variant, because out-of-range inputs clip to
    the end codes: the observed end-code extremes are calibration facts,
    not bounds on what an adversary can inject.
    """

    bits: int
    dig_lo: np.ndarray
    dig_hi: np.ndarray
    counts: np.ndarray
    min_samples: int

    def __post_init__(self) -> None:
        n = 1 << self.bits
        for name in ("dig_lo", "dig_hi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (n,):
                raise CharacterizationError(f"{name} must have one entry per code")
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))
        if np.any(self.dig_lo > self.dig_hi):
            raise CharacterizationError("dig_lo must not exceed dig_hi")
        # calibration must have probed the full scale: every interior ideal
        # transition lies inside the overall observation support
        support_lo, support_hi = float(self.dig_lo.min()), float(self.dig_hi.max())
        edges = np.arange(1, n) / n
        if edges.size and (edges[0] < support_lo or edges[-1] > support_hi):
            raise CharacterizationError("calibration does not span the full scale")

    @property
    def confidence(self) -> float:
        return 1.0 - 1.0 / self.min_samples

    def ideal_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Uniform staircase bin edges, end bins open to +-infinity."""
        n = 1 << self.bits
        lo = np.arange(n) / n
        hi = np.arange(1, n + 1) / n
        lo[0] = -np.inf
        hi[-1] = np.inf
        return lo, hi

    def scaled_edges(
        self, eta: float, zeta: tuple[float, float] = (0.0, 0.0)
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-code bin edges at error tolerance eta.

        eta = 1 uses the full measured limits widened by the hangover
        interval zeta = (zeta_minus, zeta_plus); eta = 0 uses the ideal
        staircase; intermediate values interpolate linearly edge by edge.
        Outer end-code edges stay infinite at every eta.
        """
        if not 0.0 <= eta <= 1.0:
            raise CharacterizationError(f"eta must lie in [0, 1], got {eta}")
        zeta_minus, zeta_plus = zeta
        if zeta_minus > 0.0 or zeta_plus < 0.0:
            raise CharacterizationError("expected zeta_minus <= 0 <= zeta_plus")
        ideal_lo, ideal_hi = self.ideal_edges()
        lo = eta * (self.dig_lo + zeta_minus) + (1.0 - eta) * np.where(
            np.isinf(ideal_lo), self.dig_lo + zeta_minus, ideal_lo
        )
        hi = eta * (self.dig_hi + zeta_plus) + (1.0 - eta) * np.where(
            np.isinf(ideal_hi), self.dig_hi + zeta_plus, ideal_hi
        )
        lo[0] = -np.inf
        hi[-1] = np.inf
        return lo, hi

    def dig_lo_codes(self) -> np.ndarray:
        return self.dig_lo * (1 << self.bits)

    def dig_hi_codes(self) -> np.ndarray:
        return self.dig_hi * (1 << self.bits)

    def coarsen(self, bits: int) -> "CodeLimits":
        """Limits for the stream re-binned to a lower depth.

        A coarse code is the union of its fine codes, so its observed range
        is the union of theirs and its count their total.
        """
        if bits > self.bits:
            raise CharacterizationError("can only coarsen to fewer bits")
        group = 1 << (self.bits - bits)
        n_out = 1 << bits
        lo = self.dig_lo.reshape(n_out, group).min(axis=1)
        hi = self.dig_hi.reshape(n_out, group).max(axis=1)
        counts = self.counts.reshape(n_out, group).sum(axis=1)
        return CodeLimits(
            bits=bits, dig_lo=lo, dig_hi=hi, counts=counts, min_samples=self.min_samples
        )


def characterize_digitizer(
    reference_codes: np.ndarray,
    codes: np.ndarray,
    bits: int,
    min_samples: int = 1 << 14,
) -> CodeLimits:
    """Build CodeLimits from calibration pairs.

    reference_codes are the known input values in code units (full scale =
    2^bits); codes are the symbols the digitizer actually emitted.  Every
    code must be observed at least min_samples times, otherwise the
    characterization fails listing the deficient codes.
    """
    values = np.asarray(reference_codes, dtype=float) / (1 << bits)
    codes = np.asarray(codes)
    if values.shape != codes.shape:
        raise CharacterizationError("reference values and codes must align")
    n = 1 << bits
    counts = np.bincount(codes, minlength=n)
    deficient = np.flatnonzero(counts < min_samples)
    if deficient.size:
        raise CharacterizationError(
            f"codes observed fewer than {min_samples} times: {deficient.tolist()}"
        )
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    sorted_vals = values[order]
    bounds = np.searchsorted(sorted_codes, np.arange(n + 1))
    lo = np.empty(n)
    hi = np.empty(n)
    for d in range(n):
        seg = sorted_vals[bounds[d] : bounds[d + 1]]
        lo[d] = seg.min()
        hi[d] = seg.max()
    return CodeLimits(bits=bits, dig_lo=lo, dig_hi=hi, counts=counts, min_samples=min_samples)


def synthesize_calibration(
    model: DigitizerErrorModel,
    samples_per_code: int,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate a calibration sweep against an error model.

    For each code, samples_per_code reference values are drawn uniformly
    over the code's declared input range (clipped to the full scale) and
    pushed through the digitizer, so every code is probed densely over the
    region that can produce it.  Returns (reference values in code units,
    emitted codes).
    """
    n = 1 << model.bits
    lo, hi = model.declared_ranges()
    lo = np.clip(lo, 0.0, 1.0)
    hi = np.clip(hi, 0.0, 1.0)
    rng = np.random.Generator(np.random.PCG64(seed))
    values = rng.uniform(
        np.repeat(lo, samples_per_code), np.repeat(hi, samples_per_code)
    )
    stream = digitize(values, mode="injected-errors", model=model, seed=seed + 1)
    return values * n, stream.symbols.astype(np.int64)


def write_calibration(path, reference_codes: np.ndarray, codes: np.ndarray) -> None:
    """Write calibration pairs as CSV with columns reference_value, code."""
    reference_codes = np.asarray(reference_codes, dtype=float)
    codes = np.asarray(codes, dtype=np.int64)
    with open(path, "w", newline="") as fh:
        fh.write("reference_value,code\n")
        np.savetxt(fh, np.column_stack([reference_codes, codes]), fmt="%.9f,%d")


def read_calibration(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if header != ["reference_value", "code"]:
            raise CharacterizationError(f"unexpected calibration header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise CharacterizationError("empty calibration file")
    return data[:, 0], data[:, 1].astype(np.int64)


@dataclass(frozen=True)
class AutocorrelationProfile:
    """Autocovariance of a detector output stream by lag.

    ac[k] estimates the lag-k autocovariance; sampling_uncertainty is the
    white-noise scale ac[0]/sqrt(count) used to judge which lags are
    significant.  degenerate marks a constant input stream.
    """

    ac: np.ndarray
    count: int
    degenerate: bool

    @property
    def max_lag(self) -> int:
        return int(self.ac.size - 1)

    @property
    def sampling_uncertainty(self) -> float:
        return float(self.ac[0] / np.sqrt(self.count))


def compute_autocorrelation(
    stream: SymbolStream | np.ndarray, max_lag: int
) -> AutocorrelationProfile:
    """Unbiased autocovariance estimates for lags 0..max_lag.

    Accepts an analog trace or a SymbolStream (codes are mapped to full
    scale).  The stream must be at least 100x longer than max_lag.
    """
    if isinstance(stream, SymbolStream):
        x = stream.symbols.astype(float) / (1 << stream.bits)
    else:
        x = np.asarray(stream, dtype=float)
    n = x.size
    if max_lag < 0:
        raise CharacterizationError("max_lag must be nonnegative")
    if n < 100 * max(max_lag, 1):
        raise CharacterizationError(
            f"stream of {n} samples is too short for max_lag {max_lag}"
        )
    if np.all(x == x[0]):
        # roundoff in mean subtraction would leave ~1e-33 residue
        return AutocorrelationProfile(
            ac=np.zeros(max_lag + 1), count=n, degenerate=True
        )
    centered = x - x.mean()
    ac = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        m = n - lag
        denom = max(m - 1, 1)
        ac[lag] = np.dot(centered[: n - lag], centered[lag:]) / denom
    return AutocorrelationProfile(ac=ac, count=n, degenerate=False)


def significant_max_lag(profile: AutocorrelationProfile, factor: float = 3.0) -> int:
    """Largest lag whose autocovariance exceeds factor times the sampling
    uncertainty; 0 if none do."""
    if profile.degenerate:
        return 0
    noise = factor * profile.sampling_uncertainty
    significant = np.flatnonzero(np.abs(profile.ac[1:]) > noise)
    return int(significant[-1] + 1) if significant.size else 0


@dataclass(frozen=True)
class RecoveredResponse:
    """Impulse-response taps recovered from an autocorrelation.

    taps keep the raw scale fixed by ac[0] (prompt tap sqrt(ac[0])); the
    normalized response divides the prompt gain out, which is the form used
    for hangover bounds.  residual_norms holds the L2 autocorrelation
    mismatch after each perturbative order, ending with the final result.
    """

    taps: np.ndarray
    residual_norms: tuple[float, ...]

    @property
    def response(self) -> ImpulseResponse:
        return ImpulseResponse(self.taps)

    @property
    def normalized(self) -> ImpulseResponse:
        return ImpulseResponse(self.taps / self.taps[0])


def _tap_correlation(a: np.ndarray, b: np.ndarray, n_lags: int) -> np.ndarray:
    """cc[k] = sum_j a[j] b[j + k] for k = 0..n_lags - 1."""
    out = np.zeros(n_lags)
    for k in range(n_lags):
        if k < b.size:
            lim = min(a.size, b.size - k)
            if lim > 0:
                out[k] = np.dot(a[:lim], b[k : k + lim])
    return out


def recover_impulse_response(
    profile: AutocorrelationProfile | np.ndarray,
    order: int = 8,
    tol: float = 1e-12,
) -> RecoveredResponse:
    """Recover causal taps G with sum_j G_j G_{j+k} = ac[k], perturbatively.

    Writes G as a series around the prompt-only solution G = (sqrt(ac0),
    0, ...).  The lag-k autocovariance is first order in the tail, so each
    order adds a correction obtained from a diagonal linear solve; the
    iteration stops at the requested order or when the residual change per
    order drops below tol relative to ac0.

    The expansion is only valid when the prompt tap dominates; inputs with
    max_k |ac[k]| >= ac[0]/2 are refused (that includes autocorrelations
    violating positive semidefiniteness, which no tap sequence can
    produce).  Degenerate (zero-variance) profiles are refused too.
    """
    ac = profile.ac if isinstance(profile, AutocorrelationProfile) else np.asarray(profile, dtype=float)
    if ac.ndim != 1 or ac.size == 0:
        raise CharacterizationError("autocorrelation must be a 1-d array")
    ac0 = ac[0]
    if ac0 <= 0.0:
        raise CharacterizationError("degenerate autocorrelation: ac[0] must be positive")
    if ac.size > 1:
        ratio = float(np.max(np.abs(ac[1:])) / ac0)
        if ratio >= 0.5:
            raise NonperturbativeInputError(
                f"tail-to-prompt autocorrelation ratio {ratio:.3f} >= 0.5; "
                "no dominant-tap response reproduces this input"
            )
    if order < 0:
        raise CharacterizationError("order must be nonnegative")

    n = ac.size
    g0 = np.sqrt(ac0)
    corrections = [np.zeros(n)]
    corrections[0][0] = g0
    total = corrections[0].copy()

    def residual_norm(taps: np.ndarray) -> float:
        model = _tap_correlation(taps, taps, n)
        return float(np.linalg.norm(model - ac))

    norms = [residual_norm(total)]
    for p in range(1, order + 1):
        new = np.zeros(n)
        if p == 1:
            new[1:] = ac[1:] / g0
        else:
            known = np.zeros(n)
            for m in range(1, p):
                a, b = corrections[m], corrections[p - m]
                known += _tap_correlation(a, b, n)
            new[1:] = -known[1:] / g0
            new[0] = -known[0] / (2.0 * g0)
        corrections.append(new)
        total = total + new
        norms.append(residual_norm(total))
        if abs(norms[-1] - norms[-2]) < tol * ac0:
            break
    return RecoveredResponse(taps=total, residual_norms=tuple(norms))


@dataclass(frozen=True)
class HangoverBounds:
    """Bracket [zeta_minus, zeta_plus] on the tail contribution of earlier
    pulses to the current detector sample, in full-scale units.

    count is the number of stream positions the bracket was computed over;
    the bounds are empirical extremes, so on fresh data of similar length
    they hold up to a handful of exceptions (budgeted as 10/count).
    """

    zeta_minus: float
    zeta_plus: float
    count: int

    @property
    def exception_budget(self) -> float:
        return 10.0 / self.count if self.count else 1.0


def compute_hangover_bounds(
    stream: SymbolStream,
    response: ImpulseResponse,
    limits: CodeLimits,
) -> HangoverBounds:
    """Bracket the hangover term sum_{j>=1} G_j p_{i-j} over a stream.

    The powers p are not observed directly; each symbol pins its power to
    the code's observed digitization interval, and the bracket takes the
    interval endpoint that extremizes every term (upper endpoints on
    positive taps for the maximum, and so on).  Uses the gain-normalized
    response so powers and detector output share full-scale units.
    """
    if stream.bits != limits.bits:
        raise CharacterizationError("stream and limits disagree on bit depth")
    tail = response.normalized().taps[1:]
    if tail.size == 0:
        return HangoverBounds(zeta_minus=0.0, zeta_plus=0.0, count=stream.count)
    codes = stream.symbols
    if codes.size <= tail.size:
        raise CharacterizationError("stream shorter than the impulse-response tail")
    p_lo = limits.dig_lo[codes]
    p_hi = limits.dig_hi[codes]
    pos = np.maximum(tail, 0.0)
    neg = np.minimum(tail, 0.0)
    kernel_pos = np.concatenate([[0.0], pos])
    kernel_neg = np.concatenate([[0.0], neg])
    m = tail.size
    n = codes.size
    v_max = (np.convolve(p_hi, kernel_pos) + np.convolve(p_lo, kernel_neg))[m:n]
    v_min = (np.convolve(p_lo, kernel_pos) + np.convolve(p_hi, kernel_neg))[m:n]
    # the first tail-length samples see a truncated prehistory, so their
    # hangover sits between zero and the steady-state value; the bracket
    # must contain zero to cover them
    return HangoverBounds(
        zeta_minus=min(float(v_min.min()), 0.0),
        zeta_plus=max(float(v_max.max()), 0.0),
        count=int(v_max.size),
    )
