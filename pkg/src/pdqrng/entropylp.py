"""Certified lower bounds on the average min-entropy of a symbol stream.

The per-pulse working point x = (p_s, p_l, V) is untrusted: only the symbol
statistics of the three measured streams and the characterized code limits
are taken at face value.  A rectangular covering of the allowed x ranges
carries a weight vector s, the probability mass each cell receives.  Code
range frequencies pin s between cell-averaged CDF coefficients evaluated at
the eta-scaled limits, and the objective maximizes the mean worst-case bin
probability.  The LP optimum therefore upper-bounds the predictability of
every distribution consistent with the data, and -log2 of it lower-bounds
the average min-entropy per symbol.

The classical phase is not a covering axis.  Constraints compare against the
uniform-phase CDF, which the empirical frequencies approach once the phase
drifts through many turns during an acquisition, while the objective
maximizes over the phase adversarially per cell, so a phase-stable guesser
is still accounted for.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.stats import beta as _beta_dist

from .cdfs import CdfKind, CellBox, cell_averaged_cdf_table
from .characterize import CodeLimits, HangoverBounds
from .detection import SymbolStream

__all__ = [
    "DEFAULT_RANGES",
    "DEFAULT_CONFIDENCE",
    "EntropyLpError",
    "MonotonicityError",
    "Covering",
    "build_covering",
    "ObjectiveVector",
    "worst_case_predictability",
    "build_objective",
    "ConstraintSet",
    "build_constraints",
    "EntropyCertificate",
    "solve_entropy_lp",
    "SweepPoint",
    "SweepResult",
    "resolution_sweep",
    "write_lp_text",
    "write_certificate",
    "hash_symbol_stream",
    "hash_code_limits",
    "hash_hangover_bounds",
]

# Widest x ranges for which every covering corner keeps peak power <= 1.
DEFAULT_RANGES = ((0.0, 0.25), (0.0, 0.25), (0.0, 1.0))
DEFAULT_CONFIDENCE = 1.0 - 1e-6

PHI_GRID_POINTS = 256

# Objective enclosures are evaluated on sub-boxes cut at this fixed pitch
# (p_s, p_l, V axes), aligned to multiples of the pitch rather than to the
# covering, so a refined cell's pieces are subsets of its parent's pieces
# and coefficients cannot grow under nested refinement.
DEFAULT_SLICE_PITCH = (1.0 / 128.0, 1.0 / 128.0, 1.0 / 16.0)


class EntropyLpError(ValueError):
    """Inconsistent inputs to the certification layer."""


class MonotonicityError(RuntimeError):
    """A refinement sweep produced a decreasing bound."""


# ---------------------------------------------------------------------------
# covering


@dataclass(frozen=True)
class Covering:
    """Disjoint rectangular cells tiling the declared (p_s, p_l, V) ranges.

    Cell order is row-major over (i_ps, i_pl, i_v); the V axis varies
    fastest.
    """

    ranges: tuple[tuple[float, float], ...]
    shape: tuple[int, int, int]
    cells: tuple[CellBox, ...]

    def __post_init__(self) -> None:
        if len(self.ranges) != 3 or len(self.shape) != 3:
            raise EntropyLpError("covering needs three axes")
        for lo, hi in self.ranges:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise EntropyLpError(f"bad covering range ({lo}, {hi})")
        if any(n < 1 for n in self.shape):
            raise EntropyLpError("covering shape must be positive")
        if len(self.cells) != self.shape[0] * self.shape[1] * self.shape[2]:
            raise EntropyLpError("cell count does not match the grid shape")

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def build_covering(
    n: int = 8,
    ranges: tuple[tuple[float, float], ...] = DEFAULT_RANGES,
    shape: tuple[int, int, int] | None = None,
) -> Covering:
    """Uniform grid covering; the default shape is (n, n, 4n).

    The V axis gets four times the divisions of the power axes because the
    bin probability is most sensitive to the fringe amplitude.
    """
    if shape is None:
        if n < 1:
            raise EntropyLpError("resolution n must be at least 1")
        shape = (n, n, 4 * n)
    ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
    edges = [np.linspace(lo, hi, num + 1) for (lo, hi), num in zip(ranges, shape)]
    cells = []
    for i in range(shape[0]):
        for j in range(shape[1]):
            for k in range(shape[2]):
                cells.append(
                    CellBox(
                        p_s_lo=float(edges[0][i]),
                        p_s_hi=float(edges[0][i + 1]),
                        p_l_lo=float(edges[1][j]),
                        p_l_hi=float(edges[1][j + 1]),
                        v_lo=float(edges[2][k]),
                        v_hi=float(edges[2][k + 1]),
                    )
                )
    return Covering(ranges=ranges, shape=tuple(shape), cells=tuple(cells))


# ---------------------------------------------------------------------------
# objective


@dataclass(frozen=True)
class ObjectiveVector:
    """Per-cell upper bounds on the worst-case bin probability."""

    coefficients: np.ndarray
    sigma_q: float
    eta: float
    zeta: tuple[float, float]
    covering_shape: tuple[int, int, int]
    covering_ranges: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        coefs = np.asarray(self.coefficients, dtype=float)
        if coefs.ndim != 1 or coefs.size == 0:
            raise EntropyLpError("objective must be a nonempty vector")
        if not np.all(np.isfinite(coefs)):
            raise EntropyLpError("objective coefficients must be finite")
        if np.any(coefs <= 0.0) or np.any(coefs > 1.0):
            raise EntropyLpError("objective coefficients must lie in (0, 1]")
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)

    @property
    def n_cells(self) -> int:
        return int(self.coefficients.size)


def _phase_density_slope_bound(sigma: float) -> float:
    # |g'| for the wrapped normal density is at most (1/sigma^2) times the
    # sum of |z| phi(z) over images spaced 2 pi / sigma apart in z, which
    # the integral of |z| phi(z) plus one peak per hump bounds from above.
    spacing = 2.0 * math.pi / sigma
    integral = math.sqrt(2.0 / math.pi)
    peak = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
    return (integral / spacing + 2.0 * peak) / (sigma * sigma)


# Past this harmonic count (sigma below ~0.03) the phase barely spreads
# within a pulse and the trivial bound 1 is essentially exact anyway.
PHASE_MAX_HARMONICS = 256


def _phase_series(sigma_q: float, phi_points: int):
    """Harmonic weights for the phase-offset mass of a symmetric arc pair.

    The wrapped normal density has Fourier coefficients exp(-(k sigma)^2/2),
    so the mass of [a, b] and its mirror image under an offset phi_c is
    exactly (b - a)/pi + sum_k d_k cos(k phi_c) with
    d_k = (2/pi) (exp(-(k sigma)^2/2) / k) (sin(k b) - sin(k a)).
    Returns (ks, weight, cosmat, tail, margin, use_ceiling), or None when
    the series would need more than PHASE_MAX_HARMONICS terms.
    """
    n_harm = int(math.ceil(7.8 / sigma_q))
    if n_harm > PHASE_MAX_HARMONICS:
        return None
    ks = np.arange(1.0, n_harm + 1.0)
    weight = (2.0 / math.pi) * np.exp(-0.5 * (ks * sigma_q) ** 2) / ks
    grid = np.arange(phi_points) * (2.0 * math.pi / phi_points)
    cosmat = np.cos(ks[:, None] * grid[None, :])
    # Geometric-series tail: (n_harm + 1) sigma >= 7.8 puts it below 2e-13.
    decay = math.exp(-(n_harm + 1) * sigma_q * sigma_q)
    tail = (
        (2.0 / math.pi)
        * math.exp(-0.5 * ((n_harm + 1) * sigma_q) ** 2)
        / (1.0 - decay)
    )
    spacing = 2.0 * math.pi / phi_points
    margin = 4.0 * _phase_density_slope_bound(sigma_q) * spacing * spacing / 8.0
    # The analytic ceiling width/pi + sum|d_k| only shrinks with the arc
    # when the harmonic damping factors sum below 1/2; true from 1.5 up.
    use_ceiling = sigma_q >= 1.5
    return ks, weight, cosmat, tail, margin, use_ceiling


def _leaf_bin_probability(
    cell: CellBox,
    sigma_q: float,
    lo: np.ndarray,
    hi: np.ndarray,
    series,
) -> float:
    """Upper bound on max over codes, x in this box and the carrier phase
    of the probability that the sampled power lands in a claimed code bin.

    Interval arithmetic on the normalized offset c = (edge - p_s - p_l) / D
    with D = 2 V sqrt(p_s p_l) turns each bin into a phase-arc enclosure
    valid for every x in the box; its mass under the diffused phase is a
    short cosine series in the carrier offset, maximized on a grid with a
    curvature margin so grid gaps cannot hide a higher peak.  Enclosures
    only shrink when the box does, which keeps coefficients monotone under
    refinement.
    """
    m_lo = cell.p_s_lo + cell.p_l_lo
    m_hi = cell.p_s_hi + cell.p_l_hi
    amp_lo = 2.0 * cell.v_lo * math.sqrt(cell.p_s_lo * cell.p_l_lo)
    amp_hi = 2.0 * cell.v_hi * math.sqrt(cell.p_s_hi * cell.p_l_hi)

    if amp_lo == 0.0:
        # Some x in the box collapses the fringe; the outcome is the bare
        # mean level, captured whole by any bin meeting [m_lo, m_hi].
        if bool(np.any((hi >= m_lo) & (lo <= m_hi))):
            return 1.0
        if amp_hi == 0.0:
            return 0.0

    with np.errstate(divide="ignore", invalid="ignore"):
        a_lo = lo - m_hi
        b_hi = hi - m_lo
        neg = a_lo / amp_lo if amp_lo > 0.0 else np.full_like(a_lo, -np.inf)
        pos = b_hi / amp_lo if amp_lo > 0.0 else np.full_like(b_hi, np.inf)
        c_lo = np.where(a_lo >= 0.0, a_lo / amp_hi, neg)
        c_hi = np.where(b_hi <= 0.0, b_hi / amp_hi, pos)

    nonempty = (c_lo <= 1.0) & (c_hi >= -1.0)
    if not bool(np.any(nonempty)):
        return 0.0
    if series is None:
        # Diffusion far below one code width: the adversary parks the
        # phase inside some claimed arc and that code is near-certain.
        return 1.0
    phi_a = np.arccos(np.clip(c_hi[nonempty], -1.0, 1.0))
    phi_b = np.arccos(np.clip(c_lo[nonempty], -1.0, 1.0))

    ks, weight, cosmat, tail, margin, use_ceiling = series
    base = (phi_b - phi_a) / math.pi
    d = weight * (np.sin(phi_b[:, None] * ks) - np.sin(phi_a[:, None] * ks))
    absd = np.abs(d)
    sumabs = absd.sum(axis=1)

    if use_ceiling:
        ceiling = base + sumabs + tail
        rest = sumabs - absd[:, 0]
        if float(rest.max()) <= 1e-12:
            # One harmonic left: the ceiling is the phase maximum itself,
            # exact up to the included tail.  No grid needed.
            return min(1.0, float(ceiling.max()))

    bound = base + (d @ cosmat).max(axis=1) + margin + tail
    if use_ceiling:
        bound = np.minimum(bound, ceiling)
    return min(1.0, float(bound.max()))


def _pitch_slices(lo: float, hi: float, pitch: float) -> list[tuple[float, float]]:
    """Split [lo, hi] at the multiples of pitch that fall strictly inside."""
    if hi <= lo:
        return [(lo, hi)]
    points = [lo]
    k = math.floor(lo / pitch) + 1
    while k * pitch < hi:
        if k * pitch > lo:
            points.append(k * pitch)
        k += 1
    points.append(hi)
    return list(zip(points[:-1], points[1:]))


def _max_bin_probability(
    cell: CellBox,
    sigma_q: float,
    lo: np.ndarray,
    hi: np.ndarray,
    phi_points: int,
    pitch: tuple[float, float, float],
) -> float:
    """Max of the leaf bound over the cell cut at the global slice pitch.

    Evaluating the enclosure on whole covering cells would smear a code
    bin across the cell's full mean-level spread, many bins wide at coarse
    resolutions.  The pitch-aligned pieces keep the smearing bounded by a
    constant independent of the covering, and keep the per-cell value a
    max over a fixed global field, so it cannot grow when cells shrink.
    """
    series = _phase_series(sigma_q, phi_points)
    best = 0.0
    for s_lo, s_hi in _pitch_slices(cell.p_s_lo, cell.p_s_hi, pitch[0]):
        for l_lo, l_hi in _pitch_slices(cell.p_l_lo, cell.p_l_hi, pitch[1]):
            for v_lo, v_hi in _pitch_slices(cell.v_lo, cell.v_hi, pitch[2]):
                leaf = CellBox(s_lo, s_hi, l_lo, l_hi, v_lo, v_hi)
                best = max(
                    best,
                    _leaf_bin_probability(leaf, sigma_q, lo, hi, series),
                )
                if best >= 1.0:
                    return 1.0
    if best <= 0.0:
        raise EntropyLpError(
            "no claimed code range overlaps the cell's power support"
        )
    # one-sided slack: truncation and roundoff must not shave the ceiling
    return float(min(1.0, best + 1e-12))


def worst_case_predictability(
    cell: CellBox,
    sigma_q: float,
    limits: CodeLimits,
    eta: float,
    zeta: tuple[float, float] = (0.0, 0.0),
    *,
    phi_points: int = PHI_GRID_POINTS,
    slice_pitch: tuple[float, float, float] = DEFAULT_SLICE_PITCH,
) -> float:
    """Worst-case probability of the most likely code for x in the cell.

    Uses the eta-scaled claimed bins, widened by the hangover interval
    zeta when one is supplied, and maximizes over the carrier phase.
    """
    if not sigma_q > 0.0:
        raise EntropyLpError("sigma_q must be positive")
    lo, hi = limits.scaled_edges(eta, zeta)
    return _max_bin_probability(
        cell, float(sigma_q), lo, hi, int(phi_points), slice_pitch
    )


def build_objective(
    covering: Covering,
    sigma_q: float,
    limits: CodeLimits,
    hang: HangoverBounds | None = None,
    eta: float = 1.0,
    *,
    phi_points: int = PHI_GRID_POINTS,
    slice_pitch: tuple[float, float, float] = DEFAULT_SLICE_PITCH,
) -> ObjectiveVector:
    """Objective coefficients for every cell of the covering."""
    if not sigma_q > 0.0:
        raise EntropyLpError("sigma_q must be positive")
    zeta = (hang.zeta_minus, hang.zeta_plus) if hang is not None else (0.0, 0.0)
    lo, hi = limits.scaled_edges(eta, zeta)
    coefs = np.array(
        [
            _max_bin_probability(
                cell, float(sigma_q), lo, hi, int(phi_points), slice_pitch
            )
            for cell in covering.cells
        ]
    )
    return ObjectiveVector(
        coefficients=coefs,
        sigma_q=float(sigma_q),
        eta=float(eta),
        zeta=(float(zeta[0]), float(zeta[1])),
        covering_shape=covering.shape,
        covering_ranges=covering.ranges,
    )


# ---------------------------------------------------------------------------
# constraints


_STREAM_ROLES = (
    ("interference", "intf"),
    ("short-arm-only", "sarm"),
    ("long-arm-only", "larm"),
)


def _code_ranges(n_codes: int, policy: str) -> list[tuple[int, int]]:
    if policy == "singles":
        sizes = [1]
    elif policy == "singles+dyadic":
        sizes = []
        size = 1
        while size <= n_codes:
            sizes.append(size)
            size *= 2
    else:
        raise EntropyLpError(f"unknown range policy {policy!r}")
    return [
        (left, left + size - 1)
        for size in sizes
        for left in range(0, n_codes, size)
    ]


def _clopper_pearson(k: int, n: int, confidence: float) -> tuple[float, float]:
    alpha = (1.0 - confidence) / 2.0
    lower = 0.0 if k == 0 else float(_beta_dist.ppf(alpha, k, n - k + 1))
    upper = 1.0 if k == n else float(_beta_dist.isf(alpha, k + 1, n - k))
    return lower, upper


@dataclass(frozen=True)
class ConstraintSet:
    """Signed inequality rows A_ub s <= b_ub plus the normalization row.

    Each code range contributes two rows per stream: the widest-claim
    coefficients must reach the observed frequency's lower confidence
    bound, the sure-claim coefficients must stay under its upper one.
    """

    a_ub: np.ndarray
    b_ub: np.ndarray
    row_labels: tuple[str, ...]
    bits: int
    eta: float
    zeta: tuple[float, float]
    confidence: float
    range_policy: str
    covering_shape: tuple[int, int, int]
    covering_ranges: tuple[tuple[float, float], ...]
    input_hashes: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        a = np.asarray(self.a_ub, dtype=float)
        b = np.asarray(self.b_ub, dtype=float)
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.size:
            raise EntropyLpError("malformed constraint arrays")
        if len(self.row_labels) != a.shape[0]:
            raise EntropyLpError("row labels do not match the row count")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise EntropyLpError("constraint entries must be finite")
        if np.any(np.abs(a) > 1.0 + 1e-9):
            raise EntropyLpError("coefficient magnitudes must stay within 1")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a_ub", a)
        object.__setattr__(self, "b_ub", b)

    @property
    def n_cells(self) -> int:
        return int(self.a_ub.shape[1])

    @property
    def n_rows(self) -> int:
        return int(self.a_ub.shape[0])

    def a_eq(self) -> np.ndarray:
        return np.ones((1, self.n_cells))

    def b_eq(self) -> np.ndarray:
        return np.ones(1)


def _sha256_of(*chunks: bytes) -> str:
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(chunk)
    return digest.hexdigest()


def hash_symbol_stream(stream: SymbolStream) -> str:
    return _sha256_of(
        b"symbol-stream",
        struct.pack("<BB", stream.bits, len(stream.origin)),
        stream.origin.encode(),
        np.ascontiguousarray(stream.symbols).tobytes(),
    )


def hash_code_limits(limits: CodeLimits) -> str:
    return _sha256_of(
        b"code-limits",
        struct.pack("<BQ", limits.bits, limits.min_samples),
        np.ascontiguousarray(limits.dig_lo).tobytes(),
        np.ascontiguousarray(limits.dig_hi).tobytes(),
        np.ascontiguousarray(limits.counts, dtype=np.int64).tobytes(),
    )


def hash_hangover_bounds(hang: HangoverBounds) -> str:
    return _sha256_of(
        b"hangover-bounds",
        struct.pack("<ddq", hang.zeta_minus, hang.zeta_plus, hang.count),
    )


# quadrature output is expensive and reused heavily across sweeps
# (eta rescales edge values, sigma_q only touches the objective), so
# finished tables are memoized on their full input fingerprint
_TABLE_CACHE: dict[str, np.ndarray] = {}
_TABLE_CACHE_LIMIT = 48


def _stream_coefficient_table(
    covering: Covering,
    kind: CdfKind,
    values: np.ndarray,
    quad_rel_tol: float,
) -> np.ndarray:
    """Cell-averaged CDF at each distinct finite edge value, per cell.

    One batched quadrature covers every cell.  Values outside a cell's
    power support are then pinned to exact 0 or 1, and tiny
    nonmonotonicities from independent panels are ironed out so
    coefficient differences stay nonnegative.
    """
    key = _sha256_of(
        b"coefficient-table",
        repr(covering.ranges).encode(),
        struct.pack("<3q", *covering.shape),
        kind.variant.encode(),
        struct.pack("<dd", kind.sigma_q or 0.0, quad_rel_tol),
        np.ascontiguousarray(values).tobytes(),
    )
    cached = _TABLE_CACHE.get(key)
    if cached is not None:
        return cached
    table = cell_averaged_cdf_table(
        values, covering.cells, kind, rel_tol=quad_rel_tol
    )
    hulls = np.array([cell.support() for cell in covering.cells])
    table[values[None, :] <= hulls[:, 0, None]] = 0.0
    table[values[None, :] >= hulls[:, 1, None]] = 1.0
    np.clip(table, 0.0, 1.0, out=table)
    table = np.maximum.accumulate(table, axis=1)
    table.setflags(write=False)
    while len(_TABLE_CACHE) >= _TABLE_CACHE_LIMIT:
        _TABLE_CACHE.pop(next(iter(_TABLE_CACHE)))
    _TABLE_CACHE[key] = table
    return table


def build_constraints(
    streams: tuple[SymbolStream, SymbolStream, SymbolStream],
    covering: Covering,
    limits: CodeLimits,
    hang: HangoverBounds,
    eta: float,
    range_policy: str = "singles+dyadic",
    confidence: float = DEFAULT_CONFIDENCE,
    *,
    quad_rel_tol: float = 1e-7,
) -> ConstraintSet:
    """Frequency constraints for the three streams on one covering.

    The interference stream is compared against uniform-phase averages at
    the hangover-widened eta-scaled limits; the single-arm streams, whose
    levels vary slowly, use plain eta-scaled limits and step averages.
    """
    if len(streams) != 3:
        raise EntropyLpError("expected (interference, short, long) streams")
    for stream, (origin, _) in zip(streams, _STREAM_ROLES):
        if stream.origin != origin:
            raise EntropyLpError(
                f"stream order must be {[r for r, _ in _STREAM_ROLES]}, "
                f"got origin {stream.origin!r}"
            )
        if stream.count == 0:
            raise EntropyLpError("streams must be nonempty")
        if stream.bits != limits.bits:
            raise EntropyLpError("inconsistent stream bit depths")
    if not 0.0 < confidence < 1.0:
        raise EntropyLpError("confidence must lie in (0, 1)")

    bits = limits.bits
    n_codes = 1 << bits
    ranges = _code_ranges(n_codes, range_policy)
    zeta = (hang.zeta_minus, hang.zeta_plus)

    kinds = (
        CdfKind.uniform_phase(),
        CdfKind.step_short(),
        CdfKind.step_long(),
    )
    edge_sets = (
        limits.scaled_edges(eta, zeta),
        limits.scaled_edges(eta),
        limits.scaled_edges(eta),
    )

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    labels: list[str] = []

    for stream, (_, prefix), kind, (lo, hi) in zip(
        streams, _STREAM_ROLES, kinds, edge_sets
    ):
        counts = stream.counts()
        total = stream.count

        finite = np.unique(np.concatenate([lo, hi]))
        finite = finite[np.isfinite(finite)]
        table = _stream_coefficient_table(covering, kind, finite, quad_rel_tol)

        def level(value: float) -> np.ndarray:
            if value == -np.inf:
                return np.zeros(covering.n_cells)
            if value == np.inf:
                return np.ones(covering.n_cells)
            return table[:, int(np.searchsorted(finite, value))]

        # Running extremes give the sure-emission window: a power above
        # every claim below l and below every claim above h must land in
        # [l, h] on any digitizer conforming to the limits.
        below = np.concatenate([[-np.inf], np.maximum.accumulate(hi)[:-1]])
        above = np.concatenate([np.minimum.accumulate(lo[::-1])[::-1][1:], [np.inf]])

        for left, right in ranges:
            k = int(counts[left : right + 1].sum())
            cp_lo, cp_up = _clopper_pearson(k, total, confidence)

            wide = level(float(np.max(hi[left : right + 1]))) - level(
                float(np.min(lo[left : right + 1]))
            )
            sure_lo = float(below[left])
            sure_hi = float(above[right])
            if sure_lo < sure_hi:
                sure = np.clip(level(sure_hi) - level(sure_lo), 0.0, 1.0)
            else:
                sure = np.zeros(covering.n_cells)

            rows.append(-np.clip(wide, 0.0, 1.0))
            rhs.append(-cp_lo)
            labels.append(f"{prefix}_{left}_{right}_min")
            rows.append(sure)
            rhs.append(cp_up)
            labels.append(f"{prefix}_{left}_{right}_max")

    hashes = tuple(
        sorted(
            [(origin, hash_symbol_stream(s)) for s, (origin, _) in zip(streams, _STREAM_ROLES)]
            + [
                ("code-limits", hash_code_limits(limits)),
                ("hangover-bounds", hash_hangover_bounds(hang)),
            ]
        )
    )
    return ConstraintSet(
        a_ub=np.vstack(rows),
        b_ub=np.array(rhs),
        row_labels=tuple(labels),
        bits=bits,
        eta=float(eta),
        zeta=(float(zeta[0]), float(zeta[1])),
        confidence=float(confidence),
        range_policy=range_policy,
        covering_shape=covering.shape,
        covering_ranges=covering.ranges,
        input_hashes=hashes,
    )


# ---------------------------------------------------------------------------
# solve


@dataclass(frozen=True)
class EntropyCertificate:
    """Self-contained record of one certification outcome."""

    status: str
    bound_bits_per_symbol: float | None
    predictability: float | None
    primal_value: float | None
    dual_gap: float | None
    sigma_q: float
    bits: int
    eta: float
    zeta: tuple[float, float]
    covering_shape: tuple[int, int, int]
    covering_ranges: tuple[tuple[float, float], ...]
    n_cells: int
    n_rows: int
    range_policy: str
    confidence: float
    solver: str
    solver_status: int
    solver_message: str
    input_hashes: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "bound_bits_per_symbol": self.bound_bits_per_symbol,
            "predictability": self.predictability,
            "primal_value": self.primal_value,
            "dual_gap": self.dual_gap,
            "sigma_q": self.sigma_q,
            "bits": self.bits,
            "eta": self.eta,
            "zeta": list(self.zeta),
            "covering_shape": list(self.covering_shape),
            "covering_ranges": [list(r) for r in self.covering_ranges],
            "n_cells": self.n_cells,
            "n_rows": self.n_rows,
            "range_policy": self.range_policy,
            "confidence": self.confidence,
            "solver": self.solver,
            "solver_status": self.solver_status,
            "solver_message": self.solver_message,
            "input_hashes": {name: value for name, value in self.input_hashes},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def write_certificate(certificate: EntropyCertificate, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(certificate.to_json())
        handle.write("\n")


def solve_entropy_lp(
    objective: ObjectiveVector, constraints: ConstraintSet
) -> tuple[np.ndarray | None, float, EntropyCertificate]:
    """Maximize mean predictability over the constrained cell weights.

    The returned bound uses a repaired dual certificate rather than the
    primal optimum, so floating-point termination can only make the
    entropy claim more conservative, never less.  Infeasibility is a
    result, not an exception: it means no cell distribution reproduces
    the observed statistics within the claimed limits.
    """
    if objective.n_cells != constraints.n_cells:
        raise EntropyLpError("objective and constraints disagree on cell count")
    if (
        objective.covering_shape != constraints.covering_shape
        or objective.covering_ranges != constraints.covering_ranges
    ):
        raise EntropyLpError("objective and constraints built on different coverings")
    if objective.eta != constraints.eta:
        raise EntropyLpError("objective and constraints built at different eta")

    c = objective.coefficients
    lp_args = dict(
        A_ub=constraints.a_ub,
        b_ub=constraints.b_ub,
        A_eq=constraints.a_eq(),
        b_eq=constraints.b_eq(),
        bounds=(0.0, None),
        method="highs",
    )
    result = linprog(-c, **lp_args)
    if result.status == 4:
        # presolve occasionally ends in an unclassified state on
        # borderline-infeasible inputs; one deterministic retry without it
        result = linprog(-c, options={"presolve": False}, **lp_args)

    common = dict(
        sigma_q=objective.sigma_q,
        bits=constraints.bits,
        eta=constraints.eta,
        zeta=constraints.zeta,
        covering_shape=constraints.covering_shape,
        covering_ranges=constraints.covering_ranges,
        n_cells=constraints.n_cells,
        n_rows=constraints.n_rows,
        range_policy=constraints.range_policy,
        confidence=constraints.confidence,
        solver="highs",
        solver_status=int(result.status),
        solver_message=str(result.message),
        input_hashes=constraints.input_hashes,
    )

    if result.status == 2:
        certificate = EntropyCertificate(
            status="infeasible",
            bound_bits_per_symbol=None,
            predictability=None,
            primal_value=None,
            dual_gap=None,
            **common,
        )
        return None, math.nan, certificate
    if result.status != 0:
        raise RuntimeError(f"LP solver failed: {result.message}")

    primal = float(-result.fun)
    y = np.clip(-result.ineqlin.marginals, 0.0, np.inf)
    z = float(-result.eqlin.marginals[0])
    slack = float(np.max(c - constraints.a_ub.T @ y) - z)
    z += max(0.0, slack)
    dual_value = float(constraints.b_ub @ y + z)

    predictability = min(1.0, dual_value)
    bound = max(0.0, -math.log2(predictability))
    certificate = EntropyCertificate(
        status="certified",
        bound_bits_per_symbol=bound,
        predictability=predictability,
        primal_value=primal,
        dual_gap=dual_value - primal,
        **common,
    )
    return result.x, primal, certificate


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepPoint:
    n: int
    status: str
    bound_bits: float | None
    certificate: EntropyCertificate


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    relative_change: float | None


def resolution_sweep(
    base: Covering,
    resolutions,
    streams,
    limits: CodeLimits,
    hang: HangoverBounds,
    sigma_q: float,
    eta: float = 1.0,
    *,
    range_policy: str = "singles+dyadic",
    confidence: float = DEFAULT_CONFIDENCE,
    quad_rel_tol: float = 1e-7,
    slice_pitch: tuple[float, float, float] = DEFAULT_SLICE_PITCH,
    tol: float = 1e-6,
) -> SweepResult:
    """Build and solve at each resolution; refuse decreasing bounds.

    Enclosure nesting makes objective coefficients shrink under cell
    splitting, so a certified bound that drops by more than the solver
    tolerance as n grows indicates a defect, not a property of the data.
    """
    cache: dict[int, SweepPoint] = {}
    points = []
    for n in resolutions:
        n = int(n)
        if n not in cache:
            covering = build_covering(n, ranges=base.ranges)
            objective = build_objective(
                covering, sigma_q, limits, hang, eta, slice_pitch=slice_pitch
            )
            constraints = build_constraints(
                (streams[0], streams[1], streams[2]),
                covering,
                limits,
                hang,
                eta,
                range_policy=range_policy,
                confidence=confidence,
                quad_rel_tol=quad_rel_tol,
            )
            _, _, certificate = solve_entropy_lp(objective, constraints)
            cache[n] = SweepPoint(
                n=n,
                status=certificate.status,
                bound_bits=certificate.bound_bits_per_symbol,
                certificate=certificate,
            )
        points.append(cache[n])

    certified = sorted(
        (p for p in points if p.status == "certified"), key=lambda p: p.n
    )
    for prev, cur in zip(certified, certified[1:]):
        if cur.bound_bits < prev.bound_bits - tol:
            raise MonotonicityError(
                f"bound dropped from {prev.bound_bits:.9f} at n={prev.n} "
                f"to {cur.bound_bits:.9f} at n={cur.n}"
            )

    by_n = sorted({p.n: p for p in certified}.values(), key=lambda p: p.n)
    relative = None
    if len(by_n) >= 2 and by_n[-1].bound_bits > 0.0:
        relative = abs(by_n[-2].bound_bits - by_n[-1].bound_bits) / by_n[-1].bound_bits
    return SweepResult(points=tuple(points), relative_change=relative)


# ---------------------------------------------------------------------------
# export


def _lp_terms(coefficients: np.ndarray, per_line: int = 6) -> list[str]:
    parts = []
    for i, value in enumerate(coefficients):
        if value == 0.0:
            continue
        sign = "-" if value < 0.0 else "+"
        parts.append(f"{sign} {abs(value):.12g} s{i}")
    if not parts:
        parts = ["+ 0 s0"]
    if parts[0].startswith("+"):
        parts[0] = parts[0][2:]
    return [
        " ".join(parts[i : i + per_line]) for i in range(0, len(parts), per_line)
    ]


def write_lp_text(
    path, objective: ObjectiveVector, constraints: ConstraintSet
) -> None:
    """Dump the LP in the common text interchange format for audit."""
    lines = [
        f"\\ predictability maximization over {objective.n_cells} cells,",
        f"\\ {constraints.n_rows} frequency rows, eta {constraints.eta},",
        f"\\ sigma_q {objective.sigma_q}, bits {constraints.bits}",
        "Maximize",
    ]
    chunks = _lp_terms(objective.coefficients)
    lines += [" obj: " + chunks[0]] + ["      " + more for more in chunks[1:]]
    lines.append("Subject To")
    for label, row, bound in zip(
        constraints.row_labels, constraints.a_ub, constraints.b_ub
    ):
        chunks = _lp_terms(row)
        lines.append(f" {label}: " + chunks[0])
        lines += ["      " + more for more in chunks[1:]]
        lines[-1] += f" <= {bound:.12g}"
    chunks = _lp_terms(np.ones(constraints.n_cells))
    lines.append(" norm: " + chunks[0])
    lines += ["      " + more for more in chunks[1:]]
    lines[-1] += " = 1"
    lines.append("Bounds")
    lines.append("\\ all weights default to s >= 0")
    lines.append("End")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines))
        handle.write("\n")
