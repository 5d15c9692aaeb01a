"""Conditional distributions of the detected power.

A pulse pair with condition x = (p_s, p_l, V, phi_c) and quantum phase
phi_q produces the interference power

    p = p_s + p_l + 2 V sqrt(p_s p_l) cos(phi_c + phi_q).

This module provides the cumulative distribution of p conditioned on x for
three phase models (Gaussian phi_q of width sigma_q, uniform phi_q, and
the single-arm cases where the power is deterministic), together with
exact averages of these CDFs over rectangular boxes of condition space.
The averages are the coefficients of the certification constraints.

Conventions: powers are full-scale [0, 1) floats; every CDF is
right-continuous, so P(a <= p < b) = F(b-) - F(a-) and step locations
carry their mass at the step; a degenerate interference term
2 V sqrt(p_s p_l) = 0 collapses the distribution to a point mass at
p_s + p_l.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .pulses import ConditionVector

TWO_PI = 2.0 * np.pi


class CdfModelError(ValueError):
    """Raised for invalid distribution kinds, cells, or arguments."""


class QuadratureError(RuntimeError):
    """Raised when a cell average cannot reach the requested tolerance.

    Carries the achieved absolute error estimate in .achieved.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class CdfKind:
    """Distribution family tag used by averaged evaluations.

    variant is one of "gaussian-phase" (needs sigma_q), "uniform-phase",
    "step-short", "step-long".
    """

    variant: str
    sigma_q: float | None = None

    _VARIANTS = ("gaussian-phase", "uniform-phase", "step-short", "step-long")

    def __post_init__(self) -> None:
        if self.variant not in self._VARIANTS:
            raise CdfModelError(f"unknown CDF kind {self.variant!r}")
        if self.variant == "gaussian-phase":
            if self.sigma_q is None or not self.sigma_q > 0.0:
                raise CdfModelError("gaussian-phase kind needs sigma_q > 0")
        elif self.sigma_q is not None:
            raise CdfModelError(f"{self.variant} kind takes no sigma_q")

    @classmethod
    def gaussian_phase(cls, sigma_q: float) -> "CdfKind":
        return cls("gaussian-phase", sigma_q)

    @classmethod
    def uniform_phase(cls) -> "CdfKind":
        return cls("uniform-phase")

    @classmethod
    def step_short(cls) -> "CdfKind":
        return cls("step-short")

    @classmethod
    def step_long(cls) -> "CdfKind":
        return cls("step-long")


@dataclass(frozen=True)
class CellBox:
    """Axis-aligned box [p_s] x [p_l] x [V] of condition space.

    The instrument phase phi_c is deliberately not an axis: certification
    treats it adversarially (worst case per cell) rather than as a covered
    dimension.
    """

    p_s_lo: float
    p_s_hi: float
    p_l_lo: float
    p_l_hi: float
    v_lo: float
    v_hi: float

    def __post_init__(self) -> None:
        pairs = (
            (self.p_s_lo, self.p_s_hi),
            (self.p_l_lo, self.p_l_hi),
            (self.v_lo, self.v_hi),
        )
        for lo, hi in pairs:
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise CdfModelError(f"invalid cell interval [{lo}, {hi}]")
        if self.p_s_lo < 0.0 or self.p_l_lo < 0.0 or self.v_lo < 0.0:
            raise CdfModelError("cell extends below zero")
        if self.v_hi > 1.0:
            raise CdfModelError("visibility above 1")
        peak = (
            self.p_s_hi
            + self.p_l_hi
            + 2.0 * self.v_hi * np.sqrt(self.p_s_hi * self.p_l_hi)
        )
        if peak > 1.0 + 1e-9:
            raise CdfModelError(
                f"cell corner exceeds full scale (peak power {peak:.6f})"
            )

    @classmethod
    def from_point(cls, x: ConditionVector) -> "CellBox":
        return cls(x.p_s, x.p_s, x.p_l, x.p_l, x.visibility, x.visibility)

    @property
    def center(self) -> tuple[float, float, float]:
        return (
            0.5 * (self.p_s_lo + self.p_s_hi),
            0.5 * (self.p_l_lo + self.p_l_hi),
            0.5 * (self.v_lo + self.v_hi),
        )

    def support(self) -> tuple[float, float]:
        """Hull of the interference power support over the cell."""
        lo = self.p_s_lo + self.p_l_lo - 2.0 * self.v_hi * np.sqrt(
            self.p_s_hi * self.p_l_hi
        )
        hi = self.p_s_hi + self.p_l_hi + 2.0 * self.v_hi * np.sqrt(
            self.p_s_hi * self.p_l_hi
        )
        return float(lo), float(hi)


def interference_support(x: ConditionVector) -> tuple[float, float]:
    d = 2.0 * x.visibility * np.sqrt(x.p_s * x.p_l)
    m = x.p_s + x.p_l
    return m - d, m + d


def default_wrap_terms(sigma_q: float, phi_c: float) -> int:
    """Terms needed so the discarded image-sum tail is below 1e-12.

    Includes every n with |2 pi n| <= |phi_c| + pi + 8 sigma_q; the window
    reaches 8 standard deviations past the farthest relevant branch.
    """
    return max(1, int(np.ceil((abs(phi_c) + np.pi + 8.0 * sigma_q) / TWO_PI)))


def cdf_gaussian_phase(
    p,
    x: ConditionVector,
    sigma_q: float,
    wrap_terms: int | None = None,
):
    """P(power <= p | x) for phi_q ~ N(0, sigma_q^2).

    Sums the Gaussian mass of the phase arcs where the cosine exceeds the
    threshold, over enough 2 pi images of the line to bound the truncation
    error below 1e-12.  Scalar or array p.
    """
    if not sigma_q > 0.0:
        raise CdfModelError("sigma_q must be positive")
    if wrap_terms is None:
        wrap_terms = default_wrap_terms(sigma_q, x.phi_c)
    elif wrap_terms < 1:
        raise CdfModelError("wrap_terms must be at least 1")
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    m = x.p_s + x.p_l
    denom = 2.0 * x.visibility * np.sqrt(x.p_s * x.p_l)
    if denom == 0.0:
        out = (p_arr >= m).astype(float)
        return out if np.ndim(p) else float(out[0])
    with np.errstate(invalid="ignore"):
        c = (p_arr - m) / denom
    phi_det = np.arccos(np.clip(c, -1.0, 1.0))
    shifts = TWO_PI * np.arange(-wrap_terms, wrap_terms + 1)[:, None]
    upper = (phi_det[None, :] - x.phi_c + shifts) / sigma_q
    lower = (-phi_det[None, :] - x.phi_c + shifts) / sigma_q
    above = np.sum(ndtr(upper) - ndtr(lower), axis=0)
    out = np.clip(1.0 - above, 0.0, 1.0)
    out[c <= -1.0] = 0.0
    out[c >= 1.0] = 1.0
    return out if np.ndim(p) else float(out[0])


def cdf_uniform_phase(p, x: ConditionVector):
    """P(power <= p | x) for phi_q uniform on [0, 2 pi).

    The arcsine-law CDF 1 - arccos(c)/pi with the threshold cosine clamped
    to [-1, 1]; the instrument phase drops out entirely.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    m = x.p_s + x.p_l
    denom = 2.0 * x.visibility * np.sqrt(x.p_s * x.p_l)
    if denom == 0.0:
        out = (p_arr >= m).astype(float)
    else:
        with np.errstate(invalid="ignore"):
            c = np.clip((p_arr - m) / denom, -1.0, 1.0)
        out = 1.0 - np.arccos(c) / np.pi
    return out if np.ndim(p) else float(out[0])


def cdf_single_arm(p, x: ConditionVector, arm: str):
    """Step CDF of a blocked-arm measurement; theta(0) = 1."""
    if arm not in ("short", "long"):
        raise CdfModelError(f"arm must be 'short' or 'long', got {arm!r}")
    level = x.p_s if arm == "short" else x.p_l
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    out = (p_arr >= level).astype(float)
    return out if np.ndim(p) else float(out[0])


def evaluate_cdf(p, x: ConditionVector, kind: CdfKind):
    if kind.variant == "gaussian-phase":
        return cdf_gaussian_phase(p, x, kind.sigma_q)
    if kind.variant == "uniform-phase":
        return cdf_uniform_phase(p, x)
    return cdf_single_arm(p, x, "short" if kind.variant == "step-short" else "long")


def interval_probability(lo, hi, x: ConditionVector, kind: CdfKind):
    """P(lo <= p < hi | x) with step atoms assigned by half-open bins."""
    lo_arr = np.atleast_1d(np.asarray(lo, dtype=float))
    hi_arr = np.atleast_1d(np.asarray(hi, dtype=float))
    if np.any(lo_arr > hi_arr):
        raise CdfModelError("interval must have lo <= hi")
    scalar = np.ndim(lo) == 0 and np.ndim(hi) == 0
    denom = 2.0 * x.visibility * np.sqrt(x.p_s * x.p_l)
    if kind.variant in ("step-short", "step-long") or (
        kind.variant in ("gaussian-phase", "uniform-phase") and denom == 0.0
    ):
        if kind.variant == "step-short":
            atom = x.p_s
        elif kind.variant == "step-long":
            atom = x.p_l
        else:
            atom = x.p_s + x.p_l
        out = ((lo_arr <= atom) & (atom < hi_arr)).astype(float)
    else:
        out = np.asarray(
            evaluate_cdf(hi_arr, x, kind) - evaluate_cdf(lo_arr, x, kind)
        )
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def wrapped_normal_mass(a, b, sigma: float):
    """Mass of N(0, sigma^2) mod 2 pi falling in the arc [a, b].

    a and b are angles with b - a the arc width (clipped to [0, 2 pi]);
    the arc may sit anywhere on the line, images are recentered before
    summing.  Vectorized over matching-shape a, b.
    """
    if not sigma > 0.0:
        raise CdfModelError("sigma must be positive")
    a_arr, b_arr = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    scalar = a_arr.ndim == 0
    a_arr = np.atleast_1d(a_arr).astype(float)
    b_arr = np.atleast_1d(b_arr).astype(float)
    width = np.clip(b_arr - a_arr, 0.0, TWO_PI)
    center = 0.5 * (a_arr + b_arr)
    center = center - TWO_PI * np.round(center / TWO_PI)
    n_terms = max(1, int(np.ceil((TWO_PI + 8.0 * sigma) / TWO_PI)))
    shifts = TWO_PI * np.arange(-n_terms, n_terms + 1).reshape(
        (-1,) + (1,) * a_arr.ndim
    )
    hi = (center + 0.5 * width + shifts) / sigma
    lo = (center - 0.5 * width + shifts) / sigma
    mass = np.clip(np.sum(ndtr(hi) - ndtr(lo), axis=0), 0.0, 1.0)
    mass[width <= 0.0] = 0.0
    mass[width >= TWO_PI] = 1.0
    return float(mass[0]) if scalar else mass


def _arccos_ps_integral(c0, b, t0, t1) -> np.ndarray:
    """Integral over p_s of arccos(clip((c0 - p_s) / (b sqrt(p_s)), -1, 1)).

    c0 = p - p_l and b = 2 V sqrt(p_l); the p_s range is [t0^2, t1^2].
    Substituting t = sqrt(p_s) and integrating by parts leaves a
    remainder that is linear over the square root of a quadratic in t^2,
    so the whole integral is elementary.  The clip boundaries are the
    roots of t^2 -+ b t - c0, splitting [t0, t1] into at most one
    unclipped piece between two saturated ones.  All inputs broadcast.

    Doing this direction exactly is what keeps the outer quadrature
    cheap: the integrand seen by the (p_l, V) panels is C^2-smooth up to
    a 5/2-power kink, instead of the square-root kink a fully numeric
    p_s direction would present.
    """
    c0, b, t0, t1 = np.broadcast_arrays(
        np.asarray(c0, dtype=float), b, t0, t1
    )
    disc4 = b * b + 4.0 * c0
    clipped_all = disc4 <= 0.0
    sq = np.sqrt(np.maximum(disc4, 0.0))
    tau_lo = np.where(c0 > 0.0, 0.5 * (sq - b), 0.5 * (b - sq))
    left_const = np.where(c0 > 0.0, 0.0, np.pi)
    tau_hi = 0.5 * (b + sq)
    ta = np.clip(tau_lo, t0, t1)
    tb = np.maximum(ta, np.clip(tau_hi, t0, t1))

    out = left_const * (ta * ta - t0 * t0) + np.pi * (t1 * t1 - tb * tb)

    middle = ~clipped_all & (tb > ta)
    if np.any(middle):
        c0m, bm = c0[middle], b[middle]
        sqm = sq[middle]
        s_sum = bm * bm + 2.0 * c0m
        dn = bm * sqm
        dn = np.where(dn > 0.0, dn, 1.0)

        def anti(t):
            y = t * t
            bt = bm * t
            g = np.where(bt > 0.0, (c0m - y) / np.where(bt > 0.0, bt, 1.0), 0.0)
            radicand = bm * bm * y - (c0m - y) ** 2
            return (
                y * np.arccos(np.clip(g, -1.0, 1.0))
                + 0.5 * np.sqrt(np.maximum(radicand, 0.0))
                - 0.5
                * (0.5 * s_sum + c0m)
                * np.arcsin(np.clip((2.0 * y - s_sum) / dn, -1.0, 1.0))
            )

        out[middle] += anti(tb[middle]) - anti(ta[middle])

    out[clipped_all] = (np.pi * (t1 * t1 - t0 * t0))[clipped_all]
    return out


_GL_LOW = leggauss(3)
_GL_HIGH = leggauss(7)
# elements per vectorized evaluation chunk / per stored panel-row block
_EVAL_BUDGET = 2_000_000
_STORE_BUDGET = 8_000_000


def _split_squares(panels: np.ndarray) -> np.ndarray:
    # children stay adjacent to their parent so np.repeat of the parents'
    # cell ids lines up with the child rows
    um = 0.5 * (panels[:, 0] + panels[:, 1])
    vm = 0.5 * (panels[:, 2] + panels[:, 3])
    quads = np.stack(
        [
            np.stack([panels[:, 0], um, panels[:, 2], vm], axis=1),
            np.stack([um, panels[:, 1], panels[:, 2], vm], axis=1),
            np.stack([panels[:, 0], um, vm, panels[:, 3]], axis=1),
            np.stack([um, panels[:, 1], vm, panels[:, 3]], axis=1),
        ],
        axis=1,
    )
    return quads.reshape(-1, 4)


def _uniform_phase_block(
    p_arr: np.ndarray,
    boxes: np.ndarray,
    rel_tol: float,
    abs_tol: float,
    max_rounds: int = 400,
) -> np.ndarray:
    """Cell means of the uniform-phase CDF for a block of cells.

    boxes rows are (p_s_lo, p_s_hi, p_l_lo, p_l_hi, v_lo, v_hi); the
    return value has one row per box with the mean CDF at each p.  Panels
    live in each cell's unit square, so degenerate box edges need no
    special casing, and panels from every cell share the same vectorized
    rule evaluations.  Refinement is global within a cell: panels holding
    the largest share of the low/high rule disagreement are quadsected
    until the per-value error sum meets the tolerance.  A per-panel
    acceptance test would never terminate on the square-root behavior at
    the support boundary; the global budget converges there geometrically.
    """
    n_c = boxes.shape[0]
    n_v = p_arr.size
    abs_floor = abs_tol
    t0c, t1c = np.sqrt(boxes[:, 0]), np.sqrt(boxes[:, 1])
    wps = boxes[:, 1] - boxes[:, 0]
    pl_lo, wpl = boxes[:, 2], boxes[:, 3] - boxes[:, 2]
    v_lo, wvv = boxes[:, 4], boxes[:, 5] - boxes[:, 4]
    # p_s is integrated in closed form; quadrature panels span (p_l, V)
    wps_safe = np.where(wps > 0.0, wps, 1.0)
    deg_ps = wps == 0.0

    def evaluate(cid: np.ndarray, up: np.ndarray):
        n_p = up.shape[0]
        contrib = np.empty((n_p, n_v))
        errrows = np.empty((n_p, n_v))
        chunk = max(1, _EVAL_BUDGET // (49 * max(n_v, 1)))
        for s in range(0, n_p, chunk):
            sl = slice(s, min(s + chunk, n_p))
            c, u = cid[sl], up[sl]
            rules = []
            for nodes, weights in (_GL_LOW, _GL_HIGH):
                us = (
                    0.5 * (u[:, 0] + u[:, 1])[:, None]
                    + 0.5 * (u[:, 1] - u[:, 0])[:, None] * nodes[None, :]
                )
                vs = (
                    0.5 * (u[:, 2] + u[:, 3])[:, None]
                    + 0.5 * (u[:, 3] - u[:, 2])[:, None] * nodes[None, :]
                )
                pl = pl_lo[c][:, None, None] + us[:, :, None] * wpl[c][:, None, None]
                vv = v_lo[c][:, None, None] + vs[:, None, :] * wvv[c][:, None, None]
                c0 = p_arr[None, None, None, :] - pl[..., None]
                b = (2.0 * vv * np.sqrt(pl))[..., None]
                t0 = t0c[c][:, None, None, None]
                t1 = t1c[c][:, None, None, None]
                acos_int = _arccos_ps_integral(c0, b, t0, t1)
                f = 1.0 - acos_int / (np.pi * wps_safe[c][:, None, None, None])
                if bool(np.any(deg_ps[c])):
                    # zero-width p_s edge: the mean is the point CDF; a
                    # zero-amplitude point mass at p = center counts as 1
                    bt = b * t0
                    num = c0 - t0 * t0
                    g = np.where(
                        bt > 0.0,
                        num / np.where(bt > 0.0, bt, 1.0),
                        np.where(num >= 0.0, np.inf, -np.inf),
                    )
                    point_f = 1.0 - np.arccos(np.clip(g, -1.0, 1.0)) / np.pi
                    f = np.where(deg_ps[c][:, None, None, None], point_f, f)
                rules.append(0.25 * np.einsum("prsk,r,s->pk", f, weights, weights))
            frac = (u[:, 1] - u[:, 0]) * (u[:, 3] - u[:, 2])
            contrib[sl] = rules[1] * frac[:, None]
            errrows[sl] = np.abs(rules[1] - rules[0]) * frac[:, None]
        return contrib, errrows

    out = np.empty((n_c, n_v))
    alive = np.ones(n_c, dtype=bool)
    pcell = np.arange(n_c)
    panels = np.tile(np.array([[0.0, 1.0, 0.0, 1.0]]), (n_c, 1))
    contrib, errrows = evaluate(pcell, panels)
    # worklist ceiling sized by stored row memory, not by cell count
    cap = max(20_000, _STORE_BUDGET // max(n_v, 1))

    def worst_rel_err(est, toterr):
        r = toterr / np.maximum(np.abs(est), abs_floor)
        return float(r[alive].max())

    for _ in range(max_rounds):
        # panels stay sorted by cell, so per-cell sums are reduceat slices
        counts = np.bincount(pcell, minlength=n_c)
        starts = np.cumsum(counts) - counts
        have = counts > 0
        est = np.zeros((n_c, n_v))
        toterr = np.zeros((n_c, n_v))
        est[have] = np.add.reduceat(contrib, starts[have], axis=0)
        toterr[have] = np.add.reduceat(errrows, starts[have], axis=0)
        tol = np.maximum(rel_tol * np.abs(est), abs_floor)
        newly = alive & np.all(toterr <= tol, axis=1)
        out[newly] = est[newly]
        alive &= ~newly
        if not np.any(alive):
            return out
        keep = alive[pcell]
        pcell, panels = pcell[keep], panels[keep]
        contrib, errrows = contrib[keep], errrows[keep]

        score = (errrows / tol[pcell]).max(axis=1)
        cellmax = np.zeros(n_c)
        np.maximum.at(cellmax, pcell, score)
        split = score >= 0.25 * cellmax[pcell]
        room = cap - panels.shape[0] + int(split.sum())
        if 4 * int(split.sum()) > room:
            # near the memory ceiling: spend the budget on the worst
            # panels only, so refinement keeps moving where it matters
            allowed = room // 4
            if allowed < 1:
                raise QuadratureError(
                    "cell average did not converge (achieved relative "
                    f"error {worst_rel_err(est, toterr):.2e})",
                    achieved=worst_rel_err(est, toterr),
                )
            idx = np.flatnonzero(split)
            keep_idx = idx[np.argsort(score[idx])[::-1][:allowed]]
            split = np.zeros_like(split)
            split[keep_idx] = True
        children = _split_squares(panels[split])
        ccell = np.repeat(pcell[split], 4)
        child_contrib, child_err = evaluate(ccell, children)
        pcell = np.concatenate([pcell[~split], ccell])
        panels = np.concatenate([panels[~split], children])
        contrib = np.concatenate([contrib[~split], child_contrib])
        errrows = np.concatenate([errrows[~split], child_err])
        order = np.argsort(pcell, kind="stable")
        pcell, panels = pcell[order], panels[order]
        contrib, errrows = contrib[order], errrows[order]

    counts = np.bincount(pcell, minlength=n_c)
    starts = np.cumsum(counts) - counts
    have = counts > 0
    est = np.zeros((n_c, n_v))
    toterr = np.zeros((n_c, n_v))
    est[have] = np.add.reduceat(contrib, starts[have], axis=0)
    toterr[have] = np.add.reduceat(errrows, starts[have], axis=0)
    raise QuadratureError(
        "cell average did not converge (achieved relative error "
        f"{worst_rel_err(est, toterr):.2e})",
        achieved=worst_rel_err(est, toterr),
    )


def _step_mean(p_arr: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return (p_arr >= lo).astype(float)
    with np.errstate(invalid="ignore"):
        out = np.clip((p_arr - lo) / (hi - lo), 0.0, 1.0)
    out[np.isneginf(p_arr)] = 0.0
    out[np.isposinf(p_arr)] = 1.0
    return out


def _cell_box_rows(cells) -> np.ndarray:
    return np.array(
        [
            [c.p_s_lo, c.p_s_hi, c.p_l_lo, c.p_l_hi, c.v_lo, c.v_hi]
            for c in cells
        ],
        dtype=float,
    )


def cell_averaged_cdf(
    p,
    cell: CellBox,
    kind: CdfKind,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-6,
):
    """Average of F(p | x) over x uniform on the cell.

    The V integral of the uniform-phase CDF is done in closed form; the
    remaining (p_s, p_l) integration adapts panels until the error
    estimate at every p meets max(rel_tol * mean, abs_tol).  The absolute
    floor matters: near support corners the integrand has a 3/2-power
    kink whose refinement cost grows as abs_tol**(-2/3), and a floor of
    1e-6 on a probability is still far below the statistical slack of
    any constraint built from it.  Step kinds reduce to the
    exact ramp over the relevant arm interval.  gaussian-phase averages
    are refused: without phi_c as a cell axis they are not defined, and
    certification uses the uniform-phase kernel for averaged statistics.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    scalar = np.ndim(p) == 0

    if kind.variant == "gaussian-phase":
        raise CdfModelError(
            "gaussian-phase cell averages are undefined: cells carry no "
            "phi_c axis (it is maximized adversarially, not averaged)"
        )

    if kind.variant in ("step-short", "step-long"):
        if kind.variant == "step-short":
            lo, hi = cell.p_s_lo, cell.p_s_hi
        else:
            lo, hi = cell.p_l_lo, cell.p_l_hi
        out = _step_mean(p_arr, lo, hi)
        return float(out[0]) if scalar else out

    out = _uniform_phase_block(p_arr, _cell_box_rows([cell]), rel_tol, abs_tol)[0]
    out = np.clip(out, 0.0, 1.0)
    out[np.isneginf(p_arr)] = 0.0
    out[np.isposinf(p_arr)] = 1.0
    return float(out[0]) if scalar else out


def cell_averaged_cdf_table(
    p, cells, kind: CdfKind, rel_tol: float = 1e-8, abs_tol: float = 1e-6
) -> np.ndarray:
    """Cell averages of F(p | x) for many cells sharing one value vector.

    Returns shape (len(cells), len(p)), row i matching
    cell_averaged_cdf(p, cells[i], kind).  The uniform-phase quadrature
    batches every cell's panels into shared vector operations, which is
    what makes constraint tables over thousands of cells practical.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if p_arr.ndim != 1:
        raise CdfModelError("p must be a scalar or a one-dimensional array")

    if kind.variant == "gaussian-phase":
        raise CdfModelError(
            "gaussian-phase cell averages are undefined: cells carry no "
            "phi_c axis (it is maximized adversarially, not averaged)"
        )

    cells = list(cells)
    if kind.variant in ("step-short", "step-long"):
        out = np.empty((len(cells), p_arr.size))
        for i, cell in enumerate(cells):
            if kind.variant == "step-short":
                out[i] = _step_mean(p_arr, cell.p_s_lo, cell.p_s_hi)
            else:
                out[i] = _step_mean(p_arr, cell.p_l_lo, cell.p_l_hi)
        return out

    boxes = _cell_box_rows(cells)
    out = np.empty((len(cells), p_arr.size))
    # support hull per cell: below it the mean is exactly 0, above exactly 1
    sup_lo = boxes[:, 0] + boxes[:, 2] - 2.0 * boxes[:, 5] * np.sqrt(
        boxes[:, 1] * boxes[:, 3]
    )
    sup_hi = boxes[:, 1] + boxes[:, 3] + 2.0 * boxes[:, 5] * np.sqrt(
        boxes[:, 1] * boxes[:, 3]
    )
    for start, stop in _value_blocks(len(cells), p_arr.size):
        # consecutive cells share similar support, so one value window
        # per block trims the saturated columns from the whole worklist
        blo = float(sup_lo[start:stop].min())
        bhi = float(sup_hi[start:stop].max())
        win = (p_arr > blo) & (p_arr < bhi)
        sub = out[start:stop]
        sub[:, p_arr <= blo] = 0.0
        sub[:, p_arr >= bhi] = 1.0
        if bool(np.any(win)):
            sub[:, win] = _uniform_phase_block(
                p_arr[win], boxes[start:stop], rel_tol, abs_tol
            )
    np.clip(out, 0.0, 1.0, out=out)
    out[:, np.isneginf(p_arr)] = 0.0
    out[:, np.isposinf(p_arr)] = 1.0
    return out


def _value_blocks(n_cells: int, n_values: int):
    cap = max(20_000, _STORE_BUDGET // max(n_values, 1))
    block = max(8, min(1024, cap // 1024))
    for start in range(0, n_cells, block):
        yield start, min(start + block, n_cells)
