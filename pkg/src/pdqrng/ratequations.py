"""Stochastic rate equations for a single-mode semiconductor laser.

The phase-diffusion source is a gain-switched laser; between pulses the
field is dominated by amplified spontaneous emission and the optical phase
performs Brownian motion.  The model integrated here tracks photon number P,
optical phase phi and carrier number N:

    dP/dt   = (G_L / sqrt(1 + p) - gamma) P + R_sp + F_P
    dphi/dt = (alpha / 2) (G_L - gamma)
              + (beta / 2) G_L p / (1 + sqrt(1 + p)) + F_phi
    dN/dt   = I / q - gamma_e N - G_L P / sqrt(1 + p) + F_N

with p = P / P_sat the saturation variable and R_sp = r_sp_coeff * N the
spontaneous emission rate into the mode.  The Langevin forces are white with
diffusion coefficients

    D_PP = R_sp            D_phiphi = R_sp / (4 P)
    D_NN = R_sp P + gamma_e N          D_PN = -R_sp P
    D_Pphi = D_Nphi = 0

so the integrated noise over a time T has variance 2 D T per coefficient.
Euler-Maruyama stepping is used; the phase is never wrapped, and the photon
number is floored at a small positive value so the phase diffusion rate
R_sp / (4 P) stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

ELEMENTARY_CHARGE = 1.602176634e-19


class RateEquationError(ValueError):
    """Raised for inadmissible rate-equation parameters."""


class IntegrationError(RuntimeError):
    """Raised when the requested step size violates the drift-step budget."""


@dataclass(frozen=True)
class LaserRateParams:
    """Laser and pump parameters for the rate-equation model.

    Rates are in 1/s, current in A, charge in C.  saturation_photons sets
    the photon number at which gain compression becomes order unity.
    photon_floor is the lower clamp applied to P during integration.
    """

    gain: float = 1.1e11
    loss: float = 1.0e11
    carrier_decay: float = 1.0e9
    henry_alpha: float = 3.0
    gain_phase_beta: float = 2.0
    spontaneous_coeff: float = 8.0e3
    current: float = 0.016
    charge: float = ELEMENTARY_CHARGE
    saturation_photons: float = 100.0
    photon_floor: float = 1e-3

    def __post_init__(self) -> None:
        for name in ("gain", "loss", "carrier_decay", "spontaneous_coeff",
                     "current", "charge", "saturation_photons", "photon_floor"):
            if getattr(self, name) <= 0.0:
                raise RateEquationError(f"{name} must be positive")


@dataclass
class RateTrajectory:
    """Integration result.  Arrays are shaped (n_records, n_paths)."""

    dt: float
    times: np.ndarray
    photons: np.ndarray
    phase: np.ndarray
    carriers: np.ndarray


def _drift(params: LaserRateParams, P: np.ndarray, N: np.ndarray):
    p = P / params.saturation_photons
    root = np.sqrt(1.0 + p)
    gain_sat = params.gain / root
    r_sp = params.spontaneous_coeff * N
    d_P = (gain_sat - params.loss) * P + r_sp
    d_phi = 0.5 * params.henry_alpha * (params.gain - params.loss) \
        + 0.5 * params.gain_phase_beta * params.gain * p / (1.0 + root)
    d_N = params.current / params.charge - params.carrier_decay * N - gain_sat * P
    return d_P, d_phi, d_N


def deterministic_fixed_point(params: LaserRateParams) -> tuple[float, float]:
    """Steady state (P*, N*) of the noise-free photon and carrier equations.

    Eliminates N through the carrier equation and solves the resulting
    scalar equation for P by bracketing and bisection.
    """
    pump = params.current / params.charge

    def carriers_of(P: float) -> float:
        root = np.sqrt(1.0 + P / params.saturation_photons)
        return (pump - params.gain * P / root) / params.carrier_decay

    def residual(P: float) -> float:
        root = np.sqrt(1.0 + P / params.saturation_photons)
        N = carriers_of(P)
        return (params.gain / root - params.loss) * P + params.spontaneous_coeff * N

    # Bracket the root on a log grid; P* lies below the pump-starvation point.
    p_max = pump / params.loss * 10.0
    grid = np.geomspace(params.photon_floor, p_max, 200)
    vals = [residual(P) for P in grid]
    for k in range(len(grid) - 1):
        if vals[k] == 0.0:
            return float(grid[k]), float(carriers_of(grid[k]))
        if vals[k] * vals[k + 1] < 0.0:
            P_star = brentq(residual, grid[k], grid[k + 1], xtol=1e-12, rtol=1e-14)
            # Newton polish: the residual slope is ~1e10/photon, so brentq's
            # position tolerance alone leaves an absolute residual of order
            # 1e-2 photons/s.
            for _ in range(4):
                h = max(1e-9 * P_star, 1e-12)
                slope = (residual(P_star + h) - residual(P_star - h)) / (2.0 * h)
                if slope == 0.0:
                    break
                P_star -= residual(P_star) / slope
            return float(P_star), float(carriers_of(P_star))
    raise RateEquationError("no deterministic fixed point bracketed; check pump and loss")


def integrate_rate_equations(
    params: LaserRateParams,
    duration: float,
    dt: float,
    seed: int = 0,
    n_paths: int = 1,
    initial: tuple[float, float, float] | None = None,
    noise_mask: tuple[bool, bool, bool] = (True, True, True),
    keep_path: bool = True,
) -> RateTrajectory:
    """Euler-Maruyama integration of the laser Langevin equations.

    Parameters
    ----------
    duration, dt : float
        Total integration time and step, in seconds.  The step must keep
        every deterministic drift increment below 10% of the variable's
        scale (P and N relative to their current values, phi relative to a
        full turn); a violation raises IntegrationError naming the variable.
    seed : int
        Seed for the Langevin forces.  Identical seeds reproduce identical
        trajectories.
    n_paths : int
        Number of independent realizations integrated in parallel.
    initial : (P0, phi0, N0), optional
        Defaults to the deterministic fixed point with phase 0.
    noise_mask : three bools
        Enables the Langevin force on (P, phi, N) individually.  Masking P
        and N while starting at the fixed point freezes the amplitude
        dynamics, which isolates pure phase diffusion.
    keep_path : bool
        If False only the initial and final states are recorded.

    Notes
    -----
    The (P, N) noise block has covariance 2 dt [[R_sp, -R_sp P],
    [-R_sp P, R_sp P + gamma_e N]], sampled through its Cholesky factor.
    The block is positive semidefinite only while
    gamma_e N >= R_sp P (P - 1); parameters violating that at run time
    raise RateEquationError rather than silently projecting the noise.
    """
    n_steps = int(round(duration / dt))
    if n_steps <= 0:
        raise RateEquationError("duration must cover at least one step")
    if initial is None:
        P0, N0 = deterministic_fixed_point(params)
        initial = (P0, 0.0, N0)

    rng = np.random.Generator(np.random.PCG64(seed))
    P = np.full(n_paths, float(initial[0]))
    phi = np.full(n_paths, float(initial[1]))
    N = np.full(n_paths, float(initial[2]))

    n_records = n_steps + 1 if keep_path else 2
    out_P = np.empty((n_records, n_paths))
    out_phi = np.empty((n_records, n_paths))
    out_N = np.empty((n_records, n_paths))
    out_t = np.empty(n_records)
    out_P[0], out_phi[0], out_N[0], out_t[0] = P, phi, N, 0.0

    mask_P, mask_phi, mask_N = (bool(m) for m in noise_mask)
    two_dt = 2.0 * dt

    for step in range(n_steps):
        d_P, d_phi, d_N = _drift(params, P, N)

        # Drift-step budget: 10% of the variable scale per step.
        if np.any(np.abs(d_P) * dt > 0.1 * np.maximum(P, params.photon_floor)):
            raise IntegrationError(
                f"photon drift step exceeds 10% at step {step}; reduce dt"
            )
        if np.any(np.abs(d_phi) * dt > 0.1 * 2.0 * np.pi):
            raise IntegrationError(
                f"phase drift step exceeds 10% of a turn at step {step}; reduce dt"
            )
        if np.any(np.abs(d_N) * dt > 0.1 * np.abs(N)):
            raise IntegrationError(
                f"carrier drift step exceeds 10% at step {step}; reduce dt"
            )

        r_sp = params.spontaneous_coeff * N
        c_pp = two_dt * r_sp
        c_pn = -two_dt * r_sp * P
        c_nn = two_dt * (r_sp * P + params.carrier_decay * N)

        # Cholesky of the correlated (P, N) block.
        det_scaled = c_pp * c_nn - c_pn * c_pn
        if np.any(det_scaled < -1e-12 * c_pp * c_nn):
            raise RateEquationError(
                "indefinite (P, N) diffusion block: gamma_e N < R_sp P (P - 1)"
            )
        l11 = np.sqrt(c_pp)
        l21 = c_pn / l11
        l22 = np.sqrt(np.maximum(c_nn - l21 * l21, 0.0))

        xi = rng.standard_normal((3, n_paths))
        n_P = l11 * xi[0] if mask_P else 0.0
        n_N = (l21 * xi[0] + l22 * xi[1]) if mask_N else 0.0
        n_phi = np.sqrt(two_dt * r_sp / (4.0 * P)) * xi[2] if mask_phi else 0.0

        P = np.maximum(P + d_P * dt + n_P, params.photon_floor)
        phi = phi + d_phi * dt + n_phi
        N = N + d_N * dt + n_N

        if keep_path:
            out_P[step + 1], out_phi[step + 1], out_N[step + 1] = P, phi, N
            out_t[step + 1] = (step + 1) * dt

    if not keep_path:
        out_P[1], out_phi[1], out_N[1] = P, phi, N
        out_t[1] = n_steps * dt

    return RateTrajectory(dt=dt, times=out_t, photons=out_P, phase=out_phi, carriers=out_N)


def phase_diffusion_sigma(params: LaserRateParams, duration: float) -> float:
    """Quantum-phase standard deviation accumulated over one pulse period.

    Evaluated at the deterministic fixed point: sigma^2 = R_sp T / (2 P*).
    Useful for matching a rate-equation configuration to the per-pulse
    Gaussian phase model.
    """
    P_star, N_star = deterministic_fixed_point(params)
    r_sp = params.spontaneous_coeff * N_star
    return float(np.sqrt(r_sp * duration / (2.0 * P_star)))
