"""Dressed fluctuator correlator: damping, level shift, spectral function.

The fluctuator's transverse correlator in the dressed frame is a resonance at
the renormalized frequency ``omega_B`` (the root of ``w - eta*dB - R(w) = 0``)
with damping ``gamma(w)``.  Its spectral function

    G(w) = (gamma(|w|)/pi) / [(|w| - eta*dB - R(|w|))^2 + gamma(|w|)^2]

acts on the qubit as a structured effective bath.  ``R`` is a principal-value
integral over the bath density and is expensive; it is tabulated on a master
grid and interpolated by monotone cubics everywhere else (it is smooth on the
bath's scales, never on the resonance width).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericsError
from .numerics import DEFAULT_QUAD, QuadratureSpec, adaptive_integrate, bracketed_root, principal_value
from .renorm import SystemParams, coth_half
from .spectral import SpectralDensity

__all__ = [
    "GridSpec",
    "TLFGreenTable",
    "gamma_of",
    "R_of",
    "G_of",
    "split_G",
    "solve_omega_B",
    "lorentzian_Jprime",
    "build_omega_grid",
    "build_green_table",
]


@dataclass(frozen=True)
class GridSpec:
    """Frequency-grid layout for the tabulated spectral functions.

    Dense windows track the fluctuator resonance (width ``gamma_B``) and the
    qubit line (width ``g0``); everything else is coarse.  All windows are
    mirrored to negative frequencies.
    """

    omega_max: float = 10.0
    coarse_points: int = 401          # over [-omega_max, omega_max]
    medium_span: float = 4.0
    medium_step: float = 0.02
    resonance_halfwidths: float = 10.0   # window A: omega_B +- N*gamma_B
    resonance_step_frac: float = 1 / 20  # spacing as fraction of gamma_B
    qubit_halfwidths: float = 3.0        # window B: delta_A +- N*g0
    qubit_step_frac: float = 1 / 20      # spacing as fraction of g0
    pad_ratio: float = 1.4


def gamma_of(omega, eta: float, params: SystemParams, density: SpectralDensity):
    """Fluctuator damping ``pi (eta dB)^2 J(w) coth(beta w/2) / (w + eta dB)^2``.

    Finite at w -> 0 (the cubic density beats the 1/w of coth).
    """
    omega = np.asarray(omega, dtype=float)
    c = eta * params.delta_B
    pref = (c / (omega + c)) ** 2
    out = np.pi * pref * density.evaluate(omega) * coth_half(omega, params.beta)
    return float(out) if out.ndim == 0 else out


def R_of(
    omega: float,
    eta: float,
    params: SystemParams,
    density: SpectralDensity,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Level-shift function: principal value of the dressed bath kernel.

    ``R(w) = PV int_0^Om (eta dB)^2 J(w') coth(beta w'/2) / [(w'+eta dB)^2 (w-w')] dw'``
    evaluated at ``|w|`` (the spectral function is even).
    """
    w = abs(float(omega))
    c = eta * params.delta_B

    def kernel(x):
        return (c / (x + c)) ** 2 * density.evaluate(x) * coth_half(x, params.beta)

    # PV convention of the kernel is 1/(x - x0); ours is 1/(w - x)
    return -principal_value(kernel, w, 0.0, spec.omega_max, spec)


def G_of(omega, R_abs, gamma_abs, eta: float, delta_B: float):
    """Spectral function from tabulated R(|w|) and gamma(|w|)."""
    omega = np.abs(np.asarray(omega, dtype=float))
    bracket = omega - eta * delta_B - np.asarray(R_abs, dtype=float)
    g = np.asarray(gamma_abs, dtype=float)
    out = (g / np.pi) / (bracket * bracket + g * g)
    return float(out) if out.ndim == 0 else out


def split_G(omega, G, beta: float):
    """Detailed-balance split ``G1 = G/(1+e^{-bw})``, ``G2 = G/(1+e^{bw})``.

    Overflow-safe: saturates to (G, 0) for large positive ``beta*omega`` and
    handles the zero-temperature sentinel exactly.
    """
    omega = np.asarray(omega, dtype=float)
    G = np.asarray(G, dtype=float)
    if math.isinf(beta):
        G1 = np.where(omega > 0, G, np.where(omega == 0, 0.5 * G, 0.0))
        G2 = np.where(omega < 0, G, np.where(omega == 0, 0.5 * G, 0.0))
        return G1, G2
    x = beta * omega
    # logistic in a saturating form: 1/(1+e^{-x}) without overflow
    pos = x >= 0
    ex = np.exp(-np.abs(x))
    sig = np.where(pos, 1.0 / (1.0 + ex), ex / (1.0 + ex))
    return G * sig, G * (1.0 - sig)


def solve_omega_B(
    eta: float,
    params: SystemParams,
    density: SpectralDensity,
    spec: QuadratureSpec = DEFAULT_QUAD,
    tol: float = 1e-10,
) -> float:
    """Unique root of ``w - eta*dB - R(w) = 0`` in (0, delta_B].

    Scans for a sign change, then refines with direct principal-value
    evaluations of R.  The root always sits below delta_B for densities that
    push spectral weight above the fluctuator line.
    """

    def f(w):
        return w - eta * params.delta_B - R_of(w, eta, params, density, spec)

    lo = 1e-6
    scan = np.linspace(lo, params.delta_B, 41)
    flo = f(lo)
    if abs(flo) < tol:
        return lo
    prev_w, prev_f = lo, flo
    for w in scan[1:]:
        fw = f(w)
        if abs(fw) < tol:
            return float(w)
        if prev_f * fw < 0:
            return bracketed_root(f, prev_w, w, tol=tol)
        prev_w, prev_f = w, fw
    raise NumericsError(
        "no root of the resonance condition in (0, delta_B]; "
        "spectral density may be pathological", bracket=(lo, params.delta_B))


def lorentzian_Jprime(omega, g0: float, omega_B: float, gamma_B: float):
    """Lorentzian approximation of the effective density seen by the qubit.

    ``J'(w) ~ g0^2 (gamma_B/pi) / [(w - omega_B)^2 + gamma_B^2]``; used for
    pole estimates and comparison output, never in the exact kernel.
    """
    omega = np.asarray(omega, dtype=float)
    out = g0 * g0 * (gamma_B / np.pi) / ((omega - omega_B) ** 2 + gamma_B ** 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TLFGreenTable:
    """Tabulated fluctuator spectral data on a symmetric frequency grid.

    Immutable once built; safe to share across threads.  ``params`` and
    ``density`` are retained so later stages can evaluate the closed-form
    parts off-grid; ``R_interp`` is the monotone-cubic interpolant of R on
    the positive master grid.
    """

    omega_grid: np.ndarray
    R_values: np.ndarray
    gamma_values: np.ndarray
    G_values: np.ndarray
    G1_values: np.ndarray
    G2_values: np.ndarray
    omega_B: float
    gamma_at_omega_B: float
    eta: float
    params: SystemParams
    density: SpectralDensity
    R_interp: PchipInterpolator = field(repr=False)
    quad: QuadratureSpec = DEFAULT_QUAD

    def R_at(self, omega):
        """R(|w|) from the master-grid interpolant."""
        return self.R_interp(np.abs(np.asarray(omega, dtype=float)))

    def gamma_at(self, omega):
        return gamma_of(np.abs(np.asarray(omega, dtype=float)), self.eta,
                        self.params, self.density)

    def G_at(self, omega):
        """G(w) evaluated off-grid: closed-form gamma, interpolated R."""
        w = np.abs(np.asarray(omega, dtype=float))
        return G_of(w, self.R_at(w), self.gamma_at(w), self.eta, self.params.delta_B)

    def Jprime_at(self, omega, g0: float):
        """Effective qubit bath density g0^2 G(w) theta(w)."""
        omega = np.asarray(omega, dtype=float)
        out = np.where(omega > 0, g0 * g0 * self.G_at(omega), 0.0)
        return float(out) if out.ndim == 0 else out


def build_omega_grid(
    delta_A: float,
    g0: float,
    omega_B: float,
    gamma_B: float,
    grid: GridSpec = GridSpec(),
) -> np.ndarray:
    """Symmetric non-uniform grid: coarse base + dense feature windows + pads."""
    om = grid.omega_max
    pieces = [
        np.linspace(0.0, om, (grid.coarse_points + 1) // 2),
        np.arange(0.0, min(grid.medium_span, om), grid.medium_step),
        np.array([omega_B, delta_A]),
    ]

    def window(center, halfwidth, step):
        w = np.arange(-halfwidth, halfwidth + 0.5 * step, step)
        pad = halfwidth * grid.pad_ratio ** np.arange(1, 40)
        pad = pad[pad < halfwidth * grid.pad_ratio + 2.0]
        pad = pad[pad - halfwidth < 1.0]
        return center + np.concatenate([w, pad, -pad])

    if gamma_B > 0:
        pieces.append(window(omega_B, grid.resonance_halfwidths * gamma_B,
                             grid.resonance_step_frac * gamma_B))
    if g0 > 0:
        pieces.append(window(delta_A, grid.qubit_halfwidths * g0,
                             grid.qubit_step_frac * g0))
        # extra density right on the qubit line keeps the interpolated
        # self-energies accurate where the propagator poles sit
        pieces.append(delta_A + np.arange(-1.5 * g0, 1.5 * g0 + g0 / 120, g0 / 60))
    pos = np.concatenate(pieces)
    pos = pos[(pos > 0.0) & (pos < om)]
    pos = np.unique(np.concatenate([pos, [0.0, om]]))
    # drop near-duplicates that would make panel widths collapse
    min_sep = 1e-12 * om
    keep = np.concatenate([[True], np.diff(pos) > min_sep])
    pos = pos[keep]
    if pos[-1] != om:
        pos = np.append(pos, om)
    return np.concatenate([-pos[:0:-1], pos])


def _master_R_grid(omega_B: float, gamma_B: float, delta_A: float, g0: float,
                   om: float) -> np.ndarray:
    pieces = [
        np.linspace(1e-6, 0.5, 301),
        np.linspace(0.5, om - 1e-9, 151),
        np.geomspace(1e-6, 0.01, 25),
    ]
    for center, hw in ((omega_B, 40 * max(gamma_B, 1e-6)), (delta_A, 6 * max(g0, 1e-6))):
        w = center + np.linspace(-hw, hw, 81)
        pieces.append(w)
    g = np.concatenate(pieces)
    g = np.unique(g[(g > 0) & (g < om)])
    keep = np.concatenate([[True], np.diff(g) > 1e-13 * om])
    return g[keep]


def build_green_table(
    params: SystemParams,
    density: SpectralDensity,
    eta: float,
    grid: GridSpec = GridSpec(),
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> TLFGreenTable:
    """Tabulate R, gamma, G and the detailed-balance split on the shared grid."""
    omega_B = solve_omega_B(eta, params, density, spec)
    gamma_B = float(gamma_of(omega_B, eta, params, density))

    master = _master_R_grid(omega_B, gamma_B, params.delta_A, params.g0,
                            grid.omega_max)
    R_master = np.array([R_of(w, eta, params, density, spec) for w in master])
    R_interp = PchipInterpolator(master, R_master, extrapolate=True)

    omega_grid = build_omega_grid(params.delta_A, params.g0, omega_B, gamma_B, grid)
    absw = np.abs(omega_grid)
    R_values = R_interp(absw)
    gamma_values = gamma_of(absw, eta, params, density)
    G_values = G_of(omega_grid, R_values, gamma_values, eta, params.delta_B)
    G1_values, G2_values = split_G(omega_grid, G_values, params.beta)
    for arr in (omega_grid, R_values, gamma_values, G_values, G1_values, G2_values):
        arr.setflags(write=False)
    return TLFGreenTable(
        omega_grid=omega_grid, R_values=R_values, gamma_values=gamma_values,
        G_values=G_values, G1_values=G1_values, G2_values=G2_values,
        omega_B=omega_B, gamma_at_omega_B=gamma_B, eta=eta, params=params,
        density=density, R_interp=R_interp, quad=spec)
