"""Bath spectral densities.

The production density is the piezoelectric form for GaAs double-dot devices,
``J(w) = alpha_pz * w * (1 - (w_d/w) sin(w/w_d)) * exp(-w^2 / 2 w_l^2)``,
cubic at low frequency with a Gaussian high-frequency cutoff.  A unit-weight
Lorentzian density with a closed-form finite-interval Hilbert transform ships
as an analytic fixture for the principal-value machinery.

Units: all energies in units of the cutoff scale ``w_l`` (so ``w_l = 1``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import DEFAULT_QUAD, QuadratureSpec, adaptive_integrate

__all__ = [
    "SpectralDensityParams",
    "SpectralDensity",
    "PiezoelectricDensity",
    "LorentzianDensity",
    "evaluate_J",
    "total_weight",
]

# Below x = w/w_d < SERIES_SWITCH the direct formula loses ~6 digits to
# cancellation in 1 - sin(x)/x; the 4-term series is then exact to machine
# precision, keeping the two branches consistent to better than 1e-10.
SERIES_SWITCH = 0.05


@dataclass(frozen=True)
class SpectralDensityParams:
    """Parameters of the piezoelectric density.

    alpha_pz: dimensionless coupling strength (>= 0)
    omega_d: ripple scale, units of w_l (> 0)
    omega_l: Gaussian cutoff scale, fixed to 1 by the unit convention
    """

    alpha_pz: float
    omega_d: float
    omega_l: float = 1.0

    def __post_init__(self):
        if self.alpha_pz < 0:
            raise DomainError("alpha_pz must be non-negative")
        if self.omega_d <= 0:
            raise DomainError("omega_d must be positive")
        if self.omega_l != 1.0:
            raise DomainError("omega_l is fixed to 1 by the unit convention")


class SpectralDensity:
    """A rule w -> J(w) for w >= 0, with a name and parameters."""

    name = "abstract"

    def evaluate(self, omega):
        raise NotImplementedError

    def __call__(self, omega):
        return self.evaluate(omega)


class PiezoelectricDensity(SpectralDensity):
    name = "piezoelectric"

    def __init__(self, params: SpectralDensityParams):
        self.params = params

    def evaluate(self, omega):
        return evaluate_J(self.params, omega)


class LorentzianDensity(SpectralDensity):
    """Unit-weight Lorentzian, a test fixture for the PV kernels.

    Not a physical bath density (J(0) > 0); its finite-interval Hilbert
    transform has a closed form, which makes it the analytic oracle for
    principal-value integration.
    """

    name = "lorentzian"

    def __init__(self, center: float, hwhm: float):
        if hwhm <= 0:
            raise DomainError("hwhm must be positive")
        self.center = float(center)
        self.hwhm = float(hwhm)

    def evaluate(self, omega):
        omega = np.asarray(omega, dtype=float)
        g = self.hwhm
        return (g / np.pi) / ((omega - self.center) ** 2 + g * g)

    def hilbert(self, omega: float, a: float, b: float) -> float:
        """Closed form of ``PV int_a^b L(x)/(omega - x) dx`` for a < omega < b.

        With z = center + i*hwhm, partial fractions give
        ``H = Im{ [log((b-z)/(a-z)) + log|(omega-a)/(omega-b)|] / (omega-z) } / pi``.
        """
        if not a < omega < b:
            raise DomainError("closed form assumes a < omega < b")
        z = complex(self.center, self.hwhm)
        num = np.log((b - z) / (a - z)) + np.log(abs((omega - a) / (omega - b)))
        return float(np.imag(num / (omega - z))) / np.pi


def evaluate_J(params: SpectralDensityParams, omega):
    """Piezoelectric density J(w); scalar in, scalar out (arrays pass through).

    Negative frequencies are a domain error.  Below ``w/w_d = 0.05`` the
    bracket ``1 - sin(x)/x`` switches to its Taylor series.
    """
    scalar = np.isscalar(omega)
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("spectral density is defined for omega >= 0")
    x = w / params.omega_d
    small = x < SERIES_SWITCH
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    series = (x2 / 6.0) * (1.0 - x2 / 20.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 60480.0)
    xd = np.where(small, 1.0, x)
    with np.errstate(invalid="ignore"):
        direct = 1.0 - np.sin(xd) / xd
    bracket = np.where(small, series, direct)
    out = params.alpha_pz * w * bracket * np.exp(-w * w / (2.0 * params.omega_l ** 2))
    return float(out) if scalar else out


def total_weight(density: SpectralDensity, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of J over [0, omega_max] by adaptive quadrature."""
    value, _ = adaptive_integrate(density.evaluate, 0.0, spec.omega_max, spec)
    return value
