"""Shared numerical kernels.

Adaptive Gauss-Kronrod quadrature, Cauchy principal-value integration (two
independent schemes), bracketed root refinement, damped fixed-point iteration
and a windowed one-sided cosine transform.  All kernels are deterministic:
identical inputs produce bit-identical outputs.

Integrand convention: every integrand passed to these kernels must accept a
1-d ``numpy`` array and return an array of the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, NumericsError

__all__ = [
    "QuadratureSpec",
    "adaptive_integrate",
    "principal_value",
    "principal_value_excision",
    "bracketed_root",
    "damped_fixed_point",
    "cosine_transform",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy contract for the adaptive quadrature kernels."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    omega_max: float = 10.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.omega_max <= 0:
            raise ValueError("omega_max must be positive")


DEFAULT_QUAD = QuadratureSpec()

# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
# Gauss-7 weights aligned with every other Kronrod node (indices 1,3,...,13).
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])
_GIDX = np.arange(1, 15, 2)


def _gk_batch(f, lows, highs):
    """Evaluate the GK15 rule on a batch of intervals with one integrand call."""
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    half = 0.5 * (highs - lows)
    mid = 0.5 * (highs + lows)
    x = mid[:, None] + half[:, None] * _XK[None, :]
    y = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = np.argwhere(~np.isfinite(y))
        raise NumericsError("integrand returned a non-finite value",
                            abscissa=float(x[bad[0][0], bad[0][1]]))
    ik = half * (y @ _WK)
    ig = half * (y[:, _GIDX] @ _WG)
    return ik, np.abs(ik - ig)


def adaptive_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    points: Sequence[float] = (),
) -> tuple[float, float]:
    """Globally adaptive GK15 integration of ``f`` over ``[a, b]``.

    ``points`` lists interior abscissae (integrable kinks, peak edges) used as
    initial panel boundaries.  Returns ``(value, error_estimate)`` with
    ``error_estimate <= max(abs_tol, rel_tol * |value|)`` on success.
    """
    a = float(a)
    b = float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise DomainError(f"integration bounds must be finite, got [{a}, {b}]")
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    brk = sorted({a, b, *(float(p) for p in points if a < p < b)})
    lows = np.array(brk[:-1])
    highs = np.array(brk[1:])
    vals, errs = _gk_batch(f, lows, highs)
    lows, highs = list(lows), list(highs)
    vals, errs = list(vals), list(errs)
    width_floor = 50 * np.finfo(float).eps * max(abs(a), abs(b), 1.0)
    dead = [highs[i] - lows[i] < width_floor for i in range(len(vals))]
    for n_split in range(spec.max_subdivisions):
        total = float(np.sum(vals))
        total_err = float(np.sum(errs))
        if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            return sign * total, total_err
        live = [i for i in range(len(errs)) if not dead[i]]
        if not live:
            raise NumericsError(
                "quadrature stalled at roundoff before reaching tolerance",
                value=sign * total, error=total_err)
        worst = max(live, key=lambda i: (errs[i], -i))
        lo, hi = lows[worst], highs[worst]
        m = 0.5 * (lo + hi)
        (v1, v2), (e1, e2) = _gk_batch(f, [lo, m], [m, hi])
        lows[worst], highs[worst], vals[worst], errs[worst] = lo, m, v1, e1
        dead[worst] = m - lo < width_floor
        lows.append(m)
        highs.append(hi)
        vals.append(v2)
        errs.append(e2)
        dead.append(hi - m < width_floor)
    raise NumericsError(
        "subdivision budget exhausted",
        worst_interval=(lows[int(np.argmax(errs))], highs[int(np.argmax(errs))]),
        value=sign * float(np.sum(vals)), error=float(np.sum(errs)))


def principal_value(
    f: Callable[[np.ndarray], np.ndarray],
    x0: float,
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    points: Sequence[float] = (),
) -> float:
    """Cauchy principal value of ``int_a^b f(x)/(x - x0) dx``.

    Uses singularity subtraction: the regular integral of
    ``(f(x) - f(x0))/(x - x0)`` plus the analytic term
    ``f(x0) * log|(b - x0)/(x0 - a)|``.  When ``x0`` lies outside ``(a, b)``
    the integrand is regular and plain adaptive quadrature is used.
    """
    a, b, x0 = float(a), float(b), float(x0)
    if not a < x0 < b:
        val, _ = adaptive_integrate(lambda x: f(x) / (x - x0), a, b, spec, points)
        return val

    fx0 = float(np.asarray(f(np.array([x0])))[0])
    if not np.isfinite(fx0):
        raise NumericsError("integrand is not finite at the pole", abscissa=x0)

    def subtracted(x):
        return (f(x) - fx0) / (x - x0)

    val, _ = adaptive_integrate(subtracted, a, b, spec, points=(x0, *points))
    return val + fx0 * np.log(abs((b - x0) / (x0 - a)))


def principal_value_excision(
    f: Callable[[np.ndarray], np.ndarray],
    x0: float,
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    eps0: float | None = None,
) -> float:
    """Principal value by symmetric excision with Richardson extrapolation.

    Independent cross-check for :func:`principal_value`.  Integrates with the
    symmetric window ``|x - x0| > eps`` excised, for ``eps0, eps0/2, eps0/4``,
    and extrapolates the odd-order excision error to zero.
    """
    a, b, x0 = float(a), float(b), float(x0)
    if not a < x0 < b:
        return principal_value(f, x0, a, b, spec)
    d = min(x0 - a, b - x0)
    if eps0 is None:
        # small against both the bracket and the integration range, so the
        # Richardson expansion sees a locally smooth f
        eps0 = min(d / 8.0, (b - a) / 500.0)
    if eps0 >= d:
        raise NumericsError("excision radius exceeds distance to bounds", abscissa=x0)

    def excised(eps):
        left, _ = adaptive_integrate(lambda x: f(x) / (x - x0), a, x0 - eps, spec)
        right, _ = adaptive_integrate(lambda x: f(x) / (x - x0), x0 + eps, b, spec)
        return left + right

    i0 = excised(eps0)
    i1 = excised(eps0 / 2)
    i2 = excised(eps0 / 4)
    r0 = 2 * i1 - i0          # removes the O(eps) error
    r1 = 2 * i2 - i1
    return (8 * r1 - r0) / 7  # removes the O(eps^3) error


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Root of ``f`` in ``[lo, hi]`` by a bisection/secant hybrid.

    Requires a sign change.  Terminates when ``|f(root)| < tol``.
    """
    lo, hi = float(lo), float(hi)
    flo, fhi = float(f(lo)), float(f(hi))
    if abs(flo) < tol:
        return lo
    if abs(fhi) < tol:
        return hi
    if flo * fhi > 0:
        raise NumericsError("no sign change over the bracket", bracket=(lo, hi))
    for _ in range(max_iter):
        # secant proposal, bisection fallback
        x = lo - flo * (hi - lo) / (fhi - flo)
        mid = 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = mid
        # keep the bracket shrinking geometrically
        if min(x - lo, hi - x) < 0.01 * (hi - lo):
            x = mid
        fx = float(f(x))
        if abs(fx) < tol:
            return x
        if flo * fx < 0:
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
        if hi - lo < 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
            if abs(fx) < tol:
                return x
            raise NumericsError("bracket collapsed before |f| reached tol",
                                bracket=(lo, hi), residual=abs(fx))
    raise ConvergenceError("root refinement exceeded max_iter",
                           last_iterate=0.5 * (lo + hi), residual=abs(fx),
                           iterations=max_iter)


def damped_fixed_point(
    M: Callable[[float], float],
    x0: float,
    w: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 200,
    full_step_residual: float | None = None,
) -> tuple[float, int, float]:
    """Fixed point of the map ``M`` by damped iteration.

    Updates ``x <- (1-w) x + w M(x)``; if ``full_step_residual`` is given the
    damping switches to a full step once ``|M(x) - x|`` drops below it.
    Returns ``(x, iterations, residual)`` with ``residual < tol``.
    """
    if not 0 < w <= 1:
        raise ValueError("relaxation factor w must lie in (0, 1]")
    x = float(x0)
    for it in range(1, max_iter + 1):
        mx = float(M(x))
        res = abs(mx - x)
        if res < tol:
            return mx, it, res
        w_eff = 1.0 if (full_step_residual is not None and res < full_step_residual) else w
        x = (1 - w_eff) * x + w_eff * mx
    raise ConvergenceError("fixed-point iteration exceeded max_iter",
                           last_iterate=x, residual=res, iterations=max_iter)


def cosine_transform(
    times: np.ndarray,
    values: np.ndarray,
    window: np.ndarray,
    omega_grid: np.ndarray,
) -> np.ndarray:
    """One-sided cosine transform on a uniform time grid.

    ``S(w) = (1/pi) * sum_i window_i * values_i * cos(w t_i) * dt`` with
    trapezoid end-weights.  Raises on a non-uniform grid.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    window = np.asarray(window, dtype=float)
    omega_grid = np.asarray(omega_grid, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise NumericsError("need at least two time samples")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=0, atol=1e-9 * max(dt, 1e-300)):
        raise NumericsError("cosine_transform requires a uniform time grid")
    weights = np.full(times.size, dt)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    payload = window * values * weights
    out = np.empty(omega_grid.size)
    chunk = 512
    for i in range(0, omega_grid.size, chunk):
        out[i:i + chunk] = np.cos(np.outer(omega_grid[i:i + chunk], times)) @ payload
    return out / np.pi
