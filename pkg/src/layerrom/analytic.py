"""Closed forms for unit-square layers.

On the two-square domain (-1, 1) x (0, 1) with the interface at x1 = 0, the
harmonic extension of the sine trace sin(pi n x2) is

    psi_n(x1, x2) = sin(pi n x2) sinh(pi n (1 - |x1|)) / sinh(pi n),

and every interface field expands in these modes.  The module provides the
modes, their gradients and energies, the expansion coefficients of the
interface component for a given source, the explicit interface solution for
the source sin(pi x2), the per-mode coupling between neighboring interfaces,
and the exponential interaction bounds.  All hyperbolic ratios are evaluated
through scaled exponentials so large mode numbers neither overflow nor lose
accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError

__all__ = [
    "harmonic_mode",
    "mode_gradient",
    "mode_energy_half",
    "mode_cross_energy",
    "mode_interaction",
    "interface_coefficients",
    "sine_load_interface_solution",
    "sine_load_coefficient",
    "interaction_bounds",
    "AnalyticConstants",
    "series_value",
    "to_interface_frame",
    "from_interface_frame",
]


def _sinh_ratio(a, b):
    """sinh(a) / sinh(b) for 0 <= a <= b without overflow."""
    a = np.asarray(a, dtype=float)
    return np.exp(a - b) * (1.0 - np.exp(-2.0 * a)) / (1.0 - np.exp(-2.0 * b))


def _cosh_over_sinh(a, b):
    """cosh(a) / sinh(b) for 0 <= a <= b without overflow."""
    a = np.asarray(a, dtype=float)
    return np.exp(a - b) * (1.0 + np.exp(-2.0 * a)) / (1.0 - np.exp(-2.0 * b))


def harmonic_mode(n: int, x1, x2):
    """Mode n harmonic interface field on (-1, 1) x (0, 1).

    Equals sin(pi n x2) on the interface x1 = 0 and vanishes on the outer
    boundary; harmonic in both open halves.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    w = math.pi * n
    return np.sin(w * x2) * _sinh_ratio(w * (1.0 - np.abs(x1)), w)


def mode_gradient(n: int, x1, x2):
    """Gradient (d/dx1, d/dx2) of :func:`harmonic_mode`."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    w = math.pi * n
    decay = _sinh_ratio(w * (1.0 - np.abs(x1)), w)
    bulge = _cosh_over_sinh(w * (1.0 - np.abs(x1)), w)
    g1 = -np.sign(x1) * w * np.sin(w * x2) * bulge
    g2 = w * np.cos(w * x2) * decay
    return g1, g2


def mode_energy_half(n: int) -> float:
    """Gradient energy of mode n over one half domain: pi n / (2 tanh(pi n))."""
    return math.pi * n / (2.0 * math.tanh(math.pi * n))


def mode_cross_energy(n: int) -> float:
    """Cross gradient energy of mode-n extensions from the two interfaces
    bounding a shared square layer: -pi n / (2 sinh(pi n))."""
    w = math.pi * n
    return -w * math.exp(-w) / (1.0 - math.exp(-2.0 * w))


def mode_interaction(n: int) -> float:
    """Normalized coupling of mode n between neighboring interfaces.

    The ratio of the cross energy to the extension energies simplifies to
    1 / cosh(pi n); the simplification is cross-checked against direct
    quadrature of the gradient formulas in the test suite.
    """
    if n < 1:
        raise InvalidInputError("mode index must be >= 1")
    w = math.pi * n
    return 2.0 * math.exp(-w) / (1.0 + math.exp(-2.0 * w))


def _gauss_grid(order: int):
    x, wx = np.polynomial.legendre.leggauss(order)
    return x, wx


def _integral_f_mode(f, n: int, order: int) -> float:
    """Quadrature of f * psi_n over both halves of (-1, 1) x (0, 1)."""
    x, w = _gauss_grid(order)
    xs = 0.5 * (x + 1.0)          # nodes on (0, 1)
    ws = 0.5 * w
    X2, X1 = np.meshgrid(xs, xs)  # X1 right-half coordinates
    W = np.outer(ws, ws)
    total = 0.0
    for sign in (1.0, -1.0):
        x1 = sign * X1
        total += float(np.sum(W * np.asarray(f(x1, X2), dtype=float)
                              * harmonic_mode(n, x1, X2)))
    return total


def interface_coefficients(f, n_max: int, order: int = 64) -> np.ndarray:
    """Mode coefficients of the interface component for source f.

    Testing the interface problem with the modes decouples it, so each
    coefficient is the load divided by the mode energy over both halves:

        alpha_n = integral(f * psi_n) / (pi n / tanh(pi n))

    The integral is evaluated by tensor Gauss-Legendre quadrature per half
    domain and verified against a finer rule; disagreement beyond 1e-12
    raises.
    """
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")
    coeffs = np.empty(n_max)
    for n in range(1, n_max + 1):
        coarse = _integral_f_mode(f, n, order)
        fine = _integral_f_mode(f, n, order + 16)
        if abs(coarse - fine) > 1e-12 * max(1.0, abs(fine)):
            raise NumericalError(
                f"quadrature for mode {n} did not converge "
                f"({coarse:.3e} vs {fine:.3e})")
        coeffs[n - 1] = math.tanh(math.pi * n) / (math.pi * n) * fine
    return coeffs


def sine_load_coefficient() -> float:
    """Leading mode coefficient for the source sin(pi x2):
    2 sinh(pi)^2 tanh(pi/2) / (pi^2 sinh(2 pi)); all higher modes vanish."""
    return (2.0 * math.sinh(math.pi) ** 2 * math.tanh(math.pi / 2.0)
            / (math.pi ** 2 * math.sinh(2.0 * math.pi)))


def sine_load_interface_solution(x1, x2):
    """Explicit interface component for the source sin(pi x2).

    The single surviving mode gives
    w(x1, x2) = alpha_1 * psi_1(x1, x2).
    """
    return sine_load_coefficient() * harmonic_mode(1, x1, x2)


@dataclass(frozen=True)
class AnalyticConstants:
    """Exponential interaction bounds for a slow cutoff of ``n_slow`` modes."""

    n_slow: int
    fast_bound: float     # worst coupling of the neglected fast modes
    edge_bound: float     # worst coupling between full neighboring trace spaces
    constant: float       # prefactor 2 / (1 - e^{-2 pi})


def interaction_bounds(n_slow: int) -> AnalyticConstants:
    """Bounds fast <= C e^{-pi (n_slow + 1)} and edge <= C e^{-pi}."""
    if n_slow < 0:
        raise InvalidInputError("the slow mode cutoff must be >= 0")
    c = 2.0 / (1.0 - math.exp(-2.0 * math.pi))
    return AnalyticConstants(
        n_slow=n_slow,
        fast_bound=c * math.exp(-math.pi * (n_slow + 1)),
        edge_bound=c * math.exp(-math.pi),
        constant=c,
    )


def series_value(coeffs: np.ndarray, x1, x2):
    """Evaluate sum_n coeffs[n-1] * psi_n at the given points."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    out = np.zeros(np.broadcast(x1, x2).shape)
    for n, a in enumerate(coeffs, start=1):
        if a != 0.0:
            out = out + a * harmonic_mode(n, x1, x2)
    return out


def to_interface_frame(x1, interface_abscissa: float):
    """Shift layered-domain coordinates so the interface sits at 0."""
    return np.asarray(x1, dtype=float) - interface_abscissa


def from_interface_frame(xi, interface_abscissa: float):
    """Inverse of :func:`to_interface_frame`."""
    return np.asarray(xi, dtype=float) + interface_abscissa
