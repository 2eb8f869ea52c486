"""Von Neumann probes of the update rule.

Insert psi(m Delta, n Delta) = xi^n exp(i k m Delta) into the discretized
equation for x < -a (no two-photon source).  Without the delay term this gives
a single amplification factor; with it, a polynomial of degree nx + 1 in xi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

ROOT_RESIDUAL_TOL = 1e-8


class SingularProbeError(ZeroDivisionError):
    pass


class RootFindingError(ArithmeticError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"polynomial roots failed the residual check (max scaled residual {residual:.3e})")


@dataclass(frozen=True)
class StabilityProbe:
    W: complex
    Delta: float
    nx: int
    k: float
    gamma: float | None = None

    @property
    def delay_rate(self) -> float:
        """Gamma of the delay term; defaults to 2 Re(W)."""
        return 2.0 * self.W.real if self.gamma is None else self.gamma

    @classmethod
    def from_physics(cls, w0, gamma, Delta, nx, k):
        return cls(complex(gamma / 2, w0), Delta, nx, k, gamma)


def amplification_factor_simple(probe: StabilityProbe) -> complex:
    if probe.Delta <= 0:
        raise ValueError("Delta must be positive")
    inv = 1.0 / probe.Delta
    Wq = complex(probe.W) / 4
    E = cmath.exp(1j * probe.k * probe.Delta)
    den = (inv + Wq) + Wq / E
    if den == 0:
        raise SingularProbeError("amplification factor denominator vanishes")
    return ((inv - Wq) - Wq * E) / den / E


def amplification_coefficients(probe: StabilityProbe) -> np.ndarray:
    """Coefficients, highest power first, of the degree nx+1 polynomial in xi."""
    nx = probe.nx
    if nx < 2:
        raise ValueError("nx must be at least 2")
    inv = 1.0 / probe.Delta
    Wq = complex(probe.W) / 4
    E = cmath.exp(1j * probe.k * probe.Delta)
    d = probe.delay_rate / 8 * E ** (-nx - 1) * (1 + E)
    coef = np.zeros(nx + 2, dtype=np.complex128)
    coef[0] = (inv + Wq) + Wq / E
    coef[1] = -((inv - Wq) / E - Wq)
    coef[-2] -= d
    coef[-1] -= d
    return coef


def amplification_polynomial_roots(probe: StabilityProbe) -> np.ndarray:
    coef = amplification_coefficients(probe)
    if coef[0] == 0:
        raise SingularProbeError("leading coefficient vanishes")
    roots = np.roots(coef)
    # residual scaled by the size of the individual terms at each root
    powers = np.abs(roots)[:, None] ** np.arange(len(coef) - 1, -1, -1)[None, :]
    scale = np.maximum(1.0, (np.abs(coef)[None, :] * powers).sum(axis=1))
    resid = np.abs(np.polyval(coef, roots)) / scale
    worst = float(resid.max()) if resid.size else 0.0
    if not math.isfinite(worst) or worst > ROOT_RESIDUAL_TOL:
        raise RootFindingError(worst)
    return roots


def max_root_modulus(probe: StabilityProbe) -> float:
    return float(np.abs(amplification_polynomial_roots(probe)).max())
