"""Normalized lower incomplete Gamma function P(n, z) for integer n and complex z.

Four evaluation routes are used depending on where ``z`` sits in the complex
plane:

* ``CONTINUED_FRACTION`` -- Q(n, z) by the Legendre continued fraction
  (modified Lentz), then P = 1 - Q.  Used for ``|z| >= n + 1``.
* ``SERIES_P`` -- the power series e^{-z} z^n sum z^i / Gamma(n+i+1).
  Used for ``|z| < n + 1``.
* ``SERIES_GAMMA_STAR`` -- the gamma* series z^n/Gamma(n) sum (-z)^i/(i!(i+n)).
  Used on the (numerically) negative real axis for small ``|z|``; all terms
  have the same sign there, so nothing cancels.
* ``POINCARE`` -- the asymptotic expansion on the negative real axis for
  large ``|z|``.

The numerical cores are numba-compiled so the one-excitation amplitudes can
call them from inside compiled loops.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MAX_TERMS = 10000
EPS = 1e-15
FPMIN = 1e-300
NEG_AXIS_CUTOFF = 30.0
TINY_IMAG = 1e-16
MAX_FACTORIAL_N = 170


class GammaRegime(enum.IntEnum):
    CONTINUED_FRACTION = 0
    SERIES_P = 1
    SERIES_GAMMA_STAR = 2
    POINCARE = 3


class GammaConvergenceError(ArithmeticError):
    """Raised when a series or continued fraction fails to converge."""

    def __init__(self, n, z, regime):
        self.n = n
        self.z = z
        self.regime = GammaRegime(regime)
        super().__init__(
            f"P({n}, {z!r}) did not converge within {MAX_TERMS} terms "
            f"(regime {self.regime.name})"
        )


@dataclass(frozen=True)
class GammaResult:
    value: complex
    regime: GammaRegime
    terms_used: int


@njit(cache=True, nogil=True)
def select_regime(n, z):
    re = z.real
    im = z.imag
    if re < 0.0 and abs(im) <= TINY_IMAG * max(1.0, abs(re)):
        if abs(z) < NEG_AXIS_CUTOFF:
            return 2
        return 3
    if abs(z) < n + 1.0:
        return 1
    return 0


@njit(cache=True, nogil=True)
def _cf(n, z):
    # Q(n, z) by modified Lentz; terminates after n steps for integer n
    b = z + 1.0 - n
    c = complex(1.0 / FPMIN)
    d = 1.0 / b if abs(b) >= FPMIN else complex(1.0 / FPMIN)
    h = d
    for i in range(1, MAX_TERMS + 1):
        an = -i * (i - n)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = complex(FPMIN)
        c = b + an / c
        if abs(c) < FPMIN:
            c = complex(FPMIN)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            q = cmath.exp(-z + n * cmath.log(z) - math.lgamma(n)) * h
            return 1.0 - q, i
    return complex(np.nan, np.nan), -1


@njit(cache=True, nogil=True)
def _series_p(n, z):
    ap = float(n)
    term = 1.0 / ap + 0j
    total = term
    for i in range(1, MAX_TERMS + 1):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * cmath.exp(-z + n * cmath.log(z) - math.lgamma(n)), i
    return complex(np.nan, np.nan), -1


@njit(cache=True, nogil=True)
def _series_gamma_star(n, z):
    term = 1.0 + 0j
    total = term / n
    for i in range(1, MAX_TERMS + 1):
        term *= -z / i
        contrib = term / (i + n)
        total += contrib
        if abs(contrib) < abs(total) * EPS:
            return total * cmath.exp(n * cmath.log(z) - math.lgamma(n)), i
    return complex(np.nan, np.nan), -1


@njit(cache=True, nogil=True)
def _poincare(n, w):
    # w on the negative axis; expand in z = -w, Re z > 0
    z = -w
    term = 1.0 + 0j
    total = term
    used = 1
    for i in range(0, MAX_TERMS):
        nxt = term * (1.0 - n + i) / z
        # exact termination for integer n, else stop at the smallest term
        if nxt == 0.0 or abs(nxt) >= abs(term):
            break
        total += nxt
        term = nxt
        used += 1
        if abs(term) < EPS * abs(total):
            break
    sign = 1.0 if n % 2 == 0 else -1.0
    pref = sign * cmath.exp(z + (n - 1) * cmath.log(z) - math.lgamma(n))
    return pref * total, used


@njit(cache=True, nogil=True)
def incgamma_p_core(n, z):
    """Return ``(P(n, z), regime, terms)``; ``terms < 0`` flags non-convergence."""
    if z == 0.0:
        return 0j, 1, 0
    regime = select_regime(n, z)
    if regime == 0:
        v, t = _cf(n, z)
    elif regime == 1:
        v, t = _series_p(n, z)
    elif regime == 2:
        v, t = _series_gamma_star(n, z)
    else:
        v, t = _poincare(n, z)
    return v, regime, t


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def incgamma_P(n: int, z: complex) -> GammaResult:
    """Normalized lower incomplete Gamma P(n, z) = gamma(n, z) / (n-1)!."""
    n = _check_n(n)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"z must be finite, got {z!r}")
    value, regime, terms = incgamma_p_core(n, z)
    if terms < 0:
        raise GammaConvergenceError(n, z, regime)
    return GammaResult(complex(value), GammaRegime(regime), int(terms))


def incgamma_lower(n: int, z: complex) -> complex:
    """Lower incomplete Gamma gamma(n, z) = (n-1)! P(n, z), for 1 <= n <= 170."""
    n = _check_n(n)
    if n > MAX_FACTORIAL_N:
        raise OverflowError(f"(n-1)! overflows double precision for n={n}")
    return math.factorial(n - 1) * incgamma_P(n, z).value
