"""Closed-form one-excitation amplitudes, wavepackets and two-photon initial data.

Everything here is analytic; these values seed the initial row and the
boundary strip of the grid and feed the post-processing.  Step functions use
the inclusive convention theta(0) = 1.

Three qubit amplitudes are provided:

``e0``  qubit amplitude for an incident plane wave A e^{ikx} theta(-a-x) with
        the qubit initially in its ground state.
``e1``  spontaneous emission: qubit initially excited, no photon.
``e``   qubit amplitude for an incident exponential wavepacket ``phi``.

Each is a finite sum: only round trips n <= t/(2a) contribute.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .special_gamma import incgamma_p_core

SINGULAR_P = 1e-10


class AmplitudeKind(enum.IntEnum):
    E0_PLANE_WAVE = 0
    E1_SPONTANEOUS_EMISSION = 1
    E_EXPONENTIAL_WAVEPACKET = 2


class SingularFormulaError(ValueError):
    """The closed form divides by p = 0; detune k or alpha slightly."""


# ---------------------------------------------------------------------------
# compiled scalar kernels


@njit(cache=True, nogil=True)
def _gamma_term(n, p, s):
    v, regime, terms = incgamma_p_core(n + 1, -1j * p * s)
    if terms < 0:
        raise ArithmeticError("incomplete Gamma did not converge")
    return v


@njit(cache=True, nogil=True)
def e0_scalar(t, k, w0, gamma, a, A):
    if t < 0.0:
        return 0j
    g2 = 0.5 * gamma
    W = complex(g2, w0)
    p = complex(k - w0, g2)
    pre = A * cmath.exp(-1j * k * a)
    val = 1j * math.sqrt(g2) * pre * (cmath.exp(-1j * k * t) - cmath.exp(-W * t)) / p
    det = k - w0
    r = g2 / p
    rn = 1.0 + 0j
    ipow = 1.0 + 0j
    inv_sqrt = 1.0 / math.sqrt(g2)
    n = 1
    while True:
        s = t - 2.0 * n * a
        if s < 0.0:
            break
        rn *= r
        ipow *= 1j
        acc = 0j
        if s > 0.0:
            acc += math.exp(n * math.log(g2 * s) - math.lgamma(n + 1.0)) * cmath.exp(-W * s)
            if det != 0.0:
                acc += ipow * det * rn / p * _gamma_term(n, p, s) * cmath.exp(-1j * k * s)
        val -= pre * inv_sqrt * acc
        n += 1
    return val


@njit(cache=True, nogil=True)
def e1_scalar(t, w0, gamma, a):
    if t < 0.0:
        return 0j
    g2 = 0.5 * gamma
    W = complex(g2, w0)
    val = cmath.exp(-W * t)
    n = 1
    while True:
        s = t - 2.0 * n * a
        if s < 0.0:
            break
        if s > 0.0:
            val += math.exp(n * math.log(g2 * s) - math.lgamma(n + 1.0)) * cmath.exp(-W * s)
        n += 1
    return val


@njit(cache=True, nogil=True)
def ewp_scalar(t, k, alpha, w0, gamma, a):
    if t < 0.0:
        return 0j
    g2 = 0.5 * gamma
    ag2 = alpha * g2
    W = complex(g2, w0)
    V = complex(ag2, k)  # ik + alpha*gamma/2
    p = complex(k - w0, g2 * (1.0 - alpha))
    # the incident packet carries e^{-ika} at its front x = -a
    pre = cmath.exp(-1j * k * a)
    val = pre * math.sqrt(alpha * gamma * gamma / 2.0) * (cmath.exp(-W * t) - cmath.exp(-V * t)) / p
    coef = complex(k - w0, -ag2)
    r = g2 / p
    rn = 1.0 + 0j
    ipow = 1.0 + 0j
    inv_sqrt = 1.0 / math.sqrt(g2)
    amp = 1j * math.sqrt(alpha * gamma)
    n = 1
    while True:
        s = t - 2.0 * n * a
        if s < 0.0:
            break
        rn *= r
        ipow *= 1j
        if s > 0.0:
            acc = math.exp(n * math.log(g2 * s) - math.lgamma(n + 1.0)) * cmath.exp(-W * s)
            acc += ipow * coef * rn / p * _gamma_term(n, p, s) * cmath.exp(-V * s)
            val -= pre * amp * inv_sqrt * acc
        n += 1
    return val


@njit(cache=True, nogil=True)
def e0_array(ts, k, w0, gamma, a, A):
    out = np.empty(ts.shape[0], dtype=np.complex128)
    for m in range(ts.shape[0]):
        out[m] = e0_scalar(ts[m], k, w0, gamma, a, A)
    return out


@njit(cache=True, nogil=True)
def e1_array(ts, w0, gamma, a):
    out = np.empty(ts.shape[0], dtype=np.complex128)
    for m in range(ts.shape[0]):
        out[m] = e1_scalar(ts[m], w0, gamma, a)
    return out


@njit(cache=True, nogil=True)
def ewp_array(ts, k, alpha, w0, gamma, a):
    out = np.empty(ts.shape[0], dtype=np.complex128)
    for m in range(ts.shape[0]):
        out[m] = ewp_scalar(ts[m], k, alpha, w0, gamma, a)
    return out


# ---------------------------------------------------------------------------
# public evaluators


def _as_times(t):
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("amplitudes are defined for t >= 0 only")
    return arr


@dataclass(frozen=True)
class AmplitudeSeries:
    """Evaluator for one of the three one-excitation qubit amplitudes.

    ``alpha`` is only used by the exponential-wavepacket kind; ``A`` scales
    the incident plane wave.
    """

    kind: AmplitudeKind
    k: float
    w0: float
    gamma: float
    a: float
    alpha: float = 0.0
    A: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.kind == AmplitudeKind.E_EXPONENTIAL_WAVEPACKET and self.alpha <= 0:
            raise ValueError("alpha must be positive for the wavepacket amplitude")
        if self.kind != AmplitudeKind.E1_SPONTANEOUS_EMISSION and abs(self.p) < SINGULAR_P:
            raise SingularFormulaError(
                f"p = {self.p} vanishes; the closed form is singular at k = w0"
                + (", alpha = 1" if self.kind == AmplitudeKind.E_EXPONENTIAL_WAVEPACKET else "")
            )

    @property
    def p(self) -> complex:
        if self.kind == AmplitudeKind.E_EXPONENTIAL_WAVEPACKET:
            return complex(self.k - self.w0, self.gamma * (1 - self.alpha) / 2)
        return complex(self.k - self.w0, self.gamma / 2)

    def __call__(self, t):
        ts = _as_times(t)
        flat = np.ascontiguousarray(ts.reshape(-1))
        if self.kind == AmplitudeKind.E0_PLANE_WAVE:
            out = e0_array(flat, self.k, self.w0, self.gamma, self.a, self.A)
        elif self.kind == AmplitudeKind.E1_SPONTANEOUS_EMISSION:
            out = e1_array(flat, self.w0, self.gamma, self.a)
        else:
            out = ewp_array(flat, self.k, self.alpha, self.w0, self.gamma, self.a)
        if ts.ndim == 0:
            return complex(out[0])
        return out.reshape(ts.shape)


def e0(t, k, w0, gamma, a, A=1.0):
    return AmplitudeSeries(AmplitudeKind.E0_PLANE_WAVE, k, w0, gamma, a, A=A)(t)


def e1(t, w0, gamma, a):
    return AmplitudeSeries(AmplitudeKind.E1_SPONTANEOUS_EMISSION, 0.0, w0, gamma, a)(t)


def e_wavepacket(t, k, alpha, w0, gamma, a):
    return AmplitudeSeries(AmplitudeKind.E_EXPONENTIAL_WAVEPACKET, k, w0, gamma, a, alpha=alpha)(t)


@dataclass(frozen=True)
class Wavepacket:
    """Exponential single-photon packet with its front at x = -a."""

    k: float
    alpha: float
    gamma: float
    a: float

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma <= 0:
            raise ValueError("alpha and gamma must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        ag = self.alpha * self.gamma
        inside = x <= -self.a
        expo = np.where(inside, 1j * self.k * x + ag * (x + self.a) / 2, 0.0)
        out = np.where(inside, 1j * math.sqrt(ag) * np.exp(expo), 0.0 + 0j)
        return complex(out) if out.ndim == 0 else out


def phi(x, k, alpha, gamma, a):
    return Wavepacket(k, alpha, gamma, a)(x)


def wavepacket_pair_norm(k1, k2, alpha1, alpha2, gamma):
    """Positive normalization A of the symmetrized two-packet state."""
    dk2 = 4.0 * (k1 - k2) ** 2
    s2 = (alpha1 + alpha2) ** 2 * gamma**2
    return math.sqrt((dk2 + s2) / (dk2 + s2 + 4.0 * alpha1 * alpha2 * gamma**2))


class TwoPhotonClass(enum.IntEnum):
    PLANE_WAVE = 1
    EXPONENTIAL_PAIR = 3


@dataclass(frozen=True)
class TwoPhotonInitial:
    """Two-photon initial state chi(x1, x2, 0).

    The plane-wave class uses ``k`` and A = 1.  The exponential pair uses
    ``(k1, alpha1)`` and ``(k2, alpha2)``.
    """

    cls: TwoPhotonClass
    a: float
    gamma: float
    k: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0

    @property
    def A(self) -> float:
        if self.cls == TwoPhotonClass.PLANE_WAVE:
            return 1.0
        return wavepacket_pair_norm(self.k1, self.k2, self.alpha1, self.alpha2, self.gamma)

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        a = self.a
        if self.cls == TwoPhotonClass.PLANE_WAVE:
            mask = (x1 <= -a) & (x2 <= -a)
            out = np.where(mask, np.exp(1j * self.k * (x1 + x2)), 0.0 + 0j)
        else:
            p1 = Wavepacket(self.k1, self.alpha1, self.gamma, a)
            p2 = Wavepacket(self.k2, self.alpha2, self.gamma, a)
            out = self.A / math.sqrt(2.0) * (p1(x1) * p2(x2) + p1(x2) * p2(x1))
        out = np.asarray(out)
        return complex(out) if out.ndim == 0 else out


def chi0(x1, x2, state: TwoPhotonInitial):
    return state(x1, x2)


class BoundaryClass(enum.IntEnum):
    PLANE_WAVE = 1
    STIMULATED_EMISSION = 2
    TWO_WAVEPACKETS = 3


@dataclass(frozen=True)
class BoundarySolution:
    """Exact psi(x, t) for x < -a, for one of the three initial-condition classes."""

    cls: BoundaryClass
    w0: float
    gamma: float
    a: float
    k: float = 0.0
    alpha: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    identical: bool = True

    def amplitudes(self, t):
        """Return the time-dependent factors needed by ``__call__``, evaluated at ``t``."""
        t = _as_times(t)
        if self.cls == BoundaryClass.PLANE_WAVE:
            return (e0(t, self.k, self.w0, self.gamma, self.a),)
        if self.cls == BoundaryClass.STIMULATED_EMISSION:
            return (e1(t, self.w0, self.gamma, self.a),)
        if self.identical:
            return (e_wavepacket(t, self.k, self.alpha, self.w0, self.gamma, self.a),)
        return (
            e_wavepacket(t, self.k1, self.alpha1, self.w0, self.gamma, self.a),
            e_wavepacket(t, self.k2, self.alpha2, self.w0, self.gamma, self.a),
        )

    def from_amplitudes(self, x, t, amps):
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        a, g = self.a, self.gamma
        if self.cls == BoundaryClass.PLANE_WAVE:
            return math.sqrt(2.0) * np.exp(1j * self.k * (x - t)) * amps[0]
        if self.cls == BoundaryClass.STIMULATED_EMISSION:
            return phi(x - t, self.k, self.alpha, g, a) * amps[0]
        if self.identical:
            return math.sqrt(2.0) * phi(x - t, self.k, self.alpha, g, a) * amps[0]
        A = wavepacket_pair_norm(self.k1, self.k2, self.alpha1, self.alpha2, g)
        e_1, e_2 = amps
        return A * (
            phi(x - t, self.k1, self.alpha1, g, a) * e_2
            + phi(x - t, self.k2, self.alpha2, g, a) * e_1
        )

    def __call__(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x >= -self.a):
            raise ValueError("the analytic boundary solution holds only for x < -a")
        return self.from_amplitudes(x, t, self.amplitudes(t))


def boundary_psi(x, t, solution: BoundarySolution):
    return solution(x, t)
