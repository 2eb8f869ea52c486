"""Quantities derived from a solved psi grid.

* the two-photon wavefunction chi(x1, x2, t), rebuilt from psi on the light
  cones of both coupling points, and its detector slice at x1 = a + Delta;
* the trapezoid integral of |psi|^2 over a row;
* the overlap mu(t), the norm-like lambda(t), det M_t = |mu|^2 lambda and the
  accumulated geometric non-Markovianity measure for the stimulated-emission
  problem.

The one-excitation photon wavefunction needed by mu(t) is

    phi(x, t) = phi(x - t, 0) - sqrt(gamma/2) [ e(t - x - a) theta(x + a) theta(t - x - a)
                                             - e(t - x + a) theta(x - a) theta(t - x + a) ],

with e the qubit amplitude driven by the same exponential packet.  All
arguments of e land on the time grid, so e is tabulated once per run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .exact import (
    TwoPhotonClass,
    TwoPhotonInitial,
    Wavepacket,
    e1 as e1_amplitude,
    e_wavepacket,
)
from .grid import GridField
from .params import InitCond, SimParams, tmax


class ChiLookupError(LookupError):
    pass


class TmaxExceededError(ValueError):
    pass


# ---------------------------------------------------------------------------
# two-photon wavefunction


def two_photon_initial(p: SimParams) -> TwoPhotonInitial | None:
    """chi(x1, x2, 0) of the run, or None when it vanishes (stimulated emission)."""
    if p.init_cond == InitCond.PLANE_WAVE:
        return TwoPhotonInitial(TwoPhotonClass.PLANE_WAVE, p.a, p.gamma, k=p.k)
    if p.init_cond == InitCond.TWO_WAVEPACKETS:
        return TwoPhotonInitial(TwoPhotonClass.EXPONENTIAL_PAIR, p.a, p.gamma,
                                k1=p.k1, k2=p.k2, alpha1=p.alpha1, alpha2=p.alpha2)
    return None


def _psi_at(g: GridField, rows, cols, active, label):
    Ny, ncols = g.data.shape
    rows = np.where(active, rows, 0)
    cols = np.where(active, cols, 0)
    bad = active & ((rows >= Ny) | (cols < 0) | (cols >= ncols))
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ChiLookupError(
            f"{label}: psi lookup at row {int(rows[k])}, col {int(cols[k])} is outside the solved grid"
        )
    if g.written is not None:
        unw = active & (g.written[rows, cols] == 0)
        if np.any(unw):
            k = int(np.argmax(unw))
            raise ChiLookupError(f"{label}: psi at row {int(rows[k])}, col {int(cols[k])} is unsolved")
    return np.where(active, g.data[rows, cols], 0j)


def _half_bracket(g: GridField, j1, j2, i, label):
    """psi(x1-x2-a, t-x2-a) th th - psi(x1-x2+a, t-x2+a) th th, by column index."""
    p = g.params
    c, cp = p.center_col, p.plus_a_col
    half = p.nx // 2
    base = p.Nx + p.nx
    # column of x1 - x2 -+ a is j1 - j2 + base -+ nx/2; rows are i - (j2 - c), i - (j2 - c')
    ra = i - (j2 - c)
    rb = i - (j2 - cp)
    act_a = (j2 >= c) & (ra >= 0)
    act_b = (j2 >= cp) & (rb >= 0)
    pa = _psi_at(g, ra, j1 - j2 + base - half, act_a, label + " (-a light cone)")
    pb = _psi_at(g, rb, j1 - j2 + base + half, act_b, label + " (+a light cone)")
    return pa - pb


def chi_by_index(g: GridField, chi0: TwoPhotonInitial | None, j1, j2, i):
    """chi at columns (j1, j2) and row i; broadcasts over array arguments."""
    p = g.params
    j1, j2, i = np.broadcast_arrays(np.asarray(j1, dtype=np.int64),
                                    np.asarray(j2, dtype=np.int64),
                                    np.asarray(i, dtype=np.int64))
    shape = j1.shape
    j1, j2, i = (np.atleast_1d(v) for v in (j1, j2, i))
    t = p.t_of_row(i)
    if chi0 is None:
        free = np.zeros(j1.shape, dtype=np.complex128)
    else:
        free = np.asarray(chi0(p.x_of_col(j1) - t, p.x_of_col(j2) - t), dtype=np.complex128)
    s = _half_bracket(g, j1, j2, i, "x1,x2 term") + _half_bracket(g, j2, j1, i, "x2,x1 term")
    return (free - (math.sqrt(p.gamma) / 2) * s).reshape(shape)


def reconstruct_chi(g: GridField, chi0: TwoPhotonInitial | None, x1: float, x2: float, t: float) -> complex:
    """chi(x1, x2, t) for grid-aligned coordinates."""
    p = g.params

    def idx(v, what, unit, offset):
        q = v / unit + offset
        k = round(q)
        if abs(q - k) > 1e-6:
            raise ValueError(f"{what}={v} is not on the grid")
        return int(k)

    j1 = idx(x1, "x1", p.Delta, p.Nx + p.nx)
    j2 = idx(x2, "x2", p.Delta, p.Nx + p.nx)
    i = idx(t, "t", p.Delta, 0)
    return complex(chi_by_index(g, chi0, np.array([j1]), np.array([j2]), np.array([i]))[0])


@dataclass(frozen=True)
class ChiSlice:
    t: float
    tau_values: np.ndarray
    chi: np.ndarray


def detector_slice_length(p: SimParams) -> int:
    return p.Nx - p.nx // 2


def chi_detector_slice(g: GridField, row: int, chi0: TwoPhotonInitial | None = None) -> ChiSlice:
    """chi(a + Delta, a + Delta + tau, t) for tau = 0 .. (Nx - nx/2 - 1) Delta."""
    p = g.params
    if chi0 is None:
        chi0 = two_photon_initial(p)
    m = np.arange(detector_slice_length(p), dtype=np.int64)
    jd = p.plus_a_col + 1
    vals = chi_by_index(g, chi0, np.full_like(m, jd), jd + m, np.full_like(m, row))
    return ChiSlice(p.t_of_row(row), m * p.Delta, vals)


# ---------------------------------------------------------------------------
# integrals


def psi_square_integral(g: GridField, row: int, first_col: int = 0, last_col: int | None = None) -> float:
    """Trapezoid integral of |psi|^2 over columns first_col..last_col of one row."""
    p = g.params
    stop = p.total_cols if last_col is None else last_col + 1
    seg = g.data[row, first_col:stop]
    return trapezoid_abs2(seg, p.Delta)


def trapezoid_abs2(values: np.ndarray, dx: float) -> float:
    v = values.real * values.real + values.imag * values.imag
    return float(np.trapezoid(v, dx=dx))


def truncated_packet_norm(p: SimParams) -> float:
    """Closed-form integral of |phi(x, 0)|^2 from the first grid column to -a."""
    L = -p.a - p.x_of_col(0)
    return 1.0 - math.exp(-p.alpha * p.gamma * L)


# ---------------------------------------------------------------------------
# one-excitation photon wavefunction


@njit(cache=True)
def _photon_row(i, ncols, c, nx, Nx, delta, k, ag, a, e_tab, sg2, out):
    sag = math.sqrt(ag)
    cp = c + nx
    for j in range(ncols):
        x = (j - Nx - nx) * delta
        # free part phi(x - t, 0) with theta(0) = 1 at the packet front
        if j - i <= c:
            y = (j - i - Nx - nx) * delta
            v = 1j * sag * np.exp(complex(ag * (y + a) / 2.0, k * y))
        else:
            v = 0j
        if j >= c:
            r = i - (j - c)
            if r >= 0:
                v -= sg2 * e_tab[r]
        if j >= cp:
            r = i - (j - cp)
            if r >= 0:
                v += sg2 * e_tab[r]
        out[j] = v
    return out


@dataclass
class PhotonWavefunction:
    """phi(x, t) on the grid columns for the stimulated-emission packet."""

    p: SimParams
    e_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = self.p
        self.e_table = np.ascontiguousarray(
            e_wavepacket(p.t_of_row(np.arange(p.Ny)), p.k, p.alpha, p.w0, p.gamma, p.a)
        )

    def row(self, i: int, out: np.ndarray | None = None) -> np.ndarray:
        p = self.p
        if out is None:
            out = np.empty(p.total_cols, dtype=np.complex128)
        return _photon_row(i, p.total_cols, p.center_col, p.nx, p.Nx, p.Delta, p.k,
                           p.alpha * p.gamma, p.a, self.e_table, math.sqrt(p.gamma / 2), out)

    def e(self, i: int) -> complex:
        return complex(self.e_table[i])


def integration_last_col(p: SimParams) -> int:
    """Column where the light cone from +a meets the row Tmax."""
    return min(p.plus_a_col + p.Tmax, p.total_cols - 1)


def unitarity_defect(p: SimParams, rows=None) -> np.ndarray:
    """|e(t)|^2 + integral |phi(x, t)|^2 - 1 on the given rows (default 0..Tmax)."""
    ph = PhotonWavefunction(p)
    rows = range(p.Tmax + 1) if rows is None else rows
    last = integration_last_col(p)
    buf = np.empty(p.total_cols, dtype=np.complex128)
    out = []
    for i in rows:
        row = ph.row(i, buf)
        e = ph.e_table[i]
        out.append(abs(e) ** 2 + trapezoid_abs2(row[: last + 1], p.Delta) - 1.0)
    return np.array(out)


# ---------------------------------------------------------------------------
# non-Markovianity


@dataclass(frozen=True)
class NmRecord:
    t: float
    mu: complex
    lam: float
    detM: float
    e0: complex
    e1: complex
    n_geo_partial: float
    lam_imag_residue: float = 0.0


class NmAccumulator:
    """Builds NmRecords row by row; n_geo sums positive increments of |det M|."""

    def __init__(self, g: GridField):
        p = g.params
        if p.init_cond != InitCond.STIMULATED_EMISSION:
            raise ValueError("non-Markovianity measures need the stimulated-emission class")
        self.g = g
        self.p = p
        self.photon = PhotonWavefunction(p)
        self.e1_table = np.asarray(e1_amplitude(p.t_of_row(np.arange(p.Ny)), p.w0, p.gamma, p.a))
        self.last_col = integration_last_col(p)
        self.records: list[NmRecord] = []
        self._buf = np.empty(p.total_cols, dtype=np.complex128)
        self._prev_abs = None
        self._n_geo = 0.0

    def nm_row(self, row: int) -> NmRecord:
        p = self.p
        if row > p.Tmax:
            raise TmaxExceededError(
                f"row {row} is beyond Tmax={p.Tmax}; the integrals would be underestimated"
            )
        sl = slice(0, self.last_col + 1)
        psi = self.g.data[row, sl]
        ph = self.photon.row(row, self._buf)[sl]
        mu = complex(np.trapezoid(np.conj(ph) * psi, dx=p.Delta))
        e0 = self.photon.e(row)
        lam_c = complex(np.trapezoid(np.conj(psi) * psi, dx=p.Delta)) - e0.conjugate() * e0
        lam = lam_c.real
        detM = abs(mu) ** 2 * lam
        a = abs(detM)
        if self._prev_abs is not None:
            self._n_geo += max(0.0, a - self._prev_abs)
        self._prev_abs = a
        rec = NmRecord(p.t_of_row(row), mu, lam, detM, e0, complex(self.e1_table[row]),
                       self._n_geo, abs(lam_c.imag))
        self.records.append(rec)
        return rec

    def hook(self, row: int):
        if row <= self.p.Tmax:
            self.nm_row(row)


def nm_row(g: GridField, row: int) -> NmRecord:
    """Single-row measures with a fresh accumulator (n_geo_partial = 0)."""
    return NmAccumulator(g).nm_row(row)


def tmax_bound(p: SimParams) -> int:
    return tmax(p.Nx, p.Ny, p.nx)


# ---------------------------------------------------------------------------
# in-situ collection


@dataclass
class IntegralRecord:
    t: float
    value: float


class InSituCollector:
    """Row hook gathering everything the output flags ask for."""

    def __init__(self, g: GridField):
        self.g = g
        p = g.params
        self.p = p
        self.chi0 = two_photon_initial(p)
        self.chi: list[ChiSlice] = []
        self.integrals: list[IntegralRecord] = []
        self.nm = NmAccumulator(g) if p.measure_NM else None

    def __call__(self, row: int):
        p = self.p
        if p.save_chi:
            self.chi.append(chi_detector_slice(self.g, row, self.chi0))
        if p.save_psi_square_integral:
            self.integrals.append(IntegralRecord(p.t_of_row(row), psi_square_integral(self.g, row)))
        if self.nm is not None:
            self.nm.hook(row)
