"""Per-cell update rule and the serial march.

Each unknown psi(x, t) is the top-right corner of a square whose Taylor point
sits at (x - Delta/2, t - Delta/2).  With A, B, C the lower-left, lower-right
and upper-left corners the local part of the equation discretizes to

    D (1/Delta + W/4) = A (1/Delta - W/4) - W/4 (B + C) + sources,

W = i w0 + gamma/2.  The sources are

* the delay square at (x - 2a, t - 2a), weight gamma/2, active for t - 2a > 0;
* four mirror bars (two-point averages on an integer row) reflected about
  x = -a and x = 0 (active for x > -a) and about x = +a and x = 0 (x > a);
* the analytic two-photon source sqrt(gamma) [chi(x-t, -a-t, 0) - chi(x-t, a-t, 0)].

All arithmetic for a given cell happens in one fixed order, so every
scheduler reproduces the serial grid bit for bit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
from numba import njit

from .grid import GridField
from .params import InitCond, SimParams

# ip slots
I_NX_HALF_EXT, I_NY, I_NX, I_NCOLS, I_C, I_CLS, I_DEBUG = range(7)
# fp slots
(F_DELTA, F_INV, F_WRE, F_WIM, F_HG, F_SG, F_K, F_K1, F_K2, F_AG1, F_AG2, F_A,
 F_AMP, F_SAG1, F_SAG2) = range(15)

VIOL_COLS = 7
MIN_COEFFICIENT = 1e-14


class SingularUpdateError(ArithmeticError):
    pass


@dataclass(frozen=True)
class KernelContext:
    ip: np.ndarray
    fp: np.ndarray

    @property
    def debug(self) -> bool:
        return bool(self.ip[I_DEBUG])


def make_context(p: SimParams, debug: bool = False) -> KernelContext:
    W = complex(p.gamma / 2, p.w0)
    inv = 1.0 / p.Delta
    if abs(inv + W / 4) < MIN_COEFFICIENT:
        raise SingularUpdateError("coefficient of the unknown vanishes")
    ip = np.array(
        [p.Nx, p.Ny, p.nx, p.total_cols, p.center_col, int(p.init_cond), int(debug)],
        dtype=np.int64,
    )
    if p.init_cond == InitCond.TWO_WAVEPACKETS:
        from .exact import wavepacket_pair_norm

        amp = wavepacket_pair_norm(p.k1, p.k2, p.alpha1, p.alpha2, p.gamma) / math.sqrt(2.0)
    else:
        amp = 1.0
    ag1, ag2 = p.alpha1 * p.gamma, p.alpha2 * p.gamma
    fp = np.array(
        [p.Delta, inv, W.real, W.imag, p.gamma / 2, math.sqrt(p.gamma), p.k, p.k1, p.k2,
         ag1, ag2, p.a, amp, math.sqrt(ag1), math.sqrt(ag2)],
        dtype=np.float64,
    )
    return KernelContext(ip, fp)


def new_violations(n_workers: int = 1) -> np.ndarray:
    return np.zeros((n_workers, VIOL_COLS), dtype=np.int64)


def written_array(g: GridField) -> np.ndarray:
    if g.written is not None:
        return g.written
    return np.ones((1, 1), dtype=np.uint8)


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True, nogil=True)
def _note(viol, w, kind, i, j, r, col):
    if viol[w, 0] + viol[w, 1] + viol[w, 2] == 0:
        viol[w, 3] = i
        viol[w, 4] = j
        viol[w, 5] = r
        viol[w, 6] = col
    viol[w, kind] += 1


@njit(cache=True, nogil=True)
def _packet(x, th, k, ag, sag, a):
    if not th:
        return 0j
    return 1j * sag * cmath.exp(complex(ag * (x + a) / 2.0, k * x))


@njit(cache=True, nogil=True)
def _chi0(x1, x2, th1, th2, cls, fp):
    if cls == 1:
        if th1 and th2:
            return cmath.exp(1j * fp[F_K] * (x1 + x2))
        return 0j
    a = fp[F_A]
    k1, k2 = fp[F_K1], fp[F_K2]
    ag1, ag2 = fp[F_AG1], fp[F_AG2]
    s1, s2 = fp[F_SAG1], fp[F_SAG2]
    return fp[F_AMP] * (
        _packet(x1, th1, k1, ag1, s1, a) * _packet(x2, th2, k2, ag2, s2, a)
        + _packet(x2, th2, k1, ag1, s1, a) * _packet(x1, th1, k2, ag2, s2, a)
    )


def _build(DEBUG):
    """Compile the solvers with the sentinel checks switched in or out at compile time."""

    @njit(cache=True, nogil=True)
    def _rd(psi, wr, r, col, viol, w, i, j):
        if DEBUG:
            if r < 0 or r >= psi.shape[0] or col < 0 or col >= psi.shape[1]:
                _note(viol, w, 2, i, j, r, col)
                return 0j
            if wr[r, col] == 0:
                _note(viol, w, 0, i, j, r, col)
        return psi[r, col]

    @njit(cache=True, nogil=True)
    def solve_cell(psi, ghost, wr, i, j, ip, fp, viol, w):
        nx = ip[I_NX]
        c = ip[I_C]
        Wq = complex(fp[F_WRE], fp[F_WIM]) * 0.25
        inv = fp[F_INV]
        hg = fp[F_HG]

        A = _rd(psi, wr, i - 1, j - 1, viol, w, i, j)
        B = _rd(psi, wr, i - 1, j, viol, w, i, j)
        C = _rd(psi, wr, i, j - 1, viol, w, i, j)
        rhs = A * (inv - Wq) - Wq * (B + C)

        # delay square, Taylor point at t - 2a - Delta/2 >= 0
        if i >= nx + 1:
            r = i - nx
            col = j - nx
            if col == 0:
                # left corners fall one column outside the grid: analytic ghost
                left = ghost[r - 1] + ghost[r]
            else:
                left = (_rd(psi, wr, r - 1, col - 1, viol, w, i, j)
                        + _rd(psi, wr, r, col - 1, viol, w, i, j))
            sq = (left
                  + _rd(psi, wr, r - 1, col, viol, w, i, j)
                  + _rd(psi, wr, r, col, viol, w, i, j))
            rhs += hg * 0.25 * sq

        # mirror bars; reflected time rows are integers, columns straddle a half step
        if j > c:
            mir = 0j
            r1 = i - (j - c)
            if r1 >= 0:
                m1 = 2 * c - j
                m2 = 2 * c + nx - j
                bar1 = 0.5 * (_rd(psi, wr, r1, m1, viol, w, i, j)
                              + _rd(psi, wr, r1, m1 + 1, viol, w, i, j))
                bar2 = 0.5 * (_rd(psi, wr, r1, m2, viol, w, i, j)
                              + _rd(psi, wr, r1, m2 + 1, viol, w, i, j))
                mir += bar1 - bar2
            if j > c + nx:
                r2 = i - (j - c - nx)
                if r2 >= 0:
                    m3 = 2 * (c + nx) - j
                    m4 = 2 * c + nx - j
                    bar3 = 0.5 * (_rd(psi, wr, r2, m3, viol, w, i, j)
                                  + _rd(psi, wr, r2, m3 + 1, viol, w, i, j))
                    bar4 = 0.5 * (_rd(psi, wr, r2, m4, viol, w, i, j)
                                  + _rd(psi, wr, r2, m4 + 1, viol, w, i, j))
                    mir += bar3 - bar4
            rhs -= hg * mir

        cls = ip[I_CLS]
        if cls != 2:
            Nx = ip[I_NX_HALF_EXT]
            half = nx // 2
            delta = fp[F_DELTA]
            x1 = (j - i - Nx - nx) * delta
            th1 = (j - i) <= c
            xa = -(half + i - 0.5) * delta
            xb = (half - i + 0.5) * delta
            thb = i >= nx + 1
            src = _chi0(x1, xa, th1, True, cls, fp) - _chi0(x1, xb, th1, thb, cls, fp)
            rhs += fp[F_SG] * src

        val = rhs / (inv + Wq)
        psi[i, j] = val
        if DEBUG:
            if wr[i, j] != 0:
                _note(viol, w, 1, i, j, i, j)
            wr[i, j] = 1
        return val

    @njit(cache=True, nogil=True)
    def solve_segment(psi, ghost, wr, i, j0, j1, ip, fp, viol, w):
        """Solve row ``i`` over columns ``j0 <= j < j1`` left to right."""
        for j in range(j0, j1):
            solve_cell(psi, ghost, wr, i, j, ip, fp, viol, w)

    @njit(cache=True, nogil=True)
    def solve_block(psi, ghost, wr, i0, i1, j0, j1, ip, fp, viol, w):
        """Row-major sweep of rows ``i0 <= i < i1`` over columns ``j0 <= j < j1``."""
        for i in range(i0, i1):
            for j in range(j0, j1):
                solve_cell(psi, ghost, wr, i, j, ip, fp, viol, w)

    @njit(cache=True, nogil=True)
    def solve_front(psi, ghost, wr, s, ilo, ihi, ip, fp, viol, w):
        """Solve cells ``(i, s - i)`` for ``ilo <= i < ihi``."""
        for i in range(ilo, ihi):
            solve_cell(psi, ghost, wr, i, s - i, ip, fp, viol, w)

    return SimpleNamespace(solve_cell=solve_cell, solve_segment=solve_segment,
                           solve_block=solve_block, solve_front=solve_front)


_RELEASE = _build(False)
_DEBUG = _build(True)


def kernels(debug: bool):
    return _DEBUG if debug else _RELEASE


# ---------------------------------------------------------------------------
# python-facing operations


def update_cell(g: GridField, i: int, j: int, ctx: KernelContext | None = None) -> complex:
    """Solve and store the single cell (i, j); returns the written value."""
    p = g.params
    if not (1 <= i < p.Ny and p.nx <= j < p.total_cols):
        raise IndexError(f"({i}, {j}) is not a solvable cell")
    ctx = ctx or make_context(p, debug=g.debug)
    viol = new_violations()
    val = kernels(ctx.debug).solve_cell(g.data, g.ghost, written_array(g), i, j, ctx.ip, ctx.fp, viol, 0)
    g.absorb_violations(viol)
    g.check_sentinel()
    return complex(val)


def hook_rows(p: SimParams) -> range:
    """Rows at which row hooks fire: every (Tstep+1)-th row, starting at 0."""
    return range(0, p.Ny, p.Tstep + 1)


def march_serial(g: GridField, p: SimParams | None = None, hooks=None, *,
                 ctx: KernelContext | None = None):
    """Row-major march over all solvable cells; ``hooks(i)`` fires after selected rows."""
    p = p or g.params
    ctx = ctx or make_context(p, debug=g.debug)
    viol = new_violations()
    wr = written_array(g)
    solve_block = kernels(ctx.debug).solve_block
    if hooks is None:
        solve_block(g.data, g.ghost, wr, 1, p.Ny, p.nx, p.total_cols, ctx.ip, ctx.fp, viol, 0)
    else:
        start = 1
        for r in hook_rows(p):
            if r >= start:
                solve_block(g.data, g.ghost, wr, start, r + 1, p.nx, p.total_cols, ctx.ip, ctx.fp, viol, 0)
                start = r + 1
            hooks(r)
        if start < p.Ny:
            solve_block(g.data, g.ghost, wr, start, p.Ny, p.nx, p.total_cols, ctx.ip, ctx.fp, viol, 0)
    g.absorb_violations(viol)
    g.check_sentinel()
    return g
