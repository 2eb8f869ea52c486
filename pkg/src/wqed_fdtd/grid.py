"""The psi spacetime array, its index maps and the analytic initial/boundary fill.

Layout: row ``i`` is time ``t = i*Delta`` (rows 0..Ny-1), column ``j`` is
``x = (j - Nx - nx)*Delta``.  Columns ``0..nx-1`` form the analytic boundary
strip (all strictly left of x = -a); columns ``nx..`` are solved, and x = -a
sits exactly in the middle column ``Nx + nx/2``.  The delay square of the
leftmost solved column reaches one column further left, so the analytic
values at x = -(Nx + nx + 1)*Delta are kept in a separate ``ghost`` column.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np

from .exact import BoundaryClass, BoundarySolution, Wavepacket
from .params import InitCond, SimParams, memory_estimate


class AllocationError(MemoryError):
    pass


class GeometryError(RuntimeError):
    pass


class UnwrittenReadError(RuntimeError):
    """A cell was read before anything wrote it (the data-race sentinel)."""


class RegionTag(enum.IntEnum):
    LEFT_OF_MIRROR_IMAGE = 0
    BETWEEN_COUPLINGS = 1
    RIGHT_OF_QUBIT = 2
    BOUNDARY = 3
    INITIAL_ROW = 4


def region_of(i: int, j: int, p: SimParams) -> RegionTag:
    if i == 0:
        return RegionTag.INITIAL_ROW
    if j < p.nx:
        return RegionTag.BOUNDARY
    if j <= p.center_col:
        return RegionTag.LEFT_OF_MIRROR_IMAGE
    if j <= p.plus_a_col:
        return RegionTag.BETWEEN_COUPLINGS
    return RegionTag.RIGHT_OF_QUBIT


def physical_memory_bytes() -> int:
    try:
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        return 2**63 - 1


@dataclass
class GridField:
    """Complex psi grid plus, in debug mode, a per-cell written flag."""

    params: SimParams
    data: np.ndarray
    written: np.ndarray | None = None
    read_before_write: int = 0
    double_writes: int = 0
    first_violation: tuple | None = None
    boundary: BoundarySolution | None = field(default=None, repr=False)
    ghost: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.ghost is None:
            self.ghost = np.zeros(self.data.shape[0], dtype=np.complex128)

    @property
    def debug(self) -> bool:
        return self.written is not None

    @property
    def shape(self):
        return self.data.shape

    def col_of_x(self, x: float) -> int:
        p = self.params
        j = round(x / p.Delta) + p.Nx + p.nx
        return int(j)

    def x_of_col(self, j):
        return self.params.x_of_col(j)

    def row_of_t(self, t: float) -> int:
        return int(round(t / self.params.Delta))

    def t_of_row(self, i):
        return self.params.t_of_row(i)

    def watermark(self) -> np.ndarray:
        """Per row, the number of leading columns already written (debug only)."""
        if self.written is None:
            raise RuntimeError("watermark needs a debug grid")
        w = self.written.astype(bool)
        full = w.all(axis=1)
        first_gap = np.argmin(w, axis=1)
        return np.where(full, w.shape[1], first_gap)

    def fully_written(self) -> bool:
        if self.written is None:
            raise RuntimeError("coverage check needs a debug grid")
        return bool(self.written.all())

    def mark(self, rows, cols):
        if self.written is not None:
            self.written[rows, cols] = 1

    def lookup(self, x_index: int, t_index: int) -> complex:
        Ny, ncols = self.data.shape
        if not (0 <= t_index < Ny and 0 <= x_index < ncols):
            raise IndexError(f"cell (t={t_index}, x={x_index}) is outside the {Ny}x{ncols} grid")
        if self.written is not None and not self.written[t_index, x_index]:
            raise UnwrittenReadError(f"cell (t={t_index}, x={x_index}) has not been written")
        return complex(self.data[t_index, x_index])

    def absorb_violations(self, viol: np.ndarray):
        """Fold per-worker sentinel counters from a kernel run into the grid."""
        self.read_before_write += int(viol[:, 0].sum())
        self.double_writes += int(viol[:, 1].sum()) + int(viol[:, 2].sum())
        if self.first_violation is None:
            hit = np.nonzero(viol[:, 0] + viol[:, 1] + viol[:, 2])[0]
            if hit.size:
                self.first_violation = tuple(int(v) for v in viol[hit[0], 3:7])

    def check_sentinel(self):
        if self.read_before_write or self.double_writes:
            raise UnwrittenReadError(
                f"sentinel: {self.read_before_write} read-before-write and "
                f"{self.double_writes} double-write/out-of-range events; first at "
                f"(row, col, read_row, read_col) = {self.first_violation}"
            )


def allocate(p: SimParams, *, debug: bool = False, max_bytes: int | None = None) -> GridField:
    nbytes = memory_estimate(p)
    limit = physical_memory_bytes() if max_bytes is None else max_bytes
    if nbytes > limit:
        raise AllocationError(f"grid needs {nbytes} bytes, above the limit of {limit} bytes")
    try:
        data = np.zeros((p.Ny, p.total_cols), dtype=np.complex128)
        written = np.zeros((p.Ny, p.total_cols), dtype=np.uint8) if debug else None
    except MemoryError as exc:
        raise AllocationError(f"could not allocate {nbytes} bytes for the grid") from exc
    return GridField(p, data, written, boundary=boundary_solution(p))


def boundary_solution(p: SimParams) -> BoundarySolution:
    return BoundarySolution(
        cls=BoundaryClass(int(p.init_cond)),
        w0=p.w0,
        gamma=p.gamma,
        a=p.a,
        k=p.k,
        alpha=p.alpha,
        k1=p.k1,
        k2=p.k2,
        alpha1=p.alpha1,
        alpha2=p.alpha2,
        identical=p.identical_photons,
    )


def initial_row(p: SimParams) -> np.ndarray:
    """psi(x, 0) on every column."""
    if p.init_cond != InitCond.STIMULATED_EMISSION:
        return np.zeros(p.total_cols, dtype=np.complex128)
    j = np.arange(p.total_cols)
    x = p.x_of_col(j)
    out = np.zeros(p.total_cols, dtype=np.complex128)
    left = j <= p.center_col
    out[left] = Wavepacket(p.k, p.alpha, p.gamma, p.a)(x[left])
    return out


def initial_value(p: SimParams, x: float) -> complex:
    """psi(x, 0) at a single point left of -a."""
    if p.init_cond != InitCond.STIMULATED_EMISSION:
        return 0j
    return complex(Wavepacket(p.k, p.alpha, p.gamma, p.a)(np.array([x]))[0])


def fill_initial_row(g: GridField, p: SimParams | None = None):
    p = p or g.params
    g.data[0, :] = initial_row(p)
    g.ghost[0] = initial_value(p, p.x_of_col(-1))
    g.mark(0, slice(None))


def fill_boundary(g: GridField, p: SimParams | None = None):
    p = p or g.params
    if p.nx > 0 and p.x_of_col(p.nx - 1) >= -p.a:
        raise GeometryError("boundary strip reaches x >= -a")
    sol = g.boundary or boundary_solution(p)
    i = np.arange(1, p.Ny)
    t = p.t_of_row(i)
    x = p.x_of_col(np.arange(-1, p.nx))
    amps = sol.amplitudes(t)
    amps = tuple(np.asarray(A)[:, None] for A in amps)
    strip = sol.from_amplitudes(x[None, :], t[:, None], amps)
    g.ghost[1:] = strip[:, 0]
    g.data[1:, : p.nx] = strip[:, 1:]
    g.mark(slice(1, None), slice(0, p.nx))


def initialize(p: SimParams, *, debug: bool = False, max_bytes: int | None = None) -> GridField:
    g = allocate(p, debug=debug, max_bytes=max_bytes)
    fill_initial_row(g, p)
    fill_boundary(g, p)
    return g
