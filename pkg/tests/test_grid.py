import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wqed_fdtd.exact import e0, e1, phi
from wqed_fdtd.grid import (
    AllocationError,
    RegionTag,
    UnwrittenReadError,
    allocate,
    fill_boundary,
    fill_initial_row,
    initialize,
    region_of,
)
from wqed_fdtd.kernel import march_serial

from conftest import make_params


def test_allocate_large_grid_refused_with_byte_count():
    p = make_params(Nx=4000, Ny=40000, nx=200)
    assert (p.Ny, p.total_cols) == (40000, 8201)
    with pytest.raises(AllocationError) as info:
        allocate(p, max_bytes=1 << 30)
    assert "5248640000" in str(info.value)


def test_allocate_minimal_grid():
    g = allocate(make_params(Nx=1, Ny=2, nx=2))
    assert g.shape == (2, 5)
    assert not g.data.any()
    assert g.ghost.shape == (2,)


def test_center_column_small_grid():
    p = make_params(Nx=10, nx=4)
    assert p.center_col == 12
    assert p.x_of_col(12) == pytest.approx(-2 * p.Delta)
    assert p.x_of_col(12) == pytest.approx(-p.a)


def test_debug_grid_starts_unwritten():
    g = allocate(make_params(), debug=True)
    assert g.debug
    assert not g.written.any()
    assert np.all(g.watermark() == 0)


def test_initial_row_plane_wave_is_zero():
    g = initialize(make_params(init_cond=1))
    assert not g.data[0].any()


def test_initial_row_stimulated_emission():
    p = make_params(init_cond=2, k=1.3, alpha=0.5, Nx=12, nx=4)
    g = allocate(p)
    fill_initial_row(g)
    x = -p.a - p.Delta
    ag = p.alpha * p.gamma
    ref = 1j * math.sqrt(ag) * cmath.exp(1j * p.k * x - ag * p.Delta / 2)
    assert g.data[0, p.center_col - 1] == pytest.approx(ref, abs=1e-15)
    assert not g.data[0, p.center_col + 1:].any()
    # theta(0) = 1: the front cell carries the full amplitude
    assert abs(g.data[0, p.center_col]) == pytest.approx(math.sqrt(ag), rel=1e-14)


def test_boundary_plane_wave_cells():
    p = make_params(init_cond=1, Nx=10, nx=6, Ny=30)
    g = initialize(p)
    for i in (1, 7, 29):
        t = p.t_of_row(i)
        for j in (0, 3, p.nx - 1):
            x = p.x_of_col(j)
            ref = math.sqrt(2) * cmath.exp(1j * p.k * (x - t)) * e0(t, p.k, p.w0, p.gamma, p.a)
            assert g.data[i, j] == pytest.approx(ref, abs=1e-14)


def test_boundary_stimulated_emission_cells():
    p = make_params(init_cond=2, Nx=10, nx=6, Ny=30)
    g = initialize(p)
    for i in (1, 12, 29):
        t = p.t_of_row(i)
        for j in (0, 2, p.nx - 1):
            x = p.x_of_col(j)
            ref = phi(x - t, p.k, p.alpha, p.gamma, p.a) * e1(t, p.w0, p.gamma, p.a)
            assert g.data[i, j] == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("cls", [1, 2, 3])
def test_boundary_row_zero_consistency(cls):
    p = make_params(init_cond=cls, Nx=10, nx=6)
    g = allocate(p)
    fill_initial_row(g)
    fill_boundary(g)
    sol = g.boundary
    x = p.x_of_col(np.arange(p.nx))
    assert np.max(np.abs(sol(x, 0.0) - g.data[0, : p.nx])) <= 1e-15


@pytest.mark.parametrize("cls", [1, 2, 3])
def test_ghost_column_holds_analytic_values(cls):
    p = make_params(init_cond=cls, Nx=10, nx=6, Ny=25)
    g = initialize(p)
    x = p.x_of_col(-1)
    t = p.t_of_row(np.arange(p.Ny))
    ref = g.boundary(np.full_like(t, x), t)
    assert np.max(np.abs(g.ghost - ref)) <= 1e-14


def test_boundary_marks_written_cells():
    p = make_params(Nx=6, nx=4, Ny=9)
    g = initialize(p, debug=True)
    assert g.written[0].all()
    assert g.written[:, : p.nx].all()
    assert not g.written[1:, p.nx:].any()
    wm = g.watermark()
    assert wm[0] == p.total_cols and np.all(wm[1:] == p.nx)


def test_lookup_boundary_and_unwritten():
    p = make_params(Nx=6, nx=4, Ny=9)
    g = initialize(p, debug=True)
    assert g.lookup(2, 5) == complex(g.data[5, 2])
    with pytest.raises(UnwrittenReadError):
        g.lookup(p.nx, 3)
    with pytest.raises(IndexError):
        g.lookup(p.total_cols, 0)
    march_serial(g)
    assert g.fully_written()
    assert g.lookup(p.nx, 3) == complex(g.data[3, p.nx])


@settings(max_examples=300, deadline=None)
@given(half=st.integers(1, 40), extra=st.integers(0, 60), data=st.data())
def test_delay_square_stays_in_grid_and_behind(half, extra, data):
    nx = 2 * half
    Nx = half + 1 + extra
    p = make_params(Nx=Nx, nx=nx, Ny=4 * nx + 4)
    i = data.draw(st.integers(nx + 1, p.Ny - 1))
    j = data.draw(st.integers(nx, p.total_cols - 1))
    # delay-square corners: rows i-nx-1, i-nx; columns j-nx-1, j-nx
    rows = (i - nx - 1, i - nx)
    cols = (j - nx - 1, j - nx)
    assert min(rows) >= 0
    assert max(cols) < p.total_cols
    # the leftmost corner falls on the analytic ghost column only for the first solved column
    assert min(cols) >= -1
    assert (min(cols) == -1) == (j == nx)
    # every corner is at least nx columns behind the cell being solved
    assert j - max(cols) >= nx


def test_region_tags_partition():
    p = make_params(Nx=10, nx=4, Ny=6)
    tags = np.array([[region_of(i, j, p) for j in range(p.total_cols)] for i in range(p.Ny)])
    assert np.all(tags[0] == RegionTag.INITIAL_ROW)
    assert np.all(tags[1:, : p.nx] == RegionTag.BOUNDARY)
    x = p.x_of_col(np.arange(p.total_cols))
    sol = np.arange(p.nx, p.total_cols)
    left = tags[1, sol] == RegionTag.LEFT_OF_MIRROR_IMAGE
    mid = tags[1, sol] == RegionTag.BETWEEN_COUPLINGS
    right = tags[1, sol] == RegionTag.RIGHT_OF_QUBIT
    assert np.all(x[sol][left] <= -p.a + 1e-12)
    assert np.all((x[sol][mid] > -p.a + 1e-12) & (x[sol][mid] <= p.a + 1e-12))
    assert np.all(x[sol][right] > p.a + 1e-12)
    assert np.all(left.astype(int) + mid + right == 1)
