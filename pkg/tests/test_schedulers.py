import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wqed_fdtd import schedulers
from wqed_fdtd.grid import UnwrittenReadError, initialize
from wqed_fdtd.kernel import march_serial
from wqed_fdtd.schedulers import (
    BENCH_HEADER,
    Mode,
    SchedulerDeadlock,
    WavefrontPlan,
    benchmark,
    run,
    run_swarm,
    run_wavefront,
)

from conftest import make_params


def bits(g):
    return g.data.view(np.int64)


def serial_reference(p):
    return march_serial(initialize(p))


def random_config(rng):
    nx = rng.choice([2, 4, 8])
    return dict(
        nx=nx,
        Nx=rng.randint(nx // 2 + 1, 20),
        Ny=rng.randint(2, 40),
        init_cond=rng.choice([1, 2, 3]),
    ), rng.randint(1, 8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_modes_bit_identical_with_clean_sentinel(seed):
    cfg, n = random_config(random.Random(seed))
    p = make_params(**cfg)
    ref = serial_reference(p)
    for g in (run_swarm(initialize(p, debug=True), p, n),
              run_swarm(initialize(p, debug=True), p, n, lockstep=True),
              run_wavefront(initialize(p, debug=True), p, n)):
        assert g.read_before_write == 0 and g.double_writes == 0
        assert g.fully_written()
        assert np.array_equal(bits(g), bits(ref))


def test_single_worker_swarm_equals_serial():
    p = make_params(Nx=20, nx=6, Ny=30)
    assert np.array_equal(bits(run_swarm(initialize(p), p, 1)), bits(serial_reference(p)))


def test_four_workers_toy_grid():
    p = make_params(Nx=22, nx=4, Ny=50)
    assert p.total_cols == 49
    ref = serial_reference(p)
    assert np.array_equal(bits(run_swarm(initialize(p, debug=True), p, 4)), bits(ref))


@pytest.mark.parametrize("n", [1, 8])
def test_wavefront_workers_toy_grid(n):
    p = make_params(Nx=22, nx=4, Ny=50, init_cond=3)
    ref = serial_reference(p)
    assert np.array_equal(bits(run_wavefront(initialize(p, debug=True), p, n)), bits(ref))


def test_small_granularity_publishes_every_cell():
    p = make_params(Nx=22, nx=4, Ny=50)
    g = run_swarm(initialize(p, debug=True), p, 3, granularity=1)
    assert np.array_equal(bits(g), bits(serial_reference(p)))


def test_more_workers_than_rows_or_front_cells():
    p = make_params(Nx=3, nx=2, Ny=3)
    ref = serial_reference(p)
    assert np.array_equal(bits(run_swarm(initialize(p, debug=True), p, 8)), bits(ref))
    assert np.array_equal(bits(run_wavefront(initialize(p, debug=True), p, 8)), bits(ref))


def test_lag_below_nx_trips_sentinel():
    p = make_params(Nx=8, Ny=30, nx=4, init_cond=1)
    with pytest.raises(UnwrittenReadError) as info:
        run_swarm(initialize(p, debug=True), p, 4, lag=p.nx - 1, lockstep=True)
    assert "read-before-write" in str(info.value)
    g = run_swarm(initialize(p, debug=True), p, 4, lag=p.nx, lockstep=True)
    assert g.read_before_write == 0


@pytest.mark.parametrize("mode", list(Mode))
def test_hooks_fire_in_order_on_completed_rows(mode):
    p = make_params(Nx=12, nx=4, Ny=37, Tstep=3)
    g = initialize(p, debug=True)
    seen = []

    def hook(r):
        assert g.written[: r + 1].all(), r
        seen.append(r)

    run(g, p, mode, 3, hooks=hook)
    assert seen == list(range(0, 37, 4))


def test_lockstep_hooks():
    p = make_params(Nx=12, nx=4, Ny=21, Tstep=4)
    g = initialize(p, debug=True)
    seen = []
    run_swarm(g, p, 3, lockstep=True, hooks=lambda r: seen.append((r, bool(g.written[: r + 1].all()))))
    assert seen == [(r, True) for r in range(0, 21, 5)]


def test_deadlock_is_reported(monkeypatch):
    monkeypatch.setattr(schedulers, "_allowed_end", lambda progress, i, end, lag: progress[i])
    p = make_params(Nx=8, nx=4, Ny=6)
    with pytest.raises(SchedulerDeadlock) as info:
        run_swarm(initialize(p), p, 2, timeout=0.2)
    assert "worker 0" in str(info.value)


def test_invalid_worker_count():
    p = make_params()
    with pytest.raises(ValueError):
        run_swarm(initialize(p), p, 0)
    with pytest.raises(ValueError):
        run_wavefront(initialize(p), p, 0)


def test_wavefront_plan_regions():
    p = make_params(Nx=10, nx=4, Ny=7)
    plan = WavefrontPlan.create(p)
    assert plan.left == (p.nx, p.center_col)
    assert plan.middle == (p.center_col + 1, p.plus_a_col)
    assert plan.right == (p.plus_a_col + 1, p.total_cols - 1)
    cells = set()
    for s, lo, hi in plan.fronts(plan.left, plan.rows):
        for i in range(lo, hi):
            cells.add((i, s - i))
    expect = {(i, j) for i in range(1, p.Ny) for j in range(p.nx, p.center_col + 1)}
    assert cells == expect


def test_benchmark_rows_and_csv():
    p = make_params(Nx=30, nx=4, Ny=40)
    samples = benchmark(p, "wavefront", 2, repeats=10)
    assert len(samples) == 10
    assert [s.run_index for s in samples] == list(range(10))
    assert BENCH_HEADER == "mode,workers,run_index,elapsed_seconds"
    fields = samples[3].csv().split(",")
    assert fields[:3] == ["wavefront", "2", "3"] and float(fields[3]) > 0
    with pytest.raises(ValueError):
        benchmark(p, "swarm", 2, repeats=0)


def test_synchronization_overhead_is_measurable():
    # one pipeline worker publishing after every cell against the bare march
    import time

    p = make_params(Nx=300, nx=20, Ny=30, init_cond=2)
    run_swarm(initialize(p), p, 1, granularity=1)
    march_serial(initialize(p))
    plain, piped = [], []
    for _ in range(3):
        g = initialize(p)
        t0 = time.perf_counter()
        march_serial(g)
        plain.append(time.perf_counter() - t0)
        g = initialize(p)
        t0 = time.perf_counter()
        run_swarm(g, p, 1, granularity=1)
        piped.append(time.perf_counter() - t0)
    assert min(plain) < min(piped)


def test_serial_modes_benchmark():
    p = make_params(Nx=200, nx=10, Ny=100, init_cond=2)
    for mode in (Mode.SERIAL, Mode.SERIAL_NO_OVERHEAD):
        samples = benchmark(p, mode, 4, repeats=2)
        assert [s.workers for s in samples] == [1, 1]
