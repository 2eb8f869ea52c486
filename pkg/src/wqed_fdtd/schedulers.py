"""Multi-worker marches: a cyclic-lag row pipeline and three-region wavefronts.

Both reproduce the serial grid bit for bit: every cell is solved by the same
compiled update with the same reads, only the order of independent cells
changes.  Workers are Python threads; the compiled kernels release the GIL.
"""

from __future__ import annotations

import enum
import os
import threading
import time
from dataclasses import dataclass

import numpy as np

from .grid import GridField, initialize
from .kernel import hook_rows, kernels, make_context, march_serial, new_violations, written_array
from .params import SimParams

DEADLOCK_TIMEOUT = 30.0
DEFAULT_GRANULARITY = 256


class SchedulerDeadlock(RuntimeError):
    pass


class Mode(str, enum.Enum):
    SERIAL = "serial"
    SERIAL_NO_OVERHEAD = "serial-no-overhead"
    SWARM = "swarm"
    WAVEFRONT = "wavefront"


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# swarm


@dataclass
class SwarmState:
    """Published column of every row; row ``i`` belongs to worker ``(i-1) % n``."""

    n_workers: int
    progress: np.ndarray
    current_row: np.ndarray
    lock: threading.Lock
    conds: list

    @classmethod
    def create(cls, p: SimParams, n_workers: int):
        progress = np.full(p.Ny, p.nx, dtype=np.int64)
        progress[0] = p.total_cols
        lock = threading.Lock()
        conds = [threading.Condition(lock) for _ in range(n_workers)]
        return cls(n_workers, progress, np.zeros(n_workers, dtype=np.int64), lock, conds)

    def owner(self, row: int) -> int:
        return (row - 1) % self.n_workers

    def dump(self) -> str:
        parts = []
        for w in range(self.n_workers):
            r = int(self.current_row[w])
            col = int(self.progress[r]) if 0 < r < len(self.progress) else -1
            parts.append(f"worker {w}: row {r} col {col}")
        return "; ".join(parts)


def _allowed_end(progress, i, end, lag):
    """Exclusive column bound row ``i`` may reach given its predecessor."""
    prev = progress[i - 1]
    if prev >= end:
        return end
    return min(end, prev - lag + 1)


def run_swarm(g: GridField, p: SimParams | None = None, n_workers: int | None = None, *,
              lag: int | None = None, hooks=None, lockstep: bool = False,
              granularity: int = DEFAULT_GRANULARITY, timeout: float = DEADLOCK_TIMEOUT):
    """Row pipeline: worker w solves rows w+1, w+1+n, ... staying ``lag`` columns behind.

    ``lag`` defaults to nx, the smallest safe value.  ``lockstep`` replaces the
    threads with a deterministic round-robin in which every worker advances by
    at most one cell per round, each as far ahead as the lag allows.
    """
    p = p or g.params
    n = p.Nth if n_workers is None else int(n_workers)
    if n < 1:
        raise ValueError("n_workers must be positive")
    lag = p.nx if lag is None else int(lag)
    ctx = make_context(p, debug=g.debug)
    if lockstep:
        viol = new_violations(n)
        _swarm_lockstep(g, p, n, lag, ctx, viol, hooks)
    else:
        viol = new_violations(n)
        _swarm_threads(g, p, n, lag, ctx, viol, hooks, max(1, granularity), timeout)
    g.absorb_violations(viol)
    g.check_sentinel()
    return g


def _swarm_lockstep(g, p, n, lag, ctx, viol, hooks):
    psi, ghost, wr = g.data, g.ghost, written_array(g)
    end = p.total_cols
    solve_cell = kernels(ctx.debug).solve_cell
    progress = np.full(p.Ny, p.nx, dtype=np.int64)
    progress[0] = end
    rows = [1 + w for w in range(n)]
    pending_hooks = list(hook_rows(p))
    done_rows = 0
    while True:
        active = [w for w in range(n) if rows[w] < p.Ny]
        if not active:
            break
        # successors first, so each reads its predecessor's pre-round position
        for w in sorted(active, key=lambda w: -rows[w]):
            i = rows[w]
            j = progress[i]
            if j < _allowed_end(progress, i, end, lag):
                solve_cell(psi, ghost, wr, i, j, ctx.ip, ctx.fp, viol, w)
                progress[i] = j + 1
            if progress[i] == end:
                rows[w] = i + n
        while done_rows + 1 < p.Ny and progress[done_rows + 1] == end:
            done_rows += 1
        pending_hooks = _fire(hooks, pending_hooks, done_rows)
    _fire(hooks, pending_hooks, p.Ny - 1)


def _fire(hooks, pending, done_row):
    while pending and pending[0] <= done_row:
        r = pending.pop(0)
        if hooks is not None:
            hooks(r)
    return pending


def _swarm_threads(g, p, n, lag, ctx, viol, hooks, granularity, timeout):
    psi, ghost, wr = g.data, g.ghost, written_array(g)
    end = p.total_cols
    solve_segment = kernels(ctx.debug).solve_segment
    st = SwarmState.create(p, n)
    done_cond = threading.Condition(st.lock)
    errors: list[BaseException] = []
    abort = threading.Event()

    def worker(w):
        try:
            i = 1 + w
            pred = st.conds[(w - 1) % n]
            mine = st.conds[w]
            while i < p.Ny and not abort.is_set():
                st.current_row[w] = i
                j = p.nx
                while j < end:
                    with pred:
                        t0 = time.monotonic()
                        while True:
                            stop = _allowed_end(st.progress, i, end, lag)
                            if stop > j or abort.is_set():
                                break
                            if not pred.wait(timeout=1.0) and time.monotonic() - t0 > timeout:
                                raise SchedulerDeadlock(
                                    f"swarm made no progress for {timeout} s: {st.dump()}"
                                )
                    if abort.is_set():
                        return
                    stop = min(stop, j + granularity)
                    solve_segment(psi, ghost, wr, i, j, stop, ctx.ip, ctx.fp, viol, w)
                    j = stop
                    with mine:
                        st.progress[i] = j
                        mine.notify_all()
                        if j == end:
                            done_cond.notify_all()
                i += n
        except BaseException as exc:  # propagated to the caller
            errors.append(exc)
            abort.set()
            with st.lock:
                for c in st.conds:
                    c.notify_all()
                done_cond.notify_all()

    threads = [threading.Thread(target=worker, args=(w,), daemon=True) for w in range(n)]
    for t in threads:
        t.start()
    pending = list(hook_rows(p))
    if hooks is not None:
        for r in pending:
            with done_cond:
                while st.progress[r] != end and not abort.is_set():
                    done_cond.wait(timeout=1.0)
            if abort.is_set():
                break
            hooks(r)
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


# ---------------------------------------------------------------------------
# wavefront


@dataclass(frozen=True)
class WavefrontPlan:
    """Fronts of constant i + j in the two outer regions; a row sweep in between."""

    left: tuple   # (first col, last col) of x <= -a
    middle: tuple  # (first col, last col) of -a < x <= a
    right: tuple  # (first col, last col) of x > a, empty when first > last
    rows: tuple   # (first row, last row) solved

    @classmethod
    def create(cls, p: SimParams):
        c = p.center_col
        last = p.total_cols - 1
        return cls((p.nx, c), (c + 1, min(c + p.nx, last)), (c + p.nx + 1, last), (1, p.Ny - 1))

    @staticmethod
    def fronts(cols, rows):
        j0, j1 = cols
        i0, i1 = rows
        if j0 > j1 or i0 > i1:
            return []
        out = []
        for s in range(i0 + j0, i1 + j1 + 1):
            lo = max(i0, s - j1)
            hi = min(i1, s - j0)
            out.append((s, lo, hi + 1))
        return out


def _chunks(lo, hi, n):
    """Split [lo, hi) into n contiguous pieces (possibly empty)."""
    size = hi - lo
    base, extra = divmod(size, n)
    out = []
    start = lo
    for w in range(n):
        stop = start + base + (1 if w < extra else 0)
        out.append((start, stop))
        start = stop
    return out


def run_wavefront(g: GridField, p: SimParams | None = None, n_workers: int | None = None, *,
                  hooks=None, timeout: float = DEADLOCK_TIMEOUT):
    p = p or g.params
    n = p.Nth if n_workers is None else int(n_workers)
    if n < 1:
        raise ValueError("n_workers must be positive")
    ctx = make_context(p, debug=g.debug)
    viol = new_violations(n)
    psi, ghost, wr = g.data, g.ghost, written_array(g)
    kern = kernels(ctx.debug)
    solve_front, solve_block = kern.solve_front, kern.solve_block
    plan = WavefrontPlan.create(p)
    left = plan.fronts(plan.left, plan.rows)
    right = plan.fronts(plan.right, plan.rows)
    last = p.total_cols - 1
    pending = list(hook_rows(p))
    barrier = threading.Barrier(n, timeout=timeout)
    errors: list[BaseException] = []

    def worker(w):
        nonlocal pending
        try:
            for s, lo, hi in left:
                a, b = _chunks(lo, hi, n)[w]
                if a < b:
                    solve_front(psi, ghost, wr, s, a, b, ctx.ip, ctx.fp, viol, w)
                barrier.wait()
            if w == 0:
                m0, m1 = plan.middle
                solve_block(psi, ghost, wr, 1, p.Ny, m0, m1 + 1, ctx.ip, ctx.fp, viol, 0)
            barrier.wait()
            for s, lo, hi in right:
                a, b = _chunks(lo, hi, n)[w]
                if a < b:
                    solve_front(psi, ghost, wr, s, a, b, ctx.ip, ctx.fp, viol, w)
                barrier.wait()
                if w == 0 and hooks is not None:
                    # row s - last has just been completed
                    pending = _fire(hooks, pending, s - last)
        except threading.BrokenBarrierError as exc:
            if not errors:
                errors.append(SchedulerDeadlock(f"wavefront barrier broken or timed out: {exc!r}"))
        except BaseException as exc:
            errors.append(exc)
            barrier.abort()

    if n == 1:
        worker(0)
    else:
        threads = [threading.Thread(target=worker, args=(w,), daemon=True) for w in range(n)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if errors:
        real = [e for e in errors if not isinstance(e, SchedulerDeadlock)]
        raise (real or errors)[0]
    if hooks is not None:
        _fire(hooks, pending, p.Ny - 1)
    g.absorb_violations(viol)
    g.check_sentinel()
    return g


# ---------------------------------------------------------------------------
# dispatch and timing


def run(g: GridField, p: SimParams | None = None, mode: Mode | str = Mode.SERIAL,
        n_workers: int | None = None, hooks=None):
    p = p or g.params
    mode = Mode(mode)
    if mode in (Mode.SERIAL_NO_OVERHEAD,):
        return march_serial(g, p, hooks)
    if mode == Mode.SERIAL:
        # one worker thread with the full pipeline machinery
        return run_swarm(g, p, 1, hooks=hooks)
    if mode == Mode.SWARM:
        return run_swarm(g, p, n_workers, hooks=hooks)
    return run_wavefront(g, p, n_workers, hooks=hooks)


@dataclass(frozen=True)
class BenchSample:
    mode: str
    workers: int
    run_index: int
    elapsed_seconds: float

    def csv(self) -> str:
        return f"{self.mode},{self.workers},{self.run_index},{self.elapsed_seconds:.6f}"


BENCH_HEADER = "mode,workers,run_index,elapsed_seconds"


def benchmark(p: SimParams, mode: Mode | str, n_workers: int = 1, repeats: int = 10,
              *, warmup: bool = True) -> list[BenchSample]:
    """Wall-clock samples of the march alone (initialization excluded)."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    mode = Mode(mode)
    workers = 1 if mode in (Mode.SERIAL, Mode.SERIAL_NO_OVERHEAD) else int(n_workers)
    if warmup:
        small = p.replace(Nx=max(p.nx // 2 + 1, 4), Ny=4)
        run(initialize(small), small, mode, workers)
    out = []
    for r in range(repeats):
        g = initialize(p)
        t0 = time.perf_counter()
        run(g, p, mode, workers)
        out.append(BenchSample(mode.value, workers, r, time.perf_counter() - t0))
    return out
