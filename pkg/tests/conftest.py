import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wqed_fdtd.params import validate_values  # noqa: E402


def make_params(**kw):
    """Small valid parameter set; keyword overrides win."""
    base = dict(Nx=8, Ny=20, nx=4, Delta=0.1, k=1.3, w0=1.1, gamma=0.7, init_cond=1,
                alpha=0.5, save_psi=True)
    base.update(kw)
    return validate_values(base)


@pytest.fixture
def params_factory():
    return make_params


def left_region_exact(g, rows=None):
    """Analytic psi on every column with x <= -a, for the given rows (default 1..Ny-1)."""
    import numpy as np

    p = g.params
    rows = np.arange(1, p.Ny) if rows is None else np.asarray(rows)
    x = p.x_of_col(np.arange(p.center_col + 1))
    t = p.t_of_row(rows)
    amps = tuple(np.asarray(A)[:, None] for A in g.boundary.amplitudes(t))
    return g.boundary.from_amplitudes(x[None, :], t[:, None], amps)


def left_region_relative_error(g, floor=1e-3):
    """Max relative error over x <= -a and rows >= 1, ignoring cells below floor * max|exact|."""
    import numpy as np

    p = g.params
    ex = left_region_exact(g)
    num = g.data[1:, : p.center_col + 1]
    mask = np.abs(ex) > floor * np.abs(ex).max()
    return float((np.abs(num - ex)[mask] / np.abs(ex)[mask]).max())


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.RESULTS):
        verdict, detail = acceptance_log.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
