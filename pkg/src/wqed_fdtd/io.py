"""Output files: psi as text or binary, chi slices, |psi|^2 integrals, NM records, manifest.

Only columns with x >= -a are written for psi; the region x < -a is known in
closed form.  Rows are those with i % (Tstep + 1) == 0.

Binary psi layout (little endian)::

    offset 0   4s   magic b"DFDT"
           4   u32  format version
           8   i64  Nx
          16   i64  Ny
          24   i64  nx
          32   f64  Delta
          40   i64  Tstep
          48   i64  number of columns per row
          56   8 reserved bytes (zero)
          64   rows * cols complex128 values, row major
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import SimParams

MAGIC = b"DFDT"
VERSION = 1
HEADER = struct.Struct("<4sIqqqdqq")
HEADER_SIZE = 64
FLOAT_FMT = "%+.16e"
FLOAT_WIDTH = 23  # sign, 17 digits, point, 'e', exponent sign, 2 exponent digits
# magnitudes that round (at 17 significant digits) to a three-digit decimal exponent
_WIDE_BELOW = 9.9999999999999995e-100
_WIDE_FROM = 9.9999999999999995e99

PSI_TEXT = "psi.txt"
PSI_BINARY = "psi.bin"
CHI_TEXT = "chi.txt"
INTEGRAL_TEXT = "psi_square_integral.txt"
NM_TEXT = "nm.txt"
MANIFEST = "manifest.txt"
PARTIAL_SUFFIX = ".partial"


class BinaryFormatError(ValueError):
    pass


@dataclass(frozen=True)
class OutputPlan:
    save_chi: bool
    save_psi: bool
    save_psi_binary: bool
    save_psi_square_integral: bool
    measure_NM: bool
    Tstep: int
    Ny: int
    first_col: int
    ncols: int

    @classmethod
    def from_params(cls, p: SimParams):
        return cls(p.save_chi, p.save_psi, p.save_psi_binary, p.save_psi_square_integral,
                   p.measure_NM, p.Tstep, p.Ny, p.center_col, p.total_cols - p.center_col)

    @property
    def rows(self) -> np.ndarray:
        return np.arange(0, self.Ny, self.Tstep + 1)

    @property
    def col_slice(self) -> slice:
        return slice(self.first_col, self.first_col + self.ncols)

    def files(self) -> list[str]:
        out = []
        if self.save_psi:
            out.append(PSI_TEXT)
        if self.save_psi_binary:
            out.append(PSI_BINARY)
        if self.save_chi:
            out.append(CHI_TEXT)
        if self.save_psi_square_integral:
            out.append(INTEGRAL_TEXT)
        if self.measure_NM:
            out.append(NM_TEXT)
        return out


class _atomic_open:
    """Write to ``path.partial`` and rename on success; the marker stays on failure."""

    def __init__(self, path, mode):
        self.path = Path(path)
        self.tmp = self.path.with_name(self.path.name + PARTIAL_SUFFIX)
        self.mode = mode

    def __enter__(self):
        self.fh = open(self.tmp, self.mode)
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        return False


def _header_text(p: SimParams | None, columns: str) -> str:
    lines = [] if p is None else [f"# {h}" for h in p.header_lines()]
    lines.append(f"# columns: {columns}")
    return "\n".join(lines) + "\n"


def _write_table(fh, table: np.ndarray):
    if table.size == 0:
        return
    np.savetxt(fh, table, fmt=FLOAT_FMT, delimiter=" ")


# ---------------------------------------------------------------------------
# psi


def psi_rows_for_output(data: np.ndarray, plan: OutputPlan) -> np.ndarray:
    return data[plan.rows, plan.col_slice]


def psi_text_table(data: np.ndarray, plan: OutputPlan, delta: float) -> np.ndarray:
    block = psi_rows_for_output(data, plan)
    table = np.empty((block.shape[0], 1 + 2 * block.shape[1]), dtype=np.float64)
    table[:, 0] = plan.rows * delta
    table[:, 1::2] = block.real
    table[:, 2::2] = block.imag
    return table


def write_psi_text(path, data: np.ndarray, plan: OutputPlan, p: SimParams | None = None,
                   delta: float | None = None) -> Path:
    delta = p.Delta if delta is None else delta
    table = psi_text_table(data, plan, delta)
    with _atomic_open(path, "w") as fh:
        fh.write(_header_text(p, "t re(psi(x0)) im(psi(x0)) ... with x0 = -a"))
        _write_table(fh, table)
    return Path(path)


def read_psi_text(path):
    """Return (t, psi) with psi of shape (rows, cols)."""
    table = np.loadtxt(path, comments="#", ndmin=2)
    t = table[:, 0]
    psi = np.empty((table.shape[0], (table.shape[1] - 1) // 2), dtype=np.complex128)
    psi.real = table[:, 1::2]
    psi.imag = table[:, 2::2]
    return t, psi


def text_field_widths(values) -> np.ndarray:
    """Characters FLOAT_FMT uses per value; a three-digit exponent adds one."""
    a = np.abs(np.asarray(values, dtype=np.float64))
    wide = (a != 0) & ((a < _WIDE_BELOW) | (a >= _WIDE_FROM))
    return FLOAT_WIDTH + wide.astype(np.int64)


def text_line_bytes(n_values: int) -> int:
    """Bytes of one data line of n_values numbers with two-digit exponents."""
    return n_values * FLOAT_WIDTH + (n_values - 1) + 1


def text_table_bytes(table: np.ndarray) -> int:
    """Bytes _write_table emits: the fields, one separator or newline per field."""
    return int(text_field_widths(table).sum()) + table.size


def predicted_psi_text_bytes(data: np.ndarray, plan: OutputPlan, header: str, delta: float) -> int:
    return len(header.encode()) + text_table_bytes(psi_text_table(data, plan, delta))


def write_psi_binary(path, data: np.ndarray, plan: OutputPlan, p: SimParams) -> Path:
    block = np.ascontiguousarray(psi_rows_for_output(data, plan), dtype="<c16")
    head = HEADER.pack(MAGIC, VERSION, p.Nx, p.Ny, p.nx, p.Delta, p.Tstep, block.shape[1])
    head += b"\0" * (HEADER_SIZE - len(head))
    with _atomic_open(path, "wb") as fh:
        fh.write(head)
        fh.write(block.tobytes())
    return Path(path)


@dataclass(frozen=True)
class BinaryHeader:
    version: int
    Nx: int
    Ny: int
    nx: int
    Delta: float
    Tstep: int
    ncols: int


def read_psi_binary(path):
    """Return (header, psi) with psi of shape (rows, ncols)."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise BinaryFormatError(f"{path}: {len(raw)} bytes, shorter than the {HEADER_SIZE}-byte header")
    magic, version, Nx, Ny, nx, Delta, Tstep, ncols = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BinaryFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise BinaryFormatError(f"{path}: unsupported version {version}")
    if ncols <= 0:
        raise BinaryFormatError(f"{path}: nonpositive column count {ncols}")
    body = len(raw) - HEADER_SIZE
    if body % (16 * ncols):
        raise BinaryFormatError(f"{path}: payload of {body} bytes is not a whole number of rows")
    psi = np.frombuffer(raw, dtype="<c16", offset=HEADER_SIZE).reshape(-1, ncols)
    return BinaryHeader(version, Nx, Ny, nx, Delta, Tstep, ncols), psi.astype(np.complex128)


def predicted_psi_binary_bytes(plan: OutputPlan) -> int:
    return HEADER_SIZE + 16 * len(plan.rows) * plan.ncols


# ---------------------------------------------------------------------------
# derived records


def write_chi_text(path, slices, p: SimParams | None = None) -> Path:
    parts = []
    for s in slices:
        n = len(s.tau_values)
        tab = np.empty((n, 4))
        tab[:, 0] = s.t
        tab[:, 1] = s.tau_values
        tab[:, 2] = s.chi.real
        tab[:, 3] = s.chi.imag
        parts.append(tab)
    table = np.vstack(parts) if parts else np.empty((0, 4))
    with _atomic_open(path, "w") as fh:
        fh.write(_header_text(p, "t tau re(chi) im(chi) at x1 = a + Delta, x2 = x1 + tau"))
        _write_table(fh, table)
    return Path(path)


def write_integrals(path, records, p: SimParams | None = None) -> Path:
    table = np.array([[r.t, r.value] for r in records], dtype=np.float64).reshape(-1, 2)
    with _atomic_open(path, "w") as fh:
        fh.write(_header_text(p, "t integral(|psi|^2 dx)"))
        _write_table(fh, table)
    return Path(path)


def write_nm(path, records, p: SimParams | None = None) -> Path:
    table = np.array(
        [[r.t, r.mu.real, r.mu.imag, r.lam, r.detM, r.n_geo_partial,
          r.e0.real, r.e0.imag, r.e1.real, r.e1.imag] for r in records],
        dtype=np.float64,
    ).reshape(-1, 10)
    with _atomic_open(path, "w") as fh:
        fh.write(_header_text(p, "t re(mu) im(mu) lambda detM n_geo_partial re(e0) im(e0) re(e1) im(e1)"))
        _write_table(fh, table)
    return Path(path)


def read_table(path) -> np.ndarray:
    return np.loadtxt(path, comments="#", ndmin=2)


# ---------------------------------------------------------------------------
# manifest


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir, p: SimParams, files, timings: dict) -> Path:
    outdir = Path(outdir)
    lines = ["# run manifest; written last, its presence marks a completed run"]
    lines += [f"param {h}" for h in p.header_lines()]
    lines.append(f"grid rows={p.Ny} cols={p.total_cols} center_col={p.center_col} "
                 f"plus_a_col={p.plus_a_col}")
    lines.append(f"Tmax {p.Tmax}")
    for name in files:
        fp = outdir / name
        lines.append(f"file {name} bytes={fp.stat().st_size} sha256={sha256_of(fp)}")
    for k, v in timings.items():
        lines.append(f"time {k} {v:.6f}")
    path = outdir / MANIFEST
    with _atomic_open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_manifest(path) -> dict:
    out = {"files": {}, "params": {}, "times": {}}
    for line in Path(path).read_text().splitlines():
        if line.startswith("file "):
            _, name, size, digest = line.split()
            out["files"][name] = (int(size.split("=")[1]), digest.split("=")[1])
        elif line.startswith("param "):
            k, _, v = line[6:].partition("=")
            out["params"][k] = v
        elif line.startswith("time "):
            _, k, v = line.split()
            out["times"][k] = float(v)
        elif line.startswith("Tmax "):
            out["Tmax"] = int(line.split()[1])
    return out
