"""Input parameters: parsing, validation, unit conversion and grid geometry.

Input files are flat ``key=value`` lines; ``#`` starts a comment line.
Frequencies and rates are given in units of 1/Delta, lengths in units of
Delta, with c = hbar = 1.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, fields
from decimal import Decimal, InvalidOperation
from typing import Mapping

BYTES_PER_CELL = 16
MAX_ADDRESSABLE_BYTES = 2**63 - 1


class InitCond(enum.IntEnum):
    PLANE_WAVE = 1
    STIMULATED_EMISSION = 2
    TWO_WAVEPACKETS = 3


# ---------------------------------------------------------------------------
# errors


class InputError(ValueError):
    """Base class for everything wrong with an input file."""


class ParseError(InputError):
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


class UnknownKeyError(ParseError):
    pass


class DuplicateKeyError(ParseError):
    pass


class MissingKeyError(InputError):
    def __init__(self, keys):
        self.keys = tuple(keys)
        super().__init__("missing mandatory keys: " + ", ".join(self.keys))


class ValidationError(InputError):
    pass


class InvalidValueError(ValidationError):
    pass


class OddNxError(ValidationError):
    pass


class NxTooLargeError(ValidationError):
    pass


class NoOutputError(ValidationError):
    pass


class NMRequiresStimulatedEmissionError(ValidationError):
    pass


class MissingWidthError(ValidationError):
    pass


class MissingPhotonParametersError(ValidationError):
    pass


# ---------------------------------------------------------------------------
# raw input

INT_KEYS = ("Nx", "Ny", "nx", "init_cond", "Tstep", "Nth")
FLOAT_KEYS = ("Delta", "k", "k1", "k2", "w0", "gamma", "alpha", "alpha1", "alpha2")
BOOL_KEYS = (
    "identical_photons",
    "save_chi",
    "save_psi",
    "save_psi_binary",
    "save_psi_square_integral",
    "measure_NM",
)
KNOWN_KEYS = INT_KEYS + FLOAT_KEYS + BOOL_KEYS

# always required; ``k`` is required unless two distinct photons are sent in
MANDATORY_KEYS = ("Nx", "Ny", "nx", "Delta", "w0", "gamma", "init_cond")

DEFAULTS = {
    "k": 0.0,
    "k1": 0.0,
    "k2": 0.0,
    "alpha": 0.0,
    "alpha1": 0.0,
    "alpha2": 0.0,
    "identical_photons": True,
    "save_chi": False,
    "save_psi": False,
    "save_psi_binary": False,
    "save_psi_square_integral": False,
    "measure_NM": False,
    "Tstep": 0,
    "Nth": 1,
}


@dataclass(frozen=True)
class RawInput:
    """Recognized ``key -> text`` pairs, with the line each came from."""

    values: Mapping[str, str]
    lines: Mapping[str, int]

    def __len__(self):
        return len(self.values)

    def __contains__(self, key):
        return key in self.values

    def missing_mandatory(self):
        return [k for k in MANDATORY_KEYS if k not in self.values]

    def optional_keys(self):
        return [k for k in self.values if k not in MANDATORY_KEYS]


def parse_input(text) -> RawInput:
    """Parse ``key=value`` lines from a string or an iterable of lines."""
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = list(text)
    values: dict[str, str] = {}
    where: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ParseError(f"expected key=value, got {s!r}", lineno)
        key, _, value = s.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ParseError(f"expected key=value, got {s!r}", lineno)
        if key not in KNOWN_KEYS:
            raise UnknownKeyError(f"unknown key {key!r}", lineno)
        if key in values:
            raise DuplicateKeyError(
                f"duplicate key {key!r} (first given on line {where[key]})", lineno
            )
        values[key] = value
        where[key] = lineno
    raw = RawInput(values, where)
    missing = raw.missing_mandatory()
    if missing:
        raise MissingKeyError(missing)
    return raw


def _to_int(key, text, lineno=None):
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise ParseError(f"{key}: {text!r} is not a number", lineno) from None
    if not d.is_finite() or d != d.to_integral_value():
        raise ParseError(f"{key}: {text!r} is not an integer", lineno)
    return int(d)


def _to_float(key, text, lineno=None):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{key}: {text!r} is not a number", lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"{key}: {text!r} is not finite", lineno)
    return v


def _to_bool(key, text, lineno=None):
    v = _to_int(key, text, lineno)
    if v not in (0, 1):
        raise ParseError(f"{key}: flags take 0 or 1, got {text!r}", lineno)
    return bool(v)


# ---------------------------------------------------------------------------
# validated parameters


@dataclass(frozen=True)
class SimParams:
    Nx: int
    Ny: int
    nx: int
    Delta: float
    k: float
    k1: float
    k2: float
    w0: float
    gamma: float
    init_cond: InitCond
    alpha: float
    alpha1: float
    alpha2: float
    identical_photons: bool
    save_chi: bool
    save_psi: bool
    save_psi_binary: bool
    save_psi_square_integral: bool
    measure_NM: bool
    Tstep: int
    Nth: int

    @property
    def a(self) -> float:
        return self.nx // 2 * self.Delta

    @property
    def total_cols(self) -> int:
        return 2 * self.Nx + self.nx + 1

    @property
    def center_col(self) -> int:
        """Column of x = -a."""
        return self.Nx + self.nx // 2

    @property
    def plus_a_col(self) -> int:
        return self.center_col + self.nx

    @property
    def Tmax(self) -> int:
        return tmax(self.Nx, self.Ny, self.nx)

    def x_of_col(self, j):
        return (j - self.Nx - self.nx) * self.Delta

    def t_of_row(self, i):
        return i * self.Delta

    def replace(self, **changes) -> "SimParams":
        d = asdict(self)
        d.update(changes)
        return validate_values(d)

    def header_lines(self):
        out = [f"{f.name}={_fmt(getattr(self, f.name))}" for f in fields(self)]
        out += [
            f"a={self.a!r}",
            f"total_cols={self.total_cols}",
            f"Tmax={self.Tmax}",
            "theta(0)=1",
        ]
        return out


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, enum.IntEnum):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def tmax(Nx: int, Ny: int, nx: int) -> int:
    """Last row whose spatial integrals still see the whole outgoing light cone."""
    return min(Ny - 1, Nx - nx // 2)


def validate(raw: RawInput) -> SimParams:
    """Convert and check a parsed input; defaults are filled in here."""
    missing = raw.missing_mandatory()
    if missing:
        raise MissingKeyError(missing)
    vals: dict[str, object] = {}
    for key, text in raw.values.items():
        ln = raw.lines.get(key)
        if key in INT_KEYS:
            vals[key] = _to_int(key, text, ln)
        elif key in FLOAT_KEYS:
            vals[key] = _to_float(key, text, ln)
        else:
            vals[key] = _to_bool(key, text, ln)
    init = vals["init_cond"]
    distinct = init == InitCond.TWO_WAVEPACKETS and not vals.get("identical_photons", True)
    if not distinct and "k" not in vals:
        raise MissingKeyError(["k"])
    if distinct:
        absent = [k for k in ("k1", "k2", "alpha1", "alpha2") if k not in vals]
        if absent:
            raise MissingPhotonParametersError(
                "init_cond=3 with identical_photons=0 needs " + ", ".join(absent)
            )
    return validate_values(vals)


def validate_values(vals: Mapping[str, object]) -> SimParams:
    d = dict(DEFAULTS)
    d.update(vals)

    for key in ("Nx", "Ny", "nx", "Nth"):
        if d[key] < 1:
            raise InvalidValueError(f"{key} must be a positive integer, got {d[key]}")
    if d["Tstep"] < 0:
        raise InvalidValueError(f"Tstep must be nonnegative, got {d['Tstep']}")
    if d["Delta"] <= 0:
        raise InvalidValueError(f"Delta must be positive, got {d['Delta']}")
    if d["gamma"] <= 0:
        raise InvalidValueError(f"gamma must be positive, got {d['gamma']}")
    for key in ("alpha", "alpha1", "alpha2"):
        if d[key] < 0:
            raise InvalidValueError(f"{key} must be nonnegative, got {d[key]}")
    if d["nx"] % 2:
        raise OddNxError(f"nx must be an integer multiple of 2, got {d['nx']}")
    if d["nx"] > 2 * d["Nx"]:
        raise NxTooLargeError(f"nx={d['nx']} exceeds 2*Nx={2 * d['Nx']}")
    try:
        init = InitCond(d["init_cond"])
    except ValueError:
        raise InvalidValueError(f"init_cond must be 1, 2 or 3, got {d['init_cond']}") from None
    d["init_cond"] = init

    if not any(d[k] for k in ("save_chi", "save_psi", "save_psi_binary",
                              "save_psi_square_integral", "measure_NM")):
        raise NoOutputError("all output flags are off; no output would be generated")
    if d["measure_NM"] and init != InitCond.STIMULATED_EMISSION:
        raise NMRequiresStimulatedEmissionError("measure_NM requires init_cond=2")
    if init == InitCond.STIMULATED_EMISSION and d["alpha"] <= 0:
        raise MissingWidthError("init_cond=2 requires alpha > 0")
    if init == InitCond.TWO_WAVEPACKETS:
        if d["identical_photons"]:
            if d["alpha"] <= 0:
                raise MissingWidthError("init_cond=3 with identical photons requires alpha > 0")
            d["k1"] = d["k2"] = d["k"]
            d["alpha1"] = d["alpha2"] = d["alpha"]
        elif d["alpha1"] <= 0 or d["alpha2"] <= 0:
            raise MissingWidthError("init_cond=3 requires alpha1 > 0 and alpha2 > 0")

    kw = {f.name: d[f.name] for f in fields(SimParams)}
    for key in INT_KEYS:
        kw[key] = int(kw[key]) if key != "init_cond" else kw[key]
    for key in FLOAT_KEYS:
        kw[key] = float(kw[key])
    for key in BOOL_KEYS:
        kw[key] = bool(kw[key])
    return SimParams(**kw)


def load(path) -> SimParams:
    with open(path, encoding="utf-8") as fh:
        return validate(parse_input(fh.read()))


# ---------------------------------------------------------------------------
# physical units


@dataclass(frozen=True)
class PhysicalSpec:
    """Dimensionless physics (K = k/gamma, W = w0/gamma, n = k0 a / pi) plus grid."""

    K: float
    W: float
    n: float
    nx: int
    Delta: float


@dataclass(frozen=True)
class Converted:
    k: float
    w0: float
    gamma: float
    lambda0: float


def convert_physical(spec: PhysicalSpec) -> Converted:
    if spec.nx == 0 or spec.W == 0:
        raise ZeroDivisionError("nx and W must be nonzero")
    if spec.n == 0:
        raise ZeroDivisionError("n must be nonzero (the wavelength is nx/n steps)")
    if spec.Delta <= 0:
        raise ValueError("Delta must be positive")
    if spec.W < 10:
        warnings.warn(
            f"W = w0/gamma = {spec.W} is not much larger than 1; "
            "the rotating-wave approximation may not hold",
            stacklevel=2,
        )
    base = 2 * spec.n * math.pi / (spec.nx * spec.Delta)
    return Converted(
        k=base * spec.K / spec.W,
        w0=base,
        gamma=base / spec.W,
        lambda0=spec.nx / spec.n * spec.Delta,
    )


# ---------------------------------------------------------------------------
# memory


def memory_estimate(p: SimParams) -> int:
    """Bytes needed for the full complex128 spacetime grid."""
    nbytes = BYTES_PER_CELL * p.Ny * p.total_cols
    if nbytes > MAX_ADDRESSABLE_BYTES:
        raise OverflowError(f"grid needs {nbytes} bytes, beyond any addressable allocation")
    return nbytes
