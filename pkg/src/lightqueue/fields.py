"""Data containers shared by the spectral and direct solution paths.

Everything here is a plain holder around numpy arrays plus the CSV and
binary round-trips the command line tools rely on.  Numerics live in the
sibling modules.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

FLOAT_FMT = "%.17g"

GREEN_MAGIC = b"RGK1"


def uniform_spacing(grid: np.ndarray) -> float:
    """Spacing of a uniform grid; raises GridError if not uniform."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise GridError("grid must be 1-d with at least two samples")
    steps = np.diff(grid)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12):
        raise GridError("grid is not uniformly spaced")
    return float(h)


def _fmt_row(values) -> str:
    return ",".join(FLOAT_FMT % v for v in values)


@dataclass(frozen=True)
class SampledFunction:
    """Function given by samples on a grid, constant-extrapolated outside.

    An empty sample set stands for the zero function, which is how absent
    boundary forcing is encoded.
    """

    grid: np.ndarray = field(default_factory=lambda: np.empty(0))
    values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.grid.shape != self.values.shape:
            raise GridError("sample grid and values differ in shape")

    @property
    def is_zero(self) -> bool:
        return self.grid.size == 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        # np.interp clamps to the edge values, which is the documented
        # constant extrapolation
        return np.interp(x, self.grid, self.values)


def zero_function() -> SampledFunction:
    return SampledFunction()


@dataclass(frozen=True)
class BoundaryConditions:
    """Initial profiles and inflow-edge series for the two components.

    ``w1``/``w2`` are the values injected at the inflow edge over time.
    Leaving any entry as the empty SampledFunction means zero data there.
    Spectral kernels handle the pure initial-value problem, so only the
    direct integrator reads the inflow series.
    """

    f1: SampledFunction = field(default_factory=zero_function)
    f2: SampledFunction = field(default_factory=zero_function)
    w1: SampledFunction = field(default_factory=zero_function)
    w2: SampledFunction = field(default_factory=zero_function)


@dataclass(frozen=True)
class SignalWaveform:
    """Two-component signal sampled over position."""

    x: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "phi1", np.asarray(self.phi1, dtype=float))
        object.__setattr__(self, "phi2", np.asarray(self.phi2, dtype=float))
        if self.phi1.shape != self.x.shape or self.phi2.shape != self.x.shape:
            raise GridError("waveform components must match the grid shape")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,phi1,phi2\n")
        for xi, a, b in zip(self.x, self.phi1, self.phi2):
            buf.write(_fmt_row((xi, a, b)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SignalWaveform":
        rows = _read_csv_rows(text, expected=("x", "phi1", "phi2"))
        return cls(x=rows[:, 0], phi1=rows[:, 1], phi2=rows[:, 2])


@dataclass(frozen=True)
class SpaceTimeField:
    """Two-component field p(t, x) produced by the direct integrator.

    ``kind`` records how the samples are meant to be read: "cumulative"
    for distribution-function data (queueing mode) or "density" for
    signed pulse data.  The tag is descriptive; monotonicity is only
    asserted where the cumulative reading applies.
    """

    x: np.ndarray
    t: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    kind: str = "density"

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float))
        object.__setattr__(self, "p2", np.asarray(self.p2, dtype=float))
        nt, nx = self.t.size, self.x.size
        if self.p1.shape != (nt, nx) or self.p2.shape != (nt, nx):
            raise GridError("field arrays must have shape (nt, nx)")
        if self.kind not in ("cumulative", "density"):
            raise ValueError("kind must be 'cumulative' or 'density'")

    def time_index(self, t: float, tol: float | None = None) -> int:
        i = int(np.argmin(np.abs(self.t - t)))
        if tol is None:
            tol = 1e-9 * max(1.0, abs(t))
        if abs(self.t[i] - t) > tol:
            raise GridError(f"time {t} not on the stored snapshot grid")
        return i

    def monotone_in_x(self, atol: float = 1e-10) -> bool:
        """Non-decreasing in x, the cumulative-mode sanity check."""
        return bool(np.all(np.diff(self.p1, axis=1) >= -atol))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,p1,p2\n")
        for j, tj in enumerate(self.t):
            for i, xi in enumerate(self.x):
                buf.write(_fmt_row((tj, xi, self.p1[j, i], self.p2[j, i])) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "density") -> "SpaceTimeField":
        rows = _read_csv_rows(text, expected=("t", "x", "p1", "p2"))
        t = np.unique(rows[:, 0])
        x = np.unique(rows[:, 1])
        nt, nx = t.size, x.size
        if rows.shape[0] != nt * nx:
            raise GridError("field CSV is not a full t-x product grid")
        p1 = rows[:, 2].reshape(nt, nx)
        p2 = rows[:, 3].reshape(nt, nx)
        return cls(x=x, t=t, p1=p1, p2=p2, kind=kind)


@dataclass(frozen=True)
class GreenKernel:
    """Impulse-response kernel of the coupled line on an (x, t) grid.

    ``k`` has shape (nt, nx, 2, 2) ordered K11, K12 / K21, K22 and
    ``converged`` flags whether the per-node quadrature refinement check
    passed.
    """

    x: np.ndarray
    t: np.ndarray
    k: np.ndarray
    converged: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float))
        object.__setattr__(self, "converged", np.asarray(self.converged, dtype=bool))
        nt, nx = self.t.size, self.x.size
        if self.k.shape != (nt, nx, 2, 2):
            raise GridError("kernel array must have shape (nt, nx, 2, 2)")
        if self.converged.shape != (nt, nx):
            raise GridError("convergence flags must have shape (nt, nx)")

    def component(self, i: int, j: int) -> np.ndarray:
        if i not in (1, 2) or j not in (1, 2):
            raise ValueError("component indices are 1 or 2")
        return self.k[:, :, i - 1, j - 1]

    def time_index(self, t: float, tol: float | None = None) -> int:
        i = int(np.argmin(np.abs(self.t - t)))
        if tol is None:
            tol = 1e-9 * max(1.0, abs(t))
        if abs(self.t[i] - t) > tol:
            raise GridError(f"time {t} not on the kernel grid")
        return i

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,t,K11,K12,K21,K22,converged\n")
        for j, tj in enumerate(self.t):
            for i, xi in enumerate(self.x):
                kij = self.k[j, i]
                buf.write(
                    _fmt_row((xi, tj, kij[0, 0], kij[0, 1], kij[1, 0], kij[1, 1]))
                    + ",%d\n" % int(self.converged[j, i])
                )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GreenKernel":
        rows = _read_csv_rows(
            text, expected=("x", "t", "K11", "K12", "K21", "K22", "converged")
        )
        x = np.unique(rows[:, 0])
        t = np.unique(rows[:, 1])
        nt, nx = t.size, x.size
        if rows.shape[0] != nt * nx:
            raise GridError("kernel CSV is not a full x-t product grid")
        k = rows[:, 2:6].reshape(nt, nx, 2, 2)
        return cls(x=x, t=t, k=k, converged=rows[:, 6].reshape(nt, nx) != 0.0)

    def to_binary(self) -> bytes:
        """Compact dump: magic RGK1, uint64 nx/nt, then little-endian
        float64 payload (x, t, K row-major, convergence flags)."""
        nt, nx = self.t.size, self.x.size
        out = bytearray()
        out += GREEN_MAGIC
        out += np.asarray([nx, nt], dtype="<u8").tobytes()
        out += self.x.astype("<f8").tobytes()
        out += self.t.astype("<f8").tobytes()
        out += self.k.astype("<f8").tobytes()  # row-major (t, x, 2, 2)
        out += self.converged.astype("<f8").tobytes()
        return bytes(out)

    @classmethod
    def from_binary(cls, blob: bytes) -> "GreenKernel":
        if blob[:4] != GREEN_MAGIC:
            raise GridError("not a kernel dump: bad magic bytes")
        nx, nt = np.frombuffer(blob, dtype="<u8", count=2, offset=4)
        nx, nt = int(nx), int(nt)
        off = 4 + 16
        x = np.frombuffer(blob, dtype="<f8", count=nx, offset=off).copy()
        off += 8 * nx
        t = np.frombuffer(blob, dtype="<f8", count=nt, offset=off).copy()
        off += 8 * nt
        k = np.frombuffer(blob, dtype="<f8", count=nt * nx * 4, offset=off).copy()
        off += 8 * nt * nx * 4
        flags = np.frombuffer(blob, dtype="<f8", count=nt * nx, offset=off).copy()
        return cls(
            x=x,
            t=t,
            k=k.reshape(nt, nx, 2, 2),
            converged=flags.reshape(nt, nx) != 0.0,
        )


def _read_csv_rows(text: str, expected: tuple[str, ...]) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise GridError("empty CSV")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != expected:
        raise GridError(f"bad CSV header {header!r}, expected {expected!r}")
    data = np.array(
        [[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float
    )
    if data.ndim != 2 or data.shape[1] != len(expected):
        raise GridError("ragged CSV body")
    return data
