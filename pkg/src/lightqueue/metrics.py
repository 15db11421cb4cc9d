"""Fidelity analyses over sampled impulse-response kernels.

Three views of how the line degrades a signal: slices of the kernel
along rays parallel to the front (cone_slice), the squared-kernel
integral as a function of the ray delay (autocorrelation), and a
Kullback-Leibler distance between a delayed slice and the zero-delay
reference (kl_distance).

The KL integrand is only defined for positive densities, while kernel
slices are signed and unnormalized, so two series are produced: the
mathematically well-posed one clips both slices at zero, restricts to
their common positive support, and normalizes each to unit mass there
(non-negative by the Gibbs inequality, exactly zero at zero delay); the
raw one applies the integral to the clipped but unnormalized slices and
may legitimately dip negative.  Both use the same trapezoid weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, GridError
from .fields import FLOAT_FMT, GreenKernel, SignalWaveform, _read_csv_rows, uniform_spacing

_KINDS = ("autocorrelation", "kl")


@dataclass(frozen=True)
class MetricSeries:
    """A delay-indexed metric with its normalization audit trail.

    ``values`` is the headline series.  For the KL metric the signed
    unnormalized variant and the clipped slice masses are kept alongside
    (mass_ref is the reference-slice mass repeated for convenience).
    """

    tau: np.ndarray
    values: np.ndarray
    kind: str
    values_raw: np.ndarray | None = None
    mass_ref: float | None = None
    mass_slice: np.ndarray | None = None
    clip_floor: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise GridError(f"metric kind must be one of {_KINDS}")
        if self.tau.shape != self.values.shape:
            raise GridError("tau and values must share one shape")
        if not np.all(np.isfinite(self.values)):
            raise GridError("metric values must be finite")
        if self.kind == "autocorrelation" and np.any(self.values < 0):
            raise GridError("autocorrelation values cannot be negative")

    def to_csv(self) -> str:
        if self.kind == "autocorrelation":
            lines = ["tau,value"]
            for ti, vi in zip(self.tau, self.values):
                lines.append(FLOAT_FMT % ti + "," + FLOAT_FMT % vi)
        else:
            lines = ["tau,value,value_raw,mass_ref,mass_slice"]
            for ti, vi, ri, mi in zip(
                self.tau, self.values, self.values_raw, self.mass_slice
            ):
                lines.append(
                    ",".join(FLOAT_FMT % u for u in (ti, vi, ri, self.mass_ref, mi))
                )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "MetricSeries":
        header = text.split("\n", 1)[0].strip()
        if header == "tau,value":
            rows = _read_csv_rows(text, ("tau", "value"))
            tau, val = (np.array(c) for c in zip(*rows))
            return cls(tau=tau, values=val, kind="autocorrelation")
        rows = _read_csv_rows(
            text, ("tau", "value", "value_raw", "mass_ref", "mass_slice")
        )
        tau, val, raw, mref, mslice = (np.array(c) for c in zip(*rows))
        return cls(
            tau=tau,
            values=val,
            kind="kl",
            values_raw=raw,
            mass_ref=float(mref[0]) if mref.size else 0.0,
            mass_slice=mslice,
        )


def _component_index(component) -> tuple[int, int]:
    i, j = component
    if i not in (1, 2) or j not in (1, 2):
        raise GridError("component indices are 1-based: (1,1), (1,2), (2,1), (2,2)")
    return i - 1, j - 1


def cone_slice(
    kernel: GreenKernel,
    offset: float,
    speed: float,
    component=(1, 1),
    x_range: tuple[float, float] | None = None,
) -> SignalWaveform:
    """Kernel values along the ray t = x / speed - offset.

    The ray is sampled at the kernel's own x-columns with linear
    interpolation in t.  Points with t < 0 are causally zero; points
    beyond the stored t-range (or in a gap below the first stored
    sample) raise GridError.  The sampled component goes into the first
    waveform slot, the second is zero.
    """
    if not (speed > 0):
        raise GridError("slice speed must be positive")
    ci, cj = _component_index(component)
    x = kernel.x
    if x_range is not None:
        lo, hi = x_range
        keep = (x >= lo - 1e-12) & (x <= hi + 1e-12)
        if not np.any(keep):
            raise GridError("x_range does not intersect the kernel grid")
        x = x[keep]
        comp = kernel.k[:, keep, ci, cj]
    else:
        comp = kernel.k[:, :, ci, cj]

    t_line = x / speed - offset
    vals = np.zeros_like(x)
    live = t_line >= 0.0
    if np.any(live):
        t = kernel.t
        tl = t_line[live]
        if np.any(tl < t[0] - 1e-12) or np.any(tl > t[-1] + 1e-12):
            raise GridError(
                "slice ray leaves the kernel's stored time range "
                f"[{t[0]:g}, {t[-1]:g}]"
            )
        idx = np.clip(np.searchsorted(t, tl, side="right") - 1, 0, t.size - 2)
        dt = t[idx + 1] - t[idx]
        w = np.clip((tl - t[idx]) / dt, 0.0, 1.0)
        cols = np.nonzero(live)[0]
        vals[live] = (1.0 - w) * comp[idx, cols] + w * comp[idx + 1, cols]
    return SignalWaveform(x=x, phi1=vals, phi2=np.zeros_like(vals))


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    dx = uniform_spacing(x)
    w = np.full(x.size, dx)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def autocorrelation(
    kernel: GreenKernel,
    tau_grid: np.ndarray,
    speed: float,
    x_range: tuple[float, float] = (-10.0, 10.0),
    component=(1, 1),
) -> MetricSeries:
    """Integral of the squared kernel along each delayed ray."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    out = np.empty(tau_grid.size)
    for k, tau in enumerate(tau_grid):
        wave = cone_slice(kernel, tau, speed, component, x_range)
        out[k] = np.trapezoid(wave.phi1**2, wave.x)
    return MetricSeries(tau=tau_grid, values=out, kind="autocorrelation")


def kl_distance(
    kernel: GreenKernel,
    tau_grid: np.ndarray,
    speed: float,
    x_range: tuple[float, float] = (-10.0, 10.0),
    component=(1, 1),
    clip_floor: float = 0.0,
) -> MetricSeries:
    """Kullback-Leibler distance of each delayed slice from the tau = 0 one.

    Headline values use the clip-normalize pipeline described in the
    module docstring; values_raw applies the same integral to the
    unnormalized clipped slices.  Raises DegenerateDataError when the
    reference slice carries no positive mass.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    ref_wave = cone_slice(kernel, 0.0, speed, component, x_range)
    x = ref_wave.x
    w = _trapezoid_weights(x)
    q = np.maximum(ref_wave.phi1, clip_floor)
    q[q <= clip_floor] = 0.0
    mass_ref = float((w * q).sum())
    if mass_ref <= 0.0:
        raise DegenerateDataError("reference slice has no mass after clipping")

    values = np.empty(tau_grid.size)
    raw = np.empty(tau_grid.size)
    masses = np.empty(tau_grid.size)
    for k, tau in enumerate(tau_grid):
        p = np.maximum(cone_slice(kernel, tau, speed, component, x_range).phi1,
                       clip_floor)
        p[p <= clip_floor] = 0.0
        masses[k] = float((w * p).sum())
        common = (p > 0.0) & (q > 0.0)
        if not np.any(common):
            values[k] = 0.0
            raw[k] = 0.0
            continue
        wc, pc, qc = w[common], p[common], q[common]
        mp, mq = (wc * pc).sum(), (wc * qc).sum()
        if mp <= 0.0 or mq <= 0.0:
            values[k] = 0.0
            raw[k] = 0.0
            continue
        ph, qh = pc / mp, qc / mq
        values[k] = float((wc * ph * np.log(ph / qh)).sum())
        raw[k] = float((wc * pc * np.log(pc / qc)).sum())

    return MetricSeries(
        tau=tau_grid,
        values=values,
        kind="kl",
        values_raw=raw,
        mass_ref=mass_ref,
        mass_slice=masses,
        clip_floor=clip_floor,
    )
