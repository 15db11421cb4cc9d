"""Model parameters, node-response kernels, and the transform-domain symbol.

The transmission line carries a two-component signal (buy and sell sides)
that drifts toward the observer at fixed speed while interacting nodes
re-emit it through one-sided exponential response kernels.  This module
holds the parameter objects and the algebra of the double-transform
symbol; the heavy numerics live in laplace.py and takacs.py.

Transform-domain conventions: ``s`` is conjugate to position measured in
units where the drift speed is one, ``tau`` is conjugate to time.  The
engine in laplace.py handles the physical drift speed by an exact
rescaling, so everything here is speed-free.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PoleError
from .fields import SpaceTimeField

_POLE_RTOL = 1e-12

_WHICH = ("same", "cross")
_BRANCHES = ("plus", "minus")


@dataclass(frozen=True)
class ModelParams:
    """Arrival rate ``a``, drift speed ``v``, limiting speed ``c``.

    Nondimensional runs measure time in 1/a and distance in c/a, so the
    flag simply pins a = c = 1.
    """

    a: float = 1.0
    v: float = 0.75
    c: float = 1.0
    nondimensional: bool = True

    def __post_init__(self):
        if not (self.a >= 0):
            raise ConfigError("arrival rate a must be nonnegative")
        if not (0 < self.v <= self.c):
            raise ConfigError("drift speed must satisfy 0 < v <= c")
        if self.nondimensional and not (self.a == 1.0 and self.c == 1.0):
            raise ConfigError("nondimensional mode requires a = 1 and c = 1")


@dataclass(frozen=True)
class KernelSpec:
    """One-sided exponential node-response kernels.

    Same-component and cross-component responses share the decay rate
    ``lam`` and differ only in amplitude: B_same(x) = beta1 * exp(-lam x),
    B_cross(x) = beta2 * exp(-lam x) for x >= 0.  Amplitudes are plain
    numbers; each kernel mass beta/lam must not exceed one.  The symmetric
    reduction (equal diagonal amplitudes, equal off-diagonal amplitudes)
    is enforced structurally by this type.
    """

    lam: float = 1.5
    beta1: float = 0.6
    beta2: float = 0.3

    def __post_init__(self):
        if not (self.lam > 0):
            raise ConfigError("kernel decay rate lam must be positive")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ConfigError("kernel amplitudes must be nonnegative")
        if self.beta1 / self.lam > 1 + 1e-12:
            raise ConfigError("same-component kernel mass beta1/lam exceeds one")
        if self.beta2 / self.lam > 1 + 1e-12:
            raise ConfigError("cross-component kernel mass beta2/lam exceeds one")
        if (self.beta1 + self.beta2) / self.lam > 1 + 1e-12:
            warnings.warn(
                "combined kernel mass (beta1+beta2)/lam exceeds one; "
                "the line is locally super-stochastic",
                RuntimeWarning,
                stacklevel=2,
            )

    def amplitude(self, which: str) -> float:
        if which not in _WHICH:
            raise ValueError(f"which must be one of {_WHICH}")
        return self.beta1 if which == "same" else self.beta2

    def branch_amplitude(self, branch: str) -> float:
        """Effective scalar amplitude of the sum/difference channel."""
        if branch not in _BRANCHES:
            raise ValueError(f"branch must be one of {_BRANCHES}")
        return self.beta1 + self.beta2 if branch == "plus" else self.beta1 - self.beta2


def kernel_b(x, which: str, spec: KernelSpec):
    """Node response kernel B(x) = beta * exp(-lam x), zero for x < 0."""
    beta = spec.amplitude(which)
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, beta * np.exp(-spec.lam * np.where(x >= 0, x, 0.0)), 0.0)
    return out if out.ndim else float(out)


def kernel_beta(s, which: str, spec: KernelSpec):
    """Transform image of the node response: beta / (s + lam).

    Simple pole at s = -lam; evaluation within relative distance 1e-12 of
    the pole raises PoleError.
    """
    beta = spec.amplitude(which)
    s = np.asarray(s)
    denom = s + spec.lam
    if np.any(np.abs(denom) <= _POLE_RTOL * (1.0 + abs(spec.lam))):
        raise PoleError("kernel transform evaluated at its pole s = -lam")
    out = beta / denom
    return out if out.ndim else complex(out) if np.iscomplexobj(out) else float(out)


def clearing_tau(s, branch: str, params: ModelParams, spec: KernelSpec):
    """Clearing curve tau(s) = s - a * (1 - (beta1 +/- beta2)/(s + lam)).

    Zero locus of one factor of the characteristic symbol; the plus
    branch carries beta1 + beta2.
    """
    beta_eff = spec.branch_amplitude(branch)
    s = np.asarray(s)
    denom = s + spec.lam
    if np.any(np.abs(denom) <= _POLE_RTOL * (1.0 + abs(spec.lam))):
        raise PoleError("clearing curve evaluated at the kernel pole s = -lam")
    out = s - params.a * (1.0 - beta_eff / denom)
    return out if out.ndim else complex(out) if np.iscomplexobj(out) else float(out)


def characteristic_poly(s, tau, params: ModelParams, spec: KernelSpec):
    """Characteristic symbol of the coupled two-component balance.

    P(s, tau) = [s - tau - a(1 - b1(s) - b2(s))] * [s - tau - a(1 - b1(s) + b2(s))]
    with b1, b2 the transform images of the node kernels.  Equal to the
    determinant of the transform-domain system matrix; its zero set in
    tau is the pair of clearing curves.
    """
    s = np.asarray(s)
    tau = np.asarray(tau)
    b1 = kernel_beta(s, "same", spec)
    b2 = kernel_beta(s, "cross", spec)
    plus = s - tau - params.a * (1.0 - b1 - b2)
    minus = s - tau - params.a * (1.0 - b1 + b2)
    out = plus * minus
    return out if np.ndim(out) else complex(out) if np.iscomplexobj(out) else float(out)


def system_matrix(s, tau, params: ModelParams, spec: KernelSpec) -> np.ndarray:
    """Forward 2x2 transform-domain matrix acting on the component pair.

    Its determinant equals characteristic_poly(s, tau) and its
    eigenvectors are (1, 1) and (1, -1) for any symmetric KernelSpec.
    """
    b1 = kernel_beta(s, "same", spec)
    b2 = kernel_beta(s, "cross", spec)
    d = tau - s + params.a - params.a * b1
    off = -params.a * b2
    return np.array([[d, off], [off, d]])


@dataclass(frozen=True)
class ClearingCurve:
    """One sampled branch of the zero set of the characteristic symbol."""

    branch: str
    s: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        if self.branch not in _BRANCHES:
            raise ValueError(f"branch must be one of {_BRANCHES}")
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        if self.s.shape != self.tau.shape:
            raise ValueError("s and tau samples must align")


def clearing_curves(
    s_lo: float,
    s_hi: float,
    n: int,
    params: ModelParams,
    spec: KernelSpec,
    check_tol: float = 1e-10,
) -> tuple[ClearingCurve, ClearingCurve]:
    """Sample both clearing branches on a real s-range.

    The range must not contain the kernel pole at s = -lam.  Every sample
    is verified to annihilate the characteristic symbol to within
    ``check_tol``.
    """
    if not s_lo < s_hi:
        raise ConfigError("empty clearing-curve range")
    if s_lo <= -spec.lam <= s_hi:
        raise PoleError("clearing-curve range contains the kernel pole s = -lam")
    if n < 2:
        raise ConfigError("need at least two clearing-curve samples")
    s = np.linspace(s_lo, s_hi, n)
    curves = []
    for branch in _BRANCHES:
        tau = clearing_tau(s, branch, params, spec)
        resid = np.abs(characteristic_poly(s, tau, params, spec))
        if np.any(resid >= check_tol):
            raise ConfigError(
                "clearing-curve samples fail to annihilate the characteristic "
                f"symbol (max residual {resid.max():.3e})"
            )
        curves.append(ClearingCurve(branch=branch, s=s, tau=np.real(tau)))
    return curves[0], curves[1]


def clearing_to_csv(plus: ClearingCurve, minus: ClearingCurve) -> str:
    from .fields import FLOAT_FMT

    lines = ["branch,s,tau"]
    for curve in (plus, minus):
        for si, ti in zip(curve.s, curve.tau):
            lines.append(f"{curve.branch}," + FLOAT_FMT % si + "," + FLOAT_FMT % ti)
    return "\n".join(lines) + "\n"


def decouple(field: SpaceTimeField) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Rotate a two-component field into the sum/difference channels.

    The symmetric kernel matrix is diagonal in this basis, so each
    channel evolves as a scalar line with effective amplitude
    beta1 +/- beta2.  Returned fields carry the channel in p1 and zeros
    in p2.
    """
    zero = np.zeros_like(field.p1)
    qp = SpaceTimeField(
        x=field.x, t=field.t, p1=field.p1 + field.p2, p2=zero, kind=field.kind
    )
    qm = SpaceTimeField(
        x=field.x, t=field.t, p1=field.p1 - field.p2, p2=zero, kind=field.kind
    )
    return qp, qm


def recombine(qp: SpaceTimeField, qm: SpaceTimeField) -> SpaceTimeField:
    """Inverse of decouple: components from the sum/difference channels."""
    if qp.x.shape != qm.x.shape or not np.array_equal(qp.x, qm.x):
        raise ValueError("channel fields live on different x grids")
    if not np.array_equal(qp.t, qm.t):
        raise ValueError("channel fields live on different t grids")
    return SpaceTimeField(
        x=qp.x,
        t=qp.t,
        p1=0.5 * (qp.p1 + qm.p1),
        p2=0.5 * (qp.p1 - qm.p1),
        kind=qp.kind,
    )
